//! Power delay profiles and goodness-of-fit metrics for comparing a
//! measured profile with a simulated one.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic two-sample K-S coefficient for alpha = 0.05.
pub const KS_COEFF_5PCT: f64 = 1.358;

/// Uniformly sampled power delay profile. Bin `n` sits at delay `n·Δτ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdp {
    /// Linear power per bin.
    pub powers: Vec<f64>,
    /// Bin width Δτ, ns.
    pub delay_resolution: f64,
    /// Set when the peak has been scaled to 1.
    pub normalized: bool,
}

impl Pdp {
    pub fn new(powers: Vec<f64>, delay_resolution: f64) -> Result<Self> {
        let pdp = Pdp {
            powers,
            delay_resolution,
            normalized: false,
        };
        pdp.validate()?;
        Ok(pdp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delay_resolution.is_finite() && self.delay_resolution > 0.0) {
            return Err(Error::domain(format!(
                "delay resolution must be positive, got {}",
                self.delay_resolution
            )));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("PDP powers must be finite and non-negative"));
        }
        if !self.powers.iter().any(|&p| p > 0.0) {
            return Err(Error::domain("PDP has no positive sample"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn delay(&self, bin: usize) -> f64 {
        bin as f64 * self.delay_resolution
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|n| self.delay(n))
    }

    pub fn peak(&self) -> f64 {
        self.powers.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn powers_db(&self) -> Vec<f64> {
        self.powers.iter().map(|&p| 10.0 * p.log10()).collect()
    }
}

/// Scales the profile so its peak is 1 (0 dB).
pub fn normalize_pdp(pdp: &Pdp) -> Result<Pdp> {
    let peak = pdp.peak();
    if !(peak > 0.0) {
        return Err(Error::domain("cannot normalize an all-zero PDP"));
    }
    Ok(Pdp {
        powers: pdp.powers.iter().map(|p| p / peak).collect(),
        delay_resolution: pdp.delay_resolution,
        normalized: true,
    })
}

/// Power-weighted standard deviation of delay, ns.
pub fn rms_delay_spread(pdp: &Pdp) -> Result<f64> {
    rms_delay_spread_with_floor(pdp, None)
}

/// RMS delay spread ignoring bins more than `floor_db` below the peak.
pub fn rms_delay_spread_with_floor(pdp: &Pdp, floor_db: Option<f64>) -> Result<f64> {
    let peak = pdp.peak();
    if !(peak > 0.0) {
        return Err(Error::domain("RMS delay spread of an all-zero PDP"));
    }
    let threshold = floor_db.map_or(0.0, |db| peak * 10f64.powf(-db.abs() / 10.0));
    let kept = || {
        pdp.powers
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p > 0.0 && p >= threshold)
            .map(|(n, &p)| (pdp.delay(n), p))
    };
    if kept().nth(1).is_none() {
        return Ok(0.0);
    }
    let w: f64 = kept().map(|(_, p)| p).sum();
    let mean = kept().map(|(t, p)| p * t).sum::<f64>() / w;
    // Central second moment in two passes; the raw-moment form cancels badly.
    let var = kept().map(|(t, p)| p * (t - mean).powi(2)).sum::<f64>() / w;
    Ok(var.sqrt())
}

/// Normalized inner product of two equal-length profiles, in `[0, 1]`.
pub fn correlation(p: &Pdp, q: &Pdp) -> Result<f64> {
    correlation_of(&p.powers, &q.powers)
}

pub fn correlation_of(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::domain(format!(
            "correlation needs equal non-empty lengths, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    let n = p.len() as f64;
    let cross = p.iter().zip(q).map(|(a, b)| a.abs() * b.abs()).sum::<f64>() / n;
    let ep = p.iter().map(|a| a * a).sum::<f64>() / n;
    let eq = q.iter().map(|b| b * b).sum::<f64>() / n;
    if !(ep > 0.0 && eq > 0.0) {
        return Err(Error::domain("correlation with an all-zero PDP"));
    }
    Ok((cross / (ep * eq).sqrt()).abs().min(1.0))
}

/// Outcome of the two-sample Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject_at_5pct: bool,
}

/// Two-sample K-S statistic over the multisets of PDP sample magnitudes.
pub fn ks_statistic(p: &Pdp, q: &Pdp) -> Result<KsOutcome> {
    ks_statistic_of(&p.powers, &q.powers)
}

pub fn ks_statistic_of(p: &[f64], q: &[f64]) -> Result<KsOutcome> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::domain("K-S statistic needs two non-empty samples"));
    }
    if p.iter().chain(q).any(|v| v.is_nan()) {
        return Err(Error::domain("K-S statistic of NaN samples"));
    }
    let mut a: Vec<f64> = p.iter().map(|v| v.abs()).collect();
    let mut b: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());

    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        // Step past every copy of the smallest pending value in both samples
        // so ties never create a spurious gap.
        let v = match a[i].partial_cmp(&b[j]) {
            Some(Ordering::Greater) => b[j],
            _ => a[i],
        };
        while i < na && a[i] <= v {
            i += 1;
        }
        while j < nb && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let critical = ks_critical_value(na, nb);
    Ok(KsOutcome {
        statistic: d,
        critical_value: critical,
        reject_at_5pct: d > critical,
    })
}

/// Asymptotic two-sample critical value at alpha = 0.05.
pub fn ks_critical_value(n1: usize, n2: usize) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    KS_COEFF_5PCT * ((n1 + n2) / (n1 * n2)).sqrt()
}

/// Goodness-of-fit summary for a measured/simulated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub correlation: f64,
    pub ks_statistic: f64,
    pub ks_critical_value: f64,
    pub ks_reject_at_5pct: bool,
    pub rms_measured: f64,
    pub rms_simulated: f64,
}

/// Compares two profiles on the same grid, as given. Correlation and RMS
/// delay spread ignore scale; the K-S statistic does not, so normalize both
/// profiles first when their scales differ.
pub fn gof_report(measured: &Pdp, simulated: &Pdp, floor_db: Option<f64>) -> Result<GofReport> {
    let (m, s) = (measured, simulated);
    let rho = correlation(m, s)?;
    let ks = ks_statistic(m, s)?;
    Ok(GofReport {
        correlation: rho,
        ks_statistic: ks.statistic,
        ks_critical_value: ks.critical_value,
        ks_reject_at_5pct: ks.reject_at_5pct,
        rms_measured: rms_delay_spread_with_floor(m, floor_db)?,
        rms_simulated: rms_delay_spread_with_floor(s, floor_db)?,
    })
}
