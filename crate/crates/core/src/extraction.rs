//! Estimation of S-V parameters from a power delay profile.
//!
//! Pipeline per profile: pick the local maxima above the profile mean as
//! multipath components, split them into `N_c` clusters at the largest delay
//! gaps, fit dB-domain regression lines for the decay constants and take
//! reciprocal mean gaps for the arrival rates. Per-angle results are
//! averaged over an angular bin.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MisalignmentBin;
use crate::metrics::Pdp;
use crate::sv::{Scenario, SvParameterSet};

/// A multipath component: a PDP peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    /// ns
    pub delay: f64,
    /// linear power
    pub power: f64,
}

/// Peaks sorted by delay, optionally labelled with 1-based cluster indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MpcSet {
    pub peaks: Vec<Mpc>,
    pub labels: Option<Vec<usize>>,
}

impl MpcSet {
    pub fn unlabeled(peaks: Vec<Mpc>) -> Self {
        MpcSet { peaks, labels: None }
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Peaks grouped by label; the whole set is one cluster when unlabelled.
    pub fn clusters(&self) -> Vec<Vec<Mpc>> {
        let Some(labels) = &self.labels else {
            return vec![self.peaks.clone()];
        };
        let n = labels.iter().copied().max().unwrap_or(0);
        let mut out = vec![Vec::new(); n];
        for (peak, &l) in self.peaks.iter().zip(labels) {
            out[l - 1].push(*peak);
        }
        out
    }
}

/// Local maxima of the profile whose power exceeds the mean bin power.
///
/// A bin qualifies when it is strictly above both neighbours; a plateau of
/// equal bins qualifies as a whole and is reported at its first bin. The
/// profile ends count as lower neighbours.
pub fn detect_mpcs(pdp: &Pdp) -> Result<MpcSet> {
    let p = &pdp.powers;
    if p.is_empty() {
        return Err(Error::domain("empty PDP"));
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < p.len() {
        let mut end = i;
        while end + 1 < p.len() && p[end + 1] == p[i] {
            end += 1;
        }
        let rises = i == 0 || p[i - 1] < p[i];
        let falls = end + 1 == p.len() || p[end + 1] < p[i];
        if rises && falls && p[i] > mean {
            peaks.push(Mpc {
                delay: pdp.delay(i),
                power: p[i],
            });
        }
        i = end + 1;
    }
    if peaks.is_empty() {
        return Err(Error::InsufficientData(
            "no peak above the PDP mean".to_string(),
        ));
    }
    Ok(MpcSet::unlabeled(peaks))
}

/// Splits the peaks into `n_clusters` contiguous groups at the
/// `n_clusters - 1` largest delay gaps (earlier gap wins a tie).
pub fn segment_clusters(mpcs: &MpcSet, n_clusters: usize) -> Result<MpcSet> {
    if n_clusters == 0 {
        return Err(Error::domain("cluster count must be positive"));
    }
    if mpcs.len() < n_clusters {
        return Err(Error::InsufficientData(format!(
            "{} peaks cannot form {n_clusters} clusters",
            mpcs.len()
        )));
    }
    let mut order: Vec<usize> = (0..mpcs.len() - 1).collect();
    let gap = |i: usize| mpcs.peaks[i + 1].delay - mpcs.peaks[i].delay;
    // stable sort keeps earlier gaps ahead among equals
    order.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)));
    let mut cuts: Vec<usize> = order.into_iter().take(n_clusters - 1).collect();
    cuts.sort_unstable();

    let mut labels = Vec::with_capacity(mpcs.len());
    let mut label = 1;
    let mut next_cut = cuts.iter().peekable();
    for i in 0..mpcs.len() {
        labels.push(label);
        if next_cut.peek() == Some(&&i) {
            next_cut.next();
            label += 1;
        }
    }
    Ok(MpcSet {
        peaks: mpcs.peaks.clone(),
        labels: Some(labels),
    })
}

/// Decay constant from a dB-domain least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay constant, ns.
    pub decay: f64,
    /// Slope, dB/ns.
    pub slope_db_per_ns: f64,
    /// RMS residual of the line, dB.
    pub residual_rms_db: f64,
    pub points: usize,
}

/// Least-squares line through `(delay, 10·log10(power))`; a slope `s`
/// maps to the decay constant `-10 / (s·ln 10)`.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(_, p)| !(p > 0.0)) {
        return Err(Error::domain("decay fit needs positive powers"));
    }
    let n = points.len() as f64;
    let x0 = points[0].0;
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(t, p)| (t - x0, 10.0 * p.log10()))
        .collect();
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|v| (v.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidFit("all points share one delay".to_string()));
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::InvalidFit(format!(
            "regression slope {slope} dB/ns does not decay"
        )));
    }
    let intercept = my - slope * mx;
    let residual = (xy
        .iter()
        .map(|v| (v.1 - intercept - slope * v.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        decay: -10.0 / (slope * LN_10),
        slope_db_per_ns: slope,
        residual_rms_db: residual,
        points: points.len(),
    })
}

/// Intra-cluster decay γ from the peaks of one cluster. Delays are taken
/// relative to the cluster's leading peak.
pub fn fit_ray_decay(cluster: &[Mpc]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = cluster.iter().map(|m| (m.delay, m.power)).collect();
    fit_decay(&pts)
}

/// Inter-cluster decay Γ from the leading peak of each cluster.
pub fn fit_cluster_decay(leads: &[Mpc]) -> Result<DecayFit> {
    if leads.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "cluster decay needs 2 clusters, got {}",
            leads.len()
        )));
    }
    fit_ray_decay(leads)
}

/// Reciprocal of the mean consecutive gap.
fn rate_from_delays(delays: &[f64]) -> Option<f64> {
    if delays.len() < 2 {
        return None;
    }
    let mean_gap = (delays[delays.len() - 1] - delays[0]) / (delays.len() - 1) as f64;
    (mean_gap > 0.0).then(|| 1.0 / mean_gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRates {
    /// λ per cluster, 1/ns; `None` for clusters with fewer than 2 peaks.
    pub ray_rates: Vec<Option<f64>>,
    /// Λ, 1/ns; `None` with fewer than 2 clusters.
    pub cluster_rate: Option<f64>,
}

/// Arrival rates from a labelled peak set.
pub fn estimate_arrival_rates(mpcs: &MpcSet) -> Result<ArrivalRates> {
    if mpcs.labels.is_none() {
        return Err(Error::domain("arrival rates need labelled clusters"));
    }
    let clusters = mpcs.clusters();
    let ray_rates = clusters
        .iter()
        .map(|c| rate_from_delays(&c.iter().map(|m| m.delay).collect::<Vec<_>>()))
        .collect();
    let leads: Vec<f64> = clusters.iter().filter_map(|c| c.first()).map(|m| m.delay).collect();
    Ok(ArrivalRates {
        ray_rates,
        cluster_rate: rate_from_delays(&leads),
    })
}

/// An estimated quantity, or why it could not be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Value(f64),
    InsufficientData,
    InvalidFit,
}

impl Estimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Estimate::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn from_fit(fit: &Result<DecayFit>) -> Self {
        match fit {
            Ok(f) => Estimate::Value(f.decay),
            Err(Error::InvalidFit(_)) => Estimate::InvalidFit,
            Err(_) => Estimate::InsufficientData,
        }
    }

    fn from_option(v: Option<f64>) -> Self {
        v.map_or(Estimate::InsufficientData, Estimate::Value)
    }

    /// Mean of the available values.
    fn mean<'a>(items: impl IntoIterator<Item = &'a Estimate>) -> Estimate {
        let (sum, n) = items
            .into_iter()
            .filter_map(Estimate::value)
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            Estimate::InsufficientData
        } else {
            Estimate::Value(sum / n as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Profiles contributing to this result.
    pub sample_count: usize,
    /// Peaks per cluster, summed over the contributing profiles.
    pub peak_counts: Vec<usize>,
    /// RMS residual of each ray-decay fit, dB.
    pub ray_fit_residual_db: Vec<Option<f64>>,
    /// RMS residual of the cluster-decay fit, dB.
    pub cluster_fit_residual_db: Option<f64>,
}

/// Parameters estimated from one profile or averaged over a bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedParameters {
    pub n_clusters: usize,
    pub ray_rates: Vec<Estimate>,
    pub cluster_rate: Estimate,
    pub ray_decays: Vec<Estimate>,
    pub cluster_decay: Estimate,
    pub diagnostics: FitDiagnostics,
}

impl ExtractedParameters {
    /// Converts to a parameter set; fails if any value is missing.
    pub fn to_parameter_set(&self, scenario: Scenario, bin: MisalignmentBin) -> Result<SvParameterSet> {
        let need = |e: &Estimate, what: &str| {
            e.value()
                .ok_or_else(|| Error::InsufficientData(format!("{what} could not be estimated")))
        };
        let ray_rates = self
            .ray_rates
            .iter()
            .enumerate()
            .map(|(i, e)| need(e, &format!("ray rate of cluster {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let ray_decays = self
            .ray_decays
            .iter()
            .enumerate()
            .map(|(i, e)| need(e, &format!("ray decay of cluster {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        SvParameterSet::new(
            scenario,
            bin,
            ray_rates,
            need(&self.cluster_rate, "cluster rate")?,
            ray_decays,
            need(&self.cluster_decay, "cluster decay")?,
        )
    }
}

/// Full per-profile extraction.
pub fn extract_parameters(pdp: &Pdp, n_clusters: usize) -> Result<ExtractedParameters> {
    let mpcs = detect_mpcs(pdp)?;
    let labelled = segment_clusters(&mpcs, n_clusters)?;
    let clusters = labelled.clusters();
    let rates = estimate_arrival_rates(&labelled)?;

    let ray_fits: Vec<Result<DecayFit>> = clusters.iter().map(|c| fit_ray_decay(c)).collect();
    let leads: Vec<Mpc> = clusters.iter().map(|c| c[0]).collect();
    let cluster_fit = fit_cluster_decay(&leads);

    Ok(ExtractedParameters {
        n_clusters,
        ray_rates: rates.ray_rates.into_iter().map(Estimate::from_option).collect(),
        cluster_rate: Estimate::from_option(rates.cluster_rate),
        ray_decays: ray_fits.iter().map(Estimate::from_fit).collect(),
        cluster_decay: Estimate::from_fit(&cluster_fit),
        diagnostics: FitDiagnostics {
            sample_count: 1,
            peak_counts: clusters.iter().map(Vec::len).collect(),
            ray_fit_residual_db: ray_fits
                .iter()
                .map(|f| f.as_ref().ok().map(|f| f.residual_rms_db))
                .collect(),
            cluster_fit_residual_db: cluster_fit.as_ref().ok().map(|f| f.residual_rms_db),
        },
    })
}

fn mean_option(items: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (s, n) = items
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Element-wise mean over the per-angle results of one bin. Entries that
/// could not be estimated for a given angle do not enter that parameter's
/// mean.
pub fn aggregate_over_bin(
    per_angle: &[ExtractedParameters],
    _bin: MisalignmentBin,
) -> Result<ExtractedParameters> {
    let first = per_angle
        .first()
        .ok_or_else(|| Error::domain("nothing to aggregate"))?;
    let nc = first.n_clusters;
    if per_angle.iter().any(|p| p.n_clusters != nc) {
        return Err(Error::domain("per-angle results disagree on cluster count"));
    }
    let per_cluster = |f: &dyn Fn(&ExtractedParameters, usize) -> Estimate| -> Vec<Estimate> {
        (0..nc)
            .map(|i| Estimate::mean(per_angle.iter().map(|p| f(p, i)).collect::<Vec<_>>().iter()))
            .collect()
    };
    Ok(ExtractedParameters {
        n_clusters: nc,
        ray_rates: per_cluster(&|p, i| p.ray_rates[i]),
        cluster_rate: Estimate::mean(per_angle.iter().map(|p| &p.cluster_rate)),
        ray_decays: per_cluster(&|p, i| p.ray_decays[i]),
        cluster_decay: Estimate::mean(per_angle.iter().map(|p| &p.cluster_decay)),
        diagnostics: FitDiagnostics {
            sample_count: per_angle.iter().map(|p| p.diagnostics.sample_count).sum(),
            peak_counts: (0..nc)
                .map(|i| {
                    per_angle
                        .iter()
                        .map(|p| p.diagnostics.peak_counts.get(i).copied().unwrap_or(0))
                        .sum()
                })
                .collect(),
            ray_fit_residual_db: (0..nc)
                .map(|i| {
                    mean_option(
                        per_angle
                            .iter()
                            .map(|p| p.diagnostics.ray_fit_residual_db.get(i).copied().flatten()),
                    )
                })
                .collect(),
            cluster_fit_residual_db: mean_option(
                per_angle.iter().map(|p| p.diagnostics.cluster_fit_residual_db),
            ),
        },
    })
}
