//! Directional CIR/PDP generation for a scenario and misalignment angle.
//!
//! Clusters arrive at `T_1 = 0, T_{n+1} = T_n + Exp(Λ)`. Within cluster `n`
//! the first ray sits at the cluster arrival and further rays follow at
//! `Exp(λ_n)` gaps while the intra-cluster offset stays below `k·γ_n`.
//! A single log-normal factor scales the whole realization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{normalize_pdp, Pdp};
use crate::registry::lookup_parameters;
use crate::sv::{
    ray_power, sample_cluster_gap, sample_phase, sample_ray_gap, Cir, RayTap, Scenario,
    SvParameterSet,
};

/// Bin width matching the 8 GHz sweep: 1 / 8 GHz = 0.125 ns.
pub const DEFAULT_DELAY_RESOLUTION_NS: f64 = 0.125;
/// Unambiguous delay window of a 0.1 GHz frequency step: 10 ns.
pub const DEFAULT_MAX_DELAY_NS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Ray loop bound `k`: rays are added while τ < k·γ.
    pub truncation_multiple: f64,
    /// Shadowing standard deviation σ_x in dB.
    pub shadowing_sigma: f64,
    /// Power of the first ray of the first cluster, linear.
    pub beta_11_sq: f64,
    pub seed: u64,
    /// PDP bin width Δτ, ns.
    pub delay_resolution: f64,
    /// PDP window, ns.
    pub max_delay: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            truncation_multiple: 10.0,
            shadowing_sigma: 3.0,
            beta_11_sq: 1.0,
            seed: 0,
            delay_resolution: DEFAULT_DELAY_RESOLUTION_NS,
            max_delay: DEFAULT_MAX_DELAY_NS,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive, got {v}")))
            }
        };
        positive("truncation_multiple", self.truncation_multiple)?;
        positive("beta_11_sq", self.beta_11_sq)?;
        positive("delay_resolution", self.delay_resolution)?;
        if !(self.shadowing_sigma.is_finite() && self.shadowing_sigma >= 0.0) {
            return Err(Error::domain(format!(
                "shadowing_sigma must be non-negative, got {}",
                self.shadowing_sigma
            )));
        }
        if !(self.max_delay.is_finite() && self.max_delay >= 10.0 * self.delay_resolution) {
            return Err(Error::domain(format!(
                "max_delay {} must cover at least 10 bins of {}",
                self.max_delay, self.delay_resolution
            )));
        }
        Ok(())
    }

    /// Number of PDP bins covering `[0, max_delay)`.
    pub fn bin_count(&self) -> usize {
        ((self.max_delay / self.delay_resolution) - 1e-9).ceil() as usize
    }
}

/// Sub-seed for realization `index` of a run seeded with `master`.
/// Distinct indices give independent ChaCha streams regardless of which
/// thread draws them.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one unshadowed impulse response from a parameter set.
///
/// The rng is consumed in a fixed order: per ray a phase then the next ray
/// gap, and after each cluster the next cluster gap.
pub fn generate_cir<R: Rng + ?Sized>(
    params: &SvParameterSet,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Cir> {
    params.validate()?;
    config.validate()?;
    let mut taps = Vec::new();
    let mut cluster_arrival = 0.0;
    for n in 1..=params.n_clusters {
        let rate = params.ray_rate(n)?;
        let horizon = config.truncation_multiple * params.ray_decay(n)?;
        let mut tau = 0.0;
        while tau < horizon {
            let power = ray_power(config.beta_11_sq, cluster_arrival, tau, params, n)?;
            taps.push(RayTap {
                cluster_index: n,
                delay: cluster_arrival + tau,
                amplitude: power.sqrt(),
                phase: sample_phase(rng),
            });
            tau += sample_ray_gap(rate, rng);
        }
        cluster_arrival += sample_cluster_gap(params.cluster_rate, rng);
    }
    Cir::new(taps, params.clone(), config.seed)
}

/// Impulse response for a scenario and misalignment using the built-in
/// parameter tables.
pub fn generate_cir_for<R: Rng + ?Sized>(
    scenario: Scenario,
    psi_deg: f64,
    config: &SimConfig,
    rng: &mut R,
) -> Result<Cir> {
    generate_cir(lookup_parameters(scenario, psi_deg)?, config, rng)
}

/// Multiplies every amplitude by `10^(gain_db/20)`.
pub fn scale_cir_db(mut cir: Cir, gain_db: f64) -> Cir {
    let factor = 10f64.powf(gain_db / 20.0);
    for t in &mut cir.taps {
        t.amplitude *= factor;
    }
    cir
}

/// Applies one log-normal shadowing draw `X ~ N(0, σ_x²)` dB to the whole
/// response. Returns the scaled response and the drawn gain in dB.
pub fn apply_shadowing<R: Rng + ?Sized>(cir: Cir, sigma_db: f64, rng: &mut R) -> Result<(Cir, f64)> {
    if sigma_db == 0.0 {
        return Ok((cir, 0.0));
    }
    let normal = Normal::new(0.0, sigma_db)
        .map_err(|e| Error::domain(format!("shadowing sigma {sigma_db}: {e}")))?;
    let x = normal.sample(rng);
    Ok((scale_cir_db(cir, x), x))
}

/// PDP plus the bookkeeping of taps that fell outside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPdp {
    pub pdp: Pdp,
    pub truncated_taps: usize,
    pub truncated_power: f64,
}

/// Accumulates tap powers (phases discarded) onto the configured grid.
pub fn cir_to_pdp(cir: &Cir, config: &SimConfig) -> Result<BinnedPdp> {
    config.validate()?;
    let bins = config.bin_count();
    let mut powers = vec![0.0; bins];
    let (mut truncated_taps, mut truncated_power) = (0, 0.0);
    for tap in &cir.taps {
        let idx = (tap.delay / config.delay_resolution).floor() as usize;
        match powers.get_mut(idx) {
            Some(p) => *p += tap.power(),
            None => {
                truncated_taps += 1;
                truncated_power += tap.power();
            }
        }
    }
    let pdp = Pdp::new(powers, config.delay_resolution)?;
    Ok(BinnedPdp {
        pdp,
        truncated_taps,
        truncated_power,
    })
}

/// One simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub index: u64,
    /// Shadowed impulse response.
    pub cir: Cir,
    pub shadowing_db: f64,
    pub binned: BinnedPdp,
}

/// Generates realization `index` from its own deterministic sub-stream.
pub fn realize(params: &SvParameterSet, config: &SimConfig, index: u64) -> Result<Realization> {
    let seed = realization_seed(config.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cir = generate_cir(params, config, &mut rng)?;
    cir.seed = seed;
    let (cir, shadowing_db) = apply_shadowing(cir, config.shadowing_sigma, &mut rng)?;
    let binned = cir_to_pdp(&cir, config)?;
    Ok(Realization {
        index,
        cir,
        shadowing_db,
        binned,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub realizations: Vec<Realization>,
    /// Per-bin mean of the normalized realizations, re-normalized.
    pub average: Pdp,
}

/// Runs `count` realizations in parallel. The result does not depend on the
/// number of worker threads.
pub fn simulate_ensemble(params: &SvParameterSet, config: &SimConfig, count: usize) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::domain("an ensemble needs at least one realization"));
    }
    let realizations = (0..count as u64)
        .into_par_iter()
        .map(|i| realize(params, config, i))
        .collect::<Result<Vec<_>>>()?;
    let average = ensemble_average(realizations.iter().map(|r| &r.binned.pdp))?;
    Ok(Ensemble {
        realizations,
        average,
    })
}

/// Mean of normalized profiles on a common grid, re-normalized.
pub fn ensemble_average<'a>(pdps: impl IntoIterator<Item = &'a Pdp>) -> Result<Pdp> {
    let mut acc: Option<Pdp> = None;
    let mut count = 0usize;
    for pdp in pdps {
        let n = normalize_pdp(pdp)?;
        match &mut acc {
            None => acc = Some(n),
            Some(a) => {
                if a.len() != n.len() || a.delay_resolution != n.delay_resolution {
                    return Err(Error::domain("ensemble members are on different grids"));
                }
                a.powers.iter_mut().zip(&n.powers).for_each(|(s, p)| *s += p);
            }
        }
        count += 1;
    }
    let mut acc = acc.ok_or_else(|| Error::domain("empty ensemble"))?;
    acc.powers.iter_mut().for_each(|p| *p /= count as f64);
    normalize_pdp(&acc)
}
