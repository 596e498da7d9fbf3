//! Saleh-Valenzuela primitives.
//!
//! The channel impulse response is a sparse sum of ray taps grouped into
//! clusters:
//!
//! ```text
//! h(t) = Σ_n Σ_m β_{m,n} exp(j ϱ_{m,n}) δ(t - T_n - τ_{m,n})
//! β²_{m,n} = β²_{1,1} exp(-(T_n - T_1)/Γ) exp(-τ_{m,n}/γ_n)
//! ```
//!
//! Cluster arrivals `T_n` and ray arrivals `τ_{m,n}` are Poisson processes
//! with rates Λ and λ_n. Each cluster carries its own λ_n and γ_n.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MisalignmentBin;

/// Link scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Outdoor-to-indoor: Rx behind a window.
    #[serde(rename = "o2i")]
    O2i,
    /// Outdoor-to-outdoor: Rx on the rooftop.
    #[serde(rename = "o2o")]
    O2o,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::O2i, Scenario::O2o];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::O2i => "o2i",
            Scenario::O2o => "o2o",
        }
    }

    /// Cluster count used when segmenting measured profiles of this scenario.
    pub fn default_cluster_count(&self) -> usize {
        match self {
            Scenario::O2i => 2,
            Scenario::O2o => 3,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o2i" | "1" => Ok(Scenario::O2i),
            "o2o" | "2" => Ok(Scenario::O2o),
            other => Err(Error::domain(format!("unknown scenario '{other}'"))),
        }
    }
}

/// One row of S-V parameters: cluster count, per-cluster ray arrival rates
/// (1/ns) and decay constants (ns), cluster arrival rate (1/ns) and cluster
/// decay constant (ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvParameterSet {
    pub scenario: Scenario,
    pub bin: MisalignmentBin,
    pub n_clusters: usize,
    pub ray_rates: Vec<f64>,
    pub cluster_rate: f64,
    pub ray_decays: Vec<f64>,
    pub cluster_decay: f64,
}

impl SvParameterSet {
    pub fn new(
        scenario: Scenario,
        bin: MisalignmentBin,
        ray_rates: Vec<f64>,
        cluster_rate: f64,
        ray_decays: Vec<f64>,
        cluster_decay: f64,
    ) -> Result<Self> {
        let set = SvParameterSet {
            scenario,
            bin,
            n_clusters: ray_rates.len(),
            ray_rates,
            cluster_rate,
            ray_decays,
            cluster_decay,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::domain("parameter set needs at least one cluster"));
        }
        if self.ray_rates.len() != self.n_clusters || self.ray_decays.len() != self.n_clusters {
            return Err(Error::domain(format!(
                "expected {} ray rates and decays, got {} and {}",
                self.n_clusters,
                self.ray_rates.len(),
                self.ray_decays.len()
            )));
        }
        let all = self
            .ray_rates
            .iter()
            .chain(&self.ray_decays)
            .chain([&self.cluster_rate, &self.cluster_decay]);
        for &v in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!(
                    "rates and decay constants must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// λ for a 1-based cluster index.
    pub fn ray_rate(&self, cluster_index: usize) -> Result<f64> {
        self.check_index(cluster_index)?;
        Ok(self.ray_rates[cluster_index - 1])
    }

    /// γ for a 1-based cluster index.
    pub fn ray_decay(&self, cluster_index: usize) -> Result<f64> {
        self.check_index(cluster_index)?;
        Ok(self.ray_decays[cluster_index - 1])
    }

    fn check_index(&self, cluster_index: usize) -> Result<()> {
        if cluster_index == 0 || cluster_index > self.n_clusters {
            return Err(Error::domain(format!(
                "cluster index {cluster_index} outside 1..={}",
                self.n_clusters
            )));
        }
        Ok(())
    }
}

/// A single ray of the impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayTap {
    /// 1-based cluster index.
    pub cluster_index: usize,
    /// Absolute arrival time `T_n + τ_{m,n}`, ns.
    pub delay: f64,
    /// Linear magnitude β.
    pub amplitude: f64,
    /// Phase in radians, `[0, 2π)`.
    pub phase: f64,
}

impl RayTap {
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Sparse channel impulse response, taps sorted by delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<RayTap>,
    pub params: SvParameterSet,
    pub seed: u64,
}

impl Cir {
    /// Sorts the taps and checks the structural invariants.
    pub fn new(mut taps: Vec<RayTap>, params: SvParameterSet, seed: u64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::domain("impulse response has no taps"));
        }
        for t in &taps {
            if !(t.delay >= 0.0 && t.amplitude >= 0.0 && (0.0..TAU).contains(&t.phase)) {
                return Err(Error::domain(format!("malformed tap {t:?}")));
            }
            if t.cluster_index == 0 || t.cluster_index > params.n_clusters {
                return Err(Error::domain(format!(
                    "tap cluster index {} outside 1..={}",
                    t.cluster_index, params.n_clusters
                )));
            }
        }
        // Stable sort keeps the generation order for coincident delays.
        taps.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Ok(Cir { taps, params, seed })
    }

    /// Number of distinct clusters that produced at least one tap.
    pub fn realized_clusters(&self) -> usize {
        let mut seen: Vec<usize> = self.taps.iter().map(|t| t.cluster_index).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Taps of one cluster, in delay order.
    pub fn cluster(&self, cluster_index: usize) -> impl Iterator<Item = &RayTap> {
        self.taps
            .iter()
            .filter(move |t| t.cluster_index == cluster_index)
    }

    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(RayTap::power).sum()
    }
}

/// Double-exponential decay law: power of a ray given the cluster's offset
/// from the first cluster and the ray's offset within its cluster.
pub fn ray_power(
    beta_11_sq: f64,
    cluster_offset: f64,
    ray_offset: f64,
    params: &SvParameterSet,
    cluster_index: usize,
) -> Result<f64> {
    let gamma = params.ray_decay(cluster_index)?;
    if !(cluster_offset >= 0.0 && ray_offset >= 0.0) {
        return Err(Error::domain(format!(
            "offsets must be non-negative, got {cluster_offset} and {ray_offset}"
        )));
    }
    Ok(beta_11_sq * (-cluster_offset / params.cluster_decay).exp() * (-ray_offset / gamma).exp())
}

/// Inverse-CDF exponential gap for a uniform draw `u ∈ (0, 1]`.
pub fn exponential_gap(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

/// Uniform draw on `(0, 1]`; zero is excluded so gaps stay finite.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Gap between consecutive cluster arrivals, Exp(Λ).
pub fn sample_cluster_gap<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    exponential_gap(open_unit(rng), rate)
}

/// Gap between consecutive rays within a cluster, Exp(λ).
pub fn sample_ray_gap<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    exponential_gap(open_unit(rng), rate)
}

/// Phase for a uniform draw `u ∈ [0, 1)`.
pub fn phase_from_uniform(u: f64) -> f64 {
    let p = u * TAU;
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Uniform ray phase on `[0, 2π)`.
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    phase_from_uniform(rng.random::<f64>())
}
