//! TOML documents for parameter sets and simulation configs.
//!
//! ```toml
//! scenario = "o2i"
//! bin = "near"
//! source = "table"
//! sample_count = 1
//! n_clusters = 2
//! ray_rates = [6.97, 7.29]
//! cluster_rate = 0.31
//! ray_decays = [0.21, 0.79]
//! cluster_decay = 0.93
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MisalignmentBin;
use crate::simulator::SimConfig;
use crate::sv::{Scenario, SvParameterSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterSource {
    Table,
    Extracted,
}

/// A parameter set plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterFile {
    pub params: SvParameterSet,
    pub source: ParameterSource,
    /// Number of profiles behind an extracted set; 1 for table rows.
    pub sample_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    scenario: Scenario,
    bin: MisalignmentBin,
    source: ParameterSource,
    sample_count: usize,
    n_clusters: usize,
    ray_rates: Vec<f64>,
    cluster_rate: f64,
    ray_decays: Vec<f64>,
    cluster_decay: f64,
}

impl ParameterFile {
    pub fn from_table(params: SvParameterSet) -> Self {
        ParameterFile {
            params,
            source: ParameterSource::Table,
            sample_count: 1,
        }
    }

    pub fn emit(&self) -> String {
        let p = &self.params;
        let doc = Document {
            scenario: p.scenario,
            bin: p.bin,
            source: self.source,
            sample_count: self.sample_count,
            n_clusters: p.n_clusters,
            ray_rates: p.ray_rates.clone(),
            cluster_rate: p.cluster_rate,
            ray_decays: p.ray_decays.clone(),
            cluster_decay: p.cluster_decay,
        };
        toml::to_string(&doc).expect("parameter document serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Document = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        let params = SvParameterSet {
            scenario: doc.scenario,
            bin: doc.bin,
            n_clusters: doc.n_clusters,
            ray_rates: doc.ray_rates,
            cluster_rate: doc.cluster_rate,
            ray_decays: doc.ray_decays,
            cluster_decay: doc.cluster_decay,
        };
        params
            .validate()
            .map_err(|e| Error::parse(key_line(text, &[offending_key(&params)]), e.to_string()))?;
        Ok(ParameterFile {
            params,
            source: doc.source,
            sample_count: doc.sample_count,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.emit())?;
        Ok(())
    }
}

/// Parses a simulation config; absent keys keep their defaults.
pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    let config: SimConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    config
        .validate()
        .map_err(|e| Error::parse(key_line(text, &["max_delay", "delay_resolution"]), e.to_string()))?;
    Ok(config)
}

pub fn read_sim_config(path: &Path) -> Result<SimConfig> {
    parse_sim_config(&fs::read_to_string(path)?)
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(1);
    Error::parse(line, e.message().to_string())
}

fn offending_key(p: &SvParameterSet) -> &'static str {
    let bad = |v: &[f64]| v.iter().any(|x| !(x.is_finite() && *x > 0.0));
    if p.ray_rates.len() != p.n_clusters || p.ray_decays.len() != p.n_clusters {
        "n_clusters"
    } else if bad(&p.ray_rates) {
        "ray_rates"
    } else if bad(&p.ray_decays) {
        "ray_decays"
    } else if bad(&[p.cluster_rate]) {
        "cluster_rate"
    } else {
        "cluster_decay"
    }
}

/// Line of the first of `keys` found in the document, else 1.
fn key_line(text: &str, keys: &[&str]) -> usize {
    keys.iter()
        .find_map(|k| {
            text.lines()
                .position(|l| l.trim_start().starts_with(k))
                .map(|i| i + 1)
        })
        .unwrap_or(1)
}
