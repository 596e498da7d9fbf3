//! Verb implementations. Each returns the rendered report for stdout.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use mmwave_sv::extraction::{aggregate_over_bin, extract_parameters, Estimate, ExtractedParameters};
use mmwave_sv::geometry::is_extrapolated;
use mmwave_sv::metrics::{gof_report, normalize_pdp, rms_delay_spread};
use mmwave_sv::paramfile::{read_sim_config, ParameterFile, ParameterSource};
use mmwave_sv::simulator::{simulate_ensemble, Realization};
use mmwave_sv::trace::{format_sig9, PdpTrace, TraceMetadata};
use mmwave_sv::{bin_for, lookup_parameters, AngularPose, MisalignmentBin, Scenario, SimConfig};

use crate::error::{io_at, CliError};
use crate::output::render;
use crate::{AngleArgs, Cli, Command, ExtractArgs, GlobalOpts, SimulateArgs, ValidateArgs};

type Report = Map<String, Value>;

pub fn run(cli: &Cli) -> Result<String, CliError> {
    let report = match &cli.command {
        Command::Angle(a) => angle(a)?,
        Command::Simulate(a) => simulate(a, &cli.global)?,
        Command::Extract(a) => extract(a, &cli.global)?,
        Command::Validate(a) => validate(a)?,
    };
    Ok(render(&report, cli.global.format))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn parse_scenario(s: &str) -> Result<Scenario, CliError> {
    s.parse().map_err(|e: mmwave_sv::Error| CliError::Usage(e.to_string()))
}

fn angle(a: &AngleArgs) -> Result<Report, CliError> {
    let pose = AngularPose::new(a.theta, a.phi)?;
    let psi = pose.total_misalignment();
    let bin = bin_for(psi)?;
    let mut r = Report::new();
    r.insert("theta_deg".into(), json!(a.theta));
    r.insert("phi_deg".into(), json!(a.phi));
    r.insert("psi_deg".into(), json!(round6(psi)));
    r.insert("bin".into(), json!(bin.as_str()));
    r.insert("extrapolated".into(), json!(is_extrapolated(psi)));
    Ok(r)
}

fn load_config(global: &GlobalOpts) -> Result<SimConfig, CliError> {
    match &global.config {
        Some(path) => Ok(read_sim_config(path)?),
        None => Ok(SimConfig::default()),
    }
}

fn simulate(a: &SimulateArgs, global: &GlobalOpts) -> Result<Report, CliError> {
    let scenario = parse_scenario(&a.scenario)?;
    let (pose, psi) = match (a.psi, a.theta, a.phi) {
        (Some(psi), _, _) => (None, psi),
        (None, Some(t), Some(p)) => {
            let pose = AngularPose::new(t, p)?;
            (Some(pose), pose.total_misalignment())
        }
        _ => return Err(CliError::Usage("give --psi or both --theta and --phi".into())),
    };
    if a.realizations == 0 {
        return Err(CliError::Usage("--realizations must be at least 1".into()));
    }
    let bin = bin_for(psi)?;

    let mut config = load_config(global)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(k) = a.truncation_multiple {
        config.truncation_multiple = k;
    }
    if let Some(s) = a.shadowing_sigma {
        config.shadowing_sigma = s;
    }
    if let Some(d) = a.delay_resolution {
        config.delay_resolution = d;
    }
    if let Some(m) = a.max_delay {
        config.max_delay = m;
    }
    config.validate()?;

    let params = match &a.params {
        Some(path) => {
            let file = ParameterFile::read(path)?;
            if file.params.scenario != scenario {
                return Err(CliError::Data(format!(
                    "{}: parameter file is for {}, not {scenario}",
                    path.display(),
                    file.params.scenario
                )));
            }
            file.params
        }
        None => lookup_parameters(scenario, psi)?.clone(),
    };

    let ensemble = simulate_ensemble(&params, &config, a.realizations)?;

    let out_dir = global.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let real_dir = out_dir.join("realizations");
    fs::create_dir_all(&real_dir).map_err(io_at(&real_dir))?;

    let base_meta = TraceMetadata {
        scenario: Some(scenario),
        theta_deg: pose.map(|p| p.theta),
        phi_deg: pose.map(|p| p.phi),
        psi_deg: Some(psi),
        ..TraceMetadata::default()
    };
    let common_extra = vec![
        ("bin".to_string(), bin.to_string()),
        ("seed".to_string(), config.seed.to_string()),
    ];

    ensemble
        .realizations
        .par_iter()
        .try_for_each(|r| write_realization(r, &real_dir, &base_meta, &common_extra))?;

    let mut meta = base_meta.clone();
    meta.extra = common_extra;
    meta.extra.push(("realizations".into(), a.realizations.to_string()));
    let ensemble_path = out_dir.join("ensemble.csv");
    PdpTrace::new(ensemble.average.clone(), meta)
        .write(&ensemble_path)
        .map_err(|e| with_path(e, &ensemble_path))?;

    let truncated: usize = ensemble.realizations.iter().map(|r| r.binned.truncated_taps).sum();
    let mut r = Report::new();
    r.insert("scenario".into(), json!(scenario.to_string()));
    r.insert("psi_deg".into(), json!(round6(psi)));
    r.insert("bin".into(), json!(bin.as_str()));
    r.insert("extrapolated".into(), json!(is_extrapolated(psi)));
    r.insert("seed".into(), json!(config.seed));
    r.insert("realizations".into(), json!(a.realizations));
    r.insert("truncated_taps".into(), json!(truncated));
    r.insert(
        "ensemble_rms_delay_spread_ns".into(),
        json!(rms_delay_spread(&ensemble.average)?),
    );
    r.insert("output".into(), json!(out_dir.display().to_string()));
    Ok(r)
}

fn write_realization(
    r: &Realization,
    dir: &Path,
    base: &TraceMetadata,
    common_extra: &[(String, String)],
) -> Result<(), CliError> {
    let mut meta = base.clone();
    meta.extra = common_extra.to_vec();
    meta.extra.push(("realization".into(), r.index.to_string()));
    meta.extra.push(("shadowing_db".into(), format_sig9(r.shadowing_db)));
    meta.extra.push(("truncated_taps".into(), r.binned.truncated_taps.to_string()));
    let path = dir.join(format!("realization_{:04}.csv", r.index));
    PdpTrace::new(normalize_pdp(&r.binned.pdp)?, meta)
        .write(&path)
        .map_err(|e| with_path(e, &path))
}

fn with_path(e: mmwave_sv::Error, path: &Path) -> CliError {
    match e {
        mmwave_sv::Error::Io(io) => io_at(path)(io),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

/// Expands directories into their `.csv` files, sorted by name.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(io_at(input))?;
        if meta.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(io_at(input))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn estimate_json(e: &Estimate) -> Value {
    e.value().map_or(Value::Null, |v| json!(v))
}

fn extract(a: &ExtractArgs, global: &GlobalOpts) -> Result<Report, CliError> {
    let files = collect_inputs(&a.inputs)?;
    if files.is_empty() {
        return Err(CliError::Data("no trace files found".into()));
    }

    let parsed: Vec<(PathBuf, Result<PdpTrace, mmwave_sv::Error>)> = files
        .par_iter()
        .map(|p| (p.clone(), PdpTrace::read(p)))
        .collect();
    let mut traces = Vec::new();
    let mut skipped = 0usize;
    for (path, result) in parsed {
        match result {
            Ok(t) => traces.push((path, t)),
            Err(mmwave_sv::Error::Io(e)) => return Err(io_at(&path)(e)),
            Err(e) => {
                eprintln!("warning: {}: skipped: {e}", path.display());
                skipped += 1;
            }
        }
    }

    let scenario = match &a.scenario {
        Some(s) => parse_scenario(s)?,
        None => traces
            .iter()
            .find_map(|(_, t)| t.metadata.scenario)
            .ok_or_else(|| CliError::Data("no scenario in traces; pass --scenario".into()))?,
    };
    let forced_bin = a.psi.map(bin_for).transpose()?;
    let mut bin: Option<MisalignmentBin> = forced_bin;
    for (path, t) in &traces {
        if let Some(s) = t.metadata.scenario {
            if s != scenario {
                return Err(CliError::Data(format!(
                    "{}: scenario {s} differs from {scenario}",
                    path.display()
                )));
            }
        }
        if forced_bin.is_none() {
            let psi = t.metadata.psi_deg.ok_or_else(|| {
                CliError::Data(format!("{}: no psi_deg in trace; pass --psi", path.display()))
            })?;
            let b = bin_for(psi)?;
            match bin {
                None => bin = Some(b),
                Some(prev) if prev != b => {
                    return Err(CliError::Data(format!(
                        "{}: bin {b} differs from {prev}",
                        path.display()
                    )))
                }
                Some(_) => {}
            }
        }
    }
    let n_clusters = a.n_clusters.unwrap_or_else(|| scenario.default_cluster_count());

    let results: Vec<(PathBuf, Result<ExtractedParameters, mmwave_sv::Error>)> = traces
        .par_iter()
        .map(|(p, t)| (p.clone(), extract_parameters(&t.pdp, n_clusters)))
        .collect();
    let mut per_angle = Vec::new();
    for (path, result) in results {
        match result {
            Ok(e) => per_angle.push(e),
            Err(e) => {
                eprintln!("warning: {}: skipped: {e}", path.display());
                skipped += 1;
            }
        }
    }
    if per_angle.is_empty() {
        return Err(CliError::Data(format!("all {} input files were skipped", files.len())));
    }
    let bin = bin.expect("bin resolved for a non-empty input set");
    let agg = aggregate_over_bin(&per_angle, bin)?;

    let mut r = Report::new();
    r.insert("scenario".into(), json!(scenario.to_string()));
    r.insert("bin".into(), json!(bin.as_str()));
    r.insert("files".into(), json!(files.len()));
    r.insert("skipped".into(), json!(skipped));
    r.insert("sample_count".into(), json!(agg.diagnostics.sample_count));
    r.insert("n_clusters".into(), json!(agg.n_clusters));
    r.insert("ray_rates".into(), Value::Array(agg.ray_rates.iter().map(estimate_json).collect()));
    r.insert("cluster_rate".into(), estimate_json(&agg.cluster_rate));
    r.insert("ray_decays".into(), Value::Array(agg.ray_decays.iter().map(estimate_json).collect()));
    r.insert("cluster_decay".into(), estimate_json(&agg.cluster_decay));
    r.insert("peak_counts".into(), json!(agg.diagnostics.peak_counts));

    let params = agg.to_parameter_set(scenario, bin)?;
    if let Some(out) = &global.output {
        let path = if out.is_dir() { out.join("parameters.toml") } else { out.clone() };
        let file = ParameterFile {
            params,
            source: ParameterSource::Extracted,
            sample_count: agg.diagnostics.sample_count,
        };
        file.write(&path).map_err(|e| with_path(e, &path))?;
        r.insert("output".into(), json!(path.display().to_string()));
    }
    Ok(r)
}

fn validate(a: &ValidateArgs) -> Result<Report, CliError> {
    let measured = PdpTrace::read(&a.measured).map_err(|e| with_path(e, &a.measured))?;
    let simulated = PdpTrace::read(&a.simulated).map_err(|e| with_path(e, &a.simulated))?;
    let same_grid = measured.pdp.len() == simulated.pdp.len()
        && measured.pdp.delay_resolution == simulated.pdp.delay_resolution
        && measured.start_delay == simulated.start_delay;
    let sim_pdp = if same_grid {
        simulated.pdp.clone()
    } else {
        simulated.resample_to(measured.start_delay, measured.pdp.delay_resolution, measured.pdp.len())?
    };
    if sim_pdp.len() != measured.pdp.len() {
        return Err(CliError::Data("profiles differ in length after resampling".into()));
    }
    let g = if a.normalize {
        gof_report(&normalize_pdp(&measured.pdp)?, &normalize_pdp(&sim_pdp)?, a.floor_db)?
    } else {
        if measured.pdp.normalized != sim_pdp.normalized {
            eprintln!("warning: only one profile is normalized; consider --normalize");
        }
        gof_report(&measured.pdp, &sim_pdp, a.floor_db)?
    };
    let mut r = Report::new();
    r.insert("correlation".into(), json!(g.correlation));
    r.insert("ks_statistic".into(), json!(g.ks_statistic));
    r.insert("ks_critical_value".into(), json!(g.ks_critical_value));
    r.insert("ks_reject_at_5pct".into(), json!(g.ks_reject_at_5pct));
    r.insert("rms_measured_ns".into(), json!(g.rms_measured));
    r.insert("rms_simulated_ns".into(), json!(g.rms_simulated));
    r.insert("resampled".into(), json!(!same_grid));
    r.insert("normalized".into(), json!(a.normalize));
    Ok(r)
}
