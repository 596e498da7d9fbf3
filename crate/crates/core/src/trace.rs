//! PDP trace files.
//!
//! Plain text, one bin per row, preceded by `#` metadata lines:
//!
//! ```text
//! # scenario=o2i
//! # theta_deg=5
//! # phi_deg=5
//! # psi_deg=7.06657439
//! # delay_resolution_ns=0.125
//! # normalized=true
//! delay_ns,power_db
//! 0,0
//! 0.125,-3.41
//! ```
//!
//! Numbers are written with 9 significant digits. Empty bins are written as
//! `-inf` dB.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::Pdp;
use crate::sv::Scenario;

pub const HEADER: &str = "delay_ns,power_db";

/// Delay spacing tolerance, ns. Large delays are only printed to 9
/// significant digits, so the tolerance grows with the delay.
const SPACING_TOL: f64 = 1e-9;
const SPACING_REL_TOL: f64 = 1e-8;

/// Rounds to 9 significant digits and prints the shortest decimal that
/// reads back to the rounded value.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMetadata {
    pub scenario: Option<Scenario>,
    pub theta_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub psi_deg: Option<f64>,
    pub delay_resolution_ns: Option<f64>,
    pub normalized: Option<bool>,
    /// Any other `key=value` lines, in file order.
    pub extra: Vec<(String, String)>,
}

impl TraceMetadata {
    pub fn get_extra(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// A power delay profile together with its file metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PdpTrace {
    pub metadata: TraceMetadata,
    /// Delay of the first row, ns.
    pub start_delay: f64,
    pub pdp: Pdp,
}

impl PdpTrace {
    pub fn new(pdp: Pdp, metadata: TraceMetadata) -> Self {
        PdpTrace {
            metadata,
            start_delay: 0.0,
            pdp,
        }
    }

    pub fn emit(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        if let Some(s) = m.scenario {
            let _ = writeln!(out, "# scenario={s}");
        }
        for (key, v) in [("theta_deg", m.theta_deg), ("phi_deg", m.phi_deg), ("psi_deg", m.psi_deg)] {
            if let Some(v) = v {
                let _ = writeln!(out, "# {key}={}", format_sig9(v));
            }
        }
        let _ = writeln!(
            out,
            "# delay_resolution_ns={}",
            format_sig9(self.pdp.delay_resolution)
        );
        let _ = writeln!(out, "# normalized={}", self.pdp.normalized);
        for (k, v) in &m.extra {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(HEADER);
        out.push('\n');
        for (n, &p) in self.pdp.powers.iter().enumerate() {
            let delay = self.start_delay + self.pdp.delay(n);
            let _ = writeln!(out, "{},{}", format_sig9(delay), format_sig9(10.0 * p.log10()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = TraceMetadata::default();
        let mut header_seen = false;
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if header_seen {
                    return Err(Error::parse(line_no, "metadata after the column header"));
                }
                if let Some((k, v)) = comment.split_once('=') {
                    parse_meta(&mut meta, k.trim(), v.trim(), line_no)?;
                }
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["delay_ns", "power_db"] {
                    return Err(Error::parse(
                        line_no,
                        format!("expected header '{HEADER}', found '{line}'"),
                    ));
                }
                header_seen = true;
                continue;
            }
            let mut cols = line.split(',');
            let (Some(d), Some(p), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(line_no, "expected two columns"));
            };
            let d = parse_f64(d, line_no)?;
            let p = parse_f64(p, line_no)?;
            if !d.is_finite() || p.is_nan() || p == f64::INFINITY {
                return Err(Error::parse(line_no, "non-finite delay or power"));
            }
            rows.push((line_no, d, p));
        }
        if !header_seen {
            return Err(Error::parse(text.lines().count().max(1), "missing column header"));
        }
        if rows.is_empty() {
            return Err(Error::parse(text.lines().count().max(1), "trace has no rows"));
        }

        let resolution = match (rows.len(), meta.delay_resolution_ns) {
            (1, Some(r)) => r,
            (1, None) => {
                return Err(Error::parse(
                    rows[0].0,
                    "single-row trace needs delay_resolution_ns metadata",
                ))
            }
            (n, declared) => {
                declared.unwrap_or((rows[n - 1].1 - rows[0].1) / (n - 1) as f64)
            }
        };
        if !(resolution > 0.0) {
            return Err(Error::parse(rows[0].0, "delays must increase"));
        }
        let start = rows[0].1;
        for (k, &(line_no, d, _)) in rows.iter().enumerate() {
            let expected = start + k as f64 * resolution;
            if (d - expected).abs() > SPACING_TOL.max(SPACING_REL_TOL * expected.abs()) {
                return Err(Error::parse(line_no, format!("delay {d} off the uniform grid")));
            }
        }

        let powers: Vec<f64> = rows.iter().map(|r| 10f64.powf(r.2 / 10.0)).collect();
        let peak = powers.iter().copied().fold(0.0, f64::max);
        let normalized = meta.normalized.unwrap_or(peak == 1.0);
        let pdp = Pdp {
            powers,
            delay_resolution: resolution,
            normalized,
        };
        pdp.validate()
            .map_err(|e| Error::parse(rows[0].0, e.to_string()))?;
        Ok(PdpTrace {
            metadata: meta,
            start_delay: start,
            pdp,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.emit())?;
        Ok(())
    }

    /// Re-accumulates this trace's bins onto another grid (bin sums, no
    /// interpolation). Bins falling outside the target grid are dropped.
    pub fn resample_to(&self, start_delay: f64, delay_resolution: f64, bins: usize) -> Result<Pdp> {
        let mut powers = vec![0.0; bins];
        for (n, &p) in self.pdp.powers.iter().enumerate() {
            let d = self.start_delay + self.pdp.delay(n) - start_delay;
            // tolerate grid rounding from 9-digit delays
            let idx = (d / delay_resolution + 1e-9).floor();
            if idx >= 0.0 && (idx as usize) < bins {
                powers[idx as usize] += p;
            }
        }
        Pdp::new(powers, delay_resolution)
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("'{}' is not a number", s.trim())))
}

fn parse_meta(meta: &mut TraceMetadata, key: &str, value: &str, line: usize) -> Result<()> {
    match key {
        "scenario" => meta.scenario = Some(value.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?),
        "theta_deg" => meta.theta_deg = Some(parse_f64(value, line)?),
        "phi_deg" => meta.phi_deg = Some(parse_f64(value, line)?),
        "psi_deg" => meta.psi_deg = Some(parse_f64(value, line)?),
        "delay_resolution_ns" => meta.delay_resolution_ns = Some(parse_f64(value, line)?),
        "normalized" => {
            meta.normalized = Some(match value {
                "true" => true,
                "false" => false,
                _ => return Err(Error::parse(line, format!("'{value}' is not a boolean"))),
            })
        }
        _ => meta.extra.push((key.to_string(), value.to_string())),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PdpTrace {
        let pdp = Pdp {
            powers: vec![1.0, 0.5, 0.0, 0.123456789123],
            delay_resolution: 0.125,
            normalized: true,
        };
        PdpTrace::new(
            pdp,
            TraceMetadata {
                scenario: Some(Scenario::O2i),
                theta_deg: Some(5.0),
                phi_deg: Some(5.0),
                psi_deg: Some(7.066574389261594),
                extra: vec![("realization".into(), "3".into())],
                ..Default::default()
            },
        )
    }

    #[test]
    fn sig9() {
        assert_eq!(format_sig9(0.125), "0.125");
        assert_eq!(format_sig9(7.066574389261594), "7.06657439");
        assert_eq!(format_sig9(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-3.0102999566398), "-3.01029996");
    }

    #[test]
    fn emitted_layout() {
        let text = sample().emit();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# scenario=o2i");
        assert_eq!(lines[3], "# psi_deg=7.06657439");
        assert_eq!(lines[4], "# delay_resolution_ns=0.125");
        assert_eq!(lines[5], "# normalized=true");
        assert_eq!(lines[6], "# realization=3");
        assert_eq!(lines[7], HEADER);
        assert_eq!(lines[8], "0,0");
        assert_eq!(lines[10], "0.25,-inf");
    }

    #[test]
    fn parse_back() {
        let t = PdpTrace::parse(&sample().emit()).unwrap();
        assert_eq!(t.metadata.scenario, Some(Scenario::O2i));
        assert_eq!(t.metadata.get_extra("realization"), Some("3"));
        assert_eq!(t.pdp.len(), 4);
        assert_eq!(t.pdp.powers[2], 0.0);
        assert!(t.pdp.normalized);
        assert_eq!(t.emit(), sample().emit());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "# scenario=o2i\ndelay_ns,power_db\n0,0\n0.125,abc\n";
        match PdpTrace::parse(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let uneven = "delay_ns,power_db\n0,0\n0.125,-1\n0.3,-2\n";
        assert!(matches!(PdpTrace::parse(uneven), Err(Error::Parse { line: 3, .. })));
        assert!(PdpTrace::parse("0,0\n").is_err());
        assert!(PdpTrace::parse("delay_ns,power_db\n").is_err());
        assert!(PdpTrace::parse("delay_ns,power_db\n0,-inf\n0.1,-inf\n").is_err());
    }

    #[test]
    fn offset_start_and_resampling() {
        let text = "delay_ns,power_db\n1,0\n1.0625,-3.01029996\n1.125,-inf\n1.1875,0\n";
        let t = PdpTrace::parse(text).unwrap();
        assert_eq!(t.start_delay, 1.0);
        assert_eq!(t.pdp.delay_resolution, 0.0625);
        let r = t.resample_to(1.0, 0.125, 3).unwrap();
        assert!((r.powers[0] - 1.5).abs() < 1e-8);
        assert!((r.powers[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.powers[2], 0.0);
    }

    proptest! {
        #[test]
        fn emit_parse_emit_is_stable(
            powers in prop::collection::vec(prop_oneof![Just(0.0), 1e-12f64..10.0], 2..50),
            res_us in 1_000u32..1_000_000,
            start_ps in 0u32..20_000,
        ) {
            // delays that are exact at 9 significant digits
            let res = res_us as f64 * 1e-6;
            let start = start_ps as f64 * 1e-3;
            prop_assume!(powers.iter().any(|&p| p > 0.0));
            let trace = PdpTrace {
                metadata: TraceMetadata::default(),
                start_delay: start,
                pdp: Pdp { powers, delay_resolution: res, normalized: false },
            };
            let once = trace.emit();
            let twice = PdpTrace::parse(&once).unwrap().emit();
            prop_assert_eq!(once, twice);
        }
    }
}
