//! Receiver misalignment geometry.
//!
//! The total misalignment between Tx and Rx boresights is composed from the
//! elevation offset `theta` and the azimuth offset `phi`:
//!
//! ```text
//! cos(psi) = cos(theta) * cos(phi)
//! ```
//!
//! Parameter sets are keyed by angular bin: exact alignment (LOS),
//! `(0°, 10°]` and everything above 10°.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance (degrees) under which a misalignment counts as LOS.
pub const LOS_TOLERANCE_DEG: f64 = 1e-9;

/// Upper edge of the near bin, degrees.
pub const NEAR_BIN_EDGE_DEG: f64 = 10.0;

/// Largest misalignment covered by the tabulated far-bin parameters.
pub const MEASURED_RANGE_DEG: f64 = 25.0;

/// Elevation and azimuth misalignment of the receiver, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularPose {
    pub theta: f64,
    pub phi: f64,
}

impl AngularPose {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let pose = AngularPose { theta, phi };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("phi", self.phi)] {
            if !v.is_finite() || !(-90.0..=90.0).contains(&v) {
                return Err(Error::domain(format!(
                    "{name} = {v} deg is outside [-90, 90]"
                )));
            }
        }
        Ok(())
    }

    /// Total misalignment angle psi in degrees.
    pub fn total_misalignment(&self) -> f64 {
        total_misalignment(self.theta, self.phi)
    }
}

/// Total misalignment `acos(cos(theta) cos(phi))` in degrees.
///
/// Evaluated through the half-angle identity
/// `sin²(psi/2) = a + b - 2ab` with `a = sin²(theta/2)`, `b = sin²(phi/2)`,
/// which is algebraically identical to the arc-cosine form but keeps full
/// precision for angles close to zero.
pub fn total_misalignment(theta_deg: f64, phi_deg: f64) -> f64 {
    let a = (theta_deg.to_radians() / 2.0).sin().powi(2);
    let b = (phi_deg.to_radians() / 2.0).sin().powi(2);
    let half = (a + b - 2.0 * a * b).clamp(0.0, 1.0).sqrt();
    (2.0 * half.asin()).to_degrees()
}

/// Angular range used to select a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MisalignmentBin {
    /// Perfect alignment, psi = 0.
    Los,
    /// psi in (0°, 10°].
    Near,
    /// psi above 10°, open-ended.
    Far,
}

impl MisalignmentBin {
    pub const ALL: [MisalignmentBin; 3] =
        [MisalignmentBin::Los, MisalignmentBin::Near, MisalignmentBin::Far];

    pub fn as_str(&self) -> &'static str {
        match self {
            MisalignmentBin::Los => "los",
            MisalignmentBin::Near => "near",
            MisalignmentBin::Far => "far",
        }
    }
}

impl fmt::Display for MisalignmentBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MisalignmentBin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "los" => Ok(MisalignmentBin::Los),
            "near" => Ok(MisalignmentBin::Near),
            "far" => Ok(MisalignmentBin::Far),
            other => Err(Error::domain(format!("unknown misalignment bin '{other}'"))),
        }
    }
}

/// Bin for a total misalignment angle in degrees.
pub fn bin_for(psi_deg: f64) -> Result<MisalignmentBin> {
    if psi_deg.is_nan() || psi_deg < 0.0 {
        return Err(Error::domain(format!(
            "misalignment must be non-negative, got {psi_deg}"
        )));
    }
    Ok(if psi_deg <= LOS_TOLERANCE_DEG {
        MisalignmentBin::Los
    } else if psi_deg <= NEAR_BIN_EDGE_DEG {
        MisalignmentBin::Near
    } else {
        MisalignmentBin::Far
    })
}

/// True when psi lies beyond the angular range the parameter tables were
/// measured over and the far-bin parameters are reused.
pub fn is_extrapolated(psi_deg: f64) -> bool {
    psi_deg > MEASURED_RANGE_DEG
}
