use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared across the toolkit.
///
/// `herm` is relative to the Frobenius norm, `psd` relative to the largest
/// eigenvalue, `trace` absolute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub psd: f64,
    pub trace: f64,
    /// Relative eigenvalue cut used for ranks and range bases.
    pub rank: f64,
    /// Residual allowed when checking membership of a range in an EB span.
    pub eb: f64,
    /// Target violation for PPT-mixture feasible points.
    pub feasibility: f64,
    /// Per-cut residual accepted for witness decompositions.
    pub decomposition: f64,
    /// Threshold below which a Schmidt-rank-two expectation counts as negative.
    pub distill: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            psd: 1e-9,
            trace: 1e-10,
            rank: 1e-10,
            eb: 1e-10,
            feasibility: 1e-9,
            decomposition: 1e-8,
            distill: 1e-10,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] =
        ["herm", "psd", "trace", "rank", "eb", "feasibility", "decomposition", "distill"];

    /// Apply a single `key=value` override. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Parameter(format!("tolerance `{key}` must be positive, got {value}")));
        }
        let slot = match key {
            "herm" => &mut self.herm,
            "psd" => &mut self.psd,
            "trace" => &mut self.trace,
            "rank" => &mut self.rank,
            "eb" => &mut self.eb,
            "feasibility" => &mut self.feasibility,
            "decomposition" => &mut self.decomposition,
            "distill" => &mut self.distill,
            other => return Err(Error::Parameter(format!("unknown tolerance key `{other}`"))),
        };
        *slot = value;
        Ok(())
    }
}
