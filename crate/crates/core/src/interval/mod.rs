//! Prediction-interval constructions.

mod bootstrap;
mod confidence;
mod ensemble;
mod hts;
mod method;

use serde::Serialize;

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_draws, bootstrap_pi, BootstrapDraws, BootstrapOptions};
pub use confidence::{
    sample_tau2_confidence, Tau2ConfidenceDistribution, Tau2Sampler, DEFAULT_TAU2_TOL, EIGEN_FLOOR,
    TAU2_BRACKET_CAP,
};
pub use ensemble::{ensemble_pi, shrunken_effects};
pub use hts::{critical_value, hts_pi};
pub use method::{
    Critical, IntervalKind, PiMethodSpec, Preset, VarianceKind, DEFAULT_BOOTSTRAP_DRAWS,
    MIN_BOOTSTRAP_DRAWS,
};

/// A realized prediction interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: PiMethodSpec,
}

impl PredictionInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// Open-interval membership.
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }

    /// True for the single-point ensemble interval.
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "level must lie in (0, 1), got {level}"
        )))
    }
}
