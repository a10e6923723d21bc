//! Random-effects meta-analysis prediction intervals and a simulation
//! laboratory for their coverage distribution.
//!
//! * [`estimate`]: Cochran's Q, I², DerSimonian–Laird and REML τ², pooled
//!   mean with inverse-variance and HKSJ variances.
//! * [`interval`]: HTS intervals, the ensemble interval and the parametric
//!   bootstrap driven by the confidence distribution of τ².
//! * [`dist`]: true-effect families and the weighted chi-square law of Q.
//! * [`sim`]: scenario grid, data generation, coverage and length measures.
//! * [`io`]: study tables, simulation configs and CSV exports.

pub mod dist;
pub mod error;
pub mod estimate;
pub mod interval;
pub mod io;
pub mod quantile;
pub mod sim;

pub use dist::{Family, TrueEffectDist, WeightedChiSquare};
pub use error::{Error, Result};
pub use estimate::{
    cochran_q, fit, re_fit, tau2_reml, HeterogeneityStats, MetaDataset, ReFit, StudySummary,
    Tau2Estimator,
};
pub use interval::{PiMethodSpec, PredictionInterval, Preset};
