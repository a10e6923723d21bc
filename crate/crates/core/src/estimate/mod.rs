//! Random-effects estimation: heterogeneity statistics, τ² estimators and
//! the pooled mean with its variance estimates.

mod data;
mod fit;
mod heterogeneity;
mod reml;

pub use data::{MetaDataset, StudySummary};
pub(crate) use fit::pooled;
pub use fit::{fit, re_fit, ReFit, Tau2Estimator};
pub use heterogeneity::{cochran_q, HeterogeneityStats};
pub use reml::{restricted_loglik, tau2_reml, RemlEstimate, REML_MAX_ITER, REML_TOL};
