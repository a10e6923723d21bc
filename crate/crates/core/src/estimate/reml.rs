use serde::Serialize;

use super::data::MetaDataset;
use super::fit::weighted_mean;
use super::heterogeneity::cochran_q;
use crate::error::{Error, Result};

pub const REML_MAX_ITER: usize = 200;
pub const REML_TOL: f64 = 1e-10;

/// Converged REML estimate with iteration metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemlEstimate {
    pub tau2: f64,
    pub iterations: usize,
    pub damped: bool,
}

/// One application of the REML estimating equation at `tau2`.
fn reml_update(d: &MetaDataset, tau2: f64) -> f64 {
    let w: Vec<f64> = d.variances().iter().map(|v| 1.0 / (v + tau2)).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let mu = weighted_mean(d.effects(), &w);
    let num: f64 = w
        .iter()
        .zip(d.effects().iter().zip(d.variances()))
        .map(|(w, (y, v))| w * w * ((y - mu).powi(2) - v))
        .sum();
    num / sw2 + 1.0 / sw
}

/// Restricted maximum likelihood estimate of τ², truncated at zero.
///
/// Fixed-point iteration started at the DL estimate; a step is halved when
/// its sign flips relative to the previous step.
pub fn tau2_reml(d: &MetaDataset) -> Result<RemlEstimate> {
    let mut tau2 = cochran_q(d).tau2_dl;
    let mut prev_step = 0.0_f64;
    let mut damped = false;
    for it in 1..=REML_MAX_ITER {
        let target = reml_update(d, tau2).max(0.0);
        let mut step = target - tau2;
        if step * prev_step < 0.0 {
            step *= 0.5;
            damped = true;
        }
        let next = (tau2 + step).max(0.0);
        if !next.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                last: tau2,
            });
        }
        if (next - tau2).abs() < REML_TOL {
            return Ok(RemlEstimate {
                tau2: next,
                iterations: it,
                damped,
            });
        }
        prev_step = next - tau2;
        tau2 = next;
    }
    Err(Error::NonConvergence {
        iterations: REML_MAX_ITER,
        last: tau2,
    })
}

/// Restricted log-likelihood of τ² (up to a constant).
pub fn restricted_loglik(d: &MetaDataset, tau2: f64) -> f64 {
    let w: Vec<f64> = d.variances().iter().map(|v| 1.0 / (v + tau2)).collect();
    let sw: f64 = w.iter().sum();
    let mu = weighted_mean(d.effects(), &w);
    let rss: f64 = w
        .iter()
        .zip(d.effects())
        .map(|(w, y)| w * (y - mu).powi(2))
        .sum();
    let logdet: f64 = w.iter().map(|w| -w.ln()).sum();
    -0.5 * (logdet + sw.ln() + rss)
}
