//! Parametric bootstrap prediction interval.
//!
//! Predictive draws follow `θ̂_new = μ̂ + Z τ_b - T sqrt(V̂_HKSJ)` with
//! `Z ~ N(0, 1)`, `T ~ t_{K-1}` and `τ_b²` drawn from the confidence
//! distribution of τ². The interval is given by the empirical `α/2` and
//! `1 - α/2` quantiles of the draws.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StudentT};

use super::confidence::{Tau2ConfidenceDistribution, DEFAULT_TAU2_TOL};
use super::method::{PiMethodSpec, DEFAULT_BOOTSTRAP_DRAWS};
use super::{check_level, PredictionInterval};
use crate::error::{Error, Result};
use crate::estimate::{cochran_q, pooled, MetaDataset};
use crate::quantile::sorted_quantile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub draws: usize,
    /// Recompute `μ̂` and the HKSJ variance at each drawn τ² instead of
    /// holding the observed-data values fixed.
    pub recompute_weights: bool,
    pub tol: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            draws: DEFAULT_BOOTSTRAP_DRAWS,
            recompute_weights: false,
            tol: DEFAULT_TAU2_TOL,
        }
    }
}

/// Raw bootstrap output in draw order.
#[derive(Debug, Clone)]
pub struct BootstrapDraws {
    pub predictive: Vec<f64>,
    pub tau2: Vec<f64>,
    /// Weighted chi-square CDF evaluations that used the Monte-Carlo fallback.
    pub monte_carlo_evaluations: usize,
}

impl BootstrapDraws {
    pub fn interval(&self, level: f64) -> Result<PredictionInterval> {
        check_level(level)?;
        let mut sorted = self.predictive.clone();
        sorted.sort_by(f64::total_cmp);
        let alpha = 1.0 - level;
        Ok(PredictionInterval {
            lower: sorted_quantile(&sorted, 0.5 * alpha),
            upper: sorted_quantile(&sorted, 1.0 - 0.5 * alpha),
            level,
            method: PiMethodSpec::bootstrap(self.predictive.len()),
        })
    }
}

/// Generates the `B` predictive draws. Deterministic given the generator state.
pub fn bootstrap_draws<R: Rng + ?Sized>(
    d: &MetaDataset,
    opts: &BootstrapOptions,
    rng: &mut R,
) -> Result<BootstrapDraws> {
    PiMethodSpec::bootstrap(opts.draws).validate()?;
    let k = d.k();
    let tau2_dl = cochran_q(d).tau2_dl;
    let (mu_hat, _, var_hksj, _) = pooled(d, tau2_dl);
    let t_law = StudentT::new((k - 1) as f64).map_err(Error::param)?;

    let mut u: Vec<f64> = Vec::with_capacity(opts.draws);
    let mut z: Vec<f64> = Vec::with_capacity(opts.draws);
    let mut t: Vec<f64> = Vec::with_capacity(opts.draws);
    for _ in 0..opts.draws {
        u.push(Open01.sample(rng));
        z.push(StandardNormal.sample(rng));
        t.push(t_law.sample(rng));
    }

    let cd = Tau2ConfidenceDistribution::new(d);
    let max_u = u.iter().copied().fold(0.0, f64::max);
    let sampler = cd.sampler(max_u, opts.tol)?;
    let tau2 = u
        .iter()
        .map(|&ub| sampler.draw(ub))
        .collect::<Result<Vec<f64>>>()?;

    let predictive = tau2
        .iter()
        .zip(z.iter().zip(&t))
        .map(|(&tau2_b, (&zb, &tb))| {
            let tau_b = tau2_b.max(0.0).sqrt();
            if opts.recompute_weights {
                let (mu_b, _, var_b, _) = pooled(d, tau2_b);
                mu_b + zb * tau_b - tb * var_b.sqrt()
            } else {
                mu_hat + zb * tau_b - tb * var_hksj.sqrt()
            }
        })
        .collect();

    Ok(BootstrapDraws {
        predictive,
        tau2,
        monte_carlo_evaluations: cd.monte_carlo_evaluations(),
    })
}

/// Parametric bootstrap prediction interval at `level`.
pub fn bootstrap_pi<R: Rng + ?Sized>(
    d: &MetaDataset,
    level: f64,
    opts: &BootstrapOptions,
    rng: &mut R,
) -> Result<PredictionInterval> {
    check_level(level)?;
    bootstrap_draws(d, opts, rng)?.interval(level)
}
