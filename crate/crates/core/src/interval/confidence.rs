//! Confidence distribution of τ² obtained by inverting the exact law of
//! Cochran's Q.
//!
//! Under the random-effects model with known within-study variances, the
//! observed `Q = Σ w_k (θ̂_k - θ̄_w)²` is a quadratic form in normals. Writing
//! `Σ = diag(σ̂²_k + τ²)` and `P = W - w wᵀ / Σw` with `W = diag(1/σ̂²_k)`,
//! `Q ~ Σ λ_k χ²₁` where `λ_k` are the eigenvalues of `Σ^{1/2} P Σ^{1/2}`.
//! The survival function `P(Q > q_obs; τ²)` increases in τ², and the
//! confidence-distribution draw for `u ~ U(0, 1)` is the τ² where it equals `u`,
//! truncated at zero.
//!
//! `Σ^{1/2} P Σ^{1/2} = D - a aᵀ` with `D = diag(1 + τ² w_k)` and
//! `a_k² = w_k (1 + τ² w_k) / Σw`, so the eigenvalues come from the secular
//! equation of a rank-one downdate rather than a dense eigen-solver.

use std::cell::Cell;

use crate::dist::special::norm_quantile;
use crate::dist::{Evaluator, WeightedChiSquare};
use crate::error::{Error, Result};
use crate::estimate::{cochran_q, MetaDataset};

/// Default root tolerance on τ² (relative above 1).
pub const DEFAULT_TAU2_TOL: f64 = 1e-8;

/// Upper limit of the bracket search. Draws with `u` very close to one map to
/// legitimately huge τ² for small K, so the cap sits far above any realistic
/// heterogeneity.
pub const TAU2_BRACKET_CAP: f64 = 1e30;

/// Relative eigenvalue floor below which a weight is treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

const TABLE_RATIO: f64 = 1.090_507_732_665_257_7; // 2^(1/8)
const ROOT_MAX_ITER: usize = 200;

/// Law of Q as a function of τ² for one dataset.
#[derive(Debug, Clone)]
pub struct Tau2ConfidenceDistribution {
    variances: Vec<f64>,
    fe_weights: Vec<f64>,
    sum_w: f64,
    q_obs: f64,
    tau2_dl: f64,
    mc_evaluations: Cell<usize>,
}

impl Tau2ConfidenceDistribution {
    pub fn new(d: &MetaDataset) -> Self {
        let het = cochran_q(d);
        let fe_weights: Vec<f64> = d.variances().iter().map(|v| 1.0 / v).collect();
        Self {
            variances: d.variances().to_vec(),
            sum_w: fe_weights.iter().sum(),
            fe_weights,
            q_obs: het.q,
            tau2_dl: het.tau2_dl,
            mc_evaluations: Cell::new(0),
        }
    }

    pub fn q_obs(&self) -> f64 {
        self.q_obs
    }

    /// Number of CDF evaluations that fell back to Monte Carlo so far.
    pub fn monte_carlo_evaluations(&self) -> usize {
        self.mc_evaluations.get()
    }

    /// Weighted chi-square representation of Q at `tau2`.
    pub fn q_law(&self, tau2: f64) -> Result<WeightedChiSquare> {
        let w = &self.fe_weights;
        let mut pairs: Vec<(f64, f64)> = w
            .iter()
            .map(|&wk| {
                let d = 1.0 + tau2 * wk;
                (d, wk * d / self.sum_w)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let eig = downdate_eigenvalues(&pairs);
        let max = eig.iter().copied().fold(0.0_f64, f64::max);
        if !(max > 0.0 && max.is_finite()) {
            return Err(Error::numeric(format!(
                "Q quadratic form has no positive eigenvalue at tau2 = {tau2}"
            )));
        }
        let lambdas = eig.into_iter().filter(|&l| l > EIGEN_FLOOR * max).collect();
        WeightedChiSquare::new(lambdas)
    }

    /// `P(Q ≤ q_obs; τ²)`.
    pub fn cdf_at_observed(&self, tau2: f64) -> Result<f64> {
        if self.q_obs <= 0.0 {
            return Ok(0.0);
        }
        let v = self.q_law(tau2)?.cdf_detailed(self.q_obs)?;
        if v.evaluator == Evaluator::MonteCarlo {
            self.mc_evaluations.set(self.mc_evaluations.get() + 1);
        }
        Ok(v.value)
    }

    /// `P(Q > q_obs; τ²)`.
    pub fn survival(&self, tau2: f64) -> Result<f64> {
        Ok(1.0 - self.cdf_at_observed(tau2)?)
    }

    /// Confidence-distribution quantile by bracketing bisection.
    pub fn quantile(&self, u: f64, tol: f64) -> Result<f64> {
        check_u(u)?;
        if !(tol > 0.0) {
            return Err(Error::param(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let target = 1.0 - u;
        if self.cdf_at_observed(0.0)? <= target {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, self.tau2_dl.max(1.0));
        while self.cdf_at_observed(hi)? > target {
            lo = hi;
            hi *= 2.0;
            if hi > TAU2_BRACKET_CAP {
                return Err(self.cap_error(u));
            }
        }
        while hi - lo > tol * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf_at_observed(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Batch sampler whose lookup table brackets every `u ≤ max_u`.
    pub fn sampler(&self, max_u: f64, tol: f64) -> Result<Tau2Sampler<'_>> {
        check_u(max_u)?;
        let mut nodes = vec![0.0];
        let mut cdfs = vec![self.cdf_at_observed(0.0)?];
        let target = 1.0 - max_u;
        if cdfs[0] > target {
            let mean_var = self.variances.iter().sum::<f64>() / self.variances.len() as f64;
            let base = 0.25 * self.tau2_dl.max(mean_var);
            let mut growth = 1.0;
            loop {
                growth *= TABLE_RATIO;
                let t = base * (growth - 1.0);
                if t > TAU2_BRACKET_CAP {
                    return Err(self.cap_error(max_u));
                }
                let c = self.cdf_at_observed(t)?;
                nodes.push(t);
                cdfs.push(c);
                if c <= target {
                    break;
                }
            }
        }
        Ok(Tau2Sampler {
            dist: self,
            nodes,
            cdfs,
            max_u,
            tol,
        })
    }

    fn cap_error(&self, u: f64) -> Error {
        Error::numeric(format!(
            "no tau2 below {TAU2_BRACKET_CAP:e} reaches survival {u} (q_obs = {}, K = {})",
            self.q_obs,
            self.variances.len()
        ))
    }
}

/// Nonzero eigenvalues of `diag(d) - b bᵀ` for `(d_i, b_i²)` sorted by `d`,
/// given that the smallest eigenvalue is zero.
///
/// Clusters of equal `d` contribute `d` with multiplicity one less than the
/// cluster size and merge their `b²`. Each remaining root lies strictly
/// between consecutive distinct `d` and is found by Illinois on the secular
/// function multiplied by both bracketing poles, which is smooth.
fn downdate_eigenvalues(pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pairs.len());
    let mut d: Vec<f64> = Vec::with_capacity(pairs.len());
    let mut b2: Vec<f64> = Vec::with_capacity(pairs.len());
    for &(dk, bk) in pairs {
        match d.last() {
            Some(&last) if dk - last <= 1e-14 * dk => {
                out.push(last);
                *b2.last_mut().unwrap() += bk;
            }
            _ => {
                d.push(dk);
                b2.push(bk);
            }
        }
    }
    for i in 1..d.len() {
        let (lo, hi) = (d[i - 1], d[i]);
        let gap = hi - lo;
        // shifted evaluation: λ = origin + x keeps d_j - λ accurate near a pole
        let h = |x: f64, origin: f64| -> f64 {
            let (left, right) = (x, gap - x);
            let mut f = 1.0;
            for (j, (&dj, &bj)) in d.iter().zip(&b2).enumerate() {
                if j != i - 1 && j != i {
                    f -= bj / ((dj - origin) - x);
                }
            }
            f * left * right + b2[i - 1] * right - b2[i] * left
        };
        let origin = lo;
        let (mut a, mut ha) = (0.0, b2[i - 1] * gap);
        let (mut b, mut hb) = (gap, -b2[i] * gap);
        let mut side = 0i8;
        let mut x = 0.5 * gap;
        for _ in 0..200 {
            let next = (a * hb - b * ha) / (hb - ha);
            x = if next > a && next < b {
                next
            } else {
                0.5 * (a + b)
            };
            let hx = h(x, origin);
            if hx == 0.0 || b - a <= 4.0 * f64::EPSILON * (origin + x) {
                break;
            }
            if hx > 0.0 {
                a = x;
                ha = hx;
                if side == 1 {
                    hb *= 0.5;
                }
                side = 1;
            } else {
                b = x;
                hb = hx;
                if side == -1 {
                    ha *= 0.5;
                }
                side = -1;
            }
            if b - a <= 2.0 * f64::EPSILON * (origin + b) {
                x = 0.5 * (a + b);
                break;
            }
        }
        out.push(origin + x);
    }
    out
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("u must lie in (0, 1), got {u}")))
    }
}

/// Inverts the confidence distribution for many `u` values.
///
/// A geometric table of τ² nodes brackets each root; the root is then refined
/// with the Illinois variant of regula falsi, which keeps the bracket and
/// converges superlinearly.
pub struct Tau2Sampler<'a> {
    dist: &'a Tau2ConfidenceDistribution,
    nodes: Vec<f64>,
    cdfs: Vec<f64>,
    max_u: f64,
    tol: f64,
}

impl Tau2Sampler<'_> {
    /// Cubic inverse interpolation of τ² against probit(CDF) through up to
    /// four nodes around the bracket `[j-1, j]`; midpoint if it misbehaves.
    fn initial_guess(&self, j: usize, z_target: f64) -> f64 {
        let (a, b) = (self.nodes[j - 1], self.nodes[j]);
        let lo = j.saturating_sub(2);
        let hi = (j + 2).min(self.nodes.len());
        let pts: Vec<(f64, f64)> = (lo..hi)
            .map(|i| (probit(self.cdfs[i]), self.nodes[i]))
            .filter(|p| p.0.is_finite())
            .collect();
        let mut x = 0.0;
        for (i, &(yi, xi)) in pts.iter().enumerate() {
            let mut l = xi;
            for (m, &(ym, _)) in pts.iter().enumerate() {
                if m != i {
                    l *= (z_target - ym) / (yi - ym);
                }
            }
            x += l;
        }
        if x > a && x < b {
            x
        } else {
            0.5 * (a + b)
        }
    }

    pub fn table_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn draw(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        if u > self.max_u {
            return Err(Error::param(format!(
                "u = {u} is above the sampler table limit {}",
                self.max_u
            )));
        }
        let target = 1.0 - u;
        if self.cdfs[0] <= target {
            return Ok(0.0);
        }
        // cdfs decrease along the table; first node at or below the target.
        // On the probit scale the CDF is smooth and nearly linear in τ², so a
        // cubic inverse interpolation through nearby nodes starts close to the
        // root and a bracketed secant finishes it.
        let j = self.cdfs.partition_point(|&c| c > target);
        if self.cdfs[j] == target {
            return Ok(self.nodes[j]);
        }
        let z_target = probit(target);
        let (mut a, mut b) = (self.nodes[j - 1], self.nodes[j]);
        let (mut ga, mut gb) = (
            probit(self.cdfs[j - 1]) - z_target,
            probit(self.cdfs[j]) - z_target,
        );
        let mut x = self.initial_guess(j, z_target);
        let mut prev: Option<(f64, f64)> = None;
        let mut width = b - a;
        for iter in 0..ROOT_MAX_ITER {
            let c = self.dist.cdf_at_observed(x)?;
            let gx = probit(c) - z_target;
            if c == target {
                return Ok(x);
            }
            if c > target {
                a = x;
                ga = gx;
            } else {
                b = x;
                gb = gx;
            }
            let scale = x.max(1.0);
            if b - a <= self.tol * scale {
                return Ok(0.5 * (a + b));
            }
            let slope = match prev {
                Some((xp, gp)) if xp != x && gp != gx => (gx - gp) / (x - xp),
                _ => (gb - ga) / (b - a),
            };
            let step = gx / slope;
            let next = x - step;
            if step.abs() <= self.tol * scale && next >= a && next <= b {
                return Ok(next);
            }
            prev = Some((x, gx));
            // fall back to bisection when the secant leaves the bracket or the
            // bracket stops shrinking
            x = if next > a && next < b && (iter % 3 != 2 || b - a < 0.5 * width) {
                next
            } else {
                0.5 * (a + b)
            };
            if iter % 3 == 2 {
                width = b - a;
            }
        }
        Err(Error::numeric(format!(
            "tau2 root for u = {u} not resolved in {ROOT_MAX_ITER} iterations"
        )))
    }
}

fn probit(c: f64) -> f64 {
    norm_quantile(c.clamp(1e-300, 1.0 - f64::EPSILON))
}

/// Draws τ² from the confidence distribution at probability `u`.
pub fn sample_tau2_confidence(d: &MetaDataset, u: f64, tol: f64) -> Result<f64> {
    Tau2ConfidenceDistribution::new(d).quantile(u, tol)
}
