use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::generate::generate_dataset;
use super::grid::Scenario;
use super::measures::{coverage, summarize, theoretical_length_at, CoverageStats};
use super::rng::{substream, Stream};
use crate::dist::TrueEffectDist;
use crate::error::{Error, Result};
use crate::estimate::{fit, MetaDataset, ReFit, Tau2Estimator};
use crate::interval::{
    bootstrap_draws, ensemble_pi, hts_pi, BootstrapOptions, IntervalKind, PredictionInterval,
    Preset,
};

/// Largest tolerated share of failed replicates per method.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Why a method produced no interval for a replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    RemlNonConvergence,
    DegreesOfFreedom,
    Numeric,
    InvalidParameter,
    InvalidDataset,
    NonFiniteBounds,
    Other,
}

impl FailureReason {
    pub fn code(self) -> &'static str {
        match self {
            FailureReason::RemlNonConvergence => "reml_nonconvergence",
            FailureReason::DegreesOfFreedom => "degrees_of_freedom",
            FailureReason::Numeric => "numeric",
            FailureReason::InvalidParameter => "invalid_parameter",
            FailureReason::InvalidDataset => "invalid_dataset",
            FailureReason::NonFiniteBounds => "non_finite_bounds",
            FailureReason::Other => "other",
        }
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::NonConvergence { .. } => FailureReason::RemlNonConvergence,
            Error::DegreesOfFreedom(_) => FailureReason::DegreesOfFreedom,
            Error::Numeric(_) => FailureReason::Numeric,
            Error::Parameter(_) => FailureReason::InvalidParameter,
            Error::Dataset(_) => FailureReason::InvalidDataset,
            _ => FailureReason::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MethodOutcome {
    Interval {
        lower: f64,
        upper: f64,
        /// `F(U) - F(L)` under the scenario's true-effect law.
        coverage: f64,
        length: f64,
        /// Whether the replicate's independent new true effect fell inside.
        covers_new: bool,
    },
    Failed {
        reason: FailureReason,
    },
    /// Beyond the method's replicate budget (bootstrap runs fewer).
    Skipped,
}

/// Everything recorded for one replicate. `outcomes` follows the order of
/// the run's method list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub rep: usize,
    pub q: f64,
    pub i2: f64,
    pub tau2_dl: f64,
    pub tau2_reml: Option<f64>,
    pub mu_hat: f64,
    pub theta_new: f64,
    /// Weighted chi-square evaluations that fell back to Monte Carlo.
    pub cdf_fallbacks: usize,
    pub outcomes: Vec<MethodOutcome>,
}

impl ReplicateRecord {
    pub fn any_failure(&self) -> bool {
        self.outcomes
            .iter()
            .any(|o| matches!(o, MethodOutcome::Failed { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Preset,
    pub attempted: usize,
    pub failures: usize,
    pub failure_reasons: BTreeMap<&'static str, usize>,
    /// `None` when no replicate succeeded.
    pub stats: Option<CoverageStats>,
    /// Share of successful replicates whose interval held the new true effect.
    pub theta_new_freq: f64,
    pub mean_length: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub index: usize,
    pub k: usize,
    pub n: String,
    pub tau2: f64,
    pub mu: f64,
    pub dist: String,
    pub reps: usize,
    pub l_t: f64,
    pub v: f64,
    /// Mean I² over replicates in which every method succeeded.
    pub mean_i2: f64,
    pub cdf_fallbacks: usize,
    pub methods: Vec<MethodSummary>,
}

impl ScenarioSummary {
    pub fn method(&self, m: Preset) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    pub fn total_failures(&self) -> usize {
        self.methods.iter().map(|m| m.failures).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub records: Vec<ReplicateRecord>,
    pub summary: ScenarioSummary,
}

/// Runs every replicate of `s` and summarizes them.
///
/// Replicates run in parallel on the current rayon pool; results depend only
/// on the master seed. A method failing in more than 1% of its replicates
/// aborts the scenario.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun> {
    let settings = &s.settings;
    if settings.methods.is_empty() {
        return Err(Error::Config(vec!["methods must not be empty".into()]));
    }
    let dist = s.true_dist()?;
    let l_t = theoretical_length_at(&dist, settings.level())?;
    let records = (0..settings.reps)
        .into_par_iter()
        .map(|rep| run_replicate(s, &dist, rep))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_scenario(s, &records, l_t)?;
    for m in &summary.methods {
        if m.attempted > 0 && m.failures as f64 > MAX_FAILURE_RATE * m.attempted as f64 {
            let reasons: Vec<String> = m
                .failure_reasons
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            return Err(Error::FailureThreshold {
                scenario: s.dir_name(),
                method: m.method.label(),
                failures: m.failures,
                attempted: m.attempted,
                reasons: reasons.join(","),
            });
        }
    }
    Ok(ScenarioRun { records, summary })
}

/// One replicate of `s`. Deterministic in (master seed, scenario index, `rep`).
pub fn run_replicate(s: &Scenario, dist: &TrueEffectDist, rep: usize) -> Result<ReplicateRecord> {
    let settings = &s.settings;
    let (seed, idx, r) = (settings.master_seed, s.index as u64, rep as u64);
    let generated = generate_dataset(s, dist, &mut substream(seed, idx, r, Stream::Dataset))?;
    let theta_new = dist.sample(&mut substream(seed, idx, r, Stream::NewEffect));
    let d = &generated.dataset;
    let dl = fit(d, Tau2Estimator::DerSimonianLaird)?;
    let reml = fit(d, Tau2Estimator::Reml);
    let level = settings.level();
    let mut cdf_fallbacks = 0;

    let outcomes = settings
        .methods
        .iter()
        .map(|&m| {
            if rep >= settings.reps_for(m) {
                return MethodOutcome::Skipped;
            }
            let spec = m.spec(settings.bootstrap_draws);
            let pi: Result<PredictionInterval, FailureReason> = match spec.kind {
                IntervalKind::Hts => {
                    let f: Result<&ReFit, FailureReason> = match spec.tau2_estimator {
                        Tau2Estimator::DerSimonianLaird => Ok(&dl),
                        Tau2Estimator::Reml => reml.as_ref().map_err(FailureReason::from_error),
                    };
                    f.and_then(|f| {
                        hts_pi(f, spec.critical, spec.variance, level)
                            .map_err(|e| FailureReason::from_error(&e))
                    })
                }
                IntervalKind::Ensemble => {
                    ensemble_pi(d, &dl, level).map_err(|e| FailureReason::from_error(&e))
                }
                IntervalKind::Bootstrap => bootstrap_interval(d, s, rep, level, &mut cdf_fallbacks),
            };
            match pi {
                Ok(pi) if pi.lower.is_finite() && pi.upper.is_finite() => MethodOutcome::Interval {
                    lower: pi.lower,
                    upper: pi.upper,
                    coverage: coverage(&pi, dist),
                    length: pi.length(),
                    covers_new: pi.contains(theta_new),
                },
                Ok(_) => MethodOutcome::Failed {
                    reason: FailureReason::NonFiniteBounds,
                },
                Err(reason) => MethodOutcome::Failed { reason },
            }
        })
        .collect();

    Ok(ReplicateRecord {
        rep,
        q: dl.het.q,
        i2: dl.het.i2,
        tau2_dl: dl.tau2,
        tau2_reml: reml.as_ref().ok().map(|f| f.tau2),
        mu_hat: dl.mu_hat,
        theta_new,
        cdf_fallbacks,
        outcomes,
    })
}

fn bootstrap_interval(
    d: &MetaDataset,
    s: &Scenario,
    rep: usize,
    level: f64,
    fallbacks: &mut usize,
) -> Result<PredictionInterval, FailureReason> {
    let settings = &s.settings;
    let opts = BootstrapOptions {
        draws: settings.bootstrap_draws,
        recompute_weights: settings.recompute_weights,
        ..Default::default()
    };
    let mut rng = substream(
        settings.master_seed,
        s.index as u64,
        rep as u64,
        Stream::Bootstrap,
    );
    let draws = bootstrap_draws(d, &opts, &mut rng).map_err(|e| FailureReason::from_error(&e))?;
    *fallbacks += draws.monte_carlo_evaluations;
    draws
        .interval(level)
        .map_err(|e| FailureReason::from_error(&e))
}

/// Aggregates records in replicate order.
pub fn summarize_scenario(
    s: &Scenario,
    records: &[ReplicateRecord],
    l_t: f64,
) -> Result<ScenarioSummary> {
    let settings = &s.settings;
    let mut methods = Vec::with_capacity(settings.methods.len());
    for (j, &m) in settings.methods.iter().enumerate() {
        let mut cov = Vec::new();
        let mut len = Vec::new();
        let mut hits = 0usize;
        let mut attempted = 0;
        let mut degenerate = 0;
        let mut failure_reasons = BTreeMap::new();
        for r in records {
            match r.outcomes[j] {
                MethodOutcome::Interval {
                    coverage,
                    length,
                    covers_new,
                    ..
                } => {
                    attempted += 1;
                    cov.push(coverage);
                    len.push(length);
                    hits += usize::from(covers_new);
                    degenerate += usize::from(length == 0.0);
                }
                MethodOutcome::Failed { reason } => {
                    attempted += 1;
                    *failure_reasons.entry(reason.code()).or_insert(0) += 1;
                }
                MethodOutcome::Skipped => {}
            }
        }
        let stats = if cov.is_empty() {
            None
        } else {
            Some(summarize(
                &cov,
                &len,
                l_t,
                settings.level(),
                &settings.betas,
                settings.histogram_bins,
            )?)
        };
        let n = cov.len().max(1) as f64;
        methods.push(MethodSummary {
            method: m,
            attempted,
            failures: attempted - cov.len(),
            failure_reasons,
            stats,
            theta_new_freq: hits as f64 / n,
            mean_length: len.iter().sum::<f64>() / n,
            degenerate,
        });
    }
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| !r.any_failure()).collect();
    let mean_i2 = if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().map(|r| r.i2).sum::<f64>() / ok.len() as f64
    };
    Ok(ScenarioSummary {
        index: s.index,
        k: s.k,
        n: s.sample_size.tag(),
        tau2: s.tau2,
        mu: s.mu,
        dist: s.family.to_string(),
        reps: records.len(),
        l_t,
        v: s.v(),
        mean_i2,
        cdf_fallbacks: records.iter().map(|r| r.cdf_fallbacks).sum(),
        methods,
    })
}
