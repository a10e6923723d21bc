use serde::Serialize;

use crate::dist::TrueEffectDist;
use crate::error::{Error, Result};
use crate::interval::PredictionInterval;
use crate::quantile::median;

/// Threshold of the ">99%" coverage tally.
pub const HIGH_COVERAGE: f64 = 0.99;

/// True-effect mass inside the interval, `F(U) - F(L)` clamped to [0, 1].
pub fn coverage(pi: &PredictionInterval, d: &TrueEffectDist) -> f64 {
    coverage_between(pi.lower, pi.upper, d)
}

pub(crate) fn coverage_between(lower: f64, upper: f64, d: &TrueEffectDist) -> f64 {
    if !(upper > lower) {
        return 0.0;
    }
    (d.cdf_unchecked(upper) - d.cdf_unchecked(lower)).clamp(0.0, 1.0)
}

/// `q(0.975) - q(0.025)` of the true-effect distribution.
pub fn theoretical_length(d: &TrueEffectDist) -> Result<f64> {
    theoretical_length_at(d, 0.95)
}

/// Central `level` range of the true-effect distribution.
pub fn theoretical_length_at(d: &TrueEffectDist, level: f64) -> Result<f64> {
    let a = 0.5 * (1.0 - level);
    Ok(d.quantile(1.0 - a)? - d.quantile(a)?)
}

/// Equal-width bins on [0, 1]; the last bin is closed so C = 1 is counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        Self {
            counts: vec![0; bins.max(1)],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, c: f64) {
        let n = self.bins();
        let i = ((c.clamp(0.0, 1.0) * n as f64) as usize).min(n - 1);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(bin_lo, bin_hi, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let n = self.bins() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i as f64 / n, (i + 1) as f64 / n, c))
    }
}

/// Coverage and length measures of one method over the successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageStats {
    pub n: usize,
    pub mean_c: f64,
    pub median_c: f64,
    /// `E|C - (1 - α)|`.
    pub mean_abs_dev: f64,
    /// `E[L / L_T]`.
    pub mean_rel_length: f64,
    /// `E|L - L_T| / L_T`.
    pub norm_mae: f64,
    pub prop_c_gt_99: f64,
    /// `(β, P̂[C ≥ β])` for each requested β.
    pub tolerance_content: Vec<(f64, f64)>,
    pub histogram: Histogram,
}

/// Summary measures from per-replicate coverages and lengths.
pub fn summarize(
    coverages: &[f64],
    lengths: &[f64],
    l_t: f64,
    nominal: f64,
    betas: &[f64],
    bins: usize,
) -> Result<CoverageStats> {
    if coverages.is_empty() {
        return Err(Error::param("cannot summarize an empty set of replicates"));
    }
    if coverages.len() != lengths.len() {
        return Err(Error::param(format!(
            "{} coverages but {} lengths",
            coverages.len(),
            lengths.len()
        )));
    }
    if !(l_t > 0.0) {
        return Err(Error::param(format!(
            "theoretical length must be positive, got {l_t}"
        )));
    }
    let n = coverages.len() as f64;
    let mean = |xs: &mut dyn Iterator<Item = f64>| xs.sum::<f64>() / n;
    let mut histogram = Histogram::new(bins);
    for &c in coverages {
        histogram.add(c);
    }
    Ok(CoverageStats {
        n: coverages.len(),
        mean_c: mean(&mut coverages.iter().copied()),
        median_c: median(coverages),
        mean_abs_dev: mean(&mut coverages.iter().map(|c| (c - nominal).abs())),
        mean_rel_length: mean(&mut lengths.iter().map(|l| l / l_t)),
        norm_mae: mean(&mut lengths.iter().map(|l| (l - l_t).abs() / l_t)),
        prop_c_gt_99: mean(
            &mut coverages
                .iter()
                .map(|&c| f64::from(u8::from(c > HIGH_COVERAGE))),
        ),
        tolerance_content: betas
            .iter()
            .map(|&b| {
                (
                    b,
                    mean(&mut coverages.iter().map(|&c| f64::from(u8::from(c >= b)))),
                )
            })
            .collect(),
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Family;
    use crate::interval::PiMethodSpec;

    fn pi(lower: f64, upper: f64) -> PredictionInterval {
        PredictionInterval {
            lower,
            upper,
            level: 0.95,
            method: PiMethodSpec::ensemble(),
        }
    }

    #[test]
    fn coverage_examples() {
        let n = TrueEffectDist::normal(0.0, 1.0).unwrap();
        assert!((coverage(&pi(-1.959964, 1.959964), &n) - 0.95).abs() < 1e-6);
        assert_eq!(coverage(&pi(0.3, 0.3), &n), 0.0);
        let u = TrueEffectDist::new(Family::Uniform, 0.0, 1.0).unwrap();
        assert!((coverage(&pi(-3f64.sqrt(), 0.0), &u) - 0.5).abs() < 1e-15);
        assert_eq!(coverage(&pi(-5.0, 5.0), &u), 1.0);
    }

    #[test]
    fn theoretical_length_examples() {
        let n = TrueEffectDist::normal(0.0, 1.0).unwrap();
        assert!((theoretical_length(&n).unwrap() - 3.919928).abs() < 1e-5);
        let n = TrueEffectDist::normal(0.0, 0.2).unwrap();
        assert!((theoretical_length(&n).unwrap() - 1.753055).abs() < 1e-5);
        let u = TrueEffectDist::new(Family::Uniform, 0.0, 1.0).unwrap();
        assert!((theoretical_length(&u).unwrap() - 3.290897).abs() < 1e-6);
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[0.90, 0.95, 1.00], &[4.0; 3], 4.0, 0.95, &[], 10).unwrap();
        assert!((s.mean_c - 0.95).abs() < 1e-12);
        assert!((s.median_c - 0.95).abs() < 1e-12);
        assert!((s.mean_abs_dev - 0.033333).abs() < 1e-6);
        assert_eq!(s.prop_c_gt_99, 1.0 / 3.0);

        let s = summarize(&[0.9, 0.9], &[2.0, 4.0], 4.0, 0.95, &[], 10).unwrap();
        assert!((s.mean_rel_length - 0.75).abs() < 1e-12);
        assert!((s.norm_mae - 0.25).abs() < 1e-12);

        let s = summarize(&[0.7, 0.85, 0.9, 0.99], &[1.0; 4], 1.0, 0.95, &[0.8], 100).unwrap();
        assert_eq!(s.tolerance_content, [(0.8, 0.75)]);
        assert_eq!(s.histogram.total(), 4);
    }

    #[test]
    fn mean_abs_dev_dominates_bias() {
        let cs = [0.2, 0.97, 0.999, 0.5, 0.93];
        let s = summarize(&cs, &[1.0; 5], 1.0, 0.95, &[], 100).unwrap();
        assert!(s.mean_abs_dev >= (s.mean_c - 0.95).abs());
    }

    #[test]
    fn histogram_edges() {
        let mut h = Histogram::new(100);
        for c in [0.0, 0.005, 0.01, 0.5, 0.999, 1.0] {
            h.add(c);
        }
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[50], 1);
        assert_eq!(h.counts[99], 2);
        assert_eq!(h.total(), 6);
        let rows: Vec<_> = h.rows().collect();
        assert_eq!(rows[0].0, 0.0);
        assert_eq!(rows[99].1, 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[], &[], 1.0, 0.95, &[], 10).is_err());
    }
}
