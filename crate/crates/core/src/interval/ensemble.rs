use super::method::PiMethodSpec;
use super::{check_level, PredictionInterval};
use crate::error::Result;
use crate::estimate::{MetaDataset, ReFit};
use crate::quantile::sorted_quantile;

/// Effects pulled towards `μ̂` by `sqrt(τ̂² / (τ̂² + σ̂²_k))`.
pub fn shrunken_effects(d: &MetaDataset, fit: &ReFit) -> Vec<f64> {
    d.effects()
        .iter()
        .zip(d.variances())
        .map(|(&y, &v)| {
            let factor = if fit.tau2 > 0.0 {
                (fit.tau2 / (fit.tau2 + v)).sqrt()
            } else {
                0.0
            };
            fit.mu_hat + factor * (y - fit.mu_hat)
        })
        .collect()
}

/// Ensemble interval: empirical quantiles of the shrunken effects.
/// With `τ̂² = 0` every shrunken effect equals `μ̂` and the interval is the
/// single point `(μ̂, μ̂)`.
pub fn ensemble_pi(d: &MetaDataset, fit: &ReFit, level: f64) -> Result<PredictionInterval> {
    check_level(level)?;
    let alpha = 1.0 - level;
    let mut shrunk = shrunken_effects(d, fit);
    shrunk.sort_by(f64::total_cmp);
    Ok(PredictionInterval {
        lower: sorted_quantile(&shrunk, 0.5 * alpha),
        upper: sorted_quantile(&shrunk, 1.0 - 0.5 * alpha),
        level,
        method: PiMethodSpec::ensemble(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{fit, Tau2Estimator};

    #[test]
    fn degenerate_when_tau2_is_zero() {
        let d = MetaDataset::from_effects(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let f = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        let pi = ensemble_pi(&d, &f, 0.95).unwrap();
        assert_eq!((pi.lower, pi.upper), (1.0, 1.0));
        assert!(pi.is_degenerate());
    }

    #[test]
    fn hand_example() {
        let d = MetaDataset::from_effects(vec![0.0, 2.0, 4.0], vec![1.0; 3]).unwrap();
        let f = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        let s = shrunken_effects(&d, &f);
        let expect = [2.0 - 3f64.sqrt(), 2.0, 2.0 + 3f64.sqrt()];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s[0] - 0.267949).abs() < 1e-6);
        // type-7 positions: h - 1 = 0.05 and 1.95
        let pi = ensemble_pi(&d, &f, 0.95).unwrap();
        let lo = expect[0] + 0.05 * (expect[1] - expect[0]);
        let hi = expect[1] + 0.95 * (expect[2] - expect[1]);
        assert!((pi.lower - lo).abs() < 1e-12 && (pi.upper - hi).abs() < 1e-12);
    }

    #[test]
    fn equal_variances_scale_raw_quantiles() {
        let y = vec![-1.0, 0.4, 0.9, 2.5, 3.1];
        let d = MetaDataset::from_effects(y.clone(), vec![0.5; 5]).unwrap();
        let f = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        assert!(f.tau2 > 0.0);
        let factor = (f.tau2 / (f.tau2 + 0.5)).sqrt();
        let pi = ensemble_pi(&d, &f, 0.95).unwrap();
        let raw_lo = crate::quantile::quantile(&y, 0.025);
        let raw_hi = crate::quantile::quantile(&y, 0.975);
        assert!((pi.lower - (f.mu_hat + factor * (raw_lo - f.mu_hat))).abs() < 1e-12);
        assert!((pi.upper - (f.mu_hat + factor * (raw_hi - f.mu_hat))).abs() < 1e-12);
    }
}
