use super::method::{Critical, PiMethodSpec, VarianceKind};
use super::{check_level, PredictionInterval};
use crate::dist::special::{norm_quantile, t_quantile};
use crate::error::Result;
use crate::estimate::ReFit;

/// `(1 - α/2)` quantile of the reference law for `k` studies.
pub fn critical_value(critical: Critical, k: usize, level: f64) -> Result<f64> {
    check_level(level)?;
    let p = 0.5 + 0.5 * level;
    match critical.df(k)? {
        None => Ok(norm_quantile(p)),
        Some(df) => t_quantile(df, p),
    }
}

/// Higgins–Thompson–Spiegelhalter interval `μ̂ ± c sqrt(τ̂² + V̂)`.
pub fn hts_pi(
    fit: &ReFit,
    critical: Critical,
    variance: VarianceKind,
    level: f64,
) -> Result<PredictionInterval> {
    let c = critical_value(critical, fit.k, level)?;
    let v = match variance {
        VarianceKind::InverseVariance => fit.var_iv,
        VarianceKind::Hksj => fit.var_hksj,
    };
    let half = c * (fit.tau2 + v).sqrt();
    Ok(PredictionInterval {
        lower: fit.mu_hat - half,
        upper: fit.mu_hat + half,
        level,
        method: PiMethodSpec::hts(fit.tau2_estimator, variance, critical),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{fit, MetaDataset, Tau2Estimator};

    fn toy_fit() -> ReFit {
        let d = MetaDataset::from_effects(vec![0.0, 2.0, 4.0], vec![1.0; 3]).unwrap();
        fit(&d, Tau2Estimator::DerSimonianLaird).unwrap()
    }

    #[test]
    fn hand_examples() {
        let f = toy_fit();
        let iv = VarianceKind::InverseVariance;
        let z = hts_pi(&f, Critical::Z, iv, 0.95).unwrap();
        assert!(
            (z.lower + 2.0800).abs() < 1e-3 && (z.upper - 6.0800).abs() < 1e-3,
            "{z:?}"
        );
        let t1 = hts_pi(&f, Critical::TKMinus1, iv, 0.95).unwrap();
        assert!(
            (t1.lower + 6.9567).abs() < 1e-3 && (t1.upper - 10.9567).abs() < 1e-3,
            "{t1:?}"
        );
        let t2 = hts_pi(&f, Critical::TKMinus2, iv, 0.95).unwrap();
        assert!(
            (t2.lower + 24.4501).abs() < 1e-3 && (t2.upper - 28.4501).abs() < 1e-3,
            "{t2:?}"
        );
    }

    #[test]
    fn zero_tau2_is_confidence_width() {
        let d = MetaDataset::from_effects(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let f = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        let pi = hts_pi(&f, Critical::Z, VarianceKind::InverseVariance, 0.95).unwrap();
        let c = critical_value(Critical::Z, 3, 0.95).unwrap();
        assert!((pi.upper - pi.lower - 2.0 * c * f.var_iv.sqrt()).abs() < 1e-12);
        assert!(pi.length() > 0.0);
    }

    #[test]
    fn k2_rejects_t_k_minus_2() {
        let d = MetaDataset::from_effects(vec![0.0, 1.0], vec![1.0; 2]).unwrap();
        let f = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        assert!(hts_pi(&f, Critical::TKMinus2, VarianceKind::InverseVariance, 0.95).is_err());
        assert!(hts_pi(&f, Critical::TKMinus1, VarianceKind::InverseVariance, 0.95).is_ok());
    }

    #[test]
    fn level_must_be_a_probability() {
        let f = toy_fit();
        assert!(hts_pi(&f, Critical::Z, VarianceKind::InverseVariance, 1.0).is_err());
        assert!(hts_pi(&f, Critical::Z, VarianceKind::InverseVariance, 0.0).is_err());
    }
}
