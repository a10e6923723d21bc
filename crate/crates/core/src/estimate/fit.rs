use serde::{Deserialize, Serialize};

use super::data::MetaDataset;
use super::heterogeneity::{cochran_q, HeterogeneityStats};
use super::reml::tau2_reml;
use crate::error::{Error, Result};

/// Estimator used for the between-study variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tau2Estimator {
    #[serde(rename = "DL")]
    DerSimonianLaird,
    #[serde(rename = "REML")]
    Reml,
}

impl Tau2Estimator {
    pub fn abbrev(self) -> &'static str {
        match self {
            Tau2Estimator::DerSimonianLaird => "DL",
            Tau2Estimator::Reml => "REML",
        }
    }
}

/// Random-effects fit at a given τ².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReFit {
    pub k: usize,
    pub mu_hat: f64,
    /// Inverse-variance estimate `1 / Σ w*_k`.
    pub var_iv: f64,
    /// Hartung–Knapp–Sidik–Jonkman estimate.
    pub var_hksj: f64,
    pub tau2: f64,
    pub tau2_estimator: Tau2Estimator,
    /// `w*_k = 1 / (σ̂²_k + τ²)`.
    pub weights: Vec<f64>,
    pub het: HeterogeneityStats,
}

/// Weighted mean centred on the first value, so equal values are returned
/// exactly.
pub(crate) fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let y0 = values[0];
    let sw: f64 = weights.iter().sum();
    y0 + weights
        .iter()
        .zip(values)
        .map(|(w, y)| w * (y - y0))
        .sum::<f64>()
        / sw
}

/// Pooled mean with IV and HKSJ variances at `tau2`. Returns
/// `(mu_hat, var_iv, var_hksj, weights)`.
pub(crate) fn pooled(d: &MetaDataset, tau2: f64) -> (f64, f64, f64, Vec<f64>) {
    let w: Vec<f64> = d.variances().iter().map(|v| 1.0 / (v + tau2)).collect();
    let sw: f64 = w.iter().sum();
    let mu = weighted_mean(d.effects(), &w);
    let rss: f64 = w
        .iter()
        .zip(d.effects())
        .map(|(w, y)| w * (y - mu).powi(2))
        .sum();
    let var_hksj = rss / ((d.k() - 1) as f64 * sw);
    (mu, 1.0 / sw, var_hksj, w)
}

/// Fits the random-effects model at a supplied τ².
pub fn re_fit(d: &MetaDataset, tau2: f64, estimator: Tau2Estimator) -> Result<ReFit> {
    if !(tau2 >= 0.0 && tau2.is_finite()) {
        return Err(Error::param(format!(
            "tau2 must be finite and >= 0, got {tau2}"
        )));
    }
    let (mu_hat, var_iv, var_hksj, weights) = pooled(d, tau2);
    Ok(ReFit {
        k: d.k(),
        mu_hat,
        var_iv,
        var_hksj,
        tau2,
        tau2_estimator: estimator,
        weights,
        het: cochran_q(d),
    })
}

/// Estimates τ² with `estimator` and fits the model there.
pub fn fit(d: &MetaDataset, estimator: Tau2Estimator) -> Result<ReFit> {
    let tau2 = match estimator {
        Tau2Estimator::DerSimonianLaird => cochran_q(d).tau2_dl,
        Tau2Estimator::Reml => tau2_reml(d)?.tau2,
    };
    re_fit(d, tau2, estimator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MetaDataset {
        MetaDataset::from_effects(vec![0.0, 2.0, 4.0], vec![1.0; 3]).unwrap()
    }

    #[test]
    fn hand_example_at_dl() {
        let f = fit(&toy(), Tau2Estimator::DerSimonianLaird).unwrap();
        assert!((f.tau2 - 3.0).abs() < 1e-12);
        assert!((f.mu_hat - 2.0).abs() < 1e-12);
        assert!((f.var_iv - 4.0 / 3.0).abs() < 1e-12);
        assert!((f.var_hksj - 4.0 / 3.0).abs() < 1e-12);
        assert!(f.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn homogeneous_example() {
        let d = MetaDataset::from_effects(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let f = re_fit(&d, 0.0, Tau2Estimator::DerSimonianLaird).unwrap();
        assert_eq!(f.mu_hat, 1.0);
        assert!((f.var_iv - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.var_hksj, 0.0);
    }

    #[test]
    fn shift_moves_only_the_mean() {
        let d =
            MetaDataset::from_effects(vec![0.3, -1.2, 2.5, 0.9], vec![0.4, 1.1, 0.2, 0.7]).unwrap();
        let a = fit(&d, Tau2Estimator::DerSimonianLaird).unwrap();
        let b = fit(&d.shifted(10.0), Tau2Estimator::DerSimonianLaird).unwrap();
        assert!((b.mu_hat - a.mu_hat - 10.0).abs() < 1e-10);
        assert!((b.var_iv - a.var_iv).abs() < 1e-10);
        assert!((b.var_hksj - a.var_hksj).abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_tau2() {
        assert!(re_fit(&toy(), -0.1, Tau2Estimator::DerSimonianLaird).is_err());
    }
}
