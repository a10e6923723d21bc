use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Normal};

use super::grid::{theoretical_variance, Scenario, GROUP_VARIANCE};
use crate::dist::TrueEffectDist;
use crate::error::{Error, Result};
use crate::estimate::MetaDataset;

/// One simulated study.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStudy {
    pub theta: f64,
    pub theta_hat: f64,
    /// `V_E / N_E + V_C / N_C` with the population variances.
    pub sigma2: f64,
    /// Same with the sample variances.
    pub sigma2_hat: f64,
    pub n: u32,
    pub n_e: u32,
    pub n_c: u32,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub studies: Vec<GeneratedStudy>,
    pub dataset: MetaDataset,
}

impl GeneratedDataset {
    pub fn true_effects(&self) -> Vec<f64> {
        self.studies.iter().map(|s| s.theta).collect()
    }
}

/// Draws one meta-analysis for scenario `s`.
///
/// Per study, in this order: the true effect, the two arm sample variances
/// (scaled chi-square with `N/2 - 1` df) and the measurement error, which
/// uses the theoretical within-study variance.
pub fn generate_dataset<R: Rng + ?Sized>(
    s: &Scenario,
    dist: &TrueEffectDist,
    rng: &mut R,
) -> Result<GeneratedDataset> {
    let mut studies = Vec::with_capacity(s.k);
    for n in s.sizes() {
        if n % 2 == 1 || n < 4 {
            return Err(Error::Config(vec![format!(
                "N = {n} cannot be split into two arms"
            )]));
        }
        let arm = n / 2;
        let df = f64::from(arm - 1);
        let chi = ChiSquared::new(df).map_err(Error::param)?;
        let sigma2 = theoretical_variance(n);
        let theta = dist.sample(rng);
        let v_e = chi.sample(rng) * GROUP_VARIANCE / df;
        let v_c = chi.sample(rng) * GROUP_VARIANCE / df;
        let sigma2_hat = v_e / f64::from(arm) + v_c / f64::from(arm);
        let eps = Normal::new(0.0, sigma2.sqrt()).map_err(Error::param)?;
        let theta_hat = theta + eps.sample(rng);
        studies.push(GeneratedStudy {
            theta,
            theta_hat,
            sigma2,
            sigma2_hat,
            n,
            n_e: arm,
            n_c: arm,
        });
    }
    let dataset = MetaDataset::from_effects(
        studies.iter().map(|s| s.theta_hat).collect(),
        studies.iter().map(|s| s.sigma2_hat).collect(),
    )?;
    Ok(GeneratedDataset { studies, dataset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Family;
    use crate::sim::grid::{RunSettings, SampleSize};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(k: usize, n: SampleSize) -> Scenario {
        let settings = RunSettings {
            methods: vec![crate::interval::Preset::HtsDlZ],
            ..Default::default()
        };
        Scenario::new(k, n, 0.2, Family::Normal, settings).unwrap()
    }

    #[test]
    fn mixed_sizes_and_arms() {
        let s = scenario(5, SampleSize::Mixed);
        let g = generate_dataset(
            &s,
            &s.true_dist().unwrap(),
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let n: Vec<u32> = g.studies.iter().map(|x| x.n).collect();
        assert_eq!(n, [50, 100, 500, 50, 100]);
        for st in &g.studies {
            assert_eq!(st.n_e + st.n_c, st.n);
            assert!((st.sigma2 - 40.0 / f64::from(st.n)).abs() < 1e-15);
            assert!(st.sigma2_hat > 0.0);
        }
    }

    #[test]
    fn sample_variance_is_unbiased() {
        let s = scenario(2, SampleSize::Equal(100));
        let dist = s.true_dist().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 50_000;
        let mut acc = 0.0;
        for _ in 0..reps {
            let g = generate_dataset(&s, &dist, &mut rng).unwrap();
            acc += g.studies.iter().map(|x| x.sigma2_hat).sum::<f64>();
        }
        let mean = acc / (2 * reps) as f64;
        assert!((mean - 0.4).abs() < 0.005, "{mean}");
    }

    #[test]
    fn observed_effects_have_total_variance() {
        // Var(θ̂) = τ² + σ² = 0.2 + 0.4
        let s = scenario(10, SampleSize::Equal(100));
        let dist = s.true_dist().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000)
            .flat_map(|_| {
                generate_dataset(&s, &dist, &mut rng)
                    .unwrap()
                    .dataset
                    .effects()
                    .to_vec()
            })
            .collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 0.6).abs() < 0.01, "{v}");
    }
}
