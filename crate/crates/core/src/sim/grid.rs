use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{Family, TrueEffectDist};
use crate::error::{Error, Result};
use crate::interval::{Preset, DEFAULT_BOOTSTRAP_DRAWS, MIN_BOOTSTRAP_DRAWS};

/// Total sample size of both arms is `40 / σ²`: arms have `N/2` subjects
/// each and a population variance of 10.
pub const GROUP_VARIANCE: f64 = 10.0;

/// Sizes cycled through by [`SampleSize::Mixed`].
pub const MIXED_SIZES: [u32; 3] = [50, 100, 500];

pub const DEFAULT_K: [usize; 9] = [3, 4, 5, 7, 10, 15, 20, 30, 100];
pub const DEFAULT_TAU2: [f64; 7] = [0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_N: [u32; 7] = [30, 50, 100, 200, 500, 1000, 2000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleSize {
    /// Every study has `N` subjects.
    Equal(u32),
    /// `N_k` cycles through 50, 100, 500.
    Mixed,
}

impl SampleSize {
    pub fn sizes(self, k: usize) -> Vec<u32> {
        match self {
            SampleSize::Equal(n) => vec![n; k],
            SampleSize::Mixed => (0..k).map(|i| MIXED_SIZES[i % MIXED_SIZES.len()]).collect(),
        }
    }

    /// Short tag used in directory names and CSV columns.
    pub fn tag(self) -> String {
        match self {
            SampleSize::Equal(n) => n.to_string(),
            SampleSize::Mixed => "mixed".into(),
        }
    }

    fn check(self) -> Result<(), String> {
        match self {
            SampleSize::Equal(n) if n % 2 == 1 => {
                Err(format!("N = {n} is odd; both arms need N/2 subjects"))
            }
            SampleSize::Equal(n) if n < 4 => Err(format!(
                "N = {n} is too small; each arm needs at least 2 subjects"
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for SampleSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("mixed") {
            return Ok(SampleSize::Mixed);
        }
        s.parse::<u32>().map(SampleSize::Equal).map_err(|_| {
            Error::param(format!(
                "sample size must be an even integer or `mixed`, got `{s}`"
            ))
        })
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Equal(n) => s.serialize_u32(*n),
            SampleSize::Mixed => s.serialize_str("mixed"),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(SampleSize::Equal(n)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Settings shared by every scenario of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    /// Replicates for closed-form methods.
    pub reps: usize,
    /// Replicates for the bootstrap (the first `bootstrap_reps` replicates).
    pub bootstrap_reps: usize,
    /// Bootstrap draws `B` per replicate.
    pub bootstrap_draws: usize,
    pub alpha: f64,
    pub methods: Vec<Preset>,
    pub master_seed: u64,
    /// Contents for the tolerance check `P[C >= β]`.
    pub betas: Vec<f64>,
    pub histogram_bins: usize,
    pub recompute_weights: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            reps: 5000,
            bootstrap_reps: 1000,
            bootstrap_draws: DEFAULT_BOOTSTRAP_DRAWS,
            alpha: 0.05,
            methods: Preset::ALL.to_vec(),
            master_seed: 1,
            betas: vec![0.8],
            histogram_bins: 100,
            recompute_weights: false,
        }
    }
}

impl RunSettings {
    pub fn level(&self) -> f64 {
        1.0 - self.alpha
    }

    /// Replicates attempted for `method`.
    pub fn reps_for(&self, method: Preset) -> usize {
        if method.is_bootstrap() {
            self.bootstrap_reps.min(self.reps)
        } else {
            self.reps
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.reps == 0 {
            out.push("reps must be at least 1".into());
        }
        if self.methods.is_empty() {
            out.push("methods must not be empty".into());
        }
        if self.methods.iter().any(|m| m.is_bootstrap()) {
            if self.bootstrap_reps == 0 {
                out.push("bootstrap_reps must be at least 1".into());
            }
            if self.bootstrap_draws < MIN_BOOTSTRAP_DRAWS {
                out.push(format!(
                    "B must be at least {MIN_BOOTSTRAP_DRAWS}, got {}",
                    self.bootstrap_draws
                ));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        for &b in &self.betas {
            if !(0.0..=1.0).contains(&b) {
                out.push(format!("beta must lie in [0, 1], got {b}"));
            }
        }
        if self.histogram_bins == 0 {
            out.push("histogram_bins must be at least 1".into());
        }
        out
    }
}

/// One cell of the fully crossed grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub index: usize,
    pub k: usize,
    pub sample_size: SampleSize,
    pub tau2: f64,
    pub mu: f64,
    pub family: Family,
    pub settings: Arc<RunSettings>,
}

impl Scenario {
    /// A standalone scenario, index 0.
    pub fn new(
        k: usize,
        sample_size: SampleSize,
        tau2: f64,
        family: Family,
        settings: RunSettings,
    ) -> Result<Self> {
        let grid = GridConfig {
            k: vec![k],
            n: vec![sample_size],
            tau2: vec![tau2],
            dist: vec![family],
            mu: 0.0,
            settings,
        };
        Ok(build_grid(&grid)?.remove(0))
    }

    pub fn true_dist(&self) -> Result<TrueEffectDist> {
        TrueEffectDist::new(self.family, self.mu, self.tau2)
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.sample_size.sizes(self.k)
    }

    /// Theoretical within-study variances `40 / N_k`.
    pub fn sigma2(&self) -> Vec<f64> {
        self.sizes()
            .iter()
            .map(|&n| theoretical_variance(n))
            .collect()
    }

    /// `τ² / mean σ²_k`.
    pub fn v(&self) -> f64 {
        match self.sample_size {
            SampleSize::Equal(n) => self.tau2 / theoretical_variance(n),
            SampleSize::Mixed => {
                let s = self.sigma2();
                self.tau2 / (s.iter().sum::<f64>() / s.len() as f64)
            }
        }
    }

    pub fn dir_name(&self) -> String {
        format!(
            "s{}_K{}_N{}_t2{}_{}",
            self.index,
            self.k,
            self.sample_size.tag(),
            self.tau2,
            self.family
        )
    }
}

pub(crate) fn theoretical_variance(n: u32) -> f64 {
    let arm = f64::from(n) / 2.0;
    GROUP_VARIANCE / arm + GROUP_VARIANCE / arm
}

/// Factor levels and run settings of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub k: Vec<usize>,
    pub n: Vec<SampleSize>,
    pub tau2: Vec<f64>,
    pub dist: Vec<Family>,
    pub mu: f64,
    pub settings: RunSettings,
}

impl Default for GridConfig {
    fn default() -> Self {
        let mut n: Vec<SampleSize> = DEFAULT_N.iter().map(|&n| SampleSize::Equal(n)).collect();
        n.push(SampleSize::Mixed);
        Self {
            k: DEFAULT_K.to_vec(),
            n,
            tau2: DEFAULT_TAU2.to_vec(),
            dist: Family::default_grid(),
            mu: 0.0,
            settings: RunSettings::default(),
        }
    }
}

impl GridConfig {
    /// Checks every factor and setting, reporting all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut out = Vec::new();
        for (name, empty) in [
            ("K", self.k.is_empty()),
            ("N", self.n.is_empty()),
            ("tau2", self.tau2.is_empty()),
            ("dist", self.dist.is_empty()),
        ] {
            if empty {
                out.push(format!("{name} must list at least one level"));
            }
        }
        for &k in &self.k {
            if k < 2 {
                out.push(format!("K = {k} is below the minimum of 2"));
            }
            for m in &self.settings.methods {
                let min = m.spec(self.settings.bootstrap_draws).min_k();
                if k >= 2 && k < min {
                    out.push(format!(
                        "K = {k} is too small for {} (needs K >= {min})",
                        m.label()
                    ));
                }
            }
        }
        for n in &self.n {
            if let Err(e) = n.check() {
                out.push(e);
            }
        }
        for &t in &self.tau2 {
            if !(t > 0.0 && t.is_finite()) {
                out.push(format!("tau2 must be positive and finite, got {t}"));
            }
        }
        if !self.mu.is_finite() {
            out.push(format!("mu must be finite, got {}", self.mu));
        }
        for &f in &self.dist {
            if let Err(e) = TrueEffectDist::new(f, 0.0, 1.0) {
                out.push(format!("dist `{f}`: {e}"));
            }
        }
        out.extend(self.settings.problems());
        if out.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(out))
        }
    }

    pub fn scenario_count(&self) -> usize {
        self.k.len() * self.n.len() * self.tau2.len() * self.dist.len()
    }
}

/// Fully crossed scenario list. Indices run in the nesting order
/// distribution, sample size, τ², K.
pub fn build_grid(config: &GridConfig) -> Result<Vec<Scenario>> {
    config.validate()?;
    let settings = Arc::new(config.settings.clone());
    let mut out = Vec::with_capacity(config.scenario_count());
    for &family in &config.dist {
        for &sample_size in &config.n {
            for &tau2 in &config.tau2 {
                for &k in &config.k {
                    out.push(Scenario {
                        index: out.len(),
                        k,
                        sample_size,
                        tau2,
                        mu: config.mu,
                        family,
                        settings: Arc::clone(&settings),
                    });
                }
            }
        }
    }
    Ok(out)
}
