use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Tau2Estimator;

/// Family of prediction-interval construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalKind {
    Hts,
    Ensemble,
    Bootstrap,
}

/// Variance estimate of the pooled mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceKind {
    #[serde(rename = "IV")]
    InverseVariance,
    #[serde(rename = "HKSJ")]
    Hksj,
}

/// Reference distribution of the HTS critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Critical {
    /// Student t with K - 2 degrees of freedom.
    #[serde(rename = "t(K-2)")]
    TKMinus2,
    #[serde(rename = "t(K-1)")]
    TKMinus1,
    #[serde(rename = "z")]
    Z,
}

impl Critical {
    /// Degrees of freedom for `k` studies; `None` for the normal.
    pub fn df(self, k: usize) -> Result<Option<f64>> {
        match self {
            Critical::Z => Ok(None),
            Critical::TKMinus1 if k >= 2 => Ok(Some((k - 1) as f64)),
            Critical::TKMinus2 if k >= 3 => Ok(Some((k - 2) as f64)),
            _ => Err(Error::DegreesOfFreedom(format!(
                "{self} needs more studies than K = {k}"
            ))),
        }
    }

    /// Smallest K the critical value is defined for.
    pub fn min_k(self) -> usize {
        match self {
            Critical::TKMinus2 => 3,
            _ => 2,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Critical::TKMinus2 => "t_{k-2}",
            Critical::TKMinus1 => "t_{k-1}",
            Critical::Z => "z",
        }
    }

    fn slug(self) -> &'static str {
        match self {
            Critical::TKMinus2 => "tk2",
            Critical::TKMinus1 => "tk1",
            Critical::Z => "z",
        }
    }
}

impl fmt::Display for Critical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Full description of a prediction-interval method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PiMethodSpec {
    pub kind: IntervalKind,
    pub tau2_estimator: Tau2Estimator,
    pub variance: VarianceKind,
    pub critical: Critical,
    /// Bootstrap draws; ignored by the other kinds.
    pub bootstrap_draws: usize,
}

pub const MIN_BOOTSTRAP_DRAWS: usize = 100;
pub const DEFAULT_BOOTSTRAP_DRAWS: usize = 5000;

impl PiMethodSpec {
    pub fn hts(tau2_estimator: Tau2Estimator, variance: VarianceKind, critical: Critical) -> Self {
        Self {
            kind: IntervalKind::Hts,
            tau2_estimator,
            variance,
            critical,
            bootstrap_draws: 0,
        }
    }

    pub fn ensemble() -> Self {
        Self {
            kind: IntervalKind::Ensemble,
            tau2_estimator: Tau2Estimator::DerSimonianLaird,
            variance: VarianceKind::InverseVariance,
            critical: Critical::Z,
            bootstrap_draws: 0,
        }
    }

    pub fn bootstrap(draws: usize) -> Self {
        Self {
            kind: IntervalKind::Bootstrap,
            tau2_estimator: Tau2Estimator::DerSimonianLaird,
            variance: VarianceKind::Hksj,
            critical: Critical::TKMinus1,
            bootstrap_draws: draws,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == IntervalKind::Bootstrap && self.bootstrap_draws < MIN_BOOTSTRAP_DRAWS {
            return Err(Error::param(format!(
                "bootstrap needs at least {MIN_BOOTSTRAP_DRAWS} draws, got {}",
                self.bootstrap_draws
            )));
        }
        Ok(())
    }

    /// Smallest number of studies the method accepts.
    pub fn min_k(&self) -> usize {
        match self.kind {
            IntervalKind::Hts => self.critical.min_k(),
            _ => 2,
        }
    }

    /// Human-readable label, e.g. `HTS-DL(t_{k-2})`.
    pub fn label(&self) -> String {
        match self.kind {
            IntervalKind::Ensemble => "Ensemble".into(),
            IntervalKind::Bootstrap => "Bootstrap".into(),
            IntervalKind::Hts => match self.variance {
                VarianceKind::InverseVariance => {
                    format!("HTS-{}({})", self.tau2_estimator.abbrev(), self.critical)
                }
                VarianceKind::Hksj => match self.tau2_estimator {
                    Tau2Estimator::DerSimonianLaird => format!("HTS-HKSJ({})", self.critical),
                    Tau2Estimator::Reml => format!("HTS-HKSJ-REML({})", self.critical),
                },
            },
        }
    }

    /// File-name friendly identifier, e.g. `hts-dl-tk2`.
    pub fn slug(&self) -> String {
        match self.kind {
            IntervalKind::Ensemble => "ensemble".into(),
            IntervalKind::Bootstrap => "bootstrap".into(),
            IntervalKind::Hts => {
                let est = self.tau2_estimator.abbrev().to_ascii_lowercase();
                match (self.variance, self.tau2_estimator) {
                    (VarianceKind::InverseVariance, _) => {
                        format!("hts-{est}-{}", self.critical.slug())
                    }
                    (VarianceKind::Hksj, Tau2Estimator::DerSimonianLaird) => {
                        format!("hts-hksj-{}", self.critical.slug())
                    }
                    (VarianceKind::Hksj, Tau2Estimator::Reml) => {
                        format!("hts-hksj-reml-{}", self.critical.slug())
                    }
                }
            }
        }
    }
}

/// The seven named methods compared in the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Preset {
    HtsDlTk2,
    HtsRemlTk2,
    HtsHksjTk2,
    HtsDlTk1,
    HtsDlZ,
    Ensemble,
    Bootstrap,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::HtsDlTk2,
        Preset::HtsRemlTk2,
        Preset::HtsHksjTk2,
        Preset::HtsDlTk1,
        Preset::HtsDlZ,
        Preset::Ensemble,
        Preset::Bootstrap,
    ];

    pub fn spec(self, bootstrap_draws: usize) -> PiMethodSpec {
        use Critical::*;
        use Tau2Estimator::*;
        use VarianceKind::*;
        match self {
            Preset::HtsDlTk2 => PiMethodSpec::hts(DerSimonianLaird, InverseVariance, TKMinus2),
            Preset::HtsRemlTk2 => PiMethodSpec::hts(Reml, InverseVariance, TKMinus2),
            Preset::HtsHksjTk2 => PiMethodSpec::hts(DerSimonianLaird, Hksj, TKMinus2),
            Preset::HtsDlTk1 => PiMethodSpec::hts(DerSimonianLaird, InverseVariance, TKMinus1),
            Preset::HtsDlZ => PiMethodSpec::hts(DerSimonianLaird, InverseVariance, Z),
            Preset::Ensemble => PiMethodSpec::ensemble(),
            Preset::Bootstrap => PiMethodSpec::bootstrap(bootstrap_draws),
        }
    }

    pub fn label(self) -> String {
        self.spec(DEFAULT_BOOTSTRAP_DRAWS).label()
    }

    pub fn slug(self) -> String {
        self.spec(DEFAULT_BOOTSTRAP_DRAWS).slug()
    }

    pub fn is_bootstrap(self) -> bool {
        self == Preset::Bootstrap
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts the slug (`hts-dl-tk2`) or the label (`HTS-DL(t_{k-2})`),
    /// case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.slug() == wanted || p.label().to_ascii_lowercase() == wanted)
            .ok_or_else(|| {
                let known: Vec<String> = Preset::ALL.iter().map(|p| p.slug()).collect();
                Error::param(format!(
                    "unknown method `{s}` (known: {})",
                    known.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for Preset {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Preset> for String {
    fn from(p: Preset) -> String {
        p.slug()
    }
}
