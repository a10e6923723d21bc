use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One study: observed effect and its within-study variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub id: String,
    pub effect: f64,
    pub within_variance: f64,
}

impl StudySummary {
    pub fn new(id: impl Into<String>, effect: f64, within_variance: f64) -> Self {
        Self {
            id: id.into(),
            effect,
            within_variance,
        }
    }

    pub fn se(&self) -> f64 {
        self.within_variance.sqrt()
    }
}

/// An ordered collection of at least two studies.
///
/// Effects and variances are stored column-wise; labels are optional so the
/// simulator can build datasets without allocating strings.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    effects: Vec<f64>,
    variances: Vec<f64>,
    labels: Option<Vec<String>>,
}

fn validate(effects: &[f64], variances: &[f64]) -> Result<()> {
    if effects.len() != variances.len() {
        return Err(Error::dataset(format!(
            "{} effects but {} variances",
            effects.len(),
            variances.len()
        )));
    }
    if effects.len() < 2 {
        return Err(Error::dataset(format!(
            "need at least 2 studies, got {}",
            effects.len()
        )));
    }
    for (k, (&y, &v)) in effects.iter().zip(variances).enumerate() {
        if !y.is_finite() {
            return Err(Error::dataset(format!(
                "study {}: effect {y} is not finite",
                k + 1
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::dataset(format!(
                "study {}: within-study variance {v} must be positive and finite",
                k + 1
            )));
        }
    }
    Ok(())
}

impl MetaDataset {
    pub fn new(studies: Vec<StudySummary>) -> Result<Self> {
        let effects: Vec<f64> = studies.iter().map(|s| s.effect).collect();
        let variances: Vec<f64> = studies.iter().map(|s| s.within_variance).collect();
        validate(&effects, &variances)?;
        Ok(Self {
            effects,
            variances,
            labels: Some(studies.into_iter().map(|s| s.id).collect()),
        })
    }

    /// Unlabelled dataset; studies are labelled `1..=K` on demand.
    pub fn from_effects(effects: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        validate(&effects, &variances)?;
        Ok(Self {
            effects,
            variances,
            labels: None,
        })
    }

    pub fn k(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[f64] {
        &self.effects
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn label(&self, k: usize) -> Cow<'_, str> {
        match &self.labels {
            Some(l) => Cow::Borrowed(&l[k]),
            None => Cow::Owned((k + 1).to_string()),
        }
    }

    pub fn studies(&self) -> Vec<StudySummary> {
        (0..self.k())
            .map(|k| StudySummary::new(self.label(k), self.effects[k], self.variances[k]))
            .collect()
    }

    /// Adds `c` to every effect.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            effects: self.effects.iter().map(|y| y + c).collect(),
            ..self.clone()
        }
    }

    /// Multiplies effects by `s` and variances by `s²`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            effects: self.effects.iter().map(|y| y * s).collect(),
            variances: self.variances.iter().map(|v| v * s * s).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(MetaDataset::from_effects(vec![1.0], vec![1.0]).is_err());
        assert!(MetaDataset::from_effects(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(MetaDataset::from_effects(vec![1.0, f64::NAN], vec![1.0, 1.0]).is_err());
        assert!(MetaDataset::from_effects(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn labels() {
        let d = MetaDataset::new(vec![
            StudySummary::new("a", 0.0, 1.0),
            StudySummary::new("b", 2.0, 4.0),
        ])
        .unwrap();
        assert_eq!(d.label(1), "b");
        assert_eq!(d.studies()[1].se(), 2.0);
        let u = MetaDataset::from_effects(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(u.label(0), "1");
    }
}
