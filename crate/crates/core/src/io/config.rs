use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::dist::Family;
use crate::error::{Error, Result};
use crate::interval::Preset;
use crate::sim::{GridConfig, SampleSize};

/// Keys accepted in a simulation config.
pub const CONFIG_KEYS: [&str; 15] = [
    "K",
    "N",
    "tau2",
    "dist",
    "mu",
    "reps",
    "bootstrap_reps",
    "B",
    "alpha",
    "methods",
    "seed",
    "beta",
    "histogram_bins",
    "records",
    "bootstrap_recompute_weights",
];

/// A validated simulation config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimConfig {
    pub grid: GridConfig,
    /// Write per-replicate records next to the summaries.
    pub records: bool,
}

impl SimConfig {
    /// Fully resolved config with every key present. Used for digests and
    /// manifests, so the key order is fixed.
    pub fn to_json(&self) -> Value {
        let g = &self.grid;
        let s = &g.settings;
        let mut m = Map::new();
        m.insert("K".into(), json!(g.k));
        m.insert(
            "N".into(),
            serde_json::to_value(&g.n).unwrap_or(Value::Null),
        );
        m.insert("tau2".into(), json!(g.tau2));
        m.insert(
            "dist".into(),
            json!(g.dist.iter().map(|d| d.to_string()).collect::<Vec<_>>()),
        );
        m.insert("mu".into(), json!(g.mu));
        m.insert("reps".into(), json!(s.reps));
        m.insert("bootstrap_reps".into(), json!(s.bootstrap_reps));
        m.insert("B".into(), json!(s.bootstrap_draws));
        m.insert("alpha".into(), json!(s.alpha));
        m.insert(
            "methods".into(),
            json!(s.methods.iter().map(|p| p.slug()).collect::<Vec<_>>()),
        );
        m.insert("seed".into(), json!(s.master_seed));
        m.insert("beta".into(), json!(s.betas));
        m.insert("histogram_bins".into(), json!(s.histogram_bins));
        m.insert("records".into(), json!(self.records));
        m.insert(
            "bootstrap_recompute_weights".into(),
            json!(s.recompute_weights),
        );
        Value::Object(m)
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_config_str(&text)
}

/// Parses a JSON config, filling defaults. Every unknown key and every
/// malformed or invalid value is reported in one error.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(vec![format!("not valid JSON: {e}")]))?;
    let Value::Object(map) = value else {
        return Err(Error::Config(vec!["config must be a JSON object".into()]));
    };
    let mut problems = Vec::new();
    let mut unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !CONFIG_KEYS.contains(k))
        .collect();
    unknown.sort_unstable();
    for k in unknown {
        problems.push(format!("unknown key `{k}`"));
    }

    let mut cfg = SimConfig::default();
    let g = &mut cfg.grid;
    take(&map, "K", &mut problems, |v: Vec<usize>| g.k = v);
    take(&map, "N", &mut problems, |v: Vec<SampleSize>| g.n = v);
    take(&map, "tau2", &mut problems, |v: Vec<f64>| g.tau2 = v);
    take(&map, "mu", &mut problems, |v: f64| g.mu = v);
    if let Some(raw) = map.get("dist") {
        match serde_json::from_value::<Vec<String>>(raw.clone()) {
            Ok(names) => {
                let mut fams = Vec::new();
                for n in names {
                    match n.parse::<Family>() {
                        Ok(f) => fams.push(f),
                        Err(e) => problems.push(format!("dist: {e}")),
                    }
                }
                g.dist = fams;
            }
            Err(e) => problems.push(format!("dist: {e}")),
        }
    }
    let s = &mut g.settings;
    take(&map, "reps", &mut problems, |v: usize| s.reps = v);
    take(&map, "bootstrap_reps", &mut problems, |v: usize| {
        s.bootstrap_reps = v
    });
    take(&map, "B", &mut problems, |v: usize| s.bootstrap_draws = v);
    take(&map, "alpha", &mut problems, |v: f64| s.alpha = v);
    take(&map, "seed", &mut problems, |v: u64| s.master_seed = v);
    take(&map, "histogram_bins", &mut problems, |v: usize| {
        s.histogram_bins = v
    });
    take(
        &map,
        "bootstrap_recompute_weights",
        &mut problems,
        |v: bool| s.recompute_weights = v,
    );
    if let Some(raw) = map.get("beta") {
        match raw {
            Value::Number(_) => take(&map, "beta", &mut problems, |v: f64| s.betas = vec![v]),
            _ => take(&map, "beta", &mut problems, |v: Vec<f64>| s.betas = v),
        }
    }
    if let Some(raw) = map.get("methods") {
        match raw {
            Value::String(all) if all.eq_ignore_ascii_case("all") => {
                s.methods = Preset::ALL.to_vec()
            }
            _ => match serde_json::from_value::<Vec<String>>(raw.clone()) {
                Ok(names) => {
                    let mut out = Vec::new();
                    for n in names {
                        match n.parse::<Preset>() {
                            Ok(p) if !out.contains(&p) => out.push(p),
                            Ok(p) => problems.push(format!("methods: `{p}` listed twice")),
                            Err(e) => problems.push(format!("methods: {e}")),
                        }
                    }
                    s.methods = out;
                }
                Err(e) => problems.push(format!("methods: {e}")),
            },
        }
    }
    take(&map, "records", &mut problems, |v: bool| cfg.records = v);

    if let Err(Error::Config(more)) = cfg.grid.validate() {
        problems.extend(more);
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(problems))
    }
}

fn take<T: DeserializeOwned>(
    map: &Map<String, Value>,
    key: &str,
    problems: &mut Vec<String>,
    set: impl FnOnce(T),
) {
    if let Some(raw) = map.get(key) {
        match serde_json::from_value::<T>(raw.clone()) {
            Ok(v) => set(v),
            Err(e) => problems.push(format!("{key}: {e}")),
        }
    }
}
