use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use serde::Serialize;

use pilab_core::dist::special::{norm_quantile, t_quantile};
use pilab_core::dist::Evaluator;
use pilab_core::interval::{
    bootstrap_draws, ensemble_pi, hts_pi, BootstrapOptions, IntervalKind, Preset,
};
use pilab_core::io::parse_studies;
use pilab_core::sim::{SimRng, GENERATOR_ID};
use pilab_core::{fit as re_fit_est, tau2_reml, MetaDataset, Tau2Estimator};

use crate::Format;

pub struct FitArgs {
    pub input: PathBuf,
    pub methods: String,
    pub level: f64,
    pub seed: Option<u64>,
    pub bootstrap_b: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    input: String,
    level: f64,
    k: usize,
    studies: Vec<StudyRow>,
    pooled: Pooled,
    heterogeneity: Heterogeneity,
    prediction_intervals: Vec<PiRow>,
    run: RunInfo,
}

#[derive(Serialize)]
struct StudyRow {
    study_id: String,
    effect: f64,
    se: f64,
    var: f64,
    ci_lower: f64,
    ci_upper: f64,
}

#[derive(Serialize)]
struct Interval {
    label: &'static str,
    estimate: f64,
    se: f64,
    critical: f64,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct Pooled {
    tau2_estimator: &'static str,
    mu_hat: f64,
    iv_z: Interval,
    hksj_t: Interval,
}

#[derive(Serialize)]
struct Heterogeneity {
    q: f64,
    df: usize,
    i2: f64,
    tau2_udl: f64,
    tau2_dl: f64,
    tau2_reml: f64,
    reml_iterations: usize,
}

#[derive(Serialize)]
struct PiRow {
    method: String,
    label: String,
    lower: f64,
    upper: f64,
    length: f64,
    degenerate: bool,
    warning: Option<String>,
}

#[derive(Serialize)]
struct RunInfo {
    seed: u64,
    seed_source: &'static str,
    generator: &'static str,
    bootstrap_draws: usize,
    weighted_chisq_evaluator: &'static str,
    monte_carlo_fallbacks: usize,
}

pub fn run(args: FitArgs) -> Result<()> {
    let d =
        parse_studies(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let methods = parse_methods(&args.methods)?;
    let (seed, seed_source) = match args.seed {
        Some(s) => (s, "user"),
        None => (rand::random::<u64>(), "entropy"),
    };
    let report = build_report(&d, &args, &methods, seed, seed_source)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &report)?;
            buf.push(b'\n');
        }
        Format::Csv => write_csv(&report, &mut buf)?,
    }
    match &args.out {
        Some(p) => std::fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    if seed_source == "entropy" && methods.iter().any(|m| m.is_bootstrap()) {
        eprintln!("bootstrap seed {seed} (entropy); pass --seed {seed} to reproduce");
    }
    Ok(())
}

fn parse_methods(s: &str) -> Result<Vec<Preset>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Preset::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let p: Preset = part.parse()?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        bail!("no methods requested");
    }
    Ok(out)
}

fn build_report(
    d: &MetaDataset,
    args: &FitArgs,
    methods: &[Preset],
    seed: u64,
    seed_source: &'static str,
) -> Result<Report> {
    let level = args.level;
    if !(level > 0.0 && level < 1.0) {
        bail!("level must lie in (0, 1), got {level}");
    }
    let k = d.k();
    let z = norm_quantile(0.5 + 0.5 * level);
    let dl = re_fit_est(d, Tau2Estimator::DerSimonianLaird)?;
    let reml = tau2_reml(d)?;
    let reml_fit = re_fit_est(d, Tau2Estimator::Reml)?;
    let t = t_quantile((k - 1) as f64, 0.5 + 0.5 * level)?;

    let studies = d
        .studies()
        .into_iter()
        .map(|s| {
            let se = s.se();
            StudyRow {
                effect: s.effect,
                se,
                var: s.within_variance,
                ci_lower: s.effect - z * se,
                ci_upper: s.effect + z * se,
                study_id: s.id,
            }
        })
        .collect();

    let interval = |label, se: f64, c: f64| Interval {
        label,
        estimate: dl.mu_hat,
        se,
        critical: c,
        lower: dl.mu_hat - c * se,
        upper: dl.mu_hat + c * se,
    };
    let pooled = Pooled {
        tau2_estimator: "DL",
        mu_hat: dl.mu_hat,
        iv_z: interval("IV(z)", dl.var_iv.sqrt(), z),
        hksj_t: interval("HKSJ(t_{k-1})", dl.var_hksj.sqrt(), t),
    };

    let mut fallbacks = 0;
    let mut rows = Vec::with_capacity(methods.len());
    for &m in methods {
        let spec = m.spec(args.bootstrap_b);
        let pi = match spec.kind {
            IntervalKind::Hts => {
                let f = match spec.tau2_estimator {
                    Tau2Estimator::DerSimonianLaird => &dl,
                    Tau2Estimator::Reml => &reml_fit,
                };
                hts_pi(f, spec.critical, spec.variance, level)
            }
            IntervalKind::Ensemble => ensemble_pi(d, &dl, level),
            IntervalKind::Bootstrap => {
                let opts = BootstrapOptions {
                    draws: args.bootstrap_b,
                    ..Default::default()
                };
                let mut rng = SimRng::seed_from_u64(seed);
                let draws = bootstrap_draws(d, &opts, &mut rng)?;
                fallbacks += draws.monte_carlo_evaluations;
                draws.interval(level)
            }
        }
        .with_context(|| format!("method {}", m.label()))?;
        let degenerate = pi.is_degenerate();
        rows.push(PiRow {
            method: m.slug(),
            label: m.label(),
            lower: pi.lower,
            upper: pi.upper,
            length: pi.length(),
            degenerate,
            warning: degenerate
                .then(|| "degenerate interval: estimated tau2 is zero, the interval is the single point mu_hat".into()),
        });
    }

    Ok(Report {
        tool: "pilab",
        version: env!("CARGO_PKG_VERSION"),
        input: args.input.display().to_string(),
        level,
        k,
        studies,
        pooled,
        heterogeneity: Heterogeneity {
            q: dl.het.q,
            df: k - 1,
            i2: dl.het.i2,
            tau2_udl: dl.het.tau2_udl,
            tau2_dl: dl.het.tau2_dl,
            tau2_reml: reml.tau2,
            reml_iterations: reml.iterations,
        },
        prediction_intervals: rows,
        run: RunInfo {
            seed,
            seed_source,
            generator: GENERATOR_ID,
            bootstrap_draws: args.bootstrap_b,
            weighted_chisq_evaluator: if fallbacks == 0 {
                Evaluator::RubenSeries.name()
            } else {
                Evaluator::MonteCarlo.name()
            },
            monte_carlo_fallbacks: fallbacks,
        },
    })
}

/// Long CSV: `section,name,estimate,se,lower,upper,note`.
fn write_csv(r: &Report, out: &mut Vec<u8>) -> Result<()> {
    let mut w = String::from("section,name,estimate,se,lower,upper,note\n");
    let esc = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut line = |cols: [String; 7]| {
        let cols: Vec<String> = cols.iter().map(|c| esc(c)).collect();
        w.push_str(&cols.join(","));
        w.push('\n');
    };
    let e = String::new;
    for s in &r.studies {
        line([
            "study".into(),
            s.study_id.clone(),
            s.effect.to_string(),
            s.se.to_string(),
            s.ci_lower.to_string(),
            s.ci_upper.to_string(),
            e(),
        ]);
    }
    for i in [&r.pooled.iv_z, &r.pooled.hksj_t] {
        line([
            "pooled".into(),
            i.label.into(),
            i.estimate.to_string(),
            i.se.to_string(),
            i.lower.to_string(),
            i.upper.to_string(),
            format!("tau2={}", r.pooled.tau2_estimator),
        ]);
    }
    let h = &r.heterogeneity;
    for (name, v) in [
        ("Q", h.q),
        ("I2", h.i2),
        ("tau2_UDL", h.tau2_udl),
        ("tau2_DL", h.tau2_dl),
        ("tau2_REML", h.tau2_reml),
    ] {
        line([
            "heterogeneity".into(),
            name.into(),
            v.to_string(),
            e(),
            e(),
            e(),
            e(),
        ]);
    }
    for p in &r.prediction_intervals {
        let note = if p.degenerate {
            "degenerate".to_string()
        } else {
            e()
        };
        line([
            "pi".into(),
            p.label.clone(),
            e(),
            e(),
            p.lower.to_string(),
            p.upper.to_string(),
            note,
        ]);
    }
    let run = &r.run;
    line([
        "run".into(),
        "level".into(),
        r.level.to_string(),
        e(),
        e(),
        e(),
        e(),
    ]);
    line([
        "run".into(),
        "seed".into(),
        run.seed.to_string(),
        e(),
        e(),
        e(),
        run.seed_source.into(),
    ]);
    line([
        "run".into(),
        "bootstrap_draws".into(),
        run.bootstrap_draws.to_string(),
        e(),
        e(),
        e(),
        e(),
    ]);
    line([
        "run".into(),
        "monte_carlo_fallbacks".into(),
        run.monte_carlo_fallbacks.to_string(),
        e(),
        e(),
        e(),
        run.weighted_chisq_evaluator.into(),
    ]);
    line([
        "run".into(),
        "generator".into(),
        e(),
        e(),
        e(),
        e(),
        run.generator.into(),
    ]);
    out.extend_from_slice(w.as_bytes());
    Ok(())
}
