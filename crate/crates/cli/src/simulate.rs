use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use flate2::write::GzEncoder;
use flate2::Compression;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pilab_core::io::{
    parse_config, write_histogram_csv, write_records_csv, write_summary_csv, SimConfig,
};
use pilab_core::sim::{build_grid, run_scenario, Scenario, GENERATOR_ID};

const MARKER: &str = "INCOMPLETE";

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load(config: Option<&Path>) -> Result<SimConfig> {
    match config {
        Some(p) => parse_config(p).with_context(|| format!("config {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

/// Prints the scenario count, or one CSV line per scenario with `print`.
pub fn grid(config: Option<&Path>, print: bool) -> Result<()> {
    let cfg = load(config)?;
    let scenarios = build_grid(&cfg.grid)?;
    match print_grid(&scenarios, print) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_grid(scenarios: &[Scenario], print: bool) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    if print {
        writeln!(out, "index,K,N,tau2,mu,dist,dir")?;
        for s in scenarios {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.index,
                s.k,
                s.sample_size,
                s.tau2,
                s.mu,
                s.family,
                s.dir_name()
            )?;
        }
    } else {
        writeln!(out, "{} scenarios", scenarios.len())?;
    }
    out.flush()
}

/// Runs every scenario of the config into `out_dir`. Returns `false` when at
/// least one scenario failed; its error is recorded in the manifest.
pub fn run(config: &Path, out_dir: &Path, jobs: usize, seed: Option<u64>) -> Result<bool> {
    let mut cfg = load(Some(config))?;
    if let Some(s) = seed {
        cfg.grid.settings.master_seed = s;
    }
    let scenarios = build_grid(&cfg.grid)?;
    let resolved = cfg.to_json();
    let digest = hex(&Sha256::digest(resolved.to_string().as_bytes()));

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let marker = out_dir.join(MARKER);
    fs::write(&marker, "run in progress\n")
        .with_context(|| format!("writing {}", marker.display()))?;
    let started = unix_now();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("starting worker pool")?;
    let outcomes: Vec<Result<usize>> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_one(s, out_dir, cfg.records))
            .collect()
    });

    let mut entries = Vec::with_capacity(scenarios.len());
    let mut all_ok = true;
    let mut io_failure = None;
    for (s, r) in scenarios.iter().zip(&outcomes) {
        let mut e = json!({
            "index": s.index,
            "dir": s.dir_name(),
        });
        match r {
            Ok(failures) => {
                e["status"] = json!("ok");
                e["failures"] = json!(failures);
            }
            Err(err) => {
                all_ok = false;
                e["status"] = json!("failed");
                e["error"] = json!(format!("{err:#}"));
                if io_failure.is_none() && err.chain().any(|c| c.is::<std::io::Error>()) {
                    io_failure = Some(format!("{err:#}"));
                }
            }
        }
        entries.push(e);
    }

    let manifest = json!({
        "tool": "pilab",
        "version": env!("CARGO_PKG_VERSION"),
        "master_seed": cfg.grid.settings.master_seed,
        "generator": GENERATOR_ID,
        "config_sha256": digest,
        "config": resolved,
        "started_unix": started,
        "finished_unix": unix_now(),
        "jobs": jobs.max(1),
        "scenarios": entries,
        "complete": all_ok,
    });
    write_manifest(out_dir, &manifest)?;

    match io_failure {
        Some(msg) => {
            fs::write(&marker, format!("{msg}\n"))
                .with_context(|| format!("writing {}", marker.display()))?;
        }
        None => {
            fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))?;
        }
    }
    for (s, r) in scenarios.iter().zip(&outcomes) {
        if let Err(e) = r {
            eprintln!("scenario {} ({}) failed: {e:#}", s.index, s.dir_name());
        }
    }
    Ok(all_ok)
}

fn run_one(s: &Scenario, out_dir: &Path, records: bool) -> Result<usize> {
    let run = run_scenario(s)?;
    let dir = out_dir.join(s.dir_name());
    fs::create_dir_all(&dir)?;
    let settings = &s.settings;

    let mut w = BufWriter::new(File::create(dir.join("summary.csv"))?);
    write_summary_csv(&run.summary, &settings.betas, settings.level(), &mut w)?;
    w.flush()?;

    for m in &run.summary.methods {
        if let Some(st) = &m.stats {
            let mut w = BufWriter::new(File::create(
                dir.join(format!("hist_{}.csv", m.method.slug())),
            )?);
            write_histogram_csv(&st.histogram, &mut w)?;
            w.flush()?;
        }
    }

    if records {
        let f = File::create(dir.join("records.csv.gz"))?;
        let mut gz = GzEncoder::new(BufWriter::new(f), Compression::default());
        write_records_csv(&run.records, &settings.methods, &mut gz)?;
        gz.finish()?.flush()?;
    }
    Ok(run.summary.total_failures())
}

fn write_manifest(out_dir: &Path, manifest: &Value) -> Result<()> {
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
