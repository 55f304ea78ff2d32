//! Batch evaluation over files × clipping thresholds × weight recipes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use declip_core::solver::{consistency, CONSISTENCY_TOL};
use declip_core::{
    declip, delta_sdr, hard_clip, peak_normalize, GaborFrame, Profile, Signal, SolverConfig, WeightKind,
    WeightRecipe,
};
use rayon::prelude::*;
use serde::Deserialize;

use crate::csv_out::{csv_writer, fmt_db};
use crate::wav::{read_wav, ChannelMode};
use crate::{Error, Result};

pub const RESULTS_SCHEMA: &str = "# declip-results v1";
pub const SUMMARY_SCHEMA: &str = "# declip-summary v1";
pub const TIMINGS_SCHEMA: &str = "# declip-timings v1";

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "DECLIP_JOBS";

fn default_thresholds() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn default_recipes() -> Vec<String> {
    WeightKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn one() -> f64 {
    1.0
}

fn default_tau() -> f64 {
    declip_core::weights::DEFAULT_TAU_DB
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    #[default]
    Default,
    Fast,
}

impl From<ProfileName> for Profile {
    fn from(p: ProfileName) -> Self {
        match p {
            ProfileName::Default => Profile::Full,
            ProfileName::Fast => Profile::Fast,
        }
    }
}

/// TOML experiment description. Relative paths are taken relative to the
/// config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub inputs: Vec<PathBuf>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_recipes")]
    pub recipes: Vec<String>,
    #[serde(default)]
    pub profile: ProfileName,
    /// Overrides the profile's iteration count.
    pub iterations: Option<usize>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub downmix: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|source| Error::Config { path: path.to_owned(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.inputs.iter_mut().chain(std::iter::once(&mut cfg.output_dir)) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::InvalidConfig("no inputs".into()));
        }
        if self.thresholds.is_empty() || self.recipes.is_empty() {
            return Err(Error::InvalidConfig("empty threshold or recipe list".into()));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidConfig(format!("threshold {t} outside (0, 1)")));
        }
        self.recipes()?;
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn recipes(&self) -> Result<Vec<WeightRecipe>> {
        self.recipes
            .iter()
            .map(|name| {
                let kind: WeightKind =
                    name.parse().map_err(|_| Error::InvalidConfig(format!("unknown recipe {name:?}")))?;
                Ok(WeightRecipe::with_tau(kind, self.tau))
            })
            .collect()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            gamma: self.gamma,
            lambda: self.lambda,
            max_iter: self.iterations.unwrap_or(Profile::from(self.profile).iterations()),
            record_objective: false,
        }
    }
}

/// Worker count: `DECLIP_JOBS` beats `--jobs`, which beats the config.
/// `0` or nothing means one thread per core.
pub fn resolve_jobs(env: Option<&str>, cli: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(v) = env.map(str::trim).filter(|v| !v.is_empty()) {
        return v
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{JOBS_ENV}={v:?} is not a thread count")));
    }
    Ok(cli.or(config).unwrap_or(0))
}

/// One grid cell. `error` is set, and the SDR fields are `None`, when the
/// cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub file: String,
    pub threshold: f64,
    pub recipe: WeightKind,
    pub sdr_clipped_db: Option<f64>,
    pub sdr_restored_db: Option<f64>,
    pub delta_sdr_db: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub threshold: f64,
    pub recipe: WeightKind,
    pub count: usize,
    pub mean_sdr_clipped_db: f64,
    pub mean_sdr_restored_db: f64,
    pub mean_delta_sdr_db: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

struct Prepared {
    label: String,
    clean: Signal,
    frame: GaborFrame,
}

fn prepare(path: &Path, label: String, mode: ChannelMode, profile: Profile) -> Result<Prepared> {
    let audio = read_wav(path, mode)?;
    let clean = peak_normalize(&audio.signal)?;
    let frame = profile.frame(clean.len())?;
    Ok(Prepared { label, clean, frame })
}

fn run_cell(
    input: &Prepared,
    threshold: f64,
    recipe: &WeightRecipe,
    config: &SolverConfig,
) -> Result<(declip_core::SdrReport, usize)> {
    let (clipped, mask) = hard_clip(&input.clean, threshold)?;
    let result = declip(&clipped, &mask, &input.frame, recipe, config)?;
    let check = consistency(result.restored.samples(), clipped.samples(), &mask);
    if !check.holds(CONSISTENCY_TOL) {
        return Err(Error::Inconsistent(format!("{check:?}")));
    }
    let report = delta_sdr(&input.clean, &clipped, &result.restored)?;
    Ok((report, result.iterations_run))
}

/// Run the whole grid on `jobs` threads. Rows come back in config order
/// (file, then threshold, then recipe) whatever the completion order.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutput> {
    config.validate()?;
    let recipes = config.recipes()?;
    let solver = config.solver_config();
    let profile = Profile::from(config.profile);
    let mode = if config.downmix { ChannelMode::Downmix } else { ChannelMode::First };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let rows = pool.install(|| {
        let prepared: Vec<(String, std::result::Result<Prepared, String>)> = config
            .inputs
            .par_iter()
            .map(|path| {
                let label = path.file_name().map_or_else(
                    || path.display().to_string(),
                    |n| n.to_string_lossy().into_owned(),
                );
                let p = prepare(path, label.clone(), mode, profile).map_err(|e| e.to_string());
                (label, p)
            })
            .collect();

        let mut cells = Vec::new();
        for (file_idx, _) in prepared.iter().enumerate() {
            for &threshold in &config.thresholds {
                for recipe in &recipes {
                    cells.push((file_idx, threshold, *recipe));
                }
            }
        }
        cells
            .par_iter()
            .map(|&(file_idx, threshold, recipe)| {
                let (label, input) = &prepared[file_idx];
                let start = Instant::now();
                let outcome = match input {
                    Ok(input) => run_cell(input, threshold, &recipe, &solver).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                let wall_time_s = start.elapsed().as_secs_f64();
                let mut row = ResultRow {
                    file: input.as_ref().map_or_else(|_| label.clone(), |p| p.label.clone()),
                    threshold,
                    recipe: recipe.kind,
                    sdr_clipped_db: None,
                    sdr_restored_db: None,
                    delta_sdr_db: None,
                    iterations: 0,
                    wall_time_s,
                    error: None,
                };
                match outcome {
                    Ok((report, iterations)) => {
                        log::info!(
                            "{} θc={} {}: ΔSDR {:.2} dB ({:.1} s)",
                            row.file,
                            threshold,
                            recipe.kind,
                            report.delta_sdr_db,
                            wall_time_s
                        );
                        row.sdr_clipped_db = Some(report.sdr_clipped_db);
                        row.sdr_restored_db = Some(report.sdr_restored_db);
                        row.delta_sdr_db = Some(report.delta_sdr_db);
                        row.iterations = iterations;
                    }
                    Err(e) => {
                        log::warn!("{} θc={} {}: {}", row.file, threshold, recipe.kind, e);
                        row.error = Some(e);
                    }
                }
                row
            })
            .collect::<Vec<_>>()
    });

    let summary = summarize(&rows, &config.thresholds, &recipes);
    Ok(ExperimentOutput { rows, summary })
}

/// Per-(θc, recipe) means over the rows without errors.
pub fn summarize(rows: &[ResultRow], thresholds: &[f64], recipes: &[WeightRecipe]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &threshold in thresholds {
        for recipe in recipes {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.threshold == threshold && r.recipe == recipe.kind && r.error.is_none())
                .collect();
            let n = cell.len();
            let mean = |f: fn(&ResultRow) -> Option<f64>| {
                if n == 0 {
                    f64::NAN
                } else {
                    cell.iter().filter_map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            out.push(SummaryRow {
                threshold,
                recipe: recipe.kind,
                count: n,
                mean_sdr_clipped_db: mean(|r| r.sdr_clipped_db),
                mean_sdr_restored_db: mean(|r| r.sdr_restored_db),
                mean_delta_sdr_db: mean(|r| r.delta_sdr_db),
            });
        }
    }
    out
}

fn opt_db(v: Option<f64>) -> String {
    v.map(fmt_db).unwrap_or_default()
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv_writer(out, RESULTS_SCHEMA)?;
    w.write_record([
        "file",
        "threshold",
        "recipe",
        "sdr_clipped_db",
        "sdr_restored_db",
        "delta_sdr_db",
        "iterations",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.file.clone(),
            r.threshold.to_string(),
            r.recipe.name().to_string(),
            opt_db(r.sdr_clipped_db),
            opt_db(r.sdr_restored_db),
            opt_db(r.delta_sdr_db),
            r.iterations.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv_writer(out, TIMINGS_SCHEMA)?;
    w.write_record(["file", "threshold", "recipe", "wall_time_s"])?;
    for r in rows {
        w.write_record([
            r.file.clone(),
            r.threshold.to_string(),
            r.recipe.name().to_string(),
            format!("{:.3}", r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(out, SUMMARY_SCHEMA)?;
    w.write_record([
        "threshold",
        "recipe",
        "count",
        "mean_sdr_clipped_db",
        "mean_sdr_restored_db",
        "mean_delta_sdr_db",
    ])?;
    for r in rows {
        w.write_record([
            r.threshold.to_string(),
            r.recipe.name().to_string(),
            r.count.to_string(),
            fmt_db(r.mean_sdr_clipped_db),
            fmt_db(r.mean_sdr_restored_db),
            fmt_db(r.mean_delta_sdr_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `results.csv`, `summary.csv` and `timings.csv` into `dir`.
/// Wall times live only in `timings.csv` so the other two are reproducible
/// byte for byte.
pub fn write_all(dir: &Path, output: &ExperimentOutput) -> Result<[PathBuf; 3]> {
    fs::create_dir_all(dir)?;
    let paths = [dir.join("results.csv"), dir.join("summary.csv"), dir.join("timings.csv")];
    write_results(BufWriter::new(File::create(&paths[0])?), &output.rows)?;
    write_summary(BufWriter::new(File::create(&paths[1])?), &output.summary)?;
    write_timings(BufWriter::new(File::create(&paths[2])?), &output.rows)?;
    Ok(paths)
}
