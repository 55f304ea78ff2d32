//! Subcommand implementations behind the `declip` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use declip_core::psycho::{analyze_masking, ath_curve};
use declip_core::signal::detect_mask_with_tolerance;
use declip_core::solver::{consistency, CONSISTENCY_TOL};
use declip_core::weights::DEFAULT_TAU_DB;
use declip_core::{
    declip, delta_sdr, hard_clip, peak_normalize, Profile, Signal, SolverConfig, WeightKind, WeightRecipe,
};

use crate::csv_out::{self, Band};
use crate::experiment::{self, ExperimentConfig, ProfileName};
use crate::wav::{read_wav, write_wav, ChannelMode, SampleFormat};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "declip", version, about = "Restore hard-clipped audio by weighted sparse recovery")]
pub struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak-normalize a file and hard-clip it.
    Clip(ClipArgs),
    /// Restore a clipped file.
    Declip(DeclipArgs),
    /// Run a files × thresholds × recipes evaluation grid from a TOML config.
    Experiment(ExperimentArgs),
    /// Export threshold and weight curves as CSV.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct ClipArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Clipping level θc relative to the peak.
    #[arg(short, long)]
    pub threshold: f64,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pub pcm16: bool,
    /// Average all channels instead of taking the first.
    #[arg(long)]
    pub downmix: bool,
}

#[derive(Debug, Args)]
pub struct DeclipArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Clipping level of the input. Defaults to the input's peak.
    #[arg(short, long)]
    pub threshold: Option<f64>,
    /// Weight recipe: none, ath1..3, gmt1..3 or parabola.
    #[arg(short, long, default_value = "none", value_parser = parse_recipe)]
    pub weights: WeightKind,
    /// Iterations per solver pass. Defaults to the profile's count.
    #[arg(short = 'n', long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Offset τ in dB for the ath2/ath3/gmt2/gmt3 recipes.
    #[arg(long, default_value_t = DEFAULT_TAU_DB)]
    pub tau: f64,
    #[arg(long, value_enum, default_value = "default")]
    pub profile: ProfileArg,
    /// Shorthand for `--profile fast`.
    #[arg(long, conflicts_with = "profile")]
    pub fast: bool,
    /// Clean signal to score against; it is peak-normalized first.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Treat samples within this distance of ±θc as clipped.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub downmix: bool,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pub pcm16: bool,
    /// Write the per-iteration objective of the final pass to this CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    pub config: PathBuf,
    /// Worker threads (0 = one per core). `DECLIP_JOBS` takes precedence.
    #[arg(short, long)]
    pub jobs: Option<usize>,
    /// Overrides `output_dir` from the config.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Default,
    Fast,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Default => Profile::Full,
            ProfileArg::Fast => Profile::Fast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Ath,
    Weights,
    Gmt,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, value_enum)]
    pub what: CurveKind,
    /// DFT size. Defaults to the profile's channel count, or the input's
    /// length when it is shorter.
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long, value_enum, default_value = "default")]
    pub profile: ProfileArg,
    #[arg(long, default_value_t = 44100)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = DEFAULT_TAU_DB)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_freq: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_freq: f64,
    /// WAV file to analyse (`--what gmt`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Frame index (hop-spaced) for `--what gmt`. Defaults to the loudest frame.
    #[arg(long)]
    pub frame: Option<usize>,
    #[arg(long)]
    pub downmix: bool,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_recipe(s: &str) -> std::result::Result<WeightKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = WeightKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown recipe {s:?} (expected one of {})", names.join(", "))
    })
}

fn channel_mode(downmix: bool) -> ChannelMode {
    if downmix {
        ChannelMode::Downmix
    } else {
        ChannelMode::First
    }
}

fn format_of(pcm16: bool) -> SampleFormat {
    if pcm16 {
        SampleFormat::Pcm16
    } else {
        SampleFormat::Float32
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Clip(a) => cmd_clip(&a),
        Command::Declip(a) => cmd_declip(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::Curves(a) => cmd_curves(&a),
    }
}

pub fn cmd_clip(args: &ClipArgs) -> Result<()> {
    if !(args.threshold > 0.0) || !args.threshold.is_finite() {
        return Err(declip_core::Error::InvalidThreshold(args.threshold).into());
    }
    let format = format_of(args.pcm16);
    let audio = read_wav(&args.input, channel_mode(args.downmix))?;
    let normalized = peak_normalize(&audio.signal)?;
    // store the plateau exactly in the output format
    let threshold = format.snap(args.threshold);
    let (clipped, mask) = hard_clip(&normalized, threshold)?;
    write_wav(&args.output, &clipped, format)?;
    println!("threshold: {threshold}");
    println!(
        "clipped: {:.2} % ({} of {} samples)",
        100.0 * mask.clipped_fraction(),
        mask.clipped_count(),
        mask.len()
    );
    Ok(())
}

pub fn cmd_declip(args: &DeclipArgs) -> Result<()> {
    let profile = if args.fast { Profile::Fast } else { args.profile.into() };
    let format = format_of(args.pcm16);
    let audio = read_wav(&args.input, channel_mode(args.downmix))?;
    let observed = audio.signal;
    let threshold = audio.format.snap(args.threshold.unwrap_or_else(|| observed.peak()));
    if !(args.tolerance >= 0.0) {
        return Err(Error::InvalidConfig("tolerance must be non-negative".into()));
    }
    let mask = detect_mask_with_tolerance(&observed, threshold, args.tolerance)
        .map_err(|e| Error::Inconsistent(format!("input does not match θc = {threshold}: {e}")))?;
    println!("threshold: {threshold}");
    println!(
        "samples: {} reliable, {} high, {} low ({:.2} % clipped)",
        mask.reliable().count(),
        mask.clipped_high().count(),
        mask.clipped_low().count(),
        100.0 * mask.clipped_fraction()
    );

    let frame = profile.frame(observed.len())?;
    let config = SolverConfig {
        gamma: args.gamma,
        lambda: args.lambda,
        max_iter: args.iterations.unwrap_or(profile.iterations()),
        record_objective: args.trace.is_some(),
    };
    let recipe = WeightRecipe::with_tau(args.weights, args.tau);
    log::info!(
        "{} profile: window {}, hop {}, {} channels, {} frames",
        profile.name(),
        frame.window_len(),
        frame.hop(),
        frame.channels(),
        frame.frames()
    );
    let result = declip(&observed, &mask, &frame, &recipe, &config)?;

    // check what will actually be stored, after rounding to the file format
    let stored: Vec<f64> = result.restored.samples().iter().map(|&v| format.snap(v)).collect();
    let check = consistency(&stored, observed.samples(), &mask);
    if !check.holds(CONSISTENCY_TOL) {
        return Err(Error::Inconsistent(format!(
            "restored signal leaves the consistency set: reliable deviation {:e}, high violation {:e}, low violation {:e}",
            check.reliable_max_dev, check.high_violation, check.low_violation
        )));
    }
    println!(
        "consistency: ok (reliable max deviation {:e}, high violation {:e}, low violation {:e})",
        check.reliable_max_dev,
        check.high_violation.max(0.0),
        check.low_violation.max(0.0)
    );
    let restored = Signal::new(stored, observed.sample_rate())?;
    write_wav(&args.output, &restored, format)?;

    if let Some(path) = &args.trace {
        if let Some(trace) = &result.objective_trace {
            csv_out::write_trace(BufWriter::new(File::create(path)?), trace)?;
        }
    }
    if let Some(path) = &args.reference {
        let clean = peak_normalize(&read_wav(path, channel_mode(args.downmix))?.signal)?;
        let report = delta_sdr(&clean, &observed, &restored)?;
        println!("sdr_clipped_db: {}", csv_out::fmt_db(report.sdr_clipped_db));
        println!("sdr_restored_db: {}", csv_out::fmt_db(report.sdr_restored_db));
        println!("delta_sdr_db: {}", csv_out::fmt_db(report.delta_sdr_db));
    }
    Ok(())
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    let env = std::env::var(experiment::JOBS_ENV).ok();
    let jobs = experiment::resolve_jobs(env.as_deref(), args.jobs, config.jobs)?;
    log::info!(
        "{} files × {} thresholds × {} recipes, {} profile",
        config.inputs.len(),
        config.thresholds.len(),
        config.recipes.len(),
        if config.profile == ProfileName::Fast { "fast" } else { "default" }
    );
    let output = experiment::run(&config, jobs)?;
    let paths = experiment::write_all(&config.output_dir, &output)?;
    let failed = output.rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows ({} failed)", output.rows.len(), failed);
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn curves_sink(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn cmd_curves(args: &CurvesArgs) -> Result<()> {
    let band = Band { min_hz: args.min_freq, max_hz: args.max_freq };
    let profile: Profile = args.profile.into();
    match args.what {
        CurveKind::Ath | CurveKind::Weights => {
            let channels = args.channels.unwrap_or(profile.channels());
            if channels < 2 {
                return Err(Error::InvalidConfig("need at least 2 channels".into()));
            }
            let ath = ath_curve(channels, args.sample_rate);
            let out = curves_sink(args.output.as_deref())?;
            if args.what == CurveKind::Ath {
                csv_out::write_ath(out, &ath, band)
            } else {
                csv_out::write_weights(out, &ath, args.tau, band)
            }
        }
        CurveKind::Gmt => {
            let input = args
                .input
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("--what gmt needs --input".into()))?;
            let signal = read_wav(input, channel_mode(args.downmix))?.signal;
            let channels = args.channels.unwrap_or(profile.channels()).min(signal.len());
            if channels < 2 {
                return Err(Error::InvalidConfig("input too short".into()));
            }
            let hop = (channels / 4).max(1);
            let x = signal.samples();
            let frames = (x.len() - channels) / hop + 1;
            let index = match args.frame {
                Some(i) if i < frames => i,
                Some(i) => {
                    return Err(Error::InvalidConfig(format!("frame {i} out of range (0..{frames})")))
                }
                None => (0..frames)
                    .max_by(|&a, &b| {
                        let e = |t: usize| x[t * hop..t * hop + channels].iter().map(|v| v * v).sum::<f64>();
                        e(a).total_cmp(&e(b))
                    })
                    .unwrap_or(0),
            };
            let segment = &x[index * hop..index * hop + channels];
            let fft = declip_core::fft::RustFft::new(channels);
            let analysis = analyze_masking(segment, &fft, signal.sample_rate())?;
            log::info!(
                "frame {index} at {:.3} s: {} tonal maskers",
                (index * hop) as f64 / signal.sample_rate() as f64,
                analysis.maskers.len()
            );
            let out = curves_sink(args.output.as_deref())?;
            csv_out::write_gmt(out, &analysis.psd, &analysis.ath, &analysis.gmt, args.tau, band)
        }
    }
}
