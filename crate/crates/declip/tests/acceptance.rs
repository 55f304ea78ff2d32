//! Acceptance gate. Prints one `[PASS]` / `[FAIL]` line per criterion and
//! exits non-zero if any fails. Extra arguments filter criteria by name.
//!
//! `DECLIP_CORPUS=<dir>` runs the weighting-trend criterion on the WAV files
//! in `<dir>` with the full transform profile instead of synthetic excerpts.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use declip::wav::{read_wav, ChannelMode, SampleFormat};
use declip_core::fft::RustFft;
use declip_core::psycho::{ath_curve, ath_db, global_masking_threshold};
use declip_core::solver::{project_gamma, soft_threshold_scalar};
use declip_core::{
    declip, delta_sdr, detect_mask, hard_clip, peak_normalize, CoefGrid, DeclipProblem, Profile, Signal,
    SolverConfig, WeightGrid, WeightKind, WeightRecipe,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(limit: Duration, start: Instant, mut o: Outcome) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        o.pass = false;
        o.detail = format!("{}; took {:.1} s, limit {} s", o.detail, took.as_secs_f64(), limit.as_secs());
    }
    o
}

fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Signal {
    Signal::new((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(), FS).unwrap()
}

fn frame_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF4A3);
    let (mut worst_parseval, mut worst_recon) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let len = rng.gen_range(FS as usize..=4 * FS as usize);
        let x = random_signal(&mut rng, len);
        let energy: f64 = x.samples().iter().map(|v| v * v).sum();
        for profile in [Profile::Full, Profile::Fast] {
            let frame = profile.frame(len).unwrap();
            let c = frame.analyze(&x).unwrap();
            worst_parseval = worst_parseval.max((c.norm_sqr() - energy).abs() / energy);
            let back = frame.synthesize(&c, FS).unwrap();
            let dev = back.samples().iter().zip(x.samples()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst_recon = worst_recon.max(dev);
        }
    }
    let o = outcome(
        worst_parseval <= 1e-10 && worst_recon <= 1e-10,
        format!("200 transforms, max Parseval rel err {worst_parseval:.2e}, max |DD*x - x| {worst_recon:.2e}"),
    );
    within(Duration::from_secs(60), start, o)
}

fn projection_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9A11);
    let tol = 1e-9;
    let (mut idem, mut rel, mut ineq) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let len = rng.gen_range(4096..3 * FS as usize / 2);
        let x = peak_normalize(&random_signal(&mut rng, len)).unwrap();
        let theta = rng.gen_range(0.1..0.95);
        let (y, mask) = hard_clip(&x, theta).unwrap();
        let frame = Profile::Fast.frame(len).unwrap();
        let (m, t) = frame.grid_shape();
        let problem = DeclipProblem::new(y.clone(), mask.clone(), frame.clone(), WeightGrid::ones(m, t)).unwrap();
        let scale = rng.gen_range(0.01..1.0);
        let data = (0..m * t)
            .map(|_| Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
            .collect();
        let c = CoefGrid::from_vec(m, t, data).unwrap();
        let p = project_gamma(&c, &problem).unwrap();
        let pp = project_gamma(&p, &problem).unwrap();
        idem = idem.max(p.as_slice().iter().zip(pp.as_slice()).fold(0.0f64, |a, (u, v)| a.max((u - v).norm())));
        let z = frame.synthesize(&p, FS).unwrap();
        for n in mask.reliable() {
            rel = rel.max((z.samples()[n] - y.samples()[n]).abs());
        }
        for n in mask.clipped_high() {
            ineq = ineq.max(theta - z.samples()[n]);
        }
        for n in mask.clipped_low() {
            ineq = ineq.max(z.samples()[n] + theta);
        }
    }
    let o = outcome(
        idem <= tol && rel <= tol && ineq <= tol,
        format!("50 problems, idempotence {idem:.2e}, reliable deviation {rel:.2e}, H/L violation {:.2e}", ineq.max(0.0)),
    );
    within(Duration::from_secs(60), start, o)
}

/// Minimize `f` on `[lo, hi]` by golden-section search.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the minimizer may sit on the boundary r = 0
    if f(0.0) <= f(mid) {
        0.0
    } else {
        mid
    }
}

fn proximal_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x50F7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = Complex64::from_polar(rng.gen_range(0.0..5.0), rng.gen_range(-PI..PI));
        let gamma_w = rng.gen_range(0.0..3.0);
        // for a fixed magnitude r the phase of z is optimal, leaving a 1-D problem
        let r = golden_section(|r| gamma_w * r + 0.5 * (r - z.norm()).powi(2), 0.0, z.norm());
        let want = if z.norm() > 0.0 { z * (r / z.norm()) } else { z };
        worst = worst.max((soft_threshold_scalar(z, gamma_w) - want).norm());
    }
    within(
        Duration::from_secs(10),
        start,
        outcome(worst <= 1e-6, format!("1000 scalars, max deviation {worst:.2e}")),
    )
}

fn ath_formula() -> Outcome {
    let direct = |f: f64| {
        let k = f / 1000.0;
        3.64 * k.powf(-0.8) - 6.5 * (-0.6 * (k - 3.3).powi(2)).exp() + 1e-3 * k.powi(4)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let f = rng.gen_range(20.0..20000.0);
        let want = direct(f);
        if want >= 100.0 {
            continue;
        }
        worst = worst.max((ath_db(f).unwrap() - want).abs());
        checked += 1;
    }
    let at_1k = ath_db(1000.0).unwrap();
    let at_3k3 = ath_db(3300.0).unwrap();
    let spots = (at_1k - 3.37).abs() < 0.005 && (at_3k3 + 4.98).abs() < 0.005;
    outcome(
        worst <= 1e-12 && spots,
        format!("max deviation {worst:.2e}; 1 kHz {at_1k:.3} dB, 3.3 kHz {at_3k3:.3} dB"),
    )
}

fn gmt_invariants() -> Outcome {
    let m = 8192;
    let fft = RustFft::new(m);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E7);
    let music = music_like(11, 3.0, FS);
    let mut worst = f64::INFINITY;
    let mut total_maskers_frames = 0;
    for i in 0..20 {
        let gain = 10f64.powf(rng.gen_range(-4.0..0.0));
        let frame: Vec<f64> = match i % 3 {
            0 => {
                let off = rng.gen_range(0..music.len() - m);
                music[off..off + m].iter().map(|v| v * gain).collect()
            }
            1 => (0..m).map(|_| gain * rng.gen_range(-1.0..1.0)).collect(),
            _ => {
                let f = rng.gen_range(50.0..15000.0);
                sine(f, m as f64 / FS as f64, FS, gain)
            }
        };
        let gmt = global_masking_threshold(&frame, &fft, FS).unwrap();
        let ath = ath_curve(m, FS);
        let margin = gmt.values_db.iter().zip(&ath.values_db).fold(f64::INFINITY, |a, (g, q)| a.min(g - q));
        if gmt.values_db != ath.values_db {
            total_maskers_frames += 1;
        }
        worst = worst.min(margin);
    }
    let silent = global_masking_threshold(&vec![0.0; m], &fft, FS).unwrap();
    let ath = ath_curve(m, FS);
    let silent_dev = silent.values_db.iter().zip(&ath.values_db).fold(0.0f64, |a, (g, q)| a.max((g - q).abs()));
    outcome(
        worst >= 0.0 && silent_dev <= 1e-12,
        format!(
            "20 frames ({total_maskers_frames} with masking), min GMT - ATH {worst:.3} dB; silent frame deviation {silent_dev:.1e}"
        ),
    )
}

fn clipping_analytics() -> Outcome {
    // 1 s of a 1 kHz sine at 10x oversampling
    let fs = 441_000;
    let x = Signal::new(sine(1000.0, 1.0, fs, 1.0), fs).unwrap();
    let (_, mask) = hard_clip(&x, 0.5).unwrap();
    let frac = mask.clipped_fraction();
    let want = 1.0 - 2.0 / PI * 0.5f64.asin();
    outcome(
        ((frac - want) / want).abs() <= 0.01,
        format!("clipped fraction {frac:.5}, expected {want:.5}"),
    )
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let (tones, noise) = sines_and_noise(5, 5, 1.0, FS, 40.0);
    let clean = Signal::new(tones.iter().zip(&noise).map(|(a, b)| a + b).collect(), FS).unwrap();
    let frame = Profile::Fast.frame(clean.len()).unwrap();
    let config = SolverConfig::with_iterations(Profile::Fast.iterations());
    let energy: f64 = clean.samples().iter().map(|v| v * v).sum();
    let mut deltas = Vec::new();
    let mut parts = Vec::new();
    for theta in [0.3, 0.5, 0.7] {
        let (y, mask) = hard_clip(&clean, theta).unwrap();
        let r = declip(&y, &mask, &frame, &WeightRecipe::new(WeightKind::None), &config).unwrap();
        let report = delta_sdr(&clean, &y, &r.restored).unwrap();
        // best case: the tones are recovered exactly and only the noise on
        // clipped samples is lost
        let lost: f64 = mask.clipped_high().chain(mask.clipped_low()).map(|n| noise[n] * noise[n]).sum();
        let ceiling = 10.0 * (energy / lost).log10();
        parts.push(format!(
            "θc={theta}: ΔSDR {:.2} dB (SDR {:.2} -> {:.2}, noise-limited ceiling {:.2})",
            report.delta_sdr_db, report.sdr_clipped_db, report.sdr_restored_db, ceiling
        ));
        deltas.push(report.delta_sdr_db);
    }
    let above = deltas.iter().all(|&d| d > 5.0);
    let monotone = deltas.windows(2).all(|w| w[1] >= w[0]);
    let o = outcome(
        above && monotone,
        format!("{}; > 5 dB: {above}, non-decreasing: {monotone}", parts.join("; ")),
    );
    within(Duration::from_secs(300), start, o)
}

fn corpus_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .expect("DECLIP_CORPUS is not a readable directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    files
}

fn weighting_trend() -> Outcome {
    let thresholds = [0.3, 0.5, 0.7];
    let (excerpts, profile, min_gap, label) = match std::env::var_os("DECLIP_CORPUS") {
        Some(dir) => {
            let mut full_scale = true;
            let excerpts: Vec<Signal> = corpus_files(Path::new(&dir))
                .iter()
                .map(|p| {
                    let s = read_wav(p, ChannelMode::Downmix).unwrap().signal;
                    let keep = s.len().min(7 * s.sample_rate() as usize);
                    full_scale &= s.sample_rate() == FS && keep == 7 * FS as usize;
                    peak_normalize(&Signal::new(s.samples()[..keep].to_vec(), s.sample_rate()).unwrap()).unwrap()
                })
                .collect();
            let gap = if full_scale { 3.0 } else { 0.0 };
            (excerpts, Profile::Full, gap, format!("corpus {:?}", dir))
        }
        None => {
            let excerpts = (1..=3).map(|seed| Signal::new(music_like(seed, 2.0, FS), FS).unwrap()).collect();
            (excerpts, Profile::Fast, 0.0, "3 synthetic excerpts".to_string())
        }
    };
    if excerpts.len() < 3 {
        return outcome(false, format!("{label}: need at least 3 excerpts, found {}", excerpts.len()));
    }
    let config = SolverConfig::with_iterations(profile.iterations());
    let mut ok = true;
    let mut parts = Vec::new();
    for theta in thresholds {
        let mut sums = [0.0; 2];
        for x in &excerpts {
            let frame = profile.frame(x.len()).unwrap();
            let (y, mask) = hard_clip(x, theta).unwrap();
            for (i, kind) in [WeightKind::None, WeightKind::Parabola].into_iter().enumerate() {
                let r = declip(&y, &mask, &frame, &WeightRecipe::new(kind), &config).unwrap();
                sums[i] += delta_sdr(x, &y, &r.restored).unwrap().delta_sdr_db;
            }
        }
        let [none, parabola] = sums.map(|s| s / excerpts.len() as f64);
        let gap = parabola - none;
        ok &= gap > min_gap;
        parts.push(format!("θc={theta}: none {none:.2}, parabola {parabola:.2} dB"));
    }
    let need = if min_gap > 0.0 { format!("gap > {min_gap} dB") } else { "parabola > none".to_string() };
    outcome(ok, format!("{label}, {} profile, {need}; {}", profile.name(), parts.join("; ")))
}

fn consistency_guarantee() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.wav");
    write(&src, &music_like(21, 1.0, FS), FS, SampleFormat::Float32);
    let mut runs = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (fmt_flag, fmt) in [(None, "f32"), (Some("--pcm16"), "pcm16")] {
        for theta in ["0.25", "0.6"] {
            let clipped = dir.path().join(format!("clip_{fmt}_{theta}.wav"));
            let mut clip = bin();
            clip.args(["-q", "clip"]).arg(&src).arg(&clipped).args(["--threshold", theta]);
            clip.args(fmt_flag);
            run_ok(&mut clip);
            let y = read(&clipped);
            let observed = Signal::new(y.clone(), FS).unwrap();
            let mask = detect_mask(&observed, observed.peak()).unwrap();
            for recipe in ["none", "ath1", "ath3", "gmt1", "gmt2", "parabola"] {
                let out = dir.path().join(format!("out_{fmt}_{theta}_{recipe}.wav"));
                let mut cmd = bin();
                cmd.args(["-q", "declip"]).arg(&clipped).arg(&out);
                cmd.args(["--weights", recipe, "--fast", "--iterations", "40"]).args(fmt_flag);
                let res = cmd.output().unwrap();
                runs += 1;
                if !res.status.success() {
                    failures.push(format!("{fmt}/{theta}/{recipe}: exit {:?}", res.status.code()));
                    continue;
                }
                let x = read(&out);
                let theta = mask.threshold();
                let mut dev = 0.0f64;
                for n in mask.reliable() {
                    dev = dev.max((x[n] - y[n]).abs());
                }
                for n in mask.clipped_high() {
                    dev = dev.max(theta - x[n]);
                }
                for n in mask.clipped_low() {
                    dev = dev.max(x[n] + theta);
                }
                worst = worst.max(dev);
                if dev > 1e-9 {
                    failures.push(format!("{fmt}/{theta}/{recipe}: deviation {dev:.2e}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} of {runs} CLI runs consistent, worst deviation {worst:.1e} {}", runs - failures.len(), failures.join(", ")),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    for (i, seed) in [31u64, 32].iter().enumerate() {
        write(&dir.path().join(format!("in{i}.wav")), &music_like(*seed, 0.5, FS), FS, SampleFormat::Pcm16);
    }
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "inputs = [\"in0.wav\", \"in1.wav\"]\nthresholds = [0.3, 0.6]\nrecipes = [\"none\", \"gmt3\", \"parabola\"]\nprofile = \"fast\"\niterations = 25\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(run);
        let mut cmd = bin();
        cmd.args(["-q", "experiment"]).arg(&config).arg("--output-dir").arg(&out).env("DECLIP_JOBS", jobs);
        run_ok(&mut cmd);
        outputs.push((fs::read(out.join("results.csv")).unwrap(), fs::read(out.join("summary.csv")).unwrap()));
    }
    let rows = String::from_utf8_lossy(&outputs[0].0).lines().count().saturating_sub(2);
    outcome(
        outputs[0] == outputs[1] && rows == 12,
        format!("{rows} result rows; 1 vs 3 workers byte-identical: {}", outputs[0] == outputs[1]),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("frame correctness", frame_correctness),
        ("projection suite", projection_suite),
        ("proximal oracle", proximal_oracle),
        ("ATH formula", ath_formula),
        ("GMT invariants", gmt_invariants),
        ("clipping analytics", clipping_analytics),
        ("end-to-end restoration", end_to_end),
        ("weighting trend", weighting_trend),
        ("consistency guarantee", consistency_guarantee),
        ("determinism", determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let (mut passed, mut failed) = (0, 0);
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} [{:.1} s]", result.detail, start.elapsed().as_secs_f64());
        if result.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
