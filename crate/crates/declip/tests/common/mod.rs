#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use declip::wav::{read_wav, write_wav, ChannelMode, SampleFormat};
use declip_core::Signal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: u32 = 44100;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_declip"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn declip");
    assert!(
        out.status.success(),
        "declip failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn sine(freq: f64, secs: f64, fs: u32, amp: f64) -> Vec<f64> {
    let n = (secs * fs as f64).round() as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / fs as f64).sin()).collect()
}

pub fn peak_normalized(v: Vec<f64>) -> Vec<f64> {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.into_iter().map(|x| x / peak).collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Sum of `count` sinusoids with amplitudes `1/k`, random frequencies in
/// 150–2500 Hz and random phases, plus white noise `snr_db` below the
/// tones' RMS. Returns `(tones, noise)`, both scaled so their sum peaks at 1.
pub fn sines_and_noise(seed: u64, count: usize, secs: f64, fs: u32, snr_db: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * fs as f64).round() as usize;
    let partials: Vec<(f64, f64, f64)> = (1..=count)
        .map(|k| (1.0 / k as f64, rng.gen_range(150.0..2500.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let mut tones: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs as f64;
            partials.iter().map(|&(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum()
        })
        .collect();
    let noise_rms = rms(&tones) * 10f64.powf(-snr_db / 20.0);
    // uniform on [-√3, √3] has unit variance
    let mut noise: Vec<f64> = (0..n).map(|_| noise_rms * rng.gen_range(-3f64.sqrt()..3f64.sqrt())).collect();
    let peak = tones.iter().zip(&noise).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    tones.iter_mut().chain(noise.iter_mut()).for_each(|v| *v /= peak);
    (tones, noise)
}

/// Polyphonic notes with decaying harmonic partials over a quiet noise bed.
pub fn music_like(seed: u64, secs: f64, fs: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (secs * fs as f64).round() as usize;
    let mut x = vec![0.0; n];
    let notes = (secs * 4.0).ceil() as usize;
    for _ in 0..notes {
        let midi = rng.gen_range(45..81) as f64;
        let f0 = 440.0 * 2f64.powf((midi - 69.0) / 12.0);
        let start = rng.gen_range(0..n * 3 / 4);
        let len = ((rng.gen_range(0.3..1.5) * fs as f64) as usize).min(n - start);
        let decay = rng.gen_range(0.3..1.0);
        let gain = rng.gen_range(0.4..1.0);
        let harmonics = ((8000.0 / f0) as usize).clamp(1, 12);
        let partials: Vec<(f64, f64, f64)> = (1..=harmonics)
            .map(|h| {
                let a = gain * rng.gen_range(0.5..1.0) / (h as f64).powf(1.2);
                (a, h as f64 * f0, rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        for i in 0..len {
            let t = i as f64 / fs as f64;
            let attack = (t / 0.01).min(1.0);
            let release = ((len - i) as f64 / (0.02 * fs as f64)).min(1.0);
            let env = attack * release * (-t / decay).exp();
            let s: f64 = partials.iter().map(|&(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum();
            x[start + i] += env * s;
        }
    }
    let floor = rms(&x) * 10f64.powf(-50.0 / 20.0);
    for v in &mut x {
        *v += floor * rng.gen_range(-3f64.sqrt()..3f64.sqrt());
    }
    peak_normalized(x)
}

pub fn write(path: &Path, samples: &[f64], fs: u32, format: SampleFormat) {
    write_wav(path, &Signal::new(samples.to_vec(), fs).unwrap(), format).unwrap();
}

pub fn read(path: &Path) -> Vec<f64> {
    read_wav(path, ChannelMode::First).unwrap().signal.into_samples()
}
