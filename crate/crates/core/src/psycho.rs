//! Absolute threshold of hearing and a simplified MPEG-1 psychoacoustic
//! model 1 in which every masker is treated as tonal.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::Fft;
use crate::gabor::{hann, GaborFrame};
use crate::math::{atan, db_to_power, exp, log10, pow, power_to_db};
use crate::{Error, Result};

/// Ceiling applied to threshold curves (dB SPL).
pub const CURVE_CEILING_DB: f64 = 100.0;

/// PSD floor for empty bins (dB SPL).
pub const PSD_FLOOR_DB: f64 = -100.0;

/// PSD level of a full-scale sinusoid centred on a bin.
pub const FULL_SCALE_DB: f64 = 96.0;

/// Minimum prominence of a tonal masker over its neighbourhood.
pub const TONAL_PROMINENCE_DB: f64 = 7.0;

/// Values in dB SPL sampled at the non-negative DFT bins `0..=M/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    pub bin_freqs: Vec<f64>,
    pub values_db: Vec<f64>,
}

impl ThresholdCurve {
    pub fn len(&self) -> usize {
        self.values_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_db.is_empty()
    }

    pub fn max_db(&self) -> f64 {
        self.values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_db(&self) -> f64 {
        self.values_db.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Masker {
    pub bin: usize,
    pub level_db: f64,
    pub bark: f64,
}

/// Terhardt's threshold-in-quiet approximation, without any clamp.
pub fn terhardt_db(freq_hz: f64) -> f64 {
    let g = freq_hz / 1000.0;
    3.64 * pow(g, -0.8) - 6.5 * exp(-0.6 * (g - 3.3) * (g - 3.3)) + 1e-3 * pow(g, 4.0)
}

/// Absolute threshold of hearing in dB SPL, capped at [`CURVE_CEILING_DB`].
pub fn ath_db(freq_hz: f64) -> Result<f64> {
    if !(freq_hz > 0.0) || !freq_hz.is_finite() {
        return Err(Error::InvalidFrequency(freq_hz));
    }
    Ok(terhardt_db(freq_hz).min(CURVE_CEILING_DB))
}

/// Critical-band rate (Zwicker).
pub fn bark(freq_hz: f64) -> f64 {
    13.0 * atan(0.00076 * freq_hz) + 3.5 * atan((freq_hz / 7500.0) * (freq_hz / 7500.0))
}

/// Frequencies of bins `0..=channels/2`.
pub fn bin_freqs(channels: usize, sample_rate: u32) -> Vec<f64> {
    (0..=channels / 2)
        .map(|k| k as f64 * sample_rate as f64 / channels as f64)
        .collect()
}

/// ATH sampled on the non-negative bins of an `channels`-point DFT. DC gets
/// the ceiling value since the formula diverges at 0 Hz.
pub fn ath_curve(channels: usize, sample_rate: u32) -> ThresholdCurve {
    let bin_freqs = bin_freqs(channels, sample_rate);
    let values_db = bin_freqs
        .iter()
        .map(|&f| if f > 0.0 { terhardt_db(f).min(CURVE_CEILING_DB) } else { CURVE_CEILING_DB })
        .collect();
    ThresholdCurve { bin_freqs, values_db }
}

pub fn ath_vector(frame: &GaborFrame, sample_rate: u32) -> ThresholdCurve {
    ath_curve(frame.channels(), sample_rate)
}

/// One-sided PSD estimate of a Hann-windowed frame, calibrated so that a
/// full-scale sinusoid on a bin centre reads [`FULL_SCALE_DB`].
pub fn psd_estimate(frame: &[f64], fft: &dyn Fft, sample_rate: u32) -> Result<ThresholdCurve> {
    let m = fft.len();
    if frame.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: frame.len() });
    }
    let window = hann(m);
    let mut buf: Vec<Complex64> = frame
        .iter()
        .zip(&window)
        .map(|(s, w)| Complex64::new(s * w, 0.0))
        .collect();
    fft.forward(&mut buf);
    // A unit sinusoid on a bin centre gives |X| = Σw / 2 = M / 4.
    let offset = FULL_SCALE_DB - 20.0 * log10(m as f64 / 4.0);
    let values_db = buf[..=m / 2]
        .iter()
        .map(|x| (offset + power_to_db(x.norm_sqr())).max(PSD_FLOOR_DB))
        .collect();
    Ok(ThresholdCurve { bin_freqs: bin_freqs(m, sample_rate), values_db })
}

/// Neighbourhood offsets a tonal candidate at bin `k` must dominate.
fn neighbourhood(k: usize) -> core::ops::RangeInclusive<usize> {
    match k {
        0..=62 => 2..=2,
        63..=126 => 2..=3,
        127..=254 => 2..=6,
        _ => 2..=12,
    }
}

/// Tonal maskers of a PSD: prominent strict local maxima above the ATH,
/// decimated so no two survivors lie within 0.5 Bark.
pub fn find_tonal_maskers(psd: &ThresholdCurve) -> Vec<Masker> {
    let p = &psd.values_db;
    let k_max = p.len();
    let mut found: Vec<Masker> = Vec::new();
    for k in 1..k_max.saturating_sub(1) {
        if !(p[k] > p[k - 1] && p[k] > p[k + 1]) {
            continue;
        }
        let prominent = neighbourhood(k).all(|d| {
            let above = k + d >= k_max || p[k] - p[k + d] >= TONAL_PROMINENCE_DB;
            let below = d > k || p[k] - p[k - d] >= TONAL_PROMINENCE_DB;
            above && below
        });
        if !prominent {
            continue;
        }
        let level_db =
            power_to_db(db_to_power(p[k - 1]) + db_to_power(p[k]) + db_to_power(p[k + 1]));
        let freq = psd.bin_freqs[k];
        if freq <= 0.0 || level_db < terhardt_db(freq).min(CURVE_CEILING_DB) {
            continue;
        }
        let masker = Masker { bin: k, level_db, bark: bark(freq) };
        match found.last_mut() {
            Some(prev) if masker.bark - prev.bark < 0.5 => {
                if masker.level_db > prev.level_db {
                    *prev = masker;
                }
            }
            _ => found.push(masker),
        }
    }
    found
}

/// Two-sided, level-dependent spreading function of model 1 (dB), defined
/// for `-3 <= dz < 8` Bark.
pub fn spreading_db(dz: f64, level_db: f64) -> Option<f64> {
    if (-3.0..-1.0).contains(&dz) {
        Some(17.0 * (dz + 1.0) - (0.4 * level_db + 6.0))
    } else if (-1.0..0.0).contains(&dz) {
        Some((0.4 * level_db + 6.0) * dz)
    } else if (0.0..1.0).contains(&dz) {
        Some(-17.0 * dz)
    } else if (1.0..8.0).contains(&dz) {
        Some(-(dz - 1.0) * (17.0 - 0.15 * level_db) - 17.0)
    } else {
        None
    }
}

/// Individual threshold of a tonal masker at a maskee of critical-band rate
/// `maskee_bark`.
pub fn individual_threshold_db(masker: &Masker, maskee_bark: f64) -> Option<f64> {
    spreading_db(maskee_bark - masker.bark, masker.level_db)
        .map(|sf| masker.level_db - 0.275 * masker.bark - 6.025 + sf)
}

/// Power-additive combination of the ATH and the individual thresholds of
/// `maskers`, capped at [`CURVE_CEILING_DB`].
pub fn masking_threshold_from_maskers(maskers: &[Masker], ath: &ThresholdCurve) -> ThresholdCurve {
    if maskers.is_empty() {
        return ath.clone();
    }
    let values_db = ath
        .bin_freqs
        .iter()
        .zip(&ath.values_db)
        .map(|(&f, &quiet)| {
            let z = bark(f);
            let masking: f64 = maskers
                .iter()
                .filter_map(|mk| individual_threshold_db(mk, z))
                .map(db_to_power)
                .sum();
            if masking == 0.0 {
                return quiet;
            }
            // max() guards against dB round-trip error
            power_to_db(db_to_power(quiet) + masking).max(quiet).min(CURVE_CEILING_DB)
        })
        .collect();
    ThresholdCurve { bin_freqs: ath.bin_freqs.clone(), values_db }
}

/// Intermediate results of the masking model for one frame.
#[derive(Debug, Clone)]
pub struct MaskingAnalysis {
    pub psd: ThresholdCurve,
    pub ath: ThresholdCurve,
    pub maskers: Vec<Masker>,
    pub gmt: ThresholdCurve,
}

pub fn analyze_masking(frame: &[f64], fft: &dyn Fft, sample_rate: u32) -> Result<MaskingAnalysis> {
    let psd = psd_estimate(frame, fft, sample_rate)?;
    let ath = ath_curve(fft.len(), sample_rate);
    let maskers = find_tonal_maskers(&psd);
    let gmt = masking_threshold_from_maskers(&maskers, &ath);
    Ok(MaskingAnalysis { psd, ath, maskers, gmt })
}

/// Global masking threshold of one frame of `fft.len()` samples.
pub fn global_masking_threshold(
    frame: &[f64],
    fft: &dyn Fft,
    sample_rate: u32,
) -> Result<ThresholdCurve> {
    analyze_masking(frame, fft, sample_rate).map(|a| a.gmt)
}

/// GMT of every DGT frame of `x` (same window positions, `M` samples each).
pub fn frame_masking_thresholds(
    frame: &GaborFrame,
    x: &[f64],
    sample_rate: u32,
) -> Result<Vec<ThresholdCurve>> {
    if x.len() != frame.signal_len() {
        return Err(Error::LengthMismatch { expected: frame.signal_len(), found: x.len() });
    }
    let fft = frame.fft().as_ref();
    (0..frame.frames())
        .map(|t| global_masking_threshold(&frame.frame_segment(x, t), fft, sample_rate))
        .collect()
}
