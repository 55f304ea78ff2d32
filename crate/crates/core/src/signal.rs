//! Sampled signals, the hard-clipping model and clip-mask detection.

use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

/// Real-valued sampled waveform.
///
/// Always non-empty and finite; amplitudes are dimensionless and nominally
/// within `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &s| f64::max(m, abs(s)))
    }
}

/// Which clipping set a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleClass {
    /// Untouched by clipping (set R).
    Reliable,
    /// Clipped from above to `+θc` (set H).
    High,
    /// Clipped from below to `-θc` (set L).
    Low,
}

/// Partition of sample indices into the reliable, clipped-high and
/// clipped-low sets, together with the threshold `θc`.
///
/// Stored as one class per sample, so the sets are disjoint and cover every
/// index by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipMask {
    classes: Vec<SampleClass>,
    threshold: f64,
}

impl ClipMask {
    pub fn from_classes(classes: Vec<SampleClass>, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidThreshold(threshold));
        }
        if classes.is_empty() {
            return Err(Error::EmptySignal);
        }
        Ok(Self { classes, threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[SampleClass] {
        &self.classes
    }

    pub fn class(&self, n: usize) -> SampleClass {
        self.classes[n]
    }

    fn indices(&self, which: SampleClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == which)
            .map(|(n, _)| n)
    }

    pub fn reliable(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(SampleClass::Reliable)
    }

    pub fn clipped_high(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(SampleClass::High)
    }

    pub fn clipped_low(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(SampleClass::Low)
    }

    pub fn clipped_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|&&c| c != SampleClass::Reliable)
            .count()
    }

    /// Fraction of samples in H ∪ L.
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_count() as f64 / self.classes.len() as f64
    }
}

/// Scale `s` so its largest absolute sample is exactly 1.
pub fn peak_normalize(s: &Signal) -> Result<Signal> {
    let peak = s.peak();
    if peak == 0.0 {
        return Err(Error::ZeroPeak);
    }
    let samples = s.samples.iter().map(|&v| v / peak).collect();
    Ok(Signal { samples, sample_rate: s.sample_rate })
}

/// Hard-clip `x` at `±θc`. Samples with `|x_n| ≥ θc` are clipped, so a sample
/// sitting exactly on the threshold lands in H or L.
pub fn hard_clip(x: &Signal, threshold: f64) -> Result<(Signal, ClipMask)> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidThreshold(threshold));
    }
    let mut samples = Vec::with_capacity(x.len());
    let mut classes = Vec::with_capacity(x.len());
    for &v in &x.samples {
        if v >= threshold {
            samples.push(threshold);
            classes.push(SampleClass::High);
        } else if v <= -threshold {
            samples.push(-threshold);
            classes.push(SampleClass::Low);
        } else {
            samples.push(v);
            classes.push(SampleClass::Reliable);
        }
    }
    Ok((
        Signal { samples, sample_rate: x.sample_rate },
        ClipMask { classes, threshold },
    ))
}

/// Classify the samples of an observed clipped signal.
pub fn detect_mask(y: &Signal, threshold: f64) -> Result<ClipMask> {
    detect_mask_with_tolerance(y, threshold, 0.0)
}

/// Like [`detect_mask`], but samples within `tolerance` of `±θc` count as
/// clipped and samples up to `θc + tolerance` in magnitude are accepted.
/// Meant for externally clipped recordings whose plateaus are not exact.
pub fn detect_mask_with_tolerance(y: &Signal, threshold: f64, tolerance: f64) -> Result<ClipMask> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidThreshold(threshold));
    }
    let tolerance = tolerance.max(0.0);
    let mut classes = Vec::with_capacity(y.len());
    for (index, &v) in y.samples.iter().enumerate() {
        if abs(v) > threshold + tolerance {
            return Err(Error::ExceedsThreshold { index, value: v, threshold });
        }
        classes.push(if v >= threshold - tolerance {
            SampleClass::High
        } else if v <= -(threshold - tolerance) {
            SampleClass::Low
        } else {
            SampleClass::Reliable
        });
    }
    Ok(ClipMask { classes, threshold })
}
