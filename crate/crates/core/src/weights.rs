//! Weight grids for the weighted ℓ1 norm.
//!
//! Curves are computed on the non-negative frequency bins `0..=M/2` and
//! mirrored onto the conjugate channels `M - m`, so both halves of a real
//! signal's spectrum are shrunk alike.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::gabor::GaborFrame;
use crate::math::pow;
use crate::psycho::{ath_curve, frame_masking_thresholds};
use crate::{Error, Result, Signal};

pub const DEFAULT_TAU_DB: f64 = 100.0;

/// How a threshold curve `t` (dB) becomes weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveVariant {
    /// `(t - min(t) + 1)^-1`
    Inverse,
    /// `τ - t`
    Linear,
    /// `2·10^-5 · 10^((τ - t)/20)`, i.e. the linear variant in pascals.
    Pressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeightKind {
    None,
    Ath1,
    Ath2,
    Ath3,
    Gmt1,
    Gmt2,
    Gmt3,
    Parabola,
}

impl WeightKind {
    pub const ALL: [WeightKind; 8] = [
        WeightKind::None,
        WeightKind::Ath1,
        WeightKind::Ath2,
        WeightKind::Ath3,
        WeightKind::Gmt1,
        WeightKind::Gmt2,
        WeightKind::Gmt3,
        WeightKind::Parabola,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightKind::None => "none",
            WeightKind::Ath1 => "ath1",
            WeightKind::Ath2 => "ath2",
            WeightKind::Ath3 => "ath3",
            WeightKind::Gmt1 => "gmt1",
            WeightKind::Gmt2 => "gmt2",
            WeightKind::Gmt3 => "gmt3",
            WeightKind::Parabola => "parabola",
        }
    }

    pub fn variant(self) -> Option<CurveVariant> {
        match self {
            WeightKind::Ath1 | WeightKind::Gmt1 => Some(CurveVariant::Inverse),
            WeightKind::Ath2 | WeightKind::Gmt2 => Some(CurveVariant::Linear),
            WeightKind::Ath3 | WeightKind::Gmt3 => Some(CurveVariant::Pressure),
            WeightKind::None | WeightKind::Parabola => None,
        }
    }

    /// Whether the weights come from the global masking threshold (and so
    /// need a first-pass reconstruction).
    pub fn is_masking(self) -> bool {
        matches!(self, WeightKind::Gmt1 | WeightKind::Gmt2 | WeightKind::Gmt3)
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WeightKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(Error::UnknownRecipe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRecipe {
    pub kind: WeightKind,
    pub tau: f64,
}

impl WeightRecipe {
    pub fn new(kind: WeightKind) -> Self {
        Self { kind, tau: DEFAULT_TAU_DB }
    }

    pub fn with_tau(kind: WeightKind, tau: f64) -> Self {
        Self { kind, tau }
    }
}

/// Non-negative weights, `channels × frames`, peak-normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    channels: usize,
    frames: usize,
    values: Vec<f64>,
}

impl WeightGrid {
    pub fn ones(channels: usize, frames: usize) -> Self {
        Self { channels, frames, values: vec![1.0; channels * frames] }
    }

    /// Repeat a two-sided per-channel vector for every frame.
    pub fn broadcast(per_channel: &[f64], frames: usize) -> Self {
        let mut values = Vec::with_capacity(per_channel.len() * frames);
        for _ in 0..frames {
            values.extend_from_slice(per_channel);
        }
        Self { channels: per_channel.len(), frames, values }
    }

    pub fn from_vec(channels: usize, frames: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * frames {
            return Err(Error::LengthMismatch { expected: channels * frames, found: values.len() });
        }
        Ok(Self { channels, frames, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.frames)
    }

    pub fn get(&self, channel: usize, frame: usize) -> f64 {
        self.values[frame * self.channels + channel]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Multiply every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            channels: self.channels,
            frames: self.frames,
            values: self.values.iter().map(|w| w * factor).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn raw_weights(curve: &[f64], variant: CurveVariant, tau: f64) -> Result<Vec<f64>> {
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    match variant {
        CurveVariant::Inverse => Ok(curve.iter().map(|t| 1.0 / (t - min + 1.0)).collect()),
        CurveVariant::Linear | CurveVariant::Pressure if tau < max => {
            Err(Error::InvalidTau { tau, curve_max: max })
        }
        CurveVariant::Linear => Ok(curve.iter().map(|t| tau - t).collect()),
        CurveVariant::Pressure => {
            Ok(curve.iter().map(|t| 2e-5 * pow(10.0, (tau - t) / 20.0)).collect())
        }
    }
}

fn normalize_in_place(values: &mut [f64]) -> Result<()> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::InvalidConfig("weights have no positive entry"));
    }
    values.iter_mut().for_each(|w| *w /= peak);
    Ok(())
}

/// Peak-normalized weights for a one-sided threshold curve.
pub fn weights_from_curve(curve: &[f64], variant: CurveVariant, tau: f64) -> Result<Vec<f64>> {
    let mut w = raw_weights(curve, variant, tau)?;
    normalize_in_place(&mut w)?;
    Ok(w)
}

/// Peak-normalized `k²`, `k = 1..=M/2+1`, over the non-negative channels.
pub fn parabola_weights(channels: usize) -> Vec<f64> {
    let bins = channels / 2 + 1;
    let peak = (bins * bins) as f64;
    (1..=bins).map(|k| (k * k) as f64 / peak).collect()
}

/// Extend a one-sided vector (`0..=M/2`) to all `M` channels.
pub fn mirror(one_sided: &[f64], channels: usize) -> Vec<f64> {
    (0..channels)
        .map(|m| one_sided[if m <= channels / 2 { m } else { channels - m }])
        .collect()
}

/// Build the weight grid for `recipe`. Masking recipes need `reference`,
/// the signal the masking thresholds are computed from.
pub fn assemble_weight_grid(
    recipe: &WeightRecipe,
    frame: &GaborFrame,
    sample_rate: u32,
    reference: Option<&Signal>,
) -> Result<WeightGrid> {
    let (channels, frames) = frame.grid_shape();
    let kind = recipe.kind;
    match kind {
        WeightKind::None => Ok(WeightGrid::ones(channels, frames)),
        WeightKind::Parabola => {
            Ok(WeightGrid::broadcast(&mirror(&parabola_weights(channels), channels), frames))
        }
        WeightKind::Ath1 | WeightKind::Ath2 | WeightKind::Ath3 => {
            let ath = ath_curve(channels, sample_rate);
            let w = weights_from_curve(&ath.values_db, kind.variant().unwrap(), recipe.tau)?;
            Ok(WeightGrid::broadcast(&mirror(&w, channels), frames))
        }
        WeightKind::Gmt1 | WeightKind::Gmt2 | WeightKind::Gmt3 => {
            let reference = reference.ok_or(Error::MissingReference)?;
            let variant = kind.variant().unwrap();
            let curves = frame_masking_thresholds(frame, reference.samples(), sample_rate)?;
            let mut values = Vec::with_capacity(channels * frames);
            for curve in &curves {
                let w = raw_weights(&curve.values_db, variant, recipe.tau)?;
                values.extend(mirror(&w, channels));
            }
            // one peak for the whole grid, so louder frames keep their
            // relative shrinkage
            normalize_in_place(&mut values)?;
            WeightGrid::from_vec(channels, frames, values)
        }
    }
}
