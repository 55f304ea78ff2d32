//! Discrete Gabor transform on a Parseval tight frame.
//!
//! The signal of length `N` is embedded into a zero-padded circular buffer of
//! length `L` (a multiple of the hop) with a half-window lead-in, and frames
//! start every `hop` samples. Frame `t`, channel `m` holds
//!
//! ```text
//! c[m, t] = Σ_{j < Lw} x[(t·hop + j) mod L] · g[j] · e^{-2πi·m·j/M}
//! ```
//!
//! where `g` is the Hann window rescaled so that `M · Σ_t g(n - t·hop)² = 1`
//! for every `n`. Under that normalization analysis is an isometry and
//! synthesis (overlap-add of real parts of inverse DFTs) is its adjoint and
//! left inverse.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::SharedFft;
use crate::math::{abs, cos, sqrt};
use crate::{Error, Result, Signal};

/// Transform and iteration presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// 8192-sample Hann window, 75 % overlap, 8192 channels, 1000 iterations.
    Full,
    /// 2048-sample window, hop 512, 2048 channels, 300 iterations.
    Fast,
}

impl Profile {
    pub fn window_len(self) -> usize {
        match self {
            Profile::Full => 8192,
            Profile::Fast => 2048,
        }
    }

    pub fn hop(self) -> usize {
        self.window_len() / 4
    }

    pub fn channels(self) -> usize {
        self.window_len()
    }

    pub fn iterations(self) -> usize {
        match self {
            Profile::Full => 1000,
            Profile::Fast => 300,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Full => "default",
            Profile::Fast => "fast",
        }
    }

    /// Build the frame for a signal of `signal_len` samples.
    #[cfg(feature = "std")]
    pub fn frame(self, signal_len: usize) -> Result<GaborFrame> {
        GaborFrame::with_hop(
            self.window_len(),
            self.hop(),
            self.channels(),
            signal_len,
            crate::fft::RustFft::shared(self.channels()),
        )
    }
}

/// Complex coefficient array, `channels × frames`, stored frame by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefGrid {
    channels: usize,
    frames: usize,
    data: Vec<Complex64>,
}

impl CoefGrid {
    pub fn zeros(channels: usize, frames: usize) -> Self {
        Self { channels, frames, data: vec![Complex64::new(0.0, 0.0); channels * frames] }
    }

    pub fn from_vec(channels: usize, frames: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != channels * frames {
            return Err(Error::LengthMismatch { expected: channels * frames, found: data.len() });
        }
        Ok(Self { channels, frames, data })
    }

    /// `(channels, frames)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.frames)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn get(&self, channel: usize, frame: usize) -> Complex64 {
        self.data[frame * self.channels + channel]
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `Σ a · conj(b)`.
    pub fn inner(&self, other: &CoefGrid) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }
}

/// Analysis/synthesis configuration of a painless Parseval Gabor frame.
#[derive(Clone)]
pub struct GaborFrame {
    window: Vec<f64>,
    hop: usize,
    channels: usize,
    signal_len: usize,
    lead: usize,
    padded_len: usize,
    fft: SharedFft,
}

impl core::fmt::Debug for GaborFrame {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GaborFrame")
            .field("window_len", &self.window.len())
            .field("hop", &self.hop)
            .field("channels", &self.channels)
            .field("signal_len", &self.signal_len)
            .field("padded_len", &self.padded_len)
            .finish()
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| 0.5 - 0.5 * cos(2.0 * PI * j as f64 / len as f64))
        .collect()
}

impl GaborFrame {
    /// Frame from an overlap fraction (e.g. 0.75), using `rustfft`.
    #[cfg(feature = "std")]
    pub fn new(window_len: usize, overlap: f64, channels: usize, signal_len: usize) -> Result<Self> {
        Self::from_overlap(
            window_len,
            overlap,
            channels,
            signal_len,
            crate::fft::RustFft::shared(channels),
        )
    }

    pub fn from_overlap(
        window_len: usize,
        overlap: f64,
        channels: usize,
        signal_len: usize,
        fft: SharedFft,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::InvalidFrame("overlap must lie in [0, 1)"));
        }
        let hop = window_len as f64 * (1.0 - overlap);
        let rounded = libm::round(hop);
        if abs(hop - rounded) > 1e-9 || rounded < 1.0 {
            return Err(Error::InvalidFrame("overlap does not give an integer hop"));
        }
        Self::with_hop(window_len, rounded as usize, channels, signal_len, fft)
    }

    pub fn with_hop(
        window_len: usize,
        hop: usize,
        channels: usize,
        signal_len: usize,
        fft: SharedFft,
    ) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::InvalidFrame("window must have at least 2 samples"));
        }
        if hop == 0 || hop > window_len {
            return Err(Error::InvalidFrame("hop must be in 1..=window length"));
        }
        if channels < window_len {
            return Err(Error::InvalidFrame("channel count below window length"));
        }
        if signal_len < window_len {
            return Err(Error::InvalidFrame("signal shorter than the window"));
        }
        if fft.len() != channels {
            return Err(Error::InvalidFrame("FFT length differs from channel count"));
        }

        let lead = window_len / 2;
        let padded_len = (signal_len + window_len).div_ceil(hop) * hop;

        let prototype = hann(window_len);
        let mut overlap_sum = vec![0.0; hop];
        for (j, h) in prototype.iter().enumerate() {
            overlap_sum[j % hop] += h * h;
        }
        if overlap_sum.iter().any(|&s| !(s > 1e-12)) {
            return Err(Error::InvalidFrame("window overlap-add sum vanishes"));
        }
        let window: Vec<f64> = prototype
            .iter()
            .enumerate()
            .map(|(j, h)| h / sqrt(channels as f64 * overlap_sum[j % hop]))
            .collect();

        // M · Σ_t g² must be 1 on every residue class.
        let mut check = vec![0.0; hop];
        for (j, g) in window.iter().enumerate() {
            check[j % hop] += channels as f64 * g * g;
        }
        if check.iter().any(|&s| abs(s - 1.0) > 1e-12) {
            return Err(Error::InvalidFrame("window is not tight"));
        }

        Ok(Self { window, hop, channels, signal_len, lead, padded_len, fft })
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of samples of the signal the frame was built for.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Length of the zero-padded circular buffer (multiple of the hop).
    pub fn padded_len(&self) -> usize {
        self.padded_len
    }

    /// Zeros inserted before the first signal sample.
    pub fn lead(&self) -> usize {
        self.lead
    }

    pub fn frames(&self) -> usize {
        self.padded_len / self.hop
    }

    /// `(channels, frames)` of the coefficient grid.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.channels, self.frames())
    }

    pub fn fft(&self) -> &SharedFft {
        &self.fft
    }

    /// Signal sample at a position of the padded circular buffer.
    #[inline]
    fn padded_sample(&self, x: &[f64], p: usize) -> f64 {
        p.checked_sub(self.lead)
            .and_then(|n| x.get(n))
            .copied()
            .unwrap_or(0.0)
    }

    /// `channels` consecutive samples of the padded buffer starting at the
    /// first sample of frame `t` (wrapping circularly).
    pub fn frame_segment(&self, x: &[f64], t: usize) -> Vec<f64> {
        let start = t * self.hop;
        (0..self.channels)
            .map(|j| self.padded_sample(x, (start + j) % self.padded_len))
            .collect()
    }

    /// Analysis operator `D*`.
    pub fn analyze(&self, s: &Signal) -> Result<CoefGrid> {
        let mut out = CoefGrid::zeros(self.channels, self.frames());
        self.analyze_into(s.samples(), &mut out)?;
        Ok(out)
    }

    pub fn analyze_into(&self, x: &[f64], out: &mut CoefGrid) -> Result<()> {
        if x.len() != self.signal_len {
            return Err(Error::LengthMismatch { expected: self.signal_len, found: x.len() });
        }
        self.check_shape(out)?;
        let m = self.channels;
        for t in 0..self.frames() {
            let start = t * self.hop;
            let buf = &mut out.data[t * m..(t + 1) * m];
            for (j, slot) in buf.iter_mut().enumerate() {
                *slot = match self.window.get(j) {
                    Some(g) => {
                        let v = self.padded_sample(x, (start + j) % self.padded_len);
                        Complex64::new(v * g, 0.0)
                    }
                    None => Complex64::new(0.0, 0.0),
                };
            }
            self.fft.forward(buf);
        }
        Ok(())
    }

    /// Synthesis operator `D`.
    pub fn synthesize(&self, c: &CoefGrid, sample_rate: u32) -> Result<Signal> {
        let mut out = vec![0.0; self.signal_len];
        self.synthesize_into(c, &mut out)?;
        Signal::new(out, sample_rate)
    }

    pub fn synthesize_into(&self, c: &CoefGrid, out: &mut [f64]) -> Result<()> {
        if out.len() != self.signal_len {
            return Err(Error::LengthMismatch { expected: self.signal_len, found: out.len() });
        }
        self.check_shape(c)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.channels];
        for t in 0..self.frames() {
            buf.copy_from_slice(c.frame(t));
            self.fft.inverse(&mut buf);
            let start = t * self.hop;
            for (j, (g, b)) in self.window.iter().zip(&buf).enumerate() {
                let p = (start + j) % self.padded_len;
                if let Some(n) = p.checked_sub(self.lead) {
                    if let Some(slot) = out.get_mut(n) {
                        *slot += g * b.re;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_shape(&self, c: &CoefGrid) -> Result<()> {
        if c.shape() != self.grid_shape() {
            return Err(Error::ShapeMismatch { expected: self.grid_shape(), found: c.shape() });
        }
        Ok(())
    }
}
