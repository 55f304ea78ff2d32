//! WAV input/output (16-bit PCM and 32-bit float).

use std::path::Path;

use declip_core::Signal;
use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

const PCM16_SCALE: f64 = 32768.0;

/// How multi-channel files become a mono signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMode {
    /// Keep channel 0.
    #[default]
    First,
    /// Average all channels.
    Downmix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    Pcm16,
    #[default]
    Float32,
}

impl SampleFormat {
    /// Round a threshold onto the grid of values this format can store, so
    /// a plateau written by [`write_wav`] compares equal to it.
    pub fn snap(self, value: f64) -> f64 {
        match self {
            SampleFormat::Pcm16 => (value * PCM16_SCALE).round() / PCM16_SCALE,
            SampleFormat::Float32 => value as f32 as f64,
        }
    }
}

/// A decoded file: the mono signal plus what it was stored as.
#[derive(Debug, Clone)]
pub struct WavAudio {
    pub signal: Signal,
    pub format: SampleFormat,
    pub channels: u16,
}

pub fn read_wav(path: impl AsRef<Path>, mode: ChannelMode) -> Result<WavAudio> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav { path: path.to_owned(), source };
    let mut reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let (format, interleaved): (SampleFormat, Vec<f64>) = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => (
            SampleFormat::Pcm16,
            reader
                .samples::<i16>()
                .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?,
        ),
        (HoundFormat::Float, 32) => (
            SampleFormat::Float32,
            reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?,
        ),
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat {
                path: path.to_owned(),
                detail: format!("{fmt:?} {bits}-bit"),
            })
        }
    };
    let channels = spec.channels.max(1) as usize;
    let mono: Vec<f64> = match mode {
        ChannelMode::First => interleaved.chunks_exact(channels).map(|f| f[0]).collect(),
        ChannelMode::Downmix => interleaved
            .chunks_exact(channels)
            .map(|f| f.iter().sum::<f64>() / channels as f64)
            .collect(),
    };
    Ok(WavAudio {
        signal: Signal::new(mono, spec.sample_rate)?,
        format,
        channels: spec.channels,
    })
}

/// Write a mono file. PCM16 output saturates at the 16-bit range.
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal, format: SampleFormat) -> Result<()> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav { path: path.to_owned(), source };
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: match format {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Pcm16 => HoundFormat::Int,
            SampleFormat::Float32 => HoundFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in signal.samples() {
        match format {
            SampleFormat::Pcm16 => {
                let q = (s * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64);
                writer.write_sample(q as i16)
            }
            SampleFormat::Float32 => writer.write_sample(s as f32),
        }
        .map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}
