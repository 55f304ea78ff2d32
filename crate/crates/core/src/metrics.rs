//! Signal-to-distortion ratio.

use crate::math::log10;
use crate::{Error, Result, Signal};

/// `10·log10(‖u‖² / ‖u − v‖²)` in dB; `+∞` when `v == u`.
pub fn sdr(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    let reference: f64 = u.iter().map(|a| a * a).sum();
    if reference == 0.0 {
        return Err(Error::ZeroPeak);
    }
    let error: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * log10(reference / error))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrReport {
    pub sdr_clipped_db: f64,
    pub sdr_restored_db: f64,
    pub delta_sdr_db: f64,
}

/// SDR of the clipped and restored signals against the clean one, and the
/// improvement between them.
pub fn delta_sdr(clean: &Signal, clipped: &Signal, restored: &Signal) -> Result<SdrReport> {
    let sdr_clipped_db = sdr(clean.samples(), clipped.samples())?;
    let sdr_restored_db = sdr(clean.samples(), restored.samples())?;
    // equal SDRs (including inf == inf) mean no improvement
    let delta_sdr_db = if sdr_restored_db == sdr_clipped_db {
        0.0
    } else {
        sdr_restored_db - sdr_clipped_db
    };
    Ok(SdrReport { sdr_clipped_db, sdr_restored_db, delta_sdr_db })
}
