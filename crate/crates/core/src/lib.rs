//! Restoration of hard-clipped audio by weighted ℓ1 minimization of Gabor
//! coefficients, solved with the Douglas–Rachford algorithm.
//!
//! The crate is `no_std` (with `alloc`). The only platform service it needs
//! is a complex FFT, supplied through the [`fft::Fft`] trait; the default
//! `std` feature provides one backed by `rustfft`.
//!
//! Layout:
//! - [`signal`]: samples, hard clipping and clip-mask detection
//! - [`gabor`]: Parseval tight Gabor frame (analysis `D*`, synthesis `D`)
//! - [`psycho`]: absolute threshold of hearing and global masking threshold
//! - [`weights`]: ATH / GMT / parabola weight grids
//! - [`solver`]: projections, soft thresholding and the DR iteration
//! - [`metrics`]: SDR and ΔSDR
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub mod fft;
pub mod gabor;
mod math;
pub mod metrics;
pub mod psycho;
pub mod signal;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use gabor::{CoefGrid, GaborFrame, Profile};
pub use metrics::{delta_sdr, sdr, SdrReport};
pub use signal::{detect_mask, hard_clip, peak_normalize, ClipMask, SampleClass, Signal};
pub use solver::{declip, declip_two_pass, solve, DeclipProblem, SolveResult, SolverConfig};
pub use weights::{WeightGrid, WeightKind, WeightRecipe};
