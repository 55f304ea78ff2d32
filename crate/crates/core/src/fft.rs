//! FFT abstraction.
//!
//! The transforms here only need an unnormalized complex DFT of a fixed
//! length. Embedded users implement [`Fft`] for whatever their platform
//! offers; with the `std` feature [`RustFft`] is available.

use alloc::sync::Arc;

use num_complex::Complex64;

/// Fixed-length, in-place, unnormalized complex DFT.
///
/// `forward` computes `X[k] = Σ x[n] e^{-2πi kn/len}`, `inverse` computes
/// `x[n] = Σ X[k] e^{+2πi kn/len}` (no `1/len` factor).
pub trait Fft: Send + Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn forward(&self, buf: &mut [Complex64]);
    fn inverse(&self, buf: &mut [Complex64]);
}

/// Shared handle to a planned FFT.
pub type SharedFft = Arc<dyn Fft>;

#[cfg(feature = "std")]
pub use self::backend::RustFft;

#[cfg(feature = "std")]
mod backend {
    use super::*;

    /// [`Fft`] backed by `rustfft`.
    pub struct RustFft {
        forward: Arc<dyn rustfft::Fft<f64>>,
        inverse: Arc<dyn rustfft::Fft<f64>>,
    }

    impl RustFft {
        pub fn new(len: usize) -> Self {
            let mut planner = rustfft::FftPlanner::new();
            Self {
                forward: planner.plan_fft_forward(len),
                inverse: planner.plan_fft_inverse(len),
            }
        }

        pub fn shared(len: usize) -> SharedFft {
            Arc::new(Self::new(len))
        }
    }

    impl Fft for RustFft {
        fn len(&self) -> usize {
            self.forward.len()
        }

        fn forward(&self, buf: &mut [Complex64]) {
            self.forward.process(buf);
        }

        fn inverse(&self, buf: &mut [Complex64]) {
            self.inverse.process(buf);
        }
    }

    impl core::fmt::Debug for RustFft {
        fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.debug_struct("RustFft").field("len", &self.forward.len()).finish()
        }
    }
}
