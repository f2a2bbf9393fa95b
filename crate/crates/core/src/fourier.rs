//! FFT plumbing and the time-domain Fourier transform used by the spectra.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair of a fixed length with its own scratch buffer.
/// The inverse is normalized so `inverse(forward(x)) == x`.
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    scale: f64,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            scale: 1.0 / len as f64,
        }
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }

    /// `buf <- IFFT[phase ⊙ FFT[buf]]`.
    pub fn apply_diagonal(&mut self, buf: &mut [Complex64], phase: &[Complex64]) {
        self.forward(buf);
        for (z, p) in buf.iter_mut().zip(phase) {
            *z *= p;
        }
        self.inverse(buf);
    }
}

/// `F(ω_n) = Σ_k exp(−iω_n t_k) f(t_k) dt` with `ω_n = 2πn/T`,
/// `n = 0..len`, where `len = f.len()` samples cover `[0, T)` and
/// `dt = T/len`.
///
/// Bins with `n > len/2` alias negative frequencies.
pub fn dft_time(f: &[Complex64], duration: f64) -> Vec<Complex64> {
    if f.is_empty() {
        return Vec::new();
    }
    let dt = duration / f.len() as f64;
    let mut buf = f.to_vec();
    FftPlanner::new().plan_fft_forward(f.len()).process(&mut buf);
    for z in &mut buf {
        *z *= dt;
    }
    buf
}

/// Angular frequency bins `2πn/T` matching [`dft_time`].
pub fn frequency_bins(len: usize, duration: f64) -> Vec<f64> {
    (0..len).map(|n| 2.0 * PI * n as f64 / duration).collect()
}
