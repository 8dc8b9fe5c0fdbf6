//! Discrete Fourier transforms on the N x N fractional torus grid.
//!
//! Grid functions are stored row-major: index `i1 * n + i2` holds the
//! value at the node `(i1/n, i2/n)`. The forward transform produces
//! coefficients against `exp(2 pi i m . y)` with integer modes folded
//! into `{-n/2, ..., n/2 - 1}` per coordinate.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Signed integer mode of DFT bin `i` out of `n` (the usual folding).
pub fn mode(n: usize, i: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Cached 2D FFT plans for one grid size.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Fft2 {
            n,
            fwd,
            inv,
            scratch: vec![Complex64::default(); scratch_len],
            column: vec![Complex64::default(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn pass(&mut self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "grid buffer must hold n^2 values");
        let plan = if forward { &self.fwd } else { &self.inv };
        for row in data.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        for j in 0..n {
            for i in 0..n {
                self.column[i] = data[i * n + j];
            }
            plan.process_with_scratch(&mut self.column, &mut self.scratch);
            for i in 0..n {
                data[i * n + j] = self.column[i];
            }
        }
    }

    /// In-place forward DFT (unnormalized).
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.pass(data, true);
    }

    /// In-place inverse DFT, normalized so that `inverse(forward(u)) = u`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.pass(data, false);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Applies a Fourier multiplier `sym(m1, m2)` to a grid function.
    pub fn apply_symbol(
        &mut self,
        data: &mut [Complex64],
        mut sym: impl FnMut(i64, i64) -> Complex64,
    ) {
        let n = self.n;
        self.forward(data);
        for i1 in 0..n {
            let m1 = mode(n, i1);
            for i2 in 0..n {
                data[i1 * n + i2] *= sym(m1, mode(n, i2));
            }
        }
        self.inverse(data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn plane_wave(n: usize, m: [i64; 2]) -> Vec<Complex64> {
        let mut u = vec![Complex64::default(); n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                let phase = TAU * (m[0] * i1 as i64 + m[1] * i2 as i64) as f64 / n as f64;
                u[i1 * n + i2] = Complex64::new(phase.cos(), phase.sin());
            }
        }
        u
    }

    #[test]
    fn mode_folding_matches_convention() {
        assert_eq!((0..8).map(|i| mode(8, i)).collect::<Vec<_>>(), [0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!((0..5).map(|i| mode(5, i)).collect::<Vec<_>>(), [0, 1, 2, -2, -1]);
    }

    #[test]
    fn forward_of_plane_wave_is_a_single_bin() {
        let n = 16;
        let mut fft = Fft2::new(n);
        let mut u = plane_wave(n, [3, -2]);
        fft.forward(&mut u);
        for i1 in 0..n {
            for i2 in 0..n {
                let want = if mode(n, i1) == 3 && mode(n, i2) == -2 {
                    (n * n) as f64
                } else {
                    0.0
                };
                let got = u[i1 * n + i2];
                assert!(
                    (got - want).norm() < 1e-9,
                    "bin ({i1},{i2}) = {got} expected {want}"
                );
            }
        }
    }

    #[test]
    fn roundtrip_restores_input() {
        let n = 12;
        let mut fft = Fft2::new(n);
        let mut u: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let orig = u.clone();
        fft.forward(&mut u);
        fft.inverse(&mut u);
        for (a, b) in u.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn symbol_application_scales_each_mode() {
        let n = 8;
        let mut fft = Fft2::new(n);
        let mut u = plane_wave(n, [1, 0]);
        let orig = u.clone();
        fft.apply_symbol(&mut u, |m1, m2| {
            Complex64::new((m1 * m1 + m2 * m2) as f64, m1 as f64)
        });
        for (a, b) in u.iter().zip(&orig) {
            let want = b * Complex64::new(1.0, 1.0);
            assert!((a - want).norm() < 1e-12);
        }
    }
}
