//! Unitary discrete Fourier transforms on [`Grid`]s.
//!
//! The forward transform uses the `e^{-2πi k r / N}` kernel scaled by
//! `1/√N` per axis, so a phase ramp `e^{2πi m x / Λ}` lands on order `+m`
//! and Plancherel holds exactly.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone)]
pub struct Dft2<T: Real> {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for Dft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

/// Scratch buffers for [`Dft2`]; one per thread of work.
#[derive(Debug, Default)]
pub struct DftScratch<T> {
    transposed: Vec<Complex<T>>,
    fft: Vec<Complex<T>>,
}

impl<T: Real> Dft2<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            scale: T::one() / T::of_usize(rows * cols).sqrt(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn scratch(&self) -> DftScratch<T> {
        let need = [
            self.row_fwd.get_inplace_scratch_len(),
            self.row_inv.get_inplace_scratch_len(),
            self.col_fwd.get_inplace_scratch_len(),
            self.col_inv.get_inplace_scratch_len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        DftScratch {
            transposed: vec![Complex::default(); self.rows * self.cols],
            fft: vec![Complex::default(); need],
        }
    }

    pub fn forward_in_place(&self, data: &mut [Complex<T>], scratch: &mut DftScratch<T>) {
        self.run(data, scratch, true);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex<T>], scratch: &mut DftScratch<T>) {
        self.run(data, scratch, false);
    }

    pub fn forward(&self, g: &Grid<Complex<T>>) -> Grid<Complex<T>> {
        let mut out = g.clone();
        let mut s = self.scratch();
        self.forward_in_place(out.as_mut_slice(), &mut s);
        out
    }

    pub fn inverse(&self, g: &Grid<Complex<T>>) -> Grid<Complex<T>> {
        let mut out = g.clone();
        let mut s = self.scratch();
        self.inverse_in_place(out.as_mut_slice(), &mut s);
        out
    }

    fn run(&self, data: &mut [Complex<T>], scratch: &mut DftScratch<T>, forward: bool) {
        assert_eq!(data.len(), self.rows * self.cols, "buffer does not match DFT shape");
        let (row_plan, col_plan) = if forward {
            (&self.row_fwd, &self.col_fwd)
        } else {
            (&self.row_inv, &self.col_inv)
        };
        if self.cols > 1 {
            row_plan.process_with_scratch(data, &mut scratch.fft);
        }
        if self.rows > 1 {
            let t = &mut scratch.transposed;
            for r in 0..self.rows {
                for c in 0..self.cols {
                    t[c * self.rows + r] = data[r * self.cols + c];
                }
            }
            col_plan.process_with_scratch(t, &mut scratch.fft);
            for c in 0..self.cols {
                for r in 0..self.rows {
                    data[r * self.cols + c] = t[c * self.rows + r];
                }
            }
        }
        let s = self.scale;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Circular cross-correlation `out[s] = Σ_r a[r] · b[r - s]` (indices mod shape).
pub fn circular_correlation<T: Real>(
    dft: &Dft2<T>,
    a: &Grid<Complex<T>>,
    b: &Grid<Complex<T>>,
) -> Grid<Complex<T>> {
    // Σ_r a[r] b[r-s] = conv(a, b̃)[s] with b̃[r] = b[-r]; the unitary DFT
    // turns the convolution into √N times a pointwise product.
    let fa = dft.forward(a);
    let fb = dft.forward(&b.reflected());
    let n = T::of_usize(a.len()).sqrt();
    let prod = fa
        .zip_map(&fb, |x, y| x * y * n)
        .expect("correlation operands share a shape");
    dft.inverse(&prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random_grid(rows: usize, cols: usize, seed: &mut u64) -> Grid<Complex<f64>> {
        Grid::from_fn(rows, cols, |_, _| Complex::new(lcg(seed), lcg(seed)))
    }

    fn naive_dft(g: &Grid<Complex<f64>>) -> Grid<Complex<f64>> {
        let (rows, cols) = g.shape();
        let norm = 1.0 / ((rows * cols) as f64).sqrt();
        Grid::from_fn(rows, cols, |kr, kc| {
            let mut acc = Complex::new(0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    let ph = -2.0 * std::f64::consts::PI
                        * ((kr * r) as f64 / rows as f64 + (kc * c) as f64 / cols as f64);
                    acc += g.get(r, c) * Complex::from_polar(1.0, ph);
                }
            }
            acc * norm
        })
    }

    #[test]
    fn matches_naive_dft_2d() {
        let mut seed = 3;
        let g = random_grid(6, 8, &mut seed);
        let dft = Dft2::new(6, 8);
        let fast = dft.forward(&g);
        let slow = naive_dft(&g);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = dft.inverse(&fast);
        for (a, b) in back.iter().zip(g.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_ramp_lands_on_plus_one() {
        let n = 16;
        let g = Grid::from_fn(1, n, |_, c| {
            Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * c as f64 / n as f64)
        });
        let f = Dft2::new(1, n).forward(&g);
        assert!((f.get(0, 1).norm() - 4.0).abs() < 1e-12);
        assert!(f.get(0, n - 1).norm() < 1e-12);
    }

    #[test]
    fn correlation_matches_brute_force() {
        let mut seed = 11;
        let a = random_grid(4, 6, &mut seed);
        let b = random_grid(4, 6, &mut seed);
        let dft = Dft2::new(4, 6);
        let fast = circular_correlation(&dft, &a, &b);
        for sr in 0..4 {
            for sc in 0..6 {
                let mut acc = Complex::new(0.0, 0.0);
                for r in 0..4 {
                    for c in 0..6 {
                        acc += a.get(r, c) * b.get((r + 4 - sr) % 4, (c + 6 - sc) % 6);
                    }
                }
                assert!((acc - fast.get(sr, sc)).norm() < 1e-12);
            }
        }
    }
}
