//! Multi-start Gerchberg–Saxton phase retrieval between conjugate planes.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{Dft2, DftScratch};
use crate::grid::{Grid, Plane};
use crate::scalar::Real;

/// Complex scalar field with its plane tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T> {
    pub values: Grid<Complex<T>>,
    pub plane: Plane,
}

impl<T: Real> ComplexField<T> {
    pub fn near(values: Grid<Complex<T>>) -> Self {
        Self {
            values,
            plane: Plane::Near,
        }
    }

    pub fn amplitude(&self) -> Grid<T> {
        self.values.map(|z| z.norm())
    }

    pub fn phase(&self) -> Grid<T> {
        self.values.map(|z| z.arg())
    }

    /// `|⟨a, b⟩| / (‖a‖ ‖b‖)`; zero if either field vanishes.
    pub fn correlation(&self, other: &Self) -> T {
        normalized_overlap(&self.values, &other.values)
    }
}

pub fn normalized_overlap<T: Real>(a: &Grid<Complex<T>>, b: &Grid<Complex<T>>) -> T {
    let mut dot = Complex::new(T::zero(), T::zero());
    let mut na = T::zero();
    let mut nb = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x.conj() * y;
        na += x.norm_sqr();
        nb += y.norm_sqr();
    }
    let den = (na * nb).sqrt();
    if den > T::zero() {
        dot.norm() / den
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsSchedule {
    pub trials: usize,
    pub iterations: usize,
    pub seed: u64,
    /// A trial stops once its residual improves by less than this over
    /// `stall_window` iterations.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_window")]
    pub stall_window: usize,
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_window() -> usize {
    50
}

impl GsSchedule {
    pub fn new(trials: usize, iterations: usize, seed: u64) -> Self {
        Self {
            trials,
            iterations,
            seed,
            tolerance: default_tolerance(),
            stall_window: default_window(),
        }
    }

    /// 100 trials of 1000 iterations.
    pub fn paper_1d(seed: u64) -> Self {
        Self::new(100, 1000, seed)
    }

    /// 50 trials of 500 iterations.
    pub fn paper_2d(seed: u64) -> Self {
        Self::new(50, 500, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig("GS trials and iterations must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) || self.stall_window == 0 {
            return Err(Error::InvalidConfig("GS tolerance must be >= 0 and window >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsResult<T> {
    /// Winning near-plane field, rotated so its brightest pixel has phase 0.
    pub field: ComplexField<T>,
    /// Final residual of every trial.
    pub residuals: Vec<T>,
    pub best_trial: usize,
    /// Iterations the winning trial ran before stopping.
    pub iterations: usize,
    /// Residual after each iteration of the winning trial, starting with
    /// the random initial guess.
    pub trace: Vec<T>,
    /// Far amplitude was rescaled to match the near-plane energy.
    pub energy_rescaled: bool,
}

impl<T: Real> GsResult<T> {
    pub fn best_residual(&self) -> T {
        self.residuals[self.best_trial]
    }
}

/// Relative energy mismatch accepted without rescaling.
pub const ENERGY_TOLERANCE: f64 = 0.01;
/// Relative energy mismatch beyond which retrieval is refused.
pub const ENERGY_LIMIT: f64 = 0.10;

/// `‖|ψ| − near‖ + ‖|DFT ψ| − far‖`; `far_amp` is in unshifted DFT order.
pub fn gs_residual<T: Real>(field: &ComplexField<T>, near_amp: &Grid<T>, far_amp: &Grid<T>) -> Result<T> {
    field.values.ensure_same_shape(near_amp)?;
    field.values.ensure_same_shape(far_amp)?;
    let (rows, cols) = near_amp.shape();
    let spectrum = Dft2::new(rows, cols).forward(&field.values);
    let near_term = l2_amp_distance(field.values.as_slice(), near_amp.as_slice());
    let far_term = l2_amp_distance(spectrum.as_slice(), far_amp.as_slice());
    Ok(near_term + far_term)
}

fn l2_amp_distance<T: Real>(z: &[Complex<T>], a: &[T]) -> T {
    z.iter()
        .zip(a)
        .fold(T::zero(), |acc, (z, &a)| {
            let d = z.norm() - a;
            acc + d * d
        })
        .sqrt()
}

struct Trial<T> {
    field: Vec<Complex<T>>,
    residual: T,
    iterations: usize,
    trace: Vec<T>,
}

/// Retrieve the near-plane field whose modulus is `near_amp` and whose
/// unitary DFT has modulus `far_amp` (unshifted order).
pub fn gs_retrieve<T: Real>(near_amp: &Grid<T>, far_amp: &Grid<T>, schedule: &GsSchedule) -> Result<GsResult<T>> {
    schedule.validate()?;
    near_amp.ensure_same_shape(far_amp)?;
    let e_near = near_amp.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let e_far = far_amp.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let (rows, cols) = near_amp.shape();
    if e_near == T::zero() && e_far == T::zero() {
        return Ok(GsResult {
            field: ComplexField::near(Grid::filled(rows, cols, Complex::new(T::zero(), T::zero()))),
            residuals: vec![T::zero(); schedule.trials],
            best_trial: 0,
            iterations: 0,
            trace: vec![T::zero()],
            energy_rescaled: false,
        });
    }
    let ratio = e_far / e_near;
    if !ratio.is_finite() || (ratio - T::one()).abs() > T::lit(ENERGY_LIMIT) {
        return Err(Error::EnergyMismatch { ratio: ratio.as_f64() });
    }
    let energy_rescaled = (ratio - T::one()).abs() > T::lit(ENERGY_TOLERANCE);
    let far: Grid<T> = if energy_rescaled {
        let s = (e_near / e_far).sqrt();
        far_amp.map(|&v| v * s)
    } else {
        far_amp.clone()
    };

    let dft = Dft2::new(rows, cols);
    let trials: Vec<Trial<T>> = (0..schedule.trials)
        .into_par_iter()
        .map(|t| run_trial(&dft, near_amp.as_slice(), far.as_slice(), schedule, t))
        .collect();

    let mut best = 0;
    for (i, tr) in trials.iter().enumerate() {
        if tr.residual < trials[best].residual {
            best = i;
        }
    }
    let residuals = trials.iter().map(|t| t.residual).collect();
    let winner = trials.into_iter().nth(best).expect("at least one trial");
    let mut values = Grid::from_vec(rows, cols, winner.field)?;
    canonicalize_phase(&mut values);
    Ok(GsResult {
        field: ComplexField::near(values),
        residuals,
        best_trial: best,
        iterations: winner.iterations,
        trace: winner.trace,
        energy_rescaled,
    })
}

/// Rotate so the brightest pixel (first on ties) is real and positive.
pub fn canonicalize_phase<T: Real>(values: &mut Grid<Complex<T>>) {
    let mut idx = 0;
    let mut peak = T::neg_infinity();
    for (i, z) in values.iter().enumerate() {
        let a = z.norm_sqr();
        if a > peak {
            peak = a;
            idx = i;
        }
    }
    let z = values.as_slice()[idx];
    if z.norm() > T::zero() {
        let rot = z.conj() / z.norm();
        for v in values.as_mut_slice() {
            *v *= rot;
        }
    }
}

fn run_trial<T: Real>(dft: &Dft2<T>, near: &[T], far: &[T], schedule: &GsSchedule, trial: usize) -> Trial<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(trial as u64);
    let two_pi = T::PI() + T::PI();
    let mut psi: Vec<Complex<T>> = near
        .iter()
        .map(|&a| {
            let phi = two_pi * T::lit(rng.random::<f64>());
            Complex::from_polar(a, phi)
        })
        .collect();
    let mut work = psi.clone();
    let mut scratch: DftScratch<T> = dft.scratch();
    let mut trace = Vec::with_capacity(schedule.iterations + 1);
    let tol = T::lit(schedule.tolerance);
    let mut done = 0;

    for it in 0..schedule.iterations {
        work.copy_from_slice(&psi);
        dft.forward_in_place(&mut work, &mut scratch);
        let res = impose_far(&mut work, far);
        trace.push(res);
        if it >= schedule.stall_window && trace[it - schedule.stall_window] - res < tol {
            break;
        }
        dft.inverse_in_place(&mut work, &mut scratch);
        impose_near(&mut psi, &work, near);
        done = it + 1;
    }
    if done == schedule.iterations {
        work.copy_from_slice(&psi);
        dft.forward_in_place(&mut work, &mut scratch);
        trace.push(far_distance(&work, far));
    }
    let residual = *trace.last().expect("at least one residual");
    Trial {
        field: psi,
        residual,
        iterations: done,
        trace,
    }
}

fn far_distance<T: Real>(spectrum: &[Complex<T>], far: &[T]) -> T {
    l2_amp_distance(spectrum, far)
}

/// Replace the modulus by `far`; returns the distance before projection.
fn impose_far<T: Real>(spectrum: &mut [Complex<T>], far: &[T]) -> T {
    let mut acc = T::zero();
    for (z, &a) in spectrum.iter_mut().zip(far) {
        let m = z.norm();
        let d = m - a;
        acc += d * d;
        *z = if m > T::zero() {
            *z * (a / m)
        } else {
            Complex::new(a, T::zero())
        };
    }
    acc.sqrt()
}

/// `psi ← near · g/|g|`, keeping the previous phase where `|g| = 0`.
fn impose_near<T: Real>(psi: &mut [Complex<T>], g: &[Complex<T>], near: &[T]) {
    for ((p, z), &a) in psi.iter_mut().zip(g).zip(near) {
        let m = z.norm();
        if m > T::zero() {
            *p = *z * (a / m);
        } else {
            let pm = p.norm();
            *p = if pm > T::zero() {
                *p * (a / pm)
            } else {
                Complex::new(a, T::zero())
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn smooth_field(n: usize) -> Grid<Complex<f64>> {
        Grid::from_fn(1, n, |_, c| {
            let u = c as f64 / n as f64;
            let amp = 0.6 + 0.3 * (2.0 * PI * u + 0.9).cos() + 0.1 * (4.0 * PI * u).sin();
            let phase = 2.0 * PI * u + 0.8 * (2.0 * PI * u + 0.4).sin() + 0.3 * (4.0 * PI * u).cos();
            Complex::from_polar(amp, phase)
        })
    }

    fn planes(f: &Grid<Complex<f64>>) -> (Grid<f64>, Grid<f64>) {
        let (r, c) = f.shape();
        let far = Dft2::new(r, c).forward(f).map(|z| z.norm());
        (f.map(|z| z.norm()), far)
    }

    #[test]
    fn constant_field_in_one_iteration() {
        let near = Grid::filled(1, 16, 1.0);
        let mut far = Grid::filled(1, 16, 0.0);
        *far.get_mut(0, 0) = 4.0;
        let r = gs_retrieve(&near, &far, &GsSchedule::new(1, 1, 0)).unwrap();
        let v = &r.field.values;
        assert!(v.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn exact_pair_has_zero_residual() {
        let f = smooth_field(32);
        let (near, far) = planes(&f);
        let field = ComplexField::near(f.clone());
        assert!(gs_residual(&field, &near, &far).unwrap() < 1e-12);
        let rotated = ComplexField::near(f.map(|z| z * Complex::from_polar(1.0, 0.7)));
        assert!(gs_residual(&rotated, &near, &far).unwrap() < 1e-12);
    }

    #[test]
    fn residual_grows_with_perturbation() {
        let f = smooth_field(32);
        let (near, far) = planes(&f);
        let dir = Grid::from_fn(1, 32, |_, c| Complex::new((c as f64 * 1.3).sin(), (c as f64 * 0.7).cos()));
        let mut last = 0.0;
        for k in 1..=20 {
            let eps = 0.01 * k as f64;
            let g = f.zip_map(&dir, |a, d| a + d * eps).unwrap();
            let r = gs_residual(&ComplexField::near(g), &near, &far).unwrap();
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn recovers_smooth_field_up_to_global_phase() {
        let f = smooth_field(64);
        let (near, far) = planes(&f);
        let r = gs_retrieve(&near, &far, &GsSchedule::new(20, 1000, 7)).unwrap();
        let corr = normalized_overlap(&r.field.values, &f);
        assert!(corr > 0.999, "corr {corr}");
        for (z, a) in r.field.values.iter().zip(near.iter()) {
            assert!((z.norm() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_is_nonincreasing() {
        let f = smooth_field(64);
        let (near, far) = planes(&f);
        let r = gs_retrieve(&near, &far, &GsSchedule::new(4, 300, 3)).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let f = smooth_field(32);
        let (near, far) = planes(&f);
        let s = GsSchedule::new(6, 200, 11);
        assert_eq!(gs_retrieve(&near, &far, &s).unwrap(), gs_retrieve(&near, &far, &s).unwrap());
    }

    #[test]
    fn energy_checks() {
        let f = smooth_field(32);
        let (near, far) = planes(&f);
        let s = GsSchedule::new(1, 10, 0);
        let slight = far.map(|v| v * 1.03);
        assert!(gs_retrieve(&near, &slight, &s).unwrap().energy_rescaled);
        let big = far.map(|v| v * 1.2);
        assert!(matches!(gs_retrieve(&near, &big, &s), Err(Error::EnergyMismatch { .. })));
        let short = Grid::filled(1, 16, 1.0);
        assert!(matches!(gs_retrieve(&near, &short, &s), Err(Error::ShapeMismatch { .. })));
        assert!(gs_retrieve(&near, &far, &GsSchedule::new(0, 10, 0)).is_err());
    }

    #[test]
    fn presets() {
        let a = GsSchedule::paper_1d(0);
        assert_eq!((a.trials, a.iterations), (100, 1000));
        let b = GsSchedule::paper_2d(0);
        assert_eq!((b.trials, b.iterations), (50, 500));
    }
}
