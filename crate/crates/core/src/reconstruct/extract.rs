//! Process parameters from phase-corrected channels, and physicality repair.

use std::collections::VecDeque;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::su2::Su2Params;

/// `sin E` below which a pixel's axis is undetermined.
pub const SINGULAR_SIN: f64 = 1e-3;
/// Axis norms within `1 ± NORM_BAND` are renormalized in place.
pub const NORM_BAND: f64 = 0.25;
/// Largest fraction of pixels that may be filled from neighbours.
pub const REPAIR_BUDGET: f64 = 0.20;

/// Unrepaired `(E, n)` per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParameters<T> {
    pub angle: Grid<T>,
    pub axis: Grid<[T; 3]>,
    pub singular: Grid<bool>,
    pub report: PhysicalityReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct PhysicalityReport {
    /// Largest `| ‖n‖ − 1 |` over non-singular pixels, before repair.
    pub max_norm_deviation: f64,
    pub singular_pixels: usize,
    pub pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct RepairStats {
    pub renormalized: usize,
    pub filled: usize,
    pub fill_fraction: f64,
    /// Pixels where `1 − n_1² − n_2²` was negative and clamped (two-channel mode).
    pub clamped: usize,
}

/// `E = arccos(clip Re g_1)` and `n_a = −Im g_a / sin E` for phase-corrected
/// channels `g_a = A_a e^{i(α_a + ξ_a)}`. With two channels `n_3` is left at zero.
pub fn extract_parameters<T: Real>(channels: &[Grid<Complex<T>>]) -> Result<RawParameters<T>> {
    if channels.len() < 2 || channels.len() > 3 {
        return Err(Error::InvalidConfig(format!(
            "extraction needs 2 or 3 channels, got {}",
            channels.len()
        )));
    }
    for c in &channels[1..] {
        channels[0].ensure_same_shape(c)?;
    }
    let (rows, cols) = channels[0].shape();
    let eps = T::lit(SINGULAR_SIN);
    let angle = channels[0].map(|z| z.re.max(-T::one()).min(T::one()).acos());
    let singular = angle.map(|e| e.sin() < eps);
    let mut worst = T::zero();
    let axis = Grid::from_fn(rows, cols, |r, c| {
        let s = angle.get(r, c).sin();
        let mut n = [T::zero(); 3];
        if *singular.get(r, c) {
            return n;
        }
        for (a, ch) in channels.iter().enumerate() {
            n[a] = -ch.get(r, c).im / s;
        }
        if channels.len() == 3 {
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            worst = worst.max((norm - T::one()).abs());
        }
        n
    });
    let singular_pixels = singular.iter().filter(|s| **s).count();
    if singular_pixels == angle.len() {
        return Err(Error::AllPixelsSingular);
    }
    Ok(RawParameters {
        angle,
        axis,
        singular,
        report: PhysicalityReport {
            max_norm_deviation: worst.as_f64(),
            singular_pixels,
            pixels: rows * cols,
        },
    })
}

/// Complete two-channel axes with `n_3 = sign · √(1 − n_1² − n_2²)`.
/// Returns the number of clamped pixels.
pub fn complete_third_component<T: Real>(raw: &mut RawParameters<T>, sign: T) -> usize {
    let mut clamped = 0;
    let mut worst = T::zero();
    for (n, s) in raw.axis.as_mut_slice().iter_mut().zip(raw.singular.iter()) {
        if *s {
            continue;
        }
        let rest = T::one() - n[0] * n[0] - n[1] * n[1];
        if rest < T::zero() {
            clamped += 1;
            worst = worst.max((-rest + T::one()).sqrt() - T::one());
        }
        n[2] = sign * rest.max(T::zero()).sqrt();
    }
    raw.report.max_norm_deviation = worst.as_f64();
    clamped
}

/// Renormalize axes inside the tolerance band; fill the rest from the nearest
/// valid pixel (4-neighbour breadth-first order, `E` kept).
pub fn repair_physicality<T: Real>(raw: &RawParameters<T>) -> Result<(Grid<Su2Params<T>>, RepairStats)> {
    let (rows, cols) = raw.angle.shape();
    let lo = T::one() - T::lit(NORM_BAND);
    let hi = T::one() + T::lit(NORM_BAND);
    let mut axis: Vec<Option<[T; 3]>> = Vec::with_capacity(rows * cols);
    let mut renormalized = 0;
    for (n, s) in raw.axis.iter().zip(raw.singular.iter()) {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if *s || !(norm >= lo && norm <= hi) {
            axis.push(None);
        } else {
            if (norm - T::one()).abs() > T::zero() {
                renormalized += 1;
            }
            axis.push(Some(n.map(|v| v / norm)));
        }
    }
    let missing = axis.iter().filter(|a| a.is_none()).count();
    let fraction = missing as f64 / axis.len() as f64;
    if missing == axis.len() {
        return Err(Error::AllPixelsSingular);
    }
    if fraction > REPAIR_BUDGET {
        return Err(Error::RepairBudgetExceeded {
            fraction,
            budget: REPAIR_BUDGET,
        });
    }
    if missing > 0 {
        let mut queue: VecDeque<usize> = (0..axis.len()).filter(|&i| axis[i].is_some()).collect();
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / cols, i % cols);
            let value = axis[i];
            let mut visit = |j: usize| {
                if axis[j].is_none() {
                    axis[j] = value;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
    }
    let params = Grid::from_vec(
        rows,
        cols,
        raw.angle
            .iter()
            .zip(axis)
            .map(|(&e, n)| Su2Params::new(e, n.expect("grid is connected")))
            .collect(),
    )?;
    Ok((
        params,
        RepairStats {
            renormalized,
            filled: missing,
            fill_fraction: fraction,
            clamped: 0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{params_to_unitary, Polarization};
    use std::f64::consts::FRAC_PI_2;

    fn channels_of(params: &[Su2Params<f64>]) -> Vec<Grid<Complex<f64>>> {
        let us: Vec<_> = params.iter().map(|p| params_to_unitary(p).unwrap()).collect();
        [Polarization::H, Polarization::D, Polarization::L]
            .iter()
            .map(|a| {
                let s = a.spinor();
                Grid::from_vec(1, us.len(), us.iter().map(|u| u.element(&s, &s)).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn identity_is_all_singular() {
        let one = Grid::filled(1, 4, Complex::new(1.0, 0.0));
        let err = extract_parameters(&[one.clone(), one.clone(), one]).unwrap_err();
        assert_eq!(err, Error::AllPixelsSingular);
    }

    #[test]
    fn zero_reference_gives_quarter_turn() {
        let zero = Grid::filled(1, 4, Complex::new(0.0, 0.0));
        let ch2 = Grid::filled(1, 4, Complex::new(0.0, -1.0));
        let raw = extract_parameters(&[zero.clone(), ch2, zero]).unwrap();
        assert!(raw.angle.iter().all(|e| (e - FRAC_PI_2).abs() < 1e-15));
        assert!(raw.axis.iter().all(|n| (n[1] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn closed_loop_parameters() {
        let truth = [
            Su2Params::new(0.4, [0.6, 0.0, 0.8]),
            Su2Params::new(1.2, [0.0, -0.6, 0.8]),
            Su2Params::new(2.5, [0.48, 0.6, 0.64]),
        ];
        let raw = extract_parameters(&channels_of(&truth)).unwrap();
        for (i, p) in truth.iter().enumerate() {
            assert!((raw.angle.as_slice()[i] - p.angle).abs() < 1e-12);
            for k in 0..3 {
                assert!((raw.axis.as_slice()[i][k] - p.axis[k]).abs() < 1e-12);
            }
        }
        assert!(raw.report.max_norm_deviation < 1e-12);
    }

    #[test]
    fn repair_renormalizes_and_fills() {
        let truth = [
            Su2Params::new(0.4, [0.6, 0.0, 0.8]),
            Su2Params::new(1.2, [0.0, -0.6, 0.8]),
            Su2Params::new(1.0, [0.0, 0.0, 1.0]),
            Su2Params::new(1.0, [1.0, 0.0, 0.0]),
            Su2Params::new(1.0, [1.0, 0.0, 0.0]),
            Su2Params::new(1.0, [1.0, 0.0, 0.0]),
        ];
        let mut raw = extract_parameters(&channels_of(&truth)).unwrap();
        raw.axis.as_mut_slice()[0] = [0.66, 0.0, 0.88];
        raw.axis.as_mut_slice()[1] = [0.0, 2.0, 0.0];
        let (p, stats) = repair_physicality(&raw).unwrap();
        assert_eq!(stats.filled, 1);
        let n0 = p.as_slice()[0].axis;
        assert!((n0[0] - 0.6).abs() < 1e-12 && (n0[2] - 0.8).abs() < 1e-12);
        assert_eq!(p.as_slice()[1].axis, n0);
        assert_eq!(p.as_slice()[1].angle, raw.angle.as_slice()[1]);

        raw.axis.as_mut_slice()[2] = [3.0, 0.0, 0.0];
        assert!(matches!(repair_physicality(&raw), Err(Error::RepairBudgetExceeded { .. })));
    }

    #[test]
    fn unit_field_unchanged() {
        let truth = [Su2Params::new(0.9, [0.0, 0.6, 0.8]); 4];
        let raw = extract_parameters(&channels_of(&truth)).unwrap();
        let (p, stats) = repair_physicality(&raw).unwrap();
        assert_eq!(stats.filled, 0);
        for q in p.iter() {
            assert!((q.axis[1] - 0.6).abs() < 1e-12);
        }
    }
}
