//! Sampling grids and row-major storage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major 2D storage. One-dimensional data uses a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    rows: usize,
    cols: usize,
    data: Vec<V>,
}

impl<V: Clone> Grid<V> {
    pub fn filled(rows: usize, cols: usize, value: V) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<V> Grid<V> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<V>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &V {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut V {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, V> {
        self.data.iter()
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> Grid<W> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, W>(&self, other: &Grid<U>, mut f: impl FnMut(&V, &U) -> W) -> Result<Grid<W>> {
        self.ensure_same_shape(other)?;
        Ok(Grid {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// Circular shift: `out[r][c] = self[r - dr][c - dc]` (indices mod shape).
    pub fn rolled(&self, dr: usize, dc: usize) -> Self
    where
        V: Clone,
    {
        Self::from_fn(self.rows, self.cols, |r, c| {
            let sr = (r + self.rows - dr % self.rows) % self.rows;
            let sc = (c + self.cols - dc % self.cols) % self.cols;
            self.get(sr, sc).clone()
        })
    }

    /// Point reflection through the origin of the periodic grid: `out[r] = self[-r]`.
    pub fn reflected(&self) -> Self
    where
        V: Clone,
    {
        Self::from_fn(self.rows, self.cols, |r, c| {
            self.get((self.rows - r) % self.rows, (self.cols - c) % self.cols)
                .clone()
        })
    }
}

impl<T: Real> Grid<T> {
    pub fn sum(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().fold(T::neg_infinity(), |acc, &v| acc.max(v))
    }

    pub fn mean(&self) -> T {
        self.sum() / T::of_usize(self.len())
    }
}

/// Tag for the conjugate planes a map lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Near,
    Far,
}

impl Plane {
    pub fn label(self) -> &'static str {
        match self {
            Plane::Near => "near",
            Plane::Far => "far",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "near" => Some(Plane::Near),
            "far" => Some(Plane::Far),
            _ => None,
        }
    }
}

/// Spatial sampling of the lattice.
///
/// Axis 0 is `x` (columns), axis 1 is `y` (rows). A one-dimensional grid has a
/// single row and ignores the `y` entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub dims: usize,
    pub samples: [usize; 2],
    /// Modulation period per axis, in mm.
    pub period: [T; 2],
    /// Whole periods covered by the window along each axis.
    pub periods: [usize; 2],
}

impl<T: Real> GridSpec<T> {
    pub fn one_d(samples: usize, period: T, periods: usize) -> Self {
        Self {
            dims: 1,
            samples: [samples, 1],
            period: [period, period],
            periods: [periods, 1],
        }
    }

    pub fn two_d(samples: [usize; 2], period: [T; 2], periods: [usize; 2]) -> Self {
        Self {
            dims: 2,
            samples,
            period,
            periods,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims != 1 && self.dims != 2 {
            return Err(Error::InvalidGrid(format!("dims must be 1 or 2, got {}", self.dims)));
        }
        for axis in 0..self.dims {
            let n = self.samples[axis];
            if n < 8 || !n.is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: samples must be even and >= 8, got {n}"
                )));
            }
            if !(self.period[axis] > T::zero()) {
                return Err(Error::InvalidGrid(format!("axis {axis}: period must be positive")));
            }
            if self.periods[axis] == 0 {
                return Err(Error::InvalidGrid(format!("axis {axis}: periods must be >= 1")));
            }
        }
        Ok(())
    }

    /// `(rows, cols)` of grids sampled on this spec.
    pub fn shape(&self) -> (usize, usize) {
        match self.dims {
            1 => (1, self.samples[0]),
            _ => (self.samples[1], self.samples[0]),
        }
    }

    pub fn pixel_count(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    /// Physical window length along `axis`, in mm.
    pub fn window(&self, axis: usize) -> T {
        self.period[axis] * T::of_usize(self.periods[axis])
    }

    /// Sample position `(x, y)` of pixel `(row, col)`, in mm from the window corner.
    pub fn position(&self, row: usize, col: usize) -> (T, T) {
        let x = self.window(0) * T::of_usize(col) / T::of_usize(self.samples[0]);
        let y = if self.dims == 2 {
            self.window(1) * T::of_usize(row) / T::of_usize(self.samples[1])
        } else {
            T::zero()
        };
        (x, y)
    }

    /// Angular spatial-frequency step of the far-field grid, rad/mm, per axis.
    pub fn k_spacing(&self) -> [T; 2] {
        let two_pi = T::PI() + T::PI();
        [two_pi / self.window(0), two_pi / self.window(1)]
    }
}

/// Intensity profile of the illuminating beam in the near plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BeamEnvelope {
    #[default]
    Uniform,
    /// Gaussian of 1/e² intensity radius `waist_mm`, centred on the window.
    Gaussian { waist_mm: f64 },
}

impl BeamEnvelope {
    pub fn sample<T: Real>(&self, spec: &GridSpec<T>) -> Grid<T> {
        let (rows, cols) = spec.shape();
        match *self {
            BeamEnvelope::Uniform => Grid::filled(rows, cols, T::one()),
            BeamEnvelope::Gaussian { waist_mm } => {
                let w = T::lit(waist_mm);
                let half = T::lit(0.5);
                let cx = spec.window(0) * half;
                let cy = if spec.dims == 2 { spec.window(1) * half } else { T::zero() };
                Grid::from_fn(rows, cols, |r, c| {
                    let (x, y) = spec.position(r, c);
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    (-T::lit(2.0) * r2 / (w * w)).exp()
                })
            }
        }
    }
}

/// Optical bench parameters. Kept for provenance; the discrete model does not
/// depend on them beyond the optional Gaussian envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSetup {
    pub wavelength_nm: f64,
    pub beam_waist_mm: f64,
    pub imaging_focal_mm: f64,
    pub fourier_focal_mm: f64,
}

impl Default for OpticalSetup {
    fn default() -> Self {
        Self {
            wavelength_nm: 810.0,
            beam_waist_mm: 2.6,
            imaging_focal_mm: 150.0,
            fourier_focal_mm: 250.0,
        }
    }
}

impl OpticalSetup {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wavelength_nm,
            self.beam_waist_mm,
            self.imaging_focal_mm,
            self.fourier_focal_mm,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("optical setup values must be positive".into()))
        }
    }
}

/// Signed frequency index of FFT bin `k` on an axis of length `n`.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Swap half-spaces so that the zero frequency lands at index `n / 2`.
pub fn fftshift<V: Clone>(g: &Grid<V>) -> Grid<V> {
    g.rolled(g.rows() / 2, g.cols() / 2)
}

/// Inverse of [`fftshift`].
pub fn ifftshift<V: Clone>(g: &Grid<V>) -> Grid<V> {
    g.rolled(g.rows() - g.rows() / 2, g.cols() - g.cols() / 2)
}
