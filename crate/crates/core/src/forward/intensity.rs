//! Projective intensities in the near and far planes, and diffraction-order spectra.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::forward::field::Su2Field;
use crate::fourier::Dft2;
use crate::grid::{fftshift, Grid, GridSpec, Plane};
use crate::scalar::Real;
use crate::su2::{Polarization, Spinor, Unitary2};

/// Non-negative real map tagged with its plane and polarization labels.
///
/// Far-plane maps are stored with the zero order at index `(rows/2, cols/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap<T> {
    pub values: Grid<T>,
    pub plane: Plane,
    pub prep: Polarization,
    /// `None` for the unprojected far field.
    pub proj: Option<Polarization>,
    /// Angular spatial-frequency step per axis (rad/mm); far plane only.
    pub k_spacing: Option<[T; 2]>,
}

impl<T: Real> IntensityMap<T> {
    pub fn new(
        values: Grid<T>,
        plane: Plane,
        prep: Polarization,
        proj: Option<Polarization>,
        k_spacing: Option<[T; 2]>,
    ) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("intensity value {bad} is negative or not finite")));
        }
        Ok(Self {
            values,
            plane,
            prep,
            proj,
            k_spacing,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn total(&self) -> T {
        self.values.sum()
    }
}

/// Amplitude `√B(r) · ⟨proj|U(r)|prep⟩`.
pub fn projected_amplitude<T: Real>(
    unitaries: &Grid<Unitary2<T>>,
    prep: &Spinor<T>,
    proj: &Spinor<T>,
    envelope: Option<&Grid<T>>,
) -> Grid<Complex<T>> {
    let mut out = unitaries.map(|u| u.element(proj, prep));
    if let Some(b) = envelope {
        for (v, w) in out.as_mut_slice().iter_mut().zip(b.iter()) {
            *v *= w.sqrt();
        }
    }
    out
}

fn check_envelope<T: Real>(field: &Su2Field<T>, envelope: Option<&Grid<T>>) -> Result<()> {
    if let Some(b) = envelope {
        if b.shape() != field.shape() {
            return Err(Error::ShapeMismatch {
                left: field.shape(),
                right: b.shape(),
            });
        }
    }
    Ok(())
}

/// `I(r) = |⟨proj|U(r)|prep⟩|² · B(r)`; `envelope = None` means a uniform beam.
pub fn near_field_intensity<T: Real>(
    field: &Su2Field<T>,
    prep: Polarization,
    proj: Polarization,
    envelope: Option<&Grid<T>>,
) -> Result<IntensityMap<T>> {
    check_envelope(field, envelope)?;
    let amp = projected_amplitude(field.unitaries(), &prep.spinor(), &proj.spinor(), envelope);
    IntensityMap::new(amp.map(|z| z.norm_sqr()), Plane::Near, prep, Some(proj), None)
}

/// `|DFT[√B ⟨proj|U|prep⟩]|²`, or the sum over both circular components when
/// `proj` is `None`. Uses the caller's transform plan.
pub fn far_field_intensity_with<T: Real>(
    dft: &Dft2<T>,
    field: &Su2Field<T>,
    prep: Polarization,
    proj: Option<Polarization>,
    envelope: Option<&Grid<T>>,
) -> Result<IntensityMap<T>> {
    check_envelope(field, envelope)?;
    let prep_s = prep.spinor();
    let power = match proj {
        Some(p) => {
            let amp = projected_amplitude(field.unitaries(), &prep_s, &p.spinor(), envelope);
            dft.forward(&amp).map(|z| z.norm_sqr())
        }
        None => unprojected_far_power(dft, field.unitaries(), &prep_s, envelope),
    };
    IntensityMap::new(
        fftshift(&power),
        Plane::Far,
        prep,
        proj,
        Some(field.spec().k_spacing()),
    )
}

pub fn far_field_intensity<T: Real>(
    field: &Su2Field<T>,
    prep: Polarization,
    proj: Option<Polarization>,
    envelope: Option<&Grid<T>>,
) -> Result<IntensityMap<T>> {
    let (rows, cols) = field.shape();
    far_field_intensity_with(&Dft2::new(rows, cols), field, prep, proj, envelope)
}

/// `|DFT c_L|² + |DFT c_R|²` for `(c_L, c_R) = √B · U|prep⟩`, unshifted.
pub fn unprojected_far_power<T: Real>(
    dft: &Dft2<T>,
    unitaries: &Grid<Unitary2<T>>,
    prep: &Spinor<T>,
    envelope: Option<&Grid<T>>,
) -> Grid<T> {
    let l = Polarization::L.spinor();
    let r = Polarization::R.spinor();
    let cl = dft.forward(&projected_amplitude(unitaries, prep, &l, envelope));
    let cr = dft.forward(&projected_amplitude(unitaries, prep, &r, envelope));
    cl.zip_map(&cr, |a, b| a.norm_sqr() + b.norm_sqr())
        .expect("components share a shape")
}

/// Normalized weights on integer diffraction orders.
///
/// `weights` rows run over `m_y`, columns over `m_x`, starting at `order_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    pub order_min: [i64; 2],
    pub weights: Grid<T>,
    /// Fraction of the far-field power off the order grid.
    pub off_order: T,
    /// Built from raw k-bins because the field is not periodic on the grid.
    pub raw: bool,
}

impl<T: Real> PowerSpectrum<T> {
    /// Weight at order `(m_x, m_y)`; zero outside the stored range.
    pub fn weight(&self, mx: i64, my: i64) -> T {
        let c = mx - self.order_min[0];
        let r = my - self.order_min[1];
        if c < 0 || r < 0 || c as usize >= self.weights.cols() || r as usize >= self.weights.rows() {
            return T::zero();
        }
        *self.weights.get(r as usize, c as usize)
    }

    pub fn order_max(&self) -> [i64; 2] {
        [
            self.order_min[0] + self.weights.cols() as i64 - 1,
            self.order_min[1] + self.weights.rows() as i64 - 1,
        ]
    }

    pub fn total(&self) -> T {
        self.weights.sum()
    }

    /// Every `(m_x, m_y, P)` with nonzero extent, row-major.
    pub fn entries(&self) -> Vec<(i64, i64, T)> {
        let mut out = Vec::with_capacity(self.weights.len());
        for r in 0..self.weights.rows() {
            for c in 0..self.weights.cols() {
                out.push((
                    self.order_min[0] + c as i64,
                    self.order_min[1] + r as i64,
                    *self.weights.get(r, c),
                ));
            }
        }
        out
    }
}

/// Fraction of off-order power above which a field is treated as aperiodic.
pub const MAX_LEAKAGE: f64 = 0.05;

fn order_range(n: usize, periods: usize) -> (i64, i64) {
    let half = (n / 2) as i64;
    let p = periods as i64;
    let lo = (-half).div_euclid(p) + if (-half).rem_euclid(p) == 0 { 0 } else { 1 };
    let hi = (half - 1).div_euclid(p);
    (lo, hi)
}

/// Collect far-plane power onto the integer orders `m = k Λ / 2π`.
pub fn extract_power_spectrum<T: Real>(far: &IntensityMap<T>, spec: &GridSpec<T>) -> Result<PowerSpectrum<T>> {
    let p = order_spectrum(&far.values, spec, false)?;
    if p.off_order > T::lit(MAX_LEAKAGE) {
        return Err(Error::NonPeriodicLeakage { fraction: p.off_order.as_f64() });
    }
    Ok(p)
}

/// Order spectrum for periodic fields, raw k-bins otherwise.
pub fn sifting_spectrum<T: Real>(far: &Grid<T>, spec: &GridSpec<T>) -> Result<PowerSpectrum<T>> {
    let p = order_spectrum(far, spec, false)?;
    if p.off_order > T::lit(MAX_LEAKAGE) {
        return order_spectrum(far, spec, true);
    }
    Ok(p)
}

/// Normalized power on the order grid (or on every k-bin when `raw`) of a
/// centred far-plane map, without a leakage check.
pub fn order_spectrum<T: Real>(far: &Grid<T>, spec: &GridSpec<T>, raw: bool) -> Result<PowerSpectrum<T>> {
    if far.shape() != spec.shape() {
        return Err(Error::ShapeMismatch {
            left: far.shape(),
            right: spec.shape(),
        });
    }
    let (rows, cols) = far.shape();
    let px = if raw { 1 } else { spec.periods[0] };
    let py = if raw || spec.dims == 1 { 1 } else { spec.periods[1] };
    let (xlo, xhi) = order_range(cols, px);
    let (ylo, yhi) = if rows == 1 { (0, 0) } else { order_range(rows, py) };
    let total = far.sum();
    if !(total > T::zero()) {
        return Err(Error::NotNormalized { sum: total.as_f64() });
    }
    let mut weights = Grid::filled((yhi - ylo + 1) as usize, (xhi - xlo + 1) as usize, T::zero());
    let mut on = T::zero();
    for my in ylo..=yhi {
        let r = (my * py as i64 + (rows / 2) as i64) as usize;
        for mx in xlo..=xhi {
            let c = (mx * px as i64 + (cols / 2) as i64) as usize;
            let v = *far.get(r, c);
            *weights.get_mut((my - ylo) as usize, (mx - xlo) as usize) = v;
            on += v;
        }
    }
    let off = ((total - on) / total).max(T::zero());
    if !(on > T::zero()) {
        return Err(Error::NotNormalized { sum: 0.0 });
    }
    for w in weights.as_mut_slice() {
        *w /= on;
    }
    Ok(PowerSpectrum {
        order_min: [xlo, ylo],
        weights,
        off_order: off,
        raw,
    })
}

/// Mean over rows of a 2D map; the result has a single row.
pub fn integrate_y<T: Real>(map: &IntensityMap<T>) -> Result<IntensityMap<T>> {
    let (rows, cols) = map.shape();
    let inv = T::one() / T::of_usize(rows);
    let values = Grid::from_fn(1, cols, |_, c| {
        (0..rows).fold(T::zero(), |acc, r| acc + *map.values.get(r, c)) * inv
    });
    IntensityMap::new(values, map.plane, map.prep, map.proj, map.k_spacing)
}

/// Sum over `block × block` pixel regions. Single-row maps are binned along
/// columns only. Trailing partial blocks are dropped; the flag reports that.
pub fn bin_pixels<T: Real>(map: &IntensityMap<T>, block: usize) -> Result<(IntensityMap<T>, bool)> {
    let (rows, cols) = map.shape();
    let by = if rows == 1 { 1 } else { block };
    if block == 0 || block > cols || by > rows {
        return Err(Error::InvalidConfig(format!(
            "binning block {block} does not fit a {rows}x{cols} map"
        )));
    }
    let (out_r, out_c) = (rows / by, cols / block);
    let dropped = rows % by != 0 || cols % block != 0;
    let values = Grid::from_fn(out_r, out_c, |r, c| {
        let mut acc = T::zero();
        for i in 0..by {
            for j in 0..block {
                acc += *map.values.get(r * by + i, c * block + j);
            }
        }
        acc
    });
    let k = map.k_spacing.map(|[kx, ky]| [kx * T::of_usize(block), ky * T::of_usize(by)]);
    Ok((IntensityMap::new(values, map.plane, map.prep, map.proj, k)?, dropped))
}
