//! Space-dependent SU(2) processes.

use crate::error::{Error, Result};
use crate::forward::profile::PlateSpec;
use crate::grid::{Grid, GridSpec};
use crate::scalar::Real;
use crate::su2::{chart_of, params_to_unitary, waveplate, ChartPoint, Su2Params, Unitary2};

/// A unitary per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Su2Field<T> {
    spec: GridSpec<T>,
    unitaries: Grid<Unitary2<T>>,
}

impl<T: Real> Su2Field<T> {
    pub fn from_unitaries(spec: GridSpec<T>, unitaries: Grid<Unitary2<T>>) -> Result<Self> {
        spec.validate()?;
        if unitaries.shape() != spec.shape() {
            return Err(Error::GridMismatch(format!(
                "field shape {:?} does not match grid {:?}",
                unitaries.shape(),
                spec.shape()
            )));
        }
        Ok(Self { spec, unitaries })
    }

    pub fn from_params(spec: GridSpec<T>, params: &Grid<Su2Params<T>>) -> Result<Self> {
        let mut data = Vec::with_capacity(params.len());
        for p in params.iter() {
            data.push(params_to_unitary(p)?);
        }
        let (rows, cols) = params.shape();
        Self::from_unitaries(spec, Grid::from_vec(rows, cols, data)?)
    }

    pub fn identity(spec: GridSpec<T>) -> Result<Self> {
        let (rows, cols) = spec.shape();
        Self::from_unitaries(spec, Grid::filled(rows, cols, Unitary2::identity()))
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn unitaries(&self) -> &Grid<Unitary2<T>> {
        &self.unitaries
    }

    pub fn shape(&self) -> (usize, usize) {
        self.unitaries.shape()
    }

    pub fn get(&self, r: usize, c: usize) -> &Unitary2<T> {
        self.unitaries.get(r, c)
    }

    /// Canonical `(E, n)` per pixel after projecting onto SU(2).
    pub fn chart(&self) -> Grid<ChartPoint<T>> {
        self.unitaries.map(|u| chart_of(&u.to_special()))
    }

    pub fn params(&self) -> Grid<Su2Params<T>> {
        self.unitaries.map(|u| chart_of(&u.to_special()).params)
    }

    /// Pointwise `e^{iφ} U`.
    pub fn with_global_phase(&self, phi: T) -> Self {
        let z = num_complex::Complex::from_polar(T::one(), phi);
        Self {
            spec: self.spec,
            unitaries: self.unitaries.map(|u| u.scale(z)),
        }
    }
}

/// Uniform-retardance plate with optic-axis angle `theta(x, y)` (mm).
pub fn lcms_field<T: Real>(
    spec: GridSpec<T>,
    delta: T,
    theta: impl Fn(T, T) -> T,
) -> Result<Su2Field<T>> {
    spec.validate()?;
    let (rows, cols) = spec.shape();
    let unitaries = Grid::from_fn(rows, cols, |r, c| {
        let (x, y) = spec.position(r, c);
        waveplate(delta, theta(x, y))
    });
    Su2Field::from_unitaries(spec, unitaries)
}

pub fn plate_field<T: Real>(spec: GridSpec<T>, plate: &PlateSpec) -> Result<Su2Field<T>> {
    plate.validate(&spec)?;
    lcms_field(spec, T::lit(plate.delta), |x, y| plate.theta_at(&spec, x, y))
}

/// Pointwise product in optical order: `fields[0]` acts first.
pub fn cascade_fields<T: Real>(fields: &[Su2Field<T>]) -> Result<Su2Field<T>> {
    let (first, rest) = fields.split_first().ok_or(Error::EmptyList)?;
    let mut acc = first.unitaries.clone();
    for f in rest {
        if f.spec != first.spec {
            return Err(Error::GridMismatch("cascaded fields use different grids".into()));
        }
        acc = f.unitaries.zip_map(&acc, |later, earlier| *later * *earlier)?;
    }
    Su2Field::from_unitaries(first.spec, acc)
}

pub fn plates_field<T: Real>(spec: GridSpec<T>, plates: &[PlateSpec]) -> Result<Su2Field<T>> {
    if plates.is_empty() {
        return Su2Field::identity(spec);
    }
    let fields = plates
        .iter()
        .map(|p| plate_field(spec, p))
        .collect::<Result<Vec<_>>>()?;
    cascade_fields(&fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::profile::{Axis, ThetaProfile};
    use num_complex::Complex;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn spec2() -> GridSpec<f64> {
        GridSpec::two_d([16, 12], [2.5, 2.5], [1, 1])
    }

    #[test]
    fn zero_retardance_is_identity() {
        let f = lcms_field(GridSpec::one_d(16, 2.5, 1), 0.0, |x, _| 3.0 * x).unwrap();
        for u in f.unitaries().iter() {
            assert!((u.m[0][0] - Complex::new(1.0, 0.0)).norm() < 1e-15);
            assert!(u.m[0][1].norm() < 1e-15);
        }
    }

    #[test]
    fn cascade_with_identity() {
        let spec = spec2();
        let plate = PlateSpec { delta: PI, axis: Axis::X, profile: ThetaProfile::grating() };
        let f = plate_field(spec, &plate).unwrap();
        let id = Su2Field::identity(spec).unwrap();
        assert_eq!(cascade_fields(&[f.clone(), id]).unwrap(), f);
    }

    #[test]
    fn cascade_matches_direct_products() {
        let spec = spec2();
        let px = PlateSpec { delta: FRAC_PI_2, axis: Axis::X, profile: ThetaProfile::grating() };
        let py = PlateSpec {
            delta: PI,
            axis: Axis::Y,
            profile: ThetaProfile::Linear { slope: PI, offset: 0.4 },
        };
        let fx = plate_field(spec, &px).unwrap();
        let fy = plate_field(spec, &py).unwrap();
        let c = cascade_fields(&[fx.clone(), fy.clone()]).unwrap();
        let mut seed = 7u64;
        for _ in 0..10 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let r = (seed >> 33) as usize % 12;
            let col = (seed >> 17) as usize % 16;
            let a = fx.get(r, col);
            let b = fy.get(r, col);
            let got = c.get(r, col);
            for i in 0..2 {
                for j in 0..2 {
                    let expect = b.m[i][0] * a.m[0][j] + b.m[i][1] * a.m[1][j];
                    assert!((got.m[i][j] - expect).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn cascade_rejects_mismatched_grids() {
        let a = Su2Field::<f64>::identity(spec2()).unwrap();
        let b = Su2Field::identity(GridSpec::two_d([16, 12], [2.0, 2.5], [1, 1])).unwrap();
        assert!(matches!(cascade_fields(&[a, b]), Err(Error::GridMismatch(_))));
    }
}
