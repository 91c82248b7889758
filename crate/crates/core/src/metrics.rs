//! Spectrum similarity, absolute spectral distance and gauge fidelity maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{PowerSpectrum, Su2Field};
use crate::grid::Grid;
use crate::scalar::Real;

fn check_normalized<T: Real>(p: &PowerSpectrum<T>) -> Result<()> {
    let s = p.total();
    if !((s - T::one()).abs() <= T::tol(1e-6)) {
        return Err(Error::NotNormalized { sum: s.as_f64() });
    }
    Ok(())
}

/// Pairs `(P(m), Q(m))` over the union of both order ranges, zero-padded.
fn aligned<T: Real>(p: &PowerSpectrum<T>, q: &PowerSpectrum<T>) -> Vec<(T, T)> {
    if p.order_min == q.order_min && p.weights.shape() == q.weights.shape() {
        return p.weights.iter().copied().zip(q.weights.iter().copied()).collect();
    }
    let (pmax, qmax) = (p.order_max(), q.order_max());
    let lo = [p.order_min[0].min(q.order_min[0]), p.order_min[1].min(q.order_min[1])];
    let hi = [pmax[0].max(qmax[0]), pmax[1].max(qmax[1])];
    let mut out = Vec::new();
    for my in lo[1]..=hi[1] {
        for mx in lo[0]..=hi[0] {
            out.push((p.weight(mx, my), q.weight(mx, my)));
        }
    }
    out
}

/// `s = (Σ_m √(P(m) Q(m)))²`.
pub fn similarity<T: Real>(p: &PowerSpectrum<T>, q: &PowerSpectrum<T>) -> Result<T> {
    check_normalized(p)?;
    check_normalized(q)?;
    let bc = aligned(p, q)
        .into_iter()
        .fold(T::zero(), |acc, (a, b)| acc + (a * b).max(T::zero()).sqrt());
    Ok((bc * bc).min(T::one()))
}

/// `Δ = (Σ_m |P(m) − Q(m)|)²`.
pub fn abs_distance<T: Real>(p: &PowerSpectrum<T>, q: &PowerSpectrum<T>) -> Result<T> {
    check_normalized(p)?;
    check_normalized(q)?;
    Ok(abs_distance_unchecked(p, q))
}

pub(crate) fn abs_distance_unchecked<T: Real>(p: &PowerSpectrum<T>, q: &PowerSpectrum<T>) -> T {
    let l1 = aligned(p, q)
        .into_iter()
        .fold(T::zero(), |acc, (a, b)| acc + (a - b).abs());
    l1 * l1
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMap<T> {
    pub map: Grid<T>,
    pub mean: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelitySummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl<T: Real> FidelityMap<T> {
    pub fn summary(&self) -> FidelitySummary {
        FidelitySummary {
            mean: self.mean.as_f64(),
            min: self.map.iter().fold(f64::INFINITY, |a, v| a.min(v.as_f64())),
            max: self.map.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v.as_f64())),
        }
    }
}

/// Per-pixel `|Tr(U†V)| / 2` and its mean.
pub fn fidelity_map<T: Real>(u: &Su2Field<T>, v: &Su2Field<T>) -> Result<FidelityMap<T>> {
    if u.shape() != v.shape() {
        return Err(Error::GridMismatch(format!(
            "fields of shape {:?} and {:?}",
            u.shape(),
            v.shape()
        )));
    }
    let map = u
        .unitaries()
        .zip_map(v.unitaries(), |a, b| a.fidelity(b).min(T::one()))?;
    let mean = map.mean();
    Ok(FidelityMap { map, mean })
}

/// Mean gauge fidelity only.
pub fn mean_fidelity<T: Real>(u: &Su2Field<T>, v: &Su2Field<T>) -> Result<T> {
    Ok(fidelity_map(u, v)?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::lcms_field;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn spectrum(order_min: i64, w: Vec<f64>) -> PowerSpectrum<f64> {
        let n = w.len();
        PowerSpectrum {
            order_min: [order_min, 0],
            weights: Grid::from_vec(1, n, w).unwrap(),
            off_order: 0.0,
            raw: false,
        }
    }

    #[test]
    fn identical_and_disjoint() {
        let p = spectrum(-1, vec![0.2, 0.5, 0.3]);
        assert!((similarity(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(abs_distance(&p, &p).unwrap(), 0.0);
        let a = spectrum(0, vec![1.0, 0.0]);
        let b = spectrum(0, vec![0.0, 1.0]);
        assert_eq!(similarity(&a, &b).unwrap(), 0.0);
        assert!((abs_distance(&a, &b).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn misaligned_ranges_pad_with_zero() {
        let a = spectrum(-2, vec![0.5, 0.5]);
        let b = spectrum(-1, vec![0.5, 0.5]);
        // shared order -1 only
        assert!((similarity(&a, &b).unwrap() - 0.25).abs() < 1e-15);
        assert!((abs_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_rejected() {
        let a = spectrum(0, vec![0.5, 0.4]);
        assert!(matches!(similarity(&a, &a), Err(Error::NotNormalized { .. })));
        assert!(matches!(abs_distance(&a, &a), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn fidelity_of_field_with_itself_and_negation() {
        let f = lcms_field(GridSpec::<f64>::one_d(16, 2.5, 1), 1.7, |x, _| x * 1.3).unwrap();
        assert!((mean_fidelity(&f, &f).unwrap() - 1.0).abs() < 1e-15);
        let neg = f.with_global_phase(std::f64::consts::PI);
        assert!((mean_fidelity(&f, &neg).unwrap() - 1.0).abs() < 1e-15);
        let g = lcms_field(GridSpec::<f64>::one_d(8, 2.5, 1), 1.7, |x, _| x).unwrap();
        assert!(matches!(fidelity_map(&f, &g), Err(Error::GridMismatch(_))));
    }

    fn normalized(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #[test]
        fn metric_properties(
            a in proptest::collection::vec(0.01f64..1.0, 6),
            b in proptest::collection::vec(0.01f64..1.0, 6),
        ) {
            let p = spectrum(-3, normalized(a));
            let q = spectrum(-3, normalized(b));
            let s = similarity(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - similarity(&q, &p).unwrap()).abs() < 1e-15);
            let d = abs_distance(&p, &q).unwrap();
            prop_assert!((d - abs_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!(d.sqrt() <= 2.0 + 1e-12);
        }

        #[test]
        fn fidelity_blind_to_global_phases(phi in 0.0f64..6.3, psi in 0.0f64..6.3) {
            let f = lcms_field(GridSpec::<f64>::one_d(8, 2.5, 1), 0.9, |x, _| x * x).unwrap();
            let g = lcms_field(GridSpec::<f64>::one_d(8, 2.5, 1), 2.1, |x, _| 0.4 * x).unwrap();
            let base = mean_fidelity(&f, &g).unwrap();
            let rotated = mean_fidelity(&f.with_global_phase(phi), &g.with_global_phase(psi)).unwrap();
            prop_assert!((base - rotated).abs() < 1e-14);
        }
    }
}
