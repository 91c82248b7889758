//! SU(2) algebra in the circular polarization basis.
//!
//! Basis vectors are `|L⟩ = (1, 0)ᵀ` and `|R⟩ = (0, 1)ᵀ`; the Pauli matrices
//! take their standard form in this basis, so `|H⟩ = (|L⟩ + |R⟩)/√2` is the
//! `+1` eigenvector of `σ1`.
//!
//! A process is stored canonically as `U = cos E · I − i sin E (n·σ)` with
//! `E ∈ [0, π]` and `|n| = 1`. The point `E = π` (`U = −I`) is kept as-is and
//! reported degenerate, like `E = 0`.

use std::ops::Mul;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Polarization state in circular-basis components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor<T> {
    pub l: Complex<T>,
    pub r: Complex<T>,
}

impl<T: Real> Spinor<T> {
    pub fn new(l: Complex<T>, r: Complex<T>) -> Self {
        Self { l, r }
    }

    pub fn norm_sqr(&self) -> T {
        self.l.norm_sqr() + self.r.norm_sqr()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.l.conj() * other.l + self.r.conj() * other.r
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::tol(1e-12)
    }
}

/// The six eigenstates of the Pauli matrices.
///
/// `H`, `D`, `L` are the `+1` eigenvectors of `σ1`, `σ2`, `σ3`; `V`, `A`, `R`
/// the corresponding `−1` eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    L,
    R,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::L,
        Polarization::R,
    ];

    /// `+1` eigenvector of `σ_k`, `k ∈ {1, 2, 3}`.
    pub fn positive(k: usize) -> Self {
        match k {
            1 => Polarization::H,
            2 => Polarization::D,
            3 => Polarization::L,
            _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
        }
    }

    /// Pauli index and eigenvalue sign.
    pub fn axis(self) -> (usize, i8) {
        match self {
            Polarization::H => (1, 1),
            Polarization::V => (1, -1),
            Polarization::D => (2, 1),
            Polarization::A => (2, -1),
            Polarization::L => (3, 1),
            Polarization::R => (3, -1),
        }
    }

    pub fn spinor<T: Real>(self) -> Spinor<T> {
        let h = T::FRAC_1_SQRT_2();
        let z = T::zero();
        let o = T::one();
        let c = |re: T, im: T| Complex::new(re, im);
        match self {
            Polarization::H => Spinor::new(c(h, z), c(h, z)),
            Polarization::V => Spinor::new(c(h, z), c(-h, z)),
            Polarization::D => Spinor::new(c(h, z), c(z, h)),
            Polarization::A => Spinor::new(c(h, z), c(z, -h)),
            Polarization::L => Spinor::new(c(o, z), c(z, z)),
            Polarization::R => Spinor::new(c(z, z), c(o, z)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
            Polarization::D => "D",
            Polarization::A => "A",
            Polarization::L => "L",
            Polarization::R => "R",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == s)
    }
}

/// Rotation half-angle `E` and unit axis `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Params<T> {
    pub angle: T,
    pub axis: [T; 3],
}

impl<T: Real> Su2Params<T> {
    pub fn new(angle: T, axis: [T; 3]) -> Self {
        Self { angle, axis }
    }

    pub fn axis_norm(&self) -> T {
        (self.axis[0] * self.axis[0] + self.axis[1] * self.axis[1] + self.axis[2] * self.axis[2])
            .sqrt()
    }

    /// Same operator with `E` folded into `[0, π]`.
    pub fn canonical(&self) -> Self {
        let two_pi = T::PI() + T::PI();
        let mut e = self.angle % two_pi;
        if e < T::zero() {
            e += two_pi;
        }
        if e > T::PI() {
            Self {
                angle: two_pi - e,
                axis: self.axis.map(|v| -v),
            }
        } else {
            Self {
                angle: e,
                axis: self.axis,
            }
        }
    }

    /// Parameters of `−U`.
    pub fn negated(&self) -> Self {
        Self {
            angle: T::PI() - self.angle,
            axis: self.axis.map(|v| -v),
        }
    }
}

/// Result of inverting the SU(2) chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint<T> {
    pub params: Su2Params<T>,
    /// `sin E` too small for the axis to be defined; axis set to `(0, 0, 1)`.
    pub degenerate: bool,
}

/// 2×2 complex matrix, row-major: `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Unitary2<T> {
    pub fn new(u00: Complex<T>, u01: Complex<T>, u10: Complex<T>, u11: Complex<T>) -> Self {
        Self {
            m: [[u00, u01], [u10, u11]],
        }
    }

    pub fn identity() -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self::new(o, z, z, o)
    }

    pub fn pauli(k: usize) -> Self {
        let o = T::one();
        let z = T::zero();
        let c = |re: T, im: T| Complex::new(re, im);
        match k {
            1 => Self::new(c(z, z), c(o, z), c(o, z), c(z, z)),
            2 => Self::new(c(z, z), c(z, -o), c(z, o), c(z, z)),
            3 => Self::new(c(o, z), c(z, z), c(z, z), c(-o, z)),
            _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
        }
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn apply(&self, v: &Spinor<T>) -> Spinor<T> {
        Spinor::new(
            self.m[0][0] * v.l + self.m[0][1] * v.r,
            self.m[1][0] * v.l + self.m[1][1] * v.r,
        )
    }

    /// Matrix element `⟨bra|U|ket⟩`.
    pub fn element(&self, bra: &Spinor<T>, ket: &Spinor<T>) -> Complex<T> {
        bra.inner(&self.apply(ket))
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> T {
        let p = self.adjoint() * *self;
        let id = Self::identity();
        let mut worst = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.m[r][c] - id.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Project a U(2) matrix onto SU(2) by dividing out `√det`.
    pub fn to_special(&self) -> Self {
        let root = self.det().sqrt();
        self.scale(Complex::new(T::one(), T::zero()) / root)
    }

    /// `|Tr(U†V)| / 2` without validity checks.
    pub fn fidelity(&self, other: &Self) -> T {
        let mut acc = Complex::new(T::zero(), T::zero());
        for r in 0..2 {
            for c in 0..2 {
                acc += self.m[r][c].conj() * other.m[r][c];
            }
        }
        acc.norm() / T::lit(2.0)
    }

    /// `Re Tr(U†V) / 2`; sign-sensitive agreement, distinguishes `U` from `−U`.
    pub fn signed_overlap(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                acc += (self.m[r][c].conj() * other.m[r][c]).re;
            }
        }
        acc / T::lit(2.0)
    }
}

impl<T: Real> Mul for Unitary2<T> {
    type Output = Unitary2<T>;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Tolerance on `|‖n‖ − 1|` above which an axis is rejected rather than renormalized.
pub const AXIS_RENORMALIZE_TOL: f64 = 1e-6;

/// `cos E · I − i sin E (n·σ)`.
pub fn params_to_unitary<T: Real>(p: &Su2Params<T>) -> Result<Unitary2<T>> {
    let norm = p.axis_norm();
    if !((norm - T::one()).abs() <= T::tol(AXIS_RENORMALIZE_TOL)) || !p.angle.is_finite() {
        return Err(Error::AxisNotNormalized { norm: norm.as_f64() });
    }
    let n = p.axis.map(|v| v / norm);
    Ok(unitary_from_unit_axis(p.angle, n))
}

/// Chart evaluation without validation; `n` must already be unit length.
#[inline]
pub fn unitary_from_unit_axis<T: Real>(angle: T, n: [T; 3]) -> Unitary2<T> {
    let (s, c) = angle.sin_cos();
    // −i s (n·σ) = [[−i s n3, −i s n1 − s n2], [−i s n1 + s n2, i s n3]]
    Unitary2::new(
        Complex::new(c, -s * n[2]),
        Complex::new(-s * n[1], -s * n[0]),
        Complex::new(s * n[1], -s * n[0]),
        Complex::new(c, s * n[2]),
    )
}

/// Threshold on `sin E` below which the rotation axis is reported degenerate.
pub const DEGENERATE_SIN: f64 = 1e-9;

/// Inverse chart: `E = arccos(Re Tr U / 2)`, `n_k = −Im Tr(σ_k U) / (2 sin E)`.
pub fn unitary_to_params<T: Real>(u: &Unitary2<T>) -> Result<ChartPoint<T>> {
    let defect = u.unitarity_defect();
    if !(defect <= T::tol(1e-10)) {
        return Err(Error::NotUnitary { deviation: defect.as_f64() });
    }
    let det_dev = (u.det() - Complex::new(T::one(), T::zero())).norm();
    if !(det_dev <= T::tol(1e-10)) {
        return Err(Error::NotSpecialUnitary { deviation: det_dev.as_f64() });
    }
    Ok(chart_of(u))
}

/// Inverse chart without validity checks.
pub fn chart_of<T: Real>(u: &Unitary2<T>) -> ChartPoint<T> {
    let two = T::lit(2.0);
    let m = &u.m;
    let cos_e = (u.trace().re / two).max(-T::one()).min(T::one());
    let angle = cos_e.acos();
    let sin_e = angle.sin();
    if sin_e < T::tol(DEGENERATE_SIN) {
        return ChartPoint {
            params: Su2Params::new(angle, [T::zero(), T::zero(), T::one()]),
            degenerate: true,
        };
    }
    // Tr(σ1 U) = u10 + u01; Tr(σ2 U) = i(u01 − u10); Tr(σ3 U) = u00 − u11
    let t1 = m[1][0] + m[0][1];
    let t2 = (m[0][1] - m[1][0]) * Complex::new(T::zero(), T::one());
    let t3 = m[0][0] - m[1][1];
    let denom = two * sin_e;
    let mut n = [-t1.im / denom, -t2.im / denom, -t3.im / denom];
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm > T::zero() {
        n = n.map(|v| v / norm);
    }
    ChartPoint {
        params: Su2Params::new(angle, n),
        degenerate: false,
    }
}

/// Waveplate of retardance `delta` with optic axis at `theta` from horizontal:
/// `[[cos δ/2, i sin δ/2 e^{−2iθ}], [i sin δ/2 e^{2iθ}, cos δ/2]]`.
///
/// This is a rotation by `−δ/2` about `(cos 2θ, sin 2θ, 0)`; in the canonical
/// chart it reads `E = δ/2`, `n = −(cos 2θ, sin 2θ, 0)` (folded into `[0, π]`).
pub fn waveplate<T: Real>(delta: T, theta: T) -> Unitary2<T> {
    let half = delta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let two_theta = theta + theta;
    let i_s = Complex::new(T::zero(), s);
    Unitary2::new(
        Complex::new(c, T::zero()),
        i_s * Complex::from_polar(T::one(), -two_theta),
        i_s * Complex::from_polar(T::one(), two_theta),
        Complex::new(c, T::zero()),
    )
}

/// Product in optical order: the first element acts first.
pub fn compose<T: Real>(us: &[Unitary2<T>]) -> Result<Unitary2<T>> {
    let (first, rest) = us.split_first().ok_or(Error::EmptyList)?;
    Ok(rest.iter().fold(*first, |acc, u| *u * acc))
}

/// `|Tr(U†V)| / 2`, invariant under global phases of either argument.
pub fn gauge_fidelity<T: Real>(u: &Unitary2<T>, v: &Unitary2<T>) -> Result<T> {
    for w in [u, v] {
        let d = w.unitarity_defect();
        if !(d <= T::tol(1e-8)) {
            return Err(Error::NotUnitary { deviation: d.as_f64() });
        }
    }
    Ok(u.fidelity(v).min(T::one()))
}
