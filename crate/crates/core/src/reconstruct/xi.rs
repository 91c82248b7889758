//! Enumeration of the unknown global phases `ξ_a` of the retrieved channels.
//!
//! Channel 1 fixes `E` for each grid value of `ξ_1`; every other channel is
//! given the `ξ_a` that makes `arccos(A_a cos(α_a + ξ_a))` agree best with
//! that `E`. Before that, a channel may be replaced by another member of its
//! phase-retrieval ambiguity class (circular shift, twin image, and for
//! separable 2D fields the per-axis conjugate reflections), picking the member
//! whose real part tracks `cos E` most closely.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{circular_correlation, Dft2};
use crate::grid::Grid;
use crate::scalar::Real;

/// `N` equally spaced phases `ξ_j = 2πj/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiGrid {
    pub n: usize,
}

impl Default for XiGrid {
    fn default() -> Self {
        Self { n: 64 }
    }
}

impl XiGrid {
    pub fn new(n: usize) -> Result<Self> {
        let g = Self { n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidConfig(format!("xi grid needs N >= 4, got {}", self.n)));
        }
        Ok(())
    }

    pub fn value<T: Real>(&self, j: usize) -> T {
        (T::PI() + T::PI()) * T::of_usize(j % self.n) / T::of_usize(self.n)
    }

    pub fn values<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|j| self.value(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiOptions {
    /// Search the ambiguity class of each non-reference channel.
    #[serde(default = "yes")]
    pub resolve_orbits: bool,
    /// Keep up to two near-tied local minima of the consistency score per channel.
    #[serde(default = "yes")]
    pub alternatives: bool,
    /// Pixels with `sin E` below this are left out of the consistency score.
    #[serde(default = "default_singular")]
    pub singular_sin: f64,
    /// Largest relative L2 mismatch between a shifted channel's modulus and the
    /// measured modulus for the shift to be admissible.
    #[serde(default = "default_shift_mismatch")]
    pub shift_mismatch: f64,
    /// Relative residual of a rank-1 fit below which a 2D channel counts as separable.
    #[serde(default = "default_rank1")]
    pub rank1_tolerance: f64,
}

fn yes() -> bool {
    true
}
fn default_singular() -> f64 {
    1e-3
}
fn default_shift_mismatch() -> f64 {
    0.05
}
fn default_rank1() -> f64 {
    0.1
}

impl Default for XiOptions {
    fn default() -> Self {
        Self {
            resolve_orbits: true,
            alternatives: true,
            singular_sin: default_singular(),
            shift_mismatch: default_shift_mismatch(),
            rank1_tolerance: default_rank1(),
        }
    }
}

impl XiOptions {
    /// One `ξ_a` per channel and per `ξ_1`, no ambiguity search.
    pub fn plain() -> Self {
        Self {
            resolve_orbits: false,
            alternatives: false,
            ..Self::default()
        }
    }
}

/// Member of a channel's ambiguity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitVariant {
    Identity,
    /// `conj(ψ(−r))`
    Twin,
    /// `h(y) conj(f(−x))` for `ψ = h(y) f(x)`
    FactorX,
    /// `conj(h(−y)) f(x)` for `ψ = h(y) f(x)`
    FactorY,
}

/// How one channel enters a candidate: `variant` rolled by `shift`, times `e^{iξ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelChoice {
    pub variant: OrbitVariant,
    /// `(rows, cols)` circular shift.
    pub shift: [usize; 2],
    pub xi_index: usize,
    pub xi: f64,
}

impl ChannelChoice {
    pub fn plain(xi_index: usize, grid: &XiGrid) -> Self {
        Self {
            variant: OrbitVariant::Identity,
            shift: [0, 0],
            xi_index,
            xi: grid.value::<f64>(xi_index),
        }
    }
}

/// One `(ξ_1, ξ_2, ξ_3)` assignment together with the channel transforms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiCandidate {
    pub xi1_index: usize,
    /// One entry per retrieved channel; entry 0 is the reference channel.
    pub choices: Vec<ChannelChoice>,
}

impl XiCandidate {
    pub fn xi(&self) -> Vec<f64> {
        self.choices.iter().map(|c| c.xi).collect()
    }
}

/// Retrieved diagonal elements `⟨a|U|a⟩` up to their global phases.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedTriple<T> {
    pub channels: Vec<Grid<Complex<T>>>,
}

impl<T: Real> RetrievedTriple<T> {
    /// Moduli above one are clipped to one.
    pub fn new(channels: Vec<Grid<Complex<T>>>) -> Result<Self> {
        if channels.len() < 2 || channels.len() > 3 {
            return Err(Error::InvalidConfig(format!(
                "expected 2 or 3 retrieved channels, got {}",
                channels.len()
            )));
        }
        for c in &channels[1..] {
            channels[0].ensure_same_shape(c)?;
        }
        let channels = channels
            .into_iter()
            .map(|g| {
                g.map(|z| {
                    let m = z.norm();
                    if !m.is_finite() {
                        Complex::new(T::zero(), T::zero())
                    } else if m > T::one() {
                        z / m
                    } else {
                        *z
                    }
                })
            })
            .collect();
        Ok(Self { channels })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.channels[0].shape()
    }

    pub fn is_empty_channel(&self, a: usize) -> bool {
        self.channels[a].iter().all(|z| z.norm_sqr() == T::zero())
    }

    /// Channel `a` transformed as `choice` prescribes, including `e^{iξ}`.
    pub fn materialize(&self, a: usize, choice: &ChannelChoice) -> Grid<Complex<T>> {
        let base = variant_grid(&self.channels[a], choice.variant, None);
        let rot = Complex::from_polar(T::one(), T::lit(choice.xi));
        let shifted = if choice.shift == [0, 0] {
            base
        } else {
            base.rolled(choice.shift[0], choice.shift[1])
        };
        shifted.map(|z| z * rot)
    }
}

/// `E = arccos(clip(Re(ψ_1 e^{iξ_1})))`.
pub fn angle_from_reference<T: Real>(reference: &Grid<Complex<T>>, xi: T) -> Grid<T> {
    let rot = Complex::from_polar(T::one(), xi);
    reference.map(|z| (z * rot).re.max(-T::one()).min(T::one()).acos())
}

/// Column and row factors `(h, f)` of a separable map.
pub type Rank1<T> = (Vec<Complex<T>>, Vec<Complex<T>>);

/// Rank-1 factors `ψ(y, x) ≈ h(y) f(x)` when the relative residual is below `tol`.
pub fn rank1_factors<T: Real>(v: &Grid<Complex<T>>, tol: T) -> Option<Rank1<T>> {
    let (rows, cols) = v.shape();
    if rows < 2 || cols < 2 {
        return None;
    }
    let zero = Complex::new(T::zero(), T::zero());
    let energy = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
    if energy == T::zero() {
        return None;
    }
    let mut best_row = 0;
    let mut best_e = T::neg_infinity();
    for r in 0..rows {
        let e = (0..cols).fold(T::zero(), |acc, c| acc + v.get(r, c).norm_sqr());
        if e > best_e {
            best_e = e;
            best_row = r;
        }
    }
    let mut f: Vec<Complex<T>> = (0..cols).map(|c| *v.get(best_row, c)).collect();
    let mut h = vec![zero; rows];
    for _ in 0..30 {
        let nf = f.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if nf == T::zero() {
            return None;
        }
        for (r, hr) in h.iter_mut().enumerate() {
            let s = (0..cols).fold(zero, |acc, c| acc + f[c].conj() * v.get(r, c));
            *hr = s / nf;
        }
        let nh = h.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if nh == T::zero() {
            return None;
        }
        for (c, fc) in f.iter_mut().enumerate() {
            let s = (0..rows).fold(zero, |acc, r| acc + h[r].conj() * v.get(r, c));
            *fc = s / nh;
        }
    }
    let mut resid = T::zero();
    for r in 0..rows {
        for c in 0..cols {
            resid += (*v.get(r, c) - h[r] * f[c]).norm_sqr();
        }
    }
    if (resid / energy).sqrt() < tol {
        Some((h, f))
    } else {
        None
    }
}

fn variant_grid<T: Real>(
    v: &Grid<Complex<T>>,
    variant: OrbitVariant,
    factors: Option<&Rank1<T>>,
) -> Grid<Complex<T>> {
    let (rows, cols) = v.shape();
    match variant {
        OrbitVariant::Identity => v.clone(),
        OrbitVariant::Twin => v.reflected().map(|z| z.conj()),
        OrbitVariant::FactorX | OrbitVariant::FactorY => {
            let owned;
            let (h, f) = match factors {
                Some(hf) => hf,
                None => {
                    owned = rank1_factors(v, T::infinity()).expect("nonzero separable channel");
                    &owned
                }
            };
            Grid::from_fn(rows, cols, |r, c| {
                let ry = (rows - r) % rows;
                let cx = (cols - c) % cols;
                if variant == OrbitVariant::FactorX {
                    h[r] * f[cx].conj()
                } else {
                    h[ry].conj() * f[c]
                }
            })
        }
    }
}

/// A channel's admissible ambiguity-class members, prepared once.
struct ChannelOrbit<T: Real> {
    members: Vec<OrbitMember<T>>,
}

struct OrbitMember<T: Real> {
    variant: OrbitVariant,
    grid: Grid<Complex<T>>,
    /// Σ |v|², Σ v² (shift invariant).
    sum_abs2: T,
    sum_sq: Complex<T>,
    /// Admissible shifts, raster order; `(0, 0)` is always first for the identity.
    shifts: Vec<[usize; 2]>,
}

fn prepare_orbit<T: Real>(dft: &Dft2<T>, channel: &Grid<Complex<T>>, opts: &XiOptions) -> ChannelOrbit<T> {
    let (rows, cols) = channel.shape();
    let mut variants = vec![OrbitVariant::Identity, OrbitVariant::Twin];
    let factors = if rows > 1 {
        rank1_factors(channel, T::lit(opts.rank1_tolerance))
    } else {
        None
    };
    if factors.is_some() {
        variants.push(OrbitVariant::FactorX);
        variants.push(OrbitVariant::FactorY);
    }
    let amp = channel.map(|z| Complex::new(z.norm(), T::zero()));
    let near_energy = amp.iter().fold(T::zero(), |acc, z| acc + z.re * z.re);
    let tol2 = T::lit(opts.shift_mismatch * opts.shift_mismatch);
    let members = variants
        .into_iter()
        .map(|variant| {
            let grid = variant_grid(channel, variant, factors.as_ref());
            let sum_abs2 = grid.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
            let sum_sq = grid.iter().fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z * z);
            let vamp = grid.map(|z| Complex::new(z.norm(), T::zero()));
            let corr = circular_correlation(dft, &amp, &vamp);
            let mut shifts = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let overlap = corr.get(r, c).re;
                    let mismatch = (near_energy + sum_abs2 - overlap - overlap) / near_energy;
                    if mismatch < tol2 {
                        shifts.push([r, c]);
                    }
                }
            }
            OrbitMember {
                variant,
                grid,
                sum_abs2,
                sum_sq,
                shifts,
            }
        })
        .filter(|m| !m.shifts.is_empty())
        .collect();
    ChannelOrbit { members }
}

/// Member, shift and grid phase minimizing `Σ (Re(e^{iξ} v_s) − cos E)²`.
fn best_orbit_member<T: Real>(
    dft: &Dft2<T>,
    orbit: &ChannelOrbit<T>,
    cos_e: &Grid<Complex<T>>,
    phases: &[Complex<T>],
) -> (OrbitVariant, [usize; 2]) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut best = (T::infinity(), OrbitVariant::Identity, [0, 0]);
    for m in &orbit.members {
        // Σ_r c(r) v(r − s)
        let cross = circular_correlation(dft, cos_e, &m.grid);
        for &s in &m.shifts {
            let cs = *cross.get(s[0], s[1]);
            for z in phases {
                let z2 = z * z;
                let score = half * m.sum_abs2 + half * (z2 * m.sum_sq).re - two * (z * cs).re;
                if score < best.0 {
                    best = (score, m.variant, s);
                }
            }
        }
    }
    (best.1, best.2)
}

/// Consistency score `mean (arccos(clip Re(v e^{iξ_j})) − E)²` over non-singular pixels, per `j`.
pub fn consistency_scores<T: Real>(
    channel: &Grid<Complex<T>>,
    angle: &Grid<T>,
    mask: &[bool],
    grid: &XiGrid,
) -> Vec<T> {
    let count = mask.iter().filter(|m| **m).count().max(1);
    let inv = T::one() / T::of_usize(count);
    (0..grid.n)
        .map(|j| {
            let rot = Complex::from_polar(T::one(), grid.value::<T>(j));
            let mut acc = T::zero();
            for ((z, e), &keep) in channel.iter().zip(angle.iter()).zip(mask) {
                if keep {
                    let d = (z * rot).re.max(-T::one()).min(T::one()).acos() - *e;
                    acc += d * d;
                }
            }
            acc * inv
        })
        .collect()
}

/// Grid indices of the best score and, optionally, one near-tied local minimum.
fn pick_minima<T: Real>(scores: &[T], alternatives: bool) -> Vec<usize> {
    let n = scores.len();
    let mut best = 0;
    for j in 1..n {
        if scores[j] < scores[best] {
            best = j;
        }
    }
    if !alternatives {
        return vec![best];
    }
    let b = scores[best];
    let limit = (b + b).max(b + T::lit(1e-6));
    let mut minima: Vec<usize> = (0..n)
        .filter(|&j| {
            let prev = scores[(j + n - 1) % n];
            let next = scores[(j + 1) % n];
            j != best && scores[j] <= prev && scores[j] <= next && scores[j] <= limit
        })
        .collect();
    minima.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores").then(a.cmp(&b)));
    let mut out = vec![best];
    // adjacent plateau points are the same minimum
    if let Some(&j) = minima.iter().find(|&&j| {
        let d = (j + n - best) % n;
        d != 1 && d != n - 1
    }) {
        out.push(j);
    }
    out
}

/// Candidate `ξ` assignments: one family per `ξ_1` grid value.
///
/// With [`XiOptions::plain`] this yields exactly `N` candidates.
pub fn resolve_consistent_xi<T: Real>(
    triple: &RetrievedTriple<T>,
    grid: &XiGrid,
    opts: &XiOptions,
) -> Result<Vec<XiCandidate>> {
    grid.validate()?;
    let (rows, cols) = triple.shape();
    let dft = Dft2::new(rows, cols);
    let k = triple.channels.len();
    let orbits: Vec<Option<ChannelOrbit<T>>> = (0..k)
        .map(|a| {
            if a == 0 || !opts.resolve_orbits || triple.is_empty_channel(a) {
                None
            } else {
                Some(prepare_orbit(&dft, &triple.channels[a], opts))
            }
        })
        .collect();
    let phases: Vec<Complex<T>> = (0..grid.n)
        .map(|j| Complex::from_polar(T::one(), grid.value::<T>(j)))
        .collect();
    let sing = T::lit(opts.singular_sin);

    let families: Vec<Vec<XiCandidate>> = (0..grid.n)
        .into_par_iter()
        .map(|j1| {
            let angle = angle_from_reference(&triple.channels[0], grid.value::<T>(j1));
            let mask: Vec<bool> = angle.iter().map(|e| e.sin() >= sing).collect();
            let cos_e = angle.map(|e| Complex::new(e.cos(), T::zero()));
            let mut per_channel: Vec<Vec<ChannelChoice>> = vec![vec![ChannelChoice::plain(j1, grid)]];
            for a in 1..k {
                if triple.is_empty_channel(a) {
                    per_channel.push(vec![ChannelChoice::plain(0, grid)]);
                    continue;
                }
                let (variant, shift) = match &orbits[a] {
                    Some(orbit) if !orbit.members.is_empty() => {
                        best_orbit_member(&dft, orbit, &cos_e, &phases)
                    }
                    _ => (OrbitVariant::Identity, [0, 0]),
                };
                let probe = ChannelChoice {
                    variant,
                    shift,
                    xi_index: 0,
                    xi: 0.0,
                };
                let v = triple.materialize(a, &probe);
                let scores = consistency_scores(&v, &angle, &mask, grid);
                let picks = pick_minima(&scores, opts.alternatives);
                per_channel.push(
                    picks
                        .into_iter()
                        .map(|j| ChannelChoice {
                            variant,
                            shift,
                            xi_index: j,
                            xi: grid.value::<f64>(j),
                        })
                        .collect(),
                );
            }
            // Cartesian product, channel 2 major
            let mut combos: Vec<Vec<ChannelChoice>> = vec![Vec::new()];
            for options in &per_channel {
                let mut next = Vec::with_capacity(combos.len() * options.len());
                for c in &combos {
                    for o in options {
                        let mut e = c.clone();
                        e.push(*o);
                        next.push(e);
                    }
                }
                combos = next;
            }
            combos
                .into_iter()
                .map(|choices| XiCandidate { xi1_index: j1, choices })
                .collect()
        })
        .collect();
    Ok(families.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_values() {
        let g = XiGrid::default();
        assert_eq!(g.n, 64);
        assert!((g.value::<f64>(16) - PI / 2.0).abs() < 1e-15);
        assert!(XiGrid::new(3).is_err());
    }

    #[test]
    fn rank1_detects_separable() {
        let v = Grid::from_fn(6, 8, |r, c| {
            Complex::from_polar(1.0, 0.3 * r as f64) * Complex::from_polar(1.0, (c as f64).sin())
        });
        let (h, f) = rank1_factors(&v, 1e-6).unwrap();
        for r in 0..6 {
            for c in 0..8 {
                assert!((h[r] * f[c] - v.get(r, c)).norm() < 1e-9);
            }
        }
        let w = Grid::from_fn(6, 8, |r, c| Complex::from_polar(1.0, (r * c) as f64 * 0.7));
        assert!(rank1_factors(&w, 0.1).is_none());
    }

    #[test]
    fn factor_variants_compose_to_twin() {
        let v = Grid::from_fn(4, 6, |r, c| {
            Complex::from_polar(1.0 + 0.1 * r as f64, 0.4 * r as f64 + 0.9 * (c as f64).cos())
        });
        let hf = rank1_factors(&v, 1e-6).unwrap();
        let fx = variant_grid(&v, OrbitVariant::FactorX, Some(&hf));
        let fy = variant_grid(&v, OrbitVariant::FactorY, Some(&hf));
        let twin = variant_grid(&v, OrbitVariant::Twin, None);
        // applying both per-axis reflections gives the twin
        let hf2 = rank1_factors(&fx, 1e-6).unwrap();
        let both = variant_grid(&fx, OrbitVariant::FactorY, Some(&hf2));
        for i in 0..v.len() {
            assert!((both.as_slice()[i] - twin.as_slice()[i]).norm() < 1e-9);
        }
        // each variant keeps the far-field modulus
        let dft = Dft2::new(4, 6);
        let a = dft.forward(&v);
        for w in [&fx, &fy, &twin] {
            let b = dft.forward(w);
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x.norm() - y.norm()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn minima_with_alternative() {
        let s = [0.0, 1.0, 2.0, 1.0, 1e-7, 1.0, 2.0, 3.0];
        assert_eq!(pick_minima(&s, true), vec![0, 4]);
        assert_eq!(pick_minima(&s, false), vec![0]);
        let t = [0.0, 1.0, 2.0, 1.0, 0.5, 1.0, 2.0, 3.0];
        assert_eq!(pick_minima(&t, true), vec![0]);
    }

    #[test]
    fn consistency_score_is_periodic_in_xi1() {
        let ch = Grid::from_fn(1, 8, |_, c| Complex::from_polar(0.8, 0.3 * c as f64));
        let g = XiGrid::new(8).unwrap();
        let a = angle_from_reference(&ch, g.value::<f64>(1));
        let b = angle_from_reference(&ch, g.value::<f64>(1) + 2.0 * PI);
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_options_emit_n_candidates() {
        let ch1 = Grid::from_fn(1, 16, |_, c| Complex::from_polar(0.7, 0.2 * c as f64));
        let ch2 = Grid::from_fn(1, 16, |_, c| Complex::from_polar(0.5, -0.1 * c as f64));
        let t = RetrievedTriple::new(vec![ch1.clone(), ch2.clone(), ch2]).unwrap();
        let c = resolve_consistent_xi(&t, &XiGrid::default(), &XiOptions::plain()).unwrap();
        assert_eq!(c.len(), 64);
        assert!(c.iter().enumerate().all(|(i, x)| x.xi1_index == i && x.choices.len() == 3));
    }
}
