//! Pixel-wise maximum-likelihood fit of SU(2) parameters to sixteen
//! near-plane projections, with neighbour seeding against `±U` flips.

pub mod simplex;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{MeasurementSet, Protocol, Su2Field, ML_DESIGN};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::su2::{unitary_from_unit_axis, Spinor, Su2Params, Unitary2};

pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

/// Number of prep/projection pairs in the design.
pub const DESIGN_SIZE: usize = 16;

/// `sin E` below which the fitted axis is reported as unconstrained.
pub const ML_DEGENERATE_SIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seeding {
    /// Every pixel starts from random restarts, no continuity penalty.
    Random,
    /// Each pixel starts from its fitted neighbour.
    Neighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlConfig {
    /// Objective evaluations per simplex run.
    pub max_evals: usize,
    /// Random starts for unseeded pixels.
    pub restarts: usize,
    /// Weight `λ_c` of the `1 − Re Tr(U_nb† U)/2` penalty.
    pub continuity_weight: f64,
    pub seeding: Seeding,
    pub seed: u64,
    /// Seeded pixels whose cost stays above this also get random restarts.
    #[serde(default = "default_restart_above")]
    pub restart_above: f64,
}

fn default_restart_above() -> f64 {
    0.05
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            restarts: 8,
            continuity_weight: 0.1,
            seeding: Seeding::Neighbor,
            seed: 0,
            restart_above: default_restart_above(),
        }
    }
}

impl MlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("ML budget and restarts must be >= 1".into()));
        }
        if !(self.continuity_weight >= 0.0) || !(self.restart_above >= 0.0) {
            return Err(Error::InvalidConfig("ML weights must be >= 0".into()));
        }
        Ok(())
    }
}

/// `|⟨b|U|a⟩|²` over the design, prep-major.
pub fn design_intensities<T: Real>(u: &Unitary2<T>) -> [T; DESIGN_SIZE] {
    let states: [Spinor<T>; 4] = ML_DESIGN.map(|p| p.spinor());
    let mut out = [T::zero(); DESIGN_SIZE];
    for (i, a) in states.iter().enumerate() {
        let ua = u.apply(a);
        for (j, b) in states.iter().enumerate() {
            out[4 * i + j] = b.inner(&ua).norm_sqr();
        }
    }
    out
}

/// `Σ_ab (I_ab^exp − I_ab^th)²`.
pub fn ml_cost<T: Real>(params: &Su2Params<T>, measured: &[T; DESIGN_SIZE]) -> T {
    let norm = params.axis_norm();
    let n = if norm > T::zero() {
        params.axis.map(|v| v / norm)
    } else {
        [T::zero(), T::zero(), T::one()]
    };
    ml_cost_unitary(&unitary_from_unit_axis(params.angle, n), measured)
}

/// Squared residual of the design intensities of `u` against `measured`.
pub fn ml_cost_unitary<T: Real>(u: &Unitary2<T>, measured: &[T; DESIGN_SIZE]) -> T {
    design_intensities(u)
        .iter()
        .zip(measured)
        .fold(T::zero(), |acc, (th, ex)| acc + (*ex - *th) * (*ex - *th))
}

/// Sphere chart for `n`, with the pole moved off the axis it would otherwise sit near.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pole {
    Z,
    X,
}

impl Pole {
    fn for_axis<T: Real>(n: &[T; 3]) -> Self {
        if n[2].abs() > T::lit(0.9) {
            Pole::X
        } else {
            Pole::Z
        }
    }

    fn axis<T: Real>(self, a: T, b: T) -> [T; 3] {
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        match self {
            Pole::Z => [sa * cb, sa * sb, ca],
            Pole::X => [ca, sa * cb, sa * sb],
        }
    }

    fn angles<T: Real>(self, n: &[T; 3]) -> (T, T) {
        let clip = |v: T| v.max(-T::one()).min(T::one());
        match self {
            Pole::Z => (clip(n[2]).acos(), n[1].atan2(n[0])),
            Pole::X => (clip(n[0]).acos(), n[2].atan2(n[1])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFit<T> {
    pub params: Su2Params<T>,
    pub cost: T,
    pub evals: usize,
    /// A simplex run hit its budget before converging.
    pub exhausted: bool,
    /// `sin E` is tiny, so `n` is not determined by the data.
    pub degenerate: bool,
    pub restarted: bool,
}

struct Run<T> {
    params: Su2Params<T>,
    objective: T,
    evals: usize,
    converged: bool,
}

fn run_from<T: Real>(
    start: &Su2Params<T>,
    measured: &[T; DESIGN_SIZE],
    neighbor: Option<(&Unitary2<T>, T)>,
    step: T,
    opts: &SimplexOptions,
) -> Run<T> {
    let pole = Pole::for_axis(&start.axis);
    let (a, b) = pole.angles(&start.axis);
    let objective = |x: &[T; 3]| {
        let u = unitary_from_unit_axis(x[0], pole.axis(x[1], x[2]));
        let mut v = ml_cost_unitary(&u, measured);
        if let Some((nb, w)) = neighbor {
            v += w * (T::one() - nb.signed_overlap(&u));
        }
        v
    };
    let r = nelder_mead(objective, [start.angle, a, b], [step; 3], opts);
    Run {
        params: Su2Params::new(r.x[0], pole.axis(r.x[1], r.x[2])).canonical(),
        objective: r.value,
        evals: r.evals,
        converged: r.converged,
    }
}

fn random_params<T: Real>(rng: &mut ChaCha8Rng) -> Su2Params<T> {
    let e = T::PI() * T::lit(rng.random::<f64>());
    let z = T::lit(2.0 * rng.random::<f64>() - 1.0);
    let phi = (T::PI() + T::PI()) * T::lit(rng.random::<f64>());
    let s = (T::one() - z * z).max(T::zero()).sqrt();
    Su2Params::new(e, [s * phi.cos(), s * phi.sin(), z])
}

/// Fit one pixel. With a `seed`, the run starts there and the continuity
/// penalty pulls towards `seed`'s operator; without one, `restarts` random
/// starts are used. The result is polished without the penalty and put on
/// the neighbour's side of `±U` (or at `E ≤ π/2` without a neighbour).
pub fn ml_fit_pixel<T: Real>(
    measured: &[T; DESIGN_SIZE],
    seed: Option<&Su2Params<T>>,
    config: &MlConfig,
    rng: &mut ChaCha8Rng,
) -> PixelFit<T> {
    let opts = SimplexOptions {
        max_evals: config.max_evals,
        ..SimplexOptions::default()
    };
    let neighbor_u = seed.map(|p| unitary_from_unit_axis(p.angle, p.axis));
    let penalty = neighbor_u
        .as_ref()
        .filter(|_| config.continuity_weight > 0.0)
        .map(|u| (u, T::lit(config.continuity_weight)));
    let mut evals = 0;
    let mut exhausted = false;
    let mut best: Option<Run<T>> = None;
    let consider = |r: Run<T>, evals: &mut usize, exhausted: &mut bool, best: &mut Option<Run<T>>| {
        *evals += r.evals;
        *exhausted |= !r.converged;
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            *best = Some(r);
        }
    };
    let mut restarted = false;
    if let Some(s) = seed {
        let r = run_from(s, measured, penalty, T::lit(0.05), &opts);
        consider(r, &mut evals, &mut exhausted, &mut best);
        let cost = ml_cost(&best.as_ref().expect("one run").params, measured);
        restarted = cost > T::lit(config.restart_above);
    }
    if seed.is_none() || restarted {
        for _ in 0..config.restarts {
            let start = random_params(rng);
            let r = run_from(&start, measured, penalty, T::lit(0.3), &opts);
            consider(r, &mut evals, &mut exhausted, &mut best);
        }
    }
    let mut fit = best.expect("at least one run").params;
    if penalty.is_some() {
        let polish = run_from(&fit, measured, None, T::lit(1e-3), &opts);
        evals += polish.evals;
        exhausted |= !polish.converged;
        if ml_cost(&polish.params, measured) <= ml_cost(&fit, measured) {
            fit = polish.params;
        }
    }
    // ±U representative: the neighbour's side, else E ≤ π/2
    let flip = match &neighbor_u {
        Some(nb) => nb.signed_overlap(&unitary_from_unit_axis(fit.angle, fit.axis)) < T::zero(),
        None => fit.angle > T::FRAC_PI_2(),
    };
    if flip {
        fit = fit.negated();
    }
    PixelFit {
        cost: ml_cost(&fit, measured),
        degenerate: fit.angle.sin() < T::lit(ML_DEGENERATE_SIN),
        params: fit,
        evals,
        exhausted,
        restarted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlReport {
    pub seconds: f64,
    pub pixels: usize,
    pub evaluations: usize,
    pub exhausted: usize,
    pub degenerate: usize,
    pub restarted: usize,
    /// Neighbouring pixel pairs with `Re Tr(U†V) < 0`.
    pub flips: usize,
    pub max_cost: f64,
    pub mean_cost: f64,
    /// Fraction of pixels whose final cost is below 1e-10.
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlOutput<T> {
    pub field: Su2Field<T>,
    pub costs: Grid<T>,
    pub report: MlReport,
}

/// Per-pixel intensities, divided by the envelope and scaled so that the
/// summed `L` and `R` projections match the beam power.
fn pixel_measurements<T: Real>(set: &MeasurementSet<T>) -> Result<Grid<[T; DESIGN_SIZE]>> {
    let maps = set.select(Protocol::Ml16)?;
    let (rows, cols) = set.spec.shape();
    let envelope = set.envelope.clone().unwrap_or_else(|| Grid::filled(rows, cols, T::one()));
    envelope.ensure_same_shape(&maps[0].values)?;
    // R and L are an orthonormal pair, so each prep sums to B over them.
    let captured = (0..4).fold(T::zero(), |acc, i| acc + maps[4 * i + 2].total() + maps[4 * i + 3].total());
    if !(captured > T::zero()) {
        return Err(Error::NotNormalized { sum: captured.as_f64() });
    }
    let scale = T::lit(4.0) * envelope.sum() / captured;
    Ok(Grid::from_fn(rows, cols, |r, c| {
        let b = *envelope.get(r, c);
        let mut m = [T::zero(); DESIGN_SIZE];
        if b > T::zero() {
            for (k, map) in maps.iter().enumerate() {
                m[k] = *map.values.get(r, c) * scale / b;
            }
        }
        m
    }))
}

fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Fit every pixel. Column 0 is swept top to bottom; every row is then swept
/// left to right from its column-0 fit, rows in parallel.
pub fn ml_fit_field<T: Real>(set: &MeasurementSet<T>, config: &MlConfig) -> Result<MlOutput<T>> {
    config.validate()?;
    set.spec.validate()?;
    let start = Instant::now();
    let data = pixel_measurements(set)?;
    let (rows, cols) = data.shape();
    let neighbor = config.seeding == Seeding::Neighbor;

    let mut first_column: Vec<PixelFit<T>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut rng = pixel_rng(config.seed, r * cols);
        let seed = if neighbor && r > 0 {
            Some(&first_column[r - 1].params)
        } else {
            None
        };
        first_column.push(ml_fit_pixel(data.get(r, 0), seed, config, &mut rng));
    }
    let rows_fit: Vec<Vec<PixelFit<T>>> = first_column
        .into_par_iter()
        .enumerate()
        .map(|(r, head)| {
            let mut row = Vec::with_capacity(cols);
            row.push(head);
            for c in 1..cols {
                let mut rng = pixel_rng(config.seed, r * cols + c);
                let seed = if neighbor { Some(&row[c - 1].params) } else { None };
                let fit = ml_fit_pixel(data.get(r, c), seed, config, &mut rng);
                row.push(fit);
            }
            row
        })
        .collect();
    let fits: Vec<PixelFit<T>> = rows_fit.into_iter().flatten().collect();

    let params = Grid::from_vec(rows, cols, fits.iter().map(|f| f.params).collect())?;
    let field = Su2Field::from_params(set.spec, &params)?;
    let costs = Grid::from_vec(rows, cols, fits.iter().map(|f| f.cost).collect())?;
    let us = field.unitaries();
    let mut flips = 0;
    for r in 0..rows {
        for c in 0..cols {
            let u = us.get(r, c);
            if c + 1 < cols && u.signed_overlap(us.get(r, c + 1)) < T::zero() {
                flips += 1;
            }
            if r + 1 < rows && u.signed_overlap(us.get(r + 1, c)) < T::zero() {
                flips += 1;
            }
        }
    }
    let n = fits.len();
    let report = MlReport {
        seconds: start.elapsed().as_secs_f64(),
        pixels: n,
        evaluations: fits.iter().map(|f| f.evals).sum(),
        exhausted: fits.iter().filter(|f| f.exhausted).count(),
        degenerate: fits.iter().filter(|f| f.degenerate).count(),
        restarted: fits.iter().filter(|f| f.restarted).count(),
        flips,
        max_cost: fits.iter().fold(0.0, |a, f| a.max(f.cost.as_f64())),
        mean_cost: fits.iter().map(|f| f.cost.as_f64()).sum::<f64>() / n as f64,
        converged_fraction: fits.iter().filter(|f| f.cost.as_f64() < 1e-10).count() as f64 / n as f64,
    };
    Ok(MlOutput { field, costs, report })
}
