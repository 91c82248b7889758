//! Selection of the candidate whose unprojected far field matches the measurement.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{order_spectrum, unprojected_far_power, PowerSpectrum, Su2Field};
use crate::fourier::Dft2;
use crate::grid::{fftshift, Grid};
use crate::metrics::{abs_distance_unchecked, mean_fidelity};
use crate::reconstruct::extract::RepairStats;
use crate::scalar::Real;
use crate::su2::Polarization;

/// Candidates at least this close to the winner count as the same solution
/// when looking for the runner-up.
pub const SAME_SOLUTION_FIDELITY: f64 = 0.99;

/// A candidate field and its distance to the measured spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution<T> {
    pub index: usize,
    pub field: Su2Field<T>,
    pub repair: RepairStats,
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftReport {
    pub winner: usize,
    pub delta: f64,
    /// Lowest-Δ candidate that is a different solution from the winner.
    pub runner_up: Option<usize>,
    pub runner_up_delta: Option<f64>,
    /// Δ per candidate; `None` where the candidate failed repair.
    pub deltas: Vec<Option<f64>>,
    pub failures: usize,
}

/// Normalized unprojected far-field spectrum of `field` for input `prep`,
/// on the same grid kind (orders or raw bins) as `like`.
pub fn candidate_spectrum<T: Real>(
    dft: &Dft2<T>,
    field: &Su2Field<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
    like: &PowerSpectrum<T>,
) -> Result<PowerSpectrum<T>> {
    let power = unprojected_far_power(dft, field.unitaries(), &prep.spinor(), envelope);
    order_spectrum(&fftshift(&power), field.spec(), like.raw)
}

/// `Δ = (Σ_m |P_exp − P_rec|)²` for one candidate field.
pub fn candidate_delta<T: Real>(
    dft: &Dft2<T>,
    field: &Su2Field<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
    measured: &PowerSpectrum<T>,
) -> Result<T> {
    let p = candidate_spectrum(dft, field, prep, envelope, measured)?;
    Ok(abs_distance_unchecked(measured, &p))
}

/// Evaluate `count` candidates produced on demand by `build` and return the
/// winner (minimum Δ, lowest index on ties) with a report.
///
/// Candidates for which `build` fails are skipped; if all fail, the first
/// error is returned.
pub fn sift_with<T, F>(
    count: usize,
    shape: (usize, usize),
    build: F,
    measured: &PowerSpectrum<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
) -> Result<(CandidateSolution<T>, SiftReport)>
where
    T: Real,
    F: Fn(usize) -> Result<(Su2Field<T>, RepairStats)> + Sync,
{
    if count == 0 {
        return Err(Error::EmptyCandidateList);
    }
    let dft = Dft2::new(shape.0, shape.1);
    let evaluated: Vec<Result<T>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (field, _) = build(i)?;
            candidate_delta(&dft, &field, prep, envelope, measured)
        })
        .collect();

    let mut order: Vec<(usize, T)> = Vec::with_capacity(count);
    let mut first_err = None;
    let mut failures = 0;
    for (i, r) in evaluated.iter().enumerate() {
        match r {
            Ok(d) if d.is_finite() => order.push((i, *d)),
            Ok(_) => failures += 1,
            Err(e) => {
                failures += 1;
                if first_err.is_none() {
                    first_err = Some(e.clone());
                }
            }
        }
    }
    if order.is_empty() {
        return Err(first_err.unwrap_or(Error::EmptyCandidateList));
    }
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite").then(a.0.cmp(&b.0)));
    let (winner, delta) = order[0];
    let (field, repair) = build(winner)?;

    let mut runner_up = None;
    for &(i, d) in &order[1..] {
        let (other, _) = build(i)?;
        if mean_fidelity(&field, &other)? < T::lit(SAME_SOLUTION_FIDELITY) {
            runner_up = Some((i, d));
            break;
        }
    }
    let report = SiftReport {
        winner,
        delta: delta.as_f64(),
        runner_up: runner_up.map(|r| r.0),
        runner_up_delta: runner_up.map(|r| r.1.as_f64()),
        deltas: evaluated.iter().map(|r| r.as_ref().ok().map(|d| d.as_f64())).collect(),
        failures,
    };
    Ok((
        CandidateSolution {
            index: winner,
            field,
            repair,
            delta,
        },
        report,
    ))
}

/// Sift an explicit list of candidate fields.
pub fn sift_candidates<T: Real>(
    candidates: &[Su2Field<T>],
    measured: &PowerSpectrum<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
) -> Result<(CandidateSolution<T>, SiftReport)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateList);
    }
    sift_with(
        candidates.len(),
        candidates[0].shape(),
        |i| Ok((candidates[i].clone(), RepairStats::default())),
        measured,
        prep,
        envelope,
    )
}
