//! End-to-end Fourier reconstruction from a seven- or five-map bundle.

use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    adaptive_noise_floor, derive_seed, sifting_spectrum, IntensityMap, MeasurementSet, PowerSpectrum, Protocol,
    Su2Field,
};
use crate::grid::{ifftshift, Grid, GridSpec};
use crate::reconstruct::extract::{
    complete_third_component, extract_parameters, repair_physicality, PhysicalityReport, RepairStats,
};
use crate::reconstruct::sift::{sift_with, CandidateSolution, SiftReport};
use crate::reconstruct::xi::{resolve_consistent_xi, RetrievedTriple, XiCandidate, XiGrid, XiOptions};
use crate::retrieval::{gs_retrieve, GsSchedule};
use crate::scalar::Real;
use crate::su2::Polarization;

/// Channels carrying less than this fraction of the beam power are treated as empty.
const EMPTY_CHANNEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FqptConfig {
    pub protocol: Protocol,
    pub schedule: GsSchedule,
    #[serde(default)]
    pub xi_grid: XiGrid,
    #[serde(default)]
    pub xi: XiOptions,
    /// Smallest soft threshold in units of the estimated noise floor; 0 disables it.
    #[serde(default = "default_sigmas")]
    pub noise_floor_sigmas: f64,
    /// Noise power allowed to survive the threshold, as a fraction of the map power.
    #[serde(default = "default_leakage")]
    pub noise_leakage: f64,
}

fn default_sigmas() -> f64 {
    2.0
}

fn default_leakage() -> f64 {
    0.01
}

impl FqptConfig {
    pub fn new(protocol: Protocol, schedule: GsSchedule) -> Self {
        Self {
            protocol,
            schedule,
            xi_grid: XiGrid::default(),
            xi: XiOptions::default(),
            noise_floor_sigmas: default_sigmas(),
            noise_leakage: default_leakage(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.protocol == Protocol::Ml16 {
            return Err(Error::InvalidConfig("ml16 is not a Fourier protocol".into()));
        }
        self.schedule.validate()?;
        self.xi_grid.validate()?;
        if !(self.noise_floor_sigmas >= 0.0) || !(self.noise_leakage > 0.0) {
            return Err(Error::InvalidConfig("noise_floor_sigmas must be >= 0 and noise_leakage > 0".into()));
        }
        Ok(())
    }
}

/// Estimated noise standard deviation and the threshold applied, in units of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NoiseFloor {
    pub sigma: f64,
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelDiagnostics {
    pub channel: String,
    pub empty: bool,
    /// Far energy over near energy before the far map is rescaled to match.
    pub energy_ratio: f64,
    pub best_trial: usize,
    pub best_residual: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub retrieval_s: f64,
    pub sift_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqptDiagnostics {
    pub protocol: Protocol,
    pub maps_consumed: Vec<String>,
    pub scale: f64,
    /// Noise floor per consumed map, same order as `maps_consumed`.
    pub noise_floor: Vec<NoiseFloor>,
    pub channels: Vec<ChannelDiagnostics>,
    pub candidates: usize,
    pub winner: XiCandidate,
    /// `+1` / `−1` sign of `n_3` in two-channel mode.
    pub branch: Option<i8>,
    pub xi: Vec<f64>,
    pub sift: SiftReport,
    pub repair: RepairStats,
    pub physicality: PhysicalityReport,
    pub raw_spectrum: bool,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FqptOutput<T> {
    pub field: Su2Field<T>,
    pub diagnostics: FqptDiagnostics,
}

/// Channels, measured sifting spectrum and their bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedInputs<T> {
    pub triple: RetrievedTriple<T>,
    pub measured: PowerSpectrum<T>,
    pub scale: T,
    pub noise_floor: Vec<NoiseFloor>,
    pub channels: Vec<ChannelDiagnostics>,
    pub maps_consumed: Vec<String>,
}

fn denoise<T: Real>(map: &IntensityMap<T>, config: &FqptConfig) -> (Grid<T>, NoiseFloor) {
    if config.noise_floor_sigmas == 0.0 {
        return (map.values.clone(), NoiseFloor::default());
    }
    let (g, sigma, sigmas) = adaptive_noise_floor(&map.values, config.noise_floor_sigmas, config.noise_leakage);
    (
        g,
        NoiseFloor {
            sigma: sigma.as_f64(),
            sigmas,
        },
    )
}

/// Normalize the bundle by the unprojected far power and retrieve every channel.
pub fn retrieve_channels<T: Real>(set: &MeasurementSet<T>, config: &FqptConfig) -> Result<PreparedInputs<T>> {
    config.validate()?;
    set.spec.validate()?;
    let maps = set.select(config.protocol)?;
    let channels = config.protocol.channels();
    let k = channels.len();
    let (rows, cols) = set.spec.shape();
    let envelope = set.envelope.clone().unwrap_or_else(|| Grid::filled(rows, cols, T::one()));
    envelope.ensure_same_shape(&maps[0].values)?;
    let beam = envelope.sum();

    let cleaned: Vec<(Grid<T>, NoiseFloor)> = maps.iter().map(|m| denoise(m, config)).collect();
    let reference = &cleaned[2 * k].0;
    let total = reference.sum();
    if !(total > T::zero()) {
        return Err(Error::NotNormalized { sum: total.as_f64() });
    }
    let scale = beam / total;
    let measured = sifting_spectrum(reference, &set.spec)?;

    let mut retrieved = Vec::with_capacity(k);
    let mut diags = Vec::with_capacity(k);
    for (a, &pol) in channels.iter().enumerate() {
        let near = cleaned[a].0.map(|&v| (v * scale).sqrt());
        let far = ifftshift(&cleaned[k + a].0).map(|&v| (v * scale).sqrt());
        let e_near = near.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let e_far = far.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let label = format!("{}{}", pol.label(), pol.label());
        if e_near < T::lit(EMPTY_CHANNEL) * beam || e_far < T::lit(EMPTY_CHANNEL) * beam {
            retrieved.push(Grid::filled(rows, cols, Complex::new(T::zero(), T::zero())));
            diags.push(ChannelDiagnostics {
                channel: label,
                empty: true,
                energy_ratio: (e_far / beam).as_f64(),
                best_trial: 0,
                best_residual: 0.0,
                iterations: 0,
                residuals: Vec::new(),
            });
            continue;
        }
        let ratio = e_far / e_near;
        let fit = (e_near / e_far).sqrt();
        let far = far.map(|&v| v * fit);
        let schedule = GsSchedule {
            seed: derive_seed(config.schedule.seed, &label),
            ..config.schedule
        };
        let gs = gs_retrieve(&near, &far, &schedule)?;
        let g = gs.field.values.zip_map(&envelope, |z, &b| {
            if b > T::zero() {
                z / b.sqrt()
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })?;
        retrieved.push(g);
        diags.push(ChannelDiagnostics {
            channel: label,
            empty: false,
            energy_ratio: ratio.as_f64(),
            best_trial: gs.best_trial,
            best_residual: gs.best_residual().as_f64(),
            iterations: gs.iterations,
            residuals: gs.residuals.iter().map(|r| r.as_f64()).collect(),
        });
    }
    Ok(PreparedInputs {
        triple: RetrievedTriple::new(retrieved)?,
        measured,
        scale,
        noise_floor: cleaned.iter().map(|c| c.1).collect(),
        channels: diags,
        maps_consumed: maps
            .iter()
            .map(|m| crate::forward::MapKey::of(*m).label())
            .collect(),
    })
}

/// Field for one `ξ` assignment: extraction, optional `n_3` completion with
/// the given sign, and physicality repair.
pub fn build_candidate<T: Real>(
    triple: &RetrievedTriple<T>,
    candidate: &XiCandidate,
    spec: &GridSpec<T>,
    n3_sign: Option<T>,
) -> Result<(Su2Field<T>, RepairStats, PhysicalityReport)> {
    let channels: Vec<_> = candidate
        .choices
        .iter()
        .enumerate()
        .map(|(a, c)| triple.materialize(a, c))
        .collect();
    let mut raw = extract_parameters(&channels)?;
    let clamped = match n3_sign {
        Some(s) => complete_third_component(&mut raw, s),
        None => 0,
    };
    let (params, mut repair) = repair_physicality(&raw)?;
    repair.clamped = clamped;
    Ok((Su2Field::from_params(*spec, &params)?, repair, raw.report))
}

/// Enumerate candidates from retrieved channels and sift them against `measured`.
///
/// Three channels give one candidate per `ξ` assignment. Two channels give a
/// `+` and a `−` branch for `n_3` per assignment, `+` first.
pub fn reconstruct_from_triple<T: Real>(
    triple: &RetrievedTriple<T>,
    measured: &PowerSpectrum<T>,
    spec: &GridSpec<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
    grid: &XiGrid,
    opts: &XiOptions,
) -> Result<(CandidateSolution<T>, SiftReport, Vec<XiCandidate>)> {
    let candidates = resolve_consistent_xi(triple, grid, opts)?;
    let minimal = triple.channels.len() == 2;
    let per = if minimal { 2 } else { 1 };
    let sign = |i: usize| {
        if !minimal {
            None
        } else if i.is_multiple_of(2) {
            Some(T::one())
        } else {
            Some(-T::one())
        }
    };
    let (solution, report) = sift_with(
        candidates.len() * per,
        spec.shape(),
        |i| {
            build_candidate(triple, &candidates[i / per], spec, sign(i)).map(|(f, r, _)| (f, r))
        },
        measured,
        prep,
        envelope,
    )?;
    Ok((solution, report, candidates))
}

/// Two-channel reconstruction with `n_3 = ±√(1 − n_1² − n_2²)`.
pub fn reconstruct_minimal<T: Real>(
    triple: &RetrievedTriple<T>,
    measured: &PowerSpectrum<T>,
    spec: &GridSpec<T>,
    prep: Polarization,
    envelope: Option<&Grid<T>>,
    grid: &XiGrid,
) -> Result<(CandidateSolution<T>, SiftReport, Vec<XiCandidate>)> {
    if triple.channels.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "two-channel reconstruction got {} channels",
            triple.channels.len()
        )));
    }
    reconstruct_from_triple(triple, measured, spec, prep, envelope, grid, &XiOptions::default())
}

/// Retrieve, enumerate, extract, repair and sift.
pub fn fqpt_pipeline<T: Real>(set: &MeasurementSet<T>, config: &FqptConfig) -> Result<FqptOutput<T>> {
    let start = Instant::now();
    let inputs = retrieve_channels(set, config)?;
    let retrieval_s = start.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (solution, sift, candidates) = reconstruct_from_triple(
        &inputs.triple,
        &inputs.measured,
        &set.spec,
        set.reference_prep,
        set.envelope.as_ref(),
        &config.xi_grid,
        &config.xi,
    )?;
    let sift_s = t1.elapsed().as_secs_f64();

    let minimal = config.protocol == Protocol::Minimal5;
    let per = if minimal { 2 } else { 1 };
    let winner = candidates[solution.index / per].clone();
    let branch = minimal.then_some(if solution.index % 2 == 0 { 1 } else { -1 });
    let sign = branch.map(|b| if b > 0 { T::one() } else { -T::one() });
    let (_, _, physicality) = build_candidate(&inputs.triple, &winner, &set.spec, sign)?;

    let diagnostics = FqptDiagnostics {
        protocol: config.protocol,
        maps_consumed: inputs.maps_consumed,
        scale: inputs.scale.as_f64(),
        noise_floor: inputs.noise_floor,
        channels: inputs.channels,
        candidates: sift.deltas.len(),
        xi: winner.xi(),
        winner,
        branch,
        repair: solution.repair,
        physicality,
        raw_spectrum: inputs.measured.raw,
        sift,
        timings: Timings {
            retrieval_s,
            sift_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok(FqptOutput {
        field: solution.field,
        diagnostics,
    })
}
