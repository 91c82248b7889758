#![allow(clippy::needless_range_loop)]

mod common;

use rayon::ThreadPoolBuilder;

use fqpt_core::forward::{acquire_fqpt_set, acquire_ml_set, MeasurementSet, NoiseSpec, Protocol};
use fqpt_core::metrics::{abs_distance, mean_fidelity, similarity};
use fqpt_core::ml::{ml_fit_field, MlConfig};
use fqpt_core::reconstruct::{
    angle_from_reference, candidate_spectrum, fqpt_pipeline, reconstruct_from_triple, retrieve_channels,
    FqptConfig, FqptOutput, XiOptions,
};
use fqpt_core::fourier::Dft2;
use fqpt_core::retrieval::GsSchedule;
use fqpt_core::su2::Polarization;
use fqpt_core::Su2Field64;

fn fqpt_set(truth: &Su2Field64, protocol: Protocol, noise: &NoiseSpec) -> MeasurementSet<f64> {
    acquire_fqpt_set(truth, protocol, Polarization::L, None, noise).unwrap()
}

fn run(set: &MeasurementSet<f64>, protocol: Protocol, schedule: GsSchedule) -> FqptOutput<f64> {
    fqpt_pipeline(set, &FqptConfig::new(protocol, schedule)).unwrap()
}

#[test]
fn one_d_noiseless() {
    let truth = common::field_1d(128);
    let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none());
    let out = run(&set, Protocol::Full7, GsSchedule::paper_1d(7));
    assert!(mean_fidelity(&truth, &out.field).unwrap() >= 0.99);
    assert_eq!(out.diagnostics.maps_consumed.len(), 7);
    assert!(out.diagnostics.sift.delta < 1e-4);
}

#[test]
fn two_d_noiseless_small() {
    let truth = common::field_2d(32);
    let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none());
    let out = run(&set, Protocol::Full7, GsSchedule::new(20, 300, 1));
    assert!(mean_fidelity(&truth, &out.field).unwrap() >= 0.97);
}

#[test]
fn one_d_two_percent_noise() {
    let truth = common::field_1d(128);
    for seed in [0, 1] {
        let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::gaussian(0.02, seed));
        let out = run(&set, Protocol::Full7, GsSchedule::new(40, 600, seed));
        let f = mean_fidelity(&truth, &out.field).unwrap();
        assert!(f >= 0.9, "seed {seed}: F = {f}");
    }
}

#[test]
fn minimal_agrees_with_full_on_bounded_n3() {
    let truth = common::field_bounded_n3(64);
    let full = run(&fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none()), Protocol::Full7, GsSchedule::paper_1d(3));
    let min = run(
        &fqpt_set(&truth, Protocol::Minimal5, &NoiseSpec::none()),
        Protocol::Minimal5,
        GsSchedule::paper_1d(3),
    );
    assert_eq!(min.diagnostics.maps_consumed.len(), 5);
    assert!(min.diagnostics.branch.is_some());
    let f = mean_fidelity(&full.field, &min.field).unwrap();
    assert!(f >= 0.98, "F = {f}");
}

#[test]
fn global_phase_of_the_process_is_invisible() {
    let truth = common::field_1d(64);
    let shifted = truth.with_global_phase(0.7);
    let schedule = GsSchedule::new(30, 400, 11);
    let a = run(&fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none()), Protocol::Full7, schedule);
    let b = run(&fqpt_set(&shifted, Protocol::Full7, &NoiseSpec::none()), Protocol::Full7, schedule);
    assert!(mean_fidelity(&a.field, &b.field).unwrap() > 1.0 - 1e-9);
    assert_eq!(a.diagnostics.sift.winner, b.diagnostics.sift.winner);
}

#[test]
fn deterministic_across_thread_counts() {
    let truth = common::field_1d(64);
    let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::gaussian(0.02, 4));
    let schedule = GsSchedule::new(12, 300, 5);
    let runs: Vec<_> = [1, 3]
        .iter()
        .map(|&n| {
            let pool = ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| run(&set, Protocol::Full7, schedule))
        })
        .collect();
    assert_eq!(runs[0].field, runs[1].field);
    assert_eq!(runs[0].diagnostics.sift, runs[1].diagnostics.sift);
    assert_eq!(runs[0].diagnostics.xi, runs[1].diagnostics.xi);

    let ml_set = acquire_ml_set(&truth, None, &NoiseSpec::gaussian(0.02, 4)).unwrap();
    let fits: Vec<_> = [1, 3]
        .iter()
        .map(|&n| {
            let pool = ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| ml_fit_field(&ml_set, &MlConfig::default()).unwrap())
        })
        .collect();
    assert_eq!(fits[0].field, fits[1].field);
    assert_eq!(fits[0].costs, fits[1].costs);
}

#[test]
fn sifting_separates_winner_from_runner_up() {
    let truth = common::field_1d(128);
    let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none());
    let out = run(&set, Protocol::Full7, GsSchedule::paper_1d(2));
    let sift = &out.diagnostics.sift;
    let runner = sift.runner_up_delta.expect("a distinct competitor exists");
    assert!(runner >= 10.0 * sift.delta, "winner {} runner-up {runner}", sift.delta);

    let dft = Dft2::new(1, 128);
    let measured = fqpt_core::forward::sifting_spectrum(
        &set.get(&fqpt_core::forward::MapKey::far(Polarization::L, None)).unwrap().values,
        &set.spec,
    )
    .unwrap();
    let p = candidate_spectrum(&dft, &out.field, Polarization::L, None, &measured).unwrap();
    assert!(similarity(&measured, &p).unwrap() >= 0.999);
    assert!((abs_distance(&measured, &p).unwrap() - sift.delta).abs() < 1e-12);
}

#[test]
fn winning_phases_are_angle_consistent() {
    let truth = common::field_2d(32);
    let set = fqpt_set(&truth, Protocol::Full7, &NoiseSpec::none());
    let config = FqptConfig::new(Protocol::Full7, GsSchedule::new(20, 300, 1));
    let inputs = retrieve_channels(&set, &config).unwrap();
    let (solution, _, candidates) = reconstruct_from_triple(
        &inputs.triple,
        &inputs.measured,
        &set.spec,
        Polarization::L,
        None,
        &config.xi_grid,
        &XiOptions::default(),
    )
    .unwrap();
    let winner = &candidates[solution.index];
    let channels: Vec<_> = (0..3).map(|a| inputs.triple.materialize(a, &winner.choices[a])).collect();
    let e = angle_from_reference(&inputs.triple.channels[0], winner.choices[0].xi);
    for a in 1..3 {
        if inputs.triple.is_empty_channel(a) {
            continue;
        }
        let mut acc = 0.0;
        let mut n = 0usize;
        for (z, &angle) in channels[a].iter().zip(e.iter()) {
            if angle.sin() < 1e-3 {
                continue;
            }
            let d = z.re.clamp(-1.0, 1.0).acos() - angle;
            acc += d * d;
            n += 1;
        }
        let rms = (acc / n as f64).sqrt();
        assert!(rms < 0.05, "channel {a}: rms {rms}");
    }
}
