#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use fqpt_core::forward::{plates_field, Axis, Harmonic, PlateSpec, Su2Field, ThetaProfile};
use fqpt_core::grid::GridSpec;

/// One winding plus two harmonics; δ = π along x.
pub fn profile_1d() -> ThetaProfile {
    ThetaProfile::Fourier {
        windings: 1,
        offset: 0.0,
        harmonics: vec![
            Harmonic { order: 1, amplitude: 0.6, phase: 0.3 },
            Harmonic { order: 2, amplitude: 0.35, phase: 1.1 + FRAC_PI_2 },
        ],
    }
}

pub fn field_1d(samples: usize) -> Su2Field<f64> {
    let spec = GridSpec::one_d(samples, 2.5, 1);
    plates_field(spec, &[PlateSpec { delta: PI, axis: Axis::X, profile: profile_1d() }]).unwrap()
}

/// δ₁ = π/2 patterned along x, then δ₂ = π along y.
pub fn plates_2d() -> Vec<PlateSpec> {
    let a = 0.3;
    vec![
        PlateSpec {
            delta: FRAC_PI_2,
            axis: Axis::X,
            profile: ThetaProfile::Fourier {
                windings: 1,
                offset: 0.0,
                harmonics: vec![
                    Harmonic { order: 1, amplitude: a * 0.6, phase: 0.3 },
                    Harmonic { order: 2, amplitude: a * 0.35, phase: 1.1 + FRAC_PI_2 },
                ],
            },
        },
        PlateSpec {
            delta: PI,
            axis: Axis::Y,
            profile: ThetaProfile::Fourier {
                windings: 1,
                offset: 0.0,
                harmonics: vec![
                    Harmonic { order: 1, amplitude: a * 0.5, phase: 0.8 },
                    Harmonic { order: 2, amplitude: a * 0.3, phase: 2.0 },
                ],
            },
        },
    ]
}

pub fn field_2d(samples: usize) -> Su2Field<f64> {
    let spec = GridSpec::two_d([samples, samples], [2.5, 2.5], [1, 1]);
    plates_field(spec, &plates_2d()).unwrap()
}

/// Two x-plates in sequence, so `n_3` is nonzero and bounded away from it.
pub fn field_tilted(samples: usize) -> Su2Field<f64> {
    let spec = GridSpec::one_d(samples, 2.5, 1);
    plates_field(
        spec,
        &[
            PlateSpec { delta: FRAC_PI_2, axis: Axis::X, profile: ThetaProfile::grating() },
            PlateSpec {
                delta: 2.2,
                axis: Axis::X,
                profile: ThetaProfile::Fourier {
                    windings: 1,
                    offset: 0.4,
                    harmonics: vec![Harmonic { order: 1, amplitude: 0.3, phase: 0.2 }],
                },
            },
        ],
    )
    .unwrap()
}

/// Smooth field with `n_3 ∈ [0.37, 0.86]` and a winding azimuth.
pub fn field_bounded_n3(samples: usize) -> Su2Field<f64> {
    use fqpt_core::grid::Grid;
    use fqpt_core::su2::Su2Params;
    let tau = 2.0 * PI;
    let spec = GridSpec::one_d(samples, 2.5, 1);
    let params = Grid::from_fn(1, samples, |_, c| {
        let u = c as f64 / samples as f64;
        let e = 1.1 + 0.5 * (tau * u).sin();
        let beta = 0.8 + 0.3 * (tau * u).cos();
        let phi = tau * u;
        Su2Params::new(e, [beta.sin() * phi.cos(), beta.sin() * phi.sin(), beta.cos()])
    });
    Su2Field::from_params(spec, &params).unwrap()
}
