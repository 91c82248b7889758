mod common;

use num_complex::Complex;
use proptest::prelude::*;

use fqpt_core::forward::{acquire_ml_set, NoiseSpec};
use fqpt_core::fourier::Dft2;
use fqpt_core::grid::Grid;
use fqpt_core::metrics::{fidelity_map, mean_fidelity};
use fqpt_core::ml::{ml_fit_field, MlConfig};
use fqpt_core::retrieval::{gs_retrieve, GsSchedule};

fn energy(g: &Grid<Complex<f64>>) -> f64 {
    g.iter().map(|z| z.norm_sqr()).sum()
}

fn complex_grid(rows: usize, cols: usize, values: &[(f64, f64)]) -> Grid<Complex<f64>> {
    Grid::from_fn(rows, cols, |r, c| {
        let (re, im) = values[(r * cols + c) % values.len()];
        Complex::new(re, im)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plancherel(
        rows in 1usize..9,
        cols in 1usize..40,
        values in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..320),
    ) {
        let g = complex_grid(rows, cols, &values);
        let dft = Dft2::new(rows, cols);
        let f = dft.forward(&g);
        let e = energy(&g);
        prop_assert!((energy(&f) - e).abs() <= 1e-9 * e.max(1.0));
        let back = dft.inverse(&f);
        for (a, b) in back.iter().zip(g.iter()) {
            prop_assert!((a - b).norm() <= 1e-9 * e.sqrt().max(1.0));
        }
    }

    #[test]
    fn gs_trace_never_increases(
        coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        seed in 0u64..1000,
    ) {
        let n = 48;
        let field = Grid::from_fn(1, n, |_, c| {
            let u = std::f64::consts::TAU * c as f64 / n as f64;
            let phase = coeffs.iter().enumerate().fold(0.0, |acc, (k, &(a, b))| {
                let k = (k + 1) as f64;
                acc + a * (k * u).cos() + b * (k * u).sin()
            });
            Complex::from_polar(1.0 + 0.4 * u.cos(), 2.0 * phase)
        });
        let dft = Dft2::new(1, n);
        let near = field.map(|z| z.norm());
        let far = dft.forward(&field).map(|z| z.norm());
        let out = gs_retrieve(&near, &far, &GsSchedule::new(3, 200, seed)).unwrap();
        for w in out.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fidelity_ignores_global_phases(a in -3.2f64..3.2, b in -3.2f64..3.2, half in 4usize..24) {
        let samples = 2 * half;
        let u = common::field_bounded_n3(samples);
        let v = common::field_1d(samples);
        let f = mean_fidelity(&u, &v).unwrap();
        let g = mean_fidelity(&u.with_global_phase(a), &v.with_global_phase(b)).unwrap();
        prop_assert!((f - g).abs() < 1e-12);
        prop_assert!((mean_fidelity(&u, &u.with_global_phase(std::f64::consts::PI)).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ml_noiseless_2d_fit_is_exact_and_flip_free() {
    let truth = common::field_2d(32);
    let set = acquire_ml_set(&truth, None, &NoiseSpec::none()).unwrap();
    let out = ml_fit_field(&set, &MlConfig::default()).unwrap();
    assert_eq!(out.report.flips, 0);
    let good = out.costs.iter().filter(|&&c| c < 1e-10).count();
    assert!(good as f64 >= 0.99 * out.costs.len() as f64, "{good} of {}", out.costs.len());
    let fid = fidelity_map(&truth, &out.field).unwrap();
    assert!(fid.summary().mean >= 0.999);
}
