//! Nelder–Mead simplex search over a fixed number of parameters.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once the spread of values over the simplex is below this.
    pub ftol: f64,
    /// ...and the simplex fits inside a box of this half-width.
    pub xtol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: 1e-16,
            xtol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexResult<T, const D: usize> {
    pub x: [T; D],
    pub value: T,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0` with an initial simplex of per-coordinate `step`.
pub fn nelder_mead<T: Real, const D: usize>(
    mut f: impl FnMut(&[T; D]) -> T,
    x0: [T; D],
    step: [T; D],
    opts: &SimplexOptions,
) -> SimplexResult<T, D> {
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut evals = 0;
    let mut eval = |x: &[T; D], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    };
    let mut pts: Vec<([T; D], T)> = Vec::with_capacity(D + 1);
    pts.push((x0, eval(&x0, &mut evals)));
    for i in 0..D {
        let mut x = x0;
        x[i] += step[i];
        pts.push((x, eval(&x, &mut evals)));
    }
    let mut converged = false;
    while evals < opts.max_evals {
        pts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("NaN mapped to infinity"));
        let spread = pts[D].1 - pts[0].1;
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.0.iter().zip(pts[0].0.iter()).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        if spread <= T::lit(opts.ftol) && size <= T::lit(opts.xtol) {
            converged = true;
            break;
        }
        let mut centroid = [T::zero(); D];
        for p in &pts[..D] {
            for k in 0..D {
                centroid[k] += p.0[k];
            }
        }
        let inv = T::one() / T::of_usize(D);
        for c in centroid.iter_mut() {
            *c *= inv;
        }
        let along = |t: T, from: &[T; D]| {
            let mut x = [T::zero(); D];
            for k in 0..D {
                x[k] = centroid[k] + t * (from[k] - centroid[k]);
            }
            x
        };
        let worst = pts[D];
        let xr = along(-alpha, &worst.0);
        let fr = eval(&xr, &mut evals);
        if fr < pts[0].1 {
            let xe = along(-alpha * gamma, &worst.0);
            let fe = eval(&xe, &mut evals);
            pts[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[D - 1].1 {
            pts[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(-alpha * rho, &worst.0);
                (x, eval(&x, &mut evals))
            } else {
                let x = along(rho, &worst.0);
                (x, eval(&x, &mut evals))
            };
            if fc < worst.1.min(fr) {
                pts[D] = (xc, fc);
            } else {
                let best = pts[0].0;
                for p in pts[1..].iter_mut() {
                    for k in 0..D {
                        p.0[k] = best[k] + sigma * (p.0[k] - best[k]);
                    }
                    p.1 = eval(&p.0, &mut evals);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("NaN mapped to infinity"));
    SimplexResult {
        x: pts[0].0,
        value: pts[0].1,
        evals,
        converged,
    }
}
