//! Independent quadrature oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // split into panels first so narrow features are not missed
    let panels = 64;
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * w, a + (k + 1) as f64 * w);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `J_0(z) = (1/pi) int_0^pi cos(z sin theta) d theta`.
pub fn bessel_j0(z: f64) -> f64 {
    // the integrand is smooth and periodic: the trapezoid rule converges
    // geometrically once the node count exceeds |z|
    let m = 64 + 2 * z.abs().ceil() as usize;
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + (z * PI.sin()).cos());
    for k in 1..m {
        s += (z * (k as f64 * h).sin()).cos();
    }
    s * h / PI
}
