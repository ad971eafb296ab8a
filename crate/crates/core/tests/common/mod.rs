//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const MU0: f64 = 4.0e-7 * PI;

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
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
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Thin-disc secondary field on axis by direct integration over current
/// rings: ring at radius r carries `dI = σ·(ω·B·r/2)·h·dr` and contributes
/// `µ0·dI·r²/(2(r²+d²)^{3/2})` on axis.
pub fn on_axis_by_rings(radius: f64, thickness: f64, sigma: f64, omega: f64, b: f64, d: f64) -> f64 {
    let integrand = |r: f64| r.powi(3) / (r * r + d * d).powf(1.5);
    let scale = radius.powi(4) / d.powi(3);
    let integral = simpson(&integrand, 0.0, radius, 1e-14 * scale);
    MU0 * sigma * omega * b * thickness / 4.0 * integral
}

/// Axial field of the same thin disc at lateral offset `rho` by
/// Biot–Savart over every ring (nested quadrature in ring radius and
/// azimuth), per unit `µ0·σ·ω·B·h/4`.
pub fn disc_kernel_biot_savart(radius: f64, d: f64, rho: f64) -> f64 {
    let ring = |a: f64| {
        // B_z of a unit-current loop of radius a at (rho, 0, d), times µ0⁻¹
        let g = |phi: f64| {
            let c = phi.cos();
            (a * a - a * rho * c) / (a * a + rho * rho - 2.0 * a * rho * c + d * d).powf(1.5)
        };
        let loop_field = simpson(&g, 0.0, 2.0 * PI, 1e-12 / d) / (4.0 * PI);
        // current density ∝ a; with prefactor µ0σωBh/4 ⇒ weight 2a
        2.0 * a * loop_field
    };
    simpson(&ring, 0.0, radius, 1e-12 * radius.powi(4) / d.powi(3))
}
