//! Resolution kernel: fit a rectangle of known width convolved with a
//! Gaussian of unknown FWHM to a measured cross section.
//!
//! The convolution has the closed form
//!
//! ```text
//! m(x) = A/2·[erf((x − c + w/2)/(√2·s)) − erf((x − c − w/2)/(√2·s))] + b
//! ```
//!
//! with `s = FWHM/(2√(2 ln 2))`. The fit parameters are `ln FWHM`, `A`,
//! `c`, `b`; working in `ln FWHM` keeps the width positive.
//!
//! Starting point: `FWHM₀ = w/4`, `A₀ = max − min`, `b₀ = min`, and `c₀` the
//! centroid of `value − min`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erf;

use super::lm::{minimize, LeastSquares, LmOptions};
use super::profile::CrossSection;
use crate::error::{ensure_positive, Error, FitError, Result};

/// `FWHM / σ` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

const MIN_SIGMA: f64 = 1e-300;

/// Rectangle of width `width` convolved with a unit-area Gaussian, scaled by
/// `amplitude` and shifted by `center` and `baseline`.
pub fn square_gauss(x: f64, width: f64, fwhm: f64, amplitude: f64, center: f64, baseline: f64) -> f64 {
    let s = (fwhm / FWHM_PER_SIGMA).max(MIN_SIGMA);
    let u_plus = (x - center + width / 2.0) / (SQRT_2 * s);
    let u_minus = (x - center - width / 2.0) / (SQRT_2 * s);
    amplitude * 0.5 * (erf(u_plus) - erf(u_minus)) + baseline
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub fwhm: f64,
    pub fwhm_uncertainty: f64,
    /// RMS of the residuals, in units of the normalized profile.
    pub residual_rms: f64,
    pub amplitude: f64,
    pub center: f64,
    pub baseline: f64,
    pub iterations: usize,
}

struct SquareGaussProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    width: f64,
}

impl LeastSquares for SquareGaussProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let fwhm = p[0].exp();
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .map(|(&x, &y)| square_gauss(x, self.width, fwhm, p[1], p[2], p[3]) - y),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let fwhm = p[0].exp();
        let (amp, center) = (p[1], p[2]);
        let s = (fwhm / FWHM_PER_SIGMA).max(MIN_SIGMA);
        let mut j = DMatrix::zeros(self.x.len(), 4);
        for (i, &x) in self.x.iter().enumerate() {
            let u_plus = (x - center + self.width / 2.0) / (SQRT_2 * s);
            let u_minus = (x - center - self.width / 2.0) / (SQRT_2 * s);
            let g_plus = (-u_plus * u_plus).exp();
            let g_minus = (-u_minus * u_minus).exp();
            // ∂m/∂s, then chain to ln FWHM: ∂s/∂ln FWHM = s
            let dm_ds = amp / (PI.sqrt() * s) * (u_minus * g_minus - u_plus * g_plus);
            j[(i, 0)] = dm_ds * s;
            j[(i, 1)] = 0.5 * (erf(u_plus) - erf(u_minus));
            j[(i, 2)] = amp / ((2.0 * PI).sqrt() * s) * (g_minus - g_plus);
            j[(i, 3)] = 1.0;
        }
        j
    }
}

/// Least-squares fit of rect(`square_width`) ⊗ Gaussian to `profile`.
pub fn fit_square_gauss_kernel(profile: &CrossSection, square_width: f64) -> Result<KernelFit> {
    ensure_positive("square width", square_width)?;
    if profile.span() < 3.0 * square_width * (1.0 - 1e-9) {
        return Err(Error::Range(format!(
            "profile spans {:e} m, need at least three square widths ({:e} m)",
            profile.span(),
            3.0 * square_width
        )));
    }
    let x = &profile.positions;
    let y = &profile.values;
    if x.len() < 5 {
        return Err(FitError::TooFewPoints { needed: 5, got: x.len() }.into());
    }

    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weight: f64 = y.iter().map(|v| v - min).sum();
    let center0 = if weight > 0.0 {
        x.iter().zip(y).map(|(x, v)| x * (v - min)).sum::<f64>() / weight
    } else {
        0.5 * (x[0] + x[x.len() - 1])
    };
    let start = DVector::from_vec(vec![(square_width / 4.0).ln(), max - min, center0, min]);

    let problem = SquareGaussProblem {
        x,
        y,
        width: square_width,
    };
    let report = minimize(&problem, start, &LmOptions::default())?;
    let fwhm = report.params[0].exp();
    let fwhm_uncertainty = report.std_error(0).map_or(f64::NAN, |se| fwhm * se);
    Ok(KernelFit {
        fwhm,
        fwhm_uncertainty,
        residual_rms: (report.sum_squares / x.len() as f64).sqrt(),
        amplitude: report.params[1],
        center: report.params[2],
        baseline: report.params[3],
        iterations: report.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(fwhm: f64, width: f64, step: f64, half: f64) -> CrossSection {
        let n = (half / step).round() as i64;
        let xs: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
        let ys = xs.iter().map(|&x| square_gauss(x, width, fwhm, 1.0, 0.0, 0.0)).collect();
        CrossSection::new(xs, ys).unwrap()
    }

    #[test]
    fn model_limits() {
        // far from the rectangle the model is the baseline, at the center it
        // is amplitude·erf(w/(2√2 s)) + baseline
        let v = square_gauss(0.0, 1e-3, 348e-6, 2.0, 0.0, 0.1);
        let s = 348e-6 / FWHM_PER_SIGMA;
        assert!((v - (2.0 * erf(1e-3 / (2.0 * SQRT_2 * s)) + 0.1)).abs() < 1e-14);
        assert!((square_gauss(10e-3, 1e-3, 348e-6, 2.0, 0.0, 0.1) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cs = synthetic(300e-6, 1e-3, 25e-6, 1.5e-3);
        let problem = SquareGaussProblem {
            x: &cs.positions,
            y: &cs.values,
            width: 1e-3,
        };
        let p = DVector::from_vec(vec![(350e-6f64).ln(), 0.9, 20e-6, 0.05]);
        let j = problem.jacobian(&p);
        for k in 0..4 {
            let h = 1e-6 * p[k].abs().max(1e-6);
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[k] += h;
            lo[k] -= h;
            let fd = (problem.residuals(&hi) - problem.residuals(&lo)) / (2.0 * h);
            for i in 0..cs.positions.len() {
                assert!((fd[i] - j[(i, k)]).abs() < 1e-5 * (1.0 + j[(i, k)].abs()), "param {k} row {i}");
            }
        }
    }

    #[test]
    fn recovers_348_um_kernel() {
        let cs = synthetic(348e-6, 1e-3, 10e-6, 1.5e-3);
        let fit = fit_square_gauss_kernel(&cs, 1e-3).unwrap();
        assert!((fit.fwhm / 348e-6 - 1.0).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn sharp_rectangle_gives_sub_step_width() {
        let step = 20e-6;
        let cs = synthetic(step / 10.0, 1e-3, step, 1.6e-3);
        let fit = fit_square_gauss_kernel(&cs, 1e-3).unwrap();
        assert!(fit.fwhm < step, "{fit:?}");
    }

    #[test]
    fn short_profile_rejected() {
        let cs = synthetic(348e-6, 1e-3, 10e-6, 1.0e-3);
        assert!(matches!(fit_square_gauss_kernel(&cs, 1e-3), Err(Error::Range(_))));
    }
}
