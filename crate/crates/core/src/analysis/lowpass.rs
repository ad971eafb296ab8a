//! First-order low-pass fit `A/√(1+(f/f_c)²)` to frequency-response data.
//!
//! Parameters are `A` and `ln f_c`. The start point takes `A₀` from the
//! lowest-frequency sample and `f_c₀` from the first log-interpolated
//! crossing of `A₀/√2`, or the highest sampled frequency if there is none.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::lm::{minimize, LeastSquares, LmOptions};
use crate::error::{ensure_non_negative, Error, FitError, Result};
use crate::magnetometer::sensor_response;

/// Responses that never fall below this fraction of their maximum carry no
/// information about the knee.
const FLAT_FRACTION: f64 = 0.95;
/// Cutoffs fitted beyond this multiple of the highest sample are unbounded.
const MAX_EXTRAPOLATION: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowpassFit {
    pub cutoff: f64,
    pub amplitude: f64,
    pub cutoff_uncertainty: f64,
    pub iterations: usize,
}

struct LowpassProblem<'a> {
    points: &'a [(f64, f64)],
}

impl LeastSquares for LowpassProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let fc = p[1].exp();
        DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|&(f, y)| {
                let x = f / fc;
                p[0] / (1.0 + x * x).sqrt() - y
            }),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let fc = p[1].exp();
        let mut j = DMatrix::zeros(self.points.len(), 2);
        for (i, &(f, _)) in self.points.iter().enumerate() {
            let x2 = (f / fc).powi(2);
            let base = 1.0 / (1.0 + x2).sqrt();
            j[(i, 0)] = base;
            // ∂/∂ln f_c of A(1+x²)^{-1/2} = A·x²·(1+x²)^{-3/2}
            j[(i, 1)] = p[0] * x2 * base / (1.0 + x2);
        }
        j
    }
}

pub fn fit_lowpass(points: &[(f64, f64)]) -> Result<LowpassFit> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            got: points.len(),
        }
        .into());
    }
    if let Some(&(f, y)) = points.iter().find(|(f, y)| !(f.is_finite() && *f >= 0.0 && y.is_finite())) {
        return Err(Error::InvalidParameter(format!("bad response sample ({f}, {y})")));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f_max = sorted[sorted.len() - 1].0;

    let y_max = sorted.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let y_min = sorted.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if !(y_max > 0.0) || y_min >= FLAT_FRACTION * y_max {
        return Err(FitError::UnboundedCutoff { lower_bound: f_max }.into());
    }

    let a0 = sorted[0].1;
    let half_power = a0 / 2f64.sqrt();
    let fc0 = sorted
        .windows(2)
        .find(|w| w[0].1 >= half_power && w[1].1 < half_power && w[0].0 > 0.0)
        .map(|w| {
            let t = (w[0].1 - half_power) / (w[0].1 - w[1].1);
            (w[0].0.ln() + t * (w[1].0.ln() - w[0].0.ln())).exp()
        })
        .unwrap_or(f_max);

    let problem = LowpassProblem { points: &sorted };
    let report = minimize(&problem, DVector::from_vec(vec![a0, fc0.ln()]), &LmOptions::default())?;
    let cutoff = report.params[1].exp();
    if cutoff > MAX_EXTRAPOLATION * f_max {
        return Err(FitError::UnboundedCutoff { lower_bound: f_max }.into());
    }
    Ok(LowpassFit {
        cutoff,
        amplitude: report.params[0],
        cutoff_uncertainty: report.std_error(1).map_or(f64::NAN, |se| cutoff * se),
        iterations: report.iterations,
    })
}

/// First-order response `amplitude·1/√(1+(f/f_c)²)` sampled at `frequencies`,
/// each sample multiplied by `1 + relative_noise·N(0, 1)` from a seeded stream.
pub fn synthetic_response(
    frequencies: &[f64],
    cutoff: f64,
    amplitude: f64,
    relative_noise: f64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    ensure_non_negative("relative noise", relative_noise)?;
    let normal = Normal::new(0.0, relative_noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(frequencies
        .iter()
        .map(|&f| {
            let clean = if cutoff > 0.0 { amplitude * sensor_response(f, cutoff) } else { 0.0 };
            (f, clean * (1.0 + normal.sample(&mut rng)))
        })
        .collect())
}

/// `n` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
