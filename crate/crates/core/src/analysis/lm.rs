//! Levenberg–Marquardt damped least squares with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::FitError;

pub trait LeastSquares {
    fn residuals(&self, params: &DVector<f64>) -> DVector<f64>;

    /// Jacobian of the residuals, one row per residual.
    fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step size below which the fit is converged.
    pub xtol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            xtol: 1e-8,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: DVector<f64>,
    /// Sum of squared residuals at the solution.
    pub sum_squares: f64,
    pub residuals: DVector<f64>,
    pub iterations: usize,
    /// `s²·(JᵀJ)⁻¹` with `s² = SSR/(m − n)`; `None` when underdetermined or
    /// singular.
    pub covariance: Option<DMatrix<f64>>,
}

impl LmReport {
    pub fn std_error(&self, index: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[(index, index)].max(0.0).sqrt())
    }
}

const MAX_DAMPING: f64 = 1e16;

fn solve_damped(jtj: &DMatrix<f64>, gradient: &DVector<f64>, damping: f64) -> Option<DVector<f64>> {
    let mut a = jtj.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += damping * jtj[(i, i)].max(1e-300);
    }
    a.cholesky().map(|c| c.solve(&(-gradient)))
}

pub fn minimize(
    problem: &impl LeastSquares,
    start: DVector<f64>,
    options: &LmOptions,
) -> Result<LmReport, FitError> {
    let mut x = start;
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(FitError::NotConverged {
            iterations: 0,
            cost,
            last_step: f64::NAN,
        });
    }
    let mut damping = options.initial_damping;
    let mut last_step = f64::INFINITY;

    for iteration in 1..=options.max_iterations {
        let j = problem.jacobian(&x);
        let jtj = j.transpose() * &j;
        let gradient = j.transpose() * &r;

        let mut accepted = None;
        while damping <= MAX_DAMPING {
            if let Some(step) = solve_damped(&jtj, &gradient, damping) {
                let trial = &x + &step;
                let trial_r = problem.residuals(&trial);
                let trial_cost = trial_r.norm_squared();
                if trial_cost.is_finite() && trial_cost <= cost {
                    accepted = Some((step, trial, trial_r, trial_cost));
                    damping = (damping / 10.0).max(1e-15);
                    break;
                }
            }
            damping *= 10.0;
        }

        let Some((step, trial, trial_r, trial_cost)) = accepted else {
            // no descent direction left at any damping: stationary point
            return Ok(finish(problem, x, r, cost, iteration));
        };
        last_step = step.norm();
        x = trial;
        r = trial_r;
        cost = trial_cost;
        if last_step <= options.xtol * (x.norm() + options.xtol) || cost == 0.0 {
            return Ok(finish(problem, x, r, cost, iteration));
        }
    }
    Err(FitError::NotConverged {
        iterations: options.max_iterations,
        cost,
        last_step,
    })
}

fn finish(
    problem: &impl LeastSquares,
    x: DVector<f64>,
    r: DVector<f64>,
    cost: f64,
    iterations: usize,
) -> LmReport {
    let m = r.len();
    let n = x.len();
    let covariance = if m > n {
        let j = problem.jacobian(&x);
        (j.transpose() * &j)
            .try_inverse()
            .map(|inv| inv * (cost / (m - n) as f64))
    } else {
        None
    };
    LmReport {
        params: x,
        sum_squares: cost,
        residuals: r,
        iterations,
        covariance,
    }
}
