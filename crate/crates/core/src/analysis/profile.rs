//! Cross sections and peak finding on image grids.

use ndarray::Array2;

use crate::error::{ensure_positive, Error, Result};
use crate::scan::GridGeometry;

/// A 1-D profile normalized to unit peak.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    /// Offsets from the aligned centers, strictly increasing, meters.
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl CrossSection {
    /// Normalizes `values` to a peak of one.
    pub fn new(positions: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if positions.len() != values.len() || positions.is_empty() {
            return Err(Error::InvalidParameter(
                "cross section needs matching, non-empty positions and values".into(),
            ));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("cross-section positions must increase".into()));
        }
        let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(peak > 0.0 && peak.is_finite()) {
            return Err(Error::DegenerateNormalization);
        }
        Ok(Self {
            positions,
            values: values.into_iter().map(|v| v / peak).collect(),
        })
    }

    pub fn span(&self) -> f64 {
        self.positions[self.positions.len() - 1] - self.positions[0]
    }
}

/// Linearly interpolated value along `row` at fractional column `col`.
fn sample_row(grid: &Array2<f64>, row: usize, col: f64) -> Option<f64> {
    let cols = grid.ncols();
    let eps = 1e-9;
    if col < -eps || col > (cols - 1) as f64 + eps {
        return None;
    }
    let col = col.clamp(0.0, (cols - 1) as f64);
    let left = col.floor() as usize;
    let right = (left + 1).min(cols - 1);
    let t = col - left as f64;
    Some(grid[(row, left)] * (1.0 - t) + grid[(row, right)] * t)
}

/// Averages horizontal profiles through each center over `±half_window`
/// and normalizes the result to unit peak.
///
/// Each profile is taken along the grid row nearest to the center and
/// sampled at the grid step, interpolating linearly in x so centers need
/// not sit on grid points.
pub fn average_cross_section(
    grid: &Array2<f64>,
    geometry: &GridGeometry,
    centers: &[[f64; 2]],
    half_window: f64,
) -> Result<CrossSection> {
    ensure_positive("half window", half_window)?;
    if centers.is_empty() {
        return Err(Error::InvalidParameter("at least one center is required".into()));
    }
    let (rows, _) = grid.dim();
    let half = (half_window / geometry.step).round() as isize;
    let n = (2 * half + 1) as usize;
    let mut sum = vec![0.0; n];
    for center in centers {
        let (col, row) = geometry.index_of(center[0], center[1]);
        let row = row.round();
        if row < 0.0 || row >= rows as f64 {
            return Err(Error::Range(format!(
                "center ({:e}, {:e}) m lies outside the image rows",
                center[0], center[1]
            )));
        }
        for (k, acc) in (-half..=half).zip(sum.iter_mut()) {
            *acc += sample_row(grid, row as usize, col + k as f64).ok_or_else(|| {
                Error::Range(format!(
                    "window ±{half_window:e} m around ({:e}, {:e}) m leaves the image",
                    center[0], center[1]
                ))
            })?;
        }
    }
    let positions = (-half..=half).map(|k| k as f64 * geometry.step).collect();
    let count = centers.len() as f64;
    CrossSection::new(positions, sum.into_iter().map(|s| s / count).collect())
}

/// Local maxima at or above `threshold·max`, at least `min_separation`
/// pixels apart (Chebyshev distance). Stronger peaks win; ties go to the
/// earlier pixel in row-major order. Returned in descending strength.
pub fn find_local_maxima(grid: &Array2<f64>, threshold: f64, min_separation: usize) -> Vec<(usize, usize)> {
    let (rows, cols) = grid.dim();
    let max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = threshold * max;
    let mut candidates: Vec<(usize, usize)> = grid
        .indexed_iter()
        .filter(|&((r, c), &v)| {
            if v < floor {
                return false;
            }
            let r0 = r.saturating_sub(1);
            let c0 = c.saturating_sub(1);
            (r0..=(r + 1).min(rows - 1))
                .flat_map(|rr| (c0..=(c + 1).min(cols - 1)).map(move |cc| (rr, cc)))
                .all(|idx| grid[idx] <= v)
        })
        .map(|(idx, _)| idx)
        .collect();
    candidates.sort_by(|a, b| grid[*b].total_cmp(&grid[*a]).then(a.cmp(b)));

    let mut peaks: Vec<(usize, usize)> = Vec::new();
    for cand in candidates {
        let far = peaks
            .iter()
            .all(|p| p.0.abs_diff(cand.0).max(p.1.abs_diff(cand.1)) >= min_separation);
        if far {
            peaks.push(cand);
        }
    }
    peaks
}

/// Full width at half maximum of a sampled single-peaked profile, with
/// linear interpolation of the two half-maximum crossings around the peak.
pub fn full_width_half_max(positions: &[f64], values: &[f64]) -> Option<f64> {
    let (peak_idx, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = peak / 2.0;
    let crossing = |i: usize, j: usize| {
        let t = (half - values[i]) / (values[j] - values[i]);
        positions[i] + t * (positions[j] - positions[i])
    };
    let left = (0..peak_idx).rev().find(|&i| values[i] < half).map(|i| crossing(i, i + 1))?;
    let right = (peak_idx + 1..values.len())
        .find(|&i| values[i] < half)
        .map(|i| crossing(i - 1, i))?;
    Some(right - left)
}
