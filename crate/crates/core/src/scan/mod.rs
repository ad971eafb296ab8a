//! Raster-scan simulator.
//!
//! The sensor visits a regular grid of lateral positions above a
//! [`ConductivityMap`]. Each conductive map pixel is treated as a thin disc
//! of the same area and contributes its multipole field from
//! [`crate::em::disc_axial_kernel`]. The complex sum at each position goes
//! through the sensor bandwidth and the operating-point responsivity to give
//! lock-in R and θ.

mod export;
mod pattern;

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use export::{export_image, read_grid_csv, write_grid_csv, write_grid_pgm, GridCsv, ImageFormat, PgmScale, Quantity};
pub use pattern::{
    fifteen_dot_centers, fifteen_dot_pattern, ingest_pattern, intensity_from_csv, intensity_from_pgm, map_from_intensity,
    mainz_wheel_pattern, write_intensity_pgm, PatternSpec,
};

use crate::em::{disc_axial_kernel, eddy_prefactor, wrap_phase, CoilDrive, ComplexField, ThicknessModel};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::exec::{map_indices, Execution};
use crate::lockin::{demodulate, mix_seed, synthesize_detector_signal, LockInSettings};
use crate::magnetometer::{bandwidth_cutoff, sensor_response, MagnetometerParams, OperatingPoint};

/// Default raster step.
pub const DEFAULT_STEP: f64 = 50e-6;

/// Regular grid: `position(row, col) = origin + (col, row)·step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: [f64; 2],
    pub step: f64,
    pub rows: usize,
    pub cols: usize,
}

impl GridGeometry {
    pub fn position(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + col as f64 * self.step,
            self.origin[1] + row as f64 * self.step,
        ]
    }

    /// Fractional column and row of a lateral position.
    pub fn index_of(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin[0]) / self.step,
            (y - self.origin[1]) / self.step,
        )
    }
}

/// Conductivity on a uniform lateral grid. Row index runs along +y.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityMap {
    sigma: Array2<f64>,
    pitch: f64,
    thickness: f64,
    standoff: f64,
    origin: [f64; 2],
}

impl ConductivityMap {
    /// Builds a map centered on the lateral origin.
    pub fn new(sigma: Array2<f64>, pitch: f64, thickness: f64, standoff: f64) -> Result<Self> {
        let (rows, cols) = sigma.dim();
        let origin = [
            -0.5 * (cols.saturating_sub(1)) as f64 * pitch,
            -0.5 * (rows.saturating_sub(1)) as f64 * pitch,
        ];
        Self::with_origin(sigma, pitch, thickness, standoff, origin)
    }

    pub fn with_origin(
        sigma: Array2<f64>,
        pitch: f64,
        thickness: f64,
        standoff: f64,
        origin: [f64; 2],
    ) -> Result<Self> {
        ensure_positive("map pitch", pitch)?;
        ensure_positive("map thickness", thickness)?;
        ensure_positive("map standoff", standoff)?;
        if let Some(bad) = sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::Domain {
                what: "map conductivity",
                value: *bad,
            });
        }
        Ok(Self {
            sigma,
            pitch,
            thickness,
            standoff,
            origin,
        })
    }

    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn standoff(&self) -> f64 {
        self.standoff
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn geometry(&self) -> GridGeometry {
        let (rows, cols) = self.sigma.dim();
        GridGeometry {
            origin: self.origin,
            step: self.pitch,
            rows,
            cols,
        }
    }

    /// Same map moved laterally by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            origin: [self.origin[0] + dx, self.origin[1] + dy],
            ..self.clone()
        }
    }

    /// Same geometry with every conductivity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ensure_non_negative("conductivity scale", factor)?;
        Ok(Self {
            sigma: self.sigma.mapv(|s| s * factor),
            ..self.clone()
        })
    }

    /// Lateral extent `(x_min, x_max, y_min, y_max)` of pixel centers.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        let g = self.geometry();
        let [x1, y1] = g.position(g.rows.saturating_sub(1), g.cols.saturating_sub(1));
        (self.origin[0], x1, self.origin[1], y1)
    }

    /// Radius of the disc with the same area as one pixel.
    pub fn pixel_radius(&self) -> f64 {
        self.pitch / PI.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvaluationMode {
    /// Small-signal result: `R = responsivity·|B|·response(f)`, `θ = arg B`.
    #[default]
    Analytic,
    /// Synthesizes a detector record per position and demodulates it.
    TimeDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub step: f64,
    pub drive: CoilDrive,
    pub params: MagnetometerParams,
    pub operating_point: OperatingPoint,
    pub mode: EvaluationMode,
    pub thickness_model: ThicknessModel,
    /// Uniform complex field added at every position, e.g. a foil cover.
    pub background: Option<ComplexField>,
    pub lockin: LockInSettings,
    /// Adds sensor noise when set; each position draws from its own stream.
    pub noise_seed: Option<u64>,
    pub execution: Execution,
}

impl ScanConfig {
    /// Config with a 50 µm raster over the given window and default
    /// modelling choices.
    pub fn new(
        x_range: (f64, f64),
        y_range: (f64, f64),
        drive: CoilDrive,
        params: MagnetometerParams,
        operating_point: OperatingPoint,
    ) -> Self {
        Self {
            x_range,
            y_range,
            step: DEFAULT_STEP,
            drive,
            params,
            operating_point,
            mode: EvaluationMode::default(),
            thickness_model: ThicknessModel::default(),
            background: None,
            lockin: LockInSettings::default(),
            noise_seed: None,
            execution: Execution::default(),
        }
    }

    pub fn grid(&self) -> Result<GridGeometry> {
        ensure_positive("scan step", self.step)?;
        let count = |(lo, hi): (f64, f64), axis: &str| -> Result<usize> {
            if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(Error::InvalidParameter(format!("scan {axis} range [{lo}, {hi}] is empty")));
            }
            Ok(((hi - lo) / self.step + 1e-9).floor() as usize + 1)
        };
        Ok(GridGeometry {
            origin: [self.x_range.0, self.y_range.0],
            step: self.step,
            rows: count(self.y_range, "y")?,
            cols: count(self.x_range, "x")?,
        })
    }
}

/// Lock-in R and θ over the scan grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanImage {
    pub geometry: GridGeometry,
    pub r: Array2<f64>,
    pub theta: Array2<f64>,
}

impl ScanImage {
    /// `R·e^{iθ}` per pixel.
    pub fn complex(&self) -> Array2<Complex64> {
        ndarray::Zip::from(&self.r)
            .and(&self.theta)
            .map_collect(|&r, &t| Complex64::from_polar(r, t))
    }

    pub fn max_r(&self) -> f64 {
        self.r.iter().copied().fold(0.0, f64::max)
    }
}

struct Source {
    x: f64,
    y: f64,
    weight: Complex64,
}

fn sources(map: &ConductivityMap, drive: &CoilDrive, model: ThicknessModel) -> Vec<Source> {
    let g = map.geometry();
    map.sigma
        .indexed_iter()
        .filter(|(_, &s)| s > 0.0)
        .map(|((row, col), &s)| {
            let [x, y] = g.position(row, col);
            Source {
                x,
                y,
                weight: eddy_prefactor(map.thickness, s, drive, model),
            }
        })
        .collect()
}

/// Complex secondary field (tesla) at each scan position, before the
/// detection chain. Includes the configured background.
pub fn field_map(map: &ConductivityMap, cfg: &ScanConfig) -> Result<Array2<Complex64>> {
    if map.pitch > map.standoff / 2.0 {
        return Err(Error::ResolutionTooCoarse {
            pitch: map.pitch,
            standoff: map.standoff,
        });
    }
    let grid = cfg.grid()?;
    let srcs = sources(map, &cfg.drive, cfg.thickness_model);
    let radius = map.pixel_radius();
    let d = map.standoff;
    let background = cfg.background.map(ComplexField::to_complex).unwrap_or_default();

    let values = map_indices(grid.rows * grid.cols, cfg.execution, |i| {
        let [x, y] = grid.position(i / grid.cols, i % grid.cols);
        let mut acc = background;
        for s in &srcs {
            let rho = (x - s.x).hypot(y - s.y);
            acc += s.weight * disc_axial_kernel(radius, d, rho);
        }
        acc
    });
    Ok(Array2::from_shape_vec((grid.rows, grid.cols), values).expect("grid shape"))
}

/// Equivalent noise bandwidth of a first-order low-pass, `1/(4τ)`.
fn enbw(time_constant: f64) -> f64 {
    1.0 / (4.0 * time_constant)
}

pub fn scan(map: &ConductivityMap, cfg: &ScanConfig) -> Result<ScanImage> {
    cfg.params.validate()?;
    let grid = cfg.grid()?;
    let fields = field_map(map, cfg)?;
    let f = cfg.drive.frequency;
    let cutoff = bandwidth_cutoff(cfg.params.pump_intensity, cfg.params.misalignment_deg, &cfg.params)?;
    let gain = if cutoff > 0.0 { sensor_response(f, cutoff) } else { 0.0 };
    let responsivity = cfg.operating_point.responsivity;

    let readings: Vec<Result<(f64, f64)>> = match cfg.mode {
        EvaluationMode::Analytic => {
            let noise = match cfg.noise_seed {
                Some(seed) => {
                    let sigma = cfg.params.noise_floor * enbw(cfg.lockin.time_constant).sqrt();
                    let normal = Normal::new(0.0, sigma)
                        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
                    Some((seed, normal))
                }
                None => None,
            };
            map_indices(fields.len(), cfg.execution, |i| {
                let mut b = fields.as_slice().expect("standard layout")[i] * gain;
                if let Some((seed, normal)) = &noise {
                    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(*seed, i as u64));
                    b += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
                Ok((responsivity * b.norm(), wrap_phase(b.arg())))
            })
        }
        EvaluationMode::TimeDomain => {
            ensure_positive("drive frequency", f)?;
            let fs = cfg.lockin.sample_rate_for(f);
            let duration = cfg.lockin.duration();
            map_indices(fields.len(), cfg.execution, |i| {
                let b = fields.as_slice().expect("standard layout")[i] * gain;
                let series = synthesize_detector_signal(
                    ComplexField::from_complex(b),
                    f,
                    &cfg.operating_point,
                    &cfg.params,
                    duration,
                    fs,
                    cfg.noise_seed.map(|s| mix_seed(s, i as u64)),
                )?;
                let reading = demodulate(&series, f, cfg.lockin.time_constant)?;
                Ok((reading.r, reading.theta))
            })
        }
    };

    let mut r = Array2::zeros((grid.rows, grid.cols));
    let mut theta = Array2::zeros((grid.rows, grid.cols));
    for (i, reading) in readings.into_iter().enumerate() {
        let (rv, tv) = reading?;
        let idx = (i / grid.cols, i % grid.cols);
        r[idx] = rv;
        theta[idx] = tv;
    }
    Ok(ScanImage {
        geometry: grid,
        r,
        theta,
    })
}
