//! Digital lock-in amplifier and detector-signal synthesis.
//!
//! The demodulator mixes the input with sine and cosine references, passes
//! both products through a first-order low-pass with cutoff `1/(2π·τ)`, and
//! reads the steady state from the final quarter of the record. The mean of
//! the filter output over that window is divided by the mean of the filter's
//! own unit-step response over the same samples, which removes the residual
//! settling transient of the DC term exactly.
//!
//! Phase convention: an input `A·sin(2πf·t + φ)` demodulates to `(A, φ)`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::em::{wrap_phase, ComplexField};
use crate::error::{ensure_positive, Error, Result};
use crate::magnetometer::{pl_vs_field, white_noise_sigma, MagnetometerParams, OperatingPoint};

/// Minimum record length in time constants.
pub const SETTLING_TIME_CONSTANTS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        ensure_positive("sample rate", sample_rate)?;
        if samples.is_empty() {
            return Err(Error::InvalidParameter("time series is empty".into()));
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Samples `f(t)` at `t = n/sample_rate` for `n` in `0..len`.
    pub fn from_fn(sample_rate: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|n| f(n as f64 / sample_rate)).collect();
        Self::new(sample_rate, samples)
    }
}

/// Demodulated amplitude and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInReading {
    pub r: f64,
    /// Radians in (−π, π].
    pub theta: f64,
}

impl LockInReading {
    pub fn in_phase(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn quadrature(&self) -> f64 {
        self.r * self.theta.sin()
    }
}

/// Timing of the lock-in stage used by the time-domain signal path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInSettings {
    pub time_constant: f64,
    /// Detector sampling rate; `None` picks eight samples per drive period.
    pub sample_rate: Option<f64>,
    /// Record length in time constants.
    pub record_time_constants: f64,
}

impl Default for LockInSettings {
    fn default() -> Self {
        Self {
            time_constant: 3e-3,
            sample_rate: None,
            record_time_constants: SETTLING_TIME_CONSTANTS,
        }
    }
}

impl LockInSettings {
    pub fn sample_rate_for(&self, frequency: f64) -> f64 {
        self.sample_rate.unwrap_or(8.0 * frequency)
    }

    pub fn duration(&self) -> f64 {
        self.time_constant * self.record_time_constants
    }
}

/// Reference phase `2π·frac(f·n/fs)`, kept small to avoid drift on long records.
fn reference_phase(cycles_per_sample: f64, n: usize) -> f64 {
    let cycles = cycles_per_sample * n as f64;
    2.0 * PI * (cycles - cycles.floor())
}

pub fn demodulate(signal: &TimeSeries, f_ref: f64, time_constant: f64) -> Result<LockInReading> {
    ensure_positive("reference frequency", f_ref)?;
    ensure_positive("time constant", time_constant)?;
    let fs = signal.sample_rate;
    let nyquist = fs / 2.0;
    if f_ref >= nyquist {
        return Err(Error::Aliasing { f_ref, nyquist });
    }
    let required = SETTLING_TIME_CONSTANTS * time_constant;
    // tolerate rounding of duration·fs to an integer sample count
    if signal.duration() < required * (1.0 - 1e-9) {
        return Err(Error::InsufficientSettling {
            duration: signal.duration(),
            required,
        });
    }

    let alpha = 1.0 - (-1.0 / (fs * time_constant)).exp();
    let cycles_per_sample = f_ref / fs;
    let n = signal.samples.len();
    let window_start = n - n / 4;

    let (mut x, mut y, mut step) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut sum_x, mut sum_y, mut sum_step) = (0.0, 0.0, 0.0);
    for (i, &s) in signal.samples.iter().enumerate() {
        let (sin, cos) = reference_phase(cycles_per_sample, i).sin_cos();
        x += alpha * (2.0 * s * sin - x);
        y += alpha * (2.0 * s * cos - y);
        step += alpha * (1.0 - step);
        if i >= window_start {
            sum_x += x;
            sum_y += y;
            sum_step += step;
        }
    }
    let x = sum_x / sum_step;
    let y = sum_y / sum_step;
    Ok(LockInReading {
        r: x.hypot(y),
        theta: wrap_phase(y.atan2(x)),
    })
}

/// SplitMix64 finalizer; derives independent per-call seeds from a run seed.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Photodiode signal for an AC field `b_ac` at `frequency` seen at the
/// operating point.
///
/// The PL deviation `pl(bias + b(t)) − pl(bias)` is multiplied by the sign
/// of the local PL slope so that a positive field maps to a positive signal,
/// which keeps the demodulated phase equal to the field phase. When
/// `noise_seed` is set, white noise at the magnetometer floor (converted to
/// PL units with the responsivity) is added with standard deviation
/// `responsivity·floor·√(f_s/2)`.
pub fn synthesize_detector_signal(
    b_ac: ComplexField,
    frequency: f64,
    op_point: &OperatingPoint,
    params: &MagnetometerParams,
    duration: f64,
    sample_rate: f64,
    noise_seed: Option<u64>,
) -> Result<TimeSeries> {
    ensure_positive("field frequency", frequency)?;
    ensure_positive("duration", duration)?;
    ensure_positive("sample rate", sample_rate)?;
    if sample_rate <= 4.0 * frequency {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate} Hz must exceed four times the field frequency {frequency} Hz"
        )));
    }
    let len = (duration * sample_rate).round() as usize;
    if len == 0 {
        return Err(Error::InvalidParameter("record has no samples".into()));
    }

    let bias = op_point.bias_field;
    let baseline = pl_vs_field(bias, params);
    let sign = op_point.slope_sign;
    let cycles_per_sample = frequency / sample_rate;
    let mut samples: Vec<f64> = (0..len)
        .map(|n| {
            let b = b_ac.amplitude * (reference_phase(cycles_per_sample, n) + b_ac.phase).sin();
            sign * (pl_vs_field(bias + b, params) - baseline)
        })
        .collect();

    if let Some(seed) = noise_seed {
        let sigma = op_point.responsivity * white_noise_sigma(params.noise_floor, sample_rate);
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }
    TimeSeries::new(sample_rate, samples)
}
