//! Phenomenological model of the microwave-free NV sensor.
//!
//! Photoluminescence versus bias field is a sum of Lorentzian dips (low-field
//! slope, cross-relaxation, ground-state level anti-crossing) normalized to
//! the value at 80 mT. The misalignment angle between the NV axis and the
//! bias field scales each dip depth linearly; the shipped defaults deepen the
//! broad low-field background and flatten the GSLAC as misalignment grows.
//! None of the shipped numbers are measured; they reproduce the qualitative
//! shape of the PL and lock-in curves and are meant to be overridden through
//! a parameter file (see [`crate::config`]).

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Field at which PL is normalized to one.
pub const NORMALIZATION_FIELD: f64 = 80e-3;
/// Field of the ground-state level anti-crossing.
pub const GSLAC_FIELD: f64 = 102.4e-3;
/// Misalignment at which the bandwidth calibration is pinned.
pub const CALIBRATION_MISALIGNMENT_DEG: f64 = 3.0;

const MAX_DEPTH: f64 = 0.95;

/// One Lorentzian dip in the PL-versus-field curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlFeature {
    pub name: String,
    /// Center field in tesla.
    pub center: f64,
    /// Half width at half maximum in tesla.
    pub width: f64,
    /// Fractional PL depth at zero misalignment.
    pub depth: f64,
    /// Relative depth change per degree of misalignment.
    pub misalignment_slope: f64,
}

impl PlFeature {
    pub fn new(name: &str, center: f64, width: f64, depth: f64, misalignment_slope: f64) -> Self {
        Self {
            name: name.to_owned(),
            center,
            width,
            depth,
            misalignment_slope,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("feature width", self.width)?;
        if !(0.0..1.0).contains(&self.depth) {
            return Err(Error::InvalidParameter(format!(
                "feature `{}` depth {} not in [0, 1)",
                self.name, self.depth
            )));
        }
        if !self.center.is_finite() || !self.misalignment_slope.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "feature `{}` has non-finite parameters",
                self.name
            )));
        }
        Ok(())
    }

    /// Depth after misalignment scaling, clamped to [0, 0.95].
    pub fn depth_at(&self, misalignment_deg: f64) -> f64 {
        (self.depth * (1.0 + self.misalignment_slope * misalignment_deg)).clamp(0.0, MAX_DEPTH)
    }

    fn lorentzian(&self, b: f64) -> f64 {
        let x = b - self.center;
        let w2 = self.width * self.width;
        w2 / (x * x + w2)
    }

    fn lorentzian_derivative(&self, b: f64) -> f64 {
        let x = b - self.center;
        let w2 = self.width * self.width;
        let q = x * x + w2;
        -2.0 * w2 * x / (q * q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetometerParams {
    pub features: Vec<PlFeature>,
    /// Angle between NV axis and bias field, degrees (0–5).
    pub misalignment_deg: f64,
    /// Pump intensity in W/mm².
    pub pump_intensity: f64,
    /// Saturation intensity in W/mm².
    pub saturation_intensity: f64,
    /// Asymptotic cutoff at infinite pump and calibration misalignment, Hz.
    pub max_bandwidth: f64,
    /// Linear slope of the misalignment bandwidth factor, per degree.
    pub misalignment_gain: f64,
    /// Peak bias-field modulation in tesla.
    pub modulation_amplitude: f64,
    pub modulation_frequency: f64,
    /// White magnetic noise floor in T/√Hz.
    pub noise_floor: f64,
}

impl Default for MagnetometerParams {
    fn default() -> Self {
        Self {
            features: vec![
                PlFeature::new("low_field", 0.0, 12e-3, 0.08, 0.3),
                PlFeature::new("cross_relaxation", 50e-3, 2.5e-3, 0.02, 0.0),
                PlFeature::new("gslac", GSLAC_FIELD, 0.6e-3, 0.03, -0.15),
            ],
            misalignment_deg: 0.5,
            pump_intensity: 600.0,
            saturation_intensity: 600.0,
            // f_c(I_sat, 3°) = max_bandwidth/2 = 3.5 MHz
            max_bandwidth: 7.0e6,
            misalignment_gain: 0.1,
            modulation_amplitude: 50e-6,
            modulation_frequency: 60e3,
            noise_floor: 10e-6,
        }
    }
}

impl MagnetometerParams {
    pub fn validate(&self) -> Result<()> {
        for f in &self.features {
            f.validate()?;
        }
        if !(0.0..=5.0).contains(&self.misalignment_deg) {
            return Err(Error::InvalidParameter(format!(
                "misalignment {}° outside [0°, 5°]",
                self.misalignment_deg
            )));
        }
        ensure_non_negative("pump intensity", self.pump_intensity)?;
        ensure_positive("saturation intensity", self.saturation_intensity)?;
        ensure_positive("max bandwidth", self.max_bandwidth)?;
        ensure_non_negative("misalignment gain", self.misalignment_gain)?;
        ensure_non_negative("modulation amplitude", self.modulation_amplitude)?;
        ensure_positive("noise floor", self.noise_floor)?;
        if self.raw_pl(NORMALIZATION_FIELD) <= 0.0 {
            return Err(Error::InvalidParameter(
                "feature depths leave no PL at the normalization field".into(),
            ));
        }
        Ok(())
    }

    pub fn feature(&self, name: &str) -> Option<&PlFeature> {
        self.features.iter().find(|f| f.name == name)
    }

    fn raw_pl(&self, b: f64) -> f64 {
        1.0 - self
            .features
            .iter()
            .map(|f| f.depth_at(self.misalignment_deg) * f.lorentzian(b))
            .sum::<f64>()
    }

    fn raw_pl_derivative(&self, b: f64) -> f64 {
        -self
            .features
            .iter()
            .map(|f| f.depth_at(self.misalignment_deg) * f.lorentzian_derivative(b))
            .sum::<f64>()
    }

    /// Bandwidth misalignment factor, linear and equal to one at 3°.
    pub fn misalignment_factor(&self, misalignment_deg: f64) -> f64 {
        (1.0 + self.misalignment_gain * misalignment_deg)
            / (1.0 + self.misalignment_gain * CALIBRATION_MISALIGNMENT_DEG)
    }

    /// True when the modulation is too large for the first-harmonic model
    /// on at least one feature.
    pub fn large_modulation(&self) -> bool {
        self.features
            .iter()
            .any(|f| self.modulation_amplitude > f.width / 5.0)
    }
}

/// Normalized photoluminescence at bias field `b` (tesla).
pub fn pl_vs_field(b: f64, params: &MagnetometerParams) -> f64 {
    params.raw_pl(b) / params.raw_pl(NORMALIZATION_FIELD)
}

/// Analytic `∂PL/∂B` in 1/T.
pub fn pl_derivative(b: f64, params: &MagnetometerParams) -> f64 {
    params.raw_pl_derivative(b) / params.raw_pl(NORMALIZATION_FIELD)
}

/// Lock-in R with an optional warning about modulation depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockInR {
    pub value: f64,
    pub large_modulation: bool,
}

/// First-harmonic lock-in amplitude `|∂PL/∂B|·B_mod` at bias `b_bias`.
pub fn lockin_r_vs_bias(b_bias: f64, params: &MagnetometerParams) -> LockInR {
    LockInR {
        value: pl_derivative(b_bias, params).abs() * params.modulation_amplitude,
        large_modulation: params.large_modulation(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Alpha,
    Beta,
    Gamma,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Alpha, Region::Beta, Region::Gamma];

    /// Bias-field window in tesla.
    pub fn window(self) -> (f64, f64) {
        match self {
            Region::Alpha => (0.0, 25e-3),
            Region::Beta => (40e-3, 60e-3),
            Region::Gamma => (95e-3, 105e-3),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Alpha => "alpha",
            Region::Beta => "beta",
            Region::Gamma => "gamma",
        }
    }

    pub fn contains(self, b: f64) -> bool {
        let (lo, hi) = self.window();
        (lo..=hi).contains(&b)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" | "α" => Ok(Region::Alpha),
            "beta" | "β" => Ok(Region::Beta),
            "gamma" | "γ" => Ok(Region::Gamma),
            other => Err(Error::InvalidParameter(format!("unknown region `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub region: Region,
    pub bias_field: f64,
    /// `|∂PL/∂B|` at the bias field, PL fraction per tesla.
    pub responsivity: f64,
    /// Sign of `∂PL/∂B` at the bias field.
    pub slope_sign: f64,
}

const COARSE_SAMPLES: usize = 2001;
const SEARCH_TOLERANCE: f64 = 1e-6;
// Anything below this is numerically flat for PL slopes measured in 1/T.
const FLAT_RESPONSIVITY: f64 = 1e-12;

/// Picks the bias field in `region` that maximizes lock-in R.
///
/// A coarse grid brackets the global maximum inside the window, then a
/// golden-section search refines it to 1 µT.
pub fn select_operating_point(region: Region, params: &MagnetometerParams) -> Result<OperatingPoint> {
    params.validate()?;
    let (lo, hi) = region.window();
    let slope = |b: f64| pl_derivative(b, params).abs();

    let step = (hi - lo) / (COARSE_SAMPLES - 1) as f64;
    let (best_idx, best_val) = (0..COARSE_SAMPLES)
        .map(|i| (i, slope(lo + i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(best_val > FLAT_RESPONSIVITY) {
        return Err(Error::DegenerateRegion {
            region: region.name(),
        });
    }

    let a = lo + best_idx.saturating_sub(1) as f64 * step;
    let b = (lo + (best_idx + 1) as f64 * step).min(hi);
    let mut bias = golden_section_max(slope, a, b, SEARCH_TOLERANCE);
    // the bracket may sit at the window edge where the maximum is the endpoint
    let grid_best = lo + best_idx as f64 * step;
    if slope(grid_best) > slope(bias) {
        bias = grid_best;
    }

    let derivative = pl_derivative(bias, params);
    Ok(OperatingPoint {
        region,
        bias_field: bias,
        responsivity: derivative.abs(),
        slope_sign: if derivative < 0.0 { -1.0 } else { 1.0 },
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// First-order cutoff `f_max·I/(I+I_sat)·g(misalignment)` in hertz.
pub fn bandwidth_cutoff(
    pump_intensity: f64,
    misalignment_deg: f64,
    params: &MagnetometerParams,
) -> Result<f64> {
    ensure_non_negative("pump intensity", pump_intensity)?;
    ensure_non_negative("misalignment", misalignment_deg)?;
    let saturation = pump_intensity / (pump_intensity + params.saturation_intensity);
    Ok(params.max_bandwidth * saturation * params.misalignment_factor(misalignment_deg))
}

/// First-order low-pass magnitude `1/√(1+(f/f_c)²)`.
pub fn sensor_response(frequency: f64, cutoff: f64) -> f64 {
    let x = frequency / cutoff;
    1.0 / (1.0 + x * x).sqrt()
}

/// Phase lag of the same first-order response, radians (negative).
pub fn sensor_phase(frequency: f64, cutoff: f64) -> f64 {
    -(frequency / cutoff).atan()
}

/// White noise standard deviation per sample for a given sampling rate:
/// `floor·√(f_s/2)`.
pub fn white_noise_sigma(noise_floor: f64, sample_rate: f64) -> f64 {
    noise_floor * (sample_rate / 2.0).sqrt()
}
