//! Resolution, bandwidth and sensitivity analyses.

mod kernel;
pub mod lm;
mod lowpass;
mod profile;

pub use kernel::{fit_square_gauss_kernel, square_gauss, KernelFit, FWHM_PER_SIGMA};
pub use lowpass::{fit_lowpass, log_spaced, synthetic_response, LowpassFit};
pub use profile::{average_cross_section, find_local_maxima, full_width_half_max, CrossSection};

use crate::em::{secondary_field_on_axis, CoilDrive, DiscGeometry, SampleDisc, ThicknessModel};
use crate::error::{ensure_positive, Error, Result};

/// Smallest conductivity whose thin-limit on-axis secondary field equals the
/// noise floor, `σ_min = floor / (|B_sec| per S/m)`. With the floor in
/// T/√Hz the result is in S/m·√Hz.
pub fn min_detectable_conductivity(geometry: &DiscGeometry, drive: &CoilDrive, noise_floor: f64) -> Result<f64> {
    ensure_positive("noise floor", noise_floor)?;
    let unit = SampleDisc::with_conductivity(*geometry, 1.0)?;
    let per_siemens = secondary_field_on_axis(&unit, drive, ThicknessModel::ThinLimit)
        .field
        .amplitude;
    if !(per_siemens > 0.0) {
        return Err(Error::NoSolution(
            "drive produces no secondary field (zero amplitude or frequency)".into(),
        ));
    }
    Ok(noise_floor / per_siemens)
}
