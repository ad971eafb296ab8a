//! Quasi-static eddy-current forward model.
//!
//! A uniform primary field `B_prim·sin(ωt)` threads a thin conductive disc
//! coaxial with the sensor. Faraday's law around a circle of radius `r`
//! gives an azimuthal electric field `E(r) = ω·B_prim·r/2`, so the eddy
//! current density grows linearly with radius, `J(r) = σ·E(r)`. Summing the
//! on-axis Biot-Savart fields of those current loops gives the closed form
//!
//! ```text
//! B_sec(d) = (µ0·σ·ω·B_prim·h/4) · [F(r0) − F(0)],   F(r) = √(r²+d²) + d²/√(r²+d²)
//! ```
//!
//! which is evaluated here in the cancellation-free form
//! `F(r0) − F(0) = r0⁴ / (s·(s+d)²)` with `s = √(r0²+d²)`.
//!
//! Self-shielding enters through a complex effective thickness: the diffusive
//! current profile `exp(−(1+i)z/δ)` integrated over the disc thickness. In
//! the thin limit it reduces to the real thickness and the secondary field
//! sits in quadrature (+π/2) with the primary.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Vacuum permeability in T·m/A.
pub const MU0: f64 = 4.0e-7 * PI;

/// Oscillating primary field at the sample plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilDrive {
    /// Peak flux density in tesla.
    pub b_primary: f64,
    /// Drive frequency in hertz.
    pub frequency: f64,
}

impl CoilDrive {
    pub fn new(b_primary: f64, frequency: f64) -> Result<Self> {
        ensure_non_negative("primary field", b_primary)?;
        ensure_non_negative("drive frequency", frequency)?;
        Ok(Self {
            b_primary,
            frequency,
        })
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.frequency
    }
}

/// Disc geometry without a material: radius, thickness and sensor standoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGeometry {
    pub radius: f64,
    pub thickness: f64,
    /// Sensor-to-sample distance along the disc axis.
    pub standoff: f64,
}

impl DiscGeometry {
    pub fn new(radius: f64, thickness: f64, standoff: f64) -> Result<Self> {
        ensure_positive("disc radius", radius)?;
        ensure_positive("disc thickness", thickness)?;
        ensure_positive("standoff", standoff)?;
        Ok(Self {
            radius,
            thickness,
            standoff,
        })
    }
}

/// A thin conductive cylinder facing the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDisc {
    pub geometry: DiscGeometry,
    /// Conductivity in S/m. Zero is allowed and yields no eddy currents.
    pub conductivity: f64,
}

impl SampleDisc {
    pub fn new(radius: f64, thickness: f64, conductivity: f64, standoff: f64) -> Result<Self> {
        Ok(Self {
            geometry: DiscGeometry::new(radius, thickness, standoff)?,
            conductivity: ensure_non_negative("conductivity", conductivity)?,
        })
    }

    pub fn with_conductivity(geometry: DiscGeometry, conductivity: f64) -> Result<Self> {
        Ok(Self {
            geometry,
            conductivity: ensure_non_negative("conductivity", conductivity)?,
        })
    }
}

/// Amplitude and phase of a field oscillating at the drive frequency.
///
/// The phase is measured against the primary field and kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexField {
    pub amplitude: f64,
    pub phase: f64,
}

impl ComplexField {
    pub const ZERO: ComplexField = ComplexField {
        amplitude: 0.0,
        phase: 0.0,
    };

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            amplitude: z.norm(),
            phase: wrap_phase(z.arg()),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// Maps an angle into (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    // rem_euclid can land on −0.0 or on exactly −π after the shift
    if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// How the disc thickness enters the eddy-current amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThicknessModel {
    /// Uniform current through the thickness; the field is exactly linear
    /// in σ, ω, B_prim and h.
    ThinLimit,
    /// Complex effective thickness from the diffusive current profile.
    #[default]
    SkinEffect,
}

/// Secondary field together with a validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryField {
    pub field: ComplexField,
    /// Set when the thickness exceeds the skin depth, i.e. the thin-disc
    /// current picture is being extrapolated.
    pub beyond_thin_regime: bool,
}

/// Electromagnetic skin depth `√(2/(µ0·σ·ω))` in meters.
pub fn skin_depth(conductivity: f64, frequency: f64) -> Result<f64> {
    ensure_positive("conductivity", conductivity)?;
    ensure_positive("frequency", frequency)?;
    Ok((2.0 / (MU0 * conductivity * 2.0 * PI * frequency)).sqrt())
}

/// Azimuthal electric field magnitude at radius `r` inside a uniform
/// oscillating axial field.
pub fn induced_e_field(r: f64, drive: &CoilDrive) -> Result<f64> {
    ensure_non_negative("radius", r)?;
    Ok(drive.angular_frequency() * drive.b_primary * r / 2.0)
}

/// Complex effective thickness `δ/(1+i)·(1 − e^{−(1+i)h/δ})`.
///
/// Falls back to the geometric thickness when no skin depth exists
/// (σ = 0 or f = 0) or when the thin limit is requested.
pub fn effective_thickness(
    thickness: f64,
    conductivity: f64,
    frequency: f64,
    model: ThicknessModel,
) -> Complex64 {
    if model == ThicknessModel::ThinLimit || conductivity <= 0.0 || frequency <= 0.0 {
        return Complex64::new(thickness, 0.0);
    }
    let delta = (2.0 / (MU0 * conductivity * 2.0 * PI * frequency)).sqrt();
    let k = Complex64::new(1.0, 1.0);
    let x = k * (thickness / delta);
    // 1 − e^{−x} loses digits for |x| ≪ 1; use the series there
    let one_minus_exp = if x.norm() < 1e-4 {
        x * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        1.0 - (-x).exp()
    };
    one_minus_exp * (delta / k)
}

/// Complex eddy-current strength `i·µ0·σ·ω·B_prim·h_eff/4` shared by the
/// on-axis and multipole expressions. Units: tesla per meter.
pub fn eddy_prefactor(
    thickness: f64,
    conductivity: f64,
    drive: &CoilDrive,
    model: ThicknessModel,
) -> Complex64 {
    let h_eff = effective_thickness(thickness, conductivity, drive.frequency, model);
    let scale = MU0 * conductivity * drive.angular_frequency() * drive.b_primary / 4.0;
    Complex64::i() * h_eff * scale
}

/// `F(r0) − F(0)` for the on-axis loop integral `∫₀^{r0} r³/(r²+d²)^{3/2} dr`.
pub fn on_axis_loop_integral(radius: f64, standoff: f64) -> f64 {
    let s = radius.hypot(standoff);
    let r2 = radius * radius;
    r2 * r2 / (s * (s + standoff) * (s + standoff))
}

fn beyond_thin(sample: &SampleDisc, drive: &CoilDrive) -> bool {
    match skin_depth(sample.conductivity, drive.frequency) {
        Ok(delta) => sample.geometry.thickness > delta,
        Err(_) => false,
    }
}

/// Secondary field on the disc axis at the sensor standoff.
pub fn secondary_field_on_axis(
    sample: &SampleDisc,
    drive: &CoilDrive,
    model: ThicknessModel,
) -> SecondaryField {
    let g = &sample.geometry;
    let k = eddy_prefactor(g.thickness, sample.conductivity, drive, model);
    let b = k * on_axis_loop_integral(g.radius, g.standoff);
    SecondaryField {
        field: ComplexField::from_complex(b),
        beyond_thin_regime: beyond_thin(sample, drive),
    }
}

/// Point-dipole limit of the on-axis field, `µ0·σ·ω·B_prim·h·r0⁴/(16·d³)`
/// with the same effective-thickness handling as the closed form.
pub fn dipole_field_on_axis(
    sample: &SampleDisc,
    drive: &CoilDrive,
    model: ThicknessModel,
) -> ComplexField {
    let g = &sample.geometry;
    let k = eddy_prefactor(g.thickness, sample.conductivity, drive, model);
    let r2 = g.radius * g.radius;
    ComplexField::from_complex(k * (r2 * r2 / (4.0 * g.standoff.powi(3))))
}

/// Induced magnetic moment `π·σ·ω·B_prim·h_eff·r0⁴/8` of the disc, in A·m².
pub fn induced_moment(sample: &SampleDisc, drive: &CoilDrive, model: ThicknessModel) -> Complex64 {
    let g = &sample.geometry;
    let k = eddy_prefactor(g.thickness, sample.conductivity, drive, model);
    // k = i·µ0·σ·ω·B·h_eff/4  ⇒  m = π·r0⁴·k/(2·µ0) without the quadrature factor
    let r2 = g.radius * g.radius;
    -Complex64::i() * k * (PI * r2 * r2 / (2.0 * MU0))
}

/// Axial field per unit eddy strength at a lateral distance `rho` from a
/// disc of radius `radius` seen at axial distance `standoff`.
///
/// Uses the multipole expansion of the axisymmetric current distribution:
/// the dipole term `r0⁴·P₂(cosθ)/(4R³)` plus the first finite-size term
/// `−r0⁶·P₄(cosθ)/(4R⁵)`. Multiplying by [`eddy_prefactor`] gives tesla.
/// Valid outside the sphere enclosing the disc (`R > r0`).
pub fn disc_axial_kernel(radius: f64, standoff: f64, rho: f64) -> f64 {
    let r_sq = rho * rho + standoff * standoff;
    let r = r_sq.sqrt();
    let c2 = standoff * standoff / r_sq;
    let p2 = 0.5 * (3.0 * c2 - 1.0);
    let p4 = (35.0 * c2 * c2 - 30.0 * c2 + 3.0) / 8.0;
    let a2 = radius * radius;
    let a4 = a2 * a2;
    let r3 = r_sq * r;
    a4 / (4.0 * r3) * (p2 - a2 * p4 / r_sq)
}

/// Secondary field projected on the sensor axis for a sensor displaced
/// laterally by `offset = [dx, dy]` from the disc axis.
pub fn secondary_field_offaxis(
    sample: &SampleDisc,
    offset: [f64; 2],
    drive: &CoilDrive,
    model: ThicknessModel,
) -> Result<SecondaryField> {
    let g = &sample.geometry;
    let rho = offset[0].hypot(offset[1]);
    if !rho.is_finite() {
        return Err(Error::Domain {
            what: "lateral offset",
            value: rho,
        });
    }
    if rho == 0.0 && g.standoff == 0.0 {
        return Err(Error::Domain {
            what: "sensor distance",
            value: 0.0,
        });
    }
    let k = eddy_prefactor(g.thickness, sample.conductivity, drive, model);
    let b = k * disc_axial_kernel(g.radius, g.standoff, rho);
    Ok(SecondaryField {
        field: ComplexField::from_complex(b),
        beyond_thin_regime: beyond_thin(sample, drive),
    })
}
