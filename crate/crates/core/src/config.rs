//! Flat key-value configuration with section headers and unit checks.
//!
//! ```text
//! # comment
//! [drive]
//! b_primary = 91e-6 T
//! frequency = 3.5e6 Hz
//! ```
//!
//! Every physical quantity carries its unit after the number. A missing or
//! different unit is a hard error; there is no unit conversion.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ini::{Ini, ParseOption};

use crate::error::{Error, Result};
use crate::magnetometer::{MagnetometerParams, PlFeature};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Tesla,
    Hertz,
    Meter,
    Second,
    Radian,
    Degree,
    PerDegree,
    SiemensPerMeter,
    WattPerSquareMillimeter,
    TeslaPerRootHertz,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Tesla => "T",
            Unit::Hertz => "Hz",
            Unit::Meter => "m",
            Unit::Second => "s",
            Unit::Radian => "rad",
            Unit::Degree => "deg",
            Unit::PerDegree => "1/deg",
            Unit::SiemensPerMeter => "S/m",
            Unit::WattPerSquareMillimeter => "W/mm2",
            Unit::TeslaPerRootHertz => "T/rtHz",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    ini: Ini,
}

fn parse_options() -> ParseOption {
    ParseOption {
        enabled_escape: false,
        ..ParseOption::default()
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_opt(text, parse_options()).map_err(|e| Error::Config {
            location: format!("line {}", e.line + 1),
            message: e.msg.into_owned(),
        })?;
        Ok(Self { path: None, ini })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config { location, message } => Error::Config {
                location: format!("{} {location}", path.display()),
                message,
            },
            other => other,
        })?;
        cfg.path = Some(path.to_owned());
        Ok(cfg)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Resolves a path value relative to the directory holding this file.
    pub fn resolve_path(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        match (&self.path, p.is_absolute()) {
            (Some(own), false) => own.parent().unwrap_or(Path::new(".")).join(p),
            _ => p.to_owned(),
        }
    }

    fn location(section: &str, key: &str) -> String {
        format!("[{section}] {key}")
    }

    pub fn string(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key).map(str::trim)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.ini.section(Some(section)).is_some()
    }

    /// Section names starting with `prefix`, in file order.
    pub fn sections_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.ini
            .sections()
            .flatten()
            .filter(move |s| s.starts_with(prefix))
    }

    /// Dimensionless number; a unit suffix is rejected.
    pub fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let Some(raw) = self.string(section, key) else {
            return Ok(None);
        };
        let mut parts = raw.split_whitespace();
        let value = parse_f64(parts.next().unwrap_or(""), section, key)?;
        if let Some(extra) = parts.next() {
            return Err(Error::Config {
                location: Self::location(section, key),
                message: format!("expected a dimensionless number, found unit `{extra}`"),
            });
        }
        Ok(Some(value))
    }

    /// Physical quantity that must carry exactly `unit`.
    pub fn quantity(&self, section: &str, key: &str, unit: Unit) -> Result<Option<f64>> {
        self.string(section, key)
            .map(|raw| parse_quantity(raw, unit, section, key))
            .transpose()
    }

    /// Comma-separated quantities, each with its own unit: `20 W/mm2, 180 W/mm2`.
    pub fn quantity_list(&self, section: &str, key: &str, unit: Unit) -> Result<Option<Vec<f64>>> {
        self.string(section, key)
            .map(|raw| {
                raw.split(',')
                    .map(|item| parse_quantity(item, unit, section, key))
                    .collect()
            })
            .transpose()
    }

    pub fn required_quantity(&self, section: &str, key: &str, unit: Unit) -> Result<f64> {
        self.quantity(section, key, unit)?.ok_or_else(|| missing(section, key))
    }

    pub fn boolean(&self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.string(section, key) {
            None => Ok(None),
            Some("true" | "yes" | "on" | "1") => Ok(Some(true)),
            Some("false" | "no" | "off" | "0") => Ok(Some(false)),
            Some(other) => Err(Error::Config {
                location: Self::location(section, key),
                message: format!("expected a boolean, found `{other}`"),
            }),
        }
    }

    pub fn integer(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.string(section, key)
            .map(|raw| {
                raw.parse::<u64>().map_err(|_| Error::Config {
                    location: Self::location(section, key),
                    message: format!("expected a non-negative integer, found `{raw}`"),
                })
            })
            .transpose()
    }
}

pub(crate) fn missing(section: &str, key: &str) -> Error {
    Error::Config {
        location: format!("[{section}] {key}"),
        message: "required key is missing".into(),
    }
}

fn parse_quantity(raw: &str, unit: Unit, section: &str, key: &str) -> Result<f64> {
    let parts: Vec<&str> = raw.split_whitespace().collect();
    let loc = || format!("[{section}] {key}");
    match parts.as_slice() {
        [value, found] if *found == unit.symbol() => parse_f64(value, section, key),
        [_, found] => Err(Error::Config {
            location: loc(),
            message: format!("unit mismatch: expected `{unit}`, found `{found}`"),
        }),
        [_] => Err(Error::Config {
            location: loc(),
            message: format!("missing unit: expected `<number> {unit}`"),
        }),
        _ => Err(Error::Config {
            location: loc(),
            message: format!("malformed value `{}`; expected `<number> {unit}`", raw.trim()),
        }),
    }
}

fn parse_f64(raw: &str, section: &str, key: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            location: format!("[{section}] {key}"),
            message: format!("`{raw}` is not a finite number"),
        })
}

const SENSOR: &str = "sensor";
const FEATURE_PREFIX: &str = "feature.";

/// Reads magnetometer parameters; absent keys keep their defaults. When the
/// file declares any `[feature.*]` section, the declared features replace the
/// default feature list.
pub fn magnetometer_params(cfg: &ConfigFile) -> Result<MagnetometerParams> {
    let mut p = MagnetometerParams::default();
    let q = |key, unit| cfg.quantity(SENSOR, key, unit);
    if let Some(v) = q("misalignment", Unit::Degree)? {
        p.misalignment_deg = v;
    }
    if let Some(v) = q("pump_intensity", Unit::WattPerSquareMillimeter)? {
        p.pump_intensity = v;
    }
    if let Some(v) = q("saturation_intensity", Unit::WattPerSquareMillimeter)? {
        p.saturation_intensity = v;
    }
    if let Some(v) = q("max_bandwidth", Unit::Hertz)? {
        p.max_bandwidth = v;
    }
    if let Some(v) = q("misalignment_gain", Unit::PerDegree)? {
        p.misalignment_gain = v;
    }
    if let Some(v) = q("modulation_amplitude", Unit::Tesla)? {
        p.modulation_amplitude = v;
    }
    if let Some(v) = q("modulation_frequency", Unit::Hertz)? {
        p.modulation_frequency = v;
    }
    if let Some(v) = q("noise_floor", Unit::TeslaPerRootHertz)? {
        p.noise_floor = v;
    }

    let names: Vec<&str> = cfg.sections_with_prefix(FEATURE_PREFIX).collect();
    if !names.is_empty() {
        p.features = names
            .into_iter()
            .map(|section| {
                let name = &section[FEATURE_PREFIX.len()..];
                Ok(PlFeature {
                    name: name.to_owned(),
                    center: cfg.required_quantity(section, "center", Unit::Tesla)?,
                    width: cfg.required_quantity(section, "width", Unit::Tesla)?,
                    depth: cfg.number(section, "depth")?.ok_or_else(|| missing(section, "depth"))?,
                    misalignment_slope: cfg
                        .quantity(section, "misalignment_slope", Unit::PerDegree)?
                        .unwrap_or(0.0),
                })
            })
            .collect::<Result<_>>()?;
    }
    p.validate()?;
    Ok(p)
}

/// Renders parameters in the file format read by [`magnetometer_params`].
pub fn render_magnetometer_params(p: &MagnetometerParams) -> String {
    let mut out = String::new();
    out.push_str("[sensor]\n");
    let mut kv = |k: &str, v: f64, u: Unit| out.push_str(&format!("{k} = {v:e} {u}\n"));
    kv("misalignment", p.misalignment_deg, Unit::Degree);
    kv("pump_intensity", p.pump_intensity, Unit::WattPerSquareMillimeter);
    kv("saturation_intensity", p.saturation_intensity, Unit::WattPerSquareMillimeter);
    kv("max_bandwidth", p.max_bandwidth, Unit::Hertz);
    kv("misalignment_gain", p.misalignment_gain, Unit::PerDegree);
    kv("modulation_amplitude", p.modulation_amplitude, Unit::Tesla);
    kv("modulation_frequency", p.modulation_frequency, Unit::Hertz);
    kv("noise_floor", p.noise_floor, Unit::TeslaPerRootHertz);
    for f in &p.features {
        out.push_str(&format!(
            "\n[feature.{}]\ncenter = {:e} T\nwidth = {:e} T\ndepth = {:e}\nmisalignment_slope = {:e} 1/deg\n",
            f.name, f.center, f.width, f.depth, f.misalignment_slope
        ));
    }
    out
}
