//! Run configuration: reads the sections of a config file into library types.
//!
//! Everything here fails as a usage error (exit 2).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use nv_eddy::config::{magnetometer_params, ConfigFile, Unit};
use nv_eddy::em::{CoilDrive, ComplexField, DiscGeometry};
use nv_eddy::magnetometer::{select_operating_point, MagnetometerParams, Region};
use nv_eddy::scan::{ingest_pattern, ConductivityMap, EvaluationMode, PatternSpec, ScanConfig};

use crate::{CliError, CliResult, Common, ModeArg};

fn usage(e: nv_eddy::Error) -> CliError {
    CliError::usage(e)
}

pub fn load(common: &Common) -> CliResult<ConfigFile> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage(anyhow!("--config <PATH> is required for this command")))?;
    ConfigFile::load(path).map_err(usage)
}

/// Like [`load`] but an absent `--config` yields an empty file.
pub fn load_optional(common: &Common) -> CliResult<ConfigFile> {
    match &common.config {
        Some(_) => load(common),
        None => ConfigFile::parse("").map_err(usage),
    }
}

fn required_file(cfg: &ConfigFile, section: &str, key: &str) -> CliResult<PathBuf> {
    let raw = cfg
        .string(section, key)
        .ok_or_else(|| CliError::usage(anyhow!("[{section}] {key}: required key is missing")))?;
    let path = cfg.resolve_path(raw);
    if !path.is_file() {
        return Err(CliError::usage(anyhow!(
            "[{section}] {key}: file not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

pub fn drive(cfg: &ConfigFile) -> CliResult<CoilDrive> {
    let b = cfg.required_quantity("drive", "b_primary", Unit::Tesla).map_err(usage)?;
    let f = cfg.required_quantity("drive", "frequency", Unit::Hertz).map_err(usage)?;
    CoilDrive::new(b, f).map_err(usage)
}

pub struct Magnetometer {
    pub params: MagnetometerParams,
    pub file: Option<PathBuf>,
    pub region: Region,
}

pub fn magnetometer(cfg: &ConfigFile) -> CliResult<Magnetometer> {
    let file = match cfg.string("magnetometer", "file") {
        Some(_) => Some(required_file(cfg, "magnetometer", "file")?),
        None => None,
    };
    let params = match &file {
        Some(path) => magnetometer_params(&ConfigFile::load(path).map_err(usage)?).map_err(usage)?,
        None => MagnetometerParams::default(),
    };
    let region = match cfg.string("magnetometer", "region") {
        Some(raw) => raw.parse().map_err(usage)?,
        None => Region::Gamma,
    };
    Ok(Magnetometer { params, file, region })
}

pub struct Pattern {
    pub map: ConductivityMap,
    pub file: PathBuf,
}

pub fn pattern(cfg: &ConfigFile) -> CliResult<Pattern> {
    let file = required_file(cfg, "pattern", "file")?;
    let q = |key, unit| cfg.required_quantity("pattern", key, unit).map_err(usage);
    let spec = PatternSpec {
        sigma: q("sigma", Unit::SiemensPerMeter)?,
        pitch: q("pitch", Unit::Meter)?,
        thickness: q("thickness", Unit::Meter)?,
        standoff: q("standoff", Unit::Meter)?,
        threshold: cfg.number("pattern", "threshold").map_err(usage)?.unwrap_or(0.5),
        grayscale: cfg.boolean("pattern", "grayscale").map_err(usage)?.unwrap_or(false),
    };
    let map = ingest_pattern(&file, &spec).map_err(usage)?;
    Ok(Pattern { map, file })
}

pub fn sample_geometry(cfg: &ConfigFile) -> CliResult<DiscGeometry> {
    let q = |key| cfg.required_quantity("sample", key, Unit::Meter).map_err(usage);
    DiscGeometry::new(q("radius")?, q("thickness")?, q("standoff")?).map_err(usage)
}

pub struct RunSettings {
    pub seed: u64,
    pub noise: bool,
    pub out: PathBuf,
}

pub fn run_settings(cfg: &ConfigFile, common: &Common) -> CliResult<RunSettings> {
    let seed = match common.seed {
        Some(s) => s,
        None => cfg.integer("run", "seed").map_err(usage)?.unwrap_or(0),
    };
    let noise = cfg.boolean("run", "noise").map_err(usage)?.unwrap_or(false);
    let out = match (&common.out, cfg.string("run", "out")) {
        (Some(dir), _) => dir.clone(),
        (None, Some(raw)) => cfg.resolve_path(raw),
        (None, None) => PathBuf::from("out"),
    };
    Ok(RunSettings { seed, noise, out })
}

pub fn mode(cfg: &ConfigFile, common: &Common) -> CliResult<EvaluationMode> {
    if let Some(m) = common.mode {
        return Ok(match m {
            ModeArg::Analytic => EvaluationMode::Analytic,
            ModeArg::Timedomain => EvaluationMode::TimeDomain,
        });
    }
    match cfg.string("scan", "mode") {
        None | Some("analytic") => Ok(EvaluationMode::Analytic),
        Some("timedomain") => Ok(EvaluationMode::TimeDomain),
        Some(other) => Err(CliError::usage(anyhow!(
            "[scan] mode: expected `analytic` or `timedomain`, found `{other}`"
        ))),
    }
}

pub fn mode_name(mode: EvaluationMode) -> &'static str {
    match mode {
        EvaluationMode::Analytic => "analytic",
        EvaluationMode::TimeDomain => "timedomain",
    }
}

/// Everything a scan needs, plus the files it was built from.
pub struct ScanSetup {
    pub config: ScanConfig,
    pub map: ConductivityMap,
    pub run: RunSettings,
    pub inputs: Vec<(&'static str, PathBuf)>,
}

pub fn scan_setup(cfg: &ConfigFile, common: &Common) -> CliResult<ScanSetup> {
    let drive = drive(cfg)?;
    let mag = magnetometer(cfg)?;
    let pattern = pattern(cfg)?;
    let run = run_settings(cfg, common)?;
    let op = select_operating_point(mag.region, &mag.params).map_err(usage)?;

    let (x0, x1, y0, y1) = pattern.map.extent();
    let q = |key, unit| cfg.quantity("scan", key, unit).map_err(usage);
    let x_range = (q("x_min", Unit::Meter)?.unwrap_or(x0), q("x_max", Unit::Meter)?.unwrap_or(x1));
    let y_range = (q("y_min", Unit::Meter)?.unwrap_or(y0), q("y_max", Unit::Meter)?.unwrap_or(y1));

    let mut sc = ScanConfig::new(x_range, y_range, drive, mag.params, op);
    sc.step = q("step", Unit::Meter)?.unwrap_or(pattern.map.pitch());
    sc.mode = mode(cfg, common)?;
    if let Some(amplitude) = q("background_amplitude", Unit::Tesla)? {
        let phase = q("background_phase", Unit::Radian)?.unwrap_or(0.0);
        sc.background = Some(ComplexField { amplitude, phase });
    }
    let l = |key, unit| cfg.quantity("lockin", key, unit).map_err(usage);
    if let Some(tau) = l("time_constant", Unit::Second)? {
        sc.lockin.time_constant = tau;
    }
    sc.lockin.sample_rate = l("sample_rate", Unit::Hertz)?;
    if let Some(n) = cfg.number("lockin", "record_time_constants").map_err(usage)? {
        sc.lockin.record_time_constants = n;
    }
    sc.noise_seed = run.noise.then_some(run.seed);
    sc.grid().map_err(usage)?;

    let mut inputs = Vec::new();
    if let Some(p) = cfg.path() {
        inputs.push(("config", p.to_owned()));
    }
    inputs.push(("pattern", pattern.file));
    if let Some(f) = mag.file {
        inputs.push(("magnetometer", f));
    }
    Ok(ScanSetup {
        config: sc,
        map: pattern.map,
        run,
        inputs,
    })
}

/// Creates the output directory.
pub fn output_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("cannot create output directory {}", path.display()))
        .map_err(CliError::Usage)
}
