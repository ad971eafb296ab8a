//! Subcommand bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use ndarray::Array2;
use nv_eddy::analysis::{
    average_cross_section, find_local_maxima, fit_lowpass, fit_square_gauss_kernel, log_spaced,
    min_detectable_conductivity, square_gauss, synthetic_response,
};
use nv_eddy::config::{ConfigFile, Unit};
use nv_eddy::em::skin_depth as skin_depth_of;
use nv_eddy::lockin::mix_seed;
use nv_eddy::magnetometer::bandwidth_cutoff;
use nv_eddy::scan::{export_image, read_grid_csv, GridGeometry, ImageFormat, Quantity, ScanImage};

use crate::manifest::Manifest;
use crate::settings::{self, ScanSetup};
use crate::{CliError, CliResult, Common, ResolutionArgs, SkinDepthArgs};

const COPPER: f64 = 5.96e7;
const ALUMINIUM: f64 = 3.77e7;

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::runtime(e)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Runtime)
}

fn base_manifest(command: &str, setup_inputs: &[(&str, std::path::PathBuf)]) -> CliResult<Manifest> {
    let mut m = Manifest::default();
    m.setting("command", command);
    m.setting("version", env!("CARGO_PKG_VERSION"));
    for (role, path) in setup_inputs {
        m.input(role, path).map_err(CliError::Runtime)?;
    }
    Ok(m)
}

fn scan_settings(m: &mut Manifest, setup: &ScanSetup, img: &ScanImage) {
    let c = &setup.config;
    m.setting("seed", setup.run.seed);
    m.setting("noise", setup.run.noise);
    m.setting("mode", settings::mode_name(c.mode));
    m.setting("region", c.operating_point.region);
    m.setting("bias_field_T", format!("{:e}", c.operating_point.bias_field));
    m.setting("responsivity_per_T", format!("{:e}", c.operating_point.responsivity));
    m.setting("rows", img.geometry.rows);
    m.setting("cols", img.geometry.cols);
    m.setting("step_m", format!("{:e}", img.geometry.step));
}

pub fn scan(c: &Common) -> CliResult<()> {
    let cfg = settings::load(c)?;
    let setup = settings::scan_setup(&cfg, c)?;
    settings::output_dir(&setup.run.out)?;
    let img = nv_eddy::scan::scan(&setup.map, &setup.config).map_err(runtime)?;

    let out = &setup.run.out;
    let files = [
        ("R.csv", Quantity::R, ImageFormat::Csv),
        ("theta.csv", Quantity::Theta, ImageFormat::Csv),
        ("R.pgm", Quantity::R, ImageFormat::Pgm),
        ("theta.pgm", Quantity::Theta, ImageFormat::Pgm),
    ];
    for (name, q, fmt) in files {
        export_image(&img, q, out.join(name), fmt).map_err(runtime)?;
    }

    let mut m = base_manifest("scan", &setup.inputs)?;
    scan_settings(&mut m, &setup, &img);
    for name in ["R.csv", "theta.csv", "R.pgm", "R.pgm.scale", "theta.pgm", "theta.pgm.scale"] {
        m.output(out, name).map_err(CliError::Runtime)?;
    }
    m.write(&out.join("manifest.txt")).map_err(CliError::Runtime)?;
    println!(
        "scanned {}x{} positions, max R = {:e}; wrote {}",
        img.geometry.rows,
        img.geometry.cols,
        img.max_r(),
        out.display()
    );
    Ok(())
}

/// `auto`, or `x y; x y; … m` with every coordinate in meters.
fn parse_centers(raw: &str) -> CliResult<Option<Vec<[f64; 2]>>> {
    let raw = raw.trim();
    if raw == "auto" {
        return Ok(None);
    }
    let bad = |msg: String| CliError::usage(anyhow!("[resolution] centers: {msg}"));
    let body = raw
        .strip_suffix(Unit::Meter.symbol())
        .ok_or_else(|| bad(format!("expected `auto` or `x y; x y; ... {}`", Unit::Meter)))?;
    body.split(';')
        .map(|pair| {
            let v: Vec<f64> = pair
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(format!("`{t}` is not a number"))))
                .collect::<CliResult<_>>()?;
            match v.as_slice() {
                [x, y] => Ok([*x, *y]),
                _ => Err(bad(format!("`{}` is not an `x y` pair", pair.trim()))),
            }
        })
        .collect::<CliResult<Vec<_>>>()
        .map(Some)
}

fn detect_centers(grid: &Array2<f64>, geometry: &GridGeometry, cfg: &ConfigFile, square_width: f64) -> CliResult<Vec<[f64; 2]>> {
    let usage = CliError::usage;
    let threshold = cfg.number("resolution", "peak_threshold").map_err(usage)?.unwrap_or(0.5);
    let separation = cfg
        .quantity("resolution", "min_separation", Unit::Meter)
        .map_err(usage)?
        .unwrap_or(square_width);
    let px = ((separation / geometry.step).round() as usize).max(1);
    let mut peaks = find_local_maxima(grid, threshold, px);
    // report in raster order so the list is stable and readable
    peaks.sort();
    Ok(peaks.into_iter().map(|(r, c)| geometry.position(r, c)).collect())
}

pub fn resolution(args: &ResolutionArgs) -> CliResult<()> {
    let c = &args.common;
    let cfg = settings::load(c)?;
    let usage = CliError::usage;

    let (grid, geometry, inputs, run) = match &args.image {
        Some(csv) => {
            let run = settings::run_settings(&cfg, c)?;
            let g = read_grid_csv(csv).map_err(usage)?;
            let mut inputs = Vec::new();
            if let Some(p) = cfg.path() {
                inputs.push(("config", p.to_owned()));
            }
            inputs.push(("image", csv.clone()));
            (g.values, g.geometry, inputs, run)
        }
        None => {
            let setup = settings::scan_setup(&cfg, c)?;
            let img = nv_eddy::scan::scan(&setup.map, &setup.config).map_err(runtime)?;
            (img.r, img.geometry, setup.inputs, setup.run)
        }
    };

    let square_width = cfg
        .quantity("resolution", "square_width", Unit::Meter)
        .map_err(usage)?
        .unwrap_or(1e-3);
    let half_window = cfg
        .quantity("resolution", "half_window", Unit::Meter)
        .map_err(usage)?
        .unwrap_or(1.5 * square_width);
    let centers = match parse_centers(cfg.string("resolution", "centers").unwrap_or("auto"))? {
        Some(list) => list,
        None => detect_centers(&grid, &geometry, &cfg, square_width)?,
    };
    if let Some(expected) = cfg.integer("resolution", "expected_peaks").map_err(usage)? {
        if centers.len() as u64 != expected {
            return Err(runtime(anyhow!(
                "found {} dot centers, expected {expected}",
                centers.len()
            )));
        }
    }

    let profile = average_cross_section(&grid, &geometry, &centers, half_window).map_err(runtime)?;
    let fit = fit_square_gauss_kernel(&profile, square_width).map_err(runtime)?;

    settings::output_dir(&run.out)?;
    let mut report = String::new();
    let _ = writeln!(report, "square_width_m = {square_width:e}");
    let _ = writeln!(report, "half_window_m = {half_window:e}");
    let _ = writeln!(report, "centers = {}", centers.len());
    for (i, [x, y]) in centers.iter().enumerate() {
        let _ = writeln!(report, "center.{i} = {x:e} {y:e}");
    }
    let _ = writeln!(report, "fwhm_m = {:e}", fit.fwhm);
    let _ = writeln!(report, "fwhm_uncertainty_m = {:e}", fit.fwhm_uncertainty);
    let _ = writeln!(report, "residual_rms = {:e}", fit.residual_rms);
    let _ = writeln!(report, "amplitude = {:e}", fit.amplitude);
    let _ = writeln!(report, "center_offset_m = {:e}", fit.center);
    let _ = writeln!(report, "baseline = {:e}", fit.baseline);
    let _ = writeln!(report, "iterations = {}", fit.iterations);
    write_text(&run.out.join("resolution.txt"), &report)?;

    let mut csv = String::from("position_m,value,model\n");
    for (x, v) in profile.positions.iter().zip(&profile.values) {
        let model = square_gauss(*x, square_width, fit.fwhm, fit.amplitude, fit.center, fit.baseline);
        let _ = writeln!(csv, "{x:e},{v:e},{model:e}");
    }
    write_text(&run.out.join("profile.csv"), &csv)?;

    let mut m = base_manifest("resolution", &inputs)?;
    m.setting("seed", run.seed);
    m.setting("noise", run.noise);
    for name in ["resolution.txt", "profile.csv"] {
        m.output(&run.out, name).map_err(CliError::Runtime)?;
    }
    m.write(&run.out.join("manifest.txt")).map_err(CliError::Runtime)?;
    print!("{report}");
    Ok(())
}

pub fn bandwidth(c: &Common) -> CliResult<()> {
    let cfg = settings::load(c)?;
    let usage = CliError::usage;
    let mag = settings::magnetometer(&cfg)?;
    let run = settings::run_settings(&cfg, c)?;
    let q = |key, unit| cfg.quantity("bandwidth", key, unit).map_err(usage);
    let f_min = q("f_min", Unit::Hertz)?.unwrap_or(1e4);
    let f_max = q("f_max", Unit::Hertz)?.unwrap_or(1e8);
    let points = cfg.integer("bandwidth", "points").map_err(usage)?.unwrap_or(30) as usize;
    let misalignment = q("misalignment", Unit::Degree)?.unwrap_or(mag.params.misalignment_deg);
    let pumps = cfg
        .quantity_list("bandwidth", "pump_intensities", Unit::WattPerSquareMillimeter)
        .map_err(usage)?
        .unwrap_or_else(|| vec![mag.params.pump_intensity]);
    let noise = cfg.number("bandwidth", "noise").map_err(usage)?.unwrap_or(0.0);
    if !(f_min > 0.0 && f_max > f_min && points >= 3) {
        return Err(CliError::usage(anyhow!("[bandwidth] needs 0 < f_min < f_max and at least 3 points")));
    }
    let freqs = log_spaced(f_min, f_max, points);

    settings::output_dir(&run.out)?;
    let mut report = String::new();
    let mut csv = String::from("pump_W_per_mm2,frequency_Hz,response\n");
    let _ = writeln!(report, "misalignment_deg = {misalignment:e}");
    let _ = writeln!(report, "noise = {noise:e}");
    for (k, &pump) in pumps.iter().enumerate() {
        let cutoff = bandwidth_cutoff(pump, misalignment, &mag.params).map_err(usage)?;
        let pts = synthetic_response(&freqs, cutoff, 1.0, noise, mix_seed(run.seed, k as u64)).map_err(usage)?;
        for (f, y) in &pts {
            let _ = writeln!(csv, "{pump:e},{f:e},{y:e}");
        }
        let _ = writeln!(report, "pump.{k}.intensity_W_per_mm2 = {pump:e}");
        let _ = writeln!(report, "pump.{k}.model_cutoff_Hz = {cutoff:e}");
        match fit_lowpass(&pts) {
            Ok(fit) => {
                let _ = writeln!(report, "pump.{k}.fitted_cutoff_Hz = {:e}", fit.cutoff);
                let _ = writeln!(report, "pump.{k}.fitted_cutoff_uncertainty_Hz = {:e}", fit.cutoff_uncertainty);
                let _ = writeln!(report, "pump.{k}.amplitude = {:e}", fit.amplitude);
            }
            Err(e) => {
                let _ = writeln!(report, "pump.{k}.fitted_cutoff_Hz = unbounded ({e})");
            }
        }
    }
    write_text(&run.out.join("bandwidth.txt"), &report)?;
    write_text(&run.out.join("bandwidth.csv"), &csv)?;

    let mut inputs = Vec::new();
    if let Some(p) = cfg.path() {
        inputs.push(("config", p.to_owned()));
    }
    if let Some(f) = &mag.file {
        inputs.push(("magnetometer", f.clone()));
    }
    let mut m = base_manifest("bandwidth", &inputs)?;
    m.setting("seed", run.seed);
    for name in ["bandwidth.txt", "bandwidth.csv"] {
        m.output(&run.out, name).map_err(CliError::Runtime)?;
    }
    m.write(&run.out.join("manifest.txt")).map_err(CliError::Runtime)?;
    print!("{report}");
    Ok(())
}

pub fn sensitivity(c: &Common) -> CliResult<()> {
    let cfg = settings::load(c)?;
    let usage = CliError::usage;
    let geometry = settings::sample_geometry(&cfg)?;
    let drive = settings::drive(&cfg)?;
    let noise_floor = match cfg
        .quantity("sensitivity", "noise_floor", Unit::TeslaPerRootHertz)
        .map_err(usage)?
    {
        Some(v) => v,
        None => settings::magnetometer(&cfg)?.params.noise_floor,
    };
    let sigma = min_detectable_conductivity(&geometry, &drive, noise_floor).map_err(runtime)?;

    let mut report = String::new();
    let _ = writeln!(report, "radius_m = {:e}", geometry.radius);
    let _ = writeln!(report, "thickness_m = {:e}", geometry.thickness);
    let _ = writeln!(report, "standoff_m = {:e}", geometry.standoff);
    let _ = writeln!(report, "b_primary_T = {:e}", drive.b_primary);
    let _ = writeln!(report, "frequency_Hz = {:e}", drive.frequency);
    let _ = writeln!(report, "noise_floor_T_per_rtHz = {noise_floor:e}");
    let _ = writeln!(report, "sigma_min_S_per_m_rtHz = {sigma:e}");
    let _ = writeln!(report, "copper_detectable = {}", COPPER > sigma);
    let _ = writeln!(report, "aluminium_detectable = {}", ALUMINIUM > sigma);
    if let Some(dir) = &c.out {
        settings::output_dir(dir)?;
        write_text(&dir.join("sensitivity.txt"), &report)?;
    }
    print!("{report}");
    Ok(())
}

pub fn skin_depth(args: &SkinDepthArgs) -> CliResult<()> {
    let cfg = settings::load_optional(&args.common)?;
    let usage = CliError::usage;
    let pick = |flag: &[f64], key: &str, unit: Unit| -> CliResult<Vec<f64>> {
        if !flag.is_empty() {
            return Ok(flag.to_vec());
        }
        Ok(cfg.quantity_list("skin_depth", key, unit).map_err(usage)?.unwrap_or_default())
    };
    let sigmas = pick(&args.sigma, "sigma", Unit::SiemensPerMeter)?;
    let freqs = pick(&args.frequency, "frequency", Unit::Hertz)?;
    if sigmas.is_empty() || freqs.is_empty() {
        return Err(CliError::usage(anyhow!(
            "give at least one --sigma and one --frequency, or [skin_depth] sigma/frequency in --config"
        )));
    }
    let mut table = String::from("sigma_S_per_m,frequency_Hz,skin_depth_m\n");
    for &s in &sigmas {
        for &f in &freqs {
            let d = skin_depth_of(s, f).map_err(usage)?;
            let _ = writeln!(table, "{s:e},{f:e},{d:e}");
        }
    }
    if let Some(dir) = &args.common.out {
        settings::output_dir(dir)?;
        write_text(&dir.join("skin_depth.csv"), &table)?;
    }
    print!("{table}");
    Ok(())
}
