//! Pattern ingestion: PGM or CSV artwork to conductivity maps, plus the
//! built-in test patterns.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use ndarray::Array2;

use super::ConductivityMap;
use crate::error::{Error, Result};

/// How artwork intensity becomes conductivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    /// Conductivity of fully bright pixels, S/m.
    pub sigma: f64,
    pub pitch: f64,
    pub thickness: f64,
    pub standoff: f64,
    /// Binary mode: intensity strictly above this gets `sigma`.
    pub threshold: f64,
    /// Map intensity linearly to `[0, sigma]` instead of thresholding.
    pub grayscale: bool,
}

impl PatternSpec {
    pub fn binary(sigma: f64, pitch: f64, thickness: f64, standoff: f64) -> Self {
        Self {
            sigma,
            pitch,
            thickness,
            standoff,
            threshold: 0.5,
            grayscale: false,
        }
    }
}

/// Reads a PGM (P2 or P5, 8 or 16 bit) as intensities in [0, 1].
pub fn intensity_from_pgm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader
        .decode()
        .map_err(|e| Error::format(path, format!("cannot decode image: {e}")))?
        .into_luma16();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect();
    Array2::from_shape_vec((h as usize, w as usize), data)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Reads comma-separated intensities in [0, 1]. Lines starting with `#`
/// are ignored. All rows must have the same length.
pub fn intensity_from_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(Error::format(
                path,
                format!("row {} has {} values, expected {}", i + 1, record.len(), cols.unwrap()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::format(path, format!("row {}: `{field}` is not a number", i + 1)))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::format(path, format!("row {}: intensity {v} outside [0, 1]", i + 1)));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.filter(|&c| c > 0 && rows > 0).ok_or_else(|| Error::format(path, "no data"))?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::format(path, e.to_string()))
}

pub fn map_from_intensity(intensity: &Array2<f64>, spec: &PatternSpec) -> Result<ConductivityMap> {
    if !(0.0..=1.0).contains(&spec.threshold) {
        return Err(Error::Domain {
            what: "threshold",
            value: spec.threshold,
        });
    }
    let sigma = if spec.grayscale {
        intensity.mapv(|v| v.clamp(0.0, 1.0) * spec.sigma)
    } else {
        intensity.mapv(|v| if v > spec.threshold { spec.sigma } else { 0.0 })
    };
    ConductivityMap::new(sigma, spec.pitch, spec.thickness, spec.standoff)
}

/// Loads artwork by extension (`.pgm`/`.pnm` or `.csv`) into a map centered
/// on the origin.
pub fn ingest_pattern(path: impl AsRef<Path>, spec: &PatternSpec) -> Result<ConductivityMap> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let intensity = match ext.as_deref() {
        Some("csv") => intensity_from_csv(path)?,
        Some("pgm" | "pnm") => intensity_from_pgm(path)?,
        _ => return Err(Error::format(path, "unsupported pattern format; expected .pgm or .csv")),
    };
    map_from_intensity(&intensity, spec)
}

/// Writes intensities in [0, 1] as 8-bit binary PGM artwork.
pub fn write_intensity_pgm(intensity: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = intensity.dim();
    let bytes: Vec<u8> = intensity
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&bytes, cols as u32, rows as u32, ExtendedColorType::L8)
        .map_err(|e| Error::format(path, format!("cannot encode PGM: {e}")))
}

const DOT_DIAMETER: f64 = 1e-3;
const DOT_PITCH: f64 = 2e-3;
const DOT_ROWS: usize = 3;
const DOT_COLS: usize = 5;
const DOT_MARGIN: f64 = 1e-3;

/// Dot centers of [`fifteen_dot_pattern`] in map coordinates, row by row.
pub fn fifteen_dot_centers() -> Vec<[f64; 2]> {
    let x0 = -0.5 * (DOT_COLS - 1) as f64 * DOT_PITCH;
    let y0 = -0.5 * (DOT_ROWS - 1) as f64 * DOT_PITCH;
    (0..DOT_ROWS)
        .flat_map(|r| (0..DOT_COLS).map(move |c| [x0 + c as f64 * DOT_PITCH, y0 + r as f64 * DOT_PITCH]))
        .collect()
}

fn canvas(width: f64, height: f64, pitch: f64, inside: impl Fn(f64, f64) -> bool) -> Array2<f64> {
    let cols = (width / pitch).round() as usize + 1;
    let rows = (height / pitch).round() as usize + 1;
    let x0 = -0.5 * (cols - 1) as f64 * pitch;
    let y0 = -0.5 * (rows - 1) as f64 * pitch;
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        if inside(x0 + c as f64 * pitch, y0 + r as f64 * pitch) {
            1.0
        } else {
            0.0
        }
    })
}

/// Fifteen 1 mm dots on a 3×5 grid with 2 mm center spacing.
pub fn fifteen_dot_pattern(pitch: f64) -> Array2<f64> {
    let centers = fifteen_dot_centers();
    let r = DOT_DIAMETER / 2.0;
    let width = (DOT_COLS - 1) as f64 * DOT_PITCH + DOT_DIAMETER + 2.0 * DOT_MARGIN;
    let height = (DOT_ROWS - 1) as f64 * DOT_PITCH + DOT_DIAMETER + 2.0 * DOT_MARGIN;
    canvas(width, height, pitch, |x, y| {
        centers.iter().any(|c| (x - c[0]).hypot(y - c[1]) <= r)
    })
}

/// Six-spoke wheel emblem, 7 mm across.
pub fn mainz_wheel_pattern(pitch: f64) -> Array2<f64> {
    const RING_OUTER: f64 = 3.5e-3;
    const RING_INNER: f64 = 2.6e-3;
    const HUB: f64 = 0.9e-3;
    const SPOKE_HALF_WIDTH: f64 = 0.4e-3;
    canvas(9e-3, 9e-3, pitch, |x, y| {
        let rho = x.hypot(y);
        if rho <= HUB || (RING_INNER..=RING_OUTER).contains(&rho) {
            return true;
        }
        if rho > RING_INNER {
            return false;
        }
        (0..6).any(|k| {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            let (s, c) = a.sin_cos();
            let along = x * c + y * s;
            let across = -x * s + y * c;
            along >= 0.0 && across.abs() <= SPOKE_HALF_WIDTH
        })
    })
}
