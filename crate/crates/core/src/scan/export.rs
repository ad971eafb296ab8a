//! CSV and 16-bit PGM export of scan images.
//!
//! CSV layout: `#`-prefixed `key = value` metadata lines, then one line per
//! grid row with comma-separated values in shortest round-trip notation.
//! PGM layout: binary P5, maxval 65535, min–max normalized; the scale is
//! written next to the image as `<name>.pgm.scale`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{GridGeometry, ScanImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    R,
    Theta,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::R => "R",
            Quantity::Theta => "theta",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::R => "PL fraction",
            Quantity::Theta => "rad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Csv,
    Pgm,
}

/// Writes one quantity of a scan image.
pub fn export_image(img: &ScanImage, quantity: Quantity, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let grid = match quantity {
        Quantity::R => &img.r,
        Quantity::Theta => &img.theta,
    };
    match format {
        ImageFormat::Csv => write_grid_csv(grid, &img.geometry, quantity.name(), quantity.unit(), path),
        ImageFormat::Pgm => write_grid_pgm(grid, quantity.name(), path).map(|_| ()),
    }
}

pub fn write_grid_csv(
    grid: &Array2<f64>,
    geometry: &GridGeometry,
    quantity: &str,
    unit: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let (rows, cols) = grid.dim();
    writeln!(out, "# quantity = {quantity}").map_err(io)?;
    writeln!(out, "# unit = {unit}").map_err(io)?;
    writeln!(out, "# rows = {rows}").map_err(io)?;
    writeln!(out, "# cols = {cols}").map_err(io)?;
    writeln!(out, "# origin_x = {:e} m", geometry.origin[0]).map_err(io)?;
    writeln!(out, "# origin_y = {:e} m", geometry.origin[1]).map_err(io)?;
    writeln!(out, "# step = {:e} m", geometry.step).map_err(io)?;

    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in grid.rows() {
        writer
            .write_record(row.iter().map(|v| format!("{v:e}")))
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(io)
}

/// Grid and metadata read back from [`write_grid_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCsv {
    pub values: Array2<f64>,
    pub geometry: GridGeometry,
    pub quantity: String,
}

pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<GridCsv> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta = |key: &str| -> Result<&str> {
        text.lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim())
            .ok_or_else(|| Error::format(path, format!("missing `{key}` metadata")))
    };
    let length = |key: &str| -> Result<f64> {
        let raw = meta(key)?;
        raw.trim_end_matches('m')
            .trim()
            .parse()
            .map_err(|_| Error::format(path, format!("bad `{key}` metadata `{raw}`")))
    };
    let count = |key: &str| -> Result<usize> {
        meta(key)?
            .parse()
            .map_err(|_| Error::format(path, format!("bad `{key}` metadata")))
    };
    let rows = count("rows")?;
    let cols = count("cols")?;
    let geometry = GridGeometry {
        origin: [length("origin_x")?, length("origin_y")?],
        step: length("step")?,
        rows,
        cols,
    };
    let quantity = meta("quantity")?.to_owned();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::with_capacity(rows * cols);
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        if record.len() != cols {
            return Err(Error::format(path, format!("row has {} values, expected {cols}", record.len())));
        }
        for field in record.iter() {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::format(path, format!("`{field}` is not a number")))?,
            );
        }
    }
    let values = Array2::from_shape_vec((rows, cols), values)
        .map_err(|_| Error::format(path, "row count does not match metadata"))?;
    Ok(GridCsv {
        values,
        geometry,
        quantity,
    })
}

/// Linear map from stored 16-bit levels back to physical values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
}

impl PgmScale {
    pub fn value(&self, level: u16) -> f64 {
        self.min + (self.max - self.min) * f64::from(level) / 65535.0
    }
}

pub fn scale_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale");
    PathBuf::from(s)
}

/// Writes a 16-bit binary PGM plus its `.scale` sidecar. A constant grid is
/// stored as all zeros.
pub fn write_grid_pgm(grid: &Array2<f64>, quantity: &str, path: impl AsRef<Path>) -> Result<PgmScale> {
    let path = path.as_ref();
    let (rows, cols) = grid.dim();
    let min = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let levels: Vec<u16> = grid
        .iter()
        .map(|&v| if span > 0.0 { ((v - min) / span * 65535.0).round() as u16 } else { 0 })
        .collect();
    let bytes: Vec<u8> = levels.iter().flat_map(|v| v.to_be_bytes()).collect();

    // binary P5 with maxval 65535, samples big-endian
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write!(out, "P5\n{cols} {rows}\n65535\n")
        .and_then(|_| out.write_all(&bytes))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))?;

    let scale = PgmScale { min, max };
    let sidecar = scale_path(path);
    fs::write(
        &sidecar,
        format!("quantity = {quantity}\nmin = {min:e}\nmax = {max:e}\nlevels = 65535\n"),
    )
    .map_err(|e| Error::io(&sidecar, e))?;
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::intensity_from_pgm;

    fn geom(rows: usize, cols: usize) -> GridGeometry {
        GridGeometry {
            origin: [-1.25e-3, 3e-4],
            step: 5e-5,
            rows,
            cols,
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("R.csv");
        let grid = Array2::from_shape_fn((4, 5), |(r, c)| (r as f64 + 0.1) / (c as f64 + 3.0) * 1e-7);
        write_grid_csv(&grid, &geom(4, 5), "R", "PL fraction", &path).unwrap();
        let back = read_grid_csv(&path).unwrap();
        assert_eq!(back.values, grid);
        assert_eq!(back.geometry, geom(4, 5));
        assert_eq!(back.quantity, "R");
    }

    #[test]
    fn zero_image_body_is_all_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        write_grid_csv(&Array2::zeros((2, 3)), &geom(2, 3), "R", "PL fraction", &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["0e0,0e0,0e0"; 2]);
    }

    #[test]
    fn pgm_is_normalized_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("R.pgm");
        let grid = Array2::from_shape_fn((3, 4), |(r, c)| (r * 4 + c) as f64);
        let scale = write_grid_pgm(&grid, "R", &path).unwrap();
        assert_eq!(scale, PgmScale { min: 0.0, max: 11.0 });
        let raw = fs::read(&path).unwrap();
        assert!(raw.starts_with(b"P5"));
        let back = intensity_from_pgm(&path).unwrap();
        assert_eq!(back.dim(), (3, 4));
        assert_eq!(back[(0, 0)], 0.0);
        assert_eq!(back[(2, 3)], 1.0);
        let sidecar = fs::read_to_string(scale_path(&path)).unwrap();
        assert!(sidecar.contains("max = 1.1e1"));
        assert!((scale.value(65535) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = write_grid_csv(&Array2::zeros((1, 1)), &geom(1, 1), "R", "", "/no/such/dir/R.csv").unwrap_err();
        assert!(err.to_string().contains("/no/such/dir/R.csv"));
    }
}
