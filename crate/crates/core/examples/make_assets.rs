//! Regenerates the bundled pattern artwork.
//!
//! ```text
//! cargo run -p nv-eddy --example make_assets -- assets
//! ```

use std::path::PathBuf;

use nv_eddy::scan::{fifteen_dot_pattern, mainz_wheel_pattern, write_intensity_pgm};

const PITCH: f64 = 50e-6;

fn main() -> nv_eddy::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "assets".into()));
    write_intensity_pgm(&fifteen_dot_pattern(PITCH), dir.join("fifteen_dots.pgm"))?;
    write_intensity_pgm(&mainz_wheel_pattern(PITCH), dir.join("mainz_wheel.pgm"))?;
    println!("wrote artwork to {}", dir.display());
    Ok(())
}
