//! Run manifest: inputs, seed, version and SHA-256 checksums of outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Manifest {
    /// Ordered `key = value` settings.
    pub settings: Vec<(String, String)>,
    /// Input role, path, checksum.
    pub inputs: Vec<(String, PathBuf, String)>,
    /// Output file name (relative to the manifest), checksum.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_owned(), value.to_string()));
    }

    pub fn input(&mut self, role: &str, path: &Path) -> anyhow::Result<()> {
        let sum = sha256_file(path)?;
        self.inputs.push((role.to_owned(), path.to_owned(), sum));
        Ok(())
    }

    pub fn output(&mut self, dir: &Path, name: &str) -> anyhow::Result<()> {
        let sum = sha256_file(&dir.join(name))?;
        self.outputs.push((name.to_owned(), sum));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# nv-eddy run manifest\n");
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (role, path, sum) in &self.inputs {
            let _ = writeln!(s, "input.{role} = sha256:{sum} {}", path.display());
        }
        for (name, sum) in &self.outputs {
            let _ = writeln!(s, "output.{name} = sha256:{sum}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.render()).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Reads back the `output.*` checksums of a manifest.
pub fn read_manifest(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text
        .lines()
        .filter_map(|line| {
            let (key, value) = line.split_once(" = ")?;
            let name = key.strip_prefix("output.")?;
            let sum = value.strip_prefix("sha256:")?;
            Some((name.to_owned(), sum.to_owned()))
        })
        .collect())
}
