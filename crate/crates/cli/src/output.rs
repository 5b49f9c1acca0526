//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// One CSV file. `name` carries the schema version, e.g. `bound_surface_v1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Holds wall-clock measurements, so its bytes change between runs.
    pub timing: bool,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), rows: Vec::new(), timing: false }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Index of a column by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Values of a column in row order.
    pub fn values(&self, name: &str) -> Vec<&str> {
        let c = self.column(name).unwrap_or_else(|| panic!("no column `{name}` in {}", self.name));
        self.rows.iter().map(|r| r[c].as_str()).collect()
    }
}

/// Shortest round-trip decimal, scientific for very small or large values,
/// `inf` for infinities.
pub fn num(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn parse_num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().unwrap_or(f64::NAN),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Output of one command.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub tables: Vec<Table>,
    pub inputs: Vec<PathBuf>,
}

impl Report {
    pub fn table(&self, name: &str) -> &Table {
        self.tables
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("report has no table `{name}`"))
    }

    pub fn manifest(&self, cfg: &RunConfig) -> Result<String> {
        let mut out = format!(
            "permcs {}\ncommand = {}\n\n[inputs]\n",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        for p in &self.inputs {
            out.push_str(&format!("{} sha256={}\n", p.display(), file_sha256(p)?));
        }
        out.push_str("\n[config]\n");
        for line in cfg.echo() {
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("\n[outputs]\n");
        for t in &self.tables {
            if t.timing {
                out.push_str(&format!("{} wall-clock\n", t.file_name()));
            } else {
                out.push_str(&format!("{} sha256={}\n", t.file_name(), sha256_hex(t.to_csv().as_bytes())));
            }
        }
        Ok(out)
    }

    /// Writes every table and `<command>_manifest.txt` into `dir`.
    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(t.file_name());
            fs::write(&path, t.to_csv()).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        let path = dir.join(format!("{}_manifest.txt", self.command.replace('-', "_")));
        fs::write(&path, self.manifest(cfg)?).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_format_compactly() {
        assert_eq!(num(0.15), "0.15");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(2.5e-7), "2.5e-7");
        for v in [0.1, 1e-300, 3.25, -7e20, f64::INFINITY] {
            assert_eq!(parse_num(&num(v)), v);
        }
    }

    #[test]
    fn csv_has_header_even_when_empty() {
        let t = Table::new("demo_v1", &["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
