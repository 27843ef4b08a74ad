use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use shiftlab::hyperspace::DecayRow;
use shiftlab::rational;
use tempfile::NamedTempFile;

use crate::exit::Failure;

/// Output directory; every file lands via write-then-rename.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(Failure::io)?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
        let target = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(Failure::io)?;
        tmp.write_all(bytes).map_err(Failure::io)?;
        tmp.persist(&target).map_err(|e| Failure::io(e.error))?;
        Ok(target)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn decay_csv(&self, name: &str, rows: &[DecayRow]) -> Result<PathBuf, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Failure::usage(e.to_string());
        w.write_record(["n", "d_H_forward", "d_H_backward", "bound", "d_H_forward_decimal", "d_H_backward_decimal"])
            .map_err(csv_err)?;
        for row in rows {
            w.write_record([
                row.n.to_string(),
                rational::format(&row.forward),
                rational::format(&row.backward),
                rational::format(&row.bound),
                format!("{:.6e}", rational::to_f64(&row.forward)),
                format!("{:.6e}", rational::to_f64(&row.backward)),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
        self.write(name, &bytes)
    }
}
