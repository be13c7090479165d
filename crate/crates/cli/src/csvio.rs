//! Headered two- and three-column CSV: `,` separator, `\n` line ends, no quoting.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::CliError;
use crate::fmt_num;

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self, CliError> {
        let file = File::create(path)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{header}")?;
        Ok(Self { out })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        for (k, v) in values.iter().enumerate() {
            if k > 0 {
                self.out.write_all(b",")?;
            }
            self.out.write_all(fmt_num(*v).as_bytes())?;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a two-column file whose first line must equal `header`.
pub fn read_two_columns(path: &Path, header: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_two_columns(&text, header)
        .map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse_two_columns(text: &str, header: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == header => {}
        Some(h) => return Err(format!("expected header `{header}`, found `{h}`")),
        None => return Err("empty file".into()),
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(format!("line {}: expected two columns", k + 2));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("line {}: not a number: {s:?}", k + 2))
        };
        rows.push((parse(a)?, parse(b)?));
    }
    Ok(rows)
}
