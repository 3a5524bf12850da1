//! Output plumbing: grids, formats and deterministic file writing.

use powertrend::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Parses a numeric grid: `start:end:step`, a comma list, or a single value.
/// Grid values are snapped to 10 decimals so `0.1:8.0:0.1` prints as 0.3,
/// not 0.30000000000000004.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let snap = |v: f64| (v * 1e10).round() / 1e10;
    let parse = |p: &str| -> Result<f64> {
        f64::from_str(p.trim())
            .map_err(|_| Error::InvalidParams(format!("bad grid value '{p}' in '{s}'")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, end, step] = parts[..] else {
            return Err(Error::InvalidParams(format!(
                "grid '{s}' needs the form start:end:step"
            )));
        };
        let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
        if !(step > 0.0) || end < start {
            return Err(Error::InvalidParams(format!(
                "grid '{s}' needs end >= start and a positive step"
            )));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| snap(start + i as f64 * step)).collect());
    }
    s.split(',').map(parse).map(|v| v.map(snap)).collect()
}

/// Parses an integer grid: `start:end:step`, a comma list, or a single value.
pub fn parse_int_grid(s: &str) -> Result<Vec<usize>> {
    let values = parse_grid(s)?;
    values
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParams(format!(
                    "grid '{s}' must contain positive integers, got {v}"
                )))
            }
        })
        .collect()
}

/// File writer that owns the timestamp-header policy: CSV files get a
/// `# generated <RFC3339>` first line unless disabled; JSON files are always
/// emitted without one.
pub struct Writer {
    out_dir: PathBuf,
    pub format: Format,
    timestamp: bool,
}

impl Writer {
    pub fn new(out_dir: &Path, format: Format, no_timestamp: bool) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Writer {
            out_dir: out_dir.to_path_buf(),
            format,
            timestamp: !no_timestamp,
        })
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    /// Writes a CSV body (already including its header row).
    pub fn write_csv(&self, stem: &str, body: &str) -> Result<PathBuf> {
        let mut out = String::new();
        if self.timestamp {
            let _ = writeln!(out, "# generated {}", chrono::Utc::now().to_rfc3339());
        }
        out.push_str(body);
        self.write(&format!("{stem}.csv"), &out)
    }

    /// Writes a value as pretty JSON.
    pub fn write_json<T: Serialize>(&self, stem: &str, value: &T) -> Result<PathBuf> {
        let body = serde_json::to_string_pretty(value)
            .map_err(|e| Error::InvalidInput(format!("json encoding failed: {e}")))?;
        self.write(&format!("{stem}.json"), &format!("{body}\n"))
    }

    /// Writes rows in the configured format: a prebuilt CSV body or the
    /// serializable rows as JSON.
    pub fn write_table<T: Serialize>(&self, stem: &str, csv_body: &str, rows: &T) -> Result<PathBuf> {
        match self.format {
            Format::Csv => self.write_csv(stem, csv_body),
            Format::Json => self.write_json(stem, rows),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("3").unwrap(), vec![3.0]);
        assert_eq!(parse_grid("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        let sweep = parse_grid("0.1:8.0:0.1").unwrap();
        assert_eq!(sweep.len(), 80);
        assert_eq!(sweep[0], 0.1);
        assert_eq!(sweep[2], 0.3);
        assert_eq!(*sweep.last().unwrap(), 8.0);
        assert!(parse_grid("8:1:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn int_grids_reject_fractions() {
        assert_eq!(parse_int_grid("10:40:10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_int_grid("30,50,100").unwrap(), vec![30, 50, 100]);
        assert!(parse_int_grid("1.5").is_err());
        assert!(parse_int_grid("0").is_err());
    }
}
