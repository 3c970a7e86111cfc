//! Load-profile CSV files with header `time_s,power_kw`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::plant::{Interpolation, LoadProfile};

pub const LOAD_HEADER: [&str; 2] = ["time_s", "power_kw"];

/// Reads a profile and converts kW to per-unit of `s_base` [W]. Rows are
/// numbered as file lines, the header being line 1.
pub fn ingest_load_profile(path: impl AsRef<Path>, s_base: f64) -> Result<LoadProfile<f64>> {
    let path = path.as_ref();
    let err = |row: usize, message: String| Error::Profile {
        path: path.to_path_buf(),
        row,
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != LOAD_HEADER {
        return Err(err(1, format!("expected header `time_s,power_kw`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut times, mut power) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| err(row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(err(row, format!("expected 2 fields, found {}", rec.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| err(row, format!("{what} `{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(row, format!("{what} is not finite")))
            }
        };
        let t = num(&rec[0], "time_s")?;
        let p = num(&rec[1], "power_kw")?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(err(row, format!("time_s {t} does not increase (previous {prev})")));
            }
        }
        if p < 0.0 {
            return Err(err(row, format!("negative power_kw {p}")));
        }
        times.push(t);
        power.push(p * 1e3 / s_base);
    }
    if times.is_empty() {
        return Err(err(2, "no data rows".into()));
    }
    LoadProfile::new(times, power, Interpolation::Linear)
}

pub fn write_load_profile(profile: &LoadProfile<f64>, s_base: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", LOAD_HEADER.join(",")).map_err(io)?;
    for (t, p) in profile.times().iter().zip(profile.power_pu()) {
        writeln!(w, "{t},{}", p * s_base / 1e3).map_err(io)?;
    }
    w.flush().map_err(io)
}
