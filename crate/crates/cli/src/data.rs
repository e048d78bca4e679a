//! Measurement CSV files.
//!
//! `measurements.csv` has the header `length_um,resistance_ohm[,sigma_ohm]`
//! and `deembed.csv` a single row under `resistance_ohm[,sigma_ohm]`. Files
//! are UTF-8 with LF line endings; numbers use `.` and no separators.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use tlm_forge_core::extraction::{DeembedMeasurement, MeasurementPoint};
use tlm_forge_core::UM;

use crate::error::{CliError, CliResult};

pub const POINTS_HEADER: [&str; 2] = ["length_um", "resistance_ohm"];
pub const DEEMBED_HEADER: [&str; 1] = ["resistance_ohm"];
pub const SIGMA: &str = "sigma_ohm";

/// Fixed 17-significant-digit rendering used by every numeric output.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parsed rows with the 1-based line each came from.
struct Table {
    with_sigma: bool,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_table(reader: impl Read, origin: &str, header: &[&str]) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let err = |line: u64, msg: String| CliError::Invalid(format!("{origin}:{line}: {msg}"));
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let base_ok = found.len() >= header.len() && found.iter().zip(header).all(|(a, b)| a == b);
    let with_sigma = match found.len() - header.len().min(found.len()) {
        0 if base_ok => false,
        1 if base_ok && found[header.len()] == SIGMA => true,
        _ => {
            return Err(err(
                1,
                format!(
                    "header must be `{}` or `{},{SIGMA}`, got `{}`",
                    header.join(","),
                    header.join(","),
                    found.join(",")
                ),
            ))
        }
    };

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = Vec::with_capacity(record.len());
        for (field, name) in record.iter().zip(found.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line, format!("column `{name}`: cannot parse `{field}` as a number")))?;
            if !v.is_finite() {
                return Err(err(line, format!("column `{name}`: value must be finite")));
            }
            values.push(v);
        }
        rows.push((line, values));
    }
    Ok(Table { with_sigma, rows })
}

fn open(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn read_points(reader: impl Read, origin: &str) -> CliResult<Vec<MeasurementPoint>> {
    let table = read_table(reader, origin, &POINTS_HEADER)?;
    table
        .rows
        .into_iter()
        .map(|(line, v)| {
            let sigma = table.with_sigma.then(|| v[2]);
            if let Some(s) = sigma {
                if s <= 0.0 {
                    return Err(CliError::Invalid(format!("{origin}:{line}: sigma_ohm must be > 0")));
                }
            }
            Ok(MeasurementPoint {
                length: v[0] * UM,
                resistance: v[1],
                sigma,
            })
        })
        .collect()
}

pub fn load_points(path: &Path) -> CliResult<Vec<MeasurementPoint>> {
    read_points(open(path)?, &path.display().to_string())
}

pub fn read_deembed(reader: impl Read, origin: &str) -> CliResult<DeembedMeasurement> {
    let table = read_table(reader, origin, &DEEMBED_HEADER)?;
    match table.rows.as_slice() {
        [(_, v)] => Ok(DeembedMeasurement {
            resistance: v[0],
            sigma: table.with_sigma.then(|| v[1]),
        }),
        rows => Err(CliError::Invalid(format!(
            "{origin}: expected exactly one data row, found {}",
            rows.len()
        ))),
    }
}

pub fn load_deembed(path: &Path) -> CliResult<DeembedMeasurement> {
    read_deembed(open(path)?, &path.display().to_string())
}

/// Lengths in meters are written in µm.
pub fn points_csv(lengths: &[f64], resistances: &[f64], sigma: Option<&[f64]>) -> String {
    let mut out = POINTS_HEADER.join(",");
    if sigma.is_some() {
        out.push(',');
        out.push_str(SIGMA);
    }
    out.push('\n');
    for (i, (l, r)) in lengths.iter().zip(resistances).enumerate() {
        let _ = write!(out, "{},{}", fmt_num(l / UM), fmt_num(*r));
        if let Some(s) = sigma {
            let _ = write!(out, ",{}", fmt_num(s[i]));
        }
        out.push('\n');
    }
    out
}

pub fn deembed_csv(resistance: f64, sigma: Option<f64>) -> String {
    match sigma {
        Some(s) => format!("resistance_ohm,{SIGMA}\n{},{}\n", fmt_num(resistance), fmt_num(s)),
        None => format!("resistance_ohm\n{}\n", fmt_num(resistance)),
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
