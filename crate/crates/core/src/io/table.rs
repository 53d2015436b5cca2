//! Trajectory tables as comma-separated text.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::Trajectory;

pub const HEADER: [&str; 5] = ["t", "mu_norm", "scalar_R", "tr_ric_sq", "jacobi_residual"];

/// One table row; mirrors the scalar fields of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub mu_norm: f64,
    pub scalar: f64,
    pub ric_sq_trace: f64,
    pub jacobi_residual: f64,
}

impl Row {
    fn fields(&self) -> [f64; 5] {
        [self.t, self.mu_norm, self.scalar, self.ric_sq_trace, self.jacobi_residual]
    }
}

pub fn rows(traj: &Trajectory) -> Vec<Row> {
    traj.samples
        .iter()
        .map(|s| Row {
            t: s.t,
            mu_norm: s.mu_norm,
            scalar: s.scalar,
            ric_sq_trace: s.ric_sq_trace,
            jacobi_residual: s.jacobi_residual,
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("trajectory table: {e}"))
}

/// 17 significant digits, enough to reproduce every f64 exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.fields().map(format_value)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(std::io::BufWriter::new(file), &rows(traj))
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(HEADER) {
        return Err(Error::Parse(format!(
            "trajectory table: expected header {}, got {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let mut v = [0.0; 5];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field.trim().parse().map_err(|_| {
                Error::Parse(format!("trajectory table: line {}: bad number `{field}`", line + 2))
            })?;
        }
        rows.push(Row {
            t: v[0],
            mu_norm: v[1],
            scalar: v[2],
            ric_sq_trace: v[3],
            jacobi_residual: v[4],
        });
    }
    Ok(rows)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<Row>> {
    read_rows(std::fs::File::open(path)?)
}
