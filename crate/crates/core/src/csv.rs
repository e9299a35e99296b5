//! Comma-separated export of trajectories and their metrics.
//!
//! Floats are written with 17 significant digits so every value parses back
//! to the same `f64`. Undefined ratios are empty fields. Lines end in `\n`.

use std::io::Write;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{MomentState, Trajectory, MOMENT_NAMES};
use crate::metrics::BatteryMetrics;

pub const METRIC_COLUMNS: [&str; 7] = [
    "E_b",
    "E_b_passive",
    "ergotropy",
    "E_a",
    "power",
    "eta_util",
    "eta_conv",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("header mismatch: expected {expected:?}")]
    Header { expected: String },
    #[error("line {line}: cannot parse {field:?}")]
    BadFloat { line: u64, field: String },
    #[error("line {line}: required field is empty")]
    Missing { line: u64 },
    #[error("states and metrics differ in length ({states} vs {metrics})")]
    Length { states: usize, metrics: usize },
    #[error(transparent)]
    Format(#[from] csv::Error),
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn parse_optional(field: &str) -> Result<Option<f64>, std::num::ParseFloatError> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    f.parse().map(Some)
}

/// A CSV writer with `\n` line endings and no quoting of plain numbers.
pub fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn moment_columns() -> Vec<String> {
    MOMENT_NAMES
        .iter()
        .flat_map(|n| [format!("{n}_re"), format!("{n}_im")])
        .collect()
}

pub fn trajectory_header() -> Vec<String> {
    let mut h = vec!["t".to_string(), "Jt".to_string()];
    h.extend(moment_columns());
    h.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    h
}

/// One row of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub jt: f64,
    pub state: MomentState,
    pub metrics: BatteryMetrics,
}

fn record_cells(r: &TrajectoryRecord) -> Vec<String> {
    let mut c = vec![format_float(r.t), format_float(r.jt)];
    for z in r.state.as_array() {
        c.push(format_float(z.re));
        c.push(format_float(z.im));
    }
    let m = &r.metrics;
    c.extend([m.e_b, m.e_b_passive, m.ergotropy, m.e_a].map(format_float));
    c.extend([m.power, m.eta_util, m.eta_conv].map(format_optional));
    c
}

pub fn write_records<W: Write>(w: W, records: &[TrajectoryRecord]) -> Result<(), CsvError> {
    let mut out = writer(w);
    out.write_record(trajectory_header())?;
    for r in records {
        out.write_record(record_cells(r))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn records(
    traj: &Trajectory,
    metrics: &[BatteryMetrics],
) -> Result<Vec<TrajectoryRecord>, CsvError> {
    if traj.len() != metrics.len() {
        return Err(CsvError::Length {
            states: traj.len(),
            metrics: metrics.len(),
        });
    }
    Ok(traj
        .t
        .iter()
        .zip(&traj.states)
        .zip(metrics)
        .map(|((&t, s), m)| TrajectoryRecord {
            t,
            jt: t * traj.time_scale,
            state: *s,
            metrics: *m,
        })
        .collect())
}

pub fn write_trajectory<W: Write>(
    w: W,
    traj: &Trajectory,
    metrics: &[BatteryMetrics],
) -> Result<(), CsvError> {
    write_records(w, &records(traj, metrics)?)
}

pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryRecord>, CsvError> {
    let header = trajectory_header();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    if reader
        .headers()?
        .iter()
        .ne(header.iter().map(String::as_str))
    {
        return Err(CsvError::Header {
            expected: header.join(","),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let opt = |k: usize| {
            parse_optional(&row[k]).map_err(|_| CsvError::BadFloat {
                line,
                field: row[k].to_string(),
            })
        };
        let req = |k: usize| opt(k)?.ok_or(CsvError::Missing { line });
        let mut moments = [Complex64::new(0.0, 0.0); 8];
        for (k, z) in moments.iter_mut().enumerate() {
            *z = Complex64::new(req(2 + 2 * k)?, req(3 + 2 * k)?);
        }
        let m0 = 18;
        out.push(TrajectoryRecord {
            t: req(0)?,
            jt: req(1)?,
            state: MomentState::from_array(moments),
            metrics: BatteryMetrics {
                e_b: req(m0)?,
                e_b_passive: req(m0 + 1)?,
                ergotropy: req(m0 + 2)?,
                e_a: req(m0 + 3)?,
                power: opt(m0 + 4)?,
                eta_util: opt(m0 + 5)?,
                eta_conv: opt(m0 + 6)?,
            },
        });
    }
    Ok(out)
}
