//! CSV and JSON export of shapes, solver output and scans.
//!
//! Every file records the configuration that produced it: CSV tables start
//! with `#`-prefixed comment lines holding the configuration as one JSON
//! object, and JSON records carry it under a `config` key.
//!
//! Shape files are JSON objects tagged by `kind`:
//!
//! ```json
//! {"kind": "fourier", "max_mode": 4, "a0": 0.0, "a": [0, 0.2, 0, 0], "b": [0, 0, 0, 0]}
//! {"kind": "support", "max_mode": 4, "c0": 1.0, "c": [0, 0.05, 0, 0], "d": [0, 0, 0, 0]}
//! ```
//!
//! Unknown keys (such as `config`) are ignored when reading.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryDiscretization, Shape};
use crate::potential::EquilibriumSolution;
use crate::solve::{BranchPoint, IterationRecord};
use crate::spectrum::{EllipseRow, SpectrumRow};

/// Column-oriented table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest representation that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    /// Writes `# config: {...}` followed by the CSV body.
    pub fn write_csv<W: Write>(&self, mut out: W, config: &Value) -> Result<()> {
        writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Array of objects keyed by column name; numeric cells become numbers.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| {
                        let cell = match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => json!(x),
                            _ if v.is_empty() => Value::Null,
                            _ => json!(v),
                        };
                        (c.clone(), cell)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Strips the comment header and parses a CSV table written by [`Table::write_csv`].
pub fn read_csv(text: &str) -> Result<Table> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(csv_error))
        .collect::<Result<_>>()?;
    Ok(Table { columns, rows })
}

/// `{"config": config, key: value}` as pretty-printed JSON.
pub fn json_record<T: Serialize>(config: &Value, key: &str, value: &T) -> Result<String> {
    let mut obj = serde_json::Map::new();
    obj.insert("config".into(), config.clone());
    obj.insert(key.into(), serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&Value::Object(obj))?)
}

/// Parses and validates a shape; syntax errors report line and column.
pub fn shape_from_json(text: &str) -> Result<Shape> {
    // serde_json's message ends with "at line L column C".
    let shape: Shape = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("malformed shape JSON: {e}")))?;
    shape.validate()?;
    Ok(shape)
}

/// Shape JSON with the configuration embedded under `config`.
pub fn shape_to_json(shape: &Shape, config: &Value) -> Result<String> {
    let mut v = serde_json::to_value(shape)?;
    if let Value::Object(obj) = &mut v {
        obj.insert("config".into(), config.clone());
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn load_shape(path: &Path) -> Result<Shape> {
    let text = fs::read_to_string(path)?;
    shape_from_json(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_shape(path: &Path, shape: &Shape, config: &Value) -> Result<()> {
    fs::write(path, shape_to_json(shape, config)?)?;
    Ok(())
}

/// theta, x, y, nx, ny, curvature, speed
pub fn discretization_table(disc: &BoundaryDiscretization) -> Table {
    let mut t = Table::new(&["theta", "x", "y", "nx", "ny", "curvature", "speed"]);
    for j in 0..disc.n_nodes() {
        t.push_f64(&[
            disc.theta[j],
            disc.x[j],
            disc.y[j],
            disc.normal[j][0],
            disc.normal[j][1],
            disc.curvature[j],
            disc.speed[j],
        ]);
    }
    t
}

/// theta, density, neumann_trace
pub fn equilibrium_table(disc: &BoundaryDiscretization, sol: &EquilibriumSolution) -> Table {
    let mut t = Table::new(&["theta", "density", "neumann_trace"]);
    for j in 0..disc.n_nodes() {
        t.push_f64(&[disc.theta[j], sol.density[j], sol.neumann_trace[j]]);
    }
    t
}

const RESIDUAL_COLUMNS: [&str; 7] = [
    "flux",
    "pohozaev",
    "minkowski_1",
    "minkowski_2",
    "jump_gb",
    "flux_l2",
    "cauchy_schwarz_slack",
];

fn residual_cells(r: &EnergyReport) -> Vec<String> {
    let i = &r.identity_residuals;
    vec![
        fmt_f64(i.flux),
        fmt_f64(i.pohozaev),
        fmt_f64(i.minkowski_1),
        fmt_f64(i.minkowski_2),
        fmt_f64(i.jump_gb),
        fmt_opt(i.flux_l2),
        fmt_f64(i.cauchy_schwarz_slack),
    ]
}

/// One row per report: we, perimeter, area, log_energy, functional,
/// lambda_best, jump_residual_norm and the identity residuals.
pub fn energy_table(reports: &[EnergyReport]) -> Table {
    let mut cols = vec![
        "we",
        "perimeter",
        "area",
        "log_energy",
        "functional",
        "lambda_best",
        "jump_residual_norm",
    ];
    cols.extend(RESIDUAL_COLUMNS);
    let mut t = Table::new(&cols);
    for r in reports {
        let mut row: Vec<String> = [
            r.we,
            r.perimeter,
            r.area,
            r.log_energy,
            r.functional,
            r.lambda_best,
            r.jump_residual_norm,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        row.extend(residual_cells(r));
        t.push(row);
    }
    t
}

/// k, we, eigenvalue_formula, eigenvalue_fd, abs_err, tag
pub fn spectrum_table(rows: &[SpectrumRow]) -> Table {
    let mut t = Table::new(&["k", "we", "eigenvalue_formula", "eigenvalue_fd", "abs_err", "tag"]);
    for r in rows {
        t.push(vec![
            r.k.to_string(),
            fmt_f64(r.we),
            fmt_f64(r.eigenvalue_formula),
            fmt_opt(r.eigenvalue_fd),
            fmt_f64(r.abs_err),
            r.tag.to_string(),
        ]);
    }
    t
}

/// t, perimeter, log_energy, functional, expansion, scaled_remainder
pub fn ellipse_table(rows: &[EllipseRow]) -> Table {
    let mut t = Table::new(&["t", "perimeter", "log_energy", "functional", "expansion", "scaled_remainder"]);
    for r in rows {
        t.push_f64(&[r.t, r.perimeter, r.log_energy, r.functional, r.expansion, r.scaled_remainder]);
    }
    t
}

/// arclength_param, we, lambda, perimeter, log_energy, functional,
/// max_mode_amplitude, jump_residual_norm and the identity residuals.
pub fn branch_table(points: &[BranchPoint]) -> Table {
    let mut cols = vec![
        "arclength_param",
        "we",
        "lambda",
        "perimeter",
        "log_energy",
        "functional",
        "max_mode_amplitude",
        "jump_residual_norm",
    ];
    cols.extend(RESIDUAL_COLUMNS);
    let mut t = Table::new(&cols);
    for p in points {
        let mut row: Vec<String> = [
            p.arclength_param,
            p.we,
            p.lambda,
            p.report.perimeter,
            p.report.log_energy,
            p.report.functional,
            p.max_mode_amplitude(),
            p.jump_residual_norm,
        ]
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
        row.extend(residual_cells(&p.report));
        t.push(row);
    }
    t
}

/// iteration, functional, perimeter, log_energy, gradient_norm, step
pub fn history_table(history: &[IterationRecord]) -> Table {
    let mut t = Table::new(&["iteration", "functional", "perimeter", "log_energy", "gradient_norm", "step"]);
    for h in history {
        t.push(vec![
            h.iteration.to_string(),
            fmt_f64(h.functional),
            fmt_f64(h.perimeter),
            fmt_f64(h.log_energy),
            fmt_f64(h.gradient_norm),
            fmt_f64(h.step),
        ]);
    }
    t
}
