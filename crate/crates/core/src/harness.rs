//! Test integrands, reference values, timing sweeps and report formats.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adapt::{adaptive_integrate, AdaptiveConfig, MeshRow};
use crate::error::{invalid, Error, Result};
use crate::levin2d::{Direction, Integrand2D};
use crate::oracle::{adaptive_gauss_with, OracleConfig};
use crate::rect::Rectangle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryName {
    I1,
    I2,
    I5,
    I6,
    I7,
}

impl EntryName {
    pub const ALL: [EntryName; 5] = [EntryName::I1, EntryName::I2, EntryName::I5, EntryName::I6, EntryName::I7];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntryName::I1 => "I1",
            EntryName::I2 => "I2",
            EntryName::I5 => "I5",
            EntryName::I6 => "I6",
            EntryName::I7 => "I7",
        }
    }
}

impl fmt::Display for EntryName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntryName::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown catalog entry {s:?}")))
    }
}

/// How reference values for an entry are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    ClosedForm,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: EntryName,
    pub domain: Rectangle,
    /// Label of the integer parameter (`n` for I5, `m` for I7).
    pub param_name: Option<&'static str>,
    pub default_param: Option<u32>,
    pub reference: Reference,
}

impl CatalogEntry {
    pub fn get(name: EntryName) -> CatalogEntry {
        let rect = |a, b| Rectangle { a, b, c: a, d: b };
        let (domain, param_name, default_param, reference) = match name {
            EntryName::I1 => (rect(0.0, 1.0), None, None, Reference::Oracle),
            EntryName::I2 => (rect(0.0, 2.0), None, None, Reference::ClosedForm),
            EntryName::I5 => (rect(-1.0, 1.0), Some("n"), Some(2), Reference::Oracle),
            EntryName::I6 => (rect(-1.0, 1.0), None, None, Reference::Oracle),
            EntryName::I7 => (rect(0.0, 1.0), Some("m"), Some(1), Reference::Oracle),
        };
        CatalogEntry {
            name,
            domain,
            param_name,
            default_param,
            reference,
        }
    }

    pub fn all() -> Vec<CatalogEntry> {
        EntryName::ALL.into_iter().map(CatalogEntry::get).collect()
    }

    fn resolve_param(&self, param: Option<u32>) -> Result<Option<u32>> {
        match (self.param_name, param) {
            (None, Some(p)) => invalid(format!("{} takes no parameter, got {p}", self.name)),
            (Some(label), Some(0)) => invalid(format!("{} needs {label} >= 1", self.name)),
            (Some(_), None) => Ok(self.default_param),
            (_, p) => Ok(p),
        }
    }

    pub fn integrand(&self, lambda: f64, param: Option<u32>) -> Result<CatalogIntegrand> {
        if !lambda.is_finite() {
            return invalid(format!("lambda must be finite, got {lambda}"));
        }
        let param = self.resolve_param(param)?;
        Ok(CatalogIntegrand {
            name: self.name,
            lambda,
            param: param.unwrap_or(0),
            domain: self.domain,
        })
    }

    /// Closed form when available, otherwise `None`.
    pub fn closed_form(&self, lambda: f64, param: Option<u32>) -> Result<Option<Complex64>> {
        self.resolve_param(param)?;
        match self.reference {
            Reference::ClosedForm => closed_form_i2(lambda).map(Some),
            Reference::Oracle => Ok(None),
        }
    }

    /// Closed form if available, else the adaptive Gauss value.
    pub fn reference_value(&self, lambda: f64, param: Option<u32>, oracle: &OracleConfig) -> Result<Complex64> {
        if let Some(v) = self.closed_form(lambda, param)? {
            return Ok(v);
        }
        let f = self.integrand(lambda, param)?;
        Ok(adaptive_gauss_with(&f, self.domain, oracle)?.value)
    }
}

/// A catalog member at fixed frequency and parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogIntegrand {
    pub name: EntryName,
    pub lambda: f64,
    pub param: u32,
    pub domain: Rectangle,
}

impl Integrand2D for CatalogIntegrand {
    fn amplitude(&self, x: f64, y: f64) -> Complex64 {
        let re = match self.name {
            EntryName::I1 => (x + y).cos(),
            EntryName::I2 => 1.0 / ((1.0 + x * x) * (1.0 + y * y)),
            EntryName::I5 => 1.0 / (1.0 + x * x + y * y),
            EntryName::I6 => 1.0 + x * y,
            EntryName::I7 => 1.0,
        };
        Complex64::new(re, 0.0)
    }

    fn phase(&self, x: f64, y: f64) -> f64 {
        let l = self.lambda;
        match self.name {
            EntryName::I1 => l * (x + y + x * x + y * y),
            EntryName::I2 => l * (x.atan() + y.atan()),
            EntryName::I5 => {
                let n = self.param as i32;
                l * (x.powi(n) + y.powi(n))
            }
            EntryName::I6 => l * (x * x - x * y - y * y),
            EntryName::I7 => {
                let w = 0.5 * PI * self.param as f64;
                l * ((w * x).sin().powi(2) + (w * y).sin().powi(2))
            }
        }
    }

    fn domain(&self) -> Rectangle {
        self.domain
    }
}

/// Exact value of I2: `-((1 - exp(i lambda atan 2)) / lambda)^2`.
pub fn closed_form_i2(lambda: f64) -> Result<Complex64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return invalid(format!("closed form needs finite nonzero lambda, got {lambda}"));
    }
    let q = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, lambda * 2f64.atan())) / lambda;
    Ok(-(q * q))
}

/// `count` values `10^x` with `x` equispaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceMode {
    /// Closed form where available, else the oracle.
    Auto,
    /// Leave `abs_error` empty.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub entry: String,
    pub lambda: f64,
    pub param: Option<u32>,
    pub re: f64,
    pub im: f64,
    pub abs_error: Option<f64>,
    pub runtime_ns: u64,
    pub rects: usize,
    pub fevals: usize,
    pub subints: usize,
    pub depth_exceeded: bool,
}

impl RunRow {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<RunRow>,
}

/// Times `adaptive_integrate` on one integrand family over a grid of
/// frequencies and parameters. Rows run one at a time so that timings are not
/// shared with sibling rows; references are computed outside the timed region.
pub fn run_sweep_with<I, F, R>(
    name: &str,
    family: F,
    reference: R,
    lambdas: &[f64],
    params: &[Option<u32>],
    cfg: &AdaptiveConfig,
    repeats: usize,
) -> Result<RunReport>
where
    I: Integrand2D,
    F: Fn(f64, Option<u32>) -> Result<(I, Rectangle)>,
    R: Fn(f64, Option<u32>) -> Result<Option<Complex64>>,
{
    if repeats < 1 {
        return invalid("repeats must be at least 1");
    }
    let params: &[Option<u32>] = if params.is_empty() { &[None] } else { params };
    let mut rows = Vec::with_capacity(lambdas.len() * params.len());
    for &param in params {
        for &lambda in lambdas {
            let (integrand, root) = family(lambda, param)?;
            let mut total_ns: u128 = 0;
            let mut last = None;
            for _ in 0..repeats {
                let start = Instant::now();
                let r = adaptive_integrate(&integrand, root, cfg)?;
                total_ns += start.elapsed().as_nanos();
                last = Some(r);
            }
            let r = last.expect("repeats >= 1");
            let abs_error = reference(lambda, param)?.map(|v| (r.value - v).norm());
            rows.push(RunRow {
                entry: name.to_string(),
                lambda,
                param,
                re: r.value.re,
                im: r.value.im,
                abs_error,
                runtime_ns: (total_ns / repeats as u128) as u64,
                rects: r.rect_count(),
                fevals: r.fevals,
                subints: r.subints,
                depth_exceeded: r.partial(),
            });
        }
    }
    Ok(RunReport { rows })
}

/// [`run_sweep_with`] for a catalog entry. `params` empty means the default.
pub fn run_sweep(
    entry: &CatalogEntry,
    lambdas: &[f64],
    params: &[Option<u32>],
    cfg: &AdaptiveConfig,
    repeats: usize,
    reference: ReferenceMode,
) -> Result<RunReport> {
    let oracle = OracleConfig::default();
    let resolved: Vec<Option<u32>> = if params.is_empty() {
        vec![entry.default_param]
    } else {
        params.iter().map(|&p| entry.resolve_param(p)).collect::<Result<_>>()?
    };
    run_sweep_with(
        entry.name.as_str(),
        |lambda, p| Ok((entry.integrand(lambda, p)?, entry.domain)),
        |lambda, p| match reference {
            ReferenceMode::Skip => Ok(None),
            ReferenceMode::Auto => entry.reference_value(lambda, p, &oracle).map(Some),
        },
        lambdas,
        &resolved,
        cfg,
        repeats,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => invalid(format!("unknown report format {s:?}")),
        }
    }
}

pub const REPORT_HEADER: [&str; 11] = [
    "entry",
    "lambda",
    "param",
    "re",
    "im",
    "abs_error",
    "runtime_ns",
    "rects",
    "fevals",
    "subints",
    "depth_exceeded",
];

pub const MESH_HEADER: [&str; 8] = ["x0", "x1", "y0", "y1", "depth", "direction", "grad_ratio", "low_freq"];

/// 17 significant digits, enough to round-trip any `f64`.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: impl fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => serde_json::to_vec_pretty(report).expect("report is always serializable"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_HEADER).expect("in-memory write");
            for r in &report.rows {
                w.write_record([
                    r.entry.clone(),
                    float(r.lambda),
                    r.param.map(|p| p.to_string()).unwrap_or_default(),
                    float(r.re),
                    float(r.im),
                    r.abs_error.map(float).unwrap_or_default(),
                    r.runtime_ns.to_string(),
                    r.rects.to_string(),
                    r.fevals.to_string(),
                    r.subints.to_string(),
                    r.depth_exceeded.to_string(),
                ])
                .expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    let s = rec
        .get(i)
        .ok_or_else(|| csv_error(format!("missing column {}", REPORT_HEADER[i])))?;
    s.parse().map_err(|e| csv_error(format!("column {}: {e}", REPORT_HEADER[i])))
}

fn opt_field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i).map(Some),
    }
}

/// Reads a report back from either format.
pub fn parse_report(bytes: &[u8], format: ReportFormat) -> Result<RunReport> {
    match format {
        ReportFormat::Json => serde_json::from_slice(bytes).map_err(|e| Error::InvalidArgument(format!("json: {e}"))),
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_reader(bytes);
            let header = r.headers().map_err(csv_error)?;
            if header.iter().ne(REPORT_HEADER) {
                return Err(csv_error("unexpected header"));
            }
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(csv_error)?;
                rows.push(RunRow {
                    entry: field(&rec, 0)?,
                    lambda: field(&rec, 1)?,
                    param: opt_field(&rec, 2)?,
                    re: field(&rec, 3)?,
                    im: field(&rec, 4)?,
                    abs_error: opt_field(&rec, 5)?,
                    runtime_ns: field(&rec, 6)?,
                    rects: field(&rec, 7)?,
                    fevals: field(&rec, 8)?,
                    subints: field(&rec, 9)?,
                    depth_exceeded: field(&rec, 10)?,
                });
            }
            Ok(RunReport { rows })
        }
    }
}

pub fn write_mesh_csv<W: Write>(rows: &[MeshRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MESH_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            float(r.x0),
            float(r.x1),
            float(r.y0),
            float(r.y1),
            r.depth.to_string(),
            r.direction.as_str().to_string(),
            float(r.grad_ratio),
            r.low_freq.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

pub fn read_mesh_csv(bytes: &[u8]) -> Result<Vec<MeshRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let get = |i: usize| rec.get(i).ok_or_else(|| csv_error(format!("missing column {}", MESH_HEADER[i])));
        let num = |i: usize| -> Result<f64> { get(i)?.parse().map_err(csv_error) };
        rows.push(MeshRow {
            x0: num(0)?,
            x1: num(1)?,
            y0: num(2)?,
            y1: num(3)?,
            depth: get(4)?.parse().map_err(csv_error)?,
            direction: get(5)?.parse::<Direction>()?,
            grad_ratio: num(6)?,
            low_freq: get(7)?.parse().map_err(csv_error)?,
        });
    }
    Ok(rows)
}
