//! CSV readers for point data (`x`, `y`, value) and two-week binomial
//! panels (`x`, `y`, `y1`, `n1`, `y2`, `n2`).

use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use tps_core::glmm::BinomialPanel;
use tps_core::posterior::substream_rng;
use tps_core::{build_design, SpatialDesign};

use crate::config::Transform;
use crate::error::{CliError, Result};

/// Generator stream reserved for coordinate jitter, clear of the sampler
/// substreams.
const JITTER_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct PointData {
    pub design: SpatialDesign,
    pub values: DVector<f64>,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct PanelData {
    pub panel: BinomialPanel,
    pub dropped: usize,
}

/// Optional uniform jitter of half-width `eps` on every coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Jitter {
    pub eps: f64,
    pub seed: u64,
}

struct Table {
    columns: Vec<usize>,
    rows: Vec<(u64, Vec<String>)>,
    dropped: usize,
}

fn is_missing(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

/// Read `wanted` columns, skipping rows where any of them is missing.
fn read_table(path: &Path, wanted: &[&str]) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers()?.clone();
    let columns = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == *w)
                .ok_or_else(|| CliError::MissingColumn(w.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<String> = columns
            .iter()
            .map(|&c| rec.get(c).unwrap_or("").to_string())
            .collect();
        if fields.iter().any(|f| is_missing(f)) {
            dropped += 1;
            continue;
        }
        rows.push((line, fields));
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    Ok(Table {
        columns,
        rows,
        dropped,
    })
}

fn parse<T: FromStr>(text: &str, line: u64, column: &str) -> Result<T> {
    text.parse().map_err(|_| CliError::Parse {
        line,
        column: column.to_string(),
        text: text.to_string(),
    })
}

fn finite(v: f64, text: &str, line: u64, column: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Parse {
            line,
            column: column.to_string(),
            text: text.to_string(),
        })
    }
}

fn apply_jitter(sites: &mut [[f64; 2]], jitter: Option<Jitter>) {
    if let Some(j) = jitter {
        let mut rng = substream_rng(j.seed, JITTER_STREAM);
        for p in sites.iter_mut() {
            p[0] += j.eps * (2.0 * rng.random::<f64>() - 1.0);
            p[1] += j.eps * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
}

fn read_sites(row: &[String], line: u64) -> Result<[f64; 2]> {
    let x = finite(parse(&row[0], line, "x")?, &row[0], line, "x")?;
    let y = finite(parse(&row[1], line, "y")?, &row[1], line, "y")?;
    Ok([x, y])
}

pub fn ingest_points(
    path: &Path,
    value_col: &str,
    transform: Transform,
    jitter: Option<Jitter>,
) -> Result<PointData> {
    let table = read_table(path, &["x", "y", value_col])?;
    debug_assert_eq!(table.columns.len(), 3);
    let mut sites = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        sites.push(read_sites(row, *line)?);
        let v = finite(parse(&row[2], *line, value_col)?, &row[2], *line, value_col)?;
        values.push(match transform {
            Transform::None => v,
            Transform::Log if v > 0.0 => v.ln(),
            Transform::Log => return Err(CliError::NonPositiveForLog { line: *line, value: v }),
        });
    }
    apply_jitter(&mut sites, jitter);
    Ok(PointData {
        design: build_design(&sites)?,
        values: DVector::from_vec(values),
        dropped: table.dropped,
    })
}

pub fn ingest_panel(path: &Path, jitter: Option<Jitter>) -> Result<PanelData> {
    const COLS: [&str; 6] = ["x", "y", "y1", "n1", "y2", "n2"];
    let table = read_table(path, &COLS)?;
    let mut centroids = Vec::with_capacity(table.rows.len());
    let mut y = Vec::with_capacity(table.rows.len());
    let mut trials = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        centroids.push(read_sites(row, *line)?);
        let c: Vec<u64> = (2..6)
            .map(|k| parse(&row[k], *line, COLS[k]))
            .collect::<Result<_>>()?;
        y.push([c[0], c[2]]);
        trials.push([c[1], c[3]]);
    }
    apply_jitter(&mut centroids, jitter);
    let panel = BinomialPanel::new(y, trials, centroids)?;
    build_design(&panel.centroids)?;
    Ok(PanelData {
        panel,
        dropped: table.dropped,
    })
}
