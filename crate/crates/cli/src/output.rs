//! Plain CSV tables. Floats are written in shortest round-trip form so that
//! re-reading a file reproduces the exact values.

use std::path::Path;

use tps_core::diagnostics::{acf, ess, summarize, ScalarChain, SUMMARY_LEVELS};

use crate::error::{CliError, Result};

pub const ACF_LAGS: usize = 20;

/// Column names for the summary quantiles, matching `SUMMARY_LEVELS`.
pub const QUANTILE_LABELS: [&str; SUMMARY_LEVELS.len()] = ["q2.5", "q25", "q50", "q75", "q97.5"];

pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

/// Column-major data written one row per sample.
pub fn write_columns(path: &Path, names: &[String], cols: &[&[f64]]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(names)?;
    let rows = cols.first().map_or(0, |c| c.len());
    let mut rec = Vec::with_capacity(cols.len());
    for r in 0..rows {
        rec.clear();
        rec.extend(cols.iter().map(|c| fmt(c[r])));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Inverse of [`write_columns`].
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(f);
    let names: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        for (k, field) in rec.iter().enumerate() {
            let v = field.parse().map_err(|_| CliError::Parse {
                line,
                column: names[k].clone(),
                text: field.to_string(),
            })?;
            cols[k].push(v);
        }
    }
    Ok((names, cols))
}

pub fn summary_header() -> Vec<String> {
    let mut h = vec!["parameter".to_string(), "mean".into(), "sd".into()];
    h.extend(QUANTILE_LABELS.iter().map(|s| s.to_string()));
    h
}

pub fn summary_rows(names: &[String], cols: &[&[f64]]) -> Vec<Vec<String>> {
    names
        .iter()
        .zip(cols)
        .map(|(name, col)| {
            let mut row = vec![name.clone()];
            match summarize(&ScalarChain::new(name.as_str(), col.to_vec())) {
                Ok(s) => {
                    row.push(fmt(s.mean));
                    row.push(fmt(s.sd));
                    row.extend(s.quantiles.iter().map(|&q| fmt(q)));
                }
                Err(_) => row.extend(std::iter::repeat_n("NA".to_string(), 7)),
            }
            row
        })
        .collect()
}

pub fn diagnostics_header() -> Vec<String> {
    let mut h = vec!["parameter".to_string(), "ess".into()];
    h.extend((1..=ACF_LAGS).map(|k| format!("acf_{k}")));
    h
}

/// Batch-means ESS and lag 1..20 autocorrelations; `NA` where a statistic
/// is undefined (constant or too-short chains).
pub fn diagnostics_rows(names: &[String], cols: &[&[f64]]) -> Vec<Vec<String>> {
    names
        .iter()
        .zip(cols)
        .map(|(name, col)| {
            let chain = ScalarChain::new(name.as_str(), col.to_vec());
            let mut row = vec![name.clone()];
            row.push(ess(&chain).map_or_else(|_| "NA".into(), fmt));
            let lags = ACF_LAGS.min(col.len().saturating_sub(1));
            let rho = acf(&chain, lags).unwrap_or_default();
            row.extend((1..=ACF_LAGS).map(|k| rho.get(k).map_or_else(|| "NA".into(), |&r| fmt(r))));
            row
        })
        .collect()
}

/// Recompute `summary.csv` content from a draws file.
pub fn summary_from_draws(draws: &Path) -> Result<Vec<Vec<String>>> {
    let (names, cols) = read_columns(draws)?;
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    Ok(summary_rows(&names, &refs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5, 0.0] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt(0.1), "0.1");
    }

    #[test]
    fn columns_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let names = vec!["a".to_string(), "b".into()];
        let a: Vec<f64> = (0..10).map(|i| (i as f64).sqrt()).collect();
        let b: Vec<f64> = (0..10).map(|i| (i as f64 * 0.3).exp()).collect();
        write_columns(&p, &names, &[&a, &b]).unwrap();
        let (n2, cols) = read_columns(&p).unwrap();
        assert_eq!(n2, names);
        assert_eq!(cols, vec![a, b]);
    }

    #[test]
    fn short_chain_diagnostics_are_na() {
        let names = vec!["x".to_string()];
        let rows = diagnostics_rows(&names, &[&[1.0, 2.0, 4.0]]);
        assert_eq!(rows[0][1], "NA");
        assert_ne!(rows[0][2], "NA");
        assert_eq!(rows[0][4], "NA");
        assert_eq!(rows[0].len(), diagnostics_header().len());
    }
}
