//! CSV and JSON ingestion.

use std::path::Path;

use mindiv::prob::{DiscreteDistribution, Sample};
use serde::de::DeserializeOwned;

use crate::CliError;

type Table = (Option<Vec<String>>, Vec<Vec<String>>);

/// Reads a table. A first row whose last field is not a number is a header.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let header = match rows.first() {
        Some(first) if first.last().is_some_and(|f| f.parse::<f64>().is_err()) => Some(rows.remove(0)),
        _ => None,
    };
    Ok((header, rows))
}

fn parse_cell(path: &Path, line: usize, s: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .map_err(|_| CliError::Data(format!("{}: row {line}: '{s}' is not a number", path.display())))
}

/// An `n x d` sample, one observation per row.
pub fn read_sample(path: &Path) -> Result<Sample, CliError> {
    let (_, rows) = read_table(path)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: no observations", path.display())));
    }
    let d = rows[0].len();
    let mut data = Vec::with_capacity(rows.len() * d);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(CliError::Data(format!("{}: row {} has {} columns, expected {d}", path.display(), i + 1, r.len())));
        }
        for s in r {
            data.push(parse_cell(path, i + 1, s)?);
        }
    }
    Ok(Sample::new(d, data)?)
}

/// Samples tagged by a leading `replicate` column, in order of first appearance.
pub fn read_replicates(path: &Path) -> Result<Vec<(String, Sample)>, CliError> {
    let (header, rows) = read_table(path)?;
    if header.as_ref().and_then(|h| h.first()).map(String::as_str) != Some("replicate") {
        return Err(CliError::Data(format!("{}: the first column must be headed 'replicate'", path.display())));
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: no observations", path.display())));
    }
    let d = rows[0].len();
    if d < 2 {
        return Err(CliError::Data(format!("{}: expected a replicate column and at least one value", path.display())));
    }
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(CliError::Data(format!("{}: row {} has {} columns, expected {d}", path.display(), i + 1, r.len())));
        }
        let pos = match groups.iter().position(|(id, _)| *id == r[0]) {
            Some(p) => p,
            None => {
                groups.push((r[0].clone(), Vec::new()));
                groups.len() - 1
            }
        };
        for s in &r[1..] {
            let v = parse_cell(path, i + 1, s)?;
            groups[pos].1.push(v);
        }
    }
    groups.into_iter().map(|(id, v)| Ok((id, Sample::new(d - 1, v)?))).collect()
}

/// A distribution given as `weight` or `label,weight` rows.
pub fn read_distribution(path: &Path) -> Result<DiscreteDistribution, CliError> {
    let (_, rows) = read_table(path)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: empty distribution", path.display())));
    }
    let mut labels = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        match r.as_slice() {
            [w] => {
                labels.push((i + 1).to_string());
                weights.push(parse_cell(path, i + 1, w)?);
            }
            [l, w] => {
                labels.push(l.clone());
                weights.push(parse_cell(path, i + 1, w)?);
            }
            _ => return Err(CliError::Data(format!("{}: row {} must be 'weight' or 'label,weight'", path.display(), i + 1))),
        }
    }
    Ok(DiscreteDistribution::new(labels, weights)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
