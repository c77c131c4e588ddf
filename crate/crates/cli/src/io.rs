//! CSV and Newick file formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the in-memory values exactly.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fmds_core::phylo::{parse_newick, PhyloTree};
use fmds_core::{AbundanceTable, DistanceMatrix, Embedding, LabelVector};

use crate::error::DataError;

struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header = reader
        .headers()
        .with_context(|| format!("cannot read header of {}", path.display()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    if header.is_empty() || header.iter().all(|s| s.is_empty()) {
        return Err(DataError::new(path.display().to_string(), Some(1), "empty header").into());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("cannot read {}", path.display()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let fields: Vec<String> = record.iter().map(|s| s.trim().to_string()).collect();
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        if fields.len() != header.len() {
            return Err(DataError::new(
                path.display().to_string(),
                Some(line),
                format!("expected {} fields, found {}", header.len(), fields.len()),
            )
            .into());
        }
        rows.push((line, fields));
    }
    Ok(Table { header, rows })
}

fn parse_f64(path: &Path, line: u64, column: &str, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| {
        DataError::new(path.display().to_string(), Some(line), format!("column `{column}`: `{s}` is not a number"))
            .into()
    })
}

pub fn read_abundance(path: &Path) -> Result<AbundanceTable> {
    let t = read_csv(path)?;
    if t.header.len() < 2 {
        return Err(DataError::new(path.display().to_string(), Some(1), "need sample_id and at least one feature").into());
    }
    let features = t.header[1..].to_vec();
    let mut ids = Vec::with_capacity(t.rows.len());
    let mut values = Vec::with_capacity(t.rows.len());
    for (line, fields) in &t.rows {
        ids.push(fields[0].clone());
        let row = fields[1..]
            .iter()
            .zip(&features)
            .map(|(s, f)| parse_f64(path, *line, f, s))
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    AbundanceTable::signed(ids, features, values).with_context(|| format!("invalid abundance table {}", path.display()))
}

pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let t = read_csv(path)?;
    if t.header.len() != 2 {
        return Err(DataError::new(path.display().to_string(), Some(1), "expected header `sample_id,label`").into());
    }
    let mut ids = Vec::with_capacity(t.rows.len());
    let mut y = Vec::with_capacity(t.rows.len());
    for (line, fields) in &t.rows {
        ids.push(fields[0].clone());
        let label = fields[1].parse::<usize>().map_err(|_| {
            DataError::new(
                path.display().to_string(),
                Some(*line),
                format!("label `{}` is not a nonnegative integer", fields[1]),
            )
        })?;
        y.push(label);
    }
    LabelVector::new(ids, y).with_context(|| format!("invalid labels {}", path.display()))
}

pub fn read_distance(path: &Path) -> Result<DistanceMatrix> {
    let t = read_csv(path)?;
    let ids = t.header[1..].to_vec();
    if t.rows.len() != ids.len() {
        return Err(DataError::new(
            path.display().to_string(),
            None,
            format!("{} columns of sample ids but {} rows", ids.len(), t.rows.len()),
        )
        .into());
    }
    let mut rows = Vec::with_capacity(ids.len());
    for ((line, fields), id) in t.rows.iter().zip(&ids) {
        if &fields[0] != id {
            return Err(DataError::new(
                path.display().to_string(),
                Some(*line),
                format!("row id `{}` does not match column id `{id}`", fields[0]),
            )
            .into());
        }
        let row = fields[1..]
            .iter()
            .zip(&ids)
            .map(|(s, c)| parse_f64(path, *line, c, s))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DistanceMatrix::new(ids, rows).with_context(|| format!("invalid distance matrix {}", path.display()))
}

fn is_embedding_header(header: &[String]) -> bool {
    matches!(header, [a, b, c] | [a, b, c, _] if a == "sample_id" && b == "x" && c == "y")
        && (header.len() == 3 || header[3] == "label")
}

/// True when the file has an embedding header rather than a distance header.
pub fn looks_like_embedding(path: &Path) -> Result<bool> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    Ok(is_embedding_header(&header))
}

/// Reads an embedding and, if present, its label column.
pub fn read_embedding(path: &Path) -> Result<(Embedding, Option<LabelVector>)> {
    let t = read_csv(path)?;
    if !is_embedding_header(&t.header) {
        return Err(DataError::new(path.display().to_string(), Some(1), "expected header `sample_id,x,y[,label]`").into());
    }
    let with_labels = t.header.len() == 4;
    let mut ids = Vec::with_capacity(t.rows.len());
    let mut coords = Vec::with_capacity(t.rows.len());
    let mut y = Vec::new();
    for (line, fields) in &t.rows {
        ids.push(fields[0].clone());
        coords.push([parse_f64(path, *line, "x", &fields[1])?, parse_f64(path, *line, "y", &fields[2])?]);
        if with_labels {
            y.push(fields[3].parse::<usize>().map_err(|_| {
                DataError::new(
                    path.display().to_string(),
                    Some(*line),
                    format!("label `{}` is not a nonnegative integer", fields[3]),
                )
            })?);
        }
    }
    let labels = if with_labels { Some(LabelVector::new(ids.clone(), y)?) } else { None };
    let z = Embedding::new(ids, coords).with_context(|| format!("invalid embedding {}", path.display()))?;
    Ok((z, labels))
}

pub fn read_tree(path: &Path) -> Result<PhyloTree> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_newick(&text).with_context(|| format!("invalid tree {}", path.display()))
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes rows of already formatted fields.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_abundance(path: &Path, table: &AbundanceTable) -> Result<()> {
    let mut header = vec!["sample_id"];
    header.extend(table.feature_ids().iter().map(String::as_str));
    let rows = table.sample_ids().iter().zip(table.rows()).map(|(id, row)| {
        let mut r = vec![id.clone()];
        r.extend(row.iter().map(|&v| fmt_f64(v)));
        r
    });
    write_csv(path, &header, rows)
}

pub fn write_labels(path: &Path, labels: &LabelVector) -> Result<()> {
    let rows = labels.ids().iter().zip(labels.values()).map(|(id, y)| vec![id.clone(), y.to_string()]);
    write_csv(path, &["sample_id", "label"], rows)
}

pub fn write_distance(path: &Path, d: &DistanceMatrix) -> Result<()> {
    let mut header = vec![""];
    header.extend(d.ids().iter().map(String::as_str));
    let rows = d.ids().iter().enumerate().map(|(i, id)| {
        let mut r = vec![id.clone()];
        r.extend(d.row(i).iter().map(|&v| fmt_f64(v)));
        r
    });
    write_csv(path, &header, rows)
}

pub fn write_embedding(path: &Path, z: &Embedding, labels: Option<&LabelVector>) -> Result<()> {
    let header: &[&str] = if labels.is_some() { &["sample_id", "x", "y", "label"] } else { &["sample_id", "x", "y"] };
    let rows = z.ids().iter().zip(z.coords()).enumerate().map(|(i, (id, c))| {
        let mut r = vec![id.clone(), fmt_f64(c[0]), fmt_f64(c[1])];
        if let Some(l) = labels {
            r.push(l.values()[i].to_string());
        }
        r
    });
    write_csv(path, header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let third = 1.0 / 3.0;
        let d = DistanceMatrix::new(
            ids,
            vec![vec![0.0, third, 1e-17], vec![third, 0.0, 2.5e10], vec![1e-17, 2.5e10, 0.0]],
        )
        .unwrap();
        write_distance(&path, &d).unwrap();
        let back = read_distance(&path).unwrap();
        assert_eq!(back, d);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
    }

    #[test]
    fn embedding_header_detection() {
        let h = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(is_embedding_header(&h(&["sample_id", "x", "y"])));
        assert!(is_embedding_header(&h(&["sample_id", "x", "y", "label"])));
        assert!(!is_embedding_header(&h(&["", "x", "y"])));
        assert!(!is_embedding_header(&h(&["sample_id", "x", "y", "z"])));
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "sample_id,F1\nS1,0.5\nS2,abc\n").unwrap();
        let err = read_abundance(&path).unwrap_err();
        let data = err.downcast_ref::<DataError>().unwrap();
        assert_eq!(data.line, Some(3));
    }
}
