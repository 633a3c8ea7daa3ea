//! Feature-matrix CSV: `subject_id,group,task` followed by one column per
//! manifest entry; absent cells are empty.

use std::io::{Read, Write};

use super::assembly::FeatureVector;
use super::manifest::FeatureManifest;
use crate::error::{Error, Result};

pub const MATRIX_KEY_COLUMNS: [&str; 3] = ["subject_id", "group", "task"];

pub fn write_matrix_csv<W: Write>(w: W, manifest: &FeatureManifest, rows: &[FeatureVector]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let header: Vec<&str> = MATRIX_KEY_COLUMNS.iter().copied().chain(manifest.names()).collect();
    wtr.write_record(&header)?;
    for r in rows {
        if r.len() != manifest.len() {
            return Err(Error::DimensionMismatch { expected: manifest.len(), got: r.len() });
        }
        let mut rec: Vec<String> = vec![r.subject_id.clone(), r.group.to_string(), r.task.to_string()];
        rec.extend(r.values.iter().zip(&r.mask).map(|(v, &m)| if m { format!("{v}") } else { String::new() }));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: R, manifest: &FeatureManifest) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = MATRIX_KEY_COLUMNS.iter().copied().chain(manifest.names()).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::ManifestMismatch("feature matrix columns differ from the manifest".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| Error::MalformedRow { line: line + 2, reason };
        let group = rec[1].parse().map_err(|e: Error| bad(e.to_string()))?;
        let task = rec[2].parse().map_err(|e: Error| bad(e.to_string()))?;
        let mut values = Vec::with_capacity(manifest.len());
        let mut mask = Vec::with_capacity(manifest.len());
        for (j, cell) in rec.iter().skip(3).enumerate() {
            if cell.is_empty() {
                values.push(0.0);
                mask.push(false);
            } else {
                let v: f64 = cell.parse().map_err(|_| bad(format!("column {} is not a number", j + 4)))?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteFeature { row: line, col: j });
                }
                values.push(v);
                mask.push(true);
            }
        }
        rows.push(FeatureVector { subject_id: rec[0].to_string(), group, task, values, mask });
    }
    Ok(rows)
}
