use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// One row per sample, one column per parameter.
pub fn samples_to_csv(names: &[String], samples: &DMatrix<f64>) -> Result<Vec<u8>> {
    if names.len() != samples.nrows() {
        return Err(Error::DimensionMismatch {
            what: "sample column names",
            expected: samples.nrows(),
            got: names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names)?;
    for col in samples.column_iter() {
        w.write_record(col.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads a samples file back as (names, `d × S` matrix).
pub fn read_samples_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for rec in r.records() {
        let rec = rec?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{}: row {} column {}: not a number: {field:?}",
                    path.display(),
                    rows + 2,
                    names.get(k).map(String::as_str).unwrap_or("?")
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok((names.clone(), DMatrix::from_column_slice(names.len(), rows, &data)))
}
