use std::path::Path;

use super::{MeasureLayout, MeasureVector};
use crate::data::format_f64;
use crate::error::{Error, Result};

pub const MISC_FLAG_COLUMN: &str = "misc_flag";
const CORRECT: &str = "correct";
const MISC: &str = "misc";

/// Writes one row per measure vector: the measure columns in layout order,
/// then `misc_flag` as `correct` or `misc`.
pub fn write_measures_csv(
    path: impl AsRef<Path>,
    layout: &MeasureLayout,
    vectors: &[MeasureVector],
    misclassified: &[bool],
) -> Result<()> {
    let path = path.as_ref();
    if vectors.len() != misclassified.len() {
        return Err(Error::invalid(format!(
            "{} measure vectors but {} flags",
            vectors.len(),
            misclassified.len()
        )));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = layout.names().iter().map(String::as_str).collect();
    header.push(MISC_FLAG_COLUMN);
    w.write_record(&header)?;
    for (i, (v, &misc)) in vectors.iter().zip(misclassified).enumerate() {
        if v.len() != layout.len() {
            return Err(Error::BadRow {
                row: i + 1,
                message: format!("{} values for {} measures", v.len(), layout.len()),
            });
        }
        let mut record: Vec<String> = v.as_slice().iter().map(|&x| format_f64(x)).collect();
        record.push(if misc { MISC } else { CORRECT }.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a file written by [`write_measures_csv`]. Every column except
/// `misc_flag` is a measure, in file order.
pub fn read_measures_csv(
    path: impl AsRef<Path>,
) -> Result<(MeasureLayout, Vec<MeasureVector>, Vec<bool>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers()?.clone();
    let flag = headers
        .iter()
        .position(|h| h == MISC_FLAG_COLUMN)
        .ok_or_else(|| Error::MissingColumn(MISC_FLAG_COLUMN.to_string()))?;
    let layout = MeasureLayout(
        headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != flag)
            .map(|(_, h)| h.to_string())
            .collect(),
    );
    let mut vectors = Vec::new();
    let mut flags = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut values = Vec::with_capacity(layout.len());
        for (j, cell) in record.iter().enumerate() {
            if j == flag {
                flags.push(match cell.trim() {
                    CORRECT => false,
                    MISC => true,
                    other => {
                        return Err(Error::BadRow {
                            row,
                            message: format!("misc_flag `{other}` is neither correct nor misc"),
                        })
                    }
                });
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::BadRow {
                row,
                message: format!("`{cell}` in column {} is not a number", &headers[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::BadRow {
                    row,
                    message: format!("non-finite value in column {}", &headers[j]),
                });
            }
            values.push(v);
        }
        vectors.push(MeasureVector(values));
    }
    Ok((layout, vectors, flags))
}
