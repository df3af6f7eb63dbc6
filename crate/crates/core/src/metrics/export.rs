//! Reliability-bin serialization. Floats are written with 17 significant
//! digits so every value parses back to the identical `f64`.

use std::fmt::Write;
use std::path::Path;

use super::{validate_row, BinStats, PredictionSet};
use crate::error::{invalid, Error, Result};

pub const BIN_CSV_HEADER: &str = "bin_id,lower_edge,upper_edge,count,mean_confidence,mean_accuracy";

/// Scientific notation with 17 significant digits, e.g. `6.6666666666666663e-1`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn bins_to_csv(bins: &[BinStats]) -> String {
    let mut out = String::from(BIN_CSV_HEADER);
    out.push('\n');
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.bin_id,
            format_f64(b.lower_edge),
            format_f64(b.upper_edge),
            b.count,
            format_f64(b.mean_confidence),
            format_f64(b.mean_accuracy)
        );
    }
    out
}

/// JSON array of bin objects with the same field order and number format as the CSV.
pub fn bins_to_json(bins: &[BinStats]) -> String {
    let mut out = String::from("[");
    for (i, b) in bins.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "\n  {{\"bin_id\": {}, \"lower_edge\": {}, \"upper_edge\": {}, \"count\": {}, \"mean_confidence\": {}, \"mean_accuracy\": {}}}",
            b.bin_id,
            format_f64(b.lower_edge),
            format_f64(b.upper_edge),
            b.count,
            format_f64(b.mean_confidence),
            format_f64(b.mean_accuracy)
        );
    }
    out.push_str(if bins.is_empty() { "]\n" } else { "\n]\n" });
    out
}

pub fn bins_from_csv(text: &str) -> Result<Vec<BinStats>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == BIN_CSV_HEADER => {}
        _ => return Err(invalid("missing reliability CSV header")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || invalid(format!("line {}: malformed bin row", i + 2));
            if fields.len() != 6 {
                return Err(bad());
            }
            let f = |k: usize| fields[k].parse::<f64>().map_err(|_| bad());
            let u = |k: usize| fields[k].parse::<usize>().map_err(|_| bad());
            Ok(BinStats {
                bin_id: u(0)?,
                lower_edge: f(1)?,
                upper_edge: f(2)?,
                count: u(3)?,
                mean_confidence: f(4)?,
                mean_accuracy: f(5)?,
            })
        })
        .collect()
}

/// Predictions CSV: header `p0,...,p{C-1},label`, probabilities in
/// [`format_f64`] form.
pub fn predictions_to_csv(p: &PredictionSet) -> String {
    let mut out = String::new();
    for k in 0..p.num_classes() {
        let _ = write!(out, "p{k},");
    }
    out.push_str("label\n");
    for (row, label) in p.rows().zip(p.labels()) {
        for v in row {
            out.push_str(&format_f64(*v));
            out.push(',');
        }
        let _ = writeln!(out, "{label}");
    }
    out
}

/// Parses a predictions CSV. Rows must sum to 1 within `tolerance`; errors
/// name the offending line. `origin` only labels error messages.
pub fn predictions_from_csv(text: &str, tolerance: f64, origin: &Path) -> Result<PredictionSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let c = columns.len().saturating_sub(1);
    let header_ok = c >= 2
        && columns.last() == Some(&"label")
        && columns[..c].iter().enumerate().all(|(k, col)| *col == format!("p{k}"));
    if !header_ok {
        return Err(Error::parse(origin, 1, "expected header `p0,...,p{C-1},label` with C >= 2"));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != c + 1 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected {} fields, found {}", c + 1, fields.len()),
            ));
        }
        let row = fields[..c]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(origin, line_no, format!("bad probability `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        validate_row(&row, c, tolerance).map_err(|m| Error::parse(origin, line_no, m))?;
        let label: usize = fields[c]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad label `{}`", fields[c])))?;
        if label >= c {
            return Err(Error::parse(origin, line_no, format!("label {label} out of range")));
        }
        rows.push(row);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::parse(origin, 2, "no prediction rows"));
    }
    PredictionSet::with_tolerance(rows, labels, c, tolerance)
}
