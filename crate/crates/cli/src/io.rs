//! Panel CSV, partition files and detection-matrix tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use setgc_core::sim::SET_LABELS;
use setgc_core::{DetectionMatrix, SetPartition, TimeSeriesPanel};

use crate::error::CliError;

/// Reads a panel: a header row of series names, then one row of decimal
/// numbers per time point.
pub fn load_panel(path: &Path) -> Result<TimeSeriesPanel, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.iter().any(String::is_empty) {
        return Err(CliError::parse(path, "empty series name in header".into()));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CliError::parse(
                path,
                format!("line {line}: {len} fields, expected {expected_len} (ragged row)"),
            ),
            _ => CliError::parse(path, format!("line {line}: {e}")),
        })?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::parse(
                        path,
                        format!("line {line}, column {} (`{}`): `{cell}` is not a finite number", c + 1, names[c]),
                    )
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    TimeSeriesPanel::from_rows(names, &rows).map_err(|e| CliError::invalid(path, e))
}

/// Writes a panel in the format [`load_panel`] reads; values use the
/// shortest representation that round-trips exactly.
pub fn write_panel(path: &Path, panel: &TimeSeriesPanel) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    w.write_record(panel.names()).map_err(|e| CliError::io(path, e.into()))?;
    let v = panel.values();
    for r in 0..v.nrows() {
        w.write_record((0..v.ncols()).map(|c| format!("{:?}", v[(r, c)])))
            .map_err(|e| CliError::io(path, e.into()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads `series,label` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_partition(text: &str, origin: &Path) -> Result<SetPartition, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields.as_slice() {
            [series, label] if !series.is_empty() && !label.is_empty() => pairs.push((*series, *label)),
            _ => {
                return Err(CliError::parse(origin, format!("line {}: expected `series_name,set_label`", n + 1)));
            }
        }
    }
    if pairs.is_empty() {
        return Err(CliError::parse(origin, "no assignments".into()));
    }
    SetPartition::from_assignments(pairs).map_err(|e| CliError::invalid(origin, e))
}

pub fn load_partition(path: &Path) -> Result<SetPartition, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_partition(&text, path)
}

pub fn write_partition(path: &Path, partition: &SetPartition) -> Result<(), CliError> {
    let mut out = String::new();
    for (label, members) in partition.member_lists() {
        for m in members {
            out.push_str(&format!("{m},{label}\n"));
        }
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

fn table(labels: &[String], cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from("from");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (from, l) in labels.iter().enumerate() {
        out.push_str(l);
        for to in 0..labels.len() {
            out.push(',');
            out.push_str(&cell(from, to));
        }
        out.push('\n');
    }
    out
}

/// Counts table: rows are the source set, columns the target set.
pub fn counts_csv(m: &DetectionMatrix) -> String {
    table(&m.labels, |f, t| m.counts[f][t].to_string())
}

pub fn rates_csv(m: &DetectionMatrix) -> String {
    table(&m.labels, |f, t| format!("{:.4}", m.rate(f, t)))
}

pub fn std_errors_csv(m: &DetectionMatrix) -> String {
    table(&m.labels, |f, t| format!("{:.4}", m.std_error(f, t)))
}

pub fn truth_csv(truth: &[[bool; 3]; 3]) -> String {
    let labels: Vec<String> = SET_LABELS.iter().map(|s| s.to_string()).collect();
    table(&labels, |f, t| u8::from(truth[f][t]).to_string())
}

/// Creates `dir` (and parents) and returns the path of `name` inside it.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.join(name))
}

