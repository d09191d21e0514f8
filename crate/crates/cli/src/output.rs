use std::io::Write;

use serde_json::Value;

use crate::config::{Format, RunReport};
use crate::error::CliError;

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, inner) in m {
                flatten(&key(k), inner, out);
            }
        }
        Value::Array(items) => {
            let cells: Vec<String> = items.iter().map(cell).collect();
            out.push((prefix.to_string(), cells.join(";")));
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Flat per-record table: nested fields become dotted columns, arrays are
/// joined with `;`. Columns follow the first record.
pub fn records_to_csv(records: &[Value]) -> Result<String, CliError> {
    let rows: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut cols = Vec::new();
            flatten("", r, &mut cols);
            cols
        })
        .collect();
    let Some(first) = rows.first() else {
        return Ok(String::new());
    };
    let header: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in &rows {
        let cells: Vec<&str> = header
            .iter()
            .map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""))
            .collect();
        w.write_record(&cells).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn render(report: &RunReport) -> Result<String, CliError> {
    Ok(match report.config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => records_to_csv(&report.records)?,
    })
}

/// Writes `text` to `path`, where `-` means standard output.
pub fn emit(path: &str, text: &str) -> Result<(), CliError> {
    if path == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}
