use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::input(format!("unknown format '{other}' (expected json or csv)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// JSON: an array with one object per record, one record per line.
/// CSV: a header row, then one line per record; nested objects become
/// dotted column names and arrays are joined with `;`.
pub fn render<T: Serialize>(records: &[T], format: Format) -> CliResult<String> {
    let values: Vec<Value> = records
        .iter()
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input(format!("cannot serialize output: {e}")))?;
    match format {
        Format::Json => {
            let lines: Vec<String> = values.iter().map(Value::to_string).collect();
            Ok(if lines.is_empty() { "[]\n".into() } else { format!("[\n{}\n]\n", lines.join(",\n")) })
        }
        Format::Csv => render_csv(&values),
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar_text).collect();
            out.push((prefix.to_string(), parts.join(";")));
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_csv(values: &[Value]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Option<Vec<String>> = None;
    for v in values {
        let mut cells = Vec::new();
        flatten("", v, &mut cells);
        let keys: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => {
                w.write_record(&keys).map_err(csv_error)?;
                header = Some(keys);
            }
            Some(h) if *h != keys => return Err(CliError::input("records with differing fields cannot share a CSV table")),
            Some(_) => {}
        }
        w.write_record(cells.iter().map(|(_, c)| c)).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(format!("cannot write CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::input(format!("CSV output is not UTF-8: {e}")))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::input(format!("cannot write CSV: {e}"))
}
