use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

/// One report value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Str(String),
    Bool(bool),
}

/// 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Float(x) => format_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or_else(|| Value::String(format_f64(*x)), Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
        }
    }
}

/// Table plus side files, assembled in memory and written in one go.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// `(file name, contents)` written next to the main output.
    pub side_files: Vec<(String, String)>,
    /// False when a check in the run failed.
    pub ok: bool,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report { columns: columns.to_vec(), rows: Vec::new(), side_files: Vec::new(), ok: true }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Config(format!("cannot render csv: {e}"));
                w.write_record(&self.columns).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect::<Map<_, _>>()))
                    .collect();
                Ok(serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n")
            }
        }
    }
}

/// `<dir>/<stem>.<suffix>` next to `output`.
pub fn side_path(output: &Path, suffix: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    output.with_file_name(format!("{stem}.{suffix}"))
}

pub fn to_json_string<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report values serialize") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(f64::INFINITY), "inf");
        let x = 0.1 + 0.2;
        assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_rendering() {
        let mut r = Report::new(&["a", "b"]);
        r.push(vec![Cell::Str("x,y".into()), Cell::Bool(true)]);
        assert_eq!(r.render(Format::Csv).unwrap(), "a,b\n\"x,y\",true\n");
        let j: Value = serde_json::from_str(&r.render(Format::Json).unwrap()).unwrap();
        assert_eq!(j[0]["b"], true);
    }

    #[test]
    fn side_paths() {
        assert_eq!(side_path(Path::new("out/run.csv"), "family.json"), PathBuf::from("out/run.family.json"));
    }
}
