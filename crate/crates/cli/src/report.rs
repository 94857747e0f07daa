//! Report emission. JSON reports are an array whose first element records
//! the tool, command and resolved config; CSV reports carry the same record
//! as `#` comment lines above the header.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub rows: Vec<Value>,
    pub timestamp: bool,
}

impl Report {
    pub fn new<C: Serialize>(command: &'static str, config: &C, timestamp: bool) -> Result<Self, CliError> {
        Ok(Self {
            command,
            config: serde_json::to_value(config).map_err(runtime)?,
            rows: Vec::new(),
            timestamp,
        })
    }

    pub fn push<R: Serialize>(&mut self, row: &R) -> Result<(), CliError> {
        let value = serde_json::to_value(row).map_err(runtime)?;
        if !value.is_object() {
            return Err(CliError::Runtime("report rows must be records".into()));
        }
        self.rows.push(value);
        Ok(())
    }

    fn provenance(&self) -> Value {
        let mut head = json!({
            "record": "provenance",
            "tool": "cpr-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
        });
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            head["generated_at_unix"] = json!(secs);
        }
        head
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => Ok(self.render_csv()),
        }
    }

    fn render_json(&self) -> Result<String, CliError> {
        let mut records = vec![self.provenance()];
        for row in &self.rows {
            let mut rec = Map::new();
            rec.insert("record".into(), json!("row"));
            rec.extend(row.as_object().expect("rows are objects").clone());
            records.push(Value::Object(rec));
        }
        let mut text = serde_json::to_string_pretty(&records).map_err(runtime)?;
        text.push('\n');
        Ok(text)
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let head = self.provenance();
        for key in ["tool", "version", "command"] {
            out.push_str(&format!("# {key}: {}\n", head[key].as_str().unwrap_or_default()));
        }
        out.push_str(&format!("# config: {}\n", head["config"]));
        if let Some(t) = head.get("generated_at_unix") {
            out.push_str(&format!("# generated_at_unix: {t}\n"));
        }
        let Some(first) = self.rows.first().and_then(Value::as_object) else {
            return out;
        };
        let header: Vec<&String> = first.keys().collect();
        out.push_str(&header.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = header.iter().map(|k| csv_cell(&row[k.as_str()])).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes to `out`, or stdout when `out` is `None`.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let text = self.render(format)?;
        write_text(out, &text)
    }
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(runtime)?;
            stdout.flush().map_err(runtime)
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(num) => match (num.as_u64(), num.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => format_float(num.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => {
            let s = other.to_string();
            format!("\"{}\"", s.replace('"', "\"\""))
        }
    }
}

/// `(lower_ratio, upper_ratio)` from the first row of a ripcheck report.
pub fn read_rip_row(path: &Path) -> Result<(f64, f64), CliError> {
    let bad = |msg: &str| CliError::Config(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(&e.to_string()))?;
    if text.trim_start().starts_with('[') {
        let records: Vec<Value> = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
        let row = records
            .iter()
            .find(|r| r["record"] == "row")
            .ok_or_else(|| bad("no data row"))?;
        let get = |key: &str| row[key].as_f64().ok_or_else(|| bad(&format!("missing {key}")));
        return Ok((get("lower_ratio")?, get("upper_ratio")?));
    }
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("no header"))?.split(',').collect();
    let row: Vec<&str> = lines.next().ok_or_else(|| bad("no data row"))?.split(',').collect();
    let get = |key: &str| -> Result<f64, CliError> {
        let idx = header.iter().position(|h| *h == key).ok_or_else(|| bad(&format!("missing {key}")))?;
        row.get(idx)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(&format!("unparsable {key}")))
    };
    Ok((get("lower_ratio")?, get("upper_ratio")?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        x: f64,
        count: usize,
        flag: bool,
        missing: Option<f64>,
    }

    fn sample() -> Report {
        let mut r = Report::new("demo", &json!({"seed": 1}), false).unwrap();
        r.push(&Row { name: "a,b", x: 0.1, count: 3, flag: true, missing: None }).unwrap();
        r
    }

    #[test]
    fn csv_keeps_field_order_and_full_precision() {
        let text = sample().render(Format::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "# config: {\"seed\":1}");
        assert_eq!(lines[4], "name,x,count,flag,missing");
        assert_eq!(lines[5], "\"a,b\",1.0000000000000001e-1,3,true,");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_is_an_array_with_provenance_first() {
        let text = sample().render(Format::Json).unwrap();
        let v: Vec<Value> = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["record"], "provenance");
        assert!(v[0].get("generated_at_unix").is_none());
        assert_eq!(v[1]["record"], "row");
        assert_eq!(v[1]["x"], 0.1);
    }

    #[test]
    fn rip_rows_parse_from_both_formats() {
        let mut r = Report::new("ripcheck", &json!({}), false).unwrap();
        r.push(&json!({"n": 8, "lower_ratio": 0.5, "upper_ratio": 1.5})).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, format) in [("r.csv", Format::Csv), ("r.json", Format::Json)] {
            let path = dir.path().join(name);
            r.emit(format, Some(&path)).unwrap();
            assert_eq!(read_rip_row(&path).unwrap(), (0.5, 1.5));
        }
    }
}
