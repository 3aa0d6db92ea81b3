//! Report records: JSON lines plus an optional CSV table, and the overall
//! pass/fail of the asserted checks.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub records: Vec<Value>,
    pub table: Option<Table>,
    /// conjunction of every asserted check
    pub ok: bool,
}

impl Default for Report {
    fn default() -> Self {
        Report {
            records: Vec::new(),
            table: None,
            ok: true,
        }
    }
}

impl Report {
    pub fn single(v: Value) -> Self {
        Report {
            records: vec![v],
            ..Report::default()
        }
    }

    pub fn push(&mut self, v: Value) {
        self.records.push(v);
    }

    /// Records a check outcome; a false check fails the report.
    pub fn assert(&mut self, ok: bool) -> bool {
        self.ok &= ok;
        ok
    }

    pub fn failure(err: &Error) -> Value {
        json!({
            "ok": false,
            "error": { "kind": err.kind(), "message": err.to_string() },
        })
    }

    pub fn write_json_lines(&self, out: &mut dyn Write) -> Result<()> {
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let t = self
            .table
            .as_ref()
            .ok_or_else(|| Error::Invalid("this command has no tabular output".into()))?;
        std::fs::write(path, t.to_csv()?)?;
        Ok(())
    }
}
