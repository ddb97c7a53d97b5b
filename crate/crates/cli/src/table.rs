//! Tabular results with a metadata block, written as CSV or JSON.
//!
//! CSV layout: `# key = value` metadata lines, a header row, then one row per
//! record with every number printed to 17 significant digits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Table(format!(
                "row of width {} in a table with {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            if k.contains('=') || k.contains('\n') || v.contains('\n') {
                return Err(CliError::Table(format!(
                    "metadata entry `{k}` cannot be written"
                )));
            }
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Table(e.to_string());
        writer.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|v| format!("{v:.16e}")))
                .map_err(csv_err)?;
        }
        let body = writer
            .into_inner()
            .map_err(|e| CliError::Table(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(meta) = line.strip_prefix('#') else {
                break;
            };
            let (k, v) = meta
                .trim_end_matches(['\n', '\r'])
                .split_once(" = ")
                .ok_or_else(|| CliError::Table(format!("metadata line `{}`", line.trim_end())))?;
            metadata.insert(k.trim_start().to_string(), v.to_string());
            body_start += line.len();
        }
        let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
        let csv_err = |e: csv::Error| CliError::Table(e.to_string());
        let columns: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = ResultTable {
            columns,
            rows: Vec::new(),
            metadata,
        };
        for record in reader.records() {
            let row = record
                .map_err(csv_err)?
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| CliError::Table(format!("`{f}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push_row(row)?;
        }
        Ok(table)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Table(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: ResultTable =
            serde_json::from_str(text).map_err(|e| CliError::Table(e.to_string()))?;
        if table.rows.iter().any(|r| r.len() != table.columns.len()) {
            return Err(CliError::Table(
                "row width differs from column count".into(),
            ));
        }
        Ok(table)
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    pub fn parse(text: &str, format: OutputFormat) -> Result<Self> {
        match format {
            OutputFormat::Csv => Self::from_csv(text),
            OutputFormat::Json => Self::from_json(text),
        }
    }
}
