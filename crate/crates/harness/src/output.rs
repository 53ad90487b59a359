//! Self-describing CSV and JSON reports. Every number is written as a
//! decimal string carrying the run's full precision.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config_sha256: String,
    pub precision_bits: u32,
    pub tolerances: BTreeMap<String, String>,
    pub config: ExperimentConfig,
    pub tables: BTreeMap<String, Table>,
    pub summary: BTreeMap<String, String>,
}

/// SHA-256 of the command and canonical config. The output path is not
/// part of it, so the same experiment hashes the same wherever it goes.
pub fn config_hash(command: &str, cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(b"\n");
    hasher.update(canonical.as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: &str, cfg: &ExperimentConfig, bits: u32, tolerances: BTreeMap<String, String>) -> Self {
        Report {
            command: command.to_string(),
            config_sha256: config_hash(command, cfg),
            precision_bits: bits,
            tolerances,
            config: cfg.clone(),
            tables: BTreeMap::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn table(mut self, name: &str, t: Table) -> Self {
        self.tables.insert(name.to_string(), t);
        self
    }

    pub fn note(mut self, key: &str, value: impl Into<String>) -> Self {
        self.summary.insert(key.to_string(), value.into());
        self
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self).map_err(std::io::Error::other)?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(out)?,
        }
        Ok(())
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# config_sha256: {}", self.config_sha256)?;
        writeln!(out, "# precision_bits: {}", self.precision_bits)?;
        let tols: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# tolerances: {}", tols.join(" "))?;
        let cfg = serde_json::to_string(&self.config).map_err(std::io::Error::other)?;
        writeln!(out, "# config: {cfg}")?;
        for (k, v) in &self.summary {
            writeln!(out, "# summary.{k}: {v}")?;
        }
        for (name, table) in &self.tables {
            writeln!(out, "# table: {name}")?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).map_err(std::io::Error::other)?;
            for row in &table.rows {
                w.write_record(row).map_err(std::io::Error::other)?;
            }
            let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
            out.write_all(&bytes)?;
        }
        Ok(())
    }
}
