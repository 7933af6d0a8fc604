//! CSV and JSON output with a provenance header.

use anyhow::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to rerun a command and get identical output.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub scenarios: Option<String>,
    pub scenarios_sha256: Option<String>,
    pub seed: Option<u64>,
    pub b_null: Option<usize>,
    pub b_power: Option<usize>,
    pub alpha: Option<f64>,
    pub sidedness: String,
    pub battery: Vec<String>,
    /// Extra `key: value` notes, such as calibrated penetrances.
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            tool: "casecontrol",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args,
            scenarios: None,
            scenarios_sha256: None,
            seed: None,
            b_null: None,
            b_power: None,
            alpha: None,
            sidedness: String::new(),
            battery: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("{} {}", self.tool, self.version),
            format!("command: {}", self.command),
            format!("args: {}", self.args.join(" ")),
        ];
        let mut opt = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                lines.push(format!("{key}: {v}"));
            }
        };
        opt("scenarios", self.scenarios.clone());
        opt("scenarios_sha256", self.scenarios_sha256.clone());
        opt("seed", self.seed.map(|v| v.to_string()));
        opt("b_null", self.b_null.map(|v| v.to_string()));
        opt("b_power", self.b_power.map(|v| v.to_string()));
        opt("alpha", self.alpha.map(|v| v.to_string()));
        lines.push(format!("sidedness: {}", self.sidedness));
        lines.push(format!("battery: {}", self.battery.join(",")));
        lines.extend(self.notes.iter().cloned());
        lines
    }
}

/// Rows of string cells under a fixed header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Renders `table` as CSV, or `results` as JSON, behind the provenance.
pub fn render<T: Serialize>(format: Format, provenance: &Provenance, table: &Table, results: &T) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for line in provenance.header_lines() {
                out.push_str("# ");
                out.push_str(&line);
                out.push('\n');
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            out.push_str(std::str::from_utf8(&w.into_inner()?)?);
            Ok(out)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, T> {
                provenance: &'a Provenance,
                results: &'a T,
            }
            let mut s = serde_json::to_string_pretty(&Doc { provenance, results })?;
            s.push('\n');
            Ok(s)
        }
    }
}
