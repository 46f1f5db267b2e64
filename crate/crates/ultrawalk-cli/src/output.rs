//! Table rendering. One row schema for everything:
//!
//! ```text
//! entity, class_k, class_size, rep_site, value_float, value_exact
//! ```
//!
//! CSV is the header plus one line per row with empty cells for absent
//! fields; JSON mirrors the same rows under a versioned envelope. Floats are
//! printed with the shortest representation that round-trips, so output for
//! a fixed spec is byte-stable.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use ultrawalk::table::DistributionTable;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    entity: &'a str,
    class_k: Option<u32>,
    class_size: Option<u64>,
    rep_site: Option<u64>,
    value_float: f64,
    value_exact: Option<&'a str>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    command: &'a str,
    rows: Vec<JsonRow<'a>>,
}

pub fn render(table: &DistributionTable, format: Format, command: &str) -> String {
    match format {
        Format::Csv => {
            let mut out = String::from("entity,class_k,class_size,rep_site,value_float,value_exact\n");
            for r in &table.rows {
                let k = r.class_k.map(|v| v.to_string()).unwrap_or_default();
                let size = r.class_size.map(|v| v.to_string()).unwrap_or_default();
                let site = r.rep_site.map(|v| v.to_string()).unwrap_or_default();
                let exact = r.exact.as_deref().unwrap_or_default();
                out.push_str(&format!(
                    "{},{k},{size},{site},{},{exact}\n",
                    r.entity, r.value
                ));
            }
            out
        }
        Format::Json => {
            let envelope = Envelope {
                schema_version: SCHEMA_VERSION,
                command,
                rows: table
                    .rows
                    .iter()
                    .map(|r| JsonRow {
                        entity: &r.entity,
                        class_k: r.class_k,
                        class_size: r.class_size,
                        rep_site: r.rep_site,
                        value_float: r.value,
                        value_exact: r.exact.as_deref(),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&envelope).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

pub fn emit(rendered: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.as_bytes())
                .map_err(|e| CliError::validation(format!("cannot write output: {e}")))
        }
        Some(path) => std::fs::write(path, rendered).map_err(|e| {
            CliError::validation(format!("cannot write {}: {e}", path.display()))
        }),
    }
}
