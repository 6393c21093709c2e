//! Output assembly: provenance headers, table layout, emission.

use std::fs;
use std::path::Path;

use mssw_core::analysis::{fmt2, RankedList};
use serde_json::{Map, Value};

pub const TOOL: &str = concat!("mssw ", env!("CARGO_PKG_VERSION"));

fn config_json(command: &str, mut fields: Map<String, Value>) -> Value {
    fields.insert("tool".into(), TOOL.into());
    fields.insert("command".into(), command.into());
    Value::Object(fields)
}

/// First line of every text output: `# {json}` with the resolved run config.
pub fn header_line(command: &str, fields: Map<String, Value>) -> String {
    format!("# {}\n", config_json(command, fields))
}

/// The same config line as an XML comment, for vector-graphic output.
pub fn svg_header_line(command: &str, fields: Map<String, Value>) -> String {
    format!("<!-- {} -->\n", config_json(command, fields))
}

pub fn ranked_table(list: &RankedList) -> String {
    let mut out = format!(
        "{:<4}  {:<9}  {:>6}  {:>6}  {:>5}  {}\n",
        "rank", "id", "score", "n", "mean", "name"
    );
    for e in &list.entries {
        let mean = e.mean_severity.map(fmt2).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<4}  {:<9}  {:>6}  {:>6}  {:>5}  {}\n",
            e.rank,
            format!("CWE-{}", e.cwe_id),
            fmt2(e.score),
            e.n,
            mean,
            e.name
        ));
    }
    out
}

pub fn ranked_json(list: &RankedList) -> String {
    let entries: Vec<Value> = list
        .entries
        .iter()
        .map(|e| {
            let mut m = Map::new();
            m.insert("rank".into(), e.rank.into());
            m.insert("cwe_id".into(), e.cwe_id.into());
            m.insert("name".into(), e.name.clone().into());
            m.insert("score".into(), e.score.into());
            m.insert("n".into(), e.n.into());
            m.insert(
                "mean_severity".into(),
                e.mean_severity.map(Value::from).unwrap_or(Value::Null),
            );
            Value::Object(m)
        })
        .collect();
    let mut top = Map::new();
    top.insert("entries".into(), Value::Array(entries));
    let body = serde_json::to_string_pretty(&Value::Object(top)).expect("ranked list serializes");
    format!("{body}\n")
}

/// Writes to the path when given, stdout otherwise.
pub fn emit(out: Option<&Path>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
