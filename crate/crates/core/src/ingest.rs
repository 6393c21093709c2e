//! Feed parsing, year filtering, and the normalized dataset / taxonomy file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveRecord {
    pub cve_id: String,
    pub base_score: f64,
    pub cwe_ids: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<CveRecord>,
    pub source_label: String,
    pub cutoff_date: String,
}

impl Dataset {
    /// Index of base scores by CVE id.
    pub fn score_index(&self) -> BTreeMap<&str, f64> {
        self.records
            .iter()
            .map(|r| (r.cve_id.as_str(), r.base_score))
            .collect()
    }
}

fn valid_cve_id(id: &str) -> bool {
    let mut parts = id.splitn(3, '-');
    matches!(
        (parts.next(), parts.next(), parts.next()),
        (Some("CVE"), Some(year), Some(num))
            if year.len() == 4
                && year.bytes().all(|b| b.is_ascii_digit())
                && !num.is_empty()
                && num.bytes().all(|b| b.is_ascii_digit())
    )
}

fn cve_year(id: &str) -> Option<u16> {
    id.split('-').nth(1)?.parse().ok()
}

#[derive(Deserialize)]
struct FeedItem {
    cve: FeedCve,
    #[serde(default)]
    impact: Option<FeedImpact>,
}

#[derive(Deserialize)]
struct FeedCve {
    #[serde(rename = "CVE_data_meta")]
    meta: FeedMeta,
    #[serde(default)]
    problemtype: Option<FeedProblemType>,
}

#[derive(Deserialize)]
struct FeedMeta {
    #[serde(rename = "ID")]
    id: String,
}

#[derive(Deserialize)]
struct FeedProblemType {
    #[serde(default)]
    problemtype_data: Vec<FeedProblemEntry>,
}

#[derive(Deserialize)]
struct FeedProblemEntry {
    #[serde(default)]
    description: Vec<FeedProblemValue>,
}

#[derive(Deserialize)]
struct FeedProblemValue {
    #[serde(default)]
    value: String,
}

#[derive(Deserialize)]
struct FeedImpact {
    #[serde(rename = "baseMetricV3", default)]
    base_metric_v3: Option<FeedBaseMetricV3>,
}

#[derive(Deserialize)]
struct FeedBaseMetricV3 {
    #[serde(rename = "cvssV3", default)]
    cvss_v3: Option<FeedCvssV3>,
}

#[derive(Deserialize)]
struct FeedCvssV3 {
    #[serde(rename = "baseScore")]
    base_score: f64,
}

/// Parses an NVD 1.1 JSON feed document. Returns the records that carry a
/// v3 base score plus the count of skipped items (no v3 score).
/// Problem-type values of the form `CWE-<n>` become CWE ids; anything else
/// (NVD-CWE-noinfo, NVD-CWE-Other, ...) is dropped.
pub fn parse_nvd_feed(text: &str) -> Result<(Vec<CveRecord>, usize)> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::FeedDocument(e.to_string()))?;
    let items = doc
        .get("CVE_Items")
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::FeedDocument("missing CVE_Items array".into()))?;

    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let mut skipped = 0usize;
    for (idx, raw) in items.iter().enumerate() {
        let item: FeedItem = serde_json::from_value(raw.clone()).map_err(|e| Error::Feed {
            item: idx,
            msg: e.to_string(),
        })?;
        let id = item.cve.meta.id;
        if !valid_cve_id(&id) {
            return Err(Error::Feed {
                item: idx,
                msg: format!("malformed CVE id {id:?}"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateCve(id));
        }
        let score = item
            .impact
            .and_then(|i| i.base_metric_v3)
            .and_then(|m| m.cvss_v3)
            .map(|c| c.base_score);
        let Some(base_score) = score else {
            skipped += 1;
            continue;
        };
        if !(0.0..=10.0).contains(&base_score) {
            return Err(Error::Feed {
                item: idx,
                msg: format!("base score {base_score} outside [0, 10]"),
            });
        }
        let mut cwe_ids = BTreeSet::new();
        if let Some(pt) = item.cve.problemtype {
            for entry in pt.problemtype_data {
                for desc in entry.description {
                    if let Some(n) = desc.value.strip_prefix("CWE-") {
                        if let Ok(n) = n.parse::<u32>() {
                            cwe_ids.insert(n);
                        }
                    }
                }
            }
        }
        records.push(CveRecord {
            cve_id: id,
            base_score,
            cwe_ids,
        });
    }
    Ok((records, skipped))
}

/// Merges records from several feeds; a CVE id appearing twice is an error.
pub fn merge_records(batches: Vec<Vec<CveRecord>>) -> Result<Vec<CveRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for batch in batches {
        for rec in batch {
            if !seen.insert(rec.cve_id.clone()) {
                return Err(Error::DuplicateCve(rec.cve_id));
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Keeps the records whose CVE id year equals `year`.
pub fn filter_year(
    records: Vec<CveRecord>,
    year: u16,
    source_label: &str,
    cutoff_date: &str,
) -> Dataset {
    Dataset {
        records: records
            .into_iter()
            .filter(|r| cve_year(&r.cve_id) == Some(year))
            .collect(),
        source_label: source_label.to_string(),
        cutoff_date: cutoff_date.to_string(),
    }
}

/// Serializes a dataset: one `#` metadata comment line, then one JSON record
/// per line. `extra` fields are merged into the metadata object.
pub fn write_dataset(ds: &Dataset, extra: &serde_json::Map<String, serde_json::Value>) -> String {
    let mut meta = extra.clone();
    meta.insert("source_label".into(), ds.source_label.clone().into());
    meta.insert("cutoff_date".into(), ds.cutoff_date.clone().into());
    let mut out = format!("# {}\n", serde_json::Value::Object(meta));
    for rec in &ds.records {
        out.push_str(&serde_json::to_string(rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses the normalized dataset format produced by [`write_dataset`].
pub fn read_dataset(text: &str) -> Result<Dataset> {
    let mut source_label = String::new();
    let mut cutoff_date = String::new();
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if records.is_empty() && source_label.is_empty() && cutoff_date.is_empty() {
                if let Ok(serde_json::Value::Object(meta)) = serde_json::from_str(comment.trim()) {
                    if let Some(s) = meta.get("source_label").and_then(|v| v.as_str()) {
                        source_label = s.to_string();
                    }
                    if let Some(s) = meta.get("cutoff_date").and_then(|v| v.as_str()) {
                        cutoff_date = s.to_string();
                    }
                }
            }
            continue;
        }
        let rec: CveRecord = serde_json::from_str(line).map_err(|e| Error::Dataset {
            line: line_no,
            msg: e.to_string(),
        })?;
        if !valid_cve_id(&rec.cve_id) {
            return Err(Error::Dataset {
                line: line_no,
                msg: format!("malformed CVE id {:?}", rec.cve_id),
            });
        }
        if !(0.0..=10.0).contains(&rec.base_score) {
            return Err(Error::Dataset {
                line: line_no,
                msg: format!("base score {} outside [0, 10]", rec.base_score),
            });
        }
        if !seen.insert(rec.cve_id.clone()) {
            return Err(Error::DuplicateCve(rec.cve_id));
        }
        records.push(rec);
    }
    Ok(Dataset {
        records,
        source_label,
        cutoff_date,
    })
}

pub fn load_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Abstraction {
    Pillar,
    Class,
    Base,
    Variant,
    Compound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub id: u32,
    pub name: String,
    pub abstraction: Abstraction,
    pub in_view_1003: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEdge {
    pub child: u32,
    pub parent: u32,
    pub view: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyDocument {
    pub nodes: Vec<TaxonomyNode>,
    pub edges: Vec<TaxonomyEdge>,
}

/// Parses and validates a taxonomy document: unique node ids, edge endpoints
/// present, and acyclicity within every view.
/// Leading `#` lines are skipped, so exports written by this tool parse as-is.
pub fn load_taxonomy(text: &str) -> Result<TaxonomyDocument> {
    let body: String = text
        .lines()
        .skip_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    let doc: TaxonomyDocument =
        serde_json::from_str(&body).map_err(|e| Error::Taxonomy(e.to_string()))?;
    validate_taxonomy(&doc)?;
    Ok(doc)
}

pub fn load_taxonomy_file(path: &Path) -> Result<TaxonomyDocument> {
    load_taxonomy(&std::fs::read_to_string(path)?)
}

pub fn validate_taxonomy(doc: &TaxonomyDocument) -> Result<()> {
    let mut ids = BTreeSet::new();
    for node in &doc.nodes {
        if !ids.insert(node.id) {
            return Err(Error::Taxonomy(format!("duplicate node id {}", node.id)));
        }
    }
    let mut views = BTreeSet::new();
    for edge in &doc.edges {
        for end in [edge.child, edge.parent] {
            if !ids.contains(&end) {
                return Err(Error::Taxonomy(format!(
                    "edge {} -> {} (view {}) references unknown node {end}",
                    edge.child, edge.parent, edge.view
                )));
            }
        }
        views.insert(edge.view);
    }
    for &view in &views {
        check_view_acyclic(doc, view)?;
    }
    Ok(())
}

fn check_view_acyclic(doc: &TaxonomyDocument, view: u32) -> Result<()> {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for e in doc.edges.iter().filter(|e| e.view == view) {
        adj.entry(e.child).or_default().push(e.parent);
    }
    // Iterative DFS with an explicit on-stack set; reports the cycle path.
    let mut state: BTreeMap<u32, u8> = BTreeMap::new(); // 1 = on stack, 2 = done
    for &start in adj.keys() {
        if state.get(&start).copied() == Some(2) {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        let mut path = vec![start];
        state.insert(start, 1);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let parents = adj.get(&node).map(|v| v.as_slice()).unwrap_or(&[]);
            if *next >= parents.len() {
                state.insert(node, 2);
                stack.pop();
                path.pop();
                continue;
            }
            let parent = parents[*next];
            *next += 1;
            match state.get(&parent).copied() {
                Some(1) => {
                    let pos = path.iter().position(|&n| n == parent).unwrap_or(0);
                    let mut cycle = path[pos..].to_vec();
                    cycle.push(parent);
                    return Err(Error::Cycle { view, path: cycle });
                }
                Some(2) => {}
                _ => {
                    state.insert(parent, 1);
                    stack.push((parent, 0));
                    path.push(parent);
                }
            }
        }
    }
    Ok(())
}
