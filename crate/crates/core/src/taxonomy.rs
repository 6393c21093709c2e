//! CWE hierarchy graph: ancestor closures, CVE propagation, abstraction partitions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{Abstraction, Dataset, TaxonomyDocument};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub name: String,
    pub abstraction: Abstraction,
    pub in_view_1003: bool,
}

#[derive(Debug, Clone)]
pub struct TaxonomyGraph {
    nodes: BTreeMap<u32, NodeInfo>,
    // id -> view -> parents
    parent_adjacency: BTreeMap<u32, BTreeMap<u32, BTreeSet<u32>>>,
    views: BTreeSet<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbstractionPartition {
    High,
    Low,
    All,
}

impl AbstractionPartition {
    pub fn contains(self, a: Abstraction) -> bool {
        match self {
            AbstractionPartition::High => matches!(a, Abstraction::Pillar | Abstraction::Class),
            AbstractionPartition::Low => matches!(
                a,
                Abstraction::Base | Abstraction::Variant | Abstraction::Compound
            ),
            AbstractionPartition::All => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AbstractionPartition::High => "High",
            AbstractionPartition::Low => "Low",
            AbstractionPartition::All => "All",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagationMap {
    pub assignments: BTreeMap<u32, BTreeSet<String>>,
}

impl TaxonomyGraph {
    pub fn from_document(doc: &TaxonomyDocument) -> Result<Self> {
        crate::ingest::validate_taxonomy(doc)?;
        let nodes = doc
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id,
                    NodeInfo {
                        name: n.name.clone(),
                        abstraction: n.abstraction,
                        in_view_1003: n.in_view_1003,
                    },
                )
            })
            .collect();
        let mut parent_adjacency: BTreeMap<u32, BTreeMap<u32, BTreeSet<u32>>> = BTreeMap::new();
        let mut views = BTreeSet::new();
        for e in &doc.edges {
            parent_adjacency
                .entry(e.child)
                .or_default()
                .entry(e.view)
                .or_default()
                .insert(e.parent);
            views.insert(e.view);
        }
        Ok(Self {
            nodes,
            parent_adjacency,
            views,
        })
    }

    pub fn contains(&self, id: u32) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: u32) -> Option<&NodeInfo> {
        self.nodes.get(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.keys().copied()
    }

    pub fn names(&self) -> BTreeMap<u32, String> {
        self.nodes
            .iter()
            .map(|(&id, info)| (id, info.name.clone()))
            .collect()
    }

    /// Views for which this graph has at least one edge.
    pub fn views_present(&self) -> &BTreeSet<u32> {
        &self.views
    }

    fn parents(&self, id: u32, views: &BTreeSet<u32>) -> BTreeSet<u32> {
        self.parent_adjacency
            .get(&id)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(|(view, _)| views.contains(view))
            .flat_map(|(_, parents)| parents.iter().copied())
            .collect()
    }

    /// Transitive parent closure of `cwe` over the union of `views`,
    /// excluding `cwe` itself.
    pub fn ancestors(&self, cwe: u32, views: &BTreeSet<u32>) -> Result<BTreeSet<u32>> {
        if !self.contains(cwe) {
            return Err(Error::UnknownCwe(cwe));
        }
        let mut out = BTreeSet::new();
        let mut stack: Vec<u32> = self.parents(cwe, views).into_iter().collect();
        while let Some(node) = stack.pop() {
            if out.insert(node) {
                stack.extend(self.parents(node, views));
            }
        }
        out.remove(&cwe);
        Ok(out)
    }
}

/// Assigns each CVE to its directly mapped CWEs and, when `enabled`, to every
/// ancestor along the active views. A CVE reaching a CWE through several
/// descendants counts once. Dataset CWE ids absent from the graph produce
/// warning lines and are skipped.
pub fn propagate(
    dataset: &Dataset,
    graph: &TaxonomyGraph,
    views: &BTreeSet<u32>,
    enabled: bool,
) -> (PropagationMap, Vec<String>) {
    let mut assignments: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut closure_cache: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for rec in &dataset.records {
        for &cwe in &rec.cwe_ids {
            if !graph.contains(cwe) {
                warnings.push(format!("WARN unknown-cwe {cwe} in {}", rec.cve_id));
                continue;
            }
            assignments
                .entry(cwe)
                .or_default()
                .insert(rec.cve_id.clone());
            if enabled {
                let ancestors = closure_cache.entry(cwe).or_insert_with(|| {
                    graph.ancestors(cwe, views).expect("node presence checked")
                });
                for &anc in ancestors.iter() {
                    assignments
                        .entry(anc)
                        .or_default()
                        .insert(rec.cve_id.clone());
                }
            }
        }
    }
    (PropagationMap { assignments }, warnings)
}

/// Node ids whose abstraction falls in the partition, optionally restricted
/// to view-1003 members.
pub fn partition_nodes(
    graph: &TaxonomyGraph,
    partition: AbstractionPartition,
    restrict_to_1003: bool,
) -> BTreeSet<u32> {
    graph
        .node_ids()
        .filter(|&id| {
            let info = graph.node(id).expect("iterating own ids");
            partition.contains(info.abstraction) && (!restrict_to_1003 || info.in_view_1003)
        })
        .collect()
}
