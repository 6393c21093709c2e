//! Shared fixtures for the test suites: a miniature feed, a trimmed taxonomy
//! export, frozen reference rankings, and small fitting helpers.

use crate::ingest::{
    self, CveRecord, Dataset, TaxonomyDocument, TaxonomyEdge, TaxonomyNode,
};
use crate::taxonomy::TaxonomyGraph;

pub const FEED_FIXTURE: &str = include_str!("../fixtures/nvd_feed_small.json");
pub const TAXONOMY_FIXTURE: &str = include_str!("../fixtures/taxonomy_1003.json");

/// (cwe_id, reference score, n, mean CVSS): the frozen 2019 class-level
/// ranking snapshot, scored over propagated frequencies with max_n = 3960.
pub const CLASS_REFERENCE: [(u32, f64, u64, f64); 20] = [
    (913, 78.31, 188, 8.81),
    (119, 71.14, 2745, 8.00),
    (669, 64.86, 181, 8.31),
    (672, 64.56, 876, 7.96),
    (330, 63.74, 111, 8.43),
    (704, 62.55, 54, 8.68),
    (287, 59.75, 627, 7.86),
    (345, 54.60, 483, 7.73),
    (682, 51.94, 215, 7.78),
    (269, 50.57, 258, 7.70),
    (610, 48.38, 725, 7.46),
    (706, 39.04, 358, 7.23),
    (20, 38.56, 3960, 6.99),
    (116, 32.13, 2461, 6.82),
    (400, 32.07, 272, 7.01),
    (74, 32.06, 2455, 6.82),
    (754, 32.05, 264, 7.01),
    (326, 28.21, 35, 7.24),
    (668, 26.59, 2292, 6.66),
    (436, 22.40, 17, 7.19),
];

/// Same shape for the frozen 2019 base-level ranking; its scope's max_n is
/// 658 (CWE-125).
pub const BASE_REFERENCE: [(u32, f64, u64, f64); 20] = [
    (89, 71.70, 384, 8.89),
    (502, 61.73, 83, 9.01),
    (787, 61.57, 423, 8.34),
    (78, 61.22, 194, 8.58),
    (120, 59.35, 162, 8.55),
    (94, 58.62, 100, 8.72),
    (798, 58.07, 89, 8.75),
    (434, 57.95, 167, 8.46),
    (416, 56.69, 426, 8.09),
    (352, 51.60, 386, 7.86),
    (346, 51.51, 430, 7.82),
    (613, 51.08, 402, 7.82),
    (190, 48.79, 164, 7.95),
    (415, 43.17, 46, 8.15),
    (125, 42.34, 658, 7.28),
    (129, 41.97, 25, 8.50),
    (611, 41.47, 100, 7.69),
    (918, 41.05, 74, 7.78),
    (22, 39.40, 309, 7.27),
    (191, 37.76, 18, 8.47),
];

pub fn taxonomy_fixture_graph() -> TaxonomyGraph {
    TaxonomyGraph::from_document(&ingest::load_taxonomy(TAXONOMY_FIXTURE).expect("fixture parses"))
        .expect("fixture validates")
}

fn push_records(records: &mut Vec<CveRecord>, seq: &mut u32, cwe: u32, score: f64, count: u64) {
    for _ in 0..count {
        records.push(CveRecord {
            cve_id: format!("CVE-2019-{}", 20_000 + *seq),
            base_score: score,
            cwe_ids: [cwe].into(),
        });
        *seq += 1;
    }
}

/// Dataset that reproduces the class reference ranking exactly: every listed
/// CWE gets n records at its mean, plus a small low-severity pillar (CWE-697)
/// pinning the bottom of the mean range at 5.8434.
pub fn class_fixture() -> (Dataset, TaxonomyGraph) {
    let graph = taxonomy_fixture_graph();
    let mut records = Vec::new();
    let mut seq = 0u32;
    for (cwe, _, n, mean) in CLASS_REFERENCE {
        push_records(&mut records, &mut seq, cwe, mean, n);
    }
    push_records(&mut records, &mut seq, 697, 5.8434, 3);
    let dataset = Dataset {
        records,
        source_label: "class-fixture".into(),
        cutoff_date: "2019-12-31".into(),
    };
    (dataset, graph)
}

/// Hand-sized two-level world where every partition has scored CWEs and a
/// non-constant score vector under both propagation settings: three classes
/// with direct records, four bases beneath them.
pub fn two_level_fixture() -> (Dataset, TaxonomyGraph) {
    let node = |id: u32, name: &str, abstraction: ingest::Abstraction| TaxonomyNode {
        id,
        name: name.into(),
        abstraction,
        in_view_1003: true,
    };
    let doc = TaxonomyDocument {
        nodes: vec![
            node(100, "Mini Class A", ingest::Abstraction::Class),
            node(101, "Mini Class B", ingest::Abstraction::Class),
            node(102, "Mini Class C", ingest::Abstraction::Class),
            node(1000, "Mini Base A1", ingest::Abstraction::Base),
            node(1001, "Mini Base A2", ingest::Abstraction::Base),
            node(1002, "Mini Base B1", ingest::Abstraction::Base),
            node(1003, "Mini Base C1", ingest::Abstraction::Base),
        ],
        edges: vec![
            TaxonomyEdge { child: 1000, parent: 100, view: 1000 },
            TaxonomyEdge { child: 1001, parent: 100, view: 1000 },
            TaxonomyEdge { child: 1002, parent: 101, view: 1000 },
            TaxonomyEdge { child: 1003, parent: 102, view: 1000 },
        ],
    };
    let graph = TaxonomyGraph::from_document(&doc).expect("fixture validates");
    let mut records = Vec::new();
    let mut seq = 0u32;
    let spread = |base: f64, count: u64| -> Vec<f64> {
        (0..count).map(|i| base + 0.2 * i as f64).collect()
    };
    for (cwe, scores) in [
        (1000, spread(4.0, 4)),
        (1001, vec![9.0]),
        (1002, spread(5.0, 8)),
        (1003, spread(5.5, 6)),
        (100, spread(7.0, 2)),
        (101, spread(6.0, 5)),
        (102, spread(8.0, 4)),
    ] {
        for score in scores {
            push_records(&mut records, &mut seq, cwe, score, 1);
        }
    }
    let dataset = Dataset {
        records,
        source_label: "two-level-fixture".into(),
        cutoff_date: "2019-12-31".into(),
    };
    (dataset, graph)
}

/// Random small world for propagation oracle checks: a DAG of at most 12
/// nodes (edges always point from lower to higher id, so acyclic by
/// construction) and at most 20 records, some mapped to an id the taxonomy
/// does not know.
pub fn random_world(seed: u64) -> (Dataset, TaxonomyDocument) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_nodes: u32 = rng.gen_range(2..=12);
    let abstractions = [
        ingest::Abstraction::Pillar,
        ingest::Abstraction::Class,
        ingest::Abstraction::Base,
        ingest::Abstraction::Variant,
        ingest::Abstraction::Compound,
    ];
    let nodes: Vec<TaxonomyNode> = (1..=n_nodes)
        .map(|id| TaxonomyNode {
            id,
            name: format!("Node {id}"),
            abstraction: abstractions[rng.gen_range(0..abstractions.len())],
            in_view_1003: rng.gen_bool(0.8),
        })
        .collect();
    let mut edges = Vec::new();
    for child in 1..=n_nodes {
        for parent in (child + 1)..=n_nodes {
            if rng.gen_bool(0.25) {
                edges.push(TaxonomyEdge {
                    child,
                    parent,
                    view: if rng.gen_bool(0.7) { 1000 } else { 1008 },
                });
            }
        }
    }
    let n_cves = rng.gen_range(1..=20);
    let records = (0..n_cves)
        .map(|i| {
            let n_maps = rng.gen_range(1..=3usize);
            let mut cwe_ids = std::collections::BTreeSet::new();
            for _ in 0..n_maps {
                if rng.gen_bool(0.1) {
                    cwe_ids.insert(99_999);
                } else {
                    cwe_ids.insert(rng.gen_range(1..=n_nodes));
                }
            }
            CveRecord {
                cve_id: format!("CVE-2019-{}", 30_000 + i),
                base_score: (rng.gen_range(0.0..=10.0f64) * 10.0).round() / 10.0,
                cwe_ids,
            }
        })
        .collect();
    (
        Dataset {
            records,
            source_label: format!("random-{seed}"),
            cutoff_date: "2019-12-31".into(),
        },
        TaxonomyDocument { nodes, edges },
    )
}

/// Deliberately naive reference for propagation: answers every (record, node)
/// pair with a fresh walk over the raw edge list, no adjacency index, no
/// closure cache. Unknown mapped ids are skipped, matching the pipeline's
/// warn-and-skip behavior.
pub fn naive_assignments(
    dataset: &Dataset,
    doc: &TaxonomyDocument,
    views: &std::collections::BTreeSet<u32>,
    enabled: bool,
) -> std::collections::BTreeMap<u32, std::collections::BTreeSet<String>> {
    let known: std::collections::BTreeSet<u32> = doc.nodes.iter().map(|n| n.id).collect();
    fn reaches(
        doc: &TaxonomyDocument,
        views: &std::collections::BTreeSet<u32>,
        from: u32,
        to: u32,
        visited: &mut std::collections::BTreeSet<u32>,
    ) -> bool {
        if from == to {
            return true;
        }
        if !visited.insert(from) {
            return false;
        }
        doc.edges.iter().any(|e| {
            e.child == from
                && views.contains(&e.view)
                && reaches(doc, views, e.parent, to, visited)
        })
    }
    let mut out: std::collections::BTreeMap<u32, std::collections::BTreeSet<String>> =
        Default::default();
    for rec in &dataset.records {
        for node in &doc.nodes {
            let hit = rec.cwe_ids.iter().any(|&mapped| {
                known.contains(&mapped)
                    && (mapped == node.id
                        || (enabled
                            && reaches(doc, views, mapped, node.id, &mut Default::default())))
            });
            if hit {
                out.entry(node.id).or_default().insert(rec.cve_id.clone());
            }
        }
    }
    out
}

/// Least-squares line fit; returns (slope, intercept).
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

/// Coefficient of determination of the least-squares line through
/// (0, ys[0]), (1, ys[1]), ...
pub fn linear_r_squared(ys: &[f64]) -> f64 {
    let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
    let (slope, intercept) = affine_fit(&xs, ys);
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let fit = slope * x + intercept;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    if ss_tot == 0.0 {
        return 1.0;
    }
    1.0 - ss_res / ss_tot
}
