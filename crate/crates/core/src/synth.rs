//! Seed-fixed synthetic population: a two-level taxonomy with power-law leaf
//! frequencies and independent uniform mean severities, for bias experiments
//! that need a full pipeline but no external data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{Abstraction, CveRecord, Dataset, TaxonomyDocument, TaxonomyEdge, TaxonomyNode};

pub const DEFAULT_SEED: u64 = 27;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_parents: u32,
    pub n_leaves: u32,
    pub head: f64,
    pub offset: f64,
    pub exponent: f64,
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub jitter: f64,
    pub year: u16,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            n_parents: 14,
            n_leaves: 110,
            head: 1500.0,
            offset: 2.0,
            exponent: 1.6,
            mean_lo: 6.7,
            mean_hi: 8.3,
            jitter: 2.0,
            year: 2019,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub dataset: Dataset,
    pub taxonomy: TaxonomyDocument,
}

/// Leaf at 1-based rank r draws max(1, round(A / (r + offset)^exponent))
/// records, with A scaled so rank 1 lands on `head`.
pub fn leaf_frequency(config: &SynthConfig, rank: u32) -> u64 {
    let a = config.head * (1.0 + config.offset).powf(config.exponent);
    let n = a / (rank as f64 + config.offset).powf(config.exponent);
    (n.round() as u64).max(1)
}

pub fn generate(config: &SynthConfig) -> SynthWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();
    let mut seq: u32 = 10_000;
    let mut draw_node = |rng: &mut ChaCha8Rng, cwe_id: u32, count: u64, records: &mut Vec<CveRecord>| {
        let mean = rng.gen_range(config.mean_lo..config.mean_hi);
        for _ in 0..count {
            let off = rng.gen_range(-config.jitter..config.jitter);
            records.push(CveRecord {
                cve_id: format!("CVE-{}-{seq}", config.year),
                base_score: (mean + off).clamp(0.0, 10.0),
                cwe_ids: [cwe_id].into(),
            });
            seq += 1;
        }
    };
    for i in 0..config.n_leaves {
        draw_node(&mut rng, 1000 + i, leaf_frequency(config, i + 1), &mut records);
    }
    for p in 0..config.n_parents {
        draw_node(&mut rng, 100 + p, 1 + (p as u64 % 4), &mut records);
    }

    let mut nodes: Vec<TaxonomyNode> = (0..config.n_parents)
        .map(|p| TaxonomyNode {
            id: 100 + p,
            name: format!("Synthetic Class {p}"),
            abstraction: Abstraction::Class,
            in_view_1003: true,
        })
        .collect();
    nodes.extend((0..config.n_leaves).map(|i| TaxonomyNode {
        id: 1000 + i,
        name: format!("Synthetic Base {i}"),
        abstraction: Abstraction::Base,
        in_view_1003: true,
    }));
    let edges = (0..config.n_leaves)
        .map(|i| TaxonomyEdge {
            child: 1000 + i,
            parent: 100 + (i % config.n_parents.max(1)),
            view: 1000,
        })
        .collect();

    SynthWorld {
        dataset: Dataset {
            records,
            source_label: "synthetic".into(),
            cutoff_date: format!("{}-12-31", config.year),
        },
        taxonomy: TaxonomyDocument { nodes, edges },
    }
}
