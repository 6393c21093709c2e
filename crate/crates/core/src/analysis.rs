//! Rankings, set-difference curves, the correlation table, risk-map exports,
//! and their CSV renderers.

use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::Dataset;
use crate::metrics::{self, FrequencySeries, ScoreRow};
use crate::taxonomy::{self, AbstractionPartition, TaxonomyGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Mdse,
    Mssw,
}

impl Equation {
    pub fn label(self) -> &'static str {
        match self {
            Equation::Mdse => "MDSE",
            Equation::Mssw => "MSSW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMetric {
    Mdse,
    Mssw,
    FrequencyOnly,
    SeverityOnly,
}

impl RankMetric {
    pub fn label(self) -> &'static str {
        match self {
            RankMetric::Mdse => "MDSE",
            RankMetric::Mssw => "MSSW",
            RankMetric::FrequencyOnly => "FrequencyOnly",
            RankMetric::SeverityOnly => "SeverityOnly",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    pub metric: RankMetric,
    pub partition: AbstractionPartition,
    pub propagation: bool,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub rank: usize,
    pub cwe_id: u32,
    pub name: String,
    pub score: f64,
    pub n: u64,
    pub mean_severity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub config: RankConfig,
    pub entries: Vec<RankedEntry>,
}

fn metric_score(row: &ScoreRow, metric: RankMetric) -> f64 {
    match metric {
        RankMetric::Mdse => row.mdse,
        RankMetric::Mssw => row.mssw,
        RankMetric::FrequencyOnly => row.n as f64,
        RankMetric::SeverityOnly => row.mean_severity.unwrap_or(0.0),
    }
}

fn ordered_scored<'a>(rows: &'a [ScoreRow], metric: RankMetric) -> Vec<&'a ScoreRow> {
    let mut scored: Vec<&ScoreRow> = rows.iter().filter(|r| r.n >= 1).collect();
    scored.sort_by(|a, b| {
        metric_score(b, metric)
            .total_cmp(&metric_score(a, metric))
            .then(b.n.cmp(&a.n))
            .then(a.cwe_id.cmp(&b.cwe_id))
    });
    scored
}

/// Top `config.size` rows under the metric. Asking for more rows than the
/// scope has scored CWEs truncates and reports a warning.
pub fn top_list(
    rows: &[ScoreRow],
    config: RankConfig,
    names: &BTreeMap<u32, String>,
) -> (RankedList, Option<String>) {
    let ordered = ordered_scored(rows, config.metric);
    let warning = (config.size > ordered.len()).then(|| {
        format!(
            "requested top {} but only {} CWEs are scored in scope; list truncated",
            config.size,
            ordered.len()
        )
    });
    let entries = ordered
        .iter()
        .take(config.size)
        .enumerate()
        .map(|(i, row)| RankedEntry {
            rank: i + 1,
            cwe_id: row.cwe_id,
            name: names
                .get(&row.cwe_id)
                .cloned()
                .unwrap_or_else(|| format!("CWE-{}", row.cwe_id)),
            score: metric_score(row, config.metric),
            n: row.n,
            mean_severity: row.mean_severity,
        })
        .collect();
    (RankedList { config, entries }, warning)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetDifferencePoint {
    pub s: usize,
    pub diff_vs_frequency: usize,
    pub diff_vs_severity: usize,
    pub theoretical_max: usize,
}

/// For every list size s, how many CWEs the equation's top-s list holds that
/// the frequency-only (resp. severity-only) top-s list does not. Equal-size
/// sets make the difference symmetric.
pub fn set_difference_curve(rows: &[ScoreRow], equation: Equation) -> Vec<SetDifferencePoint> {
    let metric = match equation {
        Equation::Mdse => RankMetric::Mdse,
        Equation::Mssw => RankMetric::Mssw,
    };
    let ids = |m: RankMetric| -> Vec<u32> {
        ordered_scored(rows, m).iter().map(|r| r.cwe_id).collect()
    };
    let eq_ids = ids(metric);
    let freq_ids = ids(RankMetric::FrequencyOnly);
    let sev_ids = ids(RankMetric::SeverityOnly);
    let count = eq_ids.len();
    let mut eq_set = BTreeSet::new();
    let mut freq_set = BTreeSet::new();
    let mut sev_set = BTreeSet::new();
    (1..=count)
        .map(|s| {
            eq_set.insert(eq_ids[s - 1]);
            freq_set.insert(freq_ids[s - 1]);
            sev_set.insert(sev_ids[s - 1]);
            SetDifferencePoint {
                s,
                diff_vs_frequency: eq_set.difference(&freq_set).count(),
                diff_vs_severity: eq_set.difference(&sev_set).count(),
                theoretical_max: s.min(count - s),
            }
        })
        .collect()
}

/// Sample Pearson coefficient, clamped to [-1, 1] against rounding spill.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "correlation needs two equal-length series with at least 2 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::Degenerate(
            "undefined correlation: a series has zero variance".into(),
        ));
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub equation: Equation,
    pub abstraction: AbstractionPartition,
    pub propagation: bool,
    pub corr_frequency: f64,
    pub corr_severity: f64,
}

fn name_config(
    err: Error,
    equation: Equation,
    partition: AbstractionPartition,
    propagation: bool,
) -> Error {
    match err {
        Error::Degenerate(msg) => Error::Degenerate(format!(
            "{} at level {} with propagation {}: {msg}",
            equation.label(),
            partition.label(),
            if propagation { "yes" } else { "no" }
        )),
        other => other,
    }
}

/// The 12 (equation, abstraction, propagation) configurations, each
/// correlating the score vector against raw frequency and mean severity over
/// the scored CWEs of its scope.
pub fn correlation_table(
    dataset: &Dataset,
    graph: &TaxonomyGraph,
    views: &BTreeSet<u32>,
    restrict_to_1003: bool,
) -> Result<(Vec<CorrelationRow>, Vec<String>)> {
    let (with, warnings) = taxonomy::propagate(dataset, graph, views, true);
    let (without, _) = taxonomy::propagate(dataset, graph, views, false);
    let mut out = Vec::with_capacity(12);
    for equation in [Equation::Mdse, Equation::Mssw] {
        for partition in [
            AbstractionPartition::All,
            AbstractionPartition::High,
            AbstractionPartition::Low,
        ] {
            for propagation in [true, false] {
                let pmap = if propagation { &with } else { &without };
                let scope = taxonomy::partition_nodes(graph, partition, restrict_to_1003);
                let aggregates = metrics::aggregate(pmap, dataset, &scope)?;
                let rows = match equation {
                    Equation::Mdse => metrics::mdse_scores(&aggregates, dataset),
                    Equation::Mssw => metrics::mssw_scores(&aggregates),
                }
                .map_err(|e| name_config(e, equation, partition, propagation))?
                .1;
                let scored: Vec<&ScoreRow> = rows.iter().filter(|r| r.n >= 1).collect();
                let scores: Vec<f64> = scored
                    .iter()
                    .map(|r| match equation {
                        Equation::Mdse => r.mdse,
                        Equation::Mssw => r.mssw,
                    })
                    .collect();
                let freqs: Vec<f64> = scored.iter().map(|r| r.n as f64).collect();
                let sevs: Vec<f64> = scored
                    .iter()
                    .map(|r| r.mean_severity.expect("scored rows carry a mean"))
                    .collect();
                let corr_frequency = pearson(&scores, &freqs)
                    .map_err(|e| name_config(e, equation, partition, propagation))?;
                let corr_severity = pearson(&scores, &sevs)
                    .map_err(|e| name_config(e, equation, partition, propagation))?;
                out.push(CorrelationRow {
                    equation,
                    abstraction: partition,
                    propagation,
                    corr_frequency,
                    corr_severity,
                });
            }
        }
    }
    Ok((out, warnings))
}

/// Per-CWE (x, y) pairs: the severity factor against the frequency factor of
/// the chosen equation.
pub fn risk_map_export(rows: &[ScoreRow], equation: Equation) -> Result<Vec<(u32, f64, f64)>> {
    let scored: Vec<&ScoreRow> = rows.iter().filter(|r| r.n >= 1).collect();
    if scored.is_empty() {
        return Err(Error::Empty("no scored CWEs to map".into()));
    }
    scored
        .iter()
        .map(|row| {
            let (x, y) = match equation {
                Equation::Mdse => (row.s, row.f),
                Equation::Mssw => (row.s1, row.f2),
            };
            match (x, y) {
                (Some(x), Some(y)) => Ok((row.cwe_id, x, y)),
                _ => Err(Error::Degenerate(format!(
                    "CWE-{} lacks {} factors; score the rows with that equation first",
                    row.cwe_id,
                    equation.label()
                ))),
            }
        })
        .collect()
}

/// Render-time rounding for published-table comparisons: half away from zero
/// at 2 decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ranked_list_csv(list: &RankedList) -> String {
    let mut out = String::from("rank,cwe_id,name,score,n,mean_severity\n");
    for e in &list.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.rank,
            e.cwe_id,
            csv_field(&e.name),
            fmt2(e.score),
            e.n,
            e.mean_severity.map(fmt2).unwrap_or_default()
        ));
    }
    out
}

pub fn set_difference_csv(points: &[SetDifferencePoint]) -> String {
    let mut out = String::from("s,diff_vs_frequency,diff_vs_severity,theoretical_max\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.s, p.diff_vs_frequency, p.diff_vs_severity, p.theoretical_max
        ));
    }
    out
}

pub fn correlation_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from("equation,abstraction,propagation,corr_frequency,corr_severity\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4}\n",
            r.equation.label(),
            r.abstraction.label(),
            if r.propagation { "yes" } else { "no" },
            r.corr_frequency,
            r.corr_severity
        ));
    }
    out
}

pub fn risk_map_csv(points: &[(u32, f64, f64)]) -> String {
    let mut out = String::from("cwe_id,x,y\n");
    for (cwe_id, x, y) in points {
        out.push_str(&format!("{cwe_id},{x:.6},{y:.6}\n"));
    }
    out
}

pub fn frequency_series_csv(series: &FrequencySeries) -> String {
    let mut out = String::from("index,frequency,log,double_log\n");
    for (i, ((f, l), d)) in series
        .frequency
        .iter()
        .zip(&series.log)
        .zip(&series.double_log)
        .enumerate()
    {
        out.push_str(&format!("{},{f:.6},{l:.6},{d:.6}\n", i + 1));
    }
    out
}
