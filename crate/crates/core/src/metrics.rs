//! Per-CWE aggregation and the two scoring equations.
//!
//! MDSE: min-max normalized frequency times min-max normalized mean severity,
//! where the severity normalization is anchored to per-CVE score extremes
//! (reproducing that equation's compressed-range behavior by design).
//! MSSW: double-log dampened frequency times mean severity normalized over
//! the per-CWE means of the scope.

use std::collections::BTreeSet;

use crate::ingest::Dataset;
use crate::taxonomy::PropagationMap;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeaknessAggregate {
    pub cwe_id: u32,
    pub n: u64,
    pub mean_severity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringContext {
    pub k: Option<f64>,
    pub min_n: u64,
    pub max_n: u64,
    pub min_cvss: Option<f64>,
    pub max_cvss: Option<f64>,
    pub min_mean: Option<f64>,
    pub max_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub cwe_id: u32,
    pub n: u64,
    pub mean_severity: Option<f64>,
    pub f: Option<f64>,
    pub s: Option<f64>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub s1: Option<f64>,
    pub mdse: f64,
    pub mssw: f64,
}

impl ScoreRow {
    fn unscored(agg: &WeaknessAggregate) -> Self {
        Self {
            cwe_id: agg.cwe_id,
            n: agg.n,
            mean_severity: agg.mean_severity,
            f: None,
            s: None,
            f1: None,
            f2: None,
            s1: None,
            mdse: 0.0,
            mssw: 0.0,
        }
    }
}

/// One aggregate per scope member (members without assignments get n = 0).
/// Every CVE referenced by the propagation map must exist in the dataset.
pub fn aggregate(
    pmap: &PropagationMap,
    dataset: &Dataset,
    scope: &BTreeSet<u32>,
) -> Result<Vec<WeaknessAggregate>> {
    let scores = dataset.score_index();
    for cves in pmap.assignments.values() {
        for cve in cves {
            if !scores.contains_key(cve.as_str()) {
                return Err(Error::MissingCve(cve.clone()));
            }
        }
    }
    let empty = BTreeSet::new();
    Ok(scope
        .iter()
        .map(|&cwe_id| {
            let cves = pmap.assignments.get(&cwe_id).unwrap_or(&empty);
            let n = cves.len() as u64;
            let mean_severity = (n > 0).then(|| {
                let sum: f64 = cves.iter().map(|c| scores[c.as_str()]).sum();
                (sum / n as f64).clamp(0.0, 10.0)
            });
            WeaknessAggregate {
                cwe_id,
                n,
                mean_severity,
            }
        })
        .collect())
}

fn positive_n_extremes(aggregates: &[WeaknessAggregate]) -> Result<(u64, u64)> {
    let mut it = aggregates.iter().filter(|a| a.n >= 1).map(|a| a.n);
    let first = it
        .next()
        .ok_or_else(|| Error::Degenerate("no scored CWEs in scope".into()))?;
    let (min_n, max_n) = it.fold((first, first), |(lo, hi), n| (lo.min(n), hi.max(n)));
    Ok((min_n, max_n))
}

/// Min-max product scores. Frequency extremes come from the scope's scored
/// rows; severity extremes from every CVE in the dataset.
pub fn mdse_scores(
    aggregates: &[WeaknessAggregate],
    dataset: &Dataset,
) -> Result<(ScoringContext, Vec<ScoreRow>)> {
    let (min_n, max_n) = positive_n_extremes(aggregates)?;
    if min_n == max_n {
        return Err(Error::Degenerate(format!(
            "degenerate frequency scope: all scored CWEs share n = {max_n}"
        )));
    }
    let mut cvss = dataset.records.iter().map(|r| r.base_score);
    let first = cvss
        .next()
        .ok_or_else(|| Error::Degenerate("dataset has no CVEs".into()))?;
    let (min_cvss, max_cvss) = cvss.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s)));
    if min_cvss == max_cvss {
        return Err(Error::Degenerate(format!(
            "degenerate severity range: all CVEs share base score {max_cvss}"
        )));
    }
    let rows = aggregates
        .iter()
        .map(|agg| {
            let mut row = ScoreRow::unscored(agg);
            if agg.n == 0 {
                row.f = Some(0.0);
                return row;
            }
            let f = (agg.n - min_n) as f64 / (max_n - min_n) as f64;
            let mean = agg.mean_severity.expect("n >= 1 rows carry a mean");
            let s = ((mean - min_cvss) / (max_cvss - min_cvss)).clamp(0.0, 1.0);
            row.f = Some(f);
            row.s = Some(s);
            row.mdse = f * s * 100.0;
            row
        })
        .collect();
    let context = ScoringContext {
        k: None,
        min_n,
        max_n,
        min_cvss: Some(min_cvss),
        max_cvss: Some(max_cvss),
        min_mean: None,
        max_mean: None,
    };
    Ok((context, rows))
}

/// Double-log weighted scores. Means are normalized over the scope's scored
/// rows; the frequency factor is ln(ln n) scaled so the scope maximum lands
/// exactly at 1.
pub fn mssw_scores(aggregates: &[WeaknessAggregate]) -> Result<(ScoringContext, Vec<ScoreRow>)> {
    let (min_n, max_n) = positive_n_extremes(aggregates)?;
    if max_n < 3 {
        return Err(Error::Degenerate(format!(
            "double-log undefined: max frequency {max_n} < 3"
        )));
    }
    let mut means = aggregates
        .iter()
        .filter(|a| a.n >= 1)
        .map(|a| a.mean_severity.expect("n >= 1 rows carry a mean"));
    let first = means.next().expect("scope has scored rows");
    let (min_mean, max_mean) = means.fold((first, first), |(lo, hi), m| (lo.min(m), hi.max(m)));
    if min_mean == max_mean {
        return Err(Error::Degenerate(format!(
            "degenerate mean-severity range: all scored CWEs share mean {max_mean}"
        )));
    }
    let denom = (max_n as f64).ln().ln();
    let rows = aggregates
        .iter()
        .map(|agg| {
            let mut row = ScoreRow::unscored(agg);
            let f1 = if agg.n >= 1 { (agg.n as f64).ln() } else { 0.0 };
            let f2 = if f1 >= 1.0 {
                (f1.ln() / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            row.f1 = Some(f1);
            row.f2 = Some(f2);
            if agg.n >= 1 {
                let mean = agg.mean_severity.expect("n >= 1 rows carry a mean");
                let s1 = ((mean - min_mean) / (max_mean - min_mean)).clamp(0.0, 1.0);
                row.s1 = Some(s1);
                row.mssw = f2 * s1 * 100.0;
            }
            row
        })
        .collect();
    let context = ScoringContext {
        k: Some(1.0 / denom),
        min_n,
        max_n,
        min_cvss: None,
        max_cvss: None,
        min_mean: Some(min_mean),
        max_mean: Some(max_mean),
    };
    Ok((context, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub frequency: Vec<f64>,
    pub log: Vec<f64>,
    pub double_log: Vec<f64>,
}

fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::Degenerate(
            "zero range: series values are all equal".into(),
        ));
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// The three sorted, independently normalized series: raw frequency, log
/// frequency, double-log frequency. The zero branches (ln n for n >= 1,
/// ln ln n for ln n >= 1) apply before normalization.
pub fn frequency_transform_series(n_values: &[u64]) -> Result<FrequencySeries> {
    if n_values.is_empty() {
        return Err(Error::Empty("frequency series input is empty".into()));
    }
    let max = *n_values.iter().max().expect("non-empty");
    if max < 3 {
        return Err(Error::Degenerate(format!(
            "double-log undefined: max frequency {max} < 3"
        )));
    }
    let mut sorted = n_values.to_vec();
    sorted.sort_unstable();
    let raw: Vec<f64> = sorted.iter().map(|&n| n as f64).collect();
    let logs: Vec<f64> = sorted
        .iter()
        .map(|&n| if n >= 1 { (n as f64).ln() } else { 0.0 })
        .collect();
    let double_logs: Vec<f64> = logs
        .iter()
        .map(|&f1| if f1 >= 1.0 { f1.ln() } else { 0.0 })
        .collect();
    Ok(FrequencySeries {
        frequency: min_max_normalize(&raw)?,
        log: min_max_normalize(&logs)?,
        double_log: min_max_normalize(&double_logs)?,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_aggregates() -> impl Strategy<Value = Vec<WeaknessAggregate>> {
        proptest::collection::vec((0u64..5000, 0.0f64..=10.0), 2..40).prop_map(|pairs| {
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (n, mean))| WeaknessAggregate {
                    cwe_id: i as u32 + 1,
                    n,
                    mean_severity: (n > 0).then_some(mean),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn mssw_rows_stay_in_range(aggs in arb_aggregates()) {
            if let Ok((_, rows)) = mssw_scores(&aggs) {
                for row in rows {
                    prop_assert!((0.0..=100.0).contains(&row.mssw));
                    prop_assert!((0.0..=1.0).contains(&row.f2.unwrap()));
                    if let Some(s1) = row.s1 {
                        prop_assert!((0.0..=1.0).contains(&s1));
                    }
                }
            }
        }

        #[test]
        fn mdse_rows_stay_in_range(aggs in arb_aggregates(), lo in 0.0f64..5.0, hi in 5.1f64..10.0) {
            let ds = Dataset {
                records: vec![
                    crate::ingest::CveRecord { cve_id: "CVE-2019-1".into(), base_score: lo, cwe_ids: Default::default() },
                    crate::ingest::CveRecord { cve_id: "CVE-2019-2".into(), base_score: hi, cwe_ids: Default::default() },
                ],
                source_label: String::new(),
                cutoff_date: String::new(),
            };
            if let Ok((_, rows)) = mdse_scores(&aggs, &ds) {
                for row in rows {
                    prop_assert!((0.0..=100.0).contains(&row.mdse));
                    prop_assert!((0.0..=1.0).contains(&row.f.unwrap()));
                }
            }
        }

        #[test]
        fn f2_is_monotone_in_n(ns in proptest::collection::btree_set(1u64..100000, 2..50)) {
            let ns: Vec<u64> = ns.into_iter().collect();
            prop_assume!(*ns.iter().max().unwrap() >= 3);
            let aggs: Vec<WeaknessAggregate> = ns.iter().enumerate().map(|(i, &n)| WeaknessAggregate {
                cwe_id: i as u32 + 1,
                n,
                mean_severity: Some(5.0 + (i % 2) as f64),
            }).collect();
            let (_, rows) = mssw_scores(&aggs).unwrap();
            // aggregates were built in ascending n order
            for w in rows.windows(2) {
                prop_assert!(w[0].f2.unwrap() <= w[1].f2.unwrap());
            }
        }

        #[test]
        fn scores_are_permutation_invariant(aggs in arb_aggregates(), rot in 0usize..40) {
            let mut rotated = aggs.clone();
            let rot = rot % rotated.len().max(1);
            rotated.rotate_left(rot);
            match (mssw_scores(&aggs), mssw_scores(&rotated)) {
                (Ok((_, a)), Ok((_, b))) => {
                    for row in &a {
                        let twin = b.iter().find(|r| r.cwe_id == row.cwe_id).unwrap();
                        prop_assert_eq!(row.mssw, twin.mssw);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one ordering scored, the other errored"),
            }
        }

        #[test]
        fn mssw_depends_only_on_n_and_mean(aggs in arb_aggregates(), offset in 1u32..999) {
            let relabeled: Vec<WeaknessAggregate> = aggs.iter().map(|a| WeaknessAggregate {
                cwe_id: a.cwe_id + offset,
                ..a.clone()
            }).collect();
            match (mssw_scores(&aggs), mssw_scores(&relabeled)) {
                (Ok((_, a)), Ok((_, b))) => {
                    for (ra, rb) in a.iter().zip(&b) {
                        prop_assert_eq!(ra.mssw, rb.mssw);
                        prop_assert_eq!(ra.cwe_id + offset, rb.cwe_id);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "relabeling changed scorability"),
            }
        }

        #[test]
        fn s1_is_translation_invariant(aggs in arb_aggregates(), shift in -2.0f64..2.0) {
            let shifted: Vec<WeaknessAggregate> = aggs.iter().map(|a| WeaknessAggregate {
                cwe_id: a.cwe_id,
                n: a.n,
                mean_severity: a.mean_severity.map(|m| m + shift),
            }).collect();
            if let (Ok((_, a)), Ok((_, b))) = (mssw_scores(&aggs), mssw_scores(&shifted)) {
                for (ra, rb) in a.iter().zip(&b) {
                    match (ra.s1, rb.s1) {
                        (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                        (None, None) => {}
                        _ => prop_assert!(false, "s1 presence changed under shift"),
                    }
                }
            }
        }

        #[test]
        fn removing_a_non_extreme_row_keeps_other_scores(aggs in arb_aggregates()) {
            let Ok((ctx, rows)) = mssw_scores(&aggs) else { return Ok(()); };
            let removable = aggs.iter().position(|a| {
                a.n >= 1
                    && a.n != ctx.max_n
                    && a.mean_severity != ctx.min_mean
                    && a.mean_severity != ctx.max_mean
            });
            let Some(idx) = removable else { return Ok(()); };
            let mut pruned = aggs.clone();
            pruned.remove(idx);
            let Ok((_, rows2)) = mssw_scores(&pruned) else {
                return Err(TestCaseError::fail("pruned scope became degenerate"));
            };
            for row in &rows2 {
                let orig = rows.iter().find(|r| r.cwe_id == row.cwe_id).unwrap();
                prop_assert_eq!(row.mssw, orig.mssw);
            }
        }
    }
}
