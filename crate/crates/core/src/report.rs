//! Comparison table over methods and seeds: accuracy and worst-group deltas
//! against the frozen baseline, plus the correction-to-corruption ratio, each
//! as mean (standard deviation) across seeds.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{invalid, validation, Result};
use crate::experiment::Method;
use crate::metrics::{ccr, per_group_accuracy, Ccr, GroupedPrediction, Which};
use crate::outcome::{groups_from_bits, OutcomeRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (n - 1); zero for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedMetrics {
    pub method: String,
    pub seed: u64,
    /// Accuracies in percentage points.
    pub aa: f64,
    pub wga: f64,
    pub aa_delta: f64,
    pub wga_delta: f64,
    pub corrections: usize,
    pub corruptions: usize,
    pub ccr: Ccr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub seeds: Vec<u64>,
    pub aa: Stat,
    pub wga: Stat,
    pub aa_delta: Stat,
    pub wga_delta: Stat,
    /// Over seeds with a defined ratio; `None` if no seed has one.
    pub ccr: Option<Stat>,
    pub ccr_undefined: usize,
}

fn log_identity(log: &[OutcomeRecord]) -> Result<(String, u64)> {
    let first = log.first().ok_or_else(|| invalid("empty outcome log"))?;
    if log.iter().any(|r| r.method != first.method || r.seed != first.seed) {
        return Err(validation("an outcome log must hold a single method and seed"));
    }
    Ok((first.method.clone(), first.seed))
}

fn worst(per: &[Option<f64>]) -> Option<f64> {
    per.iter().flatten().copied().reduce(f64::min)
}

/// Per-(method, seed) metrics. Every log must cover the same sample ids, and
/// at least one log must come from the frozen baseline.
pub fn seed_metrics(logs: &[Vec<OutcomeRecord>], num_groups: usize) -> Result<Vec<SeedMetrics>> {
    let ids_of = |log: &[OutcomeRecord]| log.iter().map(|r| r.sample_id).collect::<BTreeSet<_>>();
    let first = logs.first().ok_or_else(|| invalid("no outcome logs to report"))?;
    let ids = ids_of(first);
    for log in logs {
        let these = ids_of(log);
        if these != ids || these.len() != log.len() {
            return Err(validation("mismatched stream ids across outcome logs"));
        }
    }
    let mut baselines: BTreeMap<u64, BTreeMap<usize, usize>> = BTreeMap::new();
    for log in logs {
        let (method, seed) = log_identity(log)?;
        if method == Method::Baseline.name() {
            baselines
                .entry(seed)
                .or_insert_with(|| log.iter().map(|r| (r.sample_id, r.predicted_label)).collect());
        }
    }
    let fallback_base = baselines
        .values()
        .next()
        .ok_or_else(|| validation("reporting needs a baseline outcome log"))?;

    let mut out = Vec::with_capacity(logs.len());
    for log in logs {
        let (method, seed) = log_identity(log)?;
        let base = baselines.get(&seed).unwrap_or(fallback_base);
        let preds = log
            .iter()
            .map(|r| {
                Ok(GroupedPrediction {
                    true_label: r
                        .true_label
                        .ok_or_else(|| validation(format!("sample {} has no label", r.sample_id)))?,
                    base_pred: base[&r.sample_id],
                    method_pred: r.predicted_label,
                    groups: groups_from_bits(r.group_bits),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let acc = |which| {
            100.0 * preds.iter().filter(|p| match which {
                Which::Base => p.base_pred == p.true_label,
                Which::Method => p.method_pred == p.true_label,
            })
            .count() as f64
                / preds.len() as f64
        };
        let wga = |which| worst(&per_group_accuracy(&preds, which, num_groups)).map(|w| 100.0 * w);
        let (aa, base_aa) = (acc(Which::Method), acc(Which::Base));
        let (wga_m, wga_b) = match (wga(Which::Method), wga(Which::Base)) {
            (Some(m), Some(b)) => (m, b),
            _ => return Err(validation("no sample carries a group")),
        };
        let counts = ccr(&preds)?;
        out.push(SeedMetrics {
            method,
            seed,
            aa,
            wga: wga_m,
            aa_delta: aa - base_aa,
            wga_delta: wga_m - wga_b,
            corrections: counts.corrections,
            corruptions: counts.corruptions,
            ccr: counts.ratio,
        });
    }
    Ok(out)
}

fn method_rank(name: &str) -> (usize, String) {
    let rank = Method::ALL
        .iter()
        .position(|m| m.name() == name)
        .unwrap_or(Method::ALL.len());
    (rank, name.to_string())
}

/// Aggregates seed metrics per method, in canonical table order.
pub fn summarize(per_seed: &[SeedMetrics]) -> Vec<MethodSummary> {
    let mut by_method: BTreeMap<(usize, String), Vec<&SeedMetrics>> = BTreeMap::new();
    for m in per_seed {
        by_method.entry(method_rank(&m.method)).or_default().push(m);
    }
    by_method
        .into_iter()
        .map(|((_, method), rows)| {
            let col = |f: fn(&SeedMetrics) -> f64| -> Stat {
                Stat::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("nonempty group")
            };
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ccr.value()).collect();
            MethodSummary {
                method,
                seeds: rows.iter().map(|r| r.seed).collect(),
                aa: col(|r| r.aa),
                wga: col(|r| r.wga),
                aa_delta: col(|r| r.aa_delta),
                wga_delta: col(|r| r.wga_delta),
                ccr: Stat::of(&ratios),
                ccr_undefined: rows.len() - ratios.len(),
            }
        })
        .collect()
}

/// `.1`-style deviation: the leading zero is dropped below one.
fn fmt_std(std: f64, decimals: usize) -> String {
    let s = format!("{std:.decimals$}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// Signed delta with one decimal, e.g. `+2.9 (.1)`.
pub fn fmt_delta(stat: Stat) -> String {
    let mut m = format!("{:+.1}", stat.mean);
    if m == "-0.0" {
        m = "+0.0".into();
    }
    format!("{m} ({})", fmt_std(stat.std, 1))
}

/// Ratio with two decimals, e.g. `1.21 (.11)`.
pub fn fmt_ratio(stat: Stat) -> String {
    format!("{:.2} ({})", stat.mean, fmt_std(stat.std, 2))
}

fn display_name(method: &str) -> String {
    method
        .parse::<Method>()
        .map(|m| m.display_name().to_string())
        .unwrap_or_else(|_| method.to_string())
}

/// Aligned text table. The baseline row shows absolute accuracies; every
/// other row shows deltas against it.
pub fn render_table(summaries: &[MethodSummary]) -> String {
    let mut rows: Vec<[String; 4]> = vec![[
        "Model".into(),
        "AA".into(),
        "WGA".into(),
        "CCR".into(),
    ]];
    for s in summaries {
        let name = display_name(&s.method);
        if s.method == Method::Baseline.name() {
            rows.push([name, format!("{:.1}", s.aa.mean), format!("{:.1}", s.wga.mean), String::new()]);
            continue;
        }
        let ccr = match (s.ccr, s.ccr_undefined) {
            (Some(c), 0) => fmt_ratio(c),
            (Some(c), u) => format!("{} [{u} undef]", fmt_ratio(c)),
            (None, _) => "undefined".into(),
        };
        rows.push([name, fmt_delta(s.aa_delta), fmt_delta(s.wga_delta), ccr]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// One JSON object per method.
pub fn render_jsonl(summaries: &[MethodSummary]) -> String {
    let mut out = String::new();
    for s in summaries {
        out.push_str(&serde_json::to_string(s).expect("summary serializes"));
        out.push('\n');
    }
    out
}
