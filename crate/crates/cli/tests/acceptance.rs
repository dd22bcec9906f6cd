//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Criteria 3 and 4 run the full benchmark on the shipped fixture.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use memocl::adapt::{smf_keep, AdaptConfig, AdaptMode, Adapter};
use memocl::augment::{NeighborIndex, WordVectorTable};
use memocl::data::stream;
use memocl::experiment::Method;
use memocl::metrics::{ccr_ratio, Ccr, GroupedPrediction, MetricsReport};
use memocl::model::{entropy, entropy_loss, entropy_loss_and_grad, marginal, Dims, ModelParams, ProbDist};
use memocl::report::{seed_metrics, summarize, MethodSummary};
use memocl::suite::Fixture;
use memocl::tta::hard_vote;
use memocl::Rng;

type Check = Result<String, String>;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/benchmark")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.1?}, limit {limit:?}"))
}

fn gradient() -> Check {
    let start = Instant::now();
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut at_noise = 0;
    let mut coords = 0;
    for &d in &[1, 3, 8] {
        for &c in &[2, 3, 5] {
            for &n in &[1, 4, 16] {
                for rep in 0..2u64 {
                    let mut rng = Rng::new(7000 + 100 * rep + (d * 25 + c * 5 + n) as u64);
                    let params = ModelParams::random(Dims::new(10, d, c).unwrap(), 0.8, &mut rng);
                    let batch: Vec<Vec<usize>> = (0..n)
                        .map(|_| (0..1 + rng.below(6)).map(|_| rng.below(10)).collect())
                        .collect();
                    let (_, grad) = entropy_loss_and_grad(&params, &batch).map_err(|e| e.to_string())?;
                    let mut p = params.clone();
                    for i in 0..p.num_values() {
                        let x = p.get_flat(i);
                        p.set_flat(i, x + 1e-5);
                        let up = entropy_loss(&p, &batch).unwrap();
                        p.set_flat(i, x - 1e-5);
                        let down = entropy_loss(&p, &batch).unwrap();
                        p.set_flat(i, x);
                        let fd = (up - down) / 2e-5;
                        let g = grad.get_flat(i);
                        coords += 1;
                        let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
                        // Misses that are below what the difference quotient can resolve.
                        if err >= 1e-4 && (g - fd).abs() <= 4.0 * f64::EPSILON * (up.abs() + down.abs()) / 2e-5 {
                            at_noise += 1;
                            continue;
                        }
                        worst = worst.max(err);
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure(worst < 1e-4, format!("worst relative error {worst:e}"))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{cases} fixtures, worst relative error {worst:.1e}, {at_noise} of {coords} coordinates within rounding of the quotient"
    ))
}

fn unit_equations() -> Check {
    let start = Instant::now();
    let h = entropy(&ProbDist::new(vec![0.5, 0.5]).unwrap());
    ensure((h - 2f64.ln()).abs() < 1e-12, format!("entropy {h}"))?;
    let p = ProbDist::new(vec![0.2, 0.3, 0.5]).unwrap();
    let m = marginal(&[p.clone(), p.clone(), p.clone()]).unwrap();
    let diff = m.as_slice().iter().zip(p.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(diff < 1e-12, format!("marginal differs by {diff:e}"))?;
    let table = [
        (0.4, 0.4, 0.0, false),
        (0.41, 0.4, 0.0, false),
        (0.4, 0.4, 0.1, true),
        (0.73, 0.8, 0.1, true),
        (0.69, 0.8, 0.1, false),
        (0.01, 0.99, 1.0, true),
        (0.0, 1.0, 1.0, false),
    ];
    for (a, r, d, want) in table {
        ensure(smf_keep(a, r, d) == want, format!("smf_keep({a}, {r}, {d}) != {want}"))?;
    }
    ensure(ccr_ratio(106, 100) == Ccr::Ratio(1.06), "CCR(106, 100) != 1.06")?;
    within(start, Duration::from_secs(5))?;
    Ok("entropy, marginal, margin filter and CCR exact".into())
}

struct BenchmarkOutcome {
    clean_drop: f64,
    summaries: BTreeMap<String, MethodSummary>,
    elapsed: Duration,
}

fn run_benchmark() -> Result<BenchmarkOutcome, String> {
    let start = Instant::now();
    let fx = Fixture::load(&fixture_dir()).map_err(|e| e.to_string())?;
    let set = fx.augmenters().map_err(|e| e.to_string())?;
    let ckpt = fx.train_checkpoint(&set).map_err(|e| e.to_string())?;
    let acc = |ds| {
        let log = memocl::experiment::baseline_log(&ckpt, &stream(ds, 0), 0).unwrap();
        100.0 * log.iter().filter(|r| Some(r.predicted_label) == r.true_label).count() as f64 / log.len() as f64
    };
    let clean_drop = acc(&fx.test) - acc(&fx.shifted);
    let bench = fx.benchmark(&ckpt, &set);
    let methods = [
        Method::Baseline,
        Method::TtaAverage,
        Method::Memo,
        Method::MemoCl,
        Method::MemoClSmf,
    ];
    let runs = bench.run(&methods, &fx.settings.seeds).map_err(|e| e.to_string())?;
    let logs: Vec<_> = runs.into_iter().map(|r| r.log).collect();
    let per_seed = seed_metrics(&logs, fx.shifted.num_groups).map_err(|e| e.to_string())?;
    let summaries = summarize(&per_seed).into_iter().map(|s| (s.method.clone(), s)).collect();
    Ok(BenchmarkOutcome {
        clean_drop,
        summaries,
        elapsed: start.elapsed(),
    })
}

fn ordering(b: &Result<BenchmarkOutcome, String>) -> Check {
    let b = b.as_ref().map_err(Clone::clone)?;
    ensure(b.clean_drop >= 10.0, format!("source AA drop {:.1} < 10", b.clean_drop))?;
    let aa = |m: Method| b.summaries[m.name()].aa.mean;
    let chain = [
        (Method::Baseline, Method::TtaAverage, 0.5),
        (Method::TtaAverage, Method::Memo, 0.5),
        (Method::Memo, Method::MemoCl, 0.5),
        (Method::MemoCl, Method::MemoClSmf, 0.0),
    ];
    for (lo, hi, gap) in chain {
        ensure(
            aa(hi) - aa(lo) >= gap,
            format!("AA {} {:.2} vs {} {:.2}, need gap {gap}", lo.name(), aa(lo), hi.name(), aa(hi)),
        )?;
    }
    ensure(b.elapsed < Duration::from_secs(300), format!("took {:.1?}", b.elapsed))?;
    Ok(format!(
        "AA {:.2} < {:.2} < {:.2} < {:.2} <= {:.2} (drop {:.1}, {:.1?})",
        aa(Method::Baseline),
        aa(Method::TtaAverage),
        aa(Method::Memo),
        aa(Method::MemoCl),
        aa(Method::MemoClSmf),
        b.clean_drop,
        b.elapsed
    ))
}

fn ccr_property(b: &Result<BenchmarkOutcome, String>) -> Check {
    let b = b.as_ref().map_err(Clone::clone)?;
    let cl = &b.summaries[Method::MemoCl.name()];
    let smf = &b.summaries[Method::MemoClSmf.name()];
    let mut detail = Vec::new();
    for s in [cl, smf] {
        let ccr = s.ccr.ok_or_else(|| format!("{}: no seed has a defined CCR", s.method))?;
        ensure(ccr.mean > 1.0, format!("{}: mean CCR {:.2}", s.method, ccr.mean))?;
        detail.push(format!("{} CCR {:.2} ({} undefined)", s.method, ccr.mean, s.ccr_undefined));
    }
    ensure(
        smf.aa.std <= cl.aa.std,
        format!("AA sd {:.3} with the filter vs {:.3} without", smf.aa.std, cl.aa.std),
    )?;
    detail.push(format!("AA sd {:.3} <= {:.3}", smf.aa.std, cl.aa.std));
    Ok(detail.join(", "))
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_memocl"))
            .args(["benchmark", "--seed", "0", "--seed", "1", "--fixture"])
            .arg(fixture_dir())
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), String::from_utf8_lossy(&status.stderr).into_owned())?;
        Ok(read_tree(&out))
    };
    let (a, b) = (run("a")?, run("b")?);
    ensure(a.len() > 10, format!("only {} files written", a.len()))?;
    for (name, bytes) in &a {
        ensure(b.get(name) == Some(bytes), format!("{name} differs between runs"))?;
    }
    ensure(a.len() == b.len(), "runs wrote different file sets")?;
    Ok(format!("{} files byte-identical across two benchmark runs", a.len()))
}

fn oracles() -> Check {
    let mut lists = 0usize;
    for len in 1..=12u32 {
        for code in 0..3usize.pow(len) {
            let mut rest = code;
            let labels: Vec<usize> = (0..len)
                .map(|_| {
                    let l = rest % 3;
                    rest /= 3;
                    l
                })
                .collect();
            let counts: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
            let top = *counts.iter().max().unwrap();
            let want = counts.iter().position(|&n| n == top).unwrap();
            ensure(hard_vote(&labels).unwrap() == want, format!("hard vote on {labels:?}"))?;
            lists += 1;
        }
    }

    let mut rng = Rng::new(23);
    for v in [3usize, 40, 200] {
        let width = 6;
        let vecs: Vec<Vec<f64>> = (0..v).map(|_| (0..width).map(|_| rng.unit() - 0.5).collect()).collect();
        let words: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let table = WordVectorTable::new(words.clone(), vecs.concat(), width).unwrap();
        let index = NeighborIndex::build(table, 2).unwrap();
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        for i in 0..v {
            let mut sims: Vec<(f64, usize)> = (0..v)
                .filter(|&j| j != i)
                .map(|j| {
                    let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                    (dot / (norm(&vecs[i]) * norm(&vecs[j])), j)
                })
                .collect();
            sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut want: Vec<&str> = sims[..2].iter().map(|&(_, j)| words[j].as_str()).collect();
            let mut got = index.neighbors_of(&words[i]).unwrap();
            want.sort();
            got.sort();
            ensure(got == want, format!("neighbors of {} in a {v}-word table", words[i]))?;
        }
    }

    let mut logs = 0;
    while logs < 1000 {
        let log: Vec<GroupedPrediction> = (0..1 + rng.below(50))
            .map(|_| GroupedPrediction {
                true_label: rng.below(3),
                base_pred: rng.below(3),
                method_pred: rng.below(3),
                groups: (0..4).filter(|_| rng.bernoulli(0.5)).collect(),
            })
            .collect();
        let Ok(r) = MetricsReport::compute(&log, 4) else { continue };
        logs += 1;
        let hits = log.iter().filter(|p| p.method_pred == p.true_label).count();
        let fixed = log.iter().filter(|p| p.base_pred != p.true_label && p.method_pred == p.true_label).count();
        let broken = log.iter().filter(|p| p.base_pred == p.true_label && p.method_pred != p.true_label).count();
        let worst = (0..4)
            .filter_map(|g| {
                let m: Vec<_> = log.iter().filter(|p| p.groups.contains(&g)).collect();
                (!m.is_empty()).then(|| m.iter().filter(|p| p.method_pred == p.true_label).count() as f64 / m.len() as f64)
            })
            .fold(f64::INFINITY, f64::min);
        ensure(
            r.average_accuracy == hits as f64 / log.len() as f64
                && r.worst_group_accuracy == worst
                && (r.corrections, r.corruptions) == (fixed, broken),
            format!("metrics disagree on log {logs}"),
        )?;
    }
    Ok(format!("{lists} label lists, 3 vector tables, {logs} logs"))
}

fn episodic_reset() -> Check {
    let fx = Fixture::load(&fixture_dir()).map_err(|e| e.to_string())?;
    let set = fx.augmenters().map_err(|e| e.to_string())?;
    let ckpt = fx.train_checkpoint(&set).map_err(|e| e.to_string())?;
    let cfg = AdaptConfig {
        mode: AdaptMode::Episodic,
        smf_enabled: true,
        ..fx.settings.episodic.clone()
    };
    let adapter = Adapter::new(&ckpt.vocab, &set, &cfg).map_err(|e| e.to_string())?;
    let records = stream(&fx.shifted, 4);
    let mut reversed = records.clone();
    reversed.reverse();
    let a = adapter.run_stream(&ckpt.params, &records).map_err(|e| e.to_string())?;
    let b = adapter.run_stream(&ckpt.params, &reversed).map_err(|e| e.to_string())?;
    ensure(a.final_params == ckpt.params && b.final_params == ckpt.params, "weights changed")?;
    let by_id = |recs: &[memocl::data::StreamRecord], outs: &[memocl::adapt::AdaptOutcome]| -> BTreeMap<usize, usize> {
        recs.iter().zip(outs).map(|(r, o)| (r.id, o.predicted_label)).collect()
    };
    ensure(by_id(&records, &a.outcomes) == by_id(&reversed, &b.outcomes), "predictions depend on order")?;
    let changed = a.outcomes.iter().filter(|o| o.predicted_label != o.base_label).count();
    Ok(format!("{} samples, weights untouched, {changed} predictions moved by adaptation", records.len()))
}

fn smf_termination() -> Check {
    let fx = Fixture::load(&fixture_dir()).map_err(|e| e.to_string())?;
    let set = fx.augmenters().map_err(|e| e.to_string())?;
    let ckpt = fx.train_checkpoint(&set).map_err(|e| e.to_string())?;
    let cfg = AdaptConfig {
        delta: 0.0,
        smf_enabled: true,
        ..fx.settings.continual.clone()
    };
    let records: Vec<_> = stream(&fx.shifted, 8).into_iter().take(100).collect();
    let run = std::panic::catch_unwind(|| {
        Adapter::new(&ckpt.vocab, &set, &cfg).and_then(|a| a.run_stream(&ckpt.params, &records))
    })
    .map_err(|_| "adaptation panicked".to_string())?
    .map_err(|e| e.to_string())?;
    ensure(run.outcomes.len() == 100, format!("{} outcomes", run.outcomes.len()))?;
    let fallbacks = run.outcomes.iter().filter(|o| o.fallback).count();
    ensure(fallbacks == 100, format!("fallback on {fallbacks} of 100 samples"))?;
    ensure(run.outcomes.iter().all(|o| o.attempts == cfg.max_attempts), "attempt cap not reached")?;
    Ok(format!("100 predictions, fallback recorded on all, cap {}", cfg.max_attempts))
}

fn main() -> ExitCode {
    let bench = run_benchmark();
    let results: Vec<(&str, Check)> = vec![
        ("gradient correctness", gradient()),
        ("unit equations", unit_equations()),
        ("directional ordering", ordering(&bench)),
        ("correction ratio and variance", ccr_property(&bench)),
        ("determinism", determinism()),
        ("oracle equivalence", oracles()),
        ("episodic reset", episodic_reset()),
        ("filter termination", smf_termination()),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS  {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL  {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
