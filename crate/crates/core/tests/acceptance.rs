//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use confmon_core::alignment::{coverage, log_fitness, Aligner, CostScheme};
use confmon_core::detect::autoencoder::{default_shape, Autoencoder};
use confmon_core::detect::{gradient_check, Normalizer};
use confmon_core::diagnoses::build_diagnoses;
use confmon_core::eventlog::{split_log, SplitRatios, Trace};
use confmon_core::experiment::{run_experiment, ExperimentConfig};
use confmon_core::detect::DetectorKind as D;
use confmon_core::inject::{default_pool, inject_log, AnomalyType as A};
use confmon_core::metrics::{auc_pairwise, prf, roc_auc, Confusion};
use confmon_core::petri::{check_soundness, fixtures, playout, NoiseParams, DEFAULT_STATE_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(
        elapsed < limit,
        format!("took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn events(s: &str) -> Trace {
    Trace::from_str_events("c", s)
}

fn c1_fixture() -> Outcome {
    let start = Instant::now();
    let net = fixtures::fn1();
    let aligner = Aligner::new(&net, CostScheme::default()).map_err(|e| e.to_string())?;
    let loop_trace = events("t1 t2 t4 t5 t3 t4 t5 t6");
    let a = aligner.align(&loop_trace).unwrap();
    let f = aligner.trace_fitness(&loop_trace).unwrap();
    ensure(a.cost == 0 && f == 1.0, format!("loop trace cost {} fitness {f}", a.cost))?;
    let empty = aligner.trace_fitness(&events("")).unwrap();
    ensure(empty == 0.0, format!("empty trace fitness {empty}"))?;
    let (a, row) = aligner.diagnose(&events("t1 t5 t2 t4 t6")).unwrap();
    let t5 = aligner.labels().iter().position(|l| l == "t5").unwrap();
    ensure(
        a.cost == 2 && (row.fitness - 0.8).abs() < 1e-12 && row.counts[t5] == 2,
        format!("misplaced t5: cost {} fitness {} count {}", a.cost, row.fitness, row.counts[t5]),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("costs 0/2, fitness 1.0/0.0/0.8 in {:.2?}", start.elapsed()))
}

fn c2_oracle() -> Outcome {
    let start = Instant::now();
    let costs = CostScheme::default();
    let mut nets = vec![(fixtures::fn1(), common::fn1_alphabet(), 240)];
    for seed in [3u64, 5, 11] {
        let mut alpha: Vec<&str> = common::ALPHABET.to_vec();
        alpha.extend(["x1", "x2"]);
        nets.push((common::random_workflow_net(seed, 12), alpha, 100));
    }
    let (mut checked, mut agree) = (0, 0);
    for (net, alphabet, n) in &nets {
        let markings = common::reachable_markings(net, usize::MAX).len();
        if net.name() != "fn1" {
            ensure(markings <= 12, format!("{} has {markings} markings", net.name()))?;
        }
        let aligner = Aligner::new(net, costs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..*n {
            let trace = common::random_trace(&mut rng, alphabet, 8);
            let got = aligner.align_events(&trace).unwrap().cost;
            checked += 1;
            if Some(got) == common::oracle_cost(net, &trace, costs) {
                agree += 1;
            }
        }
    }
    ensure(agree == checked, format!("{agree}/{checked} agree"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{agree}/{checked} traces on {} nets in {:.2?}", nets.len(), start.elapsed()))
}

fn c3_coverage() -> Outcome {
    let costs = CostScheme::default();
    for net in [fixtures::fn1(), fixtures::som()] {
        let log = playout(&net, 200, 200, 1, NoiseParams::NONE).unwrap();
        let c = coverage(&net, &log, costs).unwrap();
        let f = log_fitness(&net, &log, costs).unwrap();
        ensure(c == 1.0 && f == 1.0, format!("{}: coverage {c} fitness {f}", net.name()))?;
    }
    let net = fixtures::som();
    let mut covs = Vec::new();
    for p in [0.05, 0.15, 0.30] {
        let log = playout(&net, 1000, 200, 2, NoiseParams::new(p, 0.0).unwrap()).unwrap();
        covs.push(coverage(&net, &log, costs).unwrap());
    }
    ensure(
        covs[0] > covs[1] && covs[1] > covs[2],
        format!("coverage not strictly decreasing: {covs:?}"),
    )?;
    Ok(format!("clean 1.0; p_drop 0.05/0.15/0.30 -> {:.4}/{:.4}/{:.4}", covs[0], covs[1], covs[2]))
}

fn c4_injection() -> Outcome {
    let net = fixtures::som();
    let log = playout(&net, 1000, 200, 4, NoiseParams::NONE).unwrap();
    let pool = default_pool();
    let mut means = BTreeMap::new();
    for kind in A::SINGLE {
        let (out, counts) = inject_log(&log, kind, 3.0, &pool, 4).map_err(|e| e.to_string())?;
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        means.insert(kind.as_str(), mean);
        for ((orig, new), k) in log.iter().zip(out.iter()).zip(&counts) {
            match kind {
                A::Ma => ensure(new.len() + k == orig.len(), format!("MA delta on {}", orig.case_id))?,
                A::Ua => ensure(new.len() == orig.len() + k, format!("UA delta on {}", orig.case_id))?,
                _ => {
                    let (mut a, mut b) = (orig.events.clone(), new.events.clone());
                    a.sort();
                    b.sort();
                    ensure(a == b, format!("WOA multiset on {}", orig.case_id))?;
                }
            }
        }
    }
    for (k, m) in &means {
        ensure((2.95..=3.35).contains(m), format!("{k} mean {m}"))?;
    }
    Ok(format!("mean applied {means:.3?}; deltas and multisets exact"))
}

fn c5_autoencoder() -> Outcome {
    let mut worst = 0.0f64;
    for sizes in [vec![4, 2, 4], vec![14, 7, 4, 7, 14]] {
        for seed in 0..5 {
            worst = worst.max(gradient_check(&sizes, seed));
        }
    }
    ensure(worst < 1e-4, format!("max relative gradient error {worst:e}"))?;
    let net = fixtures::som();
    let noise = NoiseParams::new(0.03, 0.03).unwrap();
    let log = playout(&net, 250, 200, 1, noise).unwrap();
    let (train, _, _) = split_log(&log, SplitRatios::default(), 1).unwrap();
    let d = build_diagnoses(&net, &train, CostScheme::default()).unwrap();
    let raw = d.feature_rows();
    let norm = Normalizer::fit(&raw);
    let rows: Vec<Vec<f64>> = raw.iter().map(|r| norm.apply(r)).collect();
    let mut ae = Autoencoder::new(&default_shape(d.width()), 1);
    let hist = ae.fit(&rows, 500, 1e-3).map_err(|l| format!("diverged: {l}"))?;
    let rises = hist.windows(2).filter(|w| w[1] > w[0]).count();
    ensure(rises == 0, format!("loss rose in {rises} of 499 epochs"))?;
    Ok(format!(
        "grad err {worst:.1e}; loss {:.4} -> {:.4} over 500 epochs, non-increasing",
        hist[0],
        hist[hist.len() - 1]
    ))
}

fn c6_metrics() -> Outcome {
    let s = prf(&Confusion { tp: 47, fn_: 3, fp: 3, tn: 47 });
    ensure(
        [s.accuracy, s.precision, s.recall, s.f1].iter().all(|&v| v == 0.94),
        format!("{s:?}"),
    )?;
    let y = [true, true, false, false];
    let sep = roc_auc(&y, &[0.9, 0.8, 0.2, 0.1]).unwrap().auc;
    let flat = roc_auc(&y, &[0.3; 4]).unwrap().auc;
    let four = roc_auc(&[true, false, true, false], &[0.9, 0.8, 0.7, 0.1]).unwrap().auc;
    ensure(sep == 1.0 && flat == 0.5 && four == 0.75, format!("auc {sep} {flat} {four}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 7.0).collect();
        let gap = (roc_auc(&labels, &scores).unwrap().auc - auc_pairwise(&labels, &scores).unwrap()).abs();
        worst = worst.max(gap);
    }
    ensure(worst <= 1e-12, format!("sweep vs pair-count gap {worst:e}"))?;
    Ok(format!("0.94 x4 exact; AUC 1.0/0.5/0.75; max sweep gap {worst:.1e}"))
}

fn c7_c8_experiment() -> (Outcome, Outcome) {
    let start = Instant::now();
    let net = fixtures::som();
    let cfg = ExperimentConfig::default();
    let first = match run_experiment(&net, &cfg) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err("experiment failed".into())),
    };
    let clean_cfg = ExperimentConfig {
        noise: NoiseParams::NONE,
        ..cfg.clone()
    };
    let clean = run_experiment(&net, &clean_cfg);
    let elapsed = start.elapsed();

    let c7 = (|| {
        let f1 = |a, d| first.summary_row(a, d).unwrap().f1.mean;
        let mut fails = Vec::new();
        let mut parts = Vec::new();
        for a in [A::Ma, A::Ua] {
            let (ft, db, ae) = (f1(a, D::Ft), f1(a, D::Dbscan), f1(a, D::Ae));
            parts.push(format!("{} F1 FT {ft:.3} DBSCAN {db:.3} AE {ae:.3}", a.as_str()));
            if ae <= ft {
                fails.push(format!("(a) {}: AE {ae:.3} <= FT {ft:.3}", a.as_str()));
            }
            if db <= ft {
                fails.push(format!("(a) {}: DBSCAN {db:.3} <= FT {ft:.3}", a.as_str()));
            }
        }
        let auc = first.summary_row(A::All, D::Ae).unwrap().auc.mean;
        parts.push(format!("ALL AUC AE {auc:.3}"));
        if auc < 0.85 {
            fails.push(format!("(b) AE AUC {auc:.3} < 0.85"));
        }
        match &clean {
            Ok(r) => {
                let worst = A::EVALUATED
                    .iter()
                    .map(|&a| r.summary_row(a, D::Ft).unwrap().f1.mean)
                    .fold(1.0, f64::min);
                parts.push(format!("clean FT min F1 {worst:.3}"));
                if worst != 1.0 {
                    fails.push(format!("(c) clean FT F1 {worst}"));
                }
            }
            Err(e) => fails.push(format!("(c) clean run failed: {e}")),
        }
        if elapsed >= Duration::from_secs(300) {
            fails.push(format!("runtime {elapsed:.2?}"));
        }
        let detail = format!("{}; {:.1?}", parts.join("; "), elapsed);
        if fails.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{} | {detail}", fails.join("; ")))
        }
    })();

    let c8 = match run_experiment(&net, &cfg) {
        Ok(second) => {
            let (a, b) = (first.files(), second.files());
            if a == b {
                let bytes: usize = a.iter().map(|(_, t)| t.len()).sum();
                Ok(format!("{} files, {bytes} bytes identical", a.len()))
            } else {
                let diff: Vec<_> = a
                    .iter()
                    .zip(&b)
                    .filter(|(x, y)| x != y)
                    .map(|(x, _)| x.0.display().to_string())
                    .collect();
                Err(format!("differing files: {diff:?}"))
            }
        }
        Err(e) => Err(e.to_string()),
    };
    (c7, c8)
}

fn c9_soundness() -> Outcome {
    let net = fixtures::fn1();
    let ok = check_soundness(&net, DEFAULT_STATE_CAP);
    ensure(ok.is_sound(), format!("FN1 report {ok:?}"))?;
    let broken = net.without_arc("p5", "t6").map_err(|e| e.to_string())?;
    let bad = check_soundness(&broken, DEFAULT_STATE_CAP);
    ensure(
        !bad.is_sound() && bad.dead_transitions.contains(&"t6".to_string()),
        format!("damaged report {bad:?}"),
    )?;
    Ok(format!("FN1 sound; without p5->t6 dead {:?}", bad.dead_transitions))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = vec![
        (1, "fixture correctness", guarded(c1_fixture)),
        (2, "oracle equivalence", guarded(c2_oracle)),
        (3, "coverage identity and monotonicity", guarded(c3_coverage)),
        (4, "injection statistics", guarded(c4_injection)),
        (5, "autoencoder numerics", guarded(c5_autoencoder)),
        (6, "metrics unit suite", guarded(c6_metrics)),
    ];
    let (c7, c8) = catch_unwind(c7_c8_experiment)
        .unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    results.push((7, "qualitative detector ordering", c7));
    results.push((8, "determinism", c8));
    results.push((9, "soundness check", guarded(c9_soundness)));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(d) => println!("criterion {n} PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
