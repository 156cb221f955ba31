use confmon_core::alignment::{coverage, log_fitness, CostScheme};
use confmon_core::detect::{self, DetectorKind, TrainParams};
use confmon_core::diagnoses::build_diagnoses;
use confmon_core::eventlog::{split_log, SplitRatios};
use confmon_core::experiment::{run_experiment, ExperimentConfig};
use confmon_core::inject::{build_eval_sets, default_pool, AnomalyType};
use confmon_core::metrics::{confusion, prf, roc_auc};
use confmon_core::petri::{fixtures, playout, NoiseParams};

#[test]
fn clean_playout_scores_perfectly() {
    let net = fixtures::fn1();
    let log = playout(&net, 60, 200, 4, NoiseParams::NONE).unwrap();
    assert_eq!(coverage(&net, &log, CostScheme::default()).unwrap(), 1.0);
    assert_eq!(log_fitness(&net, &log, CostScheme::default()).unwrap(), 1.0);
}

#[test]
fn detectors_separate_injected_traces() {
    let net = fixtures::som();
    let costs = CostScheme::default();
    let log = playout(&net, 100, 200, 21, NoiseParams::NONE).unwrap();
    let (tr, val, test) = split_log(&log, SplitRatios::default(), 21).unwrap();
    let fresh = playout(&net, 20, 200, 1021, NoiseParams::NONE).unwrap();
    let sets = build_eval_sets(&fresh, 3.0, &default_pool(), 21).unwrap();
    let (tr, val, test) = (
        build_diagnoses(&net, &tr, costs).unwrap(),
        build_diagnoses(&net, &val, costs).unwrap(),
        build_diagnoses(&net, &test, costs).unwrap(),
    );
    let anomalous = build_diagnoses(&net, sets.get(AnomalyType::All), costs).unwrap();
    for kind in DetectorKind::ALL {
        let det = detect::train(kind, &tr, &val, &TrainParams::default(), 21).unwrap();
        let mut scores = det.score_matrix(&test).unwrap();
        scores.extend(det.score_matrix(&anomalous).unwrap());
        let labels: Vec<bool> = (0..scores.len()).map(|i| i >= test.len()).collect();
        let preds: Vec<bool> = scores.iter().map(|&s| det.is_anomalous(s)).collect();
        let s = prf(&confusion(&labels, &preds).unwrap());
        let auc = roc_auc(&labels, &scores).unwrap().auc;
        assert!(auc > 0.9, "{kind}: auc {auc}");
        assert!(s.recall > 0.8, "{kind}: {s:?}");
    }
}

#[test]
fn experiment_files_are_reproducible() {
    let cfg = ExperimentConfig {
        seeds: vec![7, 8],
        n_normal: 50,
        n_anomalous: 10,
        epochs: 30,
        ..ExperimentConfig::default()
    };
    let net = fixtures::fn1();
    let a = run_experiment(&net, &cfg).unwrap().files();
    let b = run_experiment(&net, &cfg).unwrap().files();
    assert_eq!(a, b);

    let dir = std::env::temp_dir().join(format!("confmon-pipeline-{}", std::process::id()));
    let report = run_experiment(&net, &cfg).unwrap();
    let written = report.write_to(&dir).unwrap();
    assert_eq!(written.len(), a.len());
    for (rel, text) in &a {
        assert_eq!(&std::fs::read_to_string(dir.join(rel)).unwrap(), text);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn all_seeds_failing_is_an_error() {
    let cfg = ExperimentConfig {
        seeds: vec![1],
        n_normal: 4,
        n_anomalous: 5,
        epochs: 5,
        ..ExperimentConfig::default()
    };
    assert!(matches!(
        run_experiment(&fixtures::fn1(), &cfg),
        Err(confmon_core::experiment::ExperimentError::NoSurvivingSeeds)
    ));
}
