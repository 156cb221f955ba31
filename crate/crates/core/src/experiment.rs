//! Multi-seed evaluation harness: simulate, split, diagnose, train each
//! detector, inject anomalies into an independent playout and score.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::alignment::{coverage_of, AlignError, Aligner, CostScheme};
use crate::detect::{self, DetectError, DetectorKind, TrainParams};
use crate::diagnoses::{diagnoses_with, DiagnosesMatrix};
use crate::eventlog::{split_log, stats, EventLog, LogError, SplitRatios};
use crate::inject::{build_eval_sets, default_pool, AnomalyType, InjectError};
use crate::metrics::{self, MetricsError};
use crate::petri::{playout, NetError, NoiseParams, PetriNet, DEFAULT_MAX_STEPS};

/// Seed offset of the playout that anomalies are injected into.
pub const ANOMALY_SEED_OFFSET: u64 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error("{detector}: {source}")]
    Detect {
        detector: DetectorKind,
        #[source]
        source: DetectError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("every seed failed")]
    NoSurvivingSeeds,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub noise: NoiseParams,
    pub split: SplitRatios,
    pub detectors: Vec<DetectorKind>,
    pub quantile: f64,
    pub out_dir: PathBuf,
    pub n_normal: usize,
    pub n_anomalous: usize,
    pub costs: CostScheme,
    pub max_steps: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainParams::default();
        ExperimentConfig {
            model: PathBuf::from("models/som.net"),
            seeds: vec![1, 2, 3, 4, 5],
            lambda: crate::inject::DEFAULT_LAMBDA,
            noise: NoiseParams {
                p_drop: 0.03,
                p_dup: 0.03,
            },
            split: SplitRatios::default(),
            detectors: DetectorKind::ALL.to_vec(),
            quantile: train.quantile,
            out_dir: PathBuf::from("results"),
            n_normal: 250,
            n_anomalous: 50,
            costs: CostScheme::default(),
            max_steps: DEFAULT_MAX_STEPS,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
        }
    }
}

fn list<T, E: std::fmt::Display>(
    v: &str,
    f: impl Fn(&str) -> Result<T, E>,
) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|x| f(x.trim()).map_err(|e| format!("`{}`: {e}", x.trim())))
        .collect()
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut c = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| ExperimentError::Config { line, msg };
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{k}: {e}")));
            let int = |v: &str| v.parse::<usize>().map_err(|e| err(format!("{k}: {e}")));
            match k {
                "model" => c.model = PathBuf::from(v),
                "seeds" => c.seeds = list(v, str::parse::<u64>).map_err(err)?,
                "lambda" => c.lambda = num(v)?,
                "p_drop" => c.noise.p_drop = num(v)?,
                "p_dup" => c.noise.p_dup = num(v)?,
                "noise" => {
                    let p = num(v)?;
                    c.noise = NoiseParams {
                        p_drop: p,
                        p_dup: p,
                    };
                }
                "split" => {
                    let r = list(v, str::parse::<f64>).map_err(err)?;
                    let [a, b, t] = r[..] else {
                        return Err(err("split needs three ratios".into()));
                    };
                    c.split = SplitRatios::new(a, b, t).map_err(|e| err(e.to_string()))?;
                }
                "detectors" => c.detectors = list(v, str::parse::<DetectorKind>).map_err(err)?,
                "quantile" => c.quantile = num(v)?,
                "out" | "out_dir" => c.out_dir = PathBuf::from(v),
                "n_normal" => c.n_normal = int(v)?,
                "n_anomalous" => c.n_anomalous = int(v)?,
                "costs" => c.costs = v.parse().map_err(|e: AlignError| err(e.to_string()))?,
                "max_steps" => c.max_steps = int(v)?,
                "epochs" => c.epochs = int(v)?,
                "learning_rate" => c.learning_rate = num(v)?,
                _ => return Err(err(format!("unknown key `{k}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |msg: &str| ExperimentError::Config {
            line: 0,
            msg: msg.to_string(),
        };
        if self.seeds.is_empty() {
            return Err(err("at least one seed is required"));
        }
        if self.detectors.is_empty() {
            return Err(err("at least one detector is required"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(err("lambda must be positive"));
        }
        if !(0.0..=100.0).contains(&self.quantile) {
            return Err(err("quantile must lie in [0, 100]"));
        }
        if self.n_anomalous == 0 {
            return Err(err("n_anomalous must be positive"));
        }
        NoiseParams::new(self.noise.p_drop, self.noise.p_dup)?;
        Ok(())
    }

    fn train_params(&self) -> TrainParams {
        TrainParams {
            quantile: self.quantile,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            ..TrainParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub detector: DetectorKind,
    pub anomaly_type: AnomalyType,
    pub threshold: f64,
    pub confusion: metrics::Confusion,
    pub scores: metrics::Scores,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub detector: DetectorKind,
    pub case_id: String,
    pub anomalous: bool,
    pub score: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub name: &'static str,
    pub stats: crate::eventlog::LogStats,
    pub fitness: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub logs: Vec<LogRow>,
    pub metrics: Vec<MetricRow>,
    pub scores: Vec<ScoreRow>,
}

impl SeedResult {
    pub fn metric(&self, d: DetectorKind, a: AnomalyType) -> Option<&MetricRow> {
        self.metrics
            .iter()
            .find(|m| m.detector == d && m.anomaly_type == a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; zero for a single value.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub anomaly_type: AnomalyType,
    pub detector: DetectorKind,
    pub accuracy: MeanStd,
    pub recall: MeanStd,
    pub precision: MeanStd,
    pub f1: MeanStd,
    pub auc: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub seeds: Vec<SeedResult>,
    pub failures: Vec<(u64, String)>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn summary_row(&self, a: AnomalyType, d: DetectorKind) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.anomaly_type == a && r.detector == d)
    }

    /// Relative paths and contents of every report file.
    pub fn files(&self) -> Vec<(PathBuf, String)> {
        let mut out = Vec::new();
        for s in &self.seeds {
            let dir = PathBuf::from(format!("seed_{}", s.seed));
            out.push((dir.join("logs.csv"), logs_csv(s)));
            out.push((dir.join("metrics.csv"), metrics_csv(s)));
            out.push((dir.join("scores.csv"), scores_csv(s)));
        }
        out.push((PathBuf::from("seeds.csv"), self.seeds_csv()));
        out.push((PathBuf::from("summary.csv"), self.summary_csv()));
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let mut written = Vec::new();
        for (rel, text) in self.files() {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }

    fn seeds_csv(&self) -> String {
        let mut rows: Vec<(u64, String)> = self
            .seeds
            .iter()
            .map(|s| (s.seed, "ok,".to_string()))
            .chain(
                self.failures
                    .iter()
                    .map(|(s, e)| (*s, format!("failed,{}", e.replace([',', '\n'], " ")))),
            )
            .collect();
        rows.sort();
        let mut out = String::from("seed,status,message\n");
        for (s, r) in rows {
            writeln!(out, "{s},{r}").unwrap();
        }
        out
    }

    /// Percentages as `mean ± std`, three decimals.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("anomaly_type,detector,accuracy,recall,precision,f1,auc\n");
        let cell = |m: MeanStd| format!("{:.3} ± {:.3}", 100.0 * m.mean, 100.0 * m.std);
        for r in &self.summary {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.anomaly_type.as_str(),
                r.detector.as_str().to_ascii_uppercase(),
                cell(r.accuracy),
                cell(r.recall),
                cell(r.precision),
                cell(r.f1),
                cell(r.auc)
            )
            .unwrap();
        }
        out
    }
}

fn logs_csv(s: &SeedResult) -> String {
    let mut out = String::from("log,traces,variants,mean_len,std_len,fitness,coverage\n");
    for l in &s.logs {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            l.name,
            l.stats.n_traces,
            l.stats.n_variants,
            l.stats.mean_len,
            l.stats.std_len,
            l.fitness,
            l.coverage
        )
        .unwrap();
    }
    out
}

fn metrics_csv(s: &SeedResult) -> String {
    let mut out = String::from(
        "detector,anomaly_type,threshold,tp,tn,fp,fn,accuracy,precision,recall,f1,auc\n",
    );
    for m in &s.metrics {
        let c = m.confusion;
        writeln!(
            out,
            "{},{},{:.6},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            m.detector,
            m.anomaly_type.as_str(),
            m.threshold,
            c.tp,
            c.tn,
            c.fp,
            c.fn_,
            m.scores.accuracy,
            m.scores.precision,
            m.scores.recall,
            m.scores.f1,
            m.auc
        )
        .unwrap();
    }
    out
}

fn scores_csv(s: &SeedResult) -> String {
    let mut out = String::from("detector,case,label,score,prediction\n");
    for r in &s.scores {
        let label = |b: bool| if b { "anomalous" } else { "normal" };
        writeln!(
            out,
            "{},{},{},{:.6},{}",
            r.detector,
            r.case_id,
            label(r.anomalous),
            r.score,
            label(r.predicted)
        )
        .unwrap();
    }
    out
}

fn log_row(
    name: &'static str,
    aligner: &Aligner<'_>,
    log: &EventLog,
) -> Result<(LogRow, DiagnosesMatrix), ExperimentError> {
    let rows = aligner.diagnose_log(log)?;
    let coverage = coverage_of(&rows)?;
    let fitness = rows.iter().map(|(_, r)| r.fitness).sum::<f64>() / rows.len() as f64;
    let mut d = DiagnosesMatrix::new(aligner.labels(), aligner.net().name(), aligner.costs());
    d.rows = rows.into_iter().map(|(_, r)| r).collect();
    Ok((
        LogRow {
            name,
            stats: stats(log),
            fitness,
            coverage,
        },
        d,
    ))
}

/// Full pipeline for one seed.
pub fn run_seed(
    net: &PetriNet,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SeedResult, ExperimentError> {
    let normal = playout(net, cfg.n_normal, cfg.max_steps, seed, cfg.noise)?;
    let (train_log, val_log, test_log) = split_log(&normal, cfg.split, seed)?;
    let aligner = Aligner::new(net, cfg.costs)?;

    let (normal_row, _) = log_row("normal", &aligner, &normal)?;
    let train_d = diagnoses_with(&aligner, &train_log)?;
    let val_d = diagnoses_with(&aligner, &val_log)?;
    let test_d = diagnoses_with(&aligner, &test_log)?;

    let fresh = playout(
        net,
        cfg.n_anomalous,
        cfg.max_steps,
        seed.wrapping_add(ANOMALY_SEED_OFFSET),
        cfg.noise,
    )?;
    let pool = default_pool();
    let sets = build_eval_sets(&fresh, cfg.lambda, &pool, seed)?;
    let mut logs = vec![normal_row];
    let mut anomalous = Vec::new();
    for (kind, name) in [
        (AnomalyType::Ma, "ma"),
        (AnomalyType::Woa, "woa"),
        (AnomalyType::Ua, "ua"),
        (AnomalyType::All, "all"),
    ] {
        let (row, d) = log_row(name, &aligner, sets.get(kind))?;
        logs.push(row);
        anomalous.push((kind, d));
    }

    let params = cfg.train_params();
    let mut metric_rows = Vec::new();
    let mut score_rows = Vec::new();
    for &kind in &cfg.detectors {
        let wrap = |source| ExperimentError::Detect {
            detector: kind,
            source,
        };
        let det = detect::train(kind, &train_d, &val_d, &params, seed).map_err(wrap)?;
        let normal_scores = det.score_matrix(&test_d).map_err(wrap)?;
        for (atype, d) in &anomalous {
            let anom_scores = det.score_matrix(d).map_err(wrap)?;
            let scores: Vec<f64> = normal_scores.iter().chain(&anom_scores).copied().collect();
            let labels: Vec<bool> = std::iter::repeat_n(false, normal_scores.len())
                .chain(std::iter::repeat_n(true, anom_scores.len()))
                .collect();
            let preds: Vec<bool> = scores.iter().map(|&s| det.is_anomalous(s)).collect();
            let confusion = metrics::confusion(&labels, &preds)?;
            metric_rows.push(MetricRow {
                detector: kind,
                anomaly_type: *atype,
                threshold: det.threshold,
                confusion,
                scores: metrics::prf(&confusion),
                auc: metrics::roc_auc(&labels, &scores)?.auc,
            });
            if *atype == AnomalyType::All {
                let cases = test_d.rows.iter().chain(&d.rows);
                for (((r, &s), &y), &p) in cases.zip(&scores).zip(&labels).zip(&preds) {
                    score_rows.push(ScoreRow {
                        detector: kind,
                        case_id: r.case_id.clone(),
                        anomalous: y,
                        score: s,
                        predicted: p,
                    });
                }
            }
        }
    }
    Ok(SeedResult {
        seed,
        logs,
        metrics: metric_rows,
        scores: score_rows,
    })
}

/// Runs every seed (in parallel when enabled) and aggregates survivors.
pub fn run_experiment(
    net: &PetriNet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    #[cfg(feature = "parallel")]
    let results: Vec<_> = cfg.seeds.par_iter().map(|&s| (s, run_seed(net, cfg, s))).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = cfg.seeds.iter().map(|&s| (s, run_seed(net, cfg, s))).collect();

    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in results {
        match r {
            Ok(res) => seeds.push(res),
            Err(e) => failures.push((s, e.to_string())),
        }
    }
    if seeds.is_empty() {
        return Err(ExperimentError::NoSurvivingSeeds);
    }
    let mut summary = Vec::new();
    for atype in AnomalyType::EVALUATED {
        for &d in &cfg.detectors {
            let rows: Vec<&MetricRow> = seeds.iter().filter_map(|s| s.metric(d, atype)).collect();
            let agg = |f: &dyn Fn(&MetricRow) -> f64| {
                MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            summary.push(SummaryRow {
                anomaly_type: atype,
                detector: d,
                accuracy: agg(&|r| r.scores.accuracy),
                recall: agg(&|r| r.scores.recall),
                precision: agg(&|r| r.scores.precision),
                f1: agg(&|r| r.scores.f1),
                auc: agg(&|r| r.auc),
            });
        }
    }
    Ok(ExperimentReport {
        seeds,
        failures,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::fixtures;

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::parse(
            "# demo\nseeds = 3, 4\nnoise = 0\nsplit=0.5,0.25,0.25\ndetectors = ft, ae # two\nout = x\n",
        )
        .unwrap();
        assert_eq!(c.seeds, vec![3, 4]);
        assert_eq!(c.noise, NoiseParams::NONE);
        assert_eq!(c.detectors, vec![DetectorKind::Ft, DetectorKind::Ae]);
        assert_eq!(c.out_dir, PathBuf::from("x"));
        assert_eq!(c.split.train, 0.5);
    }

    #[test]
    fn config_errors_carry_line() {
        for (text, line) in [
            ("seeds=1\nbogus=2\n", 2),
            ("lambda=x\n", 1),
            ("\n\nsplit=0.5,0.5\n", 3),
            ("detectors=svm\n", 1),
        ] {
            match ExperimentConfig::parse(text) {
                Err(ExperimentError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(ExperimentConfig::parse("seeds=\n").is_err());
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn small_run_layout() {
        let cfg = ExperimentConfig {
            seeds: vec![1, 2],
            n_normal: 60,
            n_anomalous: 10,
            epochs: 20,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&fixtures::fn1(), &cfg).unwrap();
        assert_eq!(report.seeds.len(), 2);
        assert_eq!(report.summary.len(), 4 * 3);
        let files = report.files();
        assert_eq!(files.len(), 2 * 3 + 2);
        let summary = report.summary_csv();
        assert_eq!(summary.lines().count(), 13);
        assert!(summary.contains("ALL,AE,"));
    }
}
