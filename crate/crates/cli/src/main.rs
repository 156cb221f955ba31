use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use confmon_core::alignment::{coverage_of, Aligner, CostScheme};
use confmon_core::detect::{self, DetectorKind, TrainParams};
use confmon_core::diagnoses::{diagnoses_with, write_diagnoses, DiagnosesMatrix};
use confmon_core::eventlog::{parse_log, split_log, stats, write_log, write_log_csv, EventLog, Label, SplitRatios};
use confmon_core::experiment::{run_experiment, ExperimentConfig};
use confmon_core::inject::{default_pool, inject, AnomalyType, InjectionSpec};
use confmon_core::metrics::{confusion, prf, roc_auc};
use confmon_core::petri::{check_soundness, parse_model, playout, NoiseParams, PetriNet, DEFAULT_STATE_CAP};

/// Conformance-checking monitor for control-flow anomaly detection.
#[derive(Parser)]
#[command(name = "confmon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate traces by playing out a model.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = confmon_core::petri::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        p_drop: f64,
        #[arg(long, default_value_t = 0.0)]
        p_dup: f64,
        /// Write `case,activity[,label]` CSV instead of one trace per line.
        #[arg(long)]
        csv: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Align a log and write its diagnoses, or check the model's soundness.
    Check {
        #[arg(long)]
        model: PathBuf,
        /// Without a log, only the soundness report is produced.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value = "1/1/0/0")]
        costs: CostScheme,
        /// Also report soundness when a log is given.
        #[arg(long)]
        soundness: bool,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
        /// Print every alignment to the error stream.
        #[arg(long)]
        alignments: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Log statistics, fitness and coverage against a model.
    Coverage {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "1/1/0/0")]
        costs: CostScheme,
    },
    /// Inject control-flow anomalies into a log.
    Inject {
        #[arg(long)]
        log: PathBuf,
        #[arg(long = "type", value_enum)]
        kind: InjectKind,
        #[arg(long, default_value_t = confmon_core::inject::DEFAULT_LAMBDA)]
        lambda: f64,
        /// One unknown activity per line; defaults to unk_1 .. unk_10.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Reject pools that overlap this model's labels.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a detector on the normal traces of a log.
    Train {
        #[arg(long, value_enum)]
        detector: Kind,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "0.6,0.2,0.2", value_parser = parse_split)]
        split: SplitRatios,
        #[arg(long, default_value_t = detect::DEFAULT_QUANTILE)]
        quantile: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1/1/0/0")]
        costs: CostScheme,
        /// DBSCAN radius; defaults to the k-distance percentile.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = detect::autoencoder::DEFAULT_EPOCHS)]
        epochs: usize,
        #[arg(long, default_value_t = detect::autoencoder::DEFAULT_LEARNING_RATE)]
        learning_rate: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score and classify every trace of a log.
    Detect {
        #[arg(long)]
        detector: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "1/1/0/0")]
        costs: CostScheme,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare predictions against a labeled log.
    Evaluate {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        roc: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the multi-seed experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ft,
    Dbscan,
    Ae,
}

impl From<Kind> for DetectorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ft => DetectorKind::Ft,
            Kind::Dbscan => DetectorKind::Dbscan,
            Kind::Ae => DetectorKind::Ae,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectKind {
    Ma,
    Woa,
    Ua,
    All,
}

impl From<InjectKind> for AnomalyType {
    fn from(k: InjectKind) -> Self {
        match k {
            InjectKind::Ma => AnomalyType::Ma,
            InjectKind::Woa => AnomalyType::Woa,
            InjectKind::Ua => AnomalyType::Ua,
            InjectKind::All => AnomalyType::All,
        }
    }
}

fn parse_split(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err("expected three comma-separated ratios".into());
    };
    SplitRatios::new(a, b, c).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_model(path: &Path) -> Result<PetriNet> {
    let net = parse_model(&read(path)?).with_context(|| format!("in model {}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| net.name().to_string());
    Ok(net.with_name(name))
}

fn load_log(path: &Path) -> Result<EventLog> {
    parse_log(&read(path)?).with_context(|| format!("in log {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CONFMON_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("CONFMON_THREADS must be a non-negative integer, got `{v}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate {
            model,
            n,
            seed,
            max_steps,
            p_drop,
            p_dup,
            csv,
            output,
        } => {
            let net = load_model(&model)?;
            let noise = NoiseParams::new(p_drop, p_dup)?;
            let log = playout(&net, n, max_steps, seed, noise)?;
            let text = if csv { write_log_csv(&log) } else { write_log(&log) };
            emit(output.as_deref(), &text)
        }
        Command::Check {
            model,
            log,
            costs,
            soundness,
            state_cap,
            alignments,
            output,
        } => {
            let net = load_model(&model)?;
            let mut sound = true;
            if soundness || log.is_none() {
                let r = check_soundness(&net, state_cap);
                println!("reachable_markings={}", r.reachable_markings);
                println!("inconclusive={}", r.inconclusive);
                println!("final_always_reachable={}", r.final_always_reachable);
                println!("dead_transitions={}", r.dead_transitions.join(","));
                println!("dead_places={}", r.dead_places.join(","));
                println!("sound={}", r.is_sound());
                sound = r.is_sound();
            }
            if let Some(log) = log {
                let log = load_log(&log)?;
                if log.is_empty() {
                    bail!("log is empty");
                }
                let aligner = Aligner::new(&net, costs)?;
                let rows = aligner.diagnose_log(&log)?;
                if alignments {
                    for (a, r) in &rows {
                        eprintln!("{} (cost {}):\n{a}", r.case_id, a.cost);
                    }
                }
                let coverage = coverage_of(&rows)?;
                let fitness = rows.iter().map(|(_, r)| r.fitness).sum::<f64>() / rows.len() as f64;
                let mut d = DiagnosesMatrix::new(aligner.labels(), net.name(), costs);
                d.rows = rows.into_iter().map(|(_, r)| r).collect();
                emit(output.as_deref(), &write_diagnoses(&d))?;
                println!("fitness={fitness:.6} coverage={coverage:.6}");
            }
            if !sound {
                bail!("model is not sound");
            }
            Ok(())
        }
        Command::Coverage { model, log, costs } => {
            let net = load_model(&model)?;
            let log = load_log(&log)?;
            if log.is_empty() {
                bail!("log is empty");
            }
            let rows = Aligner::new(&net, costs)?.diagnose_log(&log)?;
            let coverage = coverage_of(&rows)?;
            let fitness = rows.iter().map(|(_, r)| r.fitness).sum::<f64>() / rows.len() as f64;
            let s = stats(&log);
            println!("traces={}", s.n_traces);
            println!("variants={}", s.n_variants);
            println!("mean_len={:.6}", s.mean_len);
            println!("std_len={:.6}", s.std_len);
            println!("fitness={fitness:.6}");
            println!("coverage={coverage:.6}");
            Ok(())
        }
        Command::Inject {
            log,
            kind,
            lambda,
            pool,
            model,
            seed,
            output,
        } => {
            let log = load_log(&log)?;
            let unknown_pool = match pool {
                Some(p) => read(&p)?
                    .lines()
                    .map(|l| l.split('#').next().unwrap_or("").trim())
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
                None => default_pool(),
            };
            let spec = InjectionSpec {
                anomaly_type: kind.into(),
                lambda,
                unknown_pool,
                seed,
            };
            let labels = match model {
                Some(m) => load_model(&m)?.labels(),
                None => Vec::new(),
            };
            spec.validate(&labels)?;
            emit(output.as_deref(), &write_log(&inject(&log, &spec)?))
        }
        Command::Train {
            detector,
            model,
            log,
            split,
            quantile,
            seed,
            costs,
            eps,
            epochs,
            learning_rate,
            output,
        } => {
            let net = load_model(&model)?;
            let log = load_log(&log)?;
            let normal: Vec<_> = log
                .iter()
                .filter(|t| t.label != Some(Label::Anomalous))
                .cloned()
                .collect();
            if normal.len() < log.len() {
                eprintln!("ignoring {} anomalous traces", log.len() - normal.len());
            }
            let (train, val, _) = split_log(&EventLog::new(normal)?, split, seed)?;
            let aligner = Aligner::new(&net, costs)?;
            let params = TrainParams {
                quantile,
                eps,
                epochs,
                learning_rate,
                ..TrainParams::default()
            };
            let det = detect::train(
                detector.into(),
                &diagnoses_with(&aligner, &train)?,
                &diagnoses_with(&aligner, &val)?,
                &params,
                seed,
            )?;
            fs::write(&output, detect::save_detector(&det))
                .with_context(|| format!("cannot write {}", output.display()))?;
            println!("threshold={:.6}", det.threshold);
            Ok(())
        }
        Command::Detect {
            detector,
            model,
            log,
            costs,
            output,
        } => {
            let det = detect::load_detector(&read(&detector)?)
                .with_context(|| format!("in detector {}", detector.display()))?;
            let net = load_model(&model)?;
            if net.name() != det.model_id {
                eprintln!(
                    "warning: detector was trained on model `{}`, scoring against `{}`",
                    det.model_id,
                    net.name()
                );
            }
            let log = load_log(&log)?;
            let d = diagnoses_with(&Aligner::new(&net, costs)?, &log)?;
            let scores = det.score_matrix(&d)?;
            let mut out = String::from("case,score,prediction\n");
            for (r, s) in d.rows.iter().zip(scores) {
                let p = if det.is_anomalous(s) { "anomalous" } else { "normal" };
                out.push_str(&format!("{},{s:.6},{p}\n", r.case_id));
            }
            emit(output.as_deref(), &out)
        }
        Command::Evaluate {
            preds,
            labels,
            roc,
            output,
        } => {
            let truth: HashMap<String, Label> = load_log(&labels)?
                .into_traces()
                .into_iter()
                .filter_map(|t| t.label.map(|l| (t.case_id, l)))
                .collect();
            let (mut ys, mut scores, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
            for (i, line) in read(&preds)?.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                let f: Vec<&str> = line.split(',').collect();
                let [case, score, pred] = f[..] else {
                    bail!("{} line {}: expected case,score,prediction", preds.display(), i + 1);
                };
                let Some(y) = truth.get(case) else {
                    bail!("case `{case}` has no label in {}", labels.display());
                };
                ys.push(*y == Label::Anomalous);
                scores.push(score.parse::<f64>().with_context(|| format!("line {}", i + 1))?);
                predicted.push(match Label::parse(pred) {
                    Some(l) => l == Label::Anomalous,
                    None => bail!("line {}: bad prediction `{pred}`", i + 1),
                });
            }
            let c = confusion(&ys, &predicted)?;
            let s = prf(&c);
            if s.zero_division {
                eprintln!("warning: zero denominator in a metric; reported as 0");
            }
            let curve = roc_auc(&ys, &scores)?;
            let mut out = String::from("metric,value\n");
            for (k, v) in [
                ("accuracy", s.accuracy),
                ("precision", s.precision),
                ("recall", s.recall),
                ("f1", s.f1),
                ("auc", curve.auc),
            ] {
                out.push_str(&format!("{k},{v:.6}\n"));
            }
            for (k, v) in [("tp", c.tp), ("tn", c.tn), ("fp", c.fp), ("fn", c.fn_)] {
                out.push_str(&format!("{k},{v}\n"));
            }
            emit(output.as_deref(), &out)?;
            if let Some(path) = roc {
                let mut text = String::from("fpr,tpr\n");
                for (x, y) in &curve.points {
                    text.push_str(&format!("{x:.6},{y:.6}\n"));
                }
                fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(())
        }
        Command::Experiment { config, out } => {
            let mut cfg = ExperimentConfig::parse(&read(&config)?)
                .with_context(|| format!("in config {}", config.display()))?;
            let base = config.parent().unwrap_or(Path::new("."));
            if cfg.model.is_relative() {
                cfg.model = base.join(&cfg.model);
            }
            cfg.out_dir = match out {
                Some(o) => o,
                None if cfg.out_dir.is_relative() => base.join(&cfg.out_dir),
                None => cfg.out_dir,
            };
            let net = load_model(&cfg.model)?;
            let report = run_experiment(&net, &cfg)?;
            for (seed, err) in &report.failures {
                eprintln!("seed {seed} failed: {err}");
            }
            let written = report.write_to(&cfg.out_dir)?;
            eprintln!("wrote {} files to {}", written.len(), cfg.out_dir.display());
            print!("{}", report.summary_csv());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
