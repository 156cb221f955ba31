//! WebAssembly bindings for the static demo page. Every export takes plain
//! strings and numbers and returns a JSON document.

use confmon_core::alignment::{Aligner, CostScheme, Move};
use confmon_core::detect::DetectorKind;
use confmon_core::eventlog::Trace;
use confmon_core::experiment::{run_seed, ExperimentConfig};
use confmon_core::inject::{default_pool, inject_trace, trace_rng, AnomalyType};
use confmon_core::metrics::roc_auc;
use confmon_core::petri::{fixtures, parse_model, playout, NoiseParams, PetriNet, DEFAULT_MAX_STEPS};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Bundled model text by name (`fn1` or `som`).
pub fn model_text(name: &str) -> Result<&'static str, String> {
    match name {
        "fn1" => Ok(fixtures::FN1),
        "som" => Ok(fixtures::SOM),
        _ => Err(format!("unknown bundled model `{name}`")),
    }
}

fn load(text: &str) -> Result<PetriNet, String> {
    parse_model(text).map_err(err)
}

fn events(trace: &str) -> Vec<String> {
    trace
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Optimal alignment of a whitespace or comma separated trace.
pub fn align_value(model: &str, trace: &str, costs: &str) -> Result<Value, String> {
    let net = load(model)?;
    let costs: CostScheme = costs.parse().map_err(err)?;
    let aligner = Aligner::new(&net, costs).map_err(err)?;
    let t = Trace::new("input", events(trace));
    let (a, row) = aligner.diagnose(&t).map_err(err)?;
    let moves: Vec<Value> = a
        .moves
        .iter()
        .map(|m| {
            let (kind, log, model) = match m {
                Move::Synchronous {
                    activity,
                    transition,
                } => ("sync", activity.as_str(), transition.as_str()),
                Move::Log { activity } => ("log", activity.as_str(), ">>"),
                Move::Model {
                    transition,
                    label: Some(_),
                } => ("model", ">>", transition.as_str()),
                Move::Model { transition, .. } => ("silent", ">>", transition.as_str()),
            };
            json!({ "kind": kind, "log": log, "model": model, "cost": m.cost(&costs) })
        })
        .collect();
    let mut columns = aligner.labels().to_vec();
    columns.push(confmon_core::alignment::UNKNOWN.to_string());
    Ok(json!({
        "moves": moves,
        "cost": a.cost,
        "worst": aligner.worst_case_cost(t.len()),
        "fitness": row.fitness,
        "columns": columns,
        "counts": row.counts,
    }))
}

/// Plays out `n` traces and injects one anomaly type into each.
pub fn inject_value(model: &str, n: usize, seed: u64, kind: &str, lambda: f64) -> Result<Value, String> {
    let net = load(model)?;
    let kind: AnomalyType = kind.parse().map_err(err)?;
    if kind == AnomalyType::All {
        return Err("pick a single anomaly type".into());
    }
    let log = playout(&net, n, DEFAULT_MAX_STEPS, seed, NoiseParams::default()).map_err(err)?;
    let aligner = Aligner::new(&net, CostScheme::default()).map_err(err)?;
    let pool = default_pool();
    let mut rows = Vec::with_capacity(log.len());
    for (i, t) in log.iter().enumerate() {
        let mut rng = trace_rng(seed, i, kind);
        let (out, k) = match inject_trace(t, kind, lambda, &pool, &mut rng) {
            Ok(r) => r,
            Err(e) => {
                rows.push(json!({ "case": t.case_id, "original": t.events, "error": e.to_string() }));
                continue;
            }
        };
        let fitness = aligner.trace_fitness(&out).map_err(err)?;
        rows.push(json!({
            "case": t.case_id,
            "original": t.events,
            "injected": out.events,
            "k": k,
            "fitness": fitness,
        }));
    }
    Ok(json!({ "type": kind.as_str(), "traces": rows }))
}

/// Runs one experiment seed on a small log and returns each detector's ROC
/// curve on the chosen anomaly type.
pub fn roc_value(
    model: &str,
    seed: u64,
    n_normal: usize,
    kind: &str,
    epochs: usize,
) -> Result<Value, String> {
    let net = load(model)?;
    let kind: AnomalyType = kind.parse().map_err(err)?;
    let cfg = ExperimentConfig {
        seeds: vec![seed],
        n_normal,
        n_anomalous: (n_normal / 5).max(5),
        epochs,
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(err)?;
    let result = run_seed(&net, &cfg, seed).map_err(err)?;
    let suffix = format!("_{}", kind.as_str().to_ascii_lowercase());
    let mut curves = Vec::new();
    for d in DetectorKind::ALL {
        let (labels, scores): (Vec<bool>, Vec<f64>) = result
            .scores
            .iter()
            .filter(|r| r.detector == d)
            .filter(|r| !r.anomalous || kind == AnomalyType::All || r.case_id.ends_with(&suffix))
            .map(|r| (r.anomalous, r.score))
            .unzip();
        let roc = roc_auc(&labels, &scores).map_err(err)?;
        let f1 = result.metric(d, kind).map(|m| m.scores.f1);
        curves.push(json!({
            "detector": d.as_str(),
            "auc": roc.auc,
            "f1": f1,
            "points": roc.points,
            "positives": labels.iter().filter(|&&l| l).count(),
            "negatives": labels.iter().filter(|&&l| !l).count(),
        }));
    }
    Ok(json!({ "type": kind.as_str(), "curves": curves }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = bundledModel)]
pub fn bundled_model(name: &str) -> Result<String, JsError> {
    model_text(name).map(str::to_string).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn align(model: &str, trace: &str, costs: &str) -> Result<String, JsError> {
    to_js(align_value(model, trace, costs))
}

#[wasm_bindgen(js_name = injectPlayground)]
pub fn inject_playground(model: &str, n: usize, seed: u64, kind: &str, lambda: f64) -> Result<String, JsError> {
    to_js(inject_value(model, n, seed, kind, lambda))
}

#[wasm_bindgen(js_name = rocCurves)]
pub fn roc_curves(model: &str, seed: u64, n_normal: usize, kind: &str, epochs: usize) -> Result<String, JsError> {
    to_js(roc_value(model, seed, n_normal, kind, epochs))
}

