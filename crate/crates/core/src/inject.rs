//! Poisson-driven control-flow anomaly injection.
//!
//! For each trace a count `K ~ Poisson(lambda)` is drawn, redrawn while it is
//! zero, and `K` modifications of one type are applied:
//!
//! * `MA`: delete `K` events (distinct positions, at most the whole trace);
//! * `WOA`: perform `K` swaps of uniformly chosen position pairs;
//! * `UA`: insert `K` activities drawn from an unknown pool at random
//!   positions.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::eventlog::{EventLog, Label, LogError, Trace};

pub const DEFAULT_LAMBDA: f64 = 3.0;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum InjectError {
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("unknown-activity pool is empty")]
    EmptyPool,
    #[error("pool activity `{0}` is a model label")]
    PoolOverlap(String),
    #[error("case `{0}`: cannot inject into an empty trace")]
    EmptyTrace(String),
    #[error("case `{0}`: no applicable modification after {MAX_ATTEMPTS} attempts")]
    Inapplicable(String),
    #[error("anomaly type ALL applies to logs, not single traces")]
    NotSingle,
    #[error("input log is empty")]
    EmptyLog,
    #[error("unknown anomaly type `{0}`")]
    UnknownType(String),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnomalyType {
    Ma,
    Woa,
    Ua,
    All,
}

impl AnomalyType {
    pub const SINGLE: [AnomalyType; 3] = [AnomalyType::Ma, AnomalyType::Woa, AnomalyType::Ua];
    pub const EVALUATED: [AnomalyType; 4] = [
        AnomalyType::Ma,
        AnomalyType::Woa,
        AnomalyType::Ua,
        AnomalyType::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnomalyType::Ma => "MA",
            AnomalyType::Woa => "WOA",
            AnomalyType::Ua => "UA",
            AnomalyType::All => "ALL",
        }
    }

    fn stream(self) -> u64 {
        match self {
            AnomalyType::Ma => 1,
            AnomalyType::Woa => 2,
            AnomalyType::Ua => 3,
            AnomalyType::All => 4,
        }
    }
}

impl fmt::Display for AnomalyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnomalyType {
    type Err = InjectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ma" => Ok(AnomalyType::Ma),
            "woa" => Ok(AnomalyType::Woa),
            "ua" => Ok(AnomalyType::Ua),
            "all" => Ok(AnomalyType::All),
            _ => Err(InjectError::UnknownType(s.to_string())),
        }
    }
}

/// `unk_1 .. unk_10`.
pub fn default_pool() -> Vec<String> {
    (1..=10).map(|i| format!("unk_{i}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    pub anomaly_type: AnomalyType,
    pub lambda: f64,
    pub unknown_pool: Vec<String>,
    pub seed: u64,
}

impl InjectionSpec {
    pub fn new(anomaly_type: AnomalyType, seed: u64) -> Self {
        InjectionSpec {
            anomaly_type,
            lambda: DEFAULT_LAMBDA,
            unknown_pool: default_pool(),
            seed,
        }
    }

    /// Checks lambda and, for types that insert activities, that the pool is
    /// non-empty and disjoint from `model_labels`.
    pub fn validate(&self, model_labels: &[String]) -> Result<(), InjectError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(InjectError::BadLambda(self.lambda));
        }
        if matches!(self.anomaly_type, AnomalyType::Ua | AnomalyType::All) {
            if self.unknown_pool.is_empty() {
                return Err(InjectError::EmptyPool);
            }
            let labels: HashSet<&str> = model_labels.iter().map(String::as_str).collect();
            if let Some(a) = self
                .unknown_pool
                .iter()
                .find(|a| labels.contains(a.as_str()))
            {
                return Err(InjectError::PoolOverlap(a.clone()));
            }
        }
        Ok(())
    }
}

/// Zero-truncated Poisson draw.
pub fn draw_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<usize, InjectError> {
    let poisson = Poisson::new(lambda).map_err(|_| InjectError::BadLambda(lambda))?;
    loop {
        let k = poisson.sample(rng) as usize;
        if k >= 1 {
            return Ok(k);
        }
    }
}

/// Applies one anomaly type to a trace. Returns the labeled result and the
/// number of modifications actually applied.
pub fn inject_trace<R: Rng + ?Sized>(
    trace: &Trace,
    kind: AnomalyType,
    lambda: f64,
    pool: &[String],
    rng: &mut R,
) -> Result<(Trace, usize), InjectError> {
    let k = draw_count(lambda, rng)?;
    let mut events = trace.events.clone();
    let applied = match kind {
        AnomalyType::Ma => {
            if events.is_empty() {
                return Err(InjectError::EmptyTrace(trace.case_id.clone()));
            }
            let n = k.min(events.len());
            let mut drop = sample(rng, events.len(), n).into_vec();
            drop.sort_unstable_by(|a, b| b.cmp(a));
            for i in drop {
                events.remove(i);
            }
            n
        }
        AnomalyType::Woa => {
            if events.is_empty() {
                return Err(InjectError::EmptyTrace(trace.case_id.clone()));
            }
            if events.len() < 2 {
                return Err(InjectError::Inapplicable(trace.case_id.clone()));
            }
            let mut attempt = 0;
            loop {
                let mut swapped = trace.events.clone();
                for _ in 0..k {
                    let pair = sample(rng, swapped.len(), 2);
                    swapped.swap(pair.index(0), pair.index(1));
                }
                if swapped != trace.events {
                    events = swapped;
                    break;
                }
                attempt += 1;
                if attempt >= MAX_ATTEMPTS {
                    return Err(InjectError::Inapplicable(trace.case_id.clone()));
                }
            }
            k
        }
        AnomalyType::Ua => {
            if pool.is_empty() {
                return Err(InjectError::EmptyPool);
            }
            for _ in 0..k {
                let a = pool[rng.random_range(0..pool.len())].clone();
                let at = rng.random_range(0..=events.len());
                events.insert(at, a);
            }
            k
        }
        AnomalyType::All => return Err(InjectError::NotSingle),
    };
    let out = Trace {
        case_id: trace.case_id.clone(),
        events,
        label: Some(Label::Anomalous),
    };
    Ok((out, applied))
}

/// Per-trace generator: `seed ^ index` on a stream chosen by anomaly type.
pub fn trace_rng(seed: u64, index: usize, kind: AnomalyType) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
    rng.set_stream(kind.stream());
    rng
}

/// Injects one anomaly type into every trace; case ids get a `_<type>`
/// suffix. Also returns the applied count per trace.
pub fn inject_log(
    log: &EventLog,
    kind: AnomalyType,
    lambda: f64,
    pool: &[String],
    seed: u64,
) -> Result<(EventLog, Vec<usize>), InjectError> {
    if kind == AnomalyType::All {
        return Err(InjectError::NotSingle);
    }
    let suffix = kind.as_str().to_ascii_lowercase();
    let mut traces = Vec::with_capacity(log.len());
    let mut counts = Vec::with_capacity(log.len());
    for (i, t) in log.iter().enumerate() {
        let mut rng = trace_rng(seed, i, kind);
        let (mut out, k) = inject_trace(t, kind, lambda, pool, &mut rng)?;
        out.case_id = format!("{}_{suffix}", t.case_id);
        traces.push(out);
        counts.push(k);
    }
    Ok((EventLog::new(traces)?, counts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSets {
    pub ma: EventLog,
    pub woa: EventLog,
    pub ua: EventLog,
    /// Concatenation of the three.
    pub all: EventLog,
}

impl EvalSets {
    pub fn get(&self, kind: AnomalyType) -> &EventLog {
        match kind {
            AnomalyType::Ma => &self.ma,
            AnomalyType::Woa => &self.woa,
            AnomalyType::Ua => &self.ua,
            AnomalyType::All => &self.all,
        }
    }
}

/// Three independent injection passes over `normal`, one per type.
pub fn build_eval_sets(
    normal: &EventLog,
    lambda: f64,
    pool: &[String],
    seed: u64,
) -> Result<EvalSets, InjectError> {
    if normal.is_empty() {
        return Err(InjectError::EmptyLog);
    }
    let (ma, _) = inject_log(normal, AnomalyType::Ma, lambda, pool, seed)?;
    let (woa, _) = inject_log(normal, AnomalyType::Woa, lambda, pool, seed)?;
    let (ua, _) = inject_log(normal, AnomalyType::Ua, lambda, pool, seed)?;
    let all = EventLog::concat(&[&ma, &woa, &ua])?;
    Ok(EvalSets { ma, woa, ua, all })
}

/// Entry point used by the command line: a single type, or all three
/// concatenated.
pub fn inject(log: &EventLog, spec: &InjectionSpec) -> Result<EventLog, InjectError> {
    match spec.anomaly_type {
        AnomalyType::All => {
            Ok(build_eval_sets(log, spec.lambda, &spec.unknown_pool, spec.seed)?.all)
        }
        kind => Ok(inject_log(log, kind, spec.lambda, &spec.unknown_pool, spec.seed)?.0),
    }
}
