//! Optimal alignments between traces and a net, fitness, misalignment
//! counters and coverage.

mod search;

use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::eventlog::{EventLog, Trace};
use crate::petri::{reachability_graph, PetriNet, ReachabilityGraph, DEFAULT_STATE_CAP};
pub use search::Heuristic;

/// Rendering of the skip symbol in alignment tables.
pub const SKIP: &str = ">>";
/// Rendering of a silent model step.
pub const SILENT: &str = "tau";
/// Column collecting log moves on activities the model does not know.
pub const UNKNOWN: &str = "UNKNOWN";
/// Default bound on expanded product states per alignment.
pub const DEFAULT_ALIGN_CAP: usize = 1_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("alignment state-space exhausted")]
    StateSpaceExhausted,
    #[error("final marking unreachable")]
    FinalUnreachable,
    #[error("invalid cost scheme: {0}")]
    InvalidCosts(String),
    #[error("worst-case alignment cost is zero")]
    ZeroWorstCase,
    #[error("empty event log")]
    EmptyLog,
    #[error("case `{case}`: {source}")]
    InCase {
        case: String,
        #[source]
        source: Box<AlignError>,
    },
}

/// Move costs. Synchronous moves are free; log and visible model moves
/// must cost something.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CostScheme {
    pub log: u32,
    pub model: u32,
    pub silent: u32,
    pub sync: u32,
}

impl Default for CostScheme {
    fn default() -> Self {
        CostScheme {
            log: 1,
            model: 1,
            silent: 0,
            sync: 0,
        }
    }
}

impl CostScheme {
    pub fn new(log: u32, model: u32, silent: u32) -> Result<Self, AlignError> {
        let c = CostScheme {
            log,
            model,
            silent,
            sync: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), AlignError> {
        if self.log == 0 || self.model == 0 {
            return Err(AlignError::InvalidCosts(
                "log and model moves must have positive cost".into(),
            ));
        }
        if self.sync != 0 {
            return Err(AlignError::InvalidCosts(
                "synchronous moves must be free".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for CostScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.log, self.model, self.silent, self.sync)
    }
}

impl std::str::FromStr for CostScheme {
    type Err = AlignError;

    /// Parses `log/model/silent/sync`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u32> = s
            .split('/')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| AlignError::InvalidCosts(format!("cannot parse `{s}`")))?;
        let [log, model, silent, sync] = parts[..] else {
            return Err(AlignError::InvalidCosts(format!("expected 4 fields in `{s}`")));
        };
        let c = CostScheme {
            log,
            model,
            silent,
            sync,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Synchronous,
    Log,
    Model,
    Silent,
}

/// One column of an alignment. `(>>, >>)` is unrepresentable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Synchronous { activity: String, transition: String },
    Log { activity: String },
    /// `label` is `None` for a silent transition.
    Model { transition: String, label: Option<String> },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Synchronous { .. } => MoveKind::Synchronous,
            Move::Log { .. } => MoveKind::Log,
            Move::Model { label: None, .. } => MoveKind::Silent,
            Move::Model { .. } => MoveKind::Model,
        }
    }

    pub fn log_part(&self) -> Option<&str> {
        match self {
            Move::Synchronous { activity, .. } | Move::Log { activity } => Some(activity),
            Move::Model { .. } => None,
        }
    }

    pub fn model_part(&self) -> Option<&str> {
        match self {
            Move::Synchronous { transition, .. } | Move::Model { transition, .. } => {
                Some(transition)
            }
            Move::Log { .. } => None,
        }
    }

    pub fn cost(&self, costs: &CostScheme) -> u64 {
        (match self.kind() {
            MoveKind::Synchronous => costs.sync,
            MoveKind::Log => costs.log,
            MoveKind::Model => costs.model,
            MoveKind::Silent => costs.silent,
        }) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub moves: Vec<Move>,
    pub cost: u64,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Log row without skips.
    pub fn log_projection(&self) -> Vec<&str> {
        self.moves.iter().filter_map(Move::log_part).collect()
    }

    /// Model row (transition ids) without skips.
    pub fn model_projection(&self) -> Vec<&str> {
        self.moves.iter().filter_map(Move::model_part).collect()
    }
}

impl fmt::Display for Alignment {
    /// Two-row table; silent model steps print as `tau`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<(String, String)> = self
            .moves
            .iter()
            .map(|m| {
                let top = m.log_part().unwrap_or(SKIP).to_string();
                let bottom = match m {
                    Move::Model { label: None, .. } => SILENT.to_string(),
                    _ => m.model_part().unwrap_or(SKIP).to_string(),
                };
                (top, bottom)
            })
            .collect();
        let widths: Vec<usize> = cells.iter().map(|(a, b)| a.len().max(b.len())).collect();
        let row = |pick: &dyn Fn(&(String, String)) -> &str| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{:w$}", pick(c), w = *w))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        writeln!(f, "{}", row(&|c| &c.0))?;
        write!(f, "{}", row(&|c| &c.1))
    }
}

/// Per-trace diagnoses: misalignment counts per column plus fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub case_id: String,
    /// One count per visible label (sorted) followed by the unknown column.
    pub counts: Vec<u32>,
    pub fitness: f64,
}

/// Reusable aligner for one net and cost scheme.
///
/// Construction explores the reachability graph once (bounded) for the
/// heuristic and computes the cheapest model-only run.
pub struct Aligner<'a> {
    net: &'a PetriNet,
    costs: CostScheme,
    heuristic: Heuristic,
    state_cap: usize,
    rg: Option<ReachabilityGraph>,
    rev: Vec<Vec<(usize, usize)>>,
    labels: Vec<String>,
    model_only: u64,
}

impl<'a> Aligner<'a> {
    pub fn new(net: &'a PetriNet, costs: CostScheme) -> Result<Self, AlignError> {
        Self::with_options(net, costs, Heuristic::default(), DEFAULT_ALIGN_CAP)
    }

    pub fn with_options(
        net: &'a PetriNet,
        costs: CostScheme,
        heuristic: Heuristic,
        state_cap: usize,
    ) -> Result<Self, AlignError> {
        costs.validate()?;
        let (rg, rev) = match heuristic {
            Heuristic::Completion => {
                let rg = reachability_graph(net, DEFAULT_STATE_CAP);
                if rg.complete {
                    let rev = rg.reverse_edges();
                    (Some(rg), rev)
                } else {
                    (None, Vec::new())
                }
            }
            Heuristic::Zero => (None, Vec::new()),
        };
        let mut aligner = Aligner {
            net,
            costs,
            heuristic,
            state_cap,
            rg,
            rev,
            labels: net.labels(),
            model_only: 0,
        };
        aligner.model_only = aligner.align_events(&[])?.cost;
        Ok(aligner)
    }

    pub fn net(&self) -> &PetriNet {
        self.net
    }

    pub fn costs(&self) -> CostScheme {
        self.costs
    }

    /// Sorted visible labels; the diagnosis columns before `UNKNOWN`.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn align(&self, trace: &Trace) -> Result<Alignment, AlignError> {
        self.align_events(&trace.events)
    }

    pub fn align_events(&self, events: &[String]) -> Result<Alignment, AlignError> {
        let searcher = search::Searcher {
            net: self.net,
            costs: self.costs,
            rg: self.rg.as_ref(),
            rev: self.rg.as_ref().map(|_| self.rev.as_slice()),
            heuristic: self.heuristic,
            state_cap: self.state_cap,
        };
        let (moves, cost) = searcher.run(events)?;
        Ok(Alignment { moves, cost })
    }

    /// Cost of aligning nothing: every event as a log move plus the
    /// cheapest model-only run.
    pub fn worst_case_cost(&self, trace_len: usize) -> u64 {
        self.costs.log as u64 * trace_len as u64 + self.model_only
    }

    pub fn fitness_of(&self, alignment: &Alignment, trace_len: usize) -> Result<f64, AlignError> {
        let worst = self.worst_case_cost(trace_len);
        if worst == 0 {
            return Err(AlignError::ZeroWorstCase);
        }
        Ok(1.0 - alignment.cost as f64 / worst as f64)
    }

    pub fn trace_fitness(&self, trace: &Trace) -> Result<f64, AlignError> {
        let a = self.align(trace)?;
        self.fitness_of(&a, trace.len())
    }

    pub fn misalignments(&self, alignment: &Alignment) -> Vec<u32> {
        misalignments(alignment, &self.labels)
    }

    /// Alignment, counters and fitness for one trace.
    pub fn diagnose(&self, trace: &Trace) -> Result<(Alignment, DiagRow), AlignError> {
        let wrap = |e: AlignError| AlignError::InCase {
            case: trace.case_id.clone(),
            source: Box::new(e),
        };
        let a = self.align(trace).map_err(wrap)?;
        let fitness = self.fitness_of(&a, trace.len()).map_err(wrap)?;
        let row = DiagRow {
            case_id: trace.case_id.clone(),
            counts: self.misalignments(&a),
            fitness,
        };
        Ok((a, row))
    }

    /// Diagnoses every trace, preserving log order.
    pub fn diagnose_log(&self, log: &EventLog) -> Result<Vec<(Alignment, DiagRow)>, AlignError> {
        #[cfg(feature = "parallel")]
        let iter = log.traces().par_iter();
        #[cfg(not(feature = "parallel"))]
        let iter = log.traces().iter();
        iter.map(|t| self.diagnose(t)).collect()
    }
}

pub fn optimal_alignment(
    net: &PetriNet,
    trace: &Trace,
    costs: CostScheme,
) -> Result<Alignment, AlignError> {
    Aligner::new(net, costs)?.align(trace)
}

pub fn worst_case_cost(net: &PetriNet, trace: &Trace, costs: CostScheme) -> Result<u64, AlignError> {
    Ok(Aligner::new(net, costs)?.worst_case_cost(trace.len()))
}

/// `1 - cost(optimal) / cost(worst case)`.
pub fn trace_fitness(net: &PetriNet, trace: &Trace, costs: CostScheme) -> Result<f64, AlignError> {
    Aligner::new(net, costs)?.trace_fitness(trace)
}

/// Mean trace fitness.
pub fn log_fitness(net: &PetriNet, log: &EventLog, costs: CostScheme) -> Result<f64, AlignError> {
    if log.is_empty() {
        return Err(AlignError::EmptyLog);
    }
    let rows = Aligner::new(net, costs)?.diagnose_log(log)?;
    Ok(rows.iter().map(|(_, r)| r.fitness).sum::<f64>() / log.len() as f64)
}

/// Counts non-synchronous, non-silent moves per activity.
///
/// `labels` must be sorted; the result has one extra trailing slot for log
/// moves on activities outside `labels`.
pub fn misalignments(alignment: &Alignment, labels: &[String]) -> Vec<u32> {
    let mut counts = vec![0u32; labels.len() + 1];
    let slot = |a: &str| labels.binary_search_by(|l| l.as_str().cmp(a)).ok();
    for m in &alignment.moves {
        match m {
            Move::Log { activity } => match slot(activity) {
                Some(i) => counts[i] += 1,
                None => counts[labels.len()] += 1,
            },
            Move::Model {
                label: Some(label), ..
            } => {
                if let Some(i) = slot(label) {
                    counts[i] += 1;
                }
            }
            Move::Synchronous { .. } | Move::Model { label: None, .. } => {}
        }
    }
    counts
}

/// `1 - total misalignments / total alignment length` over a log.
pub fn coverage_of(rows: &[(Alignment, DiagRow)]) -> Result<f64, AlignError> {
    if rows.is_empty() {
        return Err(AlignError::EmptyLog);
    }
    let mis: u64 = rows
        .iter()
        .map(|(_, r)| r.counts.iter().map(|&c| c as u64).sum::<u64>())
        .sum();
    let len: u64 = rows.iter().map(|(a, _)| a.len() as u64).sum();
    if len == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - mis as f64 / len as f64)
}

pub fn coverage(net: &PetriNet, log: &EventLog, costs: CostScheme) -> Result<f64, AlignError> {
    if log.is_empty() {
        return Err(AlignError::EmptyLog);
    }
    coverage_of(&Aligner::new(net, costs)?.diagnose_log(log)?)
}
