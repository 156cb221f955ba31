//! Labeled accepting Petri nets.
//!
//! A net is a bipartite graph of places and transitions with an initial and a
//! final marking. Transitions carry either a visible activity label or are
//! silent. Arcs have weight one: firing a transition consumes one token from
//! each input place and produces one token on each output place.

mod parse;
mod playout;
mod soundness;

use std::collections::HashMap;
use std::fmt;

pub use parse::parse_model;
pub use playout::{playout, NoiseParams, DEFAULT_MAX_STEPS};
pub use soundness::{
    check_soundness, reachability_graph, ReachabilityGraph, SoundnessReport, DEFAULT_STATE_CAP,
};

/// Upper bound on the token count of a single place.
pub const MAX_TOKENS: u32 = 1 << 16;

/// Tokens reserved by the alignment notation; never valid activity names.
pub const RESERVED_NAMES: [&str; 2] = ["tau", ">>"];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: duplicate id `{name}`")]
    DuplicateId { line: usize, name: String },
    #[error("line {line}: duplicate arc {from} -> {to}")]
    DuplicateArc { line: usize, from: String, to: String },
    #[error("line {line}: invalid activity name `{name}`")]
    InvalidActivity { line: usize, name: String },
    #[error("missing initial marking")]
    MissingInitial,
    #[error("missing final marking")]
    MissingFinal,
    #[error("transition `{0}` has no input place")]
    NoInput(String),
    #[error("transition `{0}` has no output place")]
    NoOutput(String),
    #[error("transition `{0}` is not enabled")]
    Disabled(String),
    #[error("place `{0}` exceeds the token bound")]
    TokenOverflow(String),
    #[error("no place `{0}`")]
    NoSuchPlace(String),
    #[error("no transition `{0}`")]
    NoSuchTransition(String),
    #[error("deadlock: no enabled transition before reaching the final marking")]
    Deadlock,
    #[error("playout cannot reach final marking")]
    PlayoutExhausted,
    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),
}

/// Token distribution over the places of a net, indexed by place position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(n_places: usize) -> Self {
        Marking(vec![0; n_places])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Marking(counts)
    }

    pub fn get(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    fn add(&mut self, place: usize, n: u32) {
        self.0[place] += n;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` for silent transitions.
    pub label: Option<String>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// A labeled accepting Petri net.
///
/// Transitions are stored in lexicographic order of their ids, so a
/// transition index doubles as a stable tie-break key.
#[derive(Clone, Debug)]
pub struct PetriNet {
    name: String,
    places: Vec<String>,
    transitions: Vec<Transition>,
    preset: Vec<Vec<usize>>,
    postset: Vec<Vec<usize>>,
    place_index: HashMap<String, usize>,
    trans_index: HashMap<String, usize>,
    initial: Marking,
    final_marking: Marking,
}

/// Incremental construction of a [`PetriNet`].
///
/// [`NetBuilder::build`] enforces the structural invariants: unique ids,
/// arcs between existing nodes of different kinds, non-empty initial and
/// final markings, and at least one input and one output per transition.
#[derive(Default, Debug, Clone)]
pub struct NetBuilder {
    name: String,
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<(String, String)>,
    initial: Vec<(String, u32)>,
    final_marking: Vec<(String, u32)>,
}

impl NetBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn place(mut self, id: &str) -> Self {
        self.places.push(id.to_string());
        self
    }

    pub fn transition(mut self, id: &str, label: Option<&str>) -> Self {
        self.transitions.push(Transition {
            id: id.to_string(),
            label: label.map(str::to_string),
        });
        self
    }

    pub fn arc(mut self, from: &str, to: &str) -> Self {
        self.arcs.push((from.to_string(), to.to_string()));
        self
    }

    pub fn initial(mut self, place: &str, count: u32) -> Self {
        self.initial.push((place.to_string(), count));
        self
    }

    pub fn final_marking(mut self, place: &str, count: u32) -> Self {
        self.final_marking.push((place.to_string(), count));
        self
    }

    pub fn build(self) -> Result<PetriNet, NetError> {
        let mut lines = parse::SourceLines::default();
        lines.places = self.places.into_iter().map(|p| (0, p)).collect();
        lines.transitions = self.transitions.into_iter().map(|t| (0, t)).collect();
        lines.arcs = self.arcs.into_iter().map(|(a, b)| (0, a, b)).collect();
        lines.initial = self.initial.into_iter().map(|(p, c)| (0, p, c)).collect();
        lines.final_marking = self
            .final_marking
            .into_iter()
            .map(|(p, c)| (0, p, c))
            .collect();
        lines.assemble(self.name)
    }
}

impl PetriNet {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n_places(&self) -> usize {
        self.places.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, t: usize) -> &Transition {
        &self.transitions[t]
    }

    pub fn place_id(&self, p: usize) -> &str {
        &self.places[p]
    }

    pub fn place_idx(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn transition_idx(&self, id: &str) -> Option<usize> {
        self.trans_index.get(id).copied()
    }

    pub fn preset(&self, t: usize) -> &[usize] {
        &self.preset[t]
    }

    pub fn postset(&self, t: usize) -> &[usize] {
        &self.postset[t]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn n_silent(&self) -> usize {
        self.transitions.iter().filter(|t| t.is_silent()).count()
    }

    /// Sorted, de-duplicated visible labels.
    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn has_label(&self, activity: &str) -> bool {
        self.transitions
            .iter()
            .any(|t| t.label.as_deref() == Some(activity))
    }

    /// Builds a marking from `(place id, count)` pairs.
    pub fn marking(&self, tokens: &[(&str, u32)]) -> Result<Marking, NetError> {
        let mut m = Marking::empty(self.places.len());
        for &(id, n) in tokens {
            let p = self
                .place_idx(id)
                .ok_or_else(|| NetError::NoSuchPlace(id.to_string()))?;
            m.add(p, n);
        }
        Ok(m)
    }

    /// Transitions whose every input place holds a token, in index order.
    ///
    /// A transition with an empty preset is never enabled. Such nets cannot
    /// be loaded from a model file but arise from [`PetriNet::without_arc`].
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        let pre = &self.preset[t];
        !pre.is_empty() && pre.iter().all(|&p| m.0[p] > 0)
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        if !self.is_enabled(m, t) {
            return Err(NetError::Disabled(self.transitions[t].id.clone()));
        }
        let mut next = m.clone();
        for &p in &self.preset[t] {
            next.0[p] -= 1;
        }
        for &p in &self.postset[t] {
            if next.0[p] >= MAX_TOKENS {
                return Err(NetError::TokenOverflow(self.places[p].clone()));
            }
            next.0[p] += 1;
        }
        Ok(next)
    }

    pub fn fire_id(&self, m: &Marking, id: &str) -> Result<Marking, NetError> {
        let t = self
            .transition_idx(id)
            .ok_or_else(|| NetError::NoSuchTransition(id.to_string()))?;
        self.fire(m, t)
    }

    /// Exactly one source place, exactly one sink place, `M0 = [source]`
    /// and at least one token on the sink in the final marking.
    pub fn is_workflow_net(&self) -> bool {
        let n = self.places.len();
        let mut has_in = vec![false; n];
        let mut has_out = vec![false; n];
        for t in 0..self.transitions.len() {
            for &p in &self.preset[t] {
                has_out[p] = true;
            }
            for &p in &self.postset[t] {
                has_in[p] = true;
            }
        }
        let sources: Vec<usize> = (0..n).filter(|&p| !has_in[p]).collect();
        let sinks: Vec<usize> = (0..n).filter(|&p| !has_out[p]).collect();
        if sources.len() != 1 || sinks.len() != 1 {
            return false;
        }
        let (source, sink) = (sources[0], sinks[0]);
        let initial_ok = (0..n).all(|p| self.initial.0[p] == u32::from(p == source));
        initial_ok && self.final_marking.0[sink] >= 1
    }

    /// Copy of the net with the arc `from -> to` removed.
    ///
    /// The result skips the one-input/one-output check so that broken
    /// variants of a valid net can be analysed.
    pub fn without_arc(&self, from: &str, to: &str) -> Result<PetriNet, NetError> {
        let mut net = self.clone();
        if let (Some(p), Some(t)) = (self.place_idx(from), self.transition_idx(to)) {
            net.preset[t].retain(|&q| q != p);
        } else if let (Some(t), Some(p)) = (self.transition_idx(from), self.place_idx(to)) {
            net.postset[t].retain(|&q| q != p);
        } else {
            return Err(NetError::UnknownNode {
                line: 0,
                name: format!("{from} -> {to}"),
            });
        }
        Ok(net)
    }

    /// Renders a marking as `[p1:1, p2:1]`.
    pub fn display_marking(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(p, c)| format!("{}:{}", self.places[p], c))
            .collect();
        format!("[{}]", parts.join(", "))
    }
}

impl fmt::Display for PetriNet {
    /// Writes the net in the line-oriented model format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.places {
            writeln!(f, "place {p}")?;
        }
        for t in &self.transitions {
            match &t.label {
                Some(l) => writeln!(f, "trans {} label {}", t.id, l)?,
                None => writeln!(f, "trans {} silent", t.id)?,
            }
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            for &p in &self.preset[t] {
                writeln!(f, "arc {} {}", self.places[p], tr.id)?;
            }
            for &p in &self.postset[t] {
                writeln!(f, "arc {} {}", tr.id, self.places[p])?;
            }
        }
        for (p, &c) in self.initial.0.iter().enumerate() {
            if c > 0 {
                writeln!(f, "init {} {}", self.places[p], c)?;
            }
        }
        for (p, &c) in self.final_marking.0.iter().enumerate() {
            if c > 0 {
                writeln!(f, "final {} {}", self.places[p], c)?;
            }
        }
        Ok(())
    }
}

/// Bundled model files.
pub mod fixtures {
    /// Small example net with an AND-split, an XOR choice and a silent loop.
    pub const FN1: &str = include_str!("../../models/fn1.net");
    /// Start of Mission workflow net in four sequential phases.
    pub const SOM: &str = include_str!("../../models/som.net");

    pub fn fn1() -> super::PetriNet {
        super::parse_model(FN1)
            .expect("bundled fn1.net is valid")
            .with_name("fn1")
    }

    pub fn som() -> super::PetriNet {
        super::parse_model(SOM)
            .expect("bundled som.net is valid")
            .with_name("som")
    }
}
