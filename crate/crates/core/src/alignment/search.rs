//! Best-first search over the synchronous product of a net and a trace.
//!
//! A product state is a pair (marking, trace position). Moves:
//!
//! * synchronous: fire an enabled transition whose label is the next event,
//!   advance the position;
//! * model: fire any enabled transition, stay at the same position;
//! * log: advance the position without firing.
//!
//! The search runs in two phases. Phase one is A* with a consistent
//! heuristic that keeps expanding until every state with `f <= C*` is
//! closed, which gives exact `g` values for every state on any optimal
//! path. Phase two walks the tight edges (`g(s) + c = g(s')`) from the start
//! in move-preference order, yielding the lexicographically first optimal
//! alignment.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::{AlignError, CostScheme, Move};
use crate::petri::{Marking, PetriNet, ReachabilityGraph};

pub(super) const INF: u64 = u64::MAX;

/// Lower bound on remaining cost used to guide the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    /// Cheapest completion of the model from the current marking, where
    /// transitions labelled with an activity still ahead in the trace are
    /// free, plus one log move per remaining event outside the model
    /// alphabet.
    #[default]
    Completion,
    /// Plain uniform-cost search.
    Zero,
}

pub(super) struct Searcher<'a> {
    pub net: &'a PetriNet,
    pub costs: CostScheme,
    pub rg: Option<&'a ReachabilityGraph>,
    pub rev: Option<&'a [Vec<(usize, usize)>]>,
    pub heuristic: Heuristic,
    pub state_cap: usize,
}

#[derive(Clone, Copy)]
enum Step {
    Sync(usize),
    Model(usize),
    Log,
}

impl Step {
    fn rank(self, net: &PetriNet) -> (u8, usize) {
        match self {
            Step::Sync(t) => (0, t),
            Step::Model(t) if net.transition(t).is_silent() => (1, t),
            Step::Model(t) => (2, t),
            Step::Log => (3, 0),
        }
    }
}

struct Product {
    markings: Vec<Marking>,
    marking_ids: HashMap<Marking, usize>,
    states: Vec<(usize, usize)>,
    state_ids: HashMap<(usize, usize), usize>,
    g: Vec<u64>,
    closed: Vec<bool>,
}

impl Product {
    fn intern_marking(&mut self, m: Marking) -> usize {
        if let Some(&id) = self.marking_ids.get(&m) {
            return id;
        }
        let id = self.markings.len();
        self.marking_ids.insert(m.clone(), id);
        self.markings.push(m);
        id
    }

    fn intern_state(&mut self, key: (usize, usize)) -> (usize, bool) {
        if let Some(&id) = self.state_ids.get(&key) {
            return (id, false);
        }
        let id = self.states.len();
        self.state_ids.insert(key, id);
        self.states.push(key);
        self.g.push(INF);
        self.closed.push(false);
        (id, true)
    }
}

impl<'a> Searcher<'a> {
    /// Successor moves of `(m, pos)` in preference order: synchronous,
    /// silent model, visible model, log; transitions by id within a kind.
    fn successors(&self, m: &Marking, pos: usize, trace: &[String]) -> Vec<(Step, Marking, usize, u64)> {
        let mut out = Vec::new();
        let enabled = self.net.enabled(m);
        let next = trace.get(pos);
        for &t in &enabled {
            let Ok(m2) = self.net.fire(m, t) else { continue };
            let tr = self.net.transition(t);
            if let (Some(label), Some(ev)) = (&tr.label, next) {
                if label == ev {
                    out.push((Step::Sync(t), m2.clone(), pos + 1, self.costs.sync as u64));
                }
            }
            let c = if tr.is_silent() {
                self.costs.silent
            } else {
                self.costs.model
            };
            out.push((Step::Model(t), m2, pos, c as u64));
        }
        if next.is_some() {
            out.push((Step::Log, m.clone(), pos + 1, self.costs.log as u64));
        }
        out.sort_by_key(|(s, ..)| s.rank(self.net));
        out
    }

    pub fn run(&self, trace: &[String]) -> Result<(Vec<Move>, u64), AlignError> {
        let mut h = HeuristicTable::new(self, trace);
        let mut p = Product {
            markings: Vec::new(),
            marking_ids: HashMap::new(),
            states: Vec::new(),
            state_ids: HashMap::new(),
            g: Vec::new(),
            closed: Vec::new(),
        };
        let m0 = p.intern_marking(self.net.initial_marking().clone());
        let (start, _) = p.intern_state((m0, 0));
        p.g[start] = 0;
        let h0 = h.value(&p.markings[m0], 0);
        if h0 == INF {
            return Err(AlignError::FinalUnreachable);
        }
        let mut heap = BinaryHeap::from([Reverse((h0, start))]);
        let mut best = INF;
        let mut expanded = 0usize;
        let n = trace.len();

        while let Some(Reverse((f, s))) = heap.pop() {
            if f > best {
                break;
            }
            if p.closed[s] {
                continue;
            }
            p.closed[s] = true;
            let (mid, pos) = p.states[s];
            let g = p.g[s];
            if pos == n && &p.markings[mid] == self.net.final_marking() {
                best = best.min(g);
            }
            expanded += 1;
            if expanded > self.state_cap {
                return Err(AlignError::StateSpaceExhausted);
            }
            let m = p.markings[mid].clone();
            for (_, m2, pos2, c) in self.successors(&m, pos, trace) {
                let mid2 = p.intern_marking(m2);
                let hv = h.value(&p.markings[mid2], pos2);
                if hv == INF {
                    continue;
                }
                let (s2, _) = p.intern_state((mid2, pos2));
                let g2 = g + c;
                if !p.closed[s2] && g2 < p.g[s2] {
                    p.g[s2] = g2;
                    heap.push(Reverse((g2 + hv, s2)));
                }
            }
        }
        if best == INF {
            return Err(AlignError::FinalUnreachable);
        }

        let moves = self.reconstruct(&p, start, trace);
        Ok((moves, best))
    }

    /// Depth-first walk over tight edges in preference order.
    fn reconstruct(&self, p: &Product, start: usize, trace: &[String]) -> Vec<Move> {
        let n = trace.len();
        let mut dead = vec![false; p.states.len()];
        let mut on_stack = vec![false; p.states.len()];
        // (state, candidate successors, next candidate index)
        let mut stack: Vec<(usize, Vec<(Step, usize)>, usize)> = Vec::new();
        let mut path: Vec<Step> = Vec::new();

        let tight = |p: &Product, s: usize| -> Vec<(Step, usize)> {
            let (mid, pos) = p.states[s];
            let g = p.g[s];
            let mut out = Vec::new();
            for (step, m2, pos2, c) in self.successors(&p.markings[mid], pos, trace) {
                let Some(&mid2) = p.marking_ids.get(&m2) else { continue };
                let Some(&s2) = p.state_ids.get(&(mid2, pos2)) else { continue };
                if p.closed[s2] && p.g[s2] == g + c {
                    out.push((step, s2));
                }
            }
            out
        };

        on_stack[start] = true;
        let first = tight(p, start);
        stack.push((start, first, 0));
        loop {
            let s = stack.last().expect("start state is never popped").0;
            let (mid, pos) = p.states[s];
            if pos == n && &p.markings[mid] == self.net.final_marking() {
                break;
            }
            let top = stack.last_mut().unwrap();
            if top.2 < top.1.len() {
                let (step, s2) = top.1[top.2];
                top.2 += 1;
                if dead[s2] || on_stack[s2] {
                    continue;
                }
                on_stack[s2] = true;
                path.push(step);
                let cands = tight(p, s2);
                stack.push((s2, cands, 0));
            } else {
                assert!(stack.len() > 1, "an optimal path exists through tight edges");
                dead[s] = true;
                on_stack[s] = false;
                stack.pop();
                path.pop();
            }
        }

        let mut moves = Vec::with_capacity(path.len());
        let mut pos = 0;
        for step in path {
            match step {
                Step::Sync(t) => {
                    moves.push(Move::Synchronous {
                        activity: trace[pos].clone(),
                        transition: self.net.transition(t).id.clone(),
                    });
                    pos += 1;
                }
                Step::Model(t) => {
                    let tr = self.net.transition(t);
                    moves.push(Move::Model {
                        transition: tr.id.clone(),
                        label: tr.label.clone(),
                    });
                }
                Step::Log => {
                    moves.push(Move::Log {
                        activity: trace[pos].clone(),
                    });
                    pos += 1;
                }
            }
        }
        moves
    }
}

/// Lazily computed heuristic values for one trace.
struct HeuristicTable<'s, 'a> {
    searcher: &'s Searcher<'a>,
    /// Cost of forced log moves from each position on.
    unknown_suffix: Vec<u64>,
    /// Visible-label set ahead of each position, as a key into `tables`.
    suffix_keys: Vec<Vec<bool>>,
    label_ids: HashMap<&'a str, usize>,
    tables: HashMap<Vec<bool>, Vec<u64>>,
}

impl<'s, 'a> HeuristicTable<'s, 'a> {
    fn new(searcher: &'s Searcher<'a>, trace: &[String]) -> Self {
        let net = searcher.net;
        let mut label_ids = HashMap::new();
        for t in net.transitions() {
            if let Some(l) = &t.label {
                let next = label_ids.len();
                label_ids.entry(l.as_str()).or_insert(next);
            }
        }
        let n = trace.len();
        let mut unknown_suffix = vec![0u64; n + 1];
        let mut suffix_keys = vec![vec![false; label_ids.len()]; n + 1];
        for i in (0..n).rev() {
            let mut key = suffix_keys[i + 1].clone();
            match label_ids.get(trace[i].as_str()) {
                Some(&l) => {
                    key[l] = true;
                    unknown_suffix[i] = unknown_suffix[i + 1];
                }
                None => unknown_suffix[i] = unknown_suffix[i + 1] + searcher.costs.log as u64,
            }
            suffix_keys[i] = key;
        }
        HeuristicTable {
            searcher,
            unknown_suffix,
            suffix_keys,
            label_ids,
            tables: HashMap::new(),
        }
    }

    fn value(&mut self, m: &Marking, pos: usize) -> u64 {
        let forced = self.unknown_suffix[pos];
        if self.searcher.heuristic == Heuristic::Zero {
            return forced;
        }
        let (Some(rg), Some(rev)) = (self.searcher.rg, self.searcher.rev) else {
            return forced;
        };
        let Some(&idx) = rg.index.get(m) else {
            return forced;
        };
        let key = &self.suffix_keys[pos];
        if !self.tables.contains_key(key) {
            let table = self.completion_costs(rg, rev, key);
            self.tables.insert(key.clone(), table);
        }
        match self.tables[key][idx] {
            INF => INF,
            c => c + forced,
        }
    }

    /// Backward Dijkstra from the final marking over the reachability graph.
    fn completion_costs(
        &self,
        rg: &ReachabilityGraph,
        rev: &[Vec<(usize, usize)>],
        ahead: &[bool],
    ) -> Vec<u64> {
        let net = self.searcher.net;
        let costs = self.searcher.costs;
        let edge_cost = |t: usize| -> u64 {
            match &net.transition(t).label {
                None => costs.silent as u64,
                Some(l) if ahead[self.label_ids[l.as_str()]] => 0,
                Some(_) => costs.model as u64,
            }
        };
        let mut dist = vec![INF; rg.len()];
        let Some(f) = rg.final_state(net) else {
            return dist;
        };
        dist[f] = 0;
        let mut heap = BinaryHeap::from([Reverse((0u64, f))]);
        while let Some(Reverse((d, s))) = heap.pop() {
            if d > dist[s] {
                continue;
            }
            for &(t, src) in &rev[s] {
                let nd = d + edge_cost(t);
                if nd < dist[src] {
                    dist[src] = nd;
                    heap.push(Reverse((nd, src)));
                }
            }
        }
        dist
    }
}
