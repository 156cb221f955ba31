#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use confmon_core::alignment::{Alignment, CostScheme, Move};
use confmon_core::petri::{Marking, NetBuilder, PetriNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: [&str; 4] = ["a", "b", "c", "d"];

enum Block {
    Act(Option<&'static str>),
    Seq(Box<Block>, Box<Block>),
    Xor(Box<Block>, Box<Block>),
    And(Box<Block>, Box<Block>),
    Loop(Box<Block>, Box<Block>),
}

fn random_block(rng: &mut ChaCha8Rng, depth: usize) -> Block {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        let label = if rng.random_bool(0.15) {
            None
        } else {
            Some(ALPHABET[rng.random_range(0..ALPHABET.len())])
        };
        return Block::Act(label);
    }
    let a = Box::new(random_block(rng, depth - 1));
    let b = Box::new(random_block(rng, depth - 1));
    match rng.random_range(0..4) {
        0 => Block::Seq(a, b),
        1 => Block::Xor(a, b),
        2 => Block::And(a, b),
        _ => Block::Loop(a, b),
    }
}

struct Gen {
    b: NetBuilder,
    places: usize,
    transitions: usize,
}

impl Gen {
    fn place(&mut self) -> String {
        let id = format!("p{:02}", self.places);
        self.places += 1;
        self.b = std::mem::replace(&mut self.b, NetBuilder::new("")).place(&id);
        id
    }

    fn trans(&mut self, label: Option<&str>, ins: &[&str], outs: &[&str]) {
        let id = format!("t{:02}", self.transitions);
        self.transitions += 1;
        let mut b = std::mem::replace(&mut self.b, NetBuilder::new("")).transition(&id, label);
        for p in ins {
            b = b.arc(p, &id);
        }
        for p in outs {
            b = b.arc(&id, p);
        }
        self.b = b;
    }

    fn build(&mut self, block: &Block, from: &str, to: &str) {
        match block {
            Block::Act(l) => self.trans(*l, &[from], &[to]),
            Block::Seq(a, b) => {
                let mid = self.place();
                self.build(a, from, &mid);
                self.build(b, &mid, to);
            }
            Block::Xor(a, b) => {
                self.build(a, from, to);
                self.build(b, from, to);
            }
            Block::And(a, b) => {
                let (i1, i2, o1, o2) = (self.place(), self.place(), self.place(), self.place());
                self.trans(None, &[from], &[&i1, &i2]);
                self.build(a, &i1, &o1);
                self.build(b, &i2, &o2);
                self.trans(None, &[&o1, &o2], &[to]);
            }
            Block::Loop(body, redo) => {
                let (start, mid) = (self.place(), self.place());
                self.trans(None, &[from], &[&start]);
                self.build(body, &start, &mid);
                self.build(redo, &mid, &start);
                self.trans(None, &[&mid], &[to]);
            }
        }
    }
}

/// Random block-structured workflow net with at most `max_markings`
/// reachable markings.
pub fn random_workflow_net(seed: u64, max_markings: usize) -> PetriNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let block = random_block(&mut rng, 3);
        let mut g = Gen {
            b: NetBuilder::new(format!("rand{seed}")),
            places: 0,
            transitions: 0,
        };
        let (i, o) = (g.place(), g.place());
        g.build(&block, &i, &o);
        let b = std::mem::replace(&mut g.b, NetBuilder::new(""));
        let net = b.initial(&i, 1).final_marking(&o, 1).build().expect("generated net is valid");
        let markings = reachable_markings(&net, max_markings + 1);
        if markings.len() <= max_markings && net.labels().len() >= 2 {
            return net;
        }
    }
}

/// Breadth-first exploration using only the firing rule.
pub fn reachable_markings(net: &PetriNet, cap: usize) -> Vec<Marking> {
    let mut seen: HashSet<Marking> = HashSet::from([net.initial_marking().clone()]);
    let mut order = vec![net.initial_marking().clone()];
    let mut queue = VecDeque::from([net.initial_marking().clone()]);
    while let Some(m) = queue.pop_front() {
        for t in 0..net.n_transitions() {
            if let Ok(m2) = net.fire(&m, t) {
                if seen.insert(m2.clone()) {
                    order.push(m2.clone());
                    if order.len() >= cap {
                        return order;
                    }
                    queue.push_back(m2);
                }
            }
        }
    }
    order
}

/// Exhaustive optimal alignment cost: Bellman-Ford relaxation over every
/// product state until nothing changes.
pub fn oracle_cost(net: &PetriNet, trace: &[String], costs: CostScheme) -> Option<u64> {
    let markings = reachable_markings(net, usize::MAX);
    let idx: HashMap<&Marking, usize> = markings.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let n = trace.len();
    let state = |m: usize, p: usize| m * (n + 1) + p;
    let mut edges: Vec<(usize, usize, u64)> = Vec::new();
    for (mi, m) in markings.iter().enumerate() {
        for pos in 0..=n {
            if pos < n {
                edges.push((state(mi, pos), state(mi, pos + 1), costs.log as u64));
            }
            for t in 0..net.n_transitions() {
                let Ok(m2) = net.fire(m, t) else { continue };
                let mj = idx[&m2];
                let tr = net.transition(t);
                let c = match tr.label {
                    None => costs.silent,
                    Some(_) => costs.model,
                };
                edges.push((state(mi, pos), state(mj, pos), c as u64));
                if pos < n && tr.label.as_deref() == Some(trace[pos].as_str()) {
                    edges.push((state(mi, pos), state(mj, pos + 1), costs.sync as u64));
                }
            }
        }
    }
    let mut dist = vec![u64::MAX; markings.len() * (n + 1)];
    dist[state(idx[net.initial_marking()], 0)] = 0;
    loop {
        let mut changed = false;
        for &(a, b, c) in &edges {
            if dist[a] != u64::MAX && dist[a] + c < dist[b] {
                dist[b] = dist[a] + c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let f = *idx.get(net.final_marking())?;
    match dist[state(f, n)] {
        u64::MAX => None,
        d => Some(d),
    }
}

/// Checks that an alignment is well formed for `trace`: the log row is the
/// trace, the model row fires from the initial to the final marking, labels
/// agree on synchronous moves, and the cost adds up.
pub fn check_alignment(net: &PetriNet, trace: &[String], a: &Alignment, costs: CostScheme) {
    let log: Vec<&str> = a.log_projection();
    let want: Vec<&str> = trace.iter().map(String::as_str).collect();
    assert_eq!(log, want, "log projection");
    let mut m = net.initial_marking().clone();
    let mut total = 0;
    for mv in &a.moves {
        total += mv.cost(&costs);
        if let Move::Synchronous {
            activity,
            transition,
        } = mv
        {
            let t = net.transition_idx(transition).unwrap();
            assert_eq!(net.transition(t).label.as_deref(), Some(activity.as_str()));
        }
        if let Move::Model {
            transition, label, ..
        } = mv
        {
            let t = net.transition_idx(transition).unwrap();
            assert_eq!(&net.transition(t).label, label);
        }
        if let Some(t) = mv.model_part() {
            m = net.fire_id(&m, t).expect("model row is a firing sequence");
        }
    }
    assert_eq!(&m, net.final_marking(), "model row ends in the final marking");
    assert_eq!(total, a.cost, "cost is the sum of move costs");
}

pub fn random_trace(rng: &mut ChaCha8Rng, alphabet: &[&str], max_len: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
        .collect()
}

pub fn fn1_alphabet() -> Vec<&'static str> {
    vec!["t1", "t2", "t3", "t4", "t5", "t6", "x1", "x2"]
}

/// Soundness facts computed from scratch: whether the final marking is
/// reachable from every reachable marking, and which transitions never fire.
pub fn oracle_soundness(net: &PetriNet) -> (bool, Vec<String>) {
    let ms = reachable_markings(net, usize::MAX);
    let can_reach_final = |start: &Marking| {
        let mut seen = HashSet::from([start.clone()]);
        let mut stack = vec![start.clone()];
        while let Some(m) = stack.pop() {
            if &m == net.final_marking() {
                return true;
            }
            for t in 0..net.n_transitions() {
                if let Ok(m2) = net.fire(&m, t) {
                    if seen.insert(m2.clone()) {
                        stack.push(m2);
                    }
                }
            }
        }
        false
    };
    let option = ms.iter().all(can_reach_final);
    let dead = (0..net.n_transitions())
        .filter(|&t| ms.iter().all(|m| net.fire(m, t).is_err()))
        .map(|t| net.transition(t).id.clone())
        .collect();
    (option, dead)
}
