use std::collections::{HashMap, VecDeque};

use super::{Marking, PetriNet};

pub const DEFAULT_STATE_CAP: usize = 100_000;

/// Explicit reachability graph from the initial marking.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    pub markings: Vec<Marking>,
    pub index: HashMap<Marking, usize>,
    /// Outgoing `(transition, target)` edges per marking.
    pub edges: Vec<Vec<(usize, usize)>>,
    /// False when exploration stopped at the state cap (or a token bound).
    pub complete: bool,
}

impl ReachabilityGraph {
    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    /// Index of the net's final marking, if it was reached.
    pub fn final_state(&self, net: &PetriNet) -> Option<usize> {
        self.index.get(net.final_marking()).copied()
    }

    /// Reverse adjacency: for every marking, the `(transition, source)` edges
    /// that lead into it.
    pub fn reverse_edges(&self) -> Vec<Vec<(usize, usize)>> {
        let mut rev = vec![Vec::new(); self.markings.len()];
        for (src, out) in self.edges.iter().enumerate() {
            for &(t, dst) in out {
                rev[dst].push((t, src));
            }
        }
        rev
    }
}

/// Breadth-first exploration of at most `cap` markings.
pub fn reachability_graph(net: &PetriNet, cap: usize) -> ReachabilityGraph {
    let mut rg = ReachabilityGraph {
        markings: vec![net.initial_marking().clone()],
        index: HashMap::from([(net.initial_marking().clone(), 0)]),
        edges: vec![Vec::new()],
        complete: true,
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let m = rg.markings[s].clone();
        for t in net.enabled(&m) {
            let Ok(next) = net.fire(&m, t) else {
                rg.complete = false;
                continue;
            };
            let target = match rg.index.get(&next) {
                Some(&i) => i,
                None => {
                    if rg.markings.len() >= cap {
                        rg.complete = false;
                        continue;
                    }
                    let i = rg.markings.len();
                    rg.index.insert(next.clone(), i);
                    rg.markings.push(next);
                    rg.edges.push(Vec::new());
                    queue.push_back(i);
                    i
                }
            };
            rg.edges[s].push((t, target));
        }
    }
    rg
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub reachable_markings: usize,
    /// The state cap was hit; the remaining fields describe a partial graph.
    pub inconclusive: bool,
    /// The final marking is reachable from every reachable marking.
    pub final_always_reachable: bool,
    /// Transitions not enabled in any reachable marking.
    pub dead_transitions: Vec<String>,
    /// Places never marked in any reachable marking.
    pub dead_places: Vec<String>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        !self.inconclusive
            && self.final_always_reachable
            && self.dead_transitions.is_empty()
            && self.dead_places.is_empty()
    }
}

/// Checks that the final marking stays reachable and that nothing is dead,
/// exploring at most `state_cap` markings.
pub fn check_soundness(net: &PetriNet, state_cap: usize) -> SoundnessReport {
    let rg = reachability_graph(net, state_cap);

    let mut can_finish = vec![false; rg.len()];
    if let Some(f) = rg.final_state(net) {
        let rev = rg.reverse_edges();
        can_finish[f] = true;
        let mut queue = VecDeque::from([f]);
        while let Some(s) = queue.pop_front() {
            for &(_, src) in &rev[s] {
                if !can_finish[src] {
                    can_finish[src] = true;
                    queue.push_back(src);
                }
            }
        }
    }

    let mut fired = vec![false; net.n_transitions()];
    let mut marked = vec![false; net.n_places()];
    for (s, out) in rg.edges.iter().enumerate() {
        for &(t, _) in out {
            fired[t] = true;
        }
        for (p, &c) in rg.markings[s].counts().iter().enumerate() {
            if c > 0 {
                marked[p] = true;
            }
        }
    }
    // Transitions enabled only at the cap boundary still count as live.
    for m in &rg.markings {
        for t in net.enabled(m) {
            fired[t] = true;
        }
    }

    SoundnessReport {
        reachable_markings: rg.len(),
        inconclusive: !rg.complete,
        final_always_reachable: can_finish.iter().all(|&b| b),
        dead_transitions: (0..net.n_transitions())
            .filter(|&t| !fired[t])
            .map(|t| net.transition(t).id.clone())
            .collect(),
        dead_places: (0..net.n_places())
            .filter(|&p| !marked[p])
            .map(|p| net.place_id(p).to_string())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::{fixtures, parse_model};

    #[test]
    fn fn1_is_sound() {
        let report = check_soundness(&fixtures::fn1(), DEFAULT_STATE_CAP);
        assert!(report.is_sound(), "{report:?}");
        assert!(report.dead_transitions.is_empty());
    }

    #[test]
    fn som_is_sound() {
        let report = check_soundness(&fixtures::som(), DEFAULT_STATE_CAP);
        assert!(report.is_sound(), "{report:?}");
    }

    #[test]
    fn dropping_exit_arc_kills_t6() {
        let net = fixtures::fn1().without_arc("p5", "t6").unwrap();
        let report = check_soundness(&net, DEFAULT_STATE_CAP);
        assert!(!report.is_sound());
        assert_eq!(report.dead_transitions, ["t6"]);
        assert!(!report.final_always_reachable);
        assert!(report.dead_places.contains(&"sink".to_string()));
    }

    #[test]
    fn unbounded_net_is_inconclusive() {
        let text = "place i\nplace o\nplace pile\n\
                    trans gen label g\ntrans done label d\n\
                    arc i gen\narc gen i\narc gen pile\narc i done\narc done o\n\
                    init i 1\nfinal o 1\n";
        let net = parse_model(text).unwrap();
        let report = check_soundness(&net, 10);
        assert!(report.inconclusive);
        assert_eq!(report.reachable_markings, 10);
        assert!(!report.is_sound());
    }
}
