mod common;

use common::*;
use confmon_core::alignment::{Aligner, CostScheme, Heuristic, DEFAULT_ALIGN_CAP};
use confmon_core::petri::fixtures;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn agree_on(net: &confmon_core::petri::PetriNet, alphabet: &[&str], n: usize, seed: u64, costs: CostScheme) {
    let aligner = Aligner::new(net, costs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let trace = random_trace(&mut rng, alphabet, 8);
        let a = aligner.align_events(&trace).unwrap();
        let want = oracle_cost(net, &trace, costs).unwrap();
        assert_eq!(a.cost, want, "{} on {trace:?}", net.name());
        check_alignment(net, &trace, &a, costs);
    }
}

#[test]
fn fn1_matches_exhaustive_search() {
    agree_on(&fixtures::fn1(), &fn1_alphabet(), 300, 11, CostScheme::default());
}

#[test]
fn fn1_matches_under_other_costs() {
    let costs = CostScheme::new(2, 3, 1).unwrap();
    agree_on(&fixtures::fn1(), &fn1_alphabet(), 150, 12, costs);
}

#[test]
fn random_nets_match_exhaustive_search() {
    let mut alphabet = ALPHABET.to_vec();
    alphabet.extend(["x1", "x2"]);
    for seed in 0..12 {
        let net = random_workflow_net(seed, 12);
        agree_on(&net, &alphabet, 40, 100 + seed, CostScheme::default());
        agree_on(&net, &alphabet, 10, 200 + seed, CostScheme::new(1, 2, 1).unwrap());
    }
}

#[test]
fn heuristic_does_not_change_the_alignment() {
    let net = fixtures::fn1();
    let guided = Aligner::new(&net, CostScheme::default()).unwrap();
    let plain =
        Aligner::with_options(&net, CostScheme::default(), Heuristic::Zero, DEFAULT_ALIGN_CAP)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let trace = random_trace(&mut rng, &fn1_alphabet(), 8);
        assert_eq!(guided.align_events(&trace).unwrap(), plain.align_events(&trace).unwrap());
    }
}

#[test]
fn som_playout_traces_align_for_free() {
    let net = fixtures::som();
    let log = confmon_core::petri::playout(&net, 40, 200, 3, Default::default()).unwrap();
    let aligner = Aligner::new(&net, CostScheme::default()).unwrap();
    for t in log.iter() {
        let a = aligner.align(t).unwrap();
        assert_eq!(a.cost, 0);
        check_alignment(&net, &t.events, &a, CostScheme::default());
    }
}
