mod common;

use common::*;
use confmon_core::petri::{check_soundness, fixtures, DEFAULT_STATE_CAP};

#[test]
fn agrees_with_brute_force_on_random_nets() {
    for seed in 0..30 {
        let net = random_workflow_net(seed, 12);
        let report = check_soundness(&net, DEFAULT_STATE_CAP);
        let (option, dead) = oracle_soundness(&net);
        assert!(!report.inconclusive);
        assert_eq!(report.final_always_reachable, option, "{}", net.name());
        assert_eq!(report.dead_transitions, dead, "{}", net.name());
        assert!(report.is_sound(), "block-structured nets are sound: {}", net.name());
    }
}

#[test]
fn agrees_on_damaged_nets() {
    let base = fixtures::fn1();
    let arcs = [
        ("p5", "t6"),
        ("t1", "p1"),
        ("p2", "t4"),
        ("t3", "p3"),
        ("tau", "p2"),
    ];
    for (from, to) in arcs {
        let net = base.without_arc(from, to).unwrap();
        let report = check_soundness(&net, DEFAULT_STATE_CAP);
        if report.inconclusive {
            continue;
        }
        let (option, dead) = oracle_soundness(&net);
        assert_eq!(report.final_always_reachable, option, "{from}->{to}");
        assert_eq!(report.dead_transitions, dead, "{from}->{to}");
        assert!(!report.is_sound(), "{from}->{to}");
    }
}

#[test]
fn som_is_sound() {
    let net = fixtures::som();
    let report = check_soundness(&net, DEFAULT_STATE_CAP);
    assert!(report.is_sound(), "{report:?}");
    assert_eq!(oracle_soundness(&net), (true, vec![]));
}
