use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetError, PetriNet};
use crate::eventlog::{EventLog, Trace};

pub const DEFAULT_MAX_STEPS: usize = 200;
const MAX_CONSECUTIVE_DISCARDS: usize = 1000;

/// Per-event instrumentation noise applied after simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    /// Probability that an emitted event is lost.
    pub p_drop: f64,
    /// Probability that a kept event is logged twice in a row.
    pub p_dup: f64,
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams {
        p_drop: 0.0,
        p_dup: 0.0,
    };

    pub fn new(p_drop: f64, p_dup: f64) -> Result<Self, NetError> {
        let n = NoiseParams { p_drop, p_dup };
        n.validate()?;
        Ok(n)
    }

    fn validate(&self) -> Result<(), NetError> {
        for (name, p) in [("p_drop", self.p_drop), ("p_dup", self.p_dup)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NetError::InvalidNoise(format!("{name}={p} not in [0, 1]")));
            }
        }
        Ok(())
    }

    fn apply(&self, events: Vec<String>, rng: &mut ChaCha8Rng) -> Vec<String> {
        if self.p_drop == 0.0 && self.p_dup == 0.0 {
            return events;
        }
        let mut out = Vec::with_capacity(events.len());
        for e in events {
            if rng.random_bool(self.p_drop) {
                continue;
            }
            if rng.random_bool(self.p_dup) {
                out.push(e.clone());
            }
            out.push(e);
        }
        out
    }
}

/// Simulates `n_traces` runs of the net.
///
/// Each run fires a uniformly chosen enabled transition from the initial
/// marking until the final marking is reached. Runs that exceed `max_steps`
/// firings are discarded and retried. Silent transitions fire without
/// emitting an event. Case ids are `c1 .. cN`.
pub fn playout(
    net: &PetriNet,
    n_traces: usize,
    max_steps: usize,
    seed: u64,
    noise: NoiseParams,
) -> Result<EventLog, NetError> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(n_traces);
    let mut discards = 0;
    while traces.len() < n_traces {
        match simulate_run(net, max_steps.max(1), &mut rng)? {
            Some(events) => {
                discards = 0;
                let events = noise.apply(events, &mut rng);
                traces.push(Trace::new(format!("c{}", traces.len() + 1), events));
            }
            None => {
                discards += 1;
                if discards > MAX_CONSECUTIVE_DISCARDS {
                    return Err(NetError::PlayoutExhausted);
                }
            }
        }
    }
    Ok(EventLog::new(traces).expect("generated case ids are unique"))
}

fn simulate_run(
    net: &PetriNet,
    max_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<String>>, NetError> {
    let mut m = net.initial_marking().clone();
    let mut events = Vec::new();
    for _ in 0..max_steps {
        if &m == net.final_marking() {
            return Ok(Some(events));
        }
        let enabled = net.enabled(&m);
        if enabled.is_empty() {
            return Err(NetError::Deadlock);
        }
        let t = enabled[rng.random_range(0..enabled.len())];
        m = net.fire(&m, t)?;
        if let Some(label) = &net.transition(t).label {
            events.push(label.clone());
        }
    }
    Ok((&m == net.final_marking()).then_some(events))
}
