//! Shared helpers for the integration tests: a seeded generator of random
//! engine scenarios (algorithm, parameters, proposals, fault schedule).

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sim_core::engine::{
    run, AdversarySchedule, Algorithm, FloodEcho, IsolationDirective, OmissionDirective,
    OmissionKind, RunConfig, SilentDefault, StarLeader,
};
use sim_core::model::{Bit, Execution, ProcessId, Round};

pub struct RandomCase {
    pub algo: Box<dyn Algorithm>,
    pub n: u32,
    pub t: u32,
    pub horizon: Round,
    pub proposals: Vec<Bit>,
    pub schedule: AdversarySchedule,
}

impl RandomCase {
    pub fn run(&self) -> Execution {
        let cfg = RunConfig::new(self.n, self.t, self.horizon);
        run(self.algo.as_ref(), &self.proposals, &self.schedule, cfg)
            .expect("generated scenario must run")
    }
}

pub fn algorithm(idx: usize) -> Box<dyn Algorithm> {
    match idx % 4 {
        0 => Box::new(SilentDefault),
        1 => Box::new(StarLeader),
        2 => Box::new(FloodEcho { k: 1 }),
        _ => Box::new(FloodEcho { k: 2 }),
    }
}

/// Draws a scenario with n <= 12, a nonempty fault budget, random omission
/// directives against the faulty processes, and an occasional isolated group.
pub fn random_case(rng: &mut ChaCha8Rng, idx: usize) -> RandomCase {
    let n: u32 = rng.gen_range(2..=12);
    let t: u32 = rng.gen_range(1..n.max(2));
    let horizon: Round = rng.gen_range(2..=6);
    let proposals: Vec<Bit> = (0..n)
        .map(|_| if rng.gen::<bool>() { Bit::One } else { Bit::Zero })
        .collect();

    let mut ids: Vec<u32> = (1..=n).collect();
    ids.shuffle(rng);
    let faulty: BTreeSet<ProcessId> = ids
        .iter()
        .take(rng.gen_range(0..=t) as usize)
        .map(|&i| ProcessId(i))
        .collect();

    let mut omissions = Vec::new();
    for &p in &faulty {
        for _ in 0..rng.gen_range(0..=3) {
            let partner = loop {
                let q = ProcessId(rng.gen_range(1..=n));
                if q != p {
                    break q;
                }
            };
            let round = rng.gen_range(1..=horizon);
            let (kind, from, to) = if rng.gen::<bool>() {
                (OmissionKind::Send, p, partner)
            } else {
                (OmissionKind::Receive, partner, p)
            };
            omissions.push(OmissionDirective {
                from,
                to,
                round,
                kind,
            });
        }
    }

    let mut isolate = Vec::new();
    if !faulty.is_empty() && faulty.len() < n as usize && rng.gen_range(0..4) == 0 {
        let group: BTreeSet<ProcessId> = faulty
            .iter()
            .filter(|_| rng.gen::<bool>())
            .copied()
            .collect();
        if !group.is_empty() {
            isolate.push(IsolationDirective {
                group,
                from_round: rng.gen_range(1..=horizon),
            });
        }
    }

    RandomCase {
        algo: algorithm(idx),
        n,
        t,
        horizon,
        proposals,
        schedule: AdversarySchedule {
            faulty,
            isolate,
            omissions,
            byzantine: Vec::new(),
        },
    }
}
