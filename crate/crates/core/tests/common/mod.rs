#![allow(dead_code)]

pub mod reference;

use rand::Rng;
use skyflow::{Assignment, Controller, FlowId, FlowRecord, FsvScheme, LinkKind};

use reference::Reference;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Incoming(usize, u64),
    Release(usize),
    Rate(usize, u64),
    Capacity(LinkKind, u64),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub scheme: u8,
    pub flows: Vec<(u8, u8, bool)>,
    pub cap_d: u64,
    pub cap_s: u64,
    pub ops: Vec<Op>,
}

const UNIT: u64 = 1_000_000;

/// A small random instance: at most 6 flows and 10 operations. Rates and
/// capacities are drawn from a coarse grid so that ties and tight fits are
/// common.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let scheme = rng.random_range(1..=3u8);
    let n = rng.random_range(1..=6usize);
    let flows: Vec<(u8, u8, bool)> = (0..n)
        .map(|_| (rng.random_range(1..=4), rng.random_range(1..=3), rng.random_bool(0.2)))
        .collect();
    let cap_d = rng.random_range(0..=12) * UNIT;
    let cap_s = rng.random_range(0..=12) * UNIT;
    // Track which flows are active so that every generated op is legal.
    let mut active = vec![false; n];
    let mut ops = Vec::new();
    let n_ops = rng.random_range(1..=10usize);
    while ops.len() < n_ops {
        let idle: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let busy: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let op = match rng.random_range(0..10) {
            0..=3 if !idle.is_empty() => {
                let i = idle[rng.random_range(0..idle.len())];
                active[i] = true;
                Op::Incoming(i, rng.random_range(1..=6) * UNIT)
            }
            4 | 5 if !busy.is_empty() => {
                let i = busy[rng.random_range(0..busy.len())];
                active[i] = false;
                Op::Release(i)
            }
            6 | 7 if !busy.is_empty() => {
                let i = busy[rng.random_range(0..busy.len())];
                Op::Rate(i, rng.random_range(1..=6) * UNIT)
            }
            8 => Op::Capacity(LinkKind::Da2gc, rng.random_range(0..=12) * UNIT),
            9 => Op::Capacity(LinkKind::Sa2gc, rng.random_range(0..=12) * UNIT),
            _ => continue,
        };
        ops.push(op);
    }
    Instance {
        scheme,
        flows,
        cap_d,
        cap_s,
        ops,
    }
}

pub fn controller_for(inst: &Instance) -> Controller {
    let records = inst
        .flows
        .iter()
        .enumerate()
        .map(|(i, &(p, d, pinned))| FlowRecord::new(FlowId(i), p, d, pinned))
        .collect();
    Controller::new(FsvScheme::from_id(inst.scheme).unwrap(), records, inst.cap_d, inst.cap_s)
}

/// Replays `inst` on the engine and on the reference, comparing the moves of
/// every step and the full flow state after it.
pub fn check_instance(inst: &Instance) -> Result<(), String> {
    let mut engine = controller_for(inst);
    let mut oracle = Reference::new(inst.scheme, &inst.flows, inst.cap_d, inst.cap_s);
    for (step, op) in inst.ops.iter().enumerate() {
        match *op {
            Op::Incoming(i, r) => {
                engine.handle_incoming(FlowId(i), r);
                oracle.incoming(i, r);
            }
            Op::Release(i) => {
                engine.release(FlowId(i));
                oracle.release(i);
            }
            Op::Rate(i, r) => {
                engine.handle_rate_change(FlowId(i), r);
                oracle.rate_change(i, r);
            }
            Op::Capacity(link, c) => {
                engine.handle_capacity_change(link, c);
                oracle.capacity(link == LinkKind::Da2gc, c);
            }
        }
        let got: Vec<(usize, Assignment, Assignment)> =
            engine.take_moves().iter().map(|m| (m.flow.0, m.from, m.to)).collect();
        let want = std::mem::take(&mut oracle.log);
        if got != want {
            return Err(format!("step {step} ({op:?}): engine moves {got:?}, reference {want:?}"));
        }
        for (i, f) in oracle.flows.iter().enumerate() {
            let e = engine.flow(FlowId(i));
            if (e.assignment, e.drop_count, e.current_rate) != (f.at, f.drops, f.rate) {
                return Err(format!("step {step}: flow {i} engine {e:?}, reference {f:?}"));
            }
        }
        engine.check_invariants().map_err(|e| format!("step {step}: {e}"))?;
    }
    Ok(())
}

/// Exhaustive apportionment: the split closest to the quotas in L1 distance,
/// preferring extra seats for earlier apps among equally close splits.
pub fn apportion_oracle(seats: u32, ratios: [f64; 3]) -> [u32; 3] {
    let quotas = ratios.map(|r| seats as f64 * r);
    let mut best: Option<([u32; 3], f64)> = None;
    for a in 0..=seats {
        for b in 0..=seats - a {
            let n = [a, b, seats - a - b];
            let dist: f64 = n.iter().zip(quotas).map(|(&k, q)| (k as f64 - q).abs()).sum();
            best = match best {
                Some((m, d)) if d < dist - 1e-7 => Some((m, d)),
                Some((m, d)) if (d - dist).abs() <= 1e-7 && m >= n => Some((m, d)),
                _ => Some((n, dist)),
            };
        }
    }
    best.unwrap().0
}
