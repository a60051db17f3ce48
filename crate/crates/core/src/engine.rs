//! Forwarding controller.
//!
//! Every active flow sits in exactly one of three ordered sets: the DA2GC set,
//! the SA2GC set or the dropped set. Sets are ordered by forwarding scheme
//! value (FSV) descending, then by arrival order ascending, so "the lowest-FSV
//! flow" is always the last element and ties evict the latest arrival first.
//!
//! Three procedures react to events:
//!
//! * an incoming flow tries DA2GC, offloading strictly lower-FSV flows to
//!   SA2GC to make room, and otherwise falls back to SA2GC or the dropped set;
//! * a DA2GC capacity loss pushes its lowest-FSV flows to SA2GC, dropping
//!   SA2GC flows to make room for them; a gain pulls the best SA2GC flows back;
//! * an SA2GC capacity loss drops its lowest-FSV flows; a gain readmits the
//!   best dropped flows.
//!
//! Rate changes are handled as capacity changes on the link hosting the flow.
//! Mission-critical flows (ACD, AISD, HMD, FRD) are pinned to DA2GC and are
//! never offloaded.

use std::cmp::Reverse;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::link::LinkKind;
use crate::traffic::FlowSpec;
use crate::types::FlowId;

/// How a flow's FSV is computed from priority, delay requirement and drops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FsvScheme {
    /// Priority only.
    Priority,
    /// 0.5 × priority + 0.5 × delay requirement.
    PriorityDelay,
    /// 0.5 × priority + 0.25 × delay requirement + 0.25 × drop count.
    PriorityDelayDrops,
}

impl FsvScheme {
    pub const ALL: [FsvScheme; 3] = [FsvScheme::Priority, FsvScheme::PriorityDelay, FsvScheme::PriorityDelayDrops];

    pub fn from_id(id: u8) -> Result<FsvScheme, ConfigError> {
        match id {
            1 => Ok(FsvScheme::Priority),
            2 => Ok(FsvScheme::PriorityDelay),
            3 => Ok(FsvScheme::PriorityDelayDrops),
            _ => Err(ConfigError::invalid("scheme", "scheme must be 1, 2, or 3")),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            FsvScheme::Priority => 1,
            FsvScheme::PriorityDelay => 2,
            FsvScheme::PriorityDelayDrops => 3,
        }
    }

    /// Weights over `(priority, delay requirement, drop count)`.
    pub fn weights(self) -> (f64, f64, f64) {
        match self {
            FsvScheme::Priority => (1.0, 0.0, 0.0),
            FsvScheme::PriorityDelay => (0.5, 0.5, 0.0),
            FsvScheme::PriorityDelayDrops => (0.5, 0.25, 0.25),
        }
    }

    /// FSV in quarter units. All weights are multiples of 1/4, so ordering
    /// and ties are exact.
    pub fn quarters(self, priority: u8, delay_req: u8, drop_count: u32) -> i64 {
        let (p, d, n) = (i64::from(priority), i64::from(delay_req), i64::from(drop_count));
        match self {
            FsvScheme::Priority => 4 * p,
            FsvScheme::PriorityDelay => 2 * p + 2 * d,
            FsvScheme::PriorityDelayDrops => 2 * p + d + n,
        }
    }

    pub fn fsv(self, flow: &FlowRecord) -> f64 {
        self.quarters(flow.priority, flow.delay_req, flow.drop_count) as f64 / 4.0
    }
}

impl TryFrom<u8> for FsvScheme {
    type Error = ConfigError;
    fn try_from(id: u8) -> Result<Self, Self::Error> {
        FsvScheme::from_id(id)
    }
}

impl From<FsvScheme> for u8 {
    fn from(s: FsvScheme) -> u8 {
        s.id()
    }
}

impl fmt::Display for FsvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assignment {
    Inactive,
    #[serde(rename = "DA2GC")]
    Da2gc,
    #[serde(rename = "SA2GC")]
    Sa2gc,
    Dropped,
}

impl Assignment {
    pub fn name(self) -> &'static str {
        match self {
            Assignment::Inactive => "Inactive",
            Assignment::Da2gc => "DA2GC",
            Assignment::Sa2gc => "SA2GC",
            Assignment::Dropped => "Dropped",
        }
    }
}

impl From<LinkKind> for Assignment {
    fn from(link: LinkKind) -> Self {
        match link {
            LinkKind::Da2gc => Assignment::Da2gc,
            LinkKind::Sa2gc => Assignment::Sa2gc,
        }
    }
}

/// Scheduling state of one flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: FlowId,
    pub priority: u8,
    pub delay_req: u8,
    /// Never placed on SA2GC.
    pub pinned: bool,
    /// Order of the flow's first admission attempt.
    pub arrival_seq: Option<u64>,
    pub drop_count: u32,
    pub assignment: Assignment,
    pub current_rate: u64,
}

impl FlowRecord {
    pub fn new(id: FlowId, priority: u8, delay_req: u8, pinned: bool) -> Self {
        FlowRecord {
            id,
            priority,
            delay_req,
            pinned,
            arrival_seq: None,
            drop_count: 0,
            assignment: Assignment::Inactive,
            current_rate: 0,
        }
    }

    pub fn from_spec(spec: &FlowSpec) -> Self {
        FlowRecord::new(spec.id, spec.priority, spec.delay_req, spec.is_mission_critical())
    }
}

/// One change of a flow's assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub flow: FlowId,
    pub from: Assignment,
    pub to: Assignment,
}

impl Move {
    pub fn action(&self) -> &'static str {
        use Assignment::*;
        match (self.from, self.to) {
            (_, Dropped) => "drop",
            (_, Inactive) => "release",
            (Inactive, _) => "forward",
            (Da2gc, Sa2gc) => "offload",
            (Sa2gc, Da2gc) => "migrate",
            (Dropped, _) => "readmit",
            _ => "move",
        }
    }
}

type Key = (Reverse<i64>, u64, usize);

#[derive(Debug, Default, Clone)]
struct FlowSet {
    order: BTreeSet<Key>,
    load: u64,
}

impl FlowSet {
    fn first(&self) -> Option<usize> {
        self.order.first().map(|k| k.2)
    }

    fn last(&self) -> Option<usize> {
        self.order.last().map(|k| k.2)
    }
}

/// The forwarding controller for one aircraft.
#[derive(Debug, Clone)]
pub struct Controller {
    scheme: FsvScheme,
    flows: Vec<FlowRecord>,
    da2gc: FlowSet,
    sa2gc: FlowSet,
    dropped: FlowSet,
    da2gc_capacity: u64,
    sa2gc_capacity: u64,
    next_arrival: u64,
    moves: Vec<Move>,
    dirty: Vec<FlowId>,
    is_dirty: Vec<bool>,
}

impl Controller {
    /// `flows[i].id` must equal `FlowId(i)`.
    pub fn new(scheme: FsvScheme, flows: Vec<FlowRecord>, da2gc_capacity: u64, sa2gc_capacity: u64) -> Self {
        for (i, f) in flows.iter().enumerate() {
            assert_eq!(f.id, FlowId(i), "flow ids must be dense and ordered");
            assert_eq!(f.assignment, Assignment::Inactive, "flows start inactive");
        }
        let n = flows.len();
        Controller {
            scheme,
            flows,
            da2gc: FlowSet::default(),
            sa2gc: FlowSet::default(),
            dropped: FlowSet::default(),
            da2gc_capacity,
            sa2gc_capacity,
            next_arrival: 0,
            moves: Vec::new(),
            dirty: Vec::new(),
            is_dirty: vec![false; n],
        }
    }

    pub fn scheme(&self) -> FsvScheme {
        self.scheme
    }

    pub fn flow(&self, id: FlowId) -> &FlowRecord {
        &self.flows[id.0]
    }

    pub fn flows(&self) -> &[FlowRecord] {
        &self.flows
    }

    pub fn fsv(&self, id: FlowId) -> f64 {
        self.scheme.fsv(&self.flows[id.0])
    }

    pub fn capacity(&self, link: LinkKind) -> u64 {
        match link {
            LinkKind::Da2gc => self.da2gc_capacity,
            LinkKind::Sa2gc => self.sa2gc_capacity,
        }
    }

    pub fn load(&self, link: LinkKind) -> u64 {
        self.set(link.into()).load
    }

    /// Capacity minus assigned load; negative while oversubscribed.
    pub fn remaining(&self, link: LinkKind) -> i64 {
        self.capacity(link) as i64 - self.load(link) as i64
    }

    /// Members of an assignment set, best FSV first.
    pub fn members(&self, assignment: Assignment) -> Vec<FlowId> {
        match assignment {
            Assignment::Inactive => self
                .flows
                .iter()
                .filter(|f| f.assignment == Assignment::Inactive)
                .map(|f| f.id)
                .collect(),
            a => self.set(a).order.iter().map(|k| FlowId(k.2)).collect(),
        }
    }

    /// Moves performed since the last call, in order.
    pub fn take_moves(&mut self) -> Vec<Move> {
        std::mem::take(&mut self.moves)
    }

    /// Flows whose assignment or rate changed since the last call.
    pub fn take_dirty(&mut self) -> Vec<FlowId> {
        for id in &self.dirty {
            self.is_dirty[id.0] = false;
        }
        std::mem::take(&mut self.dirty)
    }

    /// A flow becomes active with `rate` (flow start or OFF→ON).
    pub fn handle_incoming(&mut self, id: FlowId, rate: u64) {
        let i = id.0;
        if self.flows[i].assignment != Assignment::Inactive {
            debug_assert!(false, "flow {id} is already active");
            return;
        }
        if self.flows[i].arrival_seq.is_none() {
            self.flows[i].arrival_seq = Some(self.next_arrival);
            self.next_arrival += 1;
        }
        self.flows[i].current_rate = rate;
        self.mark(i);

        if self.fits(rate, LinkKind::Da2gc) {
            self.relocate(i, Assignment::Da2gc);
            return;
        }
        let own = self.key_quarters(i);
        while !self.fits(rate, LinkKind::Da2gc) {
            let Some(victim) = self.lowest_unpinned_da2gc() else { break };
            if self.key_quarters(victim) >= own {
                break;
            }
            self.place_on_sa2gc(victim);
        }
        if self.fits(rate, LinkKind::Da2gc) {
            self.relocate(i, Assignment::Da2gc);
        } else if self.flows[i].pinned {
            self.drop_flow(i);
        } else {
            self.place_on_sa2gc(i);
        }
    }

    pub fn handle_da2gc_capacity_change(&mut self, capacity: u64) {
        let old = std::mem::replace(&mut self.da2gc_capacity, capacity);
        if capacity > old {
            self.settle();
        } else if capacity < old {
            self.shed_da2gc();
        }
    }

    pub fn handle_sa2gc_capacity_change(&mut self, capacity: u64) {
        let old = std::mem::replace(&mut self.sa2gc_capacity, capacity);
        if capacity > old {
            self.settle();
        } else if capacity < old {
            self.shed_sa2gc();
        }
    }

    pub fn handle_capacity_change(&mut self, link: LinkKind, capacity: u64) {
        match link {
            LinkKind::Da2gc => self.handle_da2gc_capacity_change(capacity),
            LinkKind::Sa2gc => self.handle_sa2gc_capacity_change(capacity),
        }
    }

    /// An active flow changes rate. On a link this acts as a capacity change
    /// of that link; dropped and inactive flows only record the new rate.
    pub fn handle_rate_change(&mut self, id: FlowId, rate: u64) {
        let i = id.0;
        let old = self.flows[i].current_rate;
        if old == rate {
            return;
        }
        self.flows[i].current_rate = rate;
        self.mark(i);
        let assignment = self.flows[i].assignment;
        if assignment == Assignment::Inactive {
            return;
        }
        let set = self.set_mut(assignment);
        set.load = set.load - old + rate;
        match assignment {
            Assignment::Da2gc if rate > old => self.shed_da2gc(),
            Assignment::Sa2gc if rate > old => self.shed_sa2gc(),
            Assignment::Da2gc | Assignment::Sa2gc => self.settle(),
            _ => {}
        }
    }

    /// A flow goes silent (ON→OFF or stop); whatever it held is released.
    pub fn release(&mut self, id: FlowId) {
        let i = id.0;
        let from = self.flows[i].assignment;
        if from == Assignment::Inactive {
            return;
        }
        self.relocate(i, Assignment::Inactive);
        self.flows[i].current_rate = 0;
        if matches!(from, Assignment::Da2gc | Assignment::Sa2gc) {
            self.settle();
        }
    }

    /// Full consistency scan: set membership, ordering keys, loads and
    /// capacity feasibility.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = vec![false; self.flows.len()];
        for a in [Assignment::Da2gc, Assignment::Sa2gc, Assignment::Dropped] {
            let set = self.set(a);
            let mut load = 0u64;
            for key in &set.order {
                let f = &self.flows[key.2];
                if f.assignment != a {
                    return Err(format!("flow {} in {} set but assigned {}", f.id, a.name(), f.assignment.name()));
                }
                if *key != self.key(key.2) {
                    return Err(format!("flow {} has a stale ordering key", f.id));
                }
                if std::mem::replace(&mut seen[key.2], true) {
                    return Err(format!("flow {} listed twice", f.id));
                }
                load += f.current_rate;
            }
            if load != set.load {
                return Err(format!("{} load {} != member sum {}", a.name(), set.load, load));
            }
        }
        for f in &self.flows {
            if !seen[f.id.0] && f.assignment != Assignment::Inactive {
                return Err(format!("flow {} assigned {} but not in its set", f.id, f.assignment.name()));
            }
            if f.pinned && f.assignment == Assignment::Sa2gc {
                return Err(format!("pinned flow {} on SA2GC", f.id));
            }
        }
        if self.da2gc.load > self.da2gc_capacity {
            return Err(format!("DA2GC oversubscribed: {} > {}", self.da2gc.load, self.da2gc_capacity));
        }
        if self.sa2gc.load > self.sa2gc_capacity {
            return Err(format!("SA2GC oversubscribed: {} > {}", self.sa2gc.load, self.sa2gc_capacity));
        }
        Ok(())
    }

    fn set(&self, a: Assignment) -> &FlowSet {
        match a {
            Assignment::Da2gc => &self.da2gc,
            Assignment::Sa2gc => &self.sa2gc,
            Assignment::Dropped => &self.dropped,
            Assignment::Inactive => unreachable!("inactive flows are not kept in a set"),
        }
    }

    fn set_mut(&mut self, a: Assignment) -> &mut FlowSet {
        match a {
            Assignment::Da2gc => &mut self.da2gc,
            Assignment::Sa2gc => &mut self.sa2gc,
            Assignment::Dropped => &mut self.dropped,
            Assignment::Inactive => unreachable!("inactive flows are not kept in a set"),
        }
    }

    fn key_quarters(&self, i: usize) -> i64 {
        let f = &self.flows[i];
        self.scheme.quarters(f.priority, f.delay_req, f.drop_count)
    }

    fn key(&self, i: usize) -> Key {
        (
            Reverse(self.key_quarters(i)),
            self.flows[i].arrival_seq.expect("active flows have an arrival"),
            i,
        )
    }

    fn fits(&self, rate: u64, link: LinkKind) -> bool {
        rate as i64 <= self.remaining(link)
    }

    fn mark(&mut self, i: usize) {
        if !self.is_dirty[i] {
            self.is_dirty[i] = true;
            self.dirty.push(FlowId(i));
        }
    }

    fn detach(&mut self, i: usize) {
        let from = self.flows[i].assignment;
        if from != Assignment::Inactive {
            let key = self.key(i);
            let rate = self.flows[i].current_rate;
            let set = self.set_mut(from);
            let removed = set.order.remove(&key);
            debug_assert!(removed);
            set.load -= rate;
        }
    }

    fn attach(&mut self, i: usize, to: Assignment) {
        self.flows[i].assignment = to;
        if to != Assignment::Inactive {
            let key = self.key(i);
            let rate = self.flows[i].current_rate;
            let set = self.set_mut(to);
            set.order.insert(key);
            set.load += rate;
        }
    }

    fn relocate(&mut self, i: usize, to: Assignment) {
        let from = self.flows[i].assignment;
        self.detach(i);
        self.attach(i, to);
        self.log(i, from, to);
    }

    fn drop_flow(&mut self, i: usize) {
        let from = self.flows[i].assignment;
        self.detach(i);
        // The new drop count re-ranks the flow (scheme 3) from here on.
        self.flows[i].drop_count += 1;
        self.attach(i, Assignment::Dropped);
        self.log(i, from, Assignment::Dropped);
    }

    fn log(&mut self, i: usize, from: Assignment, to: Assignment) {
        self.mark(i);
        self.moves.push(Move {
            flow: FlowId(i),
            from,
            to,
        });
    }

    fn lowest_unpinned_da2gc(&self) -> Option<usize> {
        self.da2gc.order.iter().rev().map(|k| k.2).find(|&i| !self.flows[i].pinned)
    }

    fn best_dropped(&self, pinned: bool) -> Option<usize> {
        self.dropped.order.iter().map(|k| k.2).find(|&i| self.flows[i].pinned == pinned)
    }

    /// Puts a flow onto SA2GC, dropping strictly lower-FSV SA2GC flows if
    /// that makes it fit; otherwise the flow itself is dropped.
    fn place_on_sa2gc(&mut self, i: usize) {
        let rate = self.flows[i].current_rate;
        if !self.fits(rate, LinkKind::Sa2gc) {
            let own = self.key_quarters(i);
            let reclaimable: u64 = self
                .sa2gc
                .order
                .iter()
                .rev()
                .take_while(|k| k.0 .0 < own)
                .map(|k| self.flows[k.2].current_rate)
                .sum();
            if self.remaining(LinkKind::Sa2gc) + (reclaimable as i64) < (rate as i64) {
                self.drop_flow(i);
                return;
            }
            while !self.fits(rate, LinkKind::Sa2gc) {
                let victim = self.sa2gc.last().expect("reclaimable flows remain");
                self.drop_flow(victim);
            }
        }
        self.relocate(i, Assignment::Sa2gc);
    }

    /// DA2GC is oversubscribed: push its lowest-FSV flows to SA2GC, dropping
    /// SA2GC's lowest-FSV flows until each migrant fits.
    fn shed_da2gc(&mut self) {
        while self.da2gc.load > self.da2gc_capacity {
            let Some(victim) = self.lowest_unpinned_da2gc() else {
                let last = self.da2gc.last().expect("oversubscribed set is non-empty");
                self.drop_flow(last);
                continue;
            };
            let rate = self.flows[victim].current_rate;
            if rate > self.sa2gc_capacity {
                // Would not fit even on an empty SA2GC.
                self.drop_flow(victim);
                continue;
            }
            while !self.fits(rate, LinkKind::Sa2gc) {
                let drop = self.sa2gc.last().expect("capacity suffices once SA2GC is empty");
                self.drop_flow(drop);
            }
            self.relocate(victim, Assignment::Sa2gc);
        }
    }

    fn shed_sa2gc(&mut self) {
        while self.sa2gc.load > self.sa2gc_capacity {
            let last = self.sa2gc.last().expect("oversubscribed set is non-empty");
            self.drop_flow(last);
        }
    }

    /// Capacity was freed somewhere: move the best SA2GC flows up to DA2GC
    /// while they fit, then readmit the best dropped flows to SA2GC while
    /// they fit, and repeat until nothing moves.
    fn settle(&mut self) {
        loop {
            while let Some(p) = self.best_dropped(true) {
                if !self.fits(self.flows[p].current_rate, LinkKind::Da2gc) {
                    break;
                }
                self.relocate(p, Assignment::Da2gc);
            }
            while let Some(top) = self.sa2gc.first() {
                if !self.fits(self.flows[top].current_rate, LinkKind::Da2gc) {
                    break;
                }
                self.relocate(top, Assignment::Da2gc);
            }
            let mut readmitted = false;
            while let Some(top) = self.best_dropped(false) {
                if !self.fits(self.flows[top].current_rate, LinkKind::Sa2gc) {
                    break;
                }
                self.relocate(top, Assignment::Sa2gc);
                readmitted = true;
            }
            if !readmitted {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MBPS: u64 = 1_000_000;

    fn flows(specs: &[(u8, u8)]) -> Vec<FlowRecord> {
        specs
            .iter()
            .enumerate()
            .map(|(i, &(p, d))| FlowRecord::new(FlowId(i), p, d, false))
            .collect()
    }

    fn ids(v: &[usize]) -> Vec<FlowId> {
        v.iter().map(|&i| FlowId(i)).collect()
    }

    #[test]
    fn fsv_values() {
        // first-class VoIP, economy Web
        let first_voip = FlowRecord::new(FlowId(0), 4, 3, false);
        assert_eq!(FsvScheme::Priority.fsv(&first_voip), 4.0);
        let mut econ_web = FlowRecord::new(FlowId(1), 2, 1, false);
        assert_eq!(FsvScheme::PriorityDelay.fsv(&econ_web), 1.5);
        econ_web.drop_count = 2;
        assert_eq!(FsvScheme::PriorityDelayDrops.fsv(&econ_web), 1.75);
    }

    #[test]
    fn scheme_ids() {
        assert_eq!(FsvScheme::from_id(2).unwrap(), FsvScheme::PriorityDelay);
        let err = FsvScheme::from_id(4).unwrap_err();
        assert!(err.to_string().contains("scheme must be 1, 2, or 3"));
    }

    #[test]
    fn incoming_fits_directly() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(2, 1)]), 5 * MBPS, 0);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Da2gc);
        assert_eq!(c.remaining(LinkKind::Da2gc), 2 * MBPS as i64);
    }

    #[test]
    fn incoming_offloads_lower_fsv() {
        // MTC (FSV 1) holds 3 of 5 Mbps; a video (FSV 3) needs 4.
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(1, 1), (3, 2)]), 5 * MBPS, 5 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), 4 * MBPS);
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Sa2gc);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Da2gc);
        assert_eq!(c.remaining(LinkKind::Da2gc), MBPS as i64);
        c.check_invariants().unwrap();
    }

    #[test]
    fn incoming_dropped_when_both_links_hold_better_flows() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(4, 3), (4, 3), (2, 1)]), 3 * MBPS, 3 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
        c.handle_incoming(FlowId(2), MBPS);
        let f = c.flow(FlowId(2));
        assert_eq!(f.assignment, Assignment::Dropped);
        assert_eq!(f.drop_count, 1);
        assert_eq!(c.members(Assignment::Da2gc), ids(&[0]));
        c.check_invariants().unwrap();
    }

    #[test]
    fn incoming_never_offloads_equal_fsv() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(2, 1), (2, 3)]), 3 * MBPS, 10 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), MBPS);
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Da2gc);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
    }

    #[test]
    fn da2gc_increase_migrates_from_sa2gc() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(3, 1), (2, 1)]), 10 * MBPS, 100 * MBPS);
        c.handle_incoming(FlowId(0), 8 * MBPS);
        c.handle_incoming(FlowId(1), 4 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
        c.handle_da2gc_capacity_change(20 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Da2gc);
        assert_eq!(c.take_moves().last().unwrap().action(), "migrate");
    }

    #[test]
    fn da2gc_decrease_sheds_until_feasible() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(5, 3), (4, 3), (2, 1)]), 10 * MBPS, 100 * MBPS);
        for i in 0..3 {
            c.handle_incoming(FlowId(i), 3 * MBPS);
        }
        c.handle_da2gc_capacity_change(5 * MBPS);
        assert_eq!(c.members(Assignment::Da2gc), ids(&[0]));
        assert_eq!(c.members(Assignment::Sa2gc), ids(&[1, 2]));
        assert_eq!(c.load(LinkKind::Da2gc), 3 * MBPS);
        c.check_invariants().unwrap();
    }

    #[test]
    fn capacity_unchanged_is_noop() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(2, 1)]), 10 * MBPS, 10 * MBPS);
        c.handle_incoming(FlowId(0), MBPS);
        c.take_moves();
        c.handle_da2gc_capacity_change(10 * MBPS);
        c.handle_sa2gc_capacity_change(10 * MBPS);
        assert!(c.take_moves().is_empty());
    }

    #[test]
    fn sa2gc_increase_readmits_best_dropped() {
        // flow 0 holds 5 of 5 Mbps on SA2GC; DA2GC too small for anything.
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(4, 1), (3, 1), (2, 1)]), 0, 5 * MBPS);
        c.handle_incoming(FlowId(0), 5 * MBPS);
        c.handle_incoming(FlowId(1), 4 * MBPS);
        c.handle_incoming(FlowId(2), 3 * MBPS);
        assert_eq!(c.members(Assignment::Dropped), ids(&[1, 2]));
        c.handle_sa2gc_capacity_change(10 * MBPS);
        assert_eq!(c.members(Assignment::Sa2gc), ids(&[0, 1]));
        assert_eq!(c.members(Assignment::Dropped), ids(&[2]));
        assert_eq!(c.remaining(LinkKind::Sa2gc), MBPS as i64);
    }

    #[test]
    fn sa2gc_decrease_drops_lowest() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(4, 1), (3, 1)]), 0, 10 * MBPS);
        c.handle_incoming(FlowId(0), 4 * MBPS);
        c.handle_incoming(FlowId(1), 4 * MBPS);
        c.handle_sa2gc_capacity_change(5 * MBPS);
        assert_eq!(c.members(Assignment::Sa2gc), ids(&[0]));
        assert_eq!(c.flow(FlowId(1)).drop_count, 1);
    }

    #[test]
    fn rate_increase_on_da2gc_sheds() {
        // video (FSV 3) grows 4 -> 6 Mbps with 1 Mbps free; web (FSV 2) leaves.
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(3, 2), (2, 1)]), 8 * MBPS, 100 * MBPS);
        c.handle_incoming(FlowId(0), 4 * MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        c.handle_rate_change(FlowId(0), 6 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
        assert_eq!(c.load(LinkKind::Da2gc), 6 * MBPS);
        c.check_invariants().unwrap();
    }

    #[test]
    fn release_readmits_dropped() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(4, 3), (2, 1)]), 0, 3 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Dropped);
        c.release(FlowId(0));
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Inactive);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
    }

    #[test]
    fn dropped_flow_rate_change_moves_nothing() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(4, 3), (2, 1)]), 0, 3 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        c.take_moves();
        c.handle_rate_change(FlowId(1), 2 * MBPS);
        assert!(c.take_moves().is_empty());
        assert_eq!(c.flow(FlowId(1)).current_rate, 2 * MBPS);
    }

    #[test]
    fn pinned_flows_stay_off_sa2gc() {
        let mut records = flows(&[(5, 3), (2, 1)]);
        records[0].pinned = true;
        let mut c = Controller::new(FsvScheme::Priority, records, 4 * MBPS, 100 * MBPS);
        c.handle_incoming(FlowId(0), MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        c.handle_da2gc_capacity_change(2 * MBPS);
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Da2gc);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
        c.check_invariants().unwrap();
    }

    #[test]
    fn equal_fsv_evicts_latest_arrival() {
        let mut c = Controller::new(FsvScheme::Priority, flows(&[(2, 1), (2, 1), (2, 1)]), 9 * MBPS, 100 * MBPS);
        for i in 0..3 {
            c.handle_incoming(FlowId(i), 3 * MBPS);
        }
        c.handle_da2gc_capacity_change(6 * MBPS);
        assert_eq!(c.flow(FlowId(2)).assignment, Assignment::Sa2gc);
        assert_eq!(c.members(Assignment::Da2gc), ids(&[0, 1]));
    }

    #[test]
    fn scheme3_reranks_after_drop() {
        let mut c = Controller::new(FsvScheme::PriorityDelayDrops, flows(&[(2, 1), (2, 1)]), 0, 3 * MBPS);
        c.handle_incoming(FlowId(0), 3 * MBPS);
        c.handle_incoming(FlowId(1), 3 * MBPS);
        assert_eq!(c.flow(FlowId(1)).drop_count, 1);
        assert_eq!(c.fsv(FlowId(1)), 1.5);
        // flow 1 now outranks flow 0 and displaces it on its next arrival
        c.release(FlowId(1));
        c.handle_incoming(FlowId(1), 3 * MBPS);
        assert_eq!(c.flow(FlowId(1)).assignment, Assignment::Sa2gc);
        assert_eq!(c.flow(FlowId(0)).assignment, Assignment::Dropped);
    }
}
