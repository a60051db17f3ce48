//! Simulation clock, event queue and random streams.
//!
//! Time is kept in integer nanoseconds so that traffic integrals
//! (rate × duration) are exact and runs are bit-reproducible.

mod run;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::link::LinkKind;
use crate::types::FlowId;

pub use run::{run, Simulation, TraceRecord};

const NANOS_PER_SEC: f64 = 1e9;

/// Simulation timestamp or duration in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    /// Rounds to the nearest nanosecond; negative and NaN inputs clamp to zero.
    pub fn from_secs_f64(secs: f64) -> SimTime {
        if secs.is_nan() || secs <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime((secs * NANOS_PER_SEC).round() as u64)
    }

    pub const fn from_secs(secs: u64) -> SimTime {
        SimTime(secs * 1_000_000_000)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    FlowStart(FlowId),
    FlowStop(FlowId),
    OnToggle(FlowId),
    OffToggle(FlowId),
    VideoRateChange(FlowId),
    HandoverDa2gc,
    HandoverSa2gc,
    ChurnTick(LinkKind),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::FlowStart(_) => "FlowStart",
            EventKind::FlowStop(_) => "FlowStop",
            EventKind::OnToggle(_) => "OnToggle",
            EventKind::OffToggle(_) => "OffToggle",
            EventKind::VideoRateChange(_) => "VideoRateChange",
            EventKind::HandoverDa2gc => "HandoverDA2GC",
            EventKind::HandoverSa2gc => "HandoverSA2GC",
            EventKind::ChurnTick(_) => "ChurnTick",
        }
    }

    pub fn flow(&self) -> Option<FlowId> {
        match *self {
            EventKind::FlowStart(f)
            | EventKind::FlowStop(f)
            | EventKind::OnToggle(f)
            | EventKind::OffToggle(f)
            | EventKind::VideoRateChange(f) => Some(f),
            _ => None,
        }
    }

    pub fn link(&self) -> Option<LinkKind> {
        match *self {
            EventKind::HandoverDa2gc => Some(LinkKind::Da2gc),
            EventKind::HandoverSa2gc => Some(LinkKind::Sa2gc),
            EventKind::ChurnTick(l) => Some(l),
            _ => None,
        }
    }
}

/// A timestamped event. `seq` is assigned by the queue and breaks ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events ordered by `(time, seq)`.
#[derive(Debug, Default, Clone)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    now: SimTime,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Queues `kind` at `time` and returns the sequence number it received.
    ///
    /// # Panics
    ///
    /// If `time` lies before the current clock.
    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> u64 {
        assert!(
            time >= self.now,
            "event {} scheduled at {} before current time {}",
            kind.name(),
            time,
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        seq
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    /// Pops the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event> {
        let event = self.heap.pop()?;
        debug_assert!(event.time >= self.now);
        self.now = event.time;
        Some(event)
    }

    /// Pops the next event only if it is due at or before `horizon`.
    pub fn pop_until(&mut self, horizon: SimTime) -> Option<Event> {
        match self.peek_time() {
            Some(t) if t <= horizon => self.pop(),
            _ => None,
        }
    }
}

/// Stochastic concerns, one independent stream each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Traffic = 0,
    LinkDa2gc = 1,
    LinkSa2gc = 2,
    Churn = 3,
    Video = 4,
}

/// Independently seeded ChaCha streams derived from one master seed.
///
/// Each stream uses the same key with a distinct stream id, so drawing from
/// one never shifts another.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub traffic: ChaCha8Rng,
    pub link_da2gc: ChaCha8Rng,
    pub link_sa2gc: ChaCha8Rng,
    pub churn: ChaCha8Rng,
    pub video: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(master_seed: u64) -> Self {
        let make = |stream: Stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(stream as u64);
            rng
        };
        RngStreams {
            traffic: make(Stream::Traffic),
            link_da2gc: make(Stream::LinkDa2gc),
            link_sa2gc: make(Stream::LinkSa2gc),
            churn: make(Stream::Churn),
            video: make(Stream::Video),
        }
    }

    pub fn link(&mut self, kind: LinkKind) -> &mut ChaCha8Rng {
        match kind {
            LinkKind::Da2gc => &mut self.link_da2gc,
            LinkKind::Sa2gc => &mut self.link_sa2gc,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn equal_times_dispatch_by_seq() {
        let mut q = EventQueue::new();
        let a = q.schedule(SimTime::from_secs(10), EventKind::OnToggle(FlowId(1)));
        let b = q.schedule(SimTime::from_secs(10), EventKind::OnToggle(FlowId(2)));
        assert!(a < b);
        assert_eq!(q.pop().unwrap().seq, a);
        assert_eq!(q.pop().unwrap().seq, b);
    }

    #[test]
    fn earlier_time_dispatches_first() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(5), EventKind::FlowStart(FlowId(0)));
        q.schedule(SimTime::from_secs(3), EventKind::FlowStart(FlowId(1)));
        let first = q.pop().unwrap();
        assert_eq!(first.time, SimTime::from_secs(3));
        assert_eq!(q.now(), SimTime::from_secs(3));
        assert_eq!(q.pop().unwrap().time, SimTime::from_secs(5));
        assert!(q.pop().is_none());
    }

    #[test]
    #[should_panic(expected = "before current time")]
    fn scheduling_in_the_past_is_fatal() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(5), EventKind::HandoverDa2gc);
        q.pop();
        q.schedule(SimTime::from_secs(4), EventKind::HandoverSa2gc);
    }

    #[test]
    fn pop_until_respects_horizon() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(10), EventKind::HandoverDa2gc);
        q.schedule(SimTime::from_secs(20), EventKind::HandoverDa2gc);
        assert!(q.pop_until(SimTime::from_secs(10)).is_some());
        assert!(q.pop_until(SimTime::from_secs(10)).is_none());
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn streams_are_reproducible_and_isolated() {
        let mut a = RngStreams::new(42);
        let mut b = RngStreams::new(42);
        // Burn draws on one stream of `b` only.
        for _ in 0..1000 {
            let _: u64 = b.traffic.random();
        }
        let xs: Vec<u64> = (0..16).map(|_| a.churn.random()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.churn.random()).collect();
        assert_eq!(xs, ys);
        let t: u64 = a.traffic.random();
        let v: u64 = a.video.random();
        assert_ne!(t, v);
    }

    #[test]
    fn secs_round_trip() {
        assert_eq!(SimTime::from_secs_f64(1.5).as_nanos(), 1_500_000_000);
        assert_eq!(SimTime::from_secs_f64(-3.0), SimTime::ZERO);
        assert_eq!(SimTime::from_secs(3600).as_secs_f64(), 3600.0);
    }
}
