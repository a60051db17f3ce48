//! Fluid accounting of per-flow traffic and the QoS verdict.
//!
//! Traffic integrals are kept exactly as `rate (bit/s) × duration (ns)` in
//! `u128`, so offered traffic always equals delivered plus dropped traffic.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::{Assignment, FlowRecord};
use crate::error::ConfigError;
use crate::sim::SimTime;
use crate::traffic::FlowSpec;
use crate::types::{App, Domain, FlowId, TravelClass};

const BIT_NS_PER_BIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosThresholds {
    pub voip_max_drop: f64,
    pub video_max_drop: f64,
    pub web_max_drop: f64,
    /// Mean share of the flight a class's VoIP flows may spend on SA2GC.
    pub max_voip_sa2gc_fraction: f64,
    /// Mission-critical flows must see neither drops nor SA2GC.
    pub mission_critical_must_hold: bool,
}

impl Default for QosThresholds {
    fn default() -> Self {
        QosThresholds {
            voip_max_drop: 0.01,
            video_max_drop: 0.02,
            web_max_drop: 0.10,
            max_voip_sa2gc_fraction: 0.01,
            mission_critical_must_hold: true,
        }
    }
}

impl QosThresholds {
    pub fn max_drop(&self, app: App) -> Option<f64> {
        match app {
            App::Voip => Some(self.voip_max_drop),
            App::Video => Some(self.video_max_drop),
            App::Web => Some(self.web_max_drop),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("voip_max_drop", self.voip_max_drop),
            ("video_max_drop", self.video_max_drop),
            ("web_max_drop", self.web_max_drop),
            ("max_voip_sa2gc_fraction", self.max_voip_sa2gc_fraction),
        ];
        for (key, v) in checks {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(key, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Exact per-flow integrals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowAccount {
    /// bit·ns
    pub offered: u128,
    pub delivered: u128,
    pub dropped: u128,
    pub sa2gc_ns: u64,
    /// Total accounted time in any state.
    pub span_ns: u64,
}

#[derive(Debug, Clone, Copy)]
struct Open {
    state: Assignment,
    rate: u64,
    since: SimTime,
}

#[derive(Debug, Clone)]
pub struct MetricsCollector {
    accounts: Vec<FlowAccount>,
    open: Vec<Option<Open>>,
}

impl MetricsCollector {
    pub fn new(flows: usize) -> Self {
        MetricsCollector {
            accounts: vec![FlowAccount::default(); flows],
            open: vec![None; flows],
        }
    }

    pub fn accounts(&self) -> &[FlowAccount] {
        &self.accounts
    }

    pub fn record_interval(&mut self, flow: FlowId, state: Assignment, rate: u64, duration: SimTime) {
        let acc = &mut self.accounts[flow.0];
        let d = duration.as_nanos();
        let traffic = u128::from(rate) * u128::from(d);
        acc.span_ns += d;
        match state {
            Assignment::Inactive => {}
            Assignment::Da2gc => {
                acc.offered += traffic;
                acc.delivered += traffic;
            }
            Assignment::Sa2gc => {
                acc.offered += traffic;
                acc.delivered += traffic;
                acc.sa2gc_ns += d;
            }
            Assignment::Dropped => {
                acc.offered += traffic;
                acc.dropped += traffic;
            }
        }
    }

    /// Closes the flow's open interval at `now` (if any) and opens a new one.
    ///
    /// # Panics
    ///
    /// If `now` precedes the start of the open interval.
    pub fn transition(&mut self, flow: FlowId, now: SimTime, state: Assignment, rate: u64) {
        self.close(flow, now);
        self.open[flow.0] = Some(Open { state, rate, since: now });
    }

    pub fn close(&mut self, flow: FlowId, now: SimTime) {
        if let Some(open) = self.open[flow.0].take() {
            assert!(now >= open.since, "interval for flow {flow} would have negative duration");
            self.record_interval(flow, open.state, open.rate, now - open.since);
        }
    }

    pub fn close_all(&mut self, now: SimTime) {
        for i in 0..self.open.len() {
            self.close(FlowId(i), now);
        }
    }

    pub fn report(&self, flows: &[FlowSpec], records: &[FlowRecord], info: RunInfo, thresholds: &QosThresholds) -> QosReport {
        let horizon_ns = info.horizon.as_nanos();
        let flow_rows: Vec<FlowQos> = flows
            .iter()
            .zip(&self.accounts)
            .zip(records)
            .map(|((spec, acc), rec)| FlowQos {
                id: spec.id,
                domain: spec.domain,
                app: spec.app,
                class: spec.class,
                offered_bits: acc.offered as f64 / BIT_NS_PER_BIT,
                delivered_bits: acc.delivered as f64 / BIT_NS_PER_BIT,
                dropped_bits: acc.dropped as f64 / BIT_NS_PER_BIT,
                sa2gc_s: acc.sa2gc_ns as f64 / 1e9,
                drop_count: rec.drop_count,
            })
            .collect();

        let mut groups = Vec::new();
        for class in TravelClass::CABIN {
            for app in App::PASSENGER {
                let (mut offered, mut dropped, mut n) = (0u128, 0u128, 0usize);
                for (spec, acc) in flows.iter().zip(&self.accounts) {
                    if spec.app == app && spec.class == class {
                        offered += acc.offered;
                        dropped += acc.dropped;
                        n += 1;
                    }
                }
                groups.push(GroupQos {
                    app,
                    class,
                    flows: n,
                    offered_bits: offered as f64 / BIT_NS_PER_BIT,
                    dropped_bits: dropped as f64 / BIT_NS_PER_BIT,
                    dropped_fraction: ratio(dropped, offered),
                });
            }
        }

        let voip_sa2gc = TravelClass::CABIN
            .into_iter()
            .map(|class| {
                let shares: Vec<f64> = flows
                    .iter()
                    .zip(&self.accounts)
                    .filter(|(s, _)| s.app == App::Voip && s.class == class)
                    .map(|(_, a)| if horizon_ns == 0 { 0.0 } else { a.sa2gc_ns as f64 / horizon_ns as f64 })
                    .collect();
                let fraction = if shares.is_empty() {
                    0.0
                } else {
                    shares.iter().sum::<f64>() / shares.len() as f64
                };
                ClassSa2gc {
                    class,
                    voip_flows: shares.len(),
                    fraction,
                }
            })
            .collect();

        let mission_critical_clean = flows
            .iter()
            .zip(&self.accounts)
            .filter(|(s, _)| s.domain.is_mission_critical())
            .all(|(_, a)| a.dropped == 0 && a.sa2gc_ns == 0);

        let mut report = QosReport {
            scheme: info.scheme,
            seed: info.seed,
            hit_rate: info.hit_rate,
            horizon_s: info.horizon.as_secs_f64(),
            flows: flow_rows,
            groups,
            voip_sa2gc,
            mission_critical_clean,
            satisfied_all: false,
        };
        report.satisfied_all = qos_satisfied(&report, thresholds);
        report
    }
}

fn ratio(num: u128, den: u128) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Identifies the run a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunInfo {
    pub scheme: u8,
    pub seed: u64,
    pub hit_rate: f64,
    pub horizon: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowQos {
    pub id: FlowId,
    pub domain: Domain,
    pub app: App,
    pub class: TravelClass,
    pub offered_bits: f64,
    pub delivered_bits: f64,
    pub dropped_bits: f64,
    pub sa2gc_s: f64,
    pub drop_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupQos {
    pub app: App,
    pub class: TravelClass,
    pub flows: usize,
    pub offered_bits: f64,
    pub dropped_bits: f64,
    pub dropped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSa2gc {
    pub class: TravelClass,
    pub voip_flows: usize,
    pub fraction: f64,
}

/// Outcome of one simulated flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    pub scheme: u8,
    pub seed: u64,
    pub hit_rate: f64,
    pub horizon_s: f64,
    pub flows: Vec<FlowQos>,
    /// Passenger `(app, class)` aggregates, classes First to Economy.
    pub groups: Vec<GroupQos>,
    pub voip_sa2gc: Vec<ClassSa2gc>,
    pub mission_critical_clean: bool,
    pub satisfied_all: bool,
}

impl QosReport {
    pub fn group(&self, app: App, class: TravelClass) -> Option<&GroupQos> {
        self.groups.iter().find(|g| g.app == app && g.class == class)
    }

    /// Dropped over offered traffic for matching flows; zero if nothing was
    /// offered.
    pub fn dropped_fraction(&self, app: App, class: TravelClass) -> f64 {
        if let Some(g) = self.group(app, class) {
            return g.dropped_fraction;
        }
        let (offered, dropped) = self
            .flows
            .iter()
            .filter(|f| f.app == app && f.class == class)
            .fold((0.0, 0.0), |(o, d), f| (o + f.offered_bits, d + f.dropped_bits));
        if offered == 0.0 {
            0.0
        } else {
            dropped / offered
        }
    }

    /// Dropped fraction over all passenger classes for one app.
    pub fn app_dropped_fraction(&self, app: App) -> f64 {
        let (o, d) = self
            .groups
            .iter()
            .filter(|g| g.app == app)
            .fold((0.0, 0.0), |(o, d), g| (o + g.offered_bits, d + g.dropped_bits));
        if o == 0.0 {
            0.0
        } else {
            d / o
        }
    }

    pub fn voip_sa2gc_fraction(&self, class: TravelClass) -> f64 {
        self.voip_sa2gc
            .iter()
            .find(|c| c.class == class)
            .map_or(0.0, |c| c.fraction)
    }

    pub fn total_offered_bits(&self) -> f64 {
        self.flows.iter().map(|f| f.offered_bits).sum()
    }

    pub fn csv_header() -> &'static str {
        "scheme,class,app,metric,value"
    }

    /// Per-class table rows: nine dropped-fraction rows, then three VoIP
    /// SA2GC time rows. Empty groups print `n/a`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for g in &self.groups {
            let value = if g.offered_bits == 0.0 {
                "n/a".to_string()
            } else {
                format!("{:.6}", g.dropped_fraction)
            };
            rows.push(format!("{},{},{},dropped_fraction,{}", self.scheme, g.class, g.app, value));
        }
        for c in &self.voip_sa2gc {
            let value = if c.voip_flows == 0 {
                "n/a".to_string()
            } else {
                format!("{:.6}", c.fraction)
            };
            rows.push(format!("{},{},VoIP,sa2gc_time_fraction,{}", self.scheme, c.class, value));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", Self::csv_header()).unwrap();
        for row in self.csv_rows() {
            writeln!(out, "{row}").unwrap();
        }
        out
    }
}

/// Whether every flow met its QoS target. Thresholds are inclusive.
pub fn qos_satisfied(report: &QosReport, thresholds: &QosThresholds) -> bool {
    let drops_ok = report.groups.iter().all(|g| {
        thresholds
            .max_drop(g.app)
            .is_none_or(|max| g.dropped_fraction <= max)
    });
    let delay_ok = report
        .voip_sa2gc
        .iter()
        .all(|c| c.fraction <= thresholds.max_voip_sa2gc_fraction);
    let critical_ok = !thresholds.mission_critical_must_hold || report.mission_critical_clean;
    drops_ok && delay_ok && critical_ok
}

#[cfg(test)]
mod tests {
    use super::*;

    const MBPS: u64 = 1_000_000;

    fn podd(id: usize, app: App, class: TravelClass) -> FlowSpec {
        FlowSpec {
            id: FlowId(id),
            domain: Domain::Podd,
            app,
            class,
            priority: 2,
            delay_req: 1,
            start: SimTime::ZERO,
            stop: SimTime::from_secs(3600),
            passenger: Some(id),
        }
    }

    fn info() -> RunInfo {
        RunInfo {
            scheme: 1,
            seed: 0,
            hit_rate: 0.0,
            horizon: SimTime::from_secs(3600),
        }
    }

    fn records(flows: &[FlowSpec]) -> Vec<FlowRecord> {
        flows.iter().map(FlowRecord::from_spec).collect()
    }

    #[test]
    fn dropped_interval_counts_offered_and_dropped() {
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Dropped, 3 * MBPS, SimTime::from_secs(10));
        let a = m.accounts()[0];
        assert_eq!(a.offered, 30_000_000u128 * 1_000_000_000);
        assert_eq!(a.dropped, a.offered);
    }

    #[test]
    fn inactive_interval_moves_nothing() {
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Inactive, 3 * MBPS, SimTime::from_secs(10));
        let a = m.accounts()[0];
        assert_eq!((a.offered, a.dropped, a.sa2gc_ns), (0, 0, 0));
        assert_eq!(a.span_ns, 10_000_000_000);
    }

    #[test]
    fn voip_sa2gc_share_at_threshold() {
        let flows = vec![podd(0, App::Voip, TravelClass::Economy)];
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Sa2gc, 15_000, SimTime::from_secs(36));
        m.record_interval(FlowId(0), Assignment::Da2gc, 15_000, SimTime::from_secs(3564));
        let r = m.report(&flows, &records(&flows), info(), &QosThresholds::default());
        assert!((r.voip_sa2gc_fraction(TravelClass::Economy) - 0.01).abs() < 1e-15);
        assert!(r.satisfied_all);
    }

    #[test]
    fn group_fraction_and_splitting_invariance() {
        let flows = vec![podd(0, App::Web, TravelClass::Economy)];
        let mut whole = MetricsCollector::new(1);
        whole.record_interval(FlowId(0), Assignment::Da2gc, 3 * MBPS, SimTime::from_secs(90));
        whole.record_interval(FlowId(0), Assignment::Dropped, 3 * MBPS, SimTime::from_secs(10));
        let mut split = MetricsCollector::new(1);
        split.record_interval(FlowId(0), Assignment::Da2gc, 3 * MBPS, SimTime::from_secs(45));
        split.record_interval(FlowId(0), Assignment::Da2gc, 3 * MBPS, SimTime::from_secs(45));
        for _ in 0..10 {
            split.record_interval(FlowId(0), Assignment::Dropped, 3 * MBPS, SimTime::from_secs(1));
        }
        let recs = records(&flows);
        let a = whole.report(&flows, &recs, info(), &QosThresholds::default());
        let b = split.report(&flows, &recs, info(), &QosThresholds::default());
        assert_eq!(a.dropped_fraction(App::Web, TravelClass::Economy), 0.1);
        assert_eq!(a.groups, b.groups);
        // exactly at the Web threshold
        assert!(a.satisfied_all);
    }

    #[test]
    fn empty_report_is_vacuously_satisfied() {
        let m = MetricsCollector::new(0);
        let r = m.report(&[], &[], info(), &QosThresholds::default());
        assert!(r.satisfied_all);
        assert_eq!(r.dropped_fraction(App::Video, TravelClass::First), 0.0);
        assert!(r.csv_rows().iter().all(|row| row.ends_with("n/a")));
        assert_eq!(r.csv_rows().len(), 12);
    }

    #[test]
    fn single_violation_fails() {
        let flows = vec![podd(0, App::Voip, TravelClass::Economy)];
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Sa2gc, 15_000, SimTime::from_secs(54));
        let r = m.report(&flows, &records(&flows), info(), &QosThresholds::default());
        assert!((r.voip_sa2gc_fraction(TravelClass::Economy) - 0.015).abs() < 1e-12);
        assert!(!r.satisfied_all);
    }

    #[test]
    fn video_drop_at_threshold_passes() {
        let flows = vec![podd(0, App::Video, TravelClass::Business)];
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Da2gc, 4 * MBPS, SimTime::from_secs(98));
        m.record_interval(FlowId(0), Assignment::Dropped, 4 * MBPS, SimTime::from_secs(2));
        let r = m.report(&flows, &records(&flows), info(), &QosThresholds::default());
        assert_eq!(r.dropped_fraction(App::Video, TravelClass::Business), 0.02);
        assert!(r.satisfied_all);
    }

    #[test]
    fn mission_critical_on_sa2gc_fails() {
        let mut spec = podd(0, App::Acd, TravelClass::None);
        spec.domain = Domain::Acd;
        let flows = vec![spec];
        let mut m = MetricsCollector::new(1);
        m.record_interval(FlowId(0), Assignment::Sa2gc, 80, SimTime::from_secs(1));
        let r = m.report(&flows, &records(&flows), info(), &QosThresholds::default());
        assert!(!r.mission_critical_clean);
        assert!(!r.satisfied_all);
    }

    #[test]
    fn transitions_close_intervals() {
        let mut m = MetricsCollector::new(1);
        m.transition(FlowId(0), SimTime::from_secs(10), Assignment::Da2gc, MBPS);
        m.transition(FlowId(0), SimTime::from_secs(20), Assignment::Sa2gc, MBPS);
        m.close_all(SimTime::from_secs(25));
        let a = m.accounts()[0];
        assert_eq!(a.span_ns, 15_000_000_000);
        assert_eq!(a.sa2gc_ns, 5_000_000_000);
        assert_eq!(a.offered, a.delivered + a.dropped);
    }

    #[test]
    #[should_panic(expected = "negative duration")]
    fn negative_interval_is_fatal() {
        let mut m = MetricsCollector::new(1);
        m.transition(FlowId(0), SimTime::from_secs(10), Assignment::Da2gc, MBPS);
        m.close(FlowId(0), SimTime::from_secs(5));
    }
}
