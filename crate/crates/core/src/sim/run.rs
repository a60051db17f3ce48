use serde::{Deserialize, Serialize};

use super::{Event, EventKind, EventQueue, RngStreams, SimTime};
use crate::cache::CacheModel;
use crate::config::Scenario;
use crate::engine::{Assignment, Controller, FlowRecord};
use crate::error::ConfigError;
use crate::link::{self, LinkKind, LinkState, TimedSpot};
use crate::metrics::{MetricsCollector, QosReport, QosThresholds, RunInfo};
use crate::traffic::{self, FlowSpec, Pattern, Phase, RateType};
use crate::types::{App, FlowId};

/// One line of the optional event trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_s: f64,
    pub event: String,
    pub flow: FlowId,
    pub action: String,
    pub from: Assignment,
    pub link: Assignment,
}

#[derive(Debug, Clone, Copy)]
struct FlowProc {
    phase: Phase,
    video_rate: u64,
    stopped: bool,
}

#[derive(Debug, Clone)]
struct LinkRun {
    spots: Vec<TimedSpot>,
    current: usize,
    state: LinkState,
}

/// A single seeded flight.
#[derive(Debug, Clone)]
pub struct Simulation {
    info: RunInfo,
    horizon: SimTime,
    queue: EventQueue,
    rng: RngStreams,
    flows: Vec<FlowSpec>,
    procs: Vec<FlowProc>,
    controller: Controller,
    metrics: MetricsCollector,
    da2gc: LinkRun,
    sa2gc: LinkRun,
    cache: CacheModel,
    video_interval: SimTime,
    churn_max: u32,
    thresholds: QosThresholds,
    trace: Option<Vec<TraceRecord>>,
    dispatched: u64,
}

impl Simulation {
    /// Builds the flow population and both spot sequences and queues every
    /// pre-known event.
    pub fn new(scenario: &Scenario) -> Result<Simulation, ConfigError> {
        scenario.validate()?;
        let scheme = scenario.fsv_scheme()?;
        let horizon = scenario.horizon();
        let mut rng = RngStreams::new(scenario.seed);

        let flows = traffic::build_flow_population(&scenario.cabin(), horizon, &mut rng.traffic)?;
        let table = scenario.activity_table();
        let mut link_run = |kind: LinkKind| -> Result<LinkRun, ConfigError> {
            let params = scenario.link_params(kind);
            let spots =
                link::generate_spot_sequence(&params, &table, horizon, scenario.aircraft_speed_kmh, rng.link(kind))?;
            let state = LinkState::new(spots[0].spot, params.operators);
            Ok(LinkRun {
                spots,
                current: 0,
                state,
            })
        };
        let da2gc = link_run(LinkKind::Da2gc)?;
        let sa2gc = link_run(LinkKind::Sa2gc)?;

        let records = flows.iter().map(FlowRecord::from_spec).collect();
        let controller = Controller::new(
            scheme,
            records,
            da2gc.state.per_aircraft_capacity,
            sa2gc.state.per_aircraft_capacity,
        );

        let mut queue = EventQueue::new();
        // Same-time starts: system devices, then VoIP, Video, Web, then by
        // passenger index.
        let mut starts: Vec<&FlowSpec> = flows.iter().collect();
        starts.sort_by_key(|f| {
            let group = App::PASSENGER.iter().position(|&a| a == f.app).map_or(0, |i| i + 1);
            (f.start, group, f.passenger, f.id)
        });
        for f in starts {
            queue.schedule(f.start, EventKind::FlowStart(f.id));
        }
        for f in &flows {
            if f.stop < horizon {
                queue.schedule(f.stop, EventKind::FlowStop(f.id));
            }
        }
        for (run, kind) in [(&da2gc, EventKind::HandoverDa2gc), (&sa2gc, EventKind::HandoverSa2gc)] {
            for s in run.spots.iter().skip(1).filter(|s| s.enter < horizon) {
                queue.schedule(s.enter, kind);
            }
        }
        let churn_interval = SimTime::from_secs_f64(scenario.churn_interval_s);
        let mut t = churn_interval;
        while t < horizon {
            queue.schedule(t, EventKind::ChurnTick(LinkKind::Da2gc));
            queue.schedule(t, EventKind::ChurnTick(LinkKind::Sa2gc));
            t = t + churn_interval;
        }

        let n = flows.len();
        Ok(Simulation {
            info: RunInfo {
                scheme: scheme.id(),
                seed: scenario.seed,
                hit_rate: scenario.hit_rate,
                horizon,
            },
            horizon,
            queue,
            rng,
            flows,
            procs: vec![
                FlowProc {
                    phase: Phase::Off,
                    video_rate: 0,
                    stopped: false,
                };
                n
            ],
            controller,
            metrics: MetricsCollector::new(n),
            da2gc,
            sa2gc,
            cache: CacheModel::new(scenario.hit_rate),
            video_interval: SimTime::from_secs_f64(scenario.video_rate_interval_s),
            churn_max: scenario.churn_max,
            thresholds: scenario.thresholds(),
            trace: None,
            dispatched: 0,
        })
    }

    /// Keeps every controller move for [`Simulation::trace`].
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn horizon(&self) -> SimTime {
        self.horizon
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn metrics(&self) -> &MetricsCollector {
        &self.metrics
    }

    pub fn link_state(&self, kind: LinkKind) -> &LinkState {
        match kind {
            LinkKind::Da2gc => &self.da2gc.state,
            LinkKind::Sa2gc => &self.sa2gc.state,
        }
    }

    pub fn spots(&self, kind: LinkKind) -> &[TimedSpot] {
        match kind {
            LinkKind::Da2gc => &self.da2gc.spots,
            LinkKind::Sa2gc => &self.sa2gc.spots,
        }
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    /// Dispatches the next event due at or before the horizon.
    pub fn step(&mut self) -> Option<Event> {
        let event = self.queue.pop_until(self.horizon)?;
        self.dispatch(event);
        self.dispatched += 1;
        let now = event.time;
        for id in self.controller.take_dirty() {
            let rec = self.controller.flow(id);
            self.metrics.transition(id, now, rec.assignment, rec.current_rate);
        }
        if let EventKind::FlowStop(id) = event.kind {
            self.metrics.close(id, now);
        }
        let moves = self.controller.take_moves();
        if let Some(trace) = &mut self.trace {
            trace.extend(moves.into_iter().map(|m| TraceRecord {
                time_s: now.as_secs_f64(),
                event: event.kind.name().to_string(),
                flow: m.flow,
                action: m.action().to_string(),
                from: m.from,
                link: m.to,
            }));
        }
        debug_assert_eq!(self.controller.check_invariants(), Ok(()));
        Some(event)
    }

    /// Runs to the horizon and returns the report.
    pub fn run(mut self) -> QosReport {
        while self.step().is_some() {}
        self.finish()
    }

    /// Runs to the horizon, keeping the simulation for inspection.
    pub fn run_in_place(&mut self) -> QosReport {
        while self.step().is_some() {}
        self.finish()
    }

    fn finish(&mut self) -> QosReport {
        self.metrics.close_all(self.horizon);
        self.metrics
            .report(&self.flows, self.controller.flows(), self.info, &self.thresholds)
    }

    fn effective_rate(&self, id: FlowId) -> u64 {
        let spec = &self.flows[id.0];
        let p = self.procs[id.0];
        let nominal = traffic::current_offered_rate(&spec.profile(), p.phase, p.video_rate);
        self.cache.apply(spec.app, nominal)
    }

    fn schedule_within(&mut self, id: FlowId, at: SimTime, kind: EventKind) {
        if at < self.flows[id.0].stop && at <= self.horizon {
            self.queue.schedule(at, kind);
        }
    }

    fn dispatch(&mut self, event: Event) {
        let now = event.time;
        match event.kind {
            EventKind::FlowStart(id) => {
                let profile = self.flows[id.0].profile();
                self.procs[id.0].phase = Phase::On;
                if let Pattern::OnOff { .. } = profile.pattern {
                    let on = traffic::next_toggle(&profile, Phase::On, &mut self.rng.traffic);
                    self.schedule_within(id, now + on, EventKind::OffToggle(id));
                }
                if profile.rate_type == RateType::Varying {
                    self.procs[id.0].video_rate = traffic::video_rate(&mut self.rng.video);
                    self.schedule_within(id, now + self.video_interval, EventKind::VideoRateChange(id));
                }
                self.metrics.transition(id, now, Assignment::Inactive, 0);
                let rate = self.effective_rate(id);
                self.controller.handle_incoming(id, rate);
            }
            EventKind::OnToggle(id) => {
                if self.procs[id.0].stopped {
                    return;
                }
                self.procs[id.0].phase = Phase::On;
                let profile = self.flows[id.0].profile();
                let on = traffic::next_toggle(&profile, Phase::On, &mut self.rng.traffic);
                self.schedule_within(id, now + on, EventKind::OffToggle(id));
                let rate = self.effective_rate(id);
                self.controller.handle_incoming(id, rate);
            }
            EventKind::OffToggle(id) => {
                if self.procs[id.0].stopped {
                    return;
                }
                self.procs[id.0].phase = Phase::Off;
                let profile = self.flows[id.0].profile();
                let off = traffic::next_toggle(&profile, Phase::Off, &mut self.rng.traffic);
                self.schedule_within(id, now + off, EventKind::OnToggle(id));
                self.controller.release(id);
            }
            EventKind::VideoRateChange(id) => {
                if self.procs[id.0].stopped {
                    return;
                }
                self.procs[id.0].video_rate = traffic::video_rate(&mut self.rng.video);
                self.schedule_within(id, now + self.video_interval, EventKind::VideoRateChange(id));
                let rate = self.effective_rate(id);
                self.controller.handle_rate_change(id, rate);
            }
            EventKind::FlowStop(id) => {
                self.procs[id.0].stopped = true;
                self.controller.release(id);
            }
            EventKind::HandoverDa2gc | EventKind::HandoverSa2gc => {
                let kind = event.kind.link().expect("handover names its link");
                let run = self.link_run_mut(kind);
                run.current += 1;
                let spot = run.spots[run.current].spot;
                if let Some(cap) = run.state.handover(spot) {
                    self.controller.handle_capacity_change(kind, cap);
                }
            }
            EventKind::ChurnTick(kind) => {
                let max = self.churn_max;
                let spot = self.link_state(kind).current;
                let count = link::churn_tick(&spot, max, &mut self.rng.churn);
                if let Some(cap) = self.link_run_mut(kind).state.set_aircraft_count(count) {
                    self.controller.handle_capacity_change(kind, cap);
                }
            }
        }
    }

    fn link_run_mut(&mut self, kind: LinkKind) -> &mut LinkRun {
        match kind {
            LinkKind::Da2gc => &mut self.da2gc,
            LinkKind::Sa2gc => &mut self.sa2gc,
        }
    }
}

/// Builds and runs one flight.
pub fn run(scenario: &Scenario) -> Result<QosReport, ConfigError> {
    Ok(Simulation::new(scenario)?.run())
}
