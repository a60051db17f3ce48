//! Flow population and per-flow rate processes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::SimTime;
use crate::types::{App, Domain, FlowId, TravelClass};

/// Nominal video rate; individual draws vary around it.
pub const VIDEO_MEAN_RATE_BPS: u64 = 4_000_000;
/// Video draws are uniform in `[mean - band, mean + band]`.
pub const VIDEO_RATE_BAND_BPS: u64 = VIDEO_MEAN_RATE_BPS / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pattern {
    OnOff { mean_on_s: f64, mean_off_s: f64 },
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateType {
    Cbr,
    Varying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicationProfile {
    pub app: App,
    pub pattern: Pattern,
    /// Mean rate for `Varying` profiles.
    pub rate_bps: u64,
    pub rate_type: RateType,
}

impl ApplicationProfile {
    pub fn of(app: App) -> ApplicationProfile {
        let (pattern, rate_bps, rate_type) = match app {
            App::Voip => (on_off(3.0, 3.0), 15_000, RateType::Cbr),
            App::Video => (Pattern::Continuous, VIDEO_MEAN_RATE_BPS, RateType::Varying),
            App::Web => (on_off(5.0, 30.0), 3_000_000, RateType::Cbr),
            App::Acd => (Pattern::Continuous, 80, RateType::Cbr),
            App::Aisd => (Pattern::Continuous, 100_000, RateType::Cbr),
            App::Hmd => (Pattern::Continuous, 600, RateType::Cbr),
            App::Frd => (Pattern::Continuous, 136_000, RateType::Cbr),
            App::Mtc => (Pattern::Continuous, 3_000_000, RateType::Cbr),
        };
        ApplicationProfile {
            app,
            pattern,
            rate_bps,
            rate_type,
        }
    }

    pub fn is_on_off(&self) -> bool {
        matches!(self.pattern, Pattern::OnOff { .. })
    }
}

fn on_off(mean_on_s: f64, mean_off_s: f64) -> Pattern {
    Pattern::OnOff {
        mean_on_s,
        mean_off_s,
    }
}

/// `(priority, delay requirement)` for a flow.
///
/// Priority runs 1..=5, delay requirement 1..=3; higher means more demanding.
pub fn priority_and_delay(app: App, class: TravelClass) -> (u8, u8) {
    match app.domain() {
        Domain::Acd | Domain::Aisd | Domain::Hmd | Domain::Frd => (5, 3),
        Domain::Mtc => (1, 1),
        Domain::Podd => {
            let priority = match class {
                TravelClass::First => 4,
                TravelClass::Business => 3,
                TravelClass::Economy | TravelClass::None => 2,
            };
            let delay = match app {
                App::Voip => 3,
                App::Video => 2,
                _ => 1,
            };
            (priority, delay)
        }
    }
}

/// Static description of one traffic flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub domain: Domain,
    pub app: App,
    pub class: TravelClass,
    pub priority: u8,
    pub delay_req: u8,
    pub start: SimTime,
    pub stop: SimTime,
    /// Passenger index for PODD flows.
    pub passenger: Option<usize>,
}

impl FlowSpec {
    pub fn profile(&self) -> ApplicationProfile {
        ApplicationProfile::of(self.app)
    }

    pub fn is_mission_critical(&self) -> bool {
        self.domain.is_mission_critical()
    }
}

/// Fraction of passengers active, as a piecewise-linear function of the
/// flight's progress in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityProfile {
    points: Vec<[f64; 2]>,
}

impl Default for ActivityProfile {
    fn default() -> Self {
        ActivityProfile::triangular()
    }
}

impl ActivityProfile {
    /// Ramp from idle at take-off to full activity mid-flight and back.
    pub fn triangular() -> Self {
        ActivityProfile {
            points: vec![[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]],
        }
    }

    pub fn constant(level: f64) -> Self {
        ActivityProfile {
            points: vec![[0.0, level], [1.0, level]],
        }
    }

    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, ConfigError> {
        let p = ActivityProfile { points };
        p.validate()?;
        Ok(p)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        const KEY: &str = "activity_profile";
        let pts = &self.points;
        if pts.len() < 2 {
            return Err(ConfigError::invalid(KEY, "needs at least two points"));
        }
        if pts[0][0] != 0.0 || pts[pts.len() - 1][0] != 1.0 {
            return Err(ConfigError::invalid(KEY, "must span progress 0.0 to 1.0"));
        }
        if pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(ConfigError::invalid(KEY, "progress values must increase strictly"));
        }
        if pts.iter().any(|p| !(0.0..=1.0).contains(&p[1])) {
            return Err(ConfigError::invalid(KEY, "levels must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn level_at(&self, progress: f64) -> f64 {
        let u = progress.clamp(0.0, 1.0);
        for w in self.points.windows(2) {
            let ([u0, v0], [u1, v1]) = (w[0], w[1]);
            if u <= u1 {
                return v0 + (v1 - v0) * (u - u0) / (u1 - u0);
            }
        }
        self.points[self.points.len() - 1][1]
    }

    /// First stretch of progress during which the profile is at least `level`.
    ///
    /// Returns `None` if the profile never reaches `level`.
    pub fn active_window(&self, level: f64) -> Option<(f64, f64)> {
        let segs: Vec<_> = self.points.windows(2).map(|w| (w[0], w[1])).collect();
        let mut start = None;
        let mut from_seg = 0;
        for (i, &([u0, v0], [u1, v1])) in segs.iter().enumerate() {
            if v0 >= level {
                start = Some(u0);
            } else if v1 >= level {
                start = Some(u0 + (level - v0) / (v1 - v0) * (u1 - u0));
            }
            if start.is_some() {
                from_seg = i;
                break;
            }
        }
        let start = start?;
        for &([u0, v0], [u1, v1]) in &segs[from_seg..] {
            if v1 < level && u1 > start {
                let stop = if v0 < level {
                    u0
                } else {
                    u0 + (v0 - level) / (v0 - v1) * (u1 - u0)
                };
                return Some((start, stop.max(start)));
            }
        }
        Some((start, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsageRatios {
    pub voip: f64,
    pub video: f64,
    pub web: f64,
}

impl Default for UsageRatios {
    fn default() -> Self {
        UsageRatios {
            voip: 0.2,
            video: 0.6,
            web: 0.2,
        }
    }
}

impl UsageRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.voip, self.video, self.web]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = self.as_array();
        if r.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(ConfigError::invalid("usage_voip", "usage ratios must lie in [0, 1]"));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                "usage_video",
                format!("usage ratios must sum to 1, got {sum}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CabinConfig {
    pub economy_seats: u32,
    pub business_seats: u32,
    pub first_seats: u32,
    pub usage: UsageRatios,
    pub activity: ActivityProfile,
}

impl Default for CabinConfig {
    fn default() -> Self {
        CabinConfig {
            economy_seats: 95,
            business_seats: 6,
            first_seats: 6,
            usage: UsageRatios::default(),
            activity: ActivityProfile::triangular(),
        }
    }
}

impl CabinConfig {
    pub fn seats(&self, class: TravelClass) -> u32 {
        match class {
            TravelClass::First => self.first_seats,
            TravelClass::Business => self.business_seats,
            TravelClass::Economy => self.economy_seats,
            TravelClass::None => 0,
        }
    }

    pub fn passengers(&self) -> u32 {
        self.economy_seats + self.business_seats + self.first_seats
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.usage.validate()?;
        self.activity.validate()
    }
}

/// Splits `seats` across apps in proportion to `ratios`.
///
/// Each app first receives the floor of its quota; leftover seats go to the
/// largest fractional remainders, earlier apps winning ties.
pub fn largest_remainder(seats: u32, ratios: [f64; 3]) -> [u32; 3] {
    // Quotas like 95 * 0.2 land a hair below the integer in binary.
    const EPS: f64 = 1e-9;
    let quotas = ratios.map(|r| seats as f64 * r);
    let mut counts = quotas.map(|q| (q + EPS).floor() as u32);
    let assigned: u32 = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    let frac = |i: usize| (quotas[i] - counts[i] as f64).max(0.0);
    order.sort_by(|&a, &b| {
        let (fa, fb) = (frac(a), frac(b));
        if (fa - fb).abs() <= EPS {
            a.cmp(&b)
        } else {
            fb.total_cmp(&fa)
        }
    });
    for &i in order.iter().take(seats.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Builds every flow of the flight.
///
/// System domains get one always-on device each (ids 0..5). Passengers follow,
/// first class before business before economy, each running a single app.
/// Passengers switch on in a shuffled order so that the number of active
/// passengers tracks the cabin's activity profile, and switch off in reverse.
pub fn build_flow_population<R: Rng + ?Sized>(
    cabin: &CabinConfig,
    horizon: SimTime,
    rng: &mut R,
) -> Result<Vec<FlowSpec>, ConfigError> {
    cabin.validate()?;
    if horizon == SimTime::ZERO {
        return Err(ConfigError::invalid("horizon_s", "must be positive"));
    }
    let mut flows = Vec::new();
    for app in App::SYSTEM {
        let (priority, delay_req) = priority_and_delay(app, TravelClass::None);
        flows.push(FlowSpec {
            id: FlowId(flows.len()),
            domain: app.domain(),
            app,
            class: TravelClass::None,
            priority,
            delay_req,
            start: SimTime::ZERO,
            stop: horizon,
            passenger: None,
        });
    }

    let mut passengers: Vec<(TravelClass, App)> = Vec::new();
    for class in TravelClass::CABIN {
        let counts = largest_remainder(cabin.seats(class), cabin.usage.as_array());
        for (app, n) in App::PASSENGER.into_iter().zip(counts) {
            passengers.extend(std::iter::repeat_n((class, app), n as usize));
        }
    }

    let n = passengers.len();
    let mut activation: Vec<usize> = (0..n).collect();
    activation.shuffle(rng);
    // rank[p] = position of passenger p in the activation order
    let mut rank = vec![0usize; n];
    for (k, &p) in activation.iter().enumerate() {
        rank[p] = k;
    }

    for (p, &(class, app)) in passengers.iter().enumerate() {
        let level = (rank[p] as f64 + 0.5) / n as f64;
        let Some((u_start, u_stop)) = cabin.activity.active_window(level) else {
            continue;
        };
        let start = SimTime((u_start * horizon.0 as f64).round() as u64);
        let stop = SimTime((u_stop * horizon.0 as f64).round() as u64).min(horizon);
        if start >= stop {
            continue;
        }
        let (priority, delay_req) = priority_and_delay(app, class);
        flows.push(FlowSpec {
            id: FlowId(flows.len()),
            domain: Domain::Podd,
            app,
            class,
            priority,
            delay_req,
            start,
            stop,
            passenger: Some(p),
        });
    }
    Ok(flows)
}

/// Length of the next ON or OFF phase, drawn from an exponential law.
///
/// # Panics
///
/// On a continuous profile, which has no phases.
pub fn next_toggle<R: Rng + ?Sized>(profile: &ApplicationProfile, phase: Phase, rng: &mut R) -> SimTime {
    let Pattern::OnOff {
        mean_on_s,
        mean_off_s,
    } = profile.pattern
    else {
        panic!("{} is continuous and never toggles", profile.app);
    };
    let mean = match phase {
        Phase::On => mean_on_s,
        Phase::Off => mean_off_s,
    };
    let exp = Exp::new(1.0 / mean).expect("positive mean");
    loop {
        let d = SimTime::from_secs_f64(exp.sample(rng));
        if d > SimTime::ZERO {
            return d;
        }
    }
}

/// A fresh video rate, uniform over the ±50% band around 4 Mbps.
pub fn video_rate<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random_range(
        VIDEO_MEAN_RATE_BPS - VIDEO_RATE_BAND_BPS..=VIDEO_MEAN_RATE_BPS + VIDEO_RATE_BAND_BPS,
    )
}

/// Rate a started flow offers right now, before any cache scaling.
pub fn current_offered_rate(profile: &ApplicationProfile, phase: Phase, video_rate_bps: u64) -> u64 {
    match (profile.pattern, phase) {
        (Pattern::OnOff { .. }, Phase::Off) => 0,
        _ => match profile.rate_type {
            RateType::Cbr => profile.rate_bps,
            RateType::Varying => video_rate_bps,
        },
    }
}
