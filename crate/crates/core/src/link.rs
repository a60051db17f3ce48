//! Air-to-ground link model: spots, activity levels, churn and capacity share.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    #[serde(rename = "DA2GC")]
    Da2gc,
    #[serde(rename = "SA2GC")]
    Sa2gc,
}

impl LinkKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Da2gc => "DA2GC",
            LinkKind::Sa2gc => "SA2GC",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityLevel {
    Low,
    Medium,
    High,
}

impl ActivityLevel {
    pub const ALL: [ActivityLevel; 3] = [ActivityLevel::Low, ActivityLevel::Medium, ActivityLevel::High];

    fn index(self) -> usize {
        self as usize
    }
}

/// One DA2GC cell or SA2GC beam as seen by the aircraft.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spot {
    pub link: LinkKind,
    pub radius_km: u32,
    pub activity: ActivityLevel,
    pub aircraft_count: u32,
    pub total_capacity_bps: u64,
}

/// Representative aircraft counts per `(link, radius, activity)`.
///
/// Radii between tabulated anchors are linearly interpolated and rounded
/// half-up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityTable {
    da2gc: BTreeMap<u32, [u32; 3]>,
    sa2gc: BTreeMap<u32, [u32; 3]>,
}

impl Default for ActivityTable {
    fn default() -> Self {
        ActivityTable {
            da2gc: BTreeMap::from([
                (80, [1, 10, 55]),
                (100, [2, 11, 61]),
                (120, [2, 14, 80]),
                (150, [3, 16, 103]),
            ]),
            sa2gc: BTreeMap::from([(1000, [4, 28, 67])]),
        }
    }
}

impl ActivityTable {
    pub fn empty() -> Self {
        ActivityTable {
            da2gc: BTreeMap::new(),
            sa2gc: BTreeMap::new(),
        }
    }

    /// Adds or replaces an anchor row `[low, medium, high]`.
    pub fn set_anchor(&mut self, link: LinkKind, radius_km: u32, counts: [u32; 3]) {
        self.anchors_mut(link).insert(radius_km, counts);
    }

    pub fn anchors(&self, link: LinkKind) -> &BTreeMap<u32, [u32; 3]> {
        match link {
            LinkKind::Da2gc => &self.da2gc,
            LinkKind::Sa2gc => &self.sa2gc,
        }
    }

    fn anchors_mut(&mut self, link: LinkKind) -> &mut BTreeMap<u32, [u32; 3]> {
        match link {
            LinkKind::Da2gc => &mut self.da2gc,
            LinkKind::Sa2gc => &mut self.sa2gc,
        }
    }

    pub fn activity_count(&self, link: LinkKind, radius_km: u32, activity: ActivityLevel) -> Result<u32, ConfigError> {
        let anchors = self.anchors(link);
        let idx = activity.index();
        if let Some(row) = anchors.get(&radius_km) {
            return Ok(row[idx]);
        }
        let below = anchors.range(..radius_km).next_back();
        let above = anchors.range(radius_km..).next();
        let (Some((&r0, c0)), Some((&r1, c1))) = (below, above) else {
            return Err(ConfigError::invalid(
                "activity_table",
                format!("{link} radius {radius_km} km lies outside the tabulated range"),
            ));
        };
        // round(c0 + (c1 - c0) * (r - r0) / (r1 - r0)), half-up, in integers
        let span = i64::from(r1 - r0);
        let num = i64::from(c0[idx]) * span + (i64::from(c1[idx]) - i64::from(c0[idx])) * i64::from(radius_km - r0);
        Ok((2 * num + span).div_euclid(2 * span) as u32)
    }
}

/// Static parameters of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub kind: LinkKind,
    pub radii_km: Vec<u32>,
    pub total_capacity_bps: u64,
    /// Operators splitting the aircraft in a spot evenly among themselves.
    pub operators: u32,
}

impl LinkParams {
    pub fn da2gc_default() -> Self {
        LinkParams {
            kind: LinkKind::Da2gc,
            radii_km: (80..=150).step_by(5).collect(),
            total_capacity_bps: 100_000_000,
            operators: 1,
        }
    }

    pub fn sa2gc_default() -> Self {
        LinkParams {
            kind: LinkKind::Sa2gc,
            radii_km: vec![1000],
            total_capacity_bps: 100_000_000,
            operators: 10,
        }
    }
}

/// A spot together with the time the aircraft enters it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedSpot {
    pub enter: SimTime,
    pub spot: Spot,
}

/// Time to cross a spot along its diameter.
pub fn dwell_time(radius_km: u32, speed_kmh: u32) -> SimTime {
    const NS_PER_HOUR: u64 = 3_600_000_000_000;
    SimTime(2 * u64::from(radius_km) * NS_PER_HOUR / u64::from(speed_kmh))
}

/// Draws independent spots until their dwell times cover `horizon`.
pub fn generate_spot_sequence<R: Rng + ?Sized>(
    params: &LinkParams,
    table: &ActivityTable,
    horizon: SimTime,
    speed_kmh: u32,
    rng: &mut R,
) -> Result<Vec<TimedSpot>, ConfigError> {
    if params.radii_km.is_empty() {
        return Err(ConfigError::invalid("radii_km", format!("no spot radii for {}", params.kind)));
    }
    if speed_kmh == 0 {
        return Err(ConfigError::invalid("aircraft_speed_kmh", "must be positive"));
    }
    let mut seq = Vec::new();
    let mut enter = SimTime::ZERO;
    loop {
        let radius_km = params.radii_km[rng.random_range(0..params.radii_km.len())];
        let activity = ActivityLevel::ALL[rng.random_range(0..3)];
        let aircraft_count = table.activity_count(params.kind, radius_km, activity)?.max(1);
        seq.push(TimedSpot {
            enter,
            spot: Spot {
                link: params.kind,
                radius_km,
                activity,
                aircraft_count,
                total_capacity_bps: params.total_capacity_bps,
            },
        });
        enter = enter + dwell_time(radius_km, speed_kmh);
        if enter >= horizon {
            return Ok(seq);
        }
    }
}

/// Net change of aircraft in a spot over one churn interval, uniform in
/// `-max..=max`.
pub fn churn_draw<R: Rng + ?Sized>(max: u32, rng: &mut R) -> i64 {
    let max = i64::from(max);
    rng.random_range(-max..=max)
}

/// Applies a churn draw; our own aircraft keeps the count at one or more.
pub fn apply_churn(count: u32, delta: i64) -> u32 {
    (i64::from(count) + delta).max(1) as u32
}

pub fn churn_tick<R: Rng + ?Sized>(spot: &Spot, max: u32, rng: &mut R) -> u32 {
    apply_churn(spot.aircraft_count, churn_draw(max, rng))
}

/// Capacity left to our aircraft after equal sharing within its operator.
pub fn per_aircraft_capacity(spot: &Spot, operators: u32) -> u64 {
    let sharing = spot.aircraft_count.div_ceil(operators.max(1)).max(1);
    spot.total_capacity_bps / u64::from(sharing)
}

/// Current spot of one link and the capacity it grants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkState {
    pub kind: LinkKind,
    pub current: Spot,
    pub operators: u32,
    pub per_aircraft_capacity: u64,
}

impl LinkState {
    pub fn new(spot: Spot, operators: u32) -> Self {
        LinkState {
            kind: spot.link,
            current: spot,
            operators,
            per_aircraft_capacity: per_aircraft_capacity(&spot, operators),
        }
    }

    /// Enters `spot`; returns the new capacity if it changed.
    pub fn handover(&mut self, spot: Spot) -> Option<u64> {
        self.current = spot;
        self.refresh()
    }

    pub fn set_aircraft_count(&mut self, count: u32) -> Option<u64> {
        self.current.aircraft_count = count.max(1);
        self.refresh()
    }

    fn refresh(&mut self) -> Option<u64> {
        let cap = per_aircraft_capacity(&self.current, self.operators);
        if cap == self.per_aircraft_capacity {
            None
        } else {
            self.per_aircraft_capacity = cap;
            Some(cap)
        }
    }
}
