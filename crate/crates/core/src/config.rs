//! Scenario configuration: one flat JSON document, every key optional.
//!
//! Unset keys take the defaults of the reference cabin: 95 economy, 6
//! business and 6 first-class passengers on a one-hour flight, 100 Mbps per
//! DA2GC cell and per SA2GC beam, ten satellite operators.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::engine::FsvScheme;
use crate::error::{ConfigError, Error};
use crate::link::{ActivityTable, LinkKind, LinkParams};
use crate::metrics::QosThresholds;
use crate::sim::SimTime;
use crate::traffic::{ActivityProfile, CabinConfig, UsageRatios};

/// Replaces one row of the activity table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityRow {
    pub link: LinkKind,
    pub radius_km: u32,
    pub low: u32,
    pub medium: u32,
    pub high: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub horizon_s: f64,
    pub scheme: u8,
    /// Share of Web and Video demand served from the on-board cache.
    pub hit_rate: f64,
    /// Hit-rate grid for the minimal hit-rate search.
    pub grid_step: f64,

    pub economy_seats: u32,
    pub business_seats: u32,
    pub first_seats: u32,
    pub usage_voip: f64,
    pub usage_video: f64,
    pub usage_web: f64,
    /// `[progress, active fraction]` breakpoints, progress running 0 to 1.
    pub activity_profile: Vec<[f64; 2]>,
    pub video_rate_interval_s: f64,

    pub da2gc_capacity_bps: u64,
    pub sa2gc_capacity_bps: u64,
    pub da2gc_operators: u32,
    pub sa2gc_operators: u32,
    pub da2gc_radii_km: Vec<u32>,
    pub sa2gc_radii_km: Vec<u32>,
    /// Rows merged over the built-in activity table.
    pub activity_table: Vec<ActivityRow>,
    pub aircraft_speed_kmh: u32,
    pub churn_interval_s: f64,
    pub churn_max: u32,

    pub voip_max_drop: f64,
    pub video_max_drop: f64,
    pub web_max_drop: f64,
    pub max_voip_sa2gc_fraction: f64,

    /// Seeds per scheme in a cache sweep.
    pub runs: u32,
    /// Worker threads for sweeps; 0 uses every core.
    pub workers: usize,
    pub out_dir: String,
}

impl Default for Scenario {
    fn default() -> Self {
        let cabin = CabinConfig::default();
        let thresholds = QosThresholds::default();
        let da2gc = LinkParams::da2gc_default();
        let sa2gc = LinkParams::sa2gc_default();
        Scenario {
            seed: 1,
            horizon_s: 3600.0,
            scheme: 2,
            hit_rate: 0.0,
            grid_step: 0.05,
            economy_seats: cabin.economy_seats,
            business_seats: cabin.business_seats,
            first_seats: cabin.first_seats,
            usage_voip: cabin.usage.voip,
            usage_video: cabin.usage.video,
            usage_web: cabin.usage.web,
            activity_profile: cabin.activity.points().to_vec(),
            video_rate_interval_s: 10.0,
            da2gc_capacity_bps: da2gc.total_capacity_bps,
            sa2gc_capacity_bps: sa2gc.total_capacity_bps,
            da2gc_operators: da2gc.operators,
            sa2gc_operators: sa2gc.operators,
            da2gc_radii_km: da2gc.radii_km,
            sa2gc_radii_km: sa2gc.radii_km,
            activity_table: Vec::new(),
            aircraft_speed_kmh: 900,
            churn_interval_s: 180.0,
            churn_max: 4,
            voip_max_drop: thresholds.voip_max_drop,
            video_max_drop: thresholds.video_max_drop,
            web_max_drop: thresholds.web_max_drop,
            max_voip_sa2gc_fraction: thresholds.max_voip_sa2gc_fraction,
            runs: 295,
            workers: 0,
            out_dir: "out".to_string(),
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Scenario::from_json(&text)?)
    }

    /// Parses a scenario, naming the first offending key on error.
    pub fn from_json(text: &str) -> Result<Scenario, ConfigError> {
        let given: Map<String, Value> = match serde_json::from_str(text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(ConfigError::Malformed("top level must be a JSON object".into())),
            Err(e) => return Err(ConfigError::Malformed(e.to_string())),
        };
        let Value::Object(mut merged) = serde_json::to_value(Scenario::default()).expect("defaults serialize") else {
            unreachable!("scenario serializes to an object");
        };
        for (key, value) in given {
            if !merged.contains_key(&key) {
                return Err(ConfigError::Malformed(format!("unknown key `{key}`")));
            }
            let previous = merged.insert(key.clone(), value);
            if let Err(e) = serde_json::from_value::<Scenario>(Value::Object(merged.clone())) {
                return Err(ConfigError::Malformed(format!("bad value for `{key}`: {e}")));
            }
            debug_assert!(previous.is_some());
        }
        let scenario: Scenario =
            serde_json::from_value(Value::Object(merged)).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fsv_scheme()?;
        if !(self.horizon_s.is_finite() && self.horizon_s > 0.0) {
            return Err(ConfigError::invalid("horizon_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.hit_rate) {
            return Err(ConfigError::invalid("hit_rate", "must lie in [0, 1]"));
        }
        crate::cache::grid_points(self.grid_step)?;
        self.cabin().validate()?;
        if !(self.video_rate_interval_s.is_finite() && self.video_rate_interval_s > 0.0) {
            return Err(ConfigError::invalid("video_rate_interval_s", "must be positive"));
        }
        if !(self.churn_interval_s.is_finite() && self.churn_interval_s > 0.0) {
            return Err(ConfigError::invalid("churn_interval_s", "must be positive"));
        }
        if self.aircraft_speed_kmh == 0 {
            return Err(ConfigError::invalid("aircraft_speed_kmh", "must be positive"));
        }
        if self.da2gc_operators == 0 {
            return Err(ConfigError::invalid("da2gc_operators", "must be at least 1"));
        }
        if self.sa2gc_operators == 0 {
            return Err(ConfigError::invalid("sa2gc_operators", "must be at least 1"));
        }
        if self.da2gc_radii_km.is_empty() {
            return Err(ConfigError::invalid("da2gc_radii_km", "must not be empty"));
        }
        if self.sa2gc_radii_km.is_empty() {
            return Err(ConfigError::invalid("sa2gc_radii_km", "must not be empty"));
        }
        let table = self.activity_table();
        for (link, radii, key) in [
            (LinkKind::Da2gc, &self.da2gc_radii_km, "da2gc_radii_km"),
            (LinkKind::Sa2gc, &self.sa2gc_radii_km, "sa2gc_radii_km"),
        ] {
            for &r in radii {
                if table.activity_count(link, r, crate::link::ActivityLevel::Low).is_err() {
                    return Err(ConfigError::invalid(key, format!("radius {r} km not covered by the activity table")));
                }
            }
        }
        self.thresholds().validate()?;
        if self.runs == 0 {
            return Err(ConfigError::invalid("runs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn fsv_scheme(&self) -> Result<FsvScheme, ConfigError> {
        FsvScheme::from_id(self.scheme)
    }

    pub fn horizon(&self) -> SimTime {
        SimTime::from_secs_f64(self.horizon_s)
    }

    pub fn cabin(&self) -> CabinConfig {
        CabinConfig {
            economy_seats: self.economy_seats,
            business_seats: self.business_seats,
            first_seats: self.first_seats,
            usage: UsageRatios {
                voip: self.usage_voip,
                video: self.usage_video,
                web: self.usage_web,
            },
            activity: ActivityProfile::new(self.activity_profile.clone()).unwrap_or_default(),
        }
    }

    pub fn thresholds(&self) -> QosThresholds {
        QosThresholds {
            voip_max_drop: self.voip_max_drop,
            video_max_drop: self.video_max_drop,
            web_max_drop: self.web_max_drop,
            max_voip_sa2gc_fraction: self.max_voip_sa2gc_fraction,
            mission_critical_must_hold: true,
        }
    }

    pub fn activity_table(&self) -> ActivityTable {
        let mut table = ActivityTable::default();
        for row in &self.activity_table {
            table.set_anchor(row.link, row.radius_km, [row.low, row.medium, row.high]);
        }
        table
    }

    pub fn link_params(&self, kind: LinkKind) -> LinkParams {
        match kind {
            LinkKind::Da2gc => LinkParams {
                kind,
                radii_km: self.da2gc_radii_km.clone(),
                total_capacity_bps: self.da2gc_capacity_bps,
                operators: self.da2gc_operators,
            },
            LinkKind::Sa2gc => LinkParams {
                kind,
                radii_km: self.sa2gc_radii_km.clone(),
                total_capacity_bps: self.sa2gc_capacity_bps,
                operators: self.sa2gc_operators,
            },
        }
    }
}
