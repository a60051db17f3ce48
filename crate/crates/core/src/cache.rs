//! Minimal on-board cache hit rate per flight and its distribution over
//! seeded flights.
//!
//! A hit rate `h` scales every Web and Video flow's offered rate by `1 - h`.
//! The event schedule and every random draw are independent of `h`, so runs
//! at different hit rates see the same flight.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::engine::FsvScheme;
use crate::error::ConfigError;
use crate::sim;
use crate::types::App;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheModel {
    hit_rate: f64,
}

impl CacheModel {
    pub fn new(hit_rate: f64) -> Self {
        CacheModel {
            hit_rate: hit_rate.clamp(0.0, 1.0),
        }
    }

    pub fn hit_rate(&self) -> f64 {
        self.hit_rate
    }

    pub fn applies_to(app: App) -> bool {
        matches!(app, App::Web | App::Video)
    }

    /// Rate left for the air-to-ground links.
    pub fn apply(&self, app: App, rate_bps: u64) -> u64 {
        if Self::applies_to(app) && self.hit_rate > 0.0 {
            (rate_bps as f64 * (1.0 - self.hit_rate)).round() as u64
        } else {
            rate_bps
        }
    }
}

/// Number of grid intervals for `step`; the step must divide 1 evenly.
pub fn grid_points(step: f64) -> Result<usize, ConfigError> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(ConfigError::invalid("grid_step", "must lie in (0, 1]"));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(ConfigError::invalid("grid_step", format!("{step} does not divide 1 evenly")));
    }
    Ok(n as usize)
}

/// Hit rate at grid index `i` of `n`.
pub fn grid_value(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

/// Smallest hit rate on the grid that satisfies every flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum MinHitRate {
    Rate(f64),
    /// Not even a full cache satisfies the flight.
    Unsatisfiable,
}

impl MinHitRate {
    pub fn rate(self) -> Option<f64> {
        match self {
            MinHitRate::Rate(r) => Some(r),
            MinHitRate::Unsatisfiable => None,
        }
    }
}

impl From<Option<f64>> for MinHitRate {
    fn from(v: Option<f64>) -> Self {
        v.map_or(MinHitRate::Unsatisfiable, MinHitRate::Rate)
    }
}

impl From<MinHitRate> for Option<f64> {
    fn from(v: MinHitRate) -> Self {
        v.rate()
    }
}

/// Whether the flight `seed` satisfies every flow at `hit_rate`.
pub fn satisfied_at(scenario: &Scenario, seed: u64, scheme: FsvScheme, hit_rate: f64) -> Result<bool, ConfigError> {
    let s = Scenario {
        seed,
        scheme: scheme.id(),
        hit_rate,
        ..scenario.clone()
    };
    Ok(sim::run(&s)?.satisfied_all)
}

/// Smallest grid hit rate that satisfies the flight, scanning upward.
///
/// Satisfaction is not monotone in the hit rate: shrinking Video flows can
/// let equal-FSV flows crowd VoIP off DA2GC. A bisection could therefore
/// miss the smallest satisfying point, so every grid point is tried in turn.
pub fn min_hit_rate(scenario: &Scenario, seed: u64, scheme: FsvScheme, step: f64) -> Result<MinHitRate, ConfigError> {
    let n = grid_points(step)?;
    for i in 0..=n {
        let h = grid_value(i, n);
        if satisfied_at(scenario, seed, scheme, h)? {
            return Ok(MinHitRate::Rate(h));
        }
    }
    Ok(MinHitRate::Unsatisfiable)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub scheme: u8,
    pub seed: u64,
    pub min_hit_rate: MinHitRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub hit_rate: f64,
    pub fraction: f64,
}

/// Empirical distribution of the minimal hit rate over flights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRateCdf {
    pub scheme: u8,
    pub runs: usize,
    pub unsatisfiable: usize,
    /// One point per distinct minimal hit rate: the fraction of flights
    /// satisfied at or below it.
    pub points: Vec<CdfPoint>,
}

impl HitRateCdf {
    pub fn from_min_rates(scheme: u8, rates: &[MinHitRate]) -> HitRateCdf {
        let runs = rates.len();
        let mut sat: Vec<f64> = rates.iter().filter_map(|r| r.rate()).collect();
        sat.sort_by(f64::total_cmp);
        let mut points: Vec<CdfPoint> = Vec::new();
        for (k, &h) in sat.iter().enumerate() {
            let fraction = (k + 1) as f64 / runs as f64;
            match points.last_mut() {
                Some(p) if p.hit_rate == h => p.fraction = fraction,
                _ => points.push(CdfPoint { hit_rate: h, fraction }),
            }
        }
        HitRateCdf {
            scheme,
            runs,
            unsatisfiable: runs - sat.len(),
            points,
        }
    }

    /// Fraction of flights fully satisfied with a cache of hit rate `h`.
    pub fn fraction_at(&self, h: f64) -> f64 {
        self.points
            .iter()
            .take_while(|p| p.hit_rate <= h + 1e-12)
            .last()
            .map_or(0.0, |p| p.fraction)
    }

    pub fn csv_header() -> &'static str {
        "hit_rate,fraction_satisfied,scheme"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| format!("{:.6},{:.6},{}", p.hit_rate, p.fraction, self.scheme))
            .collect()
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

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

/// Minimal hit rate for every seed, in parallel. `on_done` sees each result
/// as it completes; the returned list is sorted by seed.
pub fn sweep<F>(
    scenario: &Scenario,
    seeds: &[u64],
    scheme: FsvScheme,
    workers: usize,
    on_done: F,
) -> Result<Vec<SeedResult>, ConfigError>
where
    F: Fn(&SeedResult) + Sync,
{
    scenario.validate()?;
    let step = scenario.grid_step;
    let mut results = pool(workers).install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let r = SeedResult {
                    scheme: scheme.id(),
                    seed,
                    min_hit_rate: min_hit_rate(scenario, seed, scheme, step)?,
                };
                on_done(&r);
                Ok(r)
            })
            .collect::<Result<Vec<_>, ConfigError>>()
    })?;
    results.sort_by_key(|r| r.seed);
    Ok(results)
}

/// Distribution of the minimal hit rate over `seeds` for one scheme.
pub fn hit_rate_cdf(scenario: &Scenario, seeds: &[u64], scheme: FsvScheme) -> Result<HitRateCdf, ConfigError> {
    if seeds.is_empty() {
        return Err(ConfigError::invalid("runs", "need at least one seed"));
    }
    let results = sweep(scenario, seeds, scheme, scenario.workers, |_| {})?;
    let rates: Vec<_> = results.iter().map(|r| r.min_hit_rate).collect();
    Ok(HitRateCdf::from_min_rates(scheme.id(), &rates))
}
