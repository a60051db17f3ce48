//! Flow-level simulation of in-flight traffic management.
//!
//! An aircraft forwards its traffic flows over two air-to-ground links: a
//! terrestrial cellular link (DA2GC) and a geostationary satellite link
//! (SA2GC). Both links are shared with the other aircraft inside the current
//! cell or beam, so the capacity available to our aircraft moves with every
//! handover and every arrival or departure of neighbouring aircraft. A
//! controller ranks flows by a forwarding scheme value (FSV) and decides,
//! event by event, which flows ride which link and which are dropped.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`]: simulation clock, event queue and seeded random streams, plus
//!   the [`Simulation`] driver that wires the other modules together.
//! * [`traffic`]: application profiles, cabin composition and ON/OFF rate
//!   processes.
//! * [`link`]: spot sequences, activity tables, churn and per-aircraft
//!   capacity.
//! * [`engine`]: the forwarding controller.
//! * [`metrics`]: fluid accounting of offered, delivered and dropped traffic
//!   and the QoS verdict.
//! * [`cache`]: minimal cache hit rate search and its distribution over
//!   seeded flights.
//! * [`config`] and [`cli`]: scenario files and the command-line front end.

pub mod cache;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod link;
pub mod metrics;
pub mod sim;
pub mod traffic;
mod types;

pub use cache::{hit_rate_cdf, min_hit_rate, CacheModel, HitRateCdf, MinHitRate};
pub use config::Scenario;
pub use engine::{Assignment, Controller, FlowRecord, FsvScheme, Move};
pub use error::{ConfigError, Error};
pub use link::{ActivityLevel, ActivityTable, LinkKind, Spot};
pub use metrics::{QosReport, QosThresholds};
pub use sim::{Event, EventKind, EventQueue, RngStreams, SimTime, Simulation};
pub use traffic::{ApplicationProfile, CabinConfig, FlowSpec};
pub use types::{App, Domain, FlowId, TravelClass};
