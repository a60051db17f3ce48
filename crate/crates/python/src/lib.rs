//! Python bindings for the skyflow simulator.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skyflow::link::{self, ActivityLevel, ActivityTable, LinkKind, Spot};
use skyflow::{
    cache, traffic, App, Assignment, FlowId, FlowRecord, FsvScheme, MinHitRate, TravelClass,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(id: u8) -> PyResult<FsvScheme> {
    FsvScheme::from_id(id).map_err(value_error)
}

fn parse_app(name: &str) -> PyResult<App> {
    App::parse(name).ok_or_else(|| value_error(format!("unknown app `{name}`")))
}

fn parse_class(name: &str) -> PyResult<TravelClass> {
    TravelClass::parse(name).ok_or_else(|| value_error(format!("unknown travel class `{name}`")))
}

fn parse_link(name: &str) -> PyResult<LinkKind> {
    match name.to_ascii_uppercase().as_str() {
        "DA2GC" => Ok(LinkKind::Da2gc),
        "SA2GC" => Ok(LinkKind::Sa2gc),
        _ => Err(value_error(format!("unknown link `{name}`, expected DA2GC or SA2GC"))),
    }
}

fn parse_assignment(name: &str) -> PyResult<Assignment> {
    [Assignment::Inactive, Assignment::Da2gc, Assignment::Sa2gc, Assignment::Dropped]
        .into_iter()
        .find(|a| a.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| value_error(format!("unknown assignment `{name}`")))
}

fn parse_level(name: &str) -> PyResult<ActivityLevel> {
    ActivityLevel::ALL
        .into_iter()
        .find(|l| format!("{l:?}").eq_ignore_ascii_case(name))
        .ok_or_else(|| value_error(format!("unknown activity level `{name}`")))
}

/// Simulation settings. Keyword arguments override the defaults, e.g.
/// `Scenario(seed=3, scheme=1, economy_seats=120)`.
#[pyclass(module = "skyflow", from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: skyflow::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let Some(kwargs) = kwargs else {
            return Ok(Scenario {
                inner: skyflow::Scenario::default(),
            });
        };
        let text: String = py.import("json")?.call_method1("dumps", (kwargs,))?.extract()?;
        Self::from_json(&text)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = skyflow::Scenario::from_json(text).map_err(value_error)?;
        inner.validate().map_err(value_error)?;
        Ok(Scenario { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn scheme(&self) -> u8 {
        self.inner.scheme
    }

    #[setter]
    fn set_scheme(&mut self, v: u8) -> PyResult<()> {
        parse_scheme(v)?;
        self.inner.scheme = v;
        Ok(())
    }

    #[getter]
    fn hit_rate(&self) -> f64 {
        self.inner.hit_rate
    }

    #[setter]
    fn set_hit_rate(&mut self, v: f64) -> PyResult<()> {
        if !(0.0..=1.0).contains(&v) {
            return Err(value_error("hit_rate must lie in [0, 1]"));
        }
        self.inner.hit_rate = v;
        Ok(())
    }

    #[getter]
    fn horizon_s(&self) -> f64 {
        self.inner.horizon_s
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(seed={}, scheme={}, hit_rate={}, horizon_s={})",
            self.inner.seed, self.inner.scheme, self.inner.hit_rate, self.inner.horizon_s
        )
    }
}

/// QoS outcome of one simulated flight.
#[pyclass(module = "skyflow", frozen)]
struct QosReport {
    inner: skyflow::QosReport,
}

#[pymethods]
impl QosReport {
    #[getter]
    fn scheme(&self) -> u8 {
        self.inner.scheme
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn satisfied_all(&self) -> bool {
        self.inner.satisfied_all
    }

    #[getter]
    fn mission_critical_clean(&self) -> bool {
        self.inner.mission_critical_clean
    }

    #[getter]
    fn flow_count(&self) -> usize {
        self.inner.flows.len()
    }

    fn dropped_fraction(&self, app: &str, travel_class: &str) -> PyResult<f64> {
        Ok(self.inner.dropped_fraction(parse_app(app)?, parse_class(travel_class)?))
    }

    fn app_dropped_fraction(&self, app: &str) -> PyResult<f64> {
        Ok(self.inner.app_dropped_fraction(parse_app(app)?))
    }

    fn voip_sa2gc_fraction(&self, travel_class: &str) -> PyResult<f64> {
        Ok(self.inner.voip_sa2gc_fraction(parse_class(travel_class)?))
    }

    fn to_json(&self) -> String {
        skyflow::cli::report_json(&self.inner)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "QosReport(scheme={}, seed={}, satisfied_all={})",
            self.inner.scheme, self.inner.seed, self.inner.satisfied_all
        )
    }
}

/// The forwarding controller, driven event by event.
///
/// `flows` lists `(priority, delay_requirement, pinned)`; flow ids are list
/// positions. Rates and capacities are in bit/s.
#[pyclass(module = "skyflow")]
struct Controller {
    inner: skyflow::Controller,
}

impl Controller {
    fn id(&self, flow: usize) -> PyResult<FlowId> {
        if flow < self.inner.flows().len() {
            Ok(FlowId(flow))
        } else {
            Err(PyKeyError::new_err(format!("no flow {flow}")))
        }
    }
}

#[pymethods]
impl Controller {
    #[new]
    fn new(scheme: u8, flows: Vec<(u8, u8, bool)>, da2gc_capacity: u64, sa2gc_capacity: u64) -> PyResult<Self> {
        let records = flows
            .into_iter()
            .enumerate()
            .map(|(i, (p, d, pinned))| FlowRecord::new(FlowId(i), p, d, pinned))
            .collect();
        Ok(Controller {
            inner: skyflow::Controller::new(parse_scheme(scheme)?, records, da2gc_capacity, sa2gc_capacity),
        })
    }

    fn handle_incoming(&mut self, flow: usize, rate: u64) -> PyResult<()> {
        let id = self.id(flow)?;
        if self.inner.flow(id).assignment != Assignment::Inactive {
            return Err(value_error(format!("flow {flow} is already active")));
        }
        self.inner.handle_incoming(id, rate);
        Ok(())
    }

    fn release(&mut self, flow: usize) -> PyResult<()> {
        let id = self.id(flow)?;
        self.inner.release(id);
        Ok(())
    }

    fn handle_rate_change(&mut self, flow: usize, rate: u64) -> PyResult<()> {
        let id = self.id(flow)?;
        self.inner.handle_rate_change(id, rate);
        Ok(())
    }

    fn handle_capacity_change(&mut self, link: &str, capacity: u64) -> PyResult<()> {
        self.inner.handle_capacity_change(parse_link(link)?, capacity);
        Ok(())
    }

    fn assignment(&self, flow: usize) -> PyResult<&'static str> {
        Ok(self.inner.flow(self.id(flow)?).assignment.name())
    }

    fn drop_count(&self, flow: usize) -> PyResult<u32> {
        Ok(self.inner.flow(self.id(flow)?).drop_count)
    }

    fn fsv(&self, flow: usize) -> PyResult<f64> {
        Ok(self.inner.fsv(self.id(flow)?))
    }

    /// Flows on `assignment`, highest FSV first.
    fn members(&self, assignment: &str) -> PyResult<Vec<usize>> {
        let a = parse_assignment(assignment)?;
        if a == Assignment::Inactive {
            return Ok((0..self.inner.flows().len())
                .filter(|&i| self.inner.flow(FlowId(i)).assignment == a)
                .collect());
        }
        Ok(self.inner.members(a).into_iter().map(|f| f.0).collect())
    }

    fn load(&self, link: &str) -> PyResult<u64> {
        Ok(self.inner.load(parse_link(link)?))
    }

    fn capacity(&self, link: &str) -> PyResult<u64> {
        Ok(self.inner.capacity(parse_link(link)?))
    }

    /// Moves since the last call as `(flow, from, to, action)`.
    fn take_moves(&mut self) -> Vec<(usize, &'static str, &'static str, &'static str)> {
        self.inner
            .take_moves()
            .into_iter()
            .map(|m| (m.flow.0, m.from.name(), m.to.name(), m.action()))
            .collect()
    }

    fn check_invariants(&self) -> PyResult<()> {
        self.inner.check_invariants().map_err(value_error)
    }
}

/// Distribution of the minimal cache hit rate over flights.
#[pyclass(module = "skyflow", frozen)]
struct HitRateCdf {
    inner: skyflow::HitRateCdf,
}

#[pymethods]
impl HitRateCdf {
    #[getter]
    fn scheme(&self) -> u8 {
        self.inner.scheme
    }

    #[getter]
    fn runs(&self) -> usize {
        self.inner.runs
    }

    #[getter]
    fn unsatisfiable(&self) -> usize {
        self.inner.unsatisfiable
    }

    /// `(hit_rate, fraction satisfied)` steps.
    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points.iter().map(|p| (p.hit_rate, p.fraction)).collect()
    }

    fn fraction_at(&self, hit_rate: f64) -> f64 {
        self.inner.fraction_at(hit_rate)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Simulates one flight.
#[pyfunction]
fn run(py: Python<'_>, scenario: Scenario) -> PyResult<QosReport> {
    let report = py.detach(|| skyflow::sim::run(&scenario.inner)).map_err(value_error)?;
    Ok(QosReport { inner: report })
}

/// Forwarding scheme value of a flow.
#[pyfunction]
#[pyo3(signature = (scheme, priority, delay_requirement, drop_count = 0))]
fn fsv(scheme: u8, priority: u8, delay_requirement: u8, drop_count: u32) -> PyResult<f64> {
    let s = parse_scheme(scheme)?;
    Ok(s.quarters(priority, delay_requirement, drop_count) as f64 / 4.0)
}

/// Seats per app (VoIP, Video, Web) for one travel class.
#[pyfunction]
fn largest_remainder(seats: u32, ratios: (f64, f64, f64)) -> (u32, u32, u32) {
    let [a, b, c] = traffic::largest_remainder(seats, [ratios.0, ratios.1, ratios.2]);
    (a, b, c)
}

/// Representative aircraft count for a spot.
#[pyfunction]
fn activity_count(link: &str, radius_km: u32, level: &str) -> PyResult<u32> {
    ActivityTable::default()
        .activity_count(parse_link(link)?, radius_km, parse_level(level)?)
        .map_err(value_error)
}

/// Capacity one aircraft receives in a spot shared by `aircraft` aircraft.
#[pyfunction]
#[pyo3(signature = (total_capacity_bps, aircraft, operators = 1))]
fn per_aircraft_capacity(total_capacity_bps: u64, aircraft: u32, operators: u32) -> u64 {
    let spot = Spot {
        link: LinkKind::Da2gc,
        radius_km: 0,
        activity: ActivityLevel::Low,
        aircraft_count: aircraft.max(1),
        total_capacity_bps,
    };
    link::per_aircraft_capacity(&spot, operators)
}

/// Smallest hit rate on the scenario's grid satisfying every flow, or
/// `None` if even a full cache does not.
#[pyfunction]
#[pyo3(signature = (scenario, seed = None, scheme = None))]
fn min_hit_rate(py: Python<'_>, scenario: Scenario, seed: Option<u64>, scheme: Option<u8>) -> PyResult<Option<f64>> {
    let s = &scenario.inner;
    let scheme = parse_scheme(scheme.unwrap_or(s.scheme))?;
    let r: MinHitRate = py
        .detach(|| cache::min_hit_rate(s, seed.unwrap_or(s.seed), scheme, s.grid_step))
        .map_err(value_error)?;
    Ok(r.rate())
}

/// Minimal hit rate distribution over `seeds` for one scheme.
#[pyfunction]
#[pyo3(signature = (scenario, seeds, scheme = None))]
fn hit_rate_cdf(py: Python<'_>, scenario: Scenario, seeds: Vec<u64>, scheme: Option<u8>) -> PyResult<HitRateCdf> {
    let s = &scenario.inner;
    let scheme = parse_scheme(scheme.unwrap_or(s.scheme))?;
    let inner = py.detach(|| cache::hit_rate_cdf(s, &seeds, scheme)).map_err(value_error)?;
    Ok(HitRateCdf { inner })
}

#[pymodule]
#[pyo3(name = "skyflow")]
fn skyflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<QosReport>()?;
    m.add_class::<Controller>()?;
    m.add_class::<HitRateCdf>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(fsv, m)?)?;
    m.add_function(wrap_pyfunction!(largest_remainder, m)?)?;
    m.add_function(wrap_pyfunction!(activity_count, m)?)?;
    m.add_function(wrap_pyfunction!(per_aircraft_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(min_hit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(hit_rate_cdf, m)?)?;
    Ok(())
}
