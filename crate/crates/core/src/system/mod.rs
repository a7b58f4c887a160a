//! Power-system data: buses, generators, lines, renewable (REG) units and
//! loads, plus the forecast series and the physical uncertainty box.
//!
//! Per-unit quantities are indexed `[unit][period]`; quantities tied to the
//! forecast error (forecasts, error vectors, boxes) are indexed
//! `[period][reg_unit]`, matching the CSV layout of one row per period.

mod ptdf;
mod uncertainty;

pub use ptdf::{compute_ptdf, ShiftFactorMatrix};
pub use uncertainty::{uncertainty_box, IntervalBox};

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full forecast-error vector, `[period][reg_unit]`, in MW.
pub type ErrorVector = Vec<Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Alternative way of declaring the slack bus.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reference: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: BusId,
    /// $ per period while on.
    pub no_load_cost: f64,
    pub startup_cost: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    /// $ per MWh.
    pub marginal_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    pub min_up: usize,
    pub min_down: usize,
    #[serde(default)]
    pub initial_on: bool,
    #[serde(default)]
    pub initial_output: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegUnit {
    pub id: String,
    pub bus: BusId,
    pub capacity: f64,
    #[serde(default)]
    pub curtail_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    #[serde(default)]
    pub id: String,
    pub bus: BusId,
    pub demand: Vec<f64>,
    #[serde(default)]
    pub sheddable: bool,
    #[serde(default)]
    pub shed_cost: f64,
}

impl LoadSeries {
    /// Upper bound on shedding in period `t`; zero for non-sheddable loads.
    pub fn shed_limit(&self, t: usize) -> f64 {
        if self.sheddable {
            self.demand[t]
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// p.u.
    pub reactance: f64,
    /// MW.
    pub capacity: f64,
}

/// Raw, unvalidated contents of a system JSON file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    #[serde(default)]
    pub reg_units: Vec<RegUnit>,
    #[serde(default)]
    pub loads: Vec<LoadSeries>,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bus: Option<BusId>,
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed system file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{kind} {id}: {reason}")]
    Invalid {
        kind: &'static str,
        id: String,
        reason: String,
    },
    #[error("more than one reference bus declared: {0:?}")]
    MultipleReference(Vec<BusId>),
    #[error("network is not connected; bus {0} is unreachable from the reference bus")]
    Disconnected(BusId),
    #[error("susceptance matrix is singular")]
    SingularNetwork,
}

fn invalid(kind: &'static str, id: impl fmt::Display, reason: impl Into<String>) -> SystemError {
    SystemError::Invalid {
        kind,
        id: id.to_string(),
        reason: reason.into(),
    }
}

/// Validated power system. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemFile", into = "SystemFile")]
pub struct SystemData {
    description: Option<String>,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    lines: Vec<Line>,
    reg_units: Vec<RegUnit>,
    loads: Vec<LoadSeries>,
    horizon: usize,
    reference_bus: BusId,
    bus_index: HashMap<BusId, usize>,
}

impl SystemData {
    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }
    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
    pub fn reg_units(&self) -> &[RegUnit] {
        &self.reg_units
    }
    pub fn loads(&self) -> &[LoadSeries] {
        &self.loads
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn reference_bus(&self) -> BusId {
        self.reference_bus
    }
    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    /// Position of a bus in [`Self::buses`].
    ///
    /// Panics on an unknown id; every id stored in a validated system is known.
    pub fn bus_index(&self, id: BusId) -> usize {
        self.bus_index[&id]
    }

    pub fn reference_index(&self) -> usize {
        self.bus_index(self.reference_bus)
    }

    /// Largest generator marginal cost, used for the default shed price.
    pub fn max_marginal_cost(&self) -> f64 {
        self.generators
            .iter()
            .map(|g| g.marginal_cost)
            .fold(0.0, f64::max)
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.loads.iter().map(|l| l.demand[t]).sum()
    }

    /// Copy of this system with a different horizon, truncating all series.
    pub fn truncated(&self, horizon: usize) -> Result<SystemData, SystemError> {
        let mut file = SystemFile::from(self.clone());
        file.horizon = horizon;
        for l in &mut file.loads {
            l.demand.truncate(horizon);
        }
        SystemData::try_from(file)
    }
}

impl From<SystemData> for SystemFile {
    fn from(s: SystemData) -> Self {
        SystemFile {
            description: s.description,
            buses: s.buses,
            generators: s.generators,
            lines: s.lines,
            reg_units: s.reg_units,
            loads: s.loads,
            horizon: s.horizon,
            reference_bus: Some(s.reference_bus),
        }
    }
}

impl TryFrom<SystemFile> for SystemData {
    type Error = SystemError;

    fn try_from(file: SystemFile) -> Result<Self, Self::Error> {
        if file.buses.is_empty() {
            return Err(invalid("system", "buses", "at least one bus required"));
        }
        if file.horizon == 0 {
            return Err(invalid("system", "horizon", "horizon must be at least 1"));
        }
        let mut bus_index = HashMap::new();
        for (k, b) in file.buses.iter().enumerate() {
            if bus_index.insert(b.id, k).is_some() {
                return Err(invalid("bus", b.id, "duplicate bus id"));
            }
        }
        let known = |kind: &'static str, id: &str, bus: BusId| {
            if bus_index.contains_key(&bus) {
                Ok(())
            } else {
                Err(invalid(kind, id, format!("unknown bus {bus}")))
            }
        };

        let mut refs: Vec<BusId> = file.reference_bus.into_iter().collect();
        for b in file.buses.iter().filter(|b| b.reference) {
            if !refs.contains(&b.id) {
                refs.push(b.id);
            }
        }
        let reference_bus = match refs.len() {
            0 => BusId(1),
            1 => refs[0],
            _ => return Err(SystemError::MultipleReference(refs)),
        };
        if !bus_index.contains_key(&reference_bus) {
            return Err(invalid("system", "reference_bus", format!("unknown bus {reference_bus}")));
        }

        for g in &file.generators {
            known("generator", &g.id, g.bus)?;
            validate_generator(g)?;
        }
        for r in &file.reg_units {
            known("reg unit", &r.id, r.bus)?;
            if !(r.capacity >= 0.0) || !r.capacity.is_finite() {
                return Err(invalid("reg unit", &r.id, "capacity must be finite and >= 0"));
            }
            if !(r.curtail_cost >= 0.0) {
                return Err(invalid("reg unit", &r.id, "curtail_cost must be >= 0"));
            }
        }
        let mut reg_buses = HashSet::new();
        for r in &file.reg_units {
            if !reg_buses.insert(r.bus) {
                return Err(invalid("reg unit", &r.id, format!("bus {} already hosts a reg unit", r.bus)));
            }
        }
        for (k, l) in file.loads.iter().enumerate() {
            let id = if l.id.is_empty() { k.to_string() } else { l.id.clone() };
            known("load", &id, l.bus)?;
            if l.demand.len() < file.horizon {
                return Err(invalid(
                    "load",
                    &id,
                    format!("demand has {} periods, horizon is {}", l.demand.len(), file.horizon),
                ));
            }
            if l.demand.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
                return Err(invalid("load", &id, "demand must be finite and >= 0"));
            }
            if !(l.shed_cost >= 0.0) {
                return Err(invalid("load", &id, "shed_cost must be >= 0"));
            }
        }
        for l in &file.lines {
            known("line", &l.id, l.from_bus)?;
            known("line", &l.id, l.to_bus)?;
            if l.from_bus == l.to_bus {
                return Err(invalid("line", &l.id, "from_bus equals to_bus"));
            }
            if !(l.capacity > 0.0) {
                return Err(invalid("line", &l.id, "capacity must be > 0"));
            }
            if !(l.reactance > 0.0) || !l.reactance.is_finite() {
                return Err(invalid("line", &l.id, "reactance must be finite and > 0"));
            }
        }

        // Connectivity from the reference bus.
        let n = file.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &file.lines {
            let (a, b) = (bus_index[&l.from_bus], bus_index[&l.to_bus]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([bus_index[&reference_bus]]);
        seen[bus_index[&reference_bus]] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(SystemError::Disconnected(file.buses[k].id));
        }

        let mut loads = file.loads;
        for (k, l) in loads.iter_mut().enumerate() {
            if l.id.is_empty() {
                l.id = format!("L{}", k + 1);
            }
            l.demand.truncate(file.horizon);
        }

        Ok(SystemData {
            description: file.description,
            buses: file.buses,
            generators: file.generators,
            lines: file.lines,
            reg_units: file.reg_units,
            loads,
            horizon: file.horizon,
            reference_bus,
            bus_index,
        })
    }
}

fn validate_generator(g: &Generator) -> Result<(), SystemError> {
    let err = |reason: &str| Err(invalid("generator", &g.id, reason));
    let costs = [g.no_load_cost, g.startup_cost, g.shutdown_cost, g.marginal_cost];
    if costs.iter().any(|c| !c.is_finite()) {
        return err("costs must be finite");
    }
    if !(g.p_min >= 0.0) {
        return err("p_min must be >= 0");
    }
    if !(g.p_min <= g.p_max) || !g.p_max.is_finite() {
        return err("p_min must not exceed p_max");
    }
    let ramps = [g.ramp_up, g.ramp_down, g.startup_ramp, g.shutdown_ramp];
    if ramps.iter().any(|r| !(*r >= 0.0)) {
        return err("ramp limits must be >= 0");
    }
    if g.min_up < 1 || g.min_down < 1 {
        return err("min_up and min_down must be >= 1");
    }
    if g.initial_on {
        if g.initial_output < g.p_min || g.initial_output > g.p_max {
            return err("initial_output must lie in [p_min, p_max] when initially on");
        }
    } else if g.initial_output != 0.0 {
        return err("initial_output must be 0 when initially off");
    }
    Ok(())
}

/// Reads and validates a system JSON file.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemData, SystemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text)
}

pub fn parse_system(json: &str) -> Result<SystemData, SystemError> {
    let file: SystemFile = serde_json::from_str(json)?;
    SystemData::try_from(file)
}

/// REG forecast `w^f`, `[period][reg_unit]`, MW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    values: Vec<Vec<f64>>,
}

impl ForecastSeries {
    pub fn new(system: &SystemData, values: Vec<Vec<f64>>) -> Result<Self, SystemError> {
        if values.len() != system.horizon() {
            return Err(invalid(
                "forecast",
                "rows",
                format!("{} periods given, horizon is {}", values.len(), system.horizon()),
            ));
        }
        for (t, row) in values.iter().enumerate() {
            if row.len() != system.reg_units().len() {
                return Err(invalid(
                    "forecast",
                    format!("period {}", t + 1),
                    format!("{} columns, expected {}", row.len(), system.reg_units().len()),
                ));
            }
            for (r, (v, unit)) in row.iter().zip(system.reg_units()).enumerate() {
                if !(*v >= 0.0 && *v <= unit.capacity) {
                    return Err(invalid(
                        "forecast",
                        format!("period {} unit {}", t + 1, system.reg_units()[r].id),
                        format!("{v} outside [0, {}]", unit.capacity),
                    ));
                }
            }
        }
        Ok(ForecastSeries { values })
    }

    /// All-zero forecast (no renewable output expected).
    pub fn zeros(system: &SystemData) -> Self {
        ForecastSeries {
            values: vec![vec![0.0; system.reg_units().len()]; system.horizon()],
        }
    }

    pub fn period(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn truncated(&self, horizon: usize) -> Self {
        ForecastSeries {
            values: self.values[..horizon].to_vec(),
        }
    }
}

/// Reads a forecast CSV: header row of REG unit ids, one row per period.
pub fn read_forecast_csv(
    system: &SystemData,
    reader: impl std::io::Read,
) -> Result<ForecastSeries, SystemError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut column_of = Vec::with_capacity(system.reg_units().len());
    for unit in system.reg_units() {
        let col = header
            .iter()
            .position(|h| h == unit.id)
            .ok_or_else(|| invalid("forecast", &unit.id, "missing column for reg unit"))?;
        column_of.push(col);
    }
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = Vec::with_capacity(column_of.len());
        for &c in &column_of {
            let cell = rec.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| {
                invalid("forecast", format!("row {}", values.len() + 1), format!("bad number {cell:?}"))
            })?;
            row.push(v);
        }
        values.push(row);
    }
    ForecastSeries::new(system, values)
}

pub fn load_forecast(system: &SystemData, path: impl AsRef<Path>) -> Result<ForecastSeries, SystemError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SystemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_forecast_csv(system, file)
}

pub fn write_forecast_csv(
    system: &SystemData,
    forecast: &ForecastSeries,
    writer: impl std::io::Write,
) -> Result<(), SystemError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(system.reg_units().iter().map(|u| u.id.as_str()))?;
    for row in forecast.values() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|source| SystemError::Io {
        path: "<forecast>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn generator(id: &str, bus: u32, p_min: f64, p_max: f64, marginal: f64) -> Generator {
        Generator {
            id: id.into(),
            bus: BusId(bus),
            no_load_cost: 0.0,
            startup_cost: 0.0,
            shutdown_cost: 0.0,
            marginal_cost: marginal,
            p_min,
            p_max,
            ramp_up: p_max,
            ramp_down: p_max,
            startup_ramp: p_max,
            shutdown_ramp: p_max,
            min_up: 1,
            min_down: 1,
            initial_on: false,
            initial_output: 0.0,
        }
    }

    pub fn bus(id: u32) -> Bus {
        Bus {
            id: BusId(id),
            name: None,
            reference: false,
        }
    }

    /// One bus, one generator, one load, optionally one REG unit.
    pub fn single_bus(demand: Vec<f64>, reg_capacity: Option<f64>) -> SystemFile {
        let horizon = demand.len();
        SystemFile {
            description: None,
            buses: vec![bus(1)],
            generators: vec![generator("G1", 1, 0.0, 100.0, 10.0)],
            lines: vec![],
            reg_units: reg_capacity
                .map(|c| {
                    vec![RegUnit {
                        id: "PV1".into(),
                        bus: BusId(1),
                        capacity: c,
                        curtail_cost: 0.0,
                    }]
                })
                .unwrap_or_default(),
            loads: vec![LoadSeries {
                id: "L1".into(),
                bus: BusId(1),
                demand,
                sheddable: false,
                shed_cost: 0.0,
            }],
            horizon,
            reference_bus: Some(BusId(1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_bus_validates() {
        let s = SystemData::try_from(single_bus(vec![5.0, 6.0], Some(10.0))).unwrap();
        assert_eq!(s.horizon(), 2);
        assert_eq!(s.reference_bus(), BusId(1));
        assert_eq!(s.loads()[0].shed_limit(0), 0.0);
    }

    #[test]
    fn inverted_generator_limits_name_the_generator() {
        let mut f = single_bus(vec![5.0], None);
        f.generators[0].p_min = 50.0;
        f.generators[0].p_max = 20.0;
        let err = SystemData::try_from(f).unwrap_err();
        assert!(err.to_string().contains("G1"), "{err}");
    }

    #[test]
    fn two_reference_buses_rejected() {
        let mut f = single_bus(vec![5.0], None);
        f.buses.push(Bus {
            id: BusId(2),
            name: None,
            reference: true,
        });
        f.lines.push(Line {
            id: "1-2".into(),
            from_bus: BusId(1),
            to_bus: BusId(2),
            reactance: 0.1,
            capacity: 10.0,
        });
        assert!(matches!(
            SystemData::try_from(f),
            Err(SystemError::MultipleReference(_))
        ));
    }

    #[test]
    fn disconnected_network_rejected() {
        let mut f = single_bus(vec![5.0], None);
        f.buses.push(bus(2));
        assert!(matches!(
            SystemData::try_from(f),
            Err(SystemError::Disconnected(BusId(2)))
        ));
    }

    #[test]
    fn reference_defaults_to_bus_one() {
        let mut f = single_bus(vec![5.0], None);
        f.reference_bus = None;
        assert_eq!(SystemData::try_from(f).unwrap().reference_bus(), BusId(1));
    }

    #[test]
    fn initial_output_must_match_status() {
        let mut f = single_bus(vec![5.0], None);
        f.generators[0].initial_output = 3.0;
        assert!(SystemData::try_from(f.clone()).is_err());
        f.generators[0].initial_on = true;
        assert!(SystemData::try_from(f).is_ok());
    }

    #[test]
    fn forecast_csv_round_trip_and_bounds() {
        let s = SystemData::try_from(single_bus(vec![5.0, 6.0], Some(10.0))).unwrap();
        let csv = "PV1\n2.5\n10\n";
        let f = read_forecast_csv(&s, csv.as_bytes()).unwrap();
        assert_eq!(f.period(1), &[10.0]);
        let mut out = Vec::new();
        write_forecast_csv(&s, &f, &mut out).unwrap();
        assert_eq!(read_forecast_csv(&s, out.as_slice()).unwrap(), f);
        assert!(read_forecast_csv(&s, "PV1\n2\n11\n".as_bytes()).is_err());
    }

    #[test]
    fn system_json_round_trip() {
        let s = SystemData::try_from(single_bus(vec![5.0], Some(10.0))).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(parse_system(&json).unwrap(), s);
    }
}
