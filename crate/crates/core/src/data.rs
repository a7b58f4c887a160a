//! Bundled test data.
//!
//! The 6-bus system takes its generator, branch and load data from the
//! Illinois Institute of Technology 6-bus dataset. Loads sit at buses 3, 4
//! and 5 with 20/40/40 shares of the system profile; one PV unit is added
//! at bus 5 with a clear-sky shaped forecast. All loads are sheddable at
//! 100 times the largest marginal generation cost; curtailment is free.

use crate::instance::UcInstance;
use crate::system::{parse_system, read_forecast_csv};

pub const SIX_BUS_JSON: &str = include_str!("../data/six_bus.json");
pub const SIX_BUS_FORECAST_CSV: &str = include_str!("../data/six_bus_forecast.csv");

/// The bundled 6-bus, 24-period instance.
pub fn six_bus() -> UcInstance {
    let system = parse_system(SIX_BUS_JSON).expect("bundled 6-bus system is valid");
    let forecast = read_forecast_csv(&system, SIX_BUS_FORECAST_CSV.as_bytes()).expect("bundled forecast is valid");
    UcInstance::new(system, forecast).expect("bundled instance is consistent")
}
