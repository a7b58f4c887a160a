//! Small randomised instances for property tests and quick experiments.
//!
//! Every generated instance sheds all load at a high price and lets all
//! renewable output be curtailed, so the all-zero dispatch is always
//! feasible and the fully adaptive models always have a solution. The affine
//! model is only guaranteed one with a single REG unit: its curtailment
//! follows the total error, which can overrun a unit's own output when
//! several units deviate in opposite directions.

use rand::Rng;

use crate::instance::UcInstance;
use crate::system::{Bus, BusId, ForecastSeries, Generator, Line, LoadSeries, RegUnit, SystemData, SystemFile};

/// Shape of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticShape {
    pub buses: usize,
    pub horizon: usize,
    /// REG units, placed on distinct buses (at most `buses`).
    pub reg_units: usize,
}

fn generator(id: String, bus: u32, p_max: f64, marginal: f64) -> Generator {
    Generator {
        id,
        bus: BusId(bus),
        no_load_cost: 0.0,
        startup_cost: 0.0,
        shutdown_cost: 0.0,
        marginal_cost: marginal,
        p_min: 0.0,
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

/// Random radial network with one generator and one sheddable load per bus.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, shape: SyntheticShape) -> UcInstance {
    let n = shape.buses.max(1);
    let horizon = shape.horizon.max(1);
    let buses: Vec<Bus> = (1..=n as u32)
        .map(|id| Bus {
            id: BusId(id),
            name: None,
            reference: false,
        })
        .collect();
    let mut generators = Vec::new();
    let mut loads = Vec::new();
    for b in 1..=n as u32 {
        let p_max = rng.gen_range(20.0..80.0);
        let mut g = generator(format!("G{b}"), b, p_max, rng.gen_range(5.0..40.0));
        g.p_min = (p_max * rng.gen_range(0.0..0.4_f64)).floor();
        g.no_load_cost = rng.gen_range(0.0..100.0_f64).round();
        g.startup_cost = rng.gen_range(0.0..200.0_f64).round();
        let ramp = (p_max * rng.gen_range(0.3..1.0_f64)).max(g.p_min);
        g.ramp_up = ramp;
        g.ramp_down = ramp;
        g.startup_ramp = ramp;
        g.shutdown_ramp = ramp;
        g.min_up = rng.gen_range(1..=2);
        g.min_down = rng.gen_range(1..=2);
        generators.push(g);
        loads.push(LoadSeries {
            id: format!("L{b}"),
            bus: BusId(b),
            demand: (0..horizon).map(|_| rng.gen_range(5.0..50.0_f64).round()).collect(),
            sheddable: true,
            shed_cost: 1000.0,
        });
    }
    let lines: Vec<Line> = (2..=n as u32)
        .map(|b| Line {
            id: format!("L{}-{b}", b - 1),
            from_bus: BusId(b - 1),
            to_bus: BusId(b),
            reactance: rng.gen_range(0.05..0.3),
            capacity: rng.gen_range(10.0..60.0_f64).round(),
        })
        .collect();
    let regs = shape.reg_units.min(n);
    let reg_units: Vec<RegUnit> = (1..=regs as u32)
        .map(|b| RegUnit {
            id: format!("PV{b}"),
            bus: BusId(b),
            capacity: rng.gen_range(10.0..40.0_f64).round(),
            curtail_cost: rng.gen_range(0.0..5.0_f64).round(),
        })
        .collect();
    let forecast: Vec<Vec<f64>> = (0..horizon)
        .map(|_| reg_units.iter().map(|u| (u.capacity * rng.gen_range(0.2..0.8)).round()).collect())
        .collect();
    let file = SystemFile {
        description: Some("synthetic".into()),
        buses,
        generators,
        lines,
        reg_units,
        loads,
        horizon,
        reference_bus: Some(BusId(1)),
    };
    let system = SystemData::try_from(file).expect("synthetic system is valid");
    let forecast = ForecastSeries::new(&system, forecast).expect("forecast within capacity");
    UcInstance::new(system, forecast).expect("synthetic instance is consistent")
}
