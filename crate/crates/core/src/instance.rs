use crate::system::{
    compute_ptdf, uncertainty_box, ForecastSeries, IntervalBox, ShiftFactorMatrix, SystemData, SystemError,
};

/// A system together with its forecast and the derived network data that
/// every model needs: shift factors and the physical error box W.
#[derive(Clone, Debug)]
pub struct UcInstance {
    pub system: SystemData,
    pub forecast: ForecastSeries,
    pub ptdf: ShiftFactorMatrix,
    pub w_box: IntervalBox<f64>,
}

impl UcInstance {
    pub fn new(system: SystemData, forecast: ForecastSeries) -> Result<Self, SystemError> {
        if forecast.horizon() != system.horizon() {
            return Err(SystemError::Invalid {
                kind: "forecast",
                id: "rows".into(),
                reason: format!(
                    "{} periods given, horizon is {}",
                    forecast.horizon(),
                    system.horizon()
                ),
            });
        }
        let ptdf = compute_ptdf(&system)?;
        let w_box = uncertainty_box(&system, &forecast);
        Ok(UcInstance {
            system,
            forecast,
            ptdf,
            w_box,
        })
    }

    pub fn horizon(&self) -> usize {
        self.system.horizon()
    }

    pub fn num_gens(&self) -> usize {
        self.system.generators().len()
    }

    pub fn num_loads(&self) -> usize {
        self.system.loads().len()
    }

    pub fn num_regs(&self) -> usize {
        self.system.reg_units().len()
    }

    pub fn num_lines(&self) -> usize {
        self.system.lines().len()
    }

    /// Shift factor of the bus hosting generator `g` on line `l`.
    pub fn gen_factor(&self, g: usize, l: usize) -> f64 {
        self.ptdf
            .factor(self.system.bus_index(self.system.generators()[g].bus), l)
    }

    pub fn load_factor(&self, k: usize, l: usize) -> f64 {
        self.ptdf.factor(self.system.bus_index(self.system.loads()[k].bus), l)
    }

    pub fn reg_factor(&self, r: usize, l: usize) -> f64 {
        self.ptdf
            .factor(self.system.bus_index(self.system.reg_units()[r].bus), l)
    }

    /// Zero error vector, `[period][reg_unit]`.
    pub fn zero_error(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.num_regs()]; self.horizon()]
    }

    /// The same instance restricted to the first `horizon` periods.
    pub fn truncated(&self, horizon: usize) -> Result<Self, SystemError> {
        UcInstance::new(self.system.truncated(horizon)?, self.forecast.truncated(horizon))
    }
}
