use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{SystemData, SystemError};

/// DC power transfer distribution factors with respect to the reference bus.
///
/// `factor(bus, line)` is the flow on `line` (positive from `from_bus` to
/// `to_bus`) caused by injecting 1 MW at `bus` and withdrawing it at the
/// reference bus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftFactorMatrix {
    /// `[line][bus]`
    factors: Vec<Vec<f64>>,
}

impl ShiftFactorMatrix {
    pub fn factor(&self, bus: usize, line: usize) -> f64 {
        self.factors[line][bus]
    }

    pub fn line_row(&self, line: usize) -> &[f64] {
        &self.factors[line]
    }

    pub fn num_lines(&self) -> usize {
        self.factors.len()
    }

    /// Line flows for a nodal injection vector (indexed by bus position).
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        self.factors
            .iter()
            .map(|row| row.iter().zip(injection).map(|(f, p)| f * p).sum())
            .collect()
    }
}

pub fn compute_ptdf(system: &SystemData) -> Result<ShiftFactorMatrix, SystemError> {
    let n = system.buses().len();
    let reference = system.reference_index();
    let lines = system.lines();
    if n == 1 {
        return Ok(ShiftFactorMatrix {
            factors: vec![vec![0.0]; lines.len()],
        });
    }

    // Reduced susceptance matrix without the reference row and column.
    let reduced = |k: usize| if k < reference { Some(k) } else if k > reference { Some(k - 1) } else { None };
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for line in lines {
        let y = 1.0 / line.reactance;
        let (i, j) = (system.bus_index(line.from_bus), system.bus_index(line.to_bus));
        if let Some(ri) = reduced(i) {
            b[(ri, ri)] += y;
        }
        if let Some(rj) = reduced(j) {
            b[(rj, rj)] += y;
        }
        if let (Some(ri), Some(rj)) = (reduced(i), reduced(j)) {
            b[(ri, rj)] -= y;
            b[(rj, ri)] -= y;
        }
    }
    let x = b.try_inverse().ok_or(SystemError::SingularNetwork)?;
    let angle = |bus: usize, inj: usize| match (reduced(bus), reduced(inj)) {
        (Some(a), Some(c)) => x[(a, c)],
        _ => 0.0,
    };

    let factors = lines
        .iter()
        .map(|line| {
            let (f, t) = (system.bus_index(line.from_bus), system.bus_index(line.to_bus));
            (0..n)
                .map(|bus| (angle(f, bus) - angle(t, bus)) / line.reactance)
                .collect()
        })
        .collect();
    Ok(ShiftFactorMatrix { factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::bus;
    use crate::system::{BusId, Line, SystemFile};

    fn line(id: &str, from: u32, to: u32, x: f64) -> Line {
        Line {
            id: id.into(),
            from_bus: BusId(from),
            to_bus: BusId(to),
            reactance: x,
            capacity: 100.0,
        }
    }

    fn network(n: u32, lines: Vec<Line>, reference: u32) -> SystemData {
        SystemData::try_from(SystemFile {
            buses: (1..=n).map(bus).collect(),
            lines,
            horizon: 1,
            reference_bus: Some(BusId(reference)),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn two_bus_single_path() {
        let s = network(2, vec![line("a", 1, 2, 0.1)], 1);
        let m = compute_ptdf(&s).unwrap();
        // Injection at bus 2 flows back to bus 1, against the line orientation.
        assert!((m.factor(1, 0) + 1.0).abs() < 1e-12);
        assert_eq!(m.factor(0, 0), 0.0);
    }

    #[test]
    fn triangle_splits_two_thirds_one_third() {
        // Hand solution: injecting 1 MW at bus 2 with equal reactances, the
        // direct path 2->1 carries 2/3 and the path 2->3->1 carries 1/3.
        let s = network(
            3,
            vec![line("12", 1, 2, 0.2), line("23", 2, 3, 0.2), line("13", 1, 3, 0.2)],
            1,
        );
        let m = compute_ptdf(&s).unwrap();
        assert!((m.factor(1, 0) - (-2.0 / 3.0)).abs() < 1e-12);
        assert!((m.factor(1, 1) - (1.0 / 3.0)).abs() < 1e-12);
        assert!((m.factor(1, 2) - (-1.0 / 3.0)).abs() < 1e-12);
        for l in 0..3 {
            assert_eq!(m.factor(0, l), 0.0);
        }
    }

    #[test]
    fn reference_row_is_zero_for_any_reference() {
        let s = network(
            4,
            vec![line("12", 1, 2, 0.1), line("23", 2, 3, 0.3), line("34", 3, 4, 0.2), line("41", 4, 1, 0.5)],
            3,
        );
        let m = compute_ptdf(&s).unwrap();
        for l in 0..4 {
            assert_eq!(m.factor(2, l), 0.0);
        }
    }
}
