use serde::{Deserialize, Serialize};

use super::{ForecastSeries, SystemData};
use crate::scalar::Scalar;

/// Axis-aligned box over the forecast-error coordinates, `[period][reg_unit]`.
///
/// Used both for the physical uncertainty set W and for its subset Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox<S = f64> {
    pub lower: Vec<Vec<S>>,
    pub upper: Vec<Vec<S>>,
}

impl<S: Scalar> IntervalBox<S> {
    pub fn new(lower: Vec<Vec<S>>, upper: Vec<Vec<S>>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        IntervalBox { lower, upper }
    }

    /// Degenerate box `{point}`.
    pub fn point(point: &[Vec<S>]) -> Self {
        IntervalBox {
            lower: point.to_vec(),
            upper: point.to_vec(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.lower.len()
    }

    pub fn dims(&self) -> usize {
        self.lower.first().map_or(0, Vec::len)
    }

    pub fn width(&self, t: usize, r: usize) -> S {
        self.upper[t][r].clone() - self.lower[t][r].clone()
    }

    /// Coordinates of period `t` with a nonzero-width interval.
    pub fn effective_dims(&self, t: usize) -> Vec<usize> {
        (0..self.lower[t].len())
            .filter(|&r| self.upper[t][r] > self.lower[t][r])
            .collect()
    }

    pub fn contains(&self, w: &[Vec<S>], tol: S) -> bool {
        w.iter().enumerate().all(|(t, row)| {
            row.iter().enumerate().all(|(r, v)| {
                *v >= self.lower[t][r].clone() - tol.clone() && *v <= self.upper[t][r].clone() + tol.clone()
            })
        })
    }

    pub fn contains_box(&self, other: &IntervalBox<S>, tol: S) -> bool {
        self.contains(&other.lower, tol.clone()) && self.contains(&other.upper, tol)
    }

    pub fn is_well_formed(&self) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(lo, hi)| lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a <= b))
    }

    pub fn center(&self) -> Vec<Vec<S>> {
        let two = S::one() + S::one();
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| (a.clone() + b.clone()) / two.clone()).collect())
            .collect()
    }
}

impl IntervalBox<f64> {
    /// Clamp a vector into the box coordinate-wise.
    pub fn clamp(&self, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        w.iter()
            .enumerate()
            .map(|(t, row)| {
                row.iter()
                    .enumerate()
                    .map(|(r, v)| v.clamp(self.lower[t][r], self.upper[t][r]))
                    .collect()
            })
            .collect()
    }

    pub fn truncated(&self, horizon: usize) -> Self {
        IntervalBox {
            lower: self.lower[..horizon].to_vec(),
            upper: self.upper[..horizon].to_vec(),
        }
    }
}

/// Physical box of forecast errors: `[-w^f, W - w^f]` per coordinate.
pub fn uncertainty_box(system: &SystemData, forecast: &ForecastSeries) -> IntervalBox<f64> {
    let (lower, upper) = (0..system.horizon())
        .map(|t| {
            let f = forecast.period(t);
            system
                .reg_units()
                .iter()
                .zip(f)
                .map(|(unit, wf)| {
                    if unit.capacity == 0.0 {
                        (0.0, 0.0)
                    } else {
                        (-wf, unit.capacity - wf)
                    }
                })
                .unzip::<_, _, Vec<f64>, Vec<f64>>()
        })
        .unzip();
    IntervalBox { lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::single_bus;
    use crate::system::SystemData;
    use proptest::prelude::*;

    fn box_for(capacity: f64, forecast: f64) -> IntervalBox {
        let s = SystemData::try_from(single_bus(vec![1.0], Some(capacity))).unwrap();
        let f = ForecastSeries::new(&s, vec![vec![forecast]]).unwrap();
        uncertainty_box(&s, &f)
    }

    #[test]
    fn interior_forecast() {
        let b = box_for(100.0, 40.0);
        assert_eq!((b.lower[0][0], b.upper[0][0]), (-40.0, 60.0));
    }

    #[test]
    fn boundary_forecasts() {
        let b = box_for(100.0, 0.0);
        assert_eq!((b.lower[0][0], b.upper[0][0]), (0.0, 100.0));
        let b = box_for(100.0, 100.0);
        assert_eq!((b.lower[0][0], b.upper[0][0]), (-100.0, 0.0));
    }

    #[test]
    fn zero_capacity_is_degenerate() {
        let b = box_for(0.0, 0.0);
        assert_eq!((b.lower[0][0], b.upper[0][0]), (0.0, 0.0));
        assert!(b.effective_dims(0).is_empty());
    }

    proptest! {
        #[test]
        fn zero_error_always_inside(cap in 0.0f64..500.0, frac in 0.0f64..=1.0) {
            let b = box_for(cap, cap * frac);
            prop_assert!(b.lower[0][0] <= 0.0 && 0.0 <= b.upper[0][0]);
        }
    }
}
