//! Constructive check that the coverage bound of Ω is tight: one sample
//! closest to the boundary of the widened hull moves onto it, carrying
//! mass `min{1, S/β}/S`, at transport cost exactly ε.

use serde::{Deserialize, Serialize};

use super::distance::{l1, DiscreteDistribution};
use super::widening_factor;
use crate::scalar::Scalar;
use crate::system::IntervalBox;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness<S = f64> {
    pub distribution: DiscreteDistribution<S>,
    /// Cost of the explicit transport plan (moved mass times distance).
    pub transport_cost: S,
    /// Probability outside the open widened hull `(w̲^a, w̄^a)`.
    pub mass_outside: S,
    /// `(period, reg_unit, sample, upward)` of the moved coordinate.
    pub moved: (usize, usize, usize, bool),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessSkip {
    /// With ε = 0 the extreme samples already sit on the boundary.
    ZeroRadius,
    /// Every boundary of the widened hull lies outside W.
    Clipped,
}

impl std::fmt::Display for WitnessSkip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WitnessSkip::ZeroRadius => write!(f, "radius is zero; boundary coincides with the samples"),
            WitnessSkip::Clipped => write!(f, "every widened boundary is clipped by the physical box"),
        }
    }
}

pub fn tightness_witness<S: Scalar>(
    samples: &[Vec<Vec<S>>],
    epsilon: &S,
    beta: &S,
    w: &IntervalBox<S>,
) -> Result<Witness<S>, WitnessSkip> {
    if *epsilon <= S::zero() {
        return Err(WitnessSkip::ZeroRadius);
    }
    let count = S::from_count(samples.len());
    let reach = epsilon.clone() * widening_factor(samples.len(), beta);
    let (horizon, dims) = (w.horizon(), w.dims());

    let extreme = |t: usize, r: usize, upward: bool| -> (usize, S) {
        let mut best = (0, samples[0][t][r].clone());
        for (s, x) in samples.iter().enumerate().skip(1) {
            let v = x[t][r].clone();
            if (upward && v > best.1) || (!upward && v < best.1) {
                best = (s, v);
            }
        }
        best
    };

    let mut choice = None;
    'search: for t in 0..horizon {
        for r in 0..dims {
            for upward in [true, false] {
                let (s, v) = extreme(t, r, upward);
                let target = if upward { v + reach.clone() } else { v - reach.clone() };
                let reachable = if upward {
                    target <= w.upper[t][r]
                } else {
                    target >= w.lower[t][r]
                };
                if reachable {
                    choice = Some((t, r, s, upward, target));
                    break 'search;
                }
            }
        }
    }
    let (t, r, s, upward, target) = choice.ok_or(WitnessSkip::Clipped)?;

    let alpha = S::min_of(S::one(), count.clone() / beta.clone());
    let share = S::one() / count.clone();
    let mut atoms: Vec<Vec<S>> = Vec::new();
    let mut probs: Vec<S> = Vec::new();
    for (k, x) in samples.iter().enumerate() {
        let flat: Vec<S> = x.iter().flatten().cloned().collect();
        if k == s {
            let mut moved = x.clone();
            moved[t][r] = target.clone();
            let keep = share.clone() * (S::one() - alpha.clone());
            if keep > S::zero() {
                atoms.push(flat.clone());
                probs.push(keep);
            }
            atoms.push(moved.into_iter().flatten().collect());
            probs.push(share.clone() * alpha.clone());
        } else {
            atoms.push(flat);
            probs.push(share.clone());
        }
    }

    let origin: Vec<S> = samples[s].iter().flatten().cloned().collect();
    let mut destination = samples[s].clone();
    destination[t][r] = target;
    let destination: Vec<S> = destination.into_iter().flatten().collect();
    let transport_cost = share * alpha * l1(&origin, &destination);

    // Widened hull bounds, flattened.
    let mut lo_a = Vec::with_capacity(horizon * dims);
    let mut hi_a = Vec::with_capacity(horizon * dims);
    for tt in 0..horizon {
        for rr in 0..dims {
            lo_a.push(extreme(tt, rr, false).1 - reach.clone());
            hi_a.push(extreme(tt, rr, true).1 + reach.clone());
        }
    }
    let mass_outside = atoms
        .iter()
        .zip(&probs)
        .filter(|(a, _)| a.iter().enumerate().any(|(k, v)| *v <= lo_a[k] || *v >= hi_a[k]))
        .fold(S::zero(), |acc, (_, p)| acc + p.clone());

    Ok(Witness {
        distribution: DiscreteDistribution { atoms, probs },
        transport_cost,
        mass_outside,
        moved: (t, r, s, upward),
    })
}
