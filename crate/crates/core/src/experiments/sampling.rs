use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::system::{ErrorVector, ForecastSeries, IntervalBox};
use crate::wasserstein::{SampleError, SampleSet};

/// Stream ids for the two uses of a run seed.
pub const TRAINING_STREAM: u64 = 0;
pub const EVALUATION_STREAM: u64 = 1;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw of `N(0, σ²)` restricted to `[lo, hi]` by inverting the CDF on
/// the matching probability interval.
pub(crate) fn truncated_normal<R: Rng>(rng: &mut R, sigma: f64, lo: f64, hi: f64) -> f64 {
    if sigma <= 0.0 || hi <= lo {
        return 0.0f64.clamp(lo, hi);
    }
    let n = Normal::new(0.0, sigma).expect("positive sigma");
    let (p_lo, p_hi) = (n.cdf(lo), n.cdf(hi));
    if p_hi - p_lo <= f64::EPSILON {
        // The box lies far in one tail; its nearest end is the limit draw.
        return if hi <= 0.0 { hi } else { lo };
    }
    let u = rng.gen_range(p_lo..p_hi);
    n.inverse_cdf(u).clamp(lo, hi)
}

fn normal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let n = Normal::new(0.0, sigma).expect("positive sigma");
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return n.inverse_cdf(u);
        }
    }
}

/// Independent `N(0, (ratio · forecast)²)` errors per REG unit and period,
/// each truncated to `bounds`. Deterministic in `seed`.
pub fn generate_samples(
    forecast: &ForecastSeries,
    sigma_ratio: f64,
    count: usize,
    seed: u64,
    bounds: &IntervalBox<f64>,
) -> Result<SampleSet, SampleError> {
    assert!(sigma_ratio >= 0.0, "sigma ratio must be non-negative");
    let mut rng = rng_for(seed, TRAINING_STREAM);
    let values = forecast.values();
    let samples: Vec<ErrorVector> = (0..count)
        .map(|_| {
            values
                .iter()
                .enumerate()
                .map(|(t, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(r, f)| truncated_normal(&mut rng, sigma_ratio * f, bounds.lower[t][r], bounds.upper[t][r]))
                        .collect()
                })
                .collect()
        })
        .collect();
    SampleSet::new(samples, bounds, 1e-9)
}

/// Untruncated draws from the same normal model, on a separate stream so
/// that evaluation scenarios never coincide with training samples.
pub fn generate_scenarios(forecast: &ForecastSeries, sigma_ratio: f64, count: usize, seed: u64) -> Vec<ErrorVector> {
    let mut rng = rng_for(seed, EVALUATION_STREAM);
    let values = forecast.values();
    (0..count)
        .map(|_| {
            values
                .iter()
                .map(|row| row.iter().map(|f| normal(&mut rng, sigma_ratio * f)).collect())
                .collect()
        })
        .collect()
}
