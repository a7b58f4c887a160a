use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::system::{IntervalBox, SystemData};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample {sample} has shape {found:?}, expected {expected:?}")]
    Shape {
        sample: usize,
        found: (usize, usize),
        expected: (usize, usize),
    },
    #[error("sample {sample}, period {period}, unit {unit}: {value} outside [{lower}, {upper}]")]
    OutsideBox {
        sample: usize,
        period: usize,
        unit: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("unknown REG unit id {0:?}")]
    UnknownUnit(String),
    #[error("scenario {scenario}: missing value for period {period}, unit {unit}")]
    Missing {
        scenario: String,
        period: usize,
        unit: String,
    },
    #[error("period {0} outside 1..=horizon")]
    Period(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Forecast-error samples `ŵ^s`, each `[period][reg_unit]`, all inside W.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet<S = f64> {
    samples: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> SampleSet<S> {
    /// Validates shape and membership in `w` (within `tol` per coordinate).
    pub fn new(samples: Vec<Vec<Vec<S>>>, w: &IntervalBox<S>, tol: S) -> Result<Self, SampleError> {
        if samples.is_empty() {
            return Err(SampleError::Empty);
        }
        let expected = (w.horizon(), w.dims());
        for (i, s) in samples.iter().enumerate() {
            let found = (s.len(), s.first().map_or(0, Vec::len));
            if found != expected || s.iter().any(|row| row.len() != expected.1) {
                return Err(SampleError::Shape {
                    sample: i,
                    found,
                    expected,
                });
            }
            for (t, row) in s.iter().enumerate() {
                for (r, v) in row.iter().enumerate() {
                    let (lo, hi) = (&w.lower[t][r], &w.upper[t][r]);
                    if *v < lo.clone() - tol.clone() || *v > hi.clone() + tol.clone() {
                        return Err(SampleError::OutsideBox {
                            sample: i,
                            period: t,
                            unit: r,
                            value: v.to_f64_lossy(),
                            lower: lo.to_f64_lossy(),
                            upper: hi.to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(SampleSet { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<Vec<S>>] {
        &self.samples
    }

    pub fn into_inner(self) -> Vec<Vec<Vec<S>>> {
        self.samples
    }

    /// First `n` samples and the rest.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let (a, b) = self.samples.split_at(n.min(self.samples.len()));
        (SampleSet { samples: a.to_vec() }, SampleSet { samples: b.to_vec() })
    }

    /// Mean over samples per coordinate.
    pub fn mean(&self) -> Vec<Vec<S>> {
        let n = S::from_count(self.samples.len());
        let mut m = self.samples[0].clone();
        for s in &self.samples[1..] {
            for (mt, st) in m.iter_mut().zip(s) {
                for (a, b) in mt.iter_mut().zip(st) {
                    *a = a.clone() + b.clone();
                }
            }
        }
        for row in &mut m {
            for v in row.iter_mut() {
                *v = v.clone() / n.clone();
            }
        }
        m
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    scenario_id: String,
    reg_unit_id: String,
    period: usize,
    error_mw: f64,
}

/// Reads samples in the long layout `scenario_id,reg_unit_id,period,error_mw`
/// with 1-based periods. Scenarios keep their order of first appearance.
pub fn read_samples_csv(system: &SystemData, path: impl AsRef<Path>) -> Result<Vec<Vec<Vec<f64>>>, SampleError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| SampleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_samples(system, file)
}

pub fn read_samples<R: std::io::Read>(system: &SystemData, reader: R) -> Result<Vec<Vec<Vec<f64>>>, SampleError> {
    let units: BTreeMap<&str, usize> = system
        .reg_units()
        .iter()
        .enumerate()
        .map(|(i, u)| (u.id.as_str(), i))
        .collect();
    let horizon = system.horizon();
    let mut order: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, Vec<Vec<Option<f64>>>> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for rec in rdr.deserialize() {
        let rec: Record = rec?;
        let r = *units
            .get(rec.reg_unit_id.as_str())
            .ok_or_else(|| SampleError::UnknownUnit(rec.reg_unit_id.clone()))?;
        if rec.period == 0 || rec.period > horizon {
            return Err(SampleError::Period(rec.period));
        }
        let entry = data.entry(rec.scenario_id.clone()).or_insert_with(|| {
            order.push(rec.scenario_id.clone());
            vec![vec![None; units.len()]; horizon]
        });
        entry[rec.period - 1][r] = Some(rec.error_mw);
    }
    order
        .into_iter()
        .map(|id| {
            let rows = data.remove(&id).expect("scenario recorded");
            rows.into_iter()
                .enumerate()
                .map(|(t, row)| {
                    row.into_iter()
                        .enumerate()
                        .map(|(r, v)| {
                            v.ok_or_else(|| SampleError::Missing {
                                scenario: id.clone(),
                                period: t + 1,
                                unit: system.reg_units()[r].id.clone(),
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn write_samples_csv(
    system: &SystemData,
    samples: &[Vec<Vec<f64>>],
    path: impl AsRef<Path>,
) -> Result<(), SampleError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| SampleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_samples(system, samples, file)
}

pub fn write_samples<W: std::io::Write>(
    system: &SystemData,
    samples: &[Vec<Vec<f64>>],
    writer: W,
) -> Result<(), SampleError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (s, sample) in samples.iter().enumerate() {
        for (t, row) in sample.iter().enumerate() {
            for (r, v) in row.iter().enumerate() {
                wtr.serialize(Record {
                    scenario_id: (s + 1).to_string(),
                    reg_unit_id: system.reg_units()[r].id.clone(),
                    period: t + 1,
                    error_mw: *v,
                })?;
            }
        }
    }
    wtr.flush().map_err(|source| SampleError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}
