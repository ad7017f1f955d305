//! Domain types shared by every module: the operating horizon, interval
//! count vectors and matrices, and per-interval intensity vectors.

use serde::{Deserialize, Serialize};

use crate::error::{config, shape, Result};

/// Operating day `[0, T]` split into `p` equal intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Length of the day in hours.
    pub t: f64,
    /// Number of intervals.
    pub p: usize,
}

impl Horizon {
    pub fn new(t: f64, p: usize) -> Result<Self> {
        let h = Horizon { t, p };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(config(format!("horizon length must be positive, got {}", self.t)));
        }
        if self.p == 0 {
            return Err(config("horizon must have at least one interval"));
        }
        Ok(())
    }

    pub fn interval_length(&self) -> f64 {
        self.t / self.p as f64
    }

    /// Left boundary of interval `j` (0-based); `boundary(p) == T`.
    pub fn boundary(&self, j: usize) -> f64 {
        if j >= self.p {
            self.t
        } else {
            self.t * j as f64 / self.p as f64
        }
    }

    /// 0-based interval holding `time` under the half-open convention
    /// `((j-1)Δ, jΔ]`. Time 0 belongs to the first interval.
    pub fn interval_of(&self, time: f64) -> usize {
        let dt = self.interval_length();
        let mut j = ((time / dt).ceil() as isize - 1).clamp(0, self.p as isize - 1) as usize;
        while j > 0 && time <= self.boundary(j) {
            j -= 1;
        }
        while j + 1 < self.p && time > self.boundary(j + 1) {
            j += 1;
        }
        j
    }
}

/// Arrival counts for one day, one entry per interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector(pub Vec<u64>);

impl CountVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl From<Vec<u64>> for CountVector {
    fn from(v: Vec<u64>) -> Self {
        CountVector(v)
    }
}

/// Expected counts per interval: one realization of the random intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityVector(pub Vec<f64>);

impl IntensityVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `n` days of interval counts over a common horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    horizon: Horizon,
    rows: Vec<CountVector>,
}

impl CountMatrix {
    pub fn new(horizon: Horizon, rows: Vec<CountVector>) -> Result<Self> {
        horizon.validate()?;
        if rows.is_empty() {
            return Err(shape("count matrix needs at least one day"));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != horizon.p) {
            return Err(shape(format!(
                "day {i} has {} intervals, expected {}",
                r.len(),
                horizon.p
            )));
        }
        Ok(CountMatrix { horizon, rows })
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn n_days(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.horizon.p
    }

    pub fn rows(&self) -> &[CountVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &CountVector {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<CountVector> {
        self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.0[j] as f64).collect()
    }

    /// Subset of days, in the order given.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        CountMatrix::new(self.horizon, idx.iter().map(|&i| self.rows[i].clone()).collect())
    }
}

/// Sorted arrival times within one day.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochList(pub Vec<f64>);

impl EpochList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    /// Per-interval counts of the epochs.
    pub fn bin(&self, horizon: &Horizon) -> CountVector {
        let mut counts = vec![0u64; horizon.p];
        for &t in &self.0 {
            counts[horizon.interval_of(t)] += 1;
        }
        CountVector(counts)
    }
}
