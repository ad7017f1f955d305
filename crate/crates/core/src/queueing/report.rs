use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::stats::{mean, quantile_type7, variance};
use crate::types::{EpochList, Horizon};

const Z_975: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    /// Number in system at checkpoints.
    Occupancy,
    /// Average waiting time per arrival interval.
    Waiting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Variance,
    Q80,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Mean => "mean",
            Statistic::Variance => "variance",
            Statistic::Q80 => "q80",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub index: usize,
    pub statistic: Statistic,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ReportRow {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueReport {
    pub kind: ReportKind,
    pub rows: Vec<ReportRow>,
}

impl QueueReport {
    pub fn get(&self, index: usize, statistic: Statistic) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.index == index && r.statistic == statistic)
    }

    /// CSV with columns `index,statistic,value,ci_lo,ci_hi`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "statistic", "value", "ci_lo", "ci_hi"])?;
        for r in &self.rows {
            out.write_record([
                r.index.to_string(),
                r.statistic.to_string(),
                r.value.to_string(),
                r.ci_lo.to_string(),
                r.ci_hi.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Mean waiting time of the customers arriving in each interval; `NaN`
/// where nobody arrived.
pub fn interval_average_waits(epochs: &EpochList, waits: &[f64], horizon: &Horizon) -> Vec<f64> {
    let mut sums = vec![0.0; horizon.p];
    let mut counts = vec![0usize; horizon.p];
    for (&t, &w) in epochs.times().iter().zip(waits) {
        let j = horizon.interval_of(t);
        sums[j] += w;
        counts[j] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect()
}

/// `runs[r][k][i]`: value at index `i` (checkpoint or interval) in
/// replication `k` of macro-replication `r`. `NaN` marks a missing value.
///
/// Within each macro-replication the mean, variance and 80% quantile over
/// replications are computed per index; the report gives their average
/// over macro-replications with a normal 95% interval.
pub fn summarize_runs(runs: &[Vec<Vec<f64>>], kind: ReportKind) -> Result<QueueReport> {
    if runs.len() < 2 {
        return Err(domain("need at least two macro-replications"));
    }
    if runs.iter().any(|r| r.is_empty()) {
        return Err(domain("every macro-replication needs at least one replication"));
    }
    let width = runs[0][0].len();
    if runs.iter().flatten().any(|rep| rep.len() != width) {
        return Err(domain("replications disagree on the number of indices"));
    }
    let mut rows = Vec::with_capacity(3 * width);
    for i in 0..width {
        let per_macro: Vec<[f64; 3]> = runs
            .iter()
            .map(|reps| {
                let xs: Vec<f64> = reps.iter().map(|r| r[i]).filter(|v| !v.is_nan()).collect();
                if xs.is_empty() {
                    return [f64::NAN; 3];
                }
                let var = if xs.len() > 1 { variance(&xs) } else { f64::NAN };
                [mean(&xs), var, quantile_type7(&xs, 0.8)]
            })
            .collect();
        for (s, stat) in [Statistic::Mean, Statistic::Variance, Statistic::Q80].into_iter().enumerate() {
            let vals: Vec<f64> = per_macro.iter().map(|v| v[s]).filter(|v| !v.is_nan()).collect();
            let (value, half) = match vals.len() {
                0 => (f64::NAN, f64::NAN),
                1 => (vals[0], f64::NAN),
                m => (mean(&vals), Z_975 * variance(&vals).max(0.0).sqrt() / (m as f64).sqrt()),
            };
            rows.push(ReportRow {
                index: i,
                statistic: stat,
                value,
                ci_lo: value - half,
                ci_hi: value + half,
            });
        }
    }
    Ok(QueueReport { kind, rows })
}
