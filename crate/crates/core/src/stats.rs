//! Summary statistics, outlier cleaning, train/test splitting and
//! macro-replication confidence bands.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::par;
use crate::rng::RngStream;
use crate::types::CountMatrix;

const Z_975: f64 = 1.96;

/// Marginal moments per interval and the past–future correlation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub marginal_mean: Vec<f64>,
    pub marginal_variance: Vec<f64>,
    /// Entry `j-1` is `Corr(Σ_{i≤j} X_i, Σ_{i>j} X_i)` for `j = 1..p-1`.
    pub past_future_corr: Vec<f64>,
    /// Set where an aggregate had zero variance and the correlation was
    /// reported as 0.
    pub corr_degenerate: Vec<bool>,
}

/// Type-7 (linear interpolation) sample quantile.
pub fn quantile_type7(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let n = v.len();
    assert!(n > 0, "quantile of empty sample");
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn summarize(data: &CountMatrix) -> Result<SummaryStats> {
    let n = data.n_days();
    let p = data.p();
    if n < 2 {
        return Err(domain("summary statistics need at least two days"));
    }
    let cols: Vec<Vec<f64>> = (0..p).map(|j| data.column(j)).collect();
    let marginal_mean = cols.iter().map(|c| mean(c)).collect();
    let marginal_variance = cols.iter().map(|c| variance(c)).collect();

    let totals: Vec<f64> = data.rows().iter().map(|r| r.total() as f64).collect();
    let mut past = vec![0.0; n];
    let mut past_future_corr = Vec::with_capacity(p.saturating_sub(1));
    let mut corr_degenerate = Vec::with_capacity(p.saturating_sub(1));
    for col in cols.iter().take(p.saturating_sub(1)) {
        for (acc, x) in past.iter_mut().zip(col) {
            *acc += x;
        }
        let future: Vec<f64> = totals.iter().zip(&past).map(|(t, a)| t - a).collect();
        match pearson(&past, &future) {
            Some(c) => {
                past_future_corr.push(c);
                corr_degenerate.push(false);
            }
            None => {
                past_future_corr.push(0.0);
                corr_degenerate.push(true);
            }
        }
    }
    Ok(SummaryStats {
        marginal_mean,
        marginal_variance,
        past_future_corr,
        corr_degenerate,
    })
}

/// Drops every day with a count outside the per-interval
/// `[lower, upper]` percentile band computed on the full data.
pub fn clean_outliers(data: &CountMatrix, lower: f64, upper: f64) -> Result<(CountMatrix, Vec<usize>)> {
    if data.n_days() < 10 {
        return Err(domain("outlier cleaning needs at least 10 days"));
    }
    let bands: Vec<(f64, f64)> = (0..data.p())
        .map(|j| {
            let mut col = data.column(j);
            col.sort_by(f64::total_cmp);
            (quantile_sorted(&col, lower), quantile_sorted(&col, upper))
        })
        .collect();
    let (mut keep, mut removed) = (Vec::new(), Vec::new());
    for (i, row) in data.rows().iter().enumerate() {
        let outlier = row
            .0
            .iter()
            .zip(&bands)
            .any(|(&x, &(lo, hi))| (x as f64) < lo || (x as f64) > hi);
        if outlier {
            removed.push(i);
        } else {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(domain("outlier cleaning removed every day"));
    }
    Ok((data.select(&keep)?, removed))
}

/// Uniform random partition with `⌈a·n/(a+b)⌉` training days for ratio
/// `a:b`. Each part keeps the original day order.
pub fn split(data: &CountMatrix, ratio: (u32, u32), stream: &mut RngStream) -> Result<(CountMatrix, CountMatrix)> {
    let n = data.n_days();
    if n < 3 {
        return Err(domain("splitting needs at least three days"));
    }
    let (a, b) = (ratio.0 as usize, ratio.1 as usize);
    if a == 0 || b == 0 {
        return Err(domain("split ratio parts must be positive"));
    }
    let n_train = (a * n).div_ceil(a + b).min(n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(stream);
    let (train, test) = idx.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select(train)?, data.select(test)?))
}

/// Normal-approximation and percentile bands for one statistic vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub pct_lo: Vec<f64>,
    pub pct_hi: Vec<f64>,
}

impl Band {
    /// `reps[r][k]`: statistic `k` in macro-replication `r`.
    pub fn from_replications(reps: &[Vec<f64>]) -> Band {
        let m = reps.len() as f64;
        let k = reps[0].len();
        let mut band = Band {
            mean: Vec::with_capacity(k),
            ci_lo: Vec::with_capacity(k),
            ci_hi: Vec::with_capacity(k),
            pct_lo: Vec::with_capacity(k),
            pct_hi: Vec::with_capacity(k),
        };
        for j in 0..k {
            let mut xs: Vec<f64> = reps.iter().map(|r| r[j]).collect();
            let mu = mean(&xs);
            let half = Z_975 * variance(&xs).max(0.0).sqrt() / m.sqrt();
            xs.sort_by(f64::total_cmp);
            band.mean.push(mu);
            band.ci_lo.push(mu - half);
            band.ci_hi.push(mu + half);
            band.pct_lo.push(quantile_sorted(&xs, 0.025));
            band.pct_hi.push(quantile_sorted(&xs, 0.975));
        }
        band
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiBands {
    pub marginal_mean: Band,
    pub marginal_variance: Band,
    pub past_future_corr: Band,
}

/// Calls `generate(rep, n_per_rep)` for each macro-replication and bands
/// the resulting summary statistics.
pub fn ci_bands<G>(generate: G, n_per_rep: usize, macro_reps: usize) -> Result<CiBands>
where
    G: Fn(usize, usize) -> Result<CountMatrix> + Sync + Send,
{
    if macro_reps < 2 {
        return Err(domain("confidence bands need at least two macro-replications"));
    }
    let summaries = par::map_indexed(macro_reps, |r| summarize(&generate(r, n_per_rep)?))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&SummaryStats) -> &Vec<f64>| -> Vec<Vec<f64>> { summaries.iter().map(|s| f(s).clone()).collect() };
    Ok(CiBands {
        marginal_mean: Band::from_replications(&pick(|s| &s.marginal_mean)),
        marginal_variance: Band::from_replications(&pick(|s| &s.marginal_variance)),
        past_future_corr: Band::from_replications(&pick(|s| &s.past_future_corr)),
    })
}

#[cfg(test)]
mod tests;
