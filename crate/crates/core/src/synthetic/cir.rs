use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::par;
use crate::rng::RngStream;
use crate::types::{CountMatrix, CountVector, EpochList, Horizon};

/// Piecewise-linear time-of-day profile given by knots `(t_k, R(t_k))`,
/// held flat outside the first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub knots: Vec<(f64, f64)>,
}

impl RateProfile {
    pub fn constant(value: f64) -> Self {
        RateProfile {
            knots: vec![(0.0, value)],
        }
    }

    /// Hump-shaped smoke-test profile on `[0, 11]`: 50 at opening, a
    /// midday plateau around 150, 60 at closing.
    pub fn default_hump() -> Self {
        RateProfile {
            knots: vec![(0.0, 50.0), (2.5, 110.0), (5.0, 150.0), (6.5, 145.0), (9.0, 95.0), (11.0, 60.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(config("rate profile needs at least one knot"));
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(config("rate profile knots must have increasing times"));
        }
        if self.knots.iter().any(|&(_, v)| !(v >= 0.0) || !v.is_finite()) {
            return Err(config("rate profile values must be nonnegative"));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let i = k.partition_point(|&(tk, _)| tk <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Exact integral over `[a, b]` (trapezoids between breakpoints).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(self.knots.iter().map(|&(t, _)| t).filter(|&t| t > a && t < b));
        pts.push(b);
        pts.windows(2)
            .map(|w| 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0]))
            .sum()
    }

    /// `R_i = ∫ R(t) dt` over each interval of the horizon.
    pub fn interval_integrals(&self, horizon: &Horizon) -> Vec<f64> {
        (0..horizon.p)
            .map(|j| self.integral(horizon.boundary(j), horizon.boundary(j + 1)))
            .collect()
    }
}

/// Cox process driven by `dλ = κ(R(t) − λ)dt + σ R(t)^α √λ dB`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CirConfig {
    pub kappa: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub profile: RateProfile,
    /// Euler step in hours.
    pub delta: f64,
    pub horizon: Horizon,
}

impl Default for CirConfig {
    fn default() -> Self {
        CirConfig {
            kappa: 0.2,
            sigma: 0.4,
            alpha: 0.3,
            beta: 100.0,
            profile: RateProfile::default_hump(),
            delta: 0.001,
            horizon: Horizon { t: 11.0, p: 22 },
        }
    }
}

impl CirConfig {
    pub fn validate(&self) -> Result<()> {
        self.horizon.validate()?;
        self.profile.validate()?;
        if !(self.kappa > 0.0) || !(self.alpha > 0.0) || !(self.beta > 0.0) || !(self.sigma >= 0.0) {
            return Err(config("CIR parameters must be positive (sigma may be zero)"));
        }
        if !(self.delta > 0.0) || self.delta > self.horizon.interval_length() {
            return Err(config("Euler step must be positive and at most one interval"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon.t / self.delta).round().max(1.0) as usize
    }
}

/// Intensity on the Euler grid `t_k = k·δ`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirPath {
    pub step: f64,
    pub values: Vec<f64>,
}

impl CirPath {
    /// Intensity at `t`, linear between grid points, floored at zero.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t / self.step;
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - k as f64;
        ((1.0 - w) * self.values[k] + w * self.values[k + 1]).max(0.0)
    }
}

pub fn simulate_cir_path(cfg: &CirConfig, stream: &mut RngStream) -> Result<CirPath> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let step = cfg.horizon.t / n as f64;
    let sqrt_step = step.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut lam = cfg.profile.eval(0.0) * stream.gamma(cfg.beta, cfg.beta)?;
    values.push(lam);
    for k in 0..n {
        let r = cfg.profile.eval(k as f64 * step);
        let z = stream.standard_normal();
        lam += cfg.kappa * (r - lam) * step + cfg.sigma * r.powf(cfg.alpha) * lam.max(0.0).sqrt() * sqrt_step * z;
        values.push(lam);
    }
    Ok(CirPath { step, values })
}

/// Thinning with a per-cell majorant: in each Euler cell, candidates from a
/// homogeneous process at the larger endpoint intensity are kept with
/// probability `λ(t)/λ_max`.
pub fn thin_path(path: &CirPath, horizon: &Horizon, stream: &mut RngStream) -> EpochList {
    let mut epochs = Vec::new();
    for (k, w) in path.values.windows(2).enumerate() {
        let (l0, l1) = (w[0].max(0.0), w[1].max(0.0));
        let lmax = l0.max(l1);
        if lmax <= 0.0 {
            continue;
        }
        let t0 = k as f64 * path.step;
        let n = stream.poisson(lmax * path.step).expect("finite rate");
        let mut cell: Vec<f64> = (0..n)
            .filter_map(|_| {
                let u = stream.uniform();
                let lam = l0 + (l1 - l0) * u;
                (stream.uniform() * lmax <= lam).then_some((t0 + u * path.step).min(horizon.t))
            })
            .collect();
        cell.sort_by(f64::total_cmp);
        epochs.extend(cell);
    }
    EpochList(epochs)
}

pub fn simulate_cir_day(cfg: &CirConfig, stream: &mut RngStream) -> Result<(CountVector, EpochList)> {
    let path = simulate_cir_path(cfg, stream)?;
    let epochs = thin_path(&path, &cfg.horizon, stream);
    Ok((epochs.bin(&cfg.horizon), epochs))
}

/// `n` days; day `i` uses substream `i`.
pub fn simulate_cir_days(cfg: &CirConfig, n: usize, stream: &RngStream) -> Result<(CountMatrix, Vec<EpochList>)> {
    cfg.validate()?;
    let days = par::map_indexed(n, |i| simulate_cir_day(cfg, &mut stream.substream(i as u64)));
    let mut counts = Vec::with_capacity(n);
    let mut epochs = Vec::with_capacity(n);
    for d in days {
        let (c, e) = d?;
        counts.push(c);
        epochs.push(e);
    }
    Ok((CountMatrix::new(cfg.horizon, counts)?, epochs))
}
