//! Arrival-epoch reconstruction from interval counts.
//!
//! The piecewise-constant simulator spreads each interval's arrivals
//! uniformly over the interval. The piecewise-linear simulator first fits a
//! nonnegative linear-by-interval intensity whose integral over every
//! interval equals its count, then places arrivals by inverting the
//! quadratic cumulative intensity.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::types::{CountVector, Horizon};

pub use crate::types::EpochList;

/// Rate at the start and end of one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
}

impl Segment {
    fn integral(&self, width: f64) -> f64 {
        0.5 * (self.start + self.end) * width
    }
}

/// Piecewise-linear intensity over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlIntensity {
    pub horizon: Horizon,
    /// Fitted boundary values `λ̂_0..λ̂_p` before any repair.
    pub knots: Vec<f64>,
    /// Per-interval endpoint rates actually used.
    pub segments: Vec<Segment>,
    /// Intervals whose segment was rescaled because a knot went negative.
    pub repaired: Vec<usize>,
}

impl PwlIntensity {
    pub fn is_continuous(&self) -> bool {
        self.repaired.is_empty()
    }

    /// `λ̂(t)` using the segment of the interval containing `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let j = self.horizon.interval_of(t);
        let s = self.segments[j];
        let w = (t - self.horizon.boundary(j)) / self.horizon.interval_length();
        s.start + (s.end - s.start) * w
    }

    /// Integral of the intensity over interval `j`.
    pub fn interval_integral(&self, j: usize) -> f64 {
        self.segments[j].integral(self.horizon.interval_length())
    }
}

fn place(t0: f64, t1: f64, tau: f64) -> f64 {
    (t0 + tau).clamp(t0.next_up(), t1)
}

/// Uniform placement of `x_j` arrivals in each interval `((j-1)Δ, jΔ]`.
pub fn epochs_piecewise_constant(counts: &CountVector, horizon: &Horizon, stream: &mut RngStream) -> EpochList {
    let width = horizon.interval_length();
    let mut out = Vec::with_capacity(counts.total() as usize);
    for (j, &x) in counts.0.iter().enumerate() {
        let (t0, t1) = (horizon.boundary(j), horizon.boundary(j + 1));
        let mut cell: Vec<f64> = (0..x).map(|_| place(t0, t1, stream.uniform() * width)).collect();
        cell.sort_by(f64::total_cmp);
        out.extend(cell);
    }
    EpochList(out)
}

/// Count-matching piecewise-linear intensity.
///
/// The trapezoid constraints `(λ̂_{j-1} + λ̂_j)/2 · Δ = x_j` leave one free
/// value `λ̂_0 = s`, with `λ̂_j = c_j + (-1)^j s`. Among feasible `s`
/// (all knots nonnegative) the one minimizing `Σ (λ̂_j − λ̂_{j-1})²` is
/// chosen. When no `s` is feasible, negative knots are set to zero and each
/// affected interval's segment is rescaled to its count.
pub fn fit_pwl_intensity(counts: &CountVector, horizon: &Horizon) -> PwlIntensity {
    let p = horizon.p;
    let width = horizon.interval_length();
    let level: Vec<f64> = counts.0.iter().map(|&x| 2.0 * x as f64 / width).collect();

    // c_0 = 0, c_j = 2x_j/Δ − c_{j-1}
    let mut c = vec![0.0; p + 1];
    for j in 1..=p {
        c[j] = level[j - 1] - c[j - 1];
    }
    let sign = |j: usize| if j % 2 == 0 { 1.0 } else { -1.0 };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for j in 1..=p {
        if j % 2 == 0 {
            lo = lo.max(-c[j]);
        } else {
            hi = hi.min(c[j]);
        }
    }
    // Σ_j (d_j + 2 s e_j)² with d_j = c_j − c_{j-1}, e_j = (-1)^j
    let num: f64 = (1..=p).map(|j| (c[j] - c[j - 1]) * sign(j)).sum();
    let unconstrained = -num / (2.0 * p as f64);
    let feasible = lo <= hi;
    let s = if feasible {
        unconstrained.clamp(lo, hi)
    } else {
        unconstrained.clamp(0.0, level[0])
    };
    let knots: Vec<f64> = (0..=p).map(|j| c[j] + sign(j) * s).collect();

    let mut segments = Vec::with_capacity(p);
    let mut repaired = Vec::new();
    for j in 0..p {
        let (a, b) = (knots[j], knots[j + 1]);
        if a >= 0.0 && b >= 0.0 {
            segments.push(Segment { start: a, end: b });
            continue;
        }
        let (a, b) = (a.max(0.0), b.max(0.0));
        let target = counts.0[j] as f64;
        let seg = if a + b > 0.0 {
            let f = target / Segment { start: a, end: b }.integral(width);
            Segment { start: a * f, end: b * f }
        } else {
            let flat = target / width;
            Segment { start: flat, end: flat }
        };
        segments.push(seg);
        repaired.push(j);
    }
    if !repaired.is_empty() {
        log::debug!("piecewise-linear fit repaired intervals {repaired:?}");
    }
    PwlIntensity {
        horizon: *horizon,
        knots,
        segments,
        repaired,
    }
}

/// Inverse of `Λ(τ) = aτ + mτ²/2` on `[0, Δ]`, in the cancellation-free
/// form `τ = 2u / (a + √(a² + 2mu))`, which reduces to `u/a` as `m → 0`.
pub fn invert_linear_cumulative(start: f64, slope: f64, u: f64) -> f64 {
    let disc = (start * start + 2.0 * slope * u).max(0.0);
    let denom = start + disc.sqrt();
    if denom > 0.0 {
        2.0 * u / denom
    } else {
        0.0
    }
}

pub fn epochs_piecewise_linear(counts: &CountVector, horizon: &Horizon, stream: &mut RngStream) -> EpochList {
    let fit = fit_pwl_intensity(counts, horizon);
    epochs_from_pwl(counts, &fit, stream)
}

/// Places `x_j` arrivals per interval by inverting the fitted cumulative
/// intensity. An interval with arrivals but zero intensity falls back to
/// uniform placement.
pub fn epochs_from_pwl(counts: &CountVector, fit: &PwlIntensity, stream: &mut RngStream) -> EpochList {
    let horizon = fit.horizon;
    let width = horizon.interval_length();
    let mut out = Vec::with_capacity(counts.total() as usize);
    for (j, &x) in counts.0.iter().enumerate() {
        let (t0, t1) = (horizon.boundary(j), horizon.boundary(j + 1));
        let seg = fit.segments[j];
        let total = seg.integral(width);
        let slope = (seg.end - seg.start) / width;
        let zero = !(total > 0.0);
        if zero && x > 0 {
            log::debug!("interval {j} has {x} arrivals but zero fitted intensity; placing uniformly");
        }
        let mut cell: Vec<f64> = (0..x)
            .map(|_| {
                let tau = if zero {
                    stream.uniform() * width
                } else {
                    invert_linear_cumulative(seg.start, slope, stream.uniform() * total)
                };
                place(t0, t1, tau)
            })
            .collect();
        cell.sort_by(f64::total_cmp);
        out.extend(cell);
    }
    EpochList(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpochMode {
    /// Piecewise constant.
    Pwc,
    /// Piecewise linear.
    Pwl,
}

pub fn simulate_epochs(mode: EpochMode, counts: &CountVector, horizon: &Horizon, stream: &mut RngStream) -> EpochList {
    match mode {
        EpochMode::Pwc => epochs_piecewise_constant(counts, horizon, stream),
        EpochMode::Pwl => epochs_piecewise_linear(counts, horizon, stream),
    }
}
