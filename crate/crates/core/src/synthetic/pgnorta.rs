use serde::{Deserialize, Serialize};

use super::special::gamma_quantile_from_normal;
use crate::error::{config, Error, Result};
use crate::par;
use crate::rng::RngStream;
use crate::types::{CountMatrix, CountVector, Horizon};

const JITTER: f64 = 1e-8;
const MAX_JITTER_ATTEMPTS: usize = 10;

/// Mixed-Poisson counts `X_j ~ Poisson(λ_j B_j)` with Gamma(α_j, α_j)
/// busyness factors coupled through a normal copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgnortaConfig {
    pub base_rates: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
}

impl PgnortaConfig {
    pub fn p(&self) -> usize {
        self.base_rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 || self.dispersion.len() != p || self.correlation.len() != p {
            return Err(config("base_rates, dispersion and correlation must share length p >= 1"));
        }
        if self.base_rates.iter().chain(&self.dispersion).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(config("base rates and dispersions must be positive"));
        }
        for (i, row) in self.correlation.iter().enumerate() {
            if row.len() != p {
                return Err(config(format!("correlation row {i} has wrong length")));
            }
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(config("correlation diagonal must be one"));
            }
            for (j, &r) in row.iter().enumerate() {
                if !(r.abs() <= 1.0) || (r - self.correlation[j][i]).abs() > 1e-12 {
                    return Err(config("correlation must be symmetric with entries in [-1, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Configuration whose copula correlation decays as `ρ^|i-j|`.
    pub fn ar1(base_rates: Vec<f64>, dispersion: Vec<f64>, rho: f64) -> Self {
        let p = base_rates.len();
        let correlation = (0..p)
            .map(|i| (0..p).map(|j| rho.powi((i as i32 - j as i32).abs())).collect())
            .collect();
        PgnortaConfig {
            base_rates,
            dispersion,
            correlation,
        }
    }
}

/// Lower Cholesky factor, adding `1e-8` to the diagonal after each failed
/// attempt.
pub fn cholesky_with_jitter(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    for attempt in 0..=MAX_JITTER_ATTEMPTS {
        let jitter = attempt as f64 * JITTER;
        let mut l = vec![vec![0.0; n]; n];
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..=i {
                let mut s = a[i][j] + if i == j { jitter } else { 0.0 };
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        ok = false;
                        break 'outer;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        if ok {
            if attempt > 0 {
                log::debug!("correlation factorized after {attempt} jitter steps");
            }
            return Ok(l);
        }
    }
    Err(Error::NotPsd {
        attempts: MAX_JITTER_ATTEMPTS,
    })
}

/// Prepared sampler holding the copula factor.
#[derive(Debug, Clone)]
pub struct Pgnorta {
    config: PgnortaConfig,
    factor: Vec<Vec<f64>>,
}

impl Pgnorta {
    pub fn new(config: PgnortaConfig) -> Result<Self> {
        config.validate()?;
        let factor = cholesky_with_jitter(&config.correlation)?;
        Ok(Pgnorta { config, factor })
    }

    pub fn config(&self) -> &PgnortaConfig {
        &self.config
    }

    pub fn p(&self) -> usize {
        self.config.p()
    }

    /// Correlated standard normals `Z = L ε`.
    pub fn draw_normals(&self, stream: &mut RngStream) -> Vec<f64> {
        let eps: Vec<f64> = (0..self.p()).map(|_| stream.standard_normal()).collect();
        self.factor
            .iter()
            .map(|row| row.iter().zip(&eps).map(|(l, e)| l * e).sum())
            .collect()
    }

    /// Busyness factors `B_j = G_j⁻¹(Φ(Z_j))`.
    pub fn draw_busyness(&self, stream: &mut RngStream) -> Vec<f64> {
        self.draw_normals(stream)
            .into_iter()
            .zip(&self.config.dispersion)
            .map(|(z, &a)| gamma_quantile_from_normal(a, a, z))
            .collect()
    }

    pub fn simulate_day(&self, stream: &mut RngStream) -> CountVector {
        let b = self.draw_busyness(stream);
        CountVector(
            b.iter()
                .zip(&self.config.base_rates)
                .map(|(b, l)| stream.poisson(l * b).expect("positive rate"))
                .collect(),
        )
    }

    /// `n` iid days; day `i` uses substream `i` of `stream`.
    pub fn simulate_days(&self, horizon: Horizon, n: usize, stream: &RngStream) -> Result<CountMatrix> {
        if horizon.p != self.p() {
            return Err(config("horizon p differs from model dimension"));
        }
        let rows = par::map_indexed(n, |i| self.simulate_day(&mut stream.substream(i as u64)));
        CountMatrix::new(horizon, rows)
    }
}

/// One PGnorta day from a raw configuration.
pub fn simulate_pgnorta_day(config: &PgnortaConfig, stream: &mut RngStream) -> Result<CountVector> {
    Ok(Pgnorta::new(config.clone())?.simulate_day(stream))
}
