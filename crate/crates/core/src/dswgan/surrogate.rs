use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const DEFAULT_LAMBDA_MIN: f64 = 1e-3;

/// Replacement derivative `∂M(λ)/∂λ ≈ 1 + (M(λ) − λ) / (2λ)` for a unit-rate
/// Poisson process `M` evaluated at rate `λ`, clipped to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonSurrogate {
    pub lambda_min: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for PoissonSurrogate {
    fn default() -> Self {
        PoissonSurrogate {
            lambda_min: DEFAULT_LAMBDA_MIN,
            lo: 0.0,
            hi: 5.0,
        }
    }
}

impl PoissonSurrogate {
    /// Returns the clipped surrogate and whether clipping was applied.
    pub fn grad(&self, rate: f64, count: f64) -> Result<(f64, bool)> {
        if !(rate >= self.lambda_min) {
            return Err(domain(format!(
                "surrogate needs rate >= {}, got {rate}",
                self.lambda_min
            )));
        }
        let raw = 1.0 + (count - rate) / (2.0 * rate);
        let clipped = raw.clamp(self.lo, self.hi);
        Ok((clipped, clipped != raw))
    }
}

/// Surrogate with the default clamp `λ_min = 1e-3` and clip range `[0, 5]`.
pub fn surrogate_poisson_grad(rate: f64, count: u64) -> Result<f64> {
    PoissonSurrogate::default().grad(rate, count as f64).map(|(g, _)| g)
}
