//! Reproducible random streams and the four samplers the simulators need.
//!
//! A stream is identified by `(seed, stream_id)`. It is backed by ChaCha8,
//! whose 64-bit stream selector gives independent sequences for different
//! ids under the same key, so replications can be handed distinct ids and
//! evaluated in any order without changing results.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Below this rate Poisson variates are drawn by sequential inversion.
const POISSON_INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream `index` of this stream. Children are keyed by a hash of
    /// the parent identity, so they never alias the parent or each other.
    pub fn substream(&self, index: u64) -> RngStream {
        let key = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RngStream::new(key, index)
    }

    /// Uniform draw strictly inside (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_vector(&mut self, p: usize) -> Vec<f64> {
        (0..p).map(|_| self.uniform()).collect()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn poisson(&mut self, rate: f64) -> Result<u64> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(domain(format!("Poisson rate must be finite and nonnegative, got {rate}")));
        }
        Ok(if rate < POISSON_INVERSION_LIMIT {
            self.poisson_inversion(rate)
        } else {
            self.poisson_ptrs(rate)
        })
    }

    fn poisson_inversion(&mut self, rate: f64) -> u64 {
        if rate == 0.0 {
            return 0;
        }
        let u = self.uniform();
        let mut k = 0u64;
        let mut prob = (-rate).exp();
        let mut cdf = prob;
        while u > cdf {
            k += 1;
            prob *= rate / k as f64;
            cdf += prob;
            // Guard against the cdf stalling below u from rounding.
            if prob < f64::MIN_POSITIVE && k as f64 > rate {
                break;
            }
        }
        k
    }

    /// Hörmann's transformed rejection with squeeze (PTRS).
    fn poisson_ptrs(&mut self, rate: f64) -> u64 {
        let slam = rate.sqrt();
        let loglam = rate.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -rate + k * loglam - ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }

    /// Gamma variate with the given shape and rate (mean `shape / rate`).
    pub fn gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if !(shape > 0.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(domain(format!(
                "gamma parameters must be positive, got shape={shape}, rate={rate}"
            )));
        }
        Ok(self.gamma_unit(shape) / rate)
    }

    /// Marsaglia–Tsang squeeze rejection; shapes below one are boosted by
    /// one and corrected with a `U^(1/shape)` factor.
    fn gamma_unit(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let boost = self.uniform().powf(1.0 / shape);
            return self.gamma_unit(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let (x, v) = loop {
                let x = self.standard_normal();
                let v = 1.0 + c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Lognormal variate parameterized by its own mean and variance.
    pub fn lognormal(&mut self, mean: f64, variance: f64) -> Result<f64> {
        let (mu, sigma) = lognormal_params(mean, variance)?;
        Ok((mu + sigma * self.standard_normal()).exp())
    }

    pub fn exponential(&mut self, mean: f64) -> f64 {
        -mean * self.uniform().ln()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

/// Log-scale location and scale `(μ, σ)` for a lognormal with the given
/// mean and variance.
pub fn lognormal_params(mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) || !(variance > 0.0) {
        return Err(domain(format!(
            "lognormal mean and variance must be positive, got mean={mean}, variance={variance}"
        )));
    }
    let s2 = (variance / (mean * mean)).ln_1p();
    Ok((mean.ln() - 0.5 * s2, s2.sqrt()))
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
