use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::PoissonSurrogate;
use crate::error::{domain, shape, Result};
use crate::nn::{Mlp, MlpGrads};
use crate::par;
use crate::rng::RngStream;
use crate::types::{CountMatrix, CountVector, Horizon, IntensityVector};

/// Rows generated per random substream when sampling many days.
const SAMPLE_BLOCK: usize = 256;

/// Per-interval affine map applied to counts before the discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column means and standard deviations; constant columns get scale 1.
    pub fn fit(data: &CountMatrix) -> Self {
        let n = data.n_days() as f64;
        let (mean, scale) = (0..data.p())
            .map(|j| {
                let col = data.column(j);
                let m = col.iter().sum::<f64>() / n;
                let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
                let sd = v.sqrt();
                (m, if sd > 1e-8 { sd } else { 1.0 })
            })
            .unzip();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &mut Array2<f64>) {
        for mut row in x.outer_iter_mut() {
            Zip::from(&mut row)
                .and(&self.mean[..])
                .and(&self.scale[..])
                .for_each(|v, &m, &s| *v = (*v - m) / s);
        }
    }

    /// Maps a gradient with respect to standardized inputs back to raw counts.
    pub fn chain_gradient(&self, g: &mut Array2<f64>) {
        for mut row in g.outer_iter_mut() {
            Zip::from(&mut row)
                .and(&self.scale[..])
                .for_each(|v, &s| *v /= s);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub p: usize,
    pub config_hash: String,
    pub seed: u64,
}

/// Generator of random intensities plus the critic that scores count vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsWganModel {
    pub horizon: Horizon,
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub standardizer: Option<Standardizer>,
    pub lambda_min: f64,
    pub metadata: ModelMetadata,
}

/// Generator gradient for one batch together with surrogate diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratorGrad {
    pub grads: MlpGrads,
    pub clipped: usize,
    pub total: usize,
}

impl DsWganModel {
    pub fn new(
        horizon: Horizon,
        generator: Mlp,
        discriminator: Mlp,
        standardizer: Option<Standardizer>,
        lambda_min: f64,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let p = horizon.p;
        if generator.input_dim() != p || generator.output_dim() != p {
            return Err(shape(format!(
                "generator must map {p} noise dims to {p} rates, has widths {:?}",
                generator.widths()
            )));
        }
        if discriminator.input_dim() != p || discriminator.output_dim() != 1 {
            return Err(shape(format!(
                "discriminator must map {p} counts to one score, has widths {:?}",
                discriminator.widths()
            )));
        }
        if let Some(s) = &standardizer {
            if s.mean.len() != p || s.scale.len() != p {
                return Err(shape("standardizer length differs from p"));
            }
        }
        if !(lambda_min > 0.0) {
            return Err(domain("lambda_min must be positive"));
        }
        Ok(DsWganModel {
            horizon,
            generator,
            discriminator,
            standardizer,
            lambda_min,
            metadata,
        })
    }

    pub fn p(&self) -> usize {
        self.horizon.p
    }

    pub fn noise(&self, rows: usize, stream: &mut RngStream) -> Array2<f64> {
        let p = self.p();
        Array2::from_shape_fn((rows, p), |_| stream.uniform())
    }

    /// Clamped, scaled generator output for each noise row.
    pub fn intensities(&self, noise: ArrayView2<f64>, scale: f64) -> Result<Array2<f64>> {
        let trace = self.generator.forward_batch(noise)?;
        let lmin = self.lambda_min;
        Ok(trace.output().mapv(|v| (scale * v).max(lmin)))
    }

    pub fn simulate_intensity(&self, stream: &mut RngStream) -> IntensityVector {
        let y = self.noise(1, stream);
        let rates = self.intensities(y.view(), 1.0).expect("noise has generator width");
        IntensityVector(rates.row(0).to_vec())
    }

    pub fn simulate_counts(&self, stream: &mut RngStream) -> CountVector {
        let rates = self.simulate_intensity(stream);
        poisson_vector(&rates.0, stream)
    }

    /// `n_days` iid days with intensities multiplied by `scale` before the
    /// Poisson step.
    pub fn sample(&self, n_days: usize, scale: f64, stream: &RngStream) -> Result<CountMatrix> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain(format!("scale must be positive, got {scale}")));
        }
        if n_days == 0 {
            return Err(domain("need at least one day"));
        }
        let blocks = n_days.div_ceil(SAMPLE_BLOCK);
        let rows = par::map_indexed(blocks, |b| -> Result<Vec<CountVector>> {
            let mut s = stream.substream(b as u64);
            let len = SAMPLE_BLOCK.min(n_days - b * SAMPLE_BLOCK);
            let y = self.noise(len, &mut s);
            let rates = self.intensities(y.view(), scale)?;
            Ok(rates
                .outer_iter()
                .map(|r| poisson_vector(r.as_slice().unwrap(), &mut s))
                .collect())
        });
        let mut days = Vec::with_capacity(n_days);
        for r in rows {
            days.extend(r?);
        }
        CountMatrix::new(self.horizon, days)
    }

    pub(crate) fn standardized(&self, counts: &Array2<f64>) -> Array2<f64> {
        let mut x = counts.clone();
        if let Some(s) = &self.standardizer {
            s.apply(&mut x);
        }
        x
    }

    /// Critic scores `f(x)` for raw count rows.
    pub fn critic(&self, counts: &Array2<f64>) -> Result<Vec<f64>> {
        let trace = self.discriminator.forward_batch(self.standardized(counts).view())?;
        Ok(trace.output().column(0).to_vec())
    }

    /// `∇_x f` with respect to raw counts, one row per sample.
    pub fn critic_input_grad(&self, counts: &Array2<f64>) -> Result<Array2<f64>> {
        let trace = self.discriminator.forward_batch(self.standardized(counts).view())?;
        let mut g = self.discriminator.grad_input(&trace)?;
        if let Some(s) = &self.standardizer {
            s.chain_gradient(&mut g);
        }
        Ok(g)
    }

    /// `∇_θ Σ_i f(h(g(y_i; θ)))` with `∂h/∂Λ` replaced by the clipped
    /// Poisson surrogate. The rate clamp is passed straight through.
    pub fn generator_grad(
        &self,
        noise: ArrayView2<f64>,
        counts: ArrayView2<f64>,
        critic_grad: ArrayView2<f64>,
        surrogate: &PoissonSurrogate,
    ) -> Result<GeneratorGrad> {
        if counts.dim() != noise.dim() || critic_grad.dim() != noise.dim() {
            return Err(shape(format!(
                "noise {:?}, counts {:?} and critic gradient {:?} must agree",
                noise.dim(),
                counts.dim(),
                critic_grad.dim()
            )));
        }
        let trace = self.generator.forward_batch(noise)?;
        let lmin = self.lambda_min;
        let mut upstream = critic_grad.to_owned();
        let mut clipped = 0;
        for ((u, &out), &c) in upstream.iter_mut().zip(trace.output().iter()).zip(counts.iter()) {
            let (d, was_clipped) = surrogate.grad(out.max(lmin), c)?;
            clipped += was_clipped as usize;
            *u *= d;
        }
        let grads = self.generator.backward_params(&trace, upstream.view())?;
        Ok(GeneratorGrad {
            grads,
            clipped,
            total: upstream.len(),
        })
    }
}

pub(crate) fn poisson_vector(rates: &[f64], stream: &mut RngStream) -> CountVector {
    CountVector(
        rates
            .iter()
            .map(|&r| stream.poisson(r).expect("rates are clamped to be positive"))
            .collect(),
    )
}

pub(crate) fn poisson_matrix(rates: &Array2<f64>, stream: &mut RngStream) -> Array2<f64> {
    rates.mapv(|r| stream.poisson(r).expect("rates are clamped to be positive") as f64)
}

