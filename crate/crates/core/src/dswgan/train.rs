use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{poisson_matrix, DsWganModel, ModelMetadata, Standardizer};
use super::PoissonSurrogate;
use crate::error::{config, Error, Result};
use crate::nn::{Adam, AdamConfig, Mlp};
use crate::rng::RngStream;
use crate::types::CountMatrix;

const INIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Gradient penalty coefficient ζ.
    pub zeta: f64,
    pub batch_size: usize,
    pub n_critic: usize,
    pub adam: AdamConfig,
    pub iterations: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub lambda_min: f64,
    pub surrogate_clip: (f64, f64),
    pub seed: u64,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub init_weight_var: f64,
    pub init_bias: f64,
    /// Standardize counts per interval before the discriminator.
    pub standardize: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            zeta: 0.5,
            batch_size: 256,
            n_critic: 10,
            adam: AdamConfig::default(),
            iterations: 50_000,
            lr_start: 1e-4,
            lr_end: 1e-6,
            lambda_min: super::surrogate::DEFAULT_LAMBDA_MIN,
            surrogate_clip: (0.0, 5.0),
            seed: 0,
            generator_hidden: vec![512, 512, 512],
            discriminator_hidden: vec![512, 512, 512],
            init_weight_var: 0.1,
            init_bias: 3.0,
            standardize: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.adam;
        if !(self.zeta >= 0.0) {
            return Err(config("zeta must be nonnegative"));
        }
        if self.batch_size == 0 || self.n_critic == 0 {
            return Err(config("batch_size and n_critic must be at least 1"));
        }
        if !(0.0..1.0).contains(&b.beta1) || !(0.0..1.0).contains(&b.beta2) || !(b.eps > 0.0) {
            return Err(config("Adam betas must lie in [0, 1) and eps must be positive"));
        }
        if !(self.lr_end > 0.0) || !(self.lr_start >= self.lr_end) {
            return Err(config("need lr_start >= lr_end > 0"));
        }
        if !(self.lambda_min > 0.0) {
            return Err(config("lambda_min must be positive"));
        }
        if !(self.surrogate_clip.0 <= self.surrogate_clip.1) {
            return Err(config("surrogate clip range is empty"));
        }
        if !(self.init_weight_var >= 0.0) {
            return Err(config("init_weight_var must be nonnegative"));
        }
        Ok(())
    }

    /// Learning rate at iteration `t`, decaying continuously from
    /// `lr_start` to `lr_end` over the run.
    pub fn learning_rate(&self, t: usize) -> f64 {
        if self.iterations == 0 {
            return self.lr_start;
        }
        let frac = t as f64 / self.iterations as f64;
        self.lr_start * (self.lr_end / self.lr_start).powf(frac)
    }

    /// Short SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    pub fn surrogate(&self) -> PoissonSurrogate {
        PoissonSurrogate {
            lambda_min: self.lambda_min,
            lo: self.surrogate_clip.0,
            hi: self.surrogate_clip.1,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    pub critic_loss: f64,
    pub generator_loss: f64,
    pub penalty: f64,
    pub clip_fraction: f64,
    pub critic_grad_norm: f64,
    pub generator_grad_norm: f64,
    pub degenerate_penalties: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

pub fn init_model(data: &CountMatrix, cfg: &TrainingConfig) -> Result<DsWganModel> {
    cfg.validate()?;
    let p = data.p();
    let mut rng = RngStream::new(cfg.seed, INIT_STREAM);
    let widths = |hidden: &[usize], out: usize| {
        let mut w = vec![p];
        w.extend_from_slice(hidden);
        w.push(out);
        w
    };
    let generator = Mlp::init(
        &widths(&cfg.generator_hidden, p),
        cfg.init_weight_var,
        cfg.init_bias,
        &mut rng,
    )?;
    let discriminator = Mlp::init(
        &widths(&cfg.discriminator_hidden, 1),
        cfg.init_weight_var,
        cfg.init_bias,
        &mut rng,
    )?;
    let standardizer = cfg.standardize.then(|| Standardizer::fit(data));
    DsWganModel::new(
        data.horizon(),
        generator,
        discriminator,
        standardizer,
        cfg.lambda_min,
        ModelMetadata {
            p,
            config_hash: cfg.hash(),
            seed: cfg.seed,
        },
    )
}

pub fn train(data: &CountMatrix, cfg: &TrainingConfig) -> Result<(DsWganModel, TrainingLog)> {
    train_with_progress(data, cfg, |_| {})
}

/// Adversarial estimation loop. Each iteration runs `n_critic` critic
/// updates that raise `Σ f(x̃) − Σ f(x)` while descending on the penalty
/// `Σ ζ(‖∇f(x̂)‖ − 1)²`, then one generator update minimizing
/// `Σ f(h(g(y)))`. The critic scores fakes high, the generator pulls them
/// down. Losses are batch sums; the logged critic loss is
/// `Σ f(x̃) − Σ f(x) + penalty`.
pub fn train_with_progress<F>(data: &CountMatrix, cfg: &TrainingConfig, mut progress: F) -> Result<(DsWganModel, TrainingLog)>
where
    F: FnMut(&LogRow),
{
    let mut model = init_model(data, cfg)?;
    let mut log = TrainingLog::default();
    if cfg.iterations == 0 {
        return Ok((model, log));
    }

    let p = data.p();
    let m = cfg.batch_size;
    let real_all = Array2::from_shape_fn((data.n_days(), p), |(i, j)| data.row(i).0[j] as f64);
    let surrogate = cfg.surrogate();
    let mut rng = RngStream::new(cfg.seed, TRAIN_STREAM);
    let mut adam_d = Adam::new(&model.discriminator, cfg.adam);
    let mut adam_g = Adam::new(&model.generator, cfg.adam);
    // descent direction for the critic: −f on fakes, +f on reals
    let signs = concatenate(Axis(0), &[(-Array2::ones((m, 1))).view(), Array2::ones((m, 1)).view()])
        .expect("equal widths");

    for it in 0..cfg.iterations {
        let lr = cfg.learning_rate(it);
        let mut critic_loss = 0.0;
        let mut penalty = 0.0;
        let mut critic_norm = 0.0;
        let mut degenerate = 0;

        for _ in 0..cfg.n_critic {
            let idx: Vec<usize> = (0..m).map(|_| rng.index(data.n_days())).collect();
            let real = real_all.select(Axis(0), &idx);
            let noise = model.noise(m, &mut rng);
            let rates = model.intensities(noise.view(), 1.0)?;
            let fake = poisson_matrix(&rates, &mut rng);
            let mut mixed = fake.clone();
            for (mut row, real_row) in mixed.outer_iter_mut().zip(real.outer_iter()) {
                let eps = rng.uniform();
                row.zip_mut_with(&real_row, |f, &r| *f = eps * r + (1.0 - eps) * *f);
            }

            let both = concatenate(Axis(0), &[fake.view(), real.view()]).expect("same width");
            let both = model.standardized(&both);
            let mixed = model.standardized(&mixed);
            let trace = model.discriminator.forward_batch(both.view())?;
            let scores = trace.output();
            let fake_sum: f64 = scores.slice(ndarray::s![..m, 0]).sum();
            let real_sum: f64 = scores.slice(ndarray::s![m.., 0]).sum();
            let mut grads = model.discriminator.backward_params(&trace, signs.view())?;
            let pen = model.discriminator.grad_penalty_batch(mixed.view(), cfg.zeta)?;
            grads.add_assign(&pen.grads);

            critic_loss = fake_sum - real_sum + pen.total;
            penalty = pen.total;
            critic_norm = grads.norm();
            degenerate += pen.degenerate;
            if !critic_loss.is_finite() || !critic_norm.is_finite() {
                return Err(non_finite(it, "critic", critic_loss, pen.total, critic_norm, &log));
            }
            adam_d.step(&mut model.discriminator, &grads, lr);
        }

        let noise = model.noise(m, &mut rng);
        let rates = model.intensities(noise.view(), 1.0)?;
        let counts = poisson_matrix(&rates, &mut rng);
        let generator_loss: f64 = model.critic(&counts)?.iter().sum();
        let critic_grad = model.critic_input_grad(&counts)?;
        let g = model.generator_grad(noise.view(), counts.view(), critic_grad.view(), &surrogate)?;
        let generator_norm = g.grads.norm();
        if !generator_loss.is_finite() || !generator_norm.is_finite() {
            return Err(non_finite(it, "generator", generator_loss, penalty, generator_norm, &log));
        }
        adam_g.step(&mut model.generator, &g.grads, lr);

        let row = LogRow {
            iteration: it,
            critic_loss,
            generator_loss,
            penalty,
            clip_fraction: g.clipped as f64 / g.total as f64,
            critic_grad_norm: critic_norm,
            generator_grad_norm: generator_norm,
            degenerate_penalties: degenerate,
            learning_rate: lr,
        };
        progress(&row);
        log.rows.push(row);
    }
    Ok((model, log))
}

fn non_finite(it: usize, phase: &str, loss: f64, penalty: f64, grad_norm: f64, log: &TrainingLog) -> Error {
    let last = log
        .rows
        .last()
        .map(|r| format!("{r:?}"))
        .unwrap_or_else(|| "none".into());
    Error::NonFinite {
        iteration: it,
        detail: format!(
            "{phase} step: loss={loss}, penalty={penalty}, grad_norm={grad_norm}; previous log row: {last}"
        ),
    }
}
