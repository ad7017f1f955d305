use ndarray::{ArrayViewMutD, ArrayViewD, Zip};
use serde::{Deserialize, Serialize};

use super::{Mlp, MlpGrads};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates. `step` moves the parameters
/// against the supplied gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: MlpGrads,
    v: MlpGrads,
    t: i32,
}

impl Adam {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Adam {
            config,
            m: net.zero_grads(),
            v: net.zero_grads(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads, lr: f64) {
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let update = |p: ArrayViewMutD<f64>, g: ArrayViewD<f64>, m: ArrayViewMutD<f64>, v: ArrayViewMutD<f64>| {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        };
        for l in 0..net.n_layers() {
            update(
                net.weights[l].view_mut().into_dyn(),
                grads.weights[l].view().into_dyn(),
                self.m.weights[l].view_mut().into_dyn(),
                self.v.weights[l].view_mut().into_dyn(),
            );
            update(
                net.biases[l].view_mut().into_dyn(),
                grads.biases[l].view().into_dyn(),
                self.m.biases[l].view_mut().into_dyn(),
                self.v.biases[l].view_mut().into_dyn(),
            );
        }
    }
}
