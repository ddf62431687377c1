use serde::{Deserialize, Serialize};

use super::model::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamaxConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamaxConfig {
    fn default() -> Self {
        AdamaxConfig { lr: 0.002, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Per-parameter first moment and exponentially weighted infinity norm,
/// stored block by block in [`Parameters::blocks`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamaxState {
    pub config: AdamaxConfig,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub inf_norm: Vec<Vec<f64>>,
}

impl AdamaxState {
    pub fn new(params: &Parameters, config: AdamaxConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|b| vec![0.0; b.data.len()]).collect();
        AdamaxState { config, step: 0, first_moment: zeros.clone(), inf_norm: zeros }
    }

    pub fn update(&mut self, params: &mut Parameters, grads: &Parameters) {
        self.step += 1;
        let AdamaxConfig { lr, beta1, beta2, eps } = self.config;
        let rate = lr / (1.0 - beta1.powi(self.step as i32));
        let grads = grads.blocks();
        for (((theta, g), m), u) in
            params.blocks_mut().into_iter().zip(&grads).zip(&mut self.first_moment).zip(&mut self.inf_norm)
        {
            for (((p, &g), m), u) in theta.1.iter_mut().zip(g.data).zip(m.iter_mut()).zip(u.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *u = (beta2 * *u).max(g.abs());
                *p -= rate * *m / (*u + eps);
            }
        }
    }
}
