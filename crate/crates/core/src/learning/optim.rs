use serde::{Deserialize, Serialize};

use crate::graph::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Sgd {
        lr: f64,
        momentum: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
}

impl OptimizerSpec {
    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerSpec::Sgd { lr, momentum }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerSpec::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn build(self, store: &ParamStore) -> Optimizer {
        let zeros = || store.iter().map(|p| vec![0.0; p.values.len()]).collect();
        Optimizer {
            spec: self,
            first: zeros(),
            second: zeros(),
            steps: 0,
        }
    }
}

/// Optimizer state for one parameter store. Steps read `grad` and update
/// `values` in place.
#[derive(Debug, Clone)]
pub struct Optimizer {
    spec: OptimizerSpec,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn spec(&self) -> OptimizerSpec {
        self.spec
    }

    pub fn step(&mut self, store: &mut ParamStore) {
        self.steps += 1;
        let t = self.steps as i32;
        for (k, p) in store.iter_mut().enumerate() {
            match self.spec {
                OptimizerSpec::Sgd { lr, momentum } => {
                    let v = &mut self.first[k];
                    for ((x, g), vi) in p.values.iter_mut().zip(&p.grad).zip(v.iter_mut()) {
                        *vi = momentum * *vi + g;
                        *x -= lr * *vi;
                    }
                }
                OptimizerSpec::Adam {
                    lr,
                    beta1,
                    beta2,
                    eps,
                } => {
                    let c1 = 1.0 - beta1.powi(t);
                    let c2 = 1.0 - beta2.powi(t);
                    let (m, v) = (&mut self.first[k], &mut self.second[k]);
                    for (i, (x, g)) in p.values.iter_mut().zip(&p.grad).enumerate() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                        let mh = m[i] / c1;
                        let vh = v[i] / c2;
                        *x -= lr * mh / (vh.sqrt() + eps);
                    }
                }
            }
        }
    }
}
