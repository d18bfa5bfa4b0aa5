use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{hits_at_1, LossSpec};
use super::models::Model;
use super::optim::OptimizerSpec;
use crate::error::{NqlError, Result};
use crate::graph::Graph;
use crate::io::Example;
use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    pub seed: u64,
    pub loss: LossSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            optimizer: OptimizerSpec::adam(0.05),
            seed: 0,
            loss: LossSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean batch loss, weighted by batch size.
    pub loss: f64,
    pub hits_at_1: f64,
    pub examples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub loss: f64,
    pub hits_at_1: f64,
    pub examples: usize,
}

/// Answer-entity indices for each example.
pub fn target_indices(kb: &KnowledgeBase, model: &dyn Model, data: &[Example]) -> Result<Vec<Vec<usize>>> {
    let group = &model.config().group;
    let range = kb
        .group(group)
        .ok_or_else(|| NqlError::Validation(format!("unknown relation group `{group}`")))?
        .range();
    let ty = kb.type_decl(range)?;
    data.iter()
        .map(|ex| {
            if ex.targets.is_empty() {
                return Err(NqlError::Validation(format!(
                    "example `{}` has no targets",
                    ex.question
                )));
            }
            ex.targets
                .iter()
                .map(|t| {
                    ty.lookup(t).ok_or_else(|| NqlError::UnknownEntity {
                        name: t.clone(),
                        type_name: range.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

struct BatchResult {
    loss: f64,
    hits: usize,
}

fn run_batch(
    model: &dyn Model,
    kb: &KnowledgeBase,
    data: &[Example],
    targets: &[Vec<usize>],
    idx: &[usize],
    loss: LossSpec,
    with_grad: bool,
) -> Result<(BatchResult, Option<crate::graph::Gradients>)> {
    let mut g = Graph::new(kb);
    let pairs: Vec<(&str, &str)> = idx
        .iter()
        .map(|&i| (data[i].question.as_str(), data[i].seed.as_str()))
        .collect();
    let t: Vec<Vec<usize>> = idx.iter().map(|&i| targets[i].clone()).collect();
    let y = model.predict(&mut g, &pairs)?;
    let hits = hits_at_1(g.forward(y), &t);
    let l = g.loss(loss, y, t)?;
    let value = g.value(l).get(0, 0);
    let grads = if with_grad && value.is_finite() {
        Some(g.backward(l)?)
    } else {
        None
    };
    Ok((BatchResult { loss: value, hits }, grads))
}

/// Minibatch training. Shuffling is seeded by `config.seed`, so runs are
/// reproducible. `on_epoch` sees each epoch's metrics, and the model as it
/// stands, as each epoch completes.
pub fn train(
    model: &mut dyn Model,
    kb: &KnowledgeBase,
    data: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics, &dyn Model),
) -> Result<Vec<EpochMetrics>> {
    if data.is_empty() {
        return Err(NqlError::Validation("training set is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(NqlError::Validation("batch size must be positive".into()));
    }
    let targets = target_indices(kb, model, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = config.optimizer.build(model.params());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut hits) = (0.0, 0);
        for idx in order.chunks(config.batch_size) {
            step += 1;
            let (res, grads) = run_batch(&*model, kb, data, &targets, idx, config.loss, true)?;
            if !res.loss.is_finite() {
                return Err(NqlError::Divergence {
                    epoch,
                    step,
                    loss: res.loss,
                });
            }
            let store = model.params_mut();
            store.zero_grad();
            store.accumulate(&grads.expect("finite loss has gradients"));
            opt.step(store);
            total += res.loss * idx.len() as f64;
            hits += res.hits;
        }
        let m = EpochMetrics {
            epoch,
            loss: total / data.len() as f64,
            hits_at_1: hits as f64 / data.len() as f64,
            examples: data.len(),
        };
        on_epoch(&m, &*model);
        history.push(m);
    }
    Ok(history)
}

/// Loss and hits@1 of a frozen model.
pub fn evaluate(
    model: &dyn Model,
    kb: &KnowledgeBase,
    data: &[Example],
    batch_size: usize,
    loss: LossSpec,
) -> Result<EvalMetrics> {
    if data.is_empty() {
        return Ok(EvalMetrics {
            loss: 0.0,
            hits_at_1: 0.0,
            examples: 0,
        });
    }
    let targets = target_indices(kb, model, data)?;
    let order: Vec<usize> = (0..data.len()).collect();
    let (mut total, mut hits) = (0.0, 0);
    for idx in order.chunks(batch_size.max(1)) {
        let (res, _) = run_batch(model, kb, data, &targets, idx, loss, false)?;
        total += res.loss * idx.len() as f64;
        hits += res.hits;
    }
    Ok(EvalMetrics {
        loss: total / data.len() as f64,
        hits_at_1: hits as f64 / data.len() as f64,
        examples: data.len(),
    })
}
