use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{Affine, QueryEncoder, Vocabulary};
use crate::error::{NqlError, Result};
use crate::graph::{softplus_inverse, Constraint, Graph, MultisetExpr, ParamId, ParamStore, Tensor};
use crate::kb::{KnowledgeBase, RelationGroup};
use crate::sparse::DenseBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Template,
    Qa,
    Multihop,
    Recurrent,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Template,
        ModelKind::Qa,
        ModelKind::Multihop,
        ModelKind::Recurrent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Template => "template",
            ModelKind::Qa => "qa",
            ModelKind::Multihop => "multihop",
            ModelKind::Recurrent => "recurrent",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = NqlError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                NqlError::Usage(format!(
                    "unknown model `{s}` (expected template, qa, multihop or recurrent)"
                ))
            })
    }
}

/// What to do with the halting mass left after the last hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Leftover {
    #[default]
    Drop,
    AddToLast,
}

/// Everything besides parameter values needed to rebuild a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub group: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_max_hops")]
    pub max_hops: usize,
    #[serde(default)]
    pub leftover: Leftover,
    /// Constraint on template relation variables.
    #[serde(default = "default_relation_constraint")]
    pub relation_constraint: Constraint,
    /// Encoder vocabulary, excluding the unknown slot.
    #[serde(default)]
    pub vocab: Vec<String>,
}

fn default_dim() -> usize {
    32
}

fn default_max_hops() -> usize {
    5
}

fn default_relation_constraint() -> Constraint {
    Constraint::Softplus
}

impl ModelConfig {
    pub fn new(kind: ModelKind, group: &str) -> Self {
        ModelConfig {
            kind,
            group: group.to_string(),
            dim: default_dim(),
            max_hops: default_max_hops(),
            leftover: Leftover::Drop,
            relation_constraint: default_relation_constraint(),
            vocab: Vec::new(),
        }
    }
}

/// A trainable question-answering model over one relation group.
pub trait Model {
    fn config(&self) -> &ModelConfig;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;

    /// Predicted answers for `(question, seed entity)` pairs.
    fn predict<'kb>(&self, g: &mut Graph<'kb>, batch: &[(&str, &str)]) -> Result<MultisetExpr>;

    fn kind(&self) -> ModelKind {
        self.config().kind
    }
}

fn chain_group<'kb>(kb: &'kb KnowledgeBase, name: &str) -> Result<&'kb RelationGroup> {
    let group = kb
        .group(name)
        .ok_or_else(|| NqlError::Validation(format!("unknown relation group `{name}`")))?;
    if group.domain() != group.range() {
        return Err(NqlError::Type(format!(
            "group `{name}` maps {} to {}; chained models need equal domain and range",
            group.domain(),
            group.range()
        )));
    }
    Ok(group)
}

/// One-hot seeds; unknown names fall back to the type's OOV entity.
pub fn seed_batch(g: &mut Graph<'_>, type_name: &str, seeds: &[&str]) -> Result<MultisetExpr> {
    let ty = g.kb().type_decl(type_name)?;
    let idx = seeds
        .iter()
        .map(|s| {
            ty.lookup(s).ok_or_else(|| NqlError::UnknownEntity {
                name: s.to_string(),
                type_name: type_name.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = DenseBatch::one_hot(&idx, ty.cardinality());
    g.constant_expr(value, type_name)
}

fn group_domain<'kb>(g: &Graph<'kb>, group: &str) -> Result<&'kb str> {
    Ok(chain_group(g.kb(), group)?.domain())
}

/// `y = x.follow(r1).follow(r2) | x.follow(r3).follow(r4)` with four
/// trainable multisets over the group.
#[derive(Debug, Clone)]
pub struct TemplateModel {
    config: ModelConfig,
    params: ParamStore,
    pub r: [ParamId; 4],
}

impl TemplateModel {
    pub fn new(kb: &KnowledgeBase, group: &str, constraint: Constraint) -> Result<Self> {
        let k = chain_group(kb, group)?.len();
        let init = match constraint {
            Constraint::Softplus => softplus_inverse(1.0),
            Constraint::Softmax | Constraint::Identity => 1.0,
            Constraint::Sigmoid => {
                return Err(NqlError::Validation(
                    "template relation variables take softplus, softmax or identity".into(),
                ))
            }
        };
        let mut params = ParamStore::new();
        let mut ids = Vec::with_capacity(4);
        for i in 1..=4 {
            ids.push(params.add(&format!("r{i}"), 1, k, vec![init; k], constraint)?);
        }
        let mut config = ModelConfig::new(ModelKind::Template, group);
        config.relation_constraint = constraint;
        Ok(TemplateModel {
            config,
            params,
            r: [ids[0], ids[1], ids[2], ids[3]],
        })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: MultisetExpr) -> Result<MultisetExpr> {
        let group = &self.config.group;
        let mut r = Vec::with_capacity(4);
        for id in self.r {
            let t = g.param(&self.params, id);
            r.push(g.as_expr(t, group)?);
        }
        let a = g.follow(x, r[0], false)?;
        let a = g.follow(a, r[1], false)?;
        let b = g.follow(x, r[2], false)?;
        let b = g.follow(b, r[3], false)?;
        g.union(a, b)
    }

    /// Constrained value of `r{i+1}`.
    pub fn relation_weights(&self, i: usize) -> Vec<f64> {
        self.params.get(self.r[i]).constrained().into_vec()
    }
}

impl Model for TemplateModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn predict<'kb>(&self, g: &mut Graph<'kb>, batch: &[(&str, &str)]) -> Result<MultisetExpr> {
        let dom = group_domain(g, &self.config.group)?;
        let seeds: Vec<&str> = batch.iter().map(|(_, s)| *s).collect();
        let x = seed_batch(g, dom, &seeds)?;
        self.forward(g, x)
    }
}

fn new_encoder(params: &mut ParamStore, config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<QueryEncoder> {
    if config.dim == 0 {
        return Err(NqlError::Validation("encoder dimension must be positive".into()));
    }
    let vocab = Vocabulary::from_words(config.vocab.clone());
    QueryEncoder::new(params, vocab, config.dim, rng)
}

/// `y = e.follow(softmax(f(q)))`.
#[derive(Debug, Clone)]
pub struct QaModel {
    config: ModelConfig,
    params: ParamStore,
    pub encoder: QueryEncoder,
    pub head: Affine,
}

impl QaModel {
    pub fn new(kb: &KnowledgeBase, config: ModelConfig, seed: u64) -> Result<Self> {
        let k = chain_group(kb, &config.group)?.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let encoder = new_encoder(&mut params, &config, &mut rng)?;
        let head = Affine::new(&mut params, "relation", config.dim, k, &mut rng)?;
        Ok(QaModel {
            config: ModelConfig {
                kind: ModelKind::Qa,
                ..config
            },
            params,
            encoder,
            head,
        })
    }

    /// Relation mixture as a group-typed multiset, from encodings `h`.
    pub fn relation(&self, g: &mut Graph<'_>, h: Tensor) -> Result<MultisetExpr> {
        let logits = self.head.apply(g, &self.params, h)?;
        let r = g.softmax(logits);
        g.as_expr(r, &self.config.group)
    }
}

impl Model for QaModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn predict<'kb>(&self, g: &mut Graph<'kb>, batch: &[(&str, &str)]) -> Result<MultisetExpr> {
        let dom = group_domain(g, &self.config.group)?;
        let h = self.encoder.encode(g, &self.params, batch)?;
        let seeds: Vec<&str> = batch.iter().map(|(_, s)| *s).collect();
        let e = seed_batch(g, dom, &seeds)?;
        let r = self.relation(g, h)?;
        g.follow(e, r, false)
    }
}

/// `y = e.follow(r1) * switch1 | e.follow(r1).follow(r2) * switch2`.
#[derive(Debug, Clone)]
pub struct MultihopModel {
    config: ModelConfig,
    params: ParamStore,
    pub encoder: QueryEncoder,
    pub rel1: Affine,
    pub rel2: Affine,
    pub switch1: Affine,
    pub switch2: Affine,
}

/// Intermediate values of one multihop forward pass.
#[derive(Debug, Clone, Copy)]
pub struct MultihopParts {
    pub r1: MultisetExpr,
    pub r2: MultisetExpr,
    pub switch1: Tensor,
    pub switch2: Tensor,
}

impl MultihopModel {
    pub fn new(kb: &KnowledgeBase, config: ModelConfig, seed: u64) -> Result<Self> {
        let k = chain_group(kb, &config.group)?.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let encoder = new_encoder(&mut params, &config, &mut rng)?;
        let d = config.dim;
        let rel1 = Affine::new(&mut params, "relation1", d, k, &mut rng)?;
        let rel2 = Affine::new(&mut params, "relation2", d, k, &mut rng)?;
        let switch1 = Affine::new(&mut params, "switch1", d, 1, &mut rng)?;
        let switch2 = Affine::new(&mut params, "switch2", d, 1, &mut rng)?;
        Ok(MultihopModel {
            config: ModelConfig {
                kind: ModelKind::Multihop,
                ..config
            },
            params,
            encoder,
            rel1,
            rel2,
            switch1,
            switch2,
        })
    }

    pub fn parts(&self, g: &mut Graph<'_>, h: Tensor) -> Result<MultihopParts> {
        let group = &self.config.group;
        let l1 = self.rel1.apply(g, &self.params, h)?;
        let p1 = g.softmax(l1);
        let r1 = g.as_expr(p1, group)?;
        let l2 = self.rel2.apply(g, &self.params, h)?;
        let p2 = g.softmax(l2);
        let r2 = g.as_expr(p2, group)?;
        let s1 = self.switch1.apply(g, &self.params, h)?;
        let switch1 = g.sigmoid(s1);
        let s2 = self.switch2.apply(g, &self.params, h)?;
        let switch2 = g.sigmoid(s2);
        Ok(MultihopParts {
            r1,
            r2,
            switch1,
            switch2,
        })
    }

    /// The gated union for given relation mixtures and switches.
    pub fn combine(g: &mut Graph<'_>, e: MultisetExpr, parts: MultihopParts) -> Result<MultisetExpr> {
        let one = g.follow(e, parts.r1, false)?;
        let two = g.follow(one, parts.r2, false)?;
        let a = g.gate(one, parts.switch1)?;
        let b = g.gate(two, parts.switch2)?;
        g.union(a, b)
    }
}

impl Model for MultihopModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn predict<'kb>(&self, g: &mut Graph<'kb>, batch: &[(&str, &str)]) -> Result<MultisetExpr> {
        let dom = group_domain(g, &self.config.group)?;
        let h = self.encoder.encode(g, &self.params, batch)?;
        let seeds: Vec<&str> = batch.iter().map(|(_, s)| *s).collect();
        let e = seed_batch(g, dom, &seeds)?;
        let parts = self.parts(g, h)?;
        Self::combine(g, e, parts)
    }
}

/// Recurrent hop model: at each step the state is updated, a relation
/// mixture and stop probability are read from it, and the current set is
/// followed once. Predictions accumulate `p · p_stop · e`.
#[derive(Debug, Clone)]
pub struct RecurrentHopModel {
    config: ModelConfig,
    params: ParamStore,
    pub encoder: QueryEncoder,
    pub cell: Affine,
    pub relation: Affine,
    pub stop: Affine,
    /// Per-step replacement for the stop probability, for probing.
    pub stop_override: Vec<Option<f64>>,
}

/// Per-step values of one recurrent forward pass.
#[derive(Debug, Clone)]
pub struct RecurrentTrace {
    pub y: MultisetExpr,
    /// The set after each hop.
    pub hops: Vec<MultisetExpr>,
    pub relations: Vec<MultisetExpr>,
    pub stops: Vec<Tensor>,
    /// `p_{i-1} · p_stop_i` for each step.
    pub coefficients: Vec<Tensor>,
    /// Halting mass remaining after the last step.
    pub remaining: Tensor,
}

impl RecurrentHopModel {
    pub fn new(kb: &KnowledgeBase, config: ModelConfig, seed: u64) -> Result<Self> {
        if config.max_hops == 0 {
            return Err(NqlError::Validation("max hops must be at least 1".into()));
        }
        let k = chain_group(kb, &config.group)?.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let encoder = new_encoder(&mut params, &config, &mut rng)?;
        let d = config.dim;
        let cell = Affine::new(&mut params, "cell", d, d, &mut rng)?;
        let relation = Affine::new(&mut params, "relation", d, k, &mut rng)?;
        let stop = Affine::new(&mut params, "stop", d, 1, &mut rng)?;
        Ok(RecurrentHopModel {
            config: ModelConfig {
                kind: ModelKind::Recurrent,
                ..config
            },
            params,
            encoder,
            cell,
            relation,
            stop,
            stop_override: Vec::new(),
        })
    }

    pub fn max_hops(&self) -> usize {
        self.config.max_hops
    }

    /// Runs the hop loop from state `s0` and seed set `e`.
    pub fn trace(&self, g: &mut Graph<'_>, s0: Tensor, e: MultisetExpr) -> Result<RecurrentTrace> {
        let rows = g.value(s0).rows();
        let mut s = s0;
        let mut e = e;
        let mut p = g.constant(DenseBatch::filled(rows, 1, 1.0));
        let mut y: Option<MultisetExpr> = None;
        let mut trace = RecurrentTrace {
            y: e,
            hops: Vec::new(),
            relations: Vec::new(),
            stops: Vec::new(),
            coefficients: Vec::new(),
            remaining: p,
        };
        for step in 0..self.config.max_hops {
            let pre = self.cell.apply(g, &self.params, s)?;
            s = g.tanh(pre);
            let logits = self.relation.apply(g, &self.params, s)?;
            let r = g.softmax(logits);
            let r = g.as_expr(r, &self.config.group)?;
            let p_stop = match self.stop_override.get(step).copied().flatten() {
                Some(v) => g.constant(DenseBatch::filled(rows, 1, v)),
                None => {
                    let l = self.stop.apply(g, &self.params, s)?;
                    g.sigmoid(l)
                }
            };
            e = g.follow(e, r, false)?;
            let coef = g.mul(p, p_stop)?;
            let term = g.gate(e, coef)?;
            y = Some(match y {
                None => term,
                Some(acc) => g.union(acc, term)?,
            });
            let keep = g.one_minus(p_stop);
            p = g.mul(p, keep)?;
            trace.hops.push(e);
            trace.relations.push(r);
            trace.stops.push(p_stop);
            trace.coefficients.push(coef);
        }
        let mut y = y.expect("at least one hop");
        if self.config.leftover == Leftover::AddToLast {
            let term = g.gate(e, p)?;
            y = g.union(y, term)?;
        }
        trace.y = y;
        trace.remaining = p;
        check_halting(g, &trace)?;
        Ok(trace)
    }
}

/// Every step coefficient lies in `[0, 1]` and the coefficients plus the
/// remaining mass sum to one per row.
fn check_halting(g: &Graph<'_>, trace: &RecurrentTrace) -> Result<()> {
    let rows = g.value(trace.remaining).rows();
    for b in 0..rows {
        let mut total = g.value(trace.remaining).get(b, 0);
        for c in &trace.coefficients {
            let v = g.value(*c).get(b, 0);
            if !(0.0..=1.0).contains(&v) {
                return Err(NqlError::Validation(format!(
                    "halting coefficient {v} outside [0, 1] in row {b}"
                )));
            }
            total += v;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(NqlError::Validation(format!(
                "halting mass sums to {total} in row {b}"
            )));
        }
    }
    Ok(())
}

impl Model for RecurrentHopModel {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn predict<'kb>(&self, g: &mut Graph<'kb>, batch: &[(&str, &str)]) -> Result<MultisetExpr> {
        let dom = group_domain(g, &self.config.group)?;
        let h = self.encoder.encode(g, &self.params, batch)?;
        let seeds: Vec<&str> = batch.iter().map(|(_, s)| *s).collect();
        let e = seed_batch(g, dom, &seeds)?;
        Ok(self.trace(g, h, e)?.y)
    }
}

/// Builds a freshly initialized model of `config.kind`.
pub fn build_model(kb: &KnowledgeBase, config: ModelConfig, seed: u64) -> Result<Box<dyn Model>> {
    Ok(match config.kind {
        ModelKind::Template => Box::new(TemplateModel::new(kb, &config.group, config.relation_constraint)?),
        ModelKind::Qa => Box::new(QaModel::new(kb, config, seed)?),
        ModelKind::Multihop => Box::new(MultihopModel::new(kb, config, seed)?),
        ModelKind::Recurrent => Box::new(RecurrentHopModel::new(kb, config, seed)?),
    })
}

/// Rebuilds a model and loads saved parameter values into it.
pub fn restore_model(kb: &KnowledgeBase, config: ModelConfig, params: &ParamStore) -> Result<Box<dyn Model>> {
    let mut model = build_model(kb, config, 0)?;
    model.params_mut().load_values(params)?;
    Ok(model)
}
