use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NqlError, Result, ShapeError};
use crate::kb::KnowledgeBase;
use crate::sparse::DenseBatch;

/// Transform applied to a parameter's raw values before they enter a graph.
/// Softmax normalizes each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    #[default]
    Identity,
    Softmax,
    Softplus,
    Sigmoid,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Raw value whose softplus is `y` (for `y > 0`).
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

pub(crate) fn softmax_rows(x: &DenseBatch) -> DenseBatch {
    let mut out = x.clone();
    for b in 0..out.rows() {
        let row = out.row_mut(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    out
}

/// Vector-Jacobian product of row softmax, given its output `y`.
pub(crate) fn softmax_backward(y: &DenseBatch, g: &DenseBatch) -> DenseBatch {
    let mut out = DenseBatch::zeros(y.rows(), y.cols());
    for b in 0..y.rows() {
        let (yr, gr) = (y.row(b), g.row(b));
        let dot: f64 = yr.iter().zip(gr).map(|(a, c)| a * c).sum();
        for (o, (yv, gv)) in out.row_mut(b).iter_mut().zip(yr.iter().zip(gr)) {
            *o = yv * (gv - dot);
        }
    }
    out
}

impl Constraint {
    pub fn apply(self, raw: &DenseBatch) -> DenseBatch {
        let map = |f: fn(f64) -> f64| {
            DenseBatch::from_vec(raw.rows(), raw.cols(), raw.data().iter().map(|&v| f(v)).collect())
                .expect("same shape")
        };
        match self {
            Constraint::Identity => raw.clone(),
            Constraint::Softmax => softmax_rows(raw),
            Constraint::Softplus => map(softplus),
            Constraint::Sigmoid => map(sigmoid),
        }
    }

    /// Gradient with respect to raw values, given the constrained output and
    /// the gradient with respect to it.
    pub fn backward(self, raw: &DenseBatch, out: &DenseBatch, g: &DenseBatch) -> DenseBatch {
        let zip = |f: &dyn Fn(f64, f64, f64) -> f64| {
            let data = raw
                .data()
                .iter()
                .zip(out.data())
                .zip(g.data())
                .map(|((&r, &o), &gv)| f(r, o, gv))
                .collect();
            DenseBatch::from_vec(raw.rows(), raw.cols(), data).expect("same shape")
        };
        match self {
            Constraint::Identity => g.clone(),
            Constraint::Softmax => softmax_backward(out, g),
            Constraint::Softplus => zip(&|r, _, gv| gv * sigmoid(r)),
            Constraint::Sigmoid => zip(&|_, o, gv| gv * o * (1.0 - o)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A trainable `rows × cols` array with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
    pub constraint: Constraint,
}

impl Parameter {
    pub fn raw(&self) -> DenseBatch {
        DenseBatch::from_vec(self.rows, self.cols, self.values.clone()).expect("consistent shape")
    }

    /// The view that enters a graph.
    pub fn constrained(&self) -> DenseBatch {
        self.constraint.apply(&self.raw())
    }
}

/// Owns all parameters of one model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        constraint: Constraint,
    ) -> Result<ParamId> {
        if values.len() != rows * cols {
            return Err(ShapeError::new(
                "parameter",
                format!("{name} {rows}x{cols}"),
                format!("{} values", values.len()),
            )
            .into());
        }
        if self.by_name(name).is_some() {
            return Err(NqlError::Validation(format!("parameter `{name}` already exists")));
        }
        self.params.push(Parameter {
            name: name.to_string(),
            rows,
            cols,
            grad: vec![0.0; values.len()],
            values,
            constraint,
        });
        Ok(ParamId(self.params.len() - 1))
    }

    /// Registers the stored weights of a relation as a trainable vector of
    /// length `nnz`, in matrix storage order. With `Softplus`, the raw values
    /// are chosen so the constrained weights start at the stored ones.
    pub fn add_relation_weights(
        &mut self,
        kb: &KnowledgeBase,
        relation: &str,
        constraint: Constraint,
    ) -> Result<ParamId> {
        let rel = kb.relation(relation)?;
        let values: Vec<f64> = rel
            .matrix()
            .values()
            .iter()
            .map(|&w| match constraint {
                Constraint::Identity => w,
                Constraint::Softplus => softplus_inverse(w.max(1e-12)),
                other => panic!("constraint {other:?} cannot represent relation weights"),
            })
            .collect();
        let n = values.len();
        self.add(&format!("relation:{relation}"), 1, n, values, constraint)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar values.
    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn accumulate(&mut self, grads: &Gradients) {
        for (id, g) in &grads.map {
            for (acc, v) in self.params[id.0].grad.iter_mut().zip(g) {
                *acc += v;
            }
        }
    }

    /// Replaces values from another store with identical names and shapes.
    pub fn load_values(&mut self, other: &ParamStore) -> Result<()> {
        for p in &mut self.params {
            let src = other
                .params
                .iter()
                .find(|q| q.name == p.name)
                .ok_or_else(|| NqlError::Checkpoint(format!("missing parameter `{}`", p.name)))?;
            if (src.rows, src.cols) != (p.rows, p.cols) {
                return Err(ShapeError::new(
                    "load parameter",
                    format!("`{}` expects {}x{}", p.name, p.rows, p.cols),
                    format!("checkpoint has {}x{}", src.rows, src.cols),
                )
                .into());
            }
            if src.constraint != p.constraint {
                return Err(NqlError::Checkpoint(format!(
                    "parameter `{}` has constraint {:?}, checkpoint has {:?}",
                    p.name, p.constraint, src.constraint
                )));
            }
            p.values.clone_from(&src.values);
        }
        Ok(())
    }

    pub(crate) fn from_params(params: Vec<Parameter>) -> Self {
        ParamStore { params }
    }
}

/// Raw-value gradients produced by one backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub(crate) map: BTreeMap<ParamId, Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.map.get(&id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.map.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub(crate) fn add(&mut self, id: ParamId, g: &[f64]) {
        let slot = self.map.entry(id).or_insert_with(|| vec![0.0; g.len()]);
        for (a, b) in slot.iter_mut().zip(g) {
            *a += b;
        }
    }
}
