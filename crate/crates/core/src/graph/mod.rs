//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! Every node's value is computed when the node is created, so a graph is
//! evaluated exactly once and `forward` only looks values up. Nodes are
//! appended in topological order; `backward` walks them in reverse.

mod param;

pub(crate) use param::{sigmoid, softmax_backward, softmax_rows};
pub use param::{softplus_inverse, Constraint, Gradients, ParamId, ParamStore, Parameter};

use crate::error::{NqlError, Result, ShapeError};
use crate::kb::{KnowledgeBase, RelationDecl, RelationGroup};
use crate::learning::LossSpec;
use crate::sparse::{self, DenseBatch, SparseMatrix};

/// Handle to a typed multiset-valued node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultisetExpr(pub(crate) usize);

/// Handle to an untyped dense node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tensor(pub(crate) usize);

impl MultisetExpr {
    pub fn id(self) -> usize {
        self.0
    }
}

impl Tensor {
    pub fn id(self) -> usize {
        self.0
    }
}

pub(crate) enum Op<'kb> {
    Constant,
    Param {
        id: ParamId,
        constraint: Constraint,
        raw: DenseBatch,
    },
    View(usize),
    Rel {
        input: usize,
        rel: &'kb RelationDecl,
        inverse: bool,
    },
    WeightedRel {
        input: usize,
        weights: usize,
        matrix: SparseMatrix,
        inverse: bool,
    },
    Follow {
        input: usize,
        mix: usize,
        group: &'kb RelationGroup,
        inverse: bool,
    },
    Add(usize, usize),
    Mul(usize, usize),
    IfAny {
        s: usize,
        t: usize,
    },
    Scale {
        s: usize,
        a: usize,
    },
    MatMul {
        x: usize,
        w: usize,
    },
    Tanh(usize),
    Sigmoid(usize),
    Softmax(usize),
    OneMinus(usize),
    MeanEmbed {
        table: usize,
        tokens: Vec<Vec<usize>>,
    },
    Sum(usize),
    Loss {
        y: usize,
        targets: Vec<Vec<usize>>,
        spec: LossSpec,
    },
}

struct Node<'kb> {
    op: Op<'kb>,
    value: DenseBatch,
    ty: Option<String>,
}

/// A computation over one knowledge base.
pub struct Graph<'kb> {
    kb: &'kb KnowledgeBase,
    nodes: Vec<Node<'kb>>,
}

fn broadcast_pair(op: &'static str, a: &DenseBatch, b: &DenseBatch) -> Result<(DenseBatch, DenseBatch)> {
    let rows = a.rows().max(b.rows());
    let ok = |x: &DenseBatch| x.rows() == rows || x.rows() == 1;
    if !ok(a) || !ok(b) {
        return Err(ShapeError::new(op, a.shape_str(), b.shape_str()).into());
    }
    Ok((a.broadcast_rows(rows)?, b.broadcast_rows(rows)?))
}

fn map(x: &DenseBatch, f: impl Fn(f64) -> f64) -> DenseBatch {
    DenseBatch::from_vec(x.rows(), x.cols(), x.data().iter().map(|&v| f(v)).collect()).expect("same shape")
}

fn zip_map(x: &DenseBatch, y: &DenseBatch, f: impl Fn(f64, f64) -> f64) -> DenseBatch {
    debug_assert_eq!(x.shape(), y.shape());
    let data = x.data().iter().zip(y.data()).map(|(&a, &b)| f(a, b)).collect();
    DenseBatch::from_vec(x.rows(), x.cols(), data).expect("same shape")
}

/// Dense `x · w`.
fn matmul(x: &DenseBatch, w: &DenseBatch) -> DenseBatch {
    let (b, d, k) = (x.rows(), x.cols(), w.cols());
    let mut out = DenseBatch::zeros(b, k);
    for r in 0..b {
        let xr = x.row(r);
        let orow = out.row_mut(r);
        for (i, &xv) in xr.iter().enumerate().take(d) {
            if xv == 0.0 {
                continue;
            }
            for (o, wv) in orow.iter_mut().zip(w.row(i)) {
                *o += xv * wv;
            }
        }
    }
    out
}

/// Dense `x · wᵀ`.
fn matmul_t(x: &DenseBatch, w: &DenseBatch) -> DenseBatch {
    let mut out = DenseBatch::zeros(x.rows(), w.rows());
    for r in 0..x.rows() {
        let xr = x.row(r);
        for i in 0..w.rows() {
            let v = xr.iter().zip(w.row(i)).map(|(a, b)| a * b).sum();
            out.set(r, i, v);
        }
    }
    out
}

/// Dense `xᵀ · g`.
fn t_matmul(x: &DenseBatch, g: &DenseBatch) -> DenseBatch {
    let mut out = DenseBatch::zeros(x.cols(), g.cols());
    for r in 0..x.rows() {
        let gr = g.row(r);
        for (i, &xv) in x.row(r).iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, gv) in out.row_mut(i).iter_mut().zip(gr) {
                *o += xv * gv;
            }
        }
    }
    out
}

fn row_dots(a: &DenseBatch, b: &DenseBatch) -> DenseBatch {
    let data = (0..a.rows())
        .map(|r| a.row(r).iter().zip(b.row(r)).map(|(x, y)| x * y).sum())
        .collect();
    DenseBatch::from_vec(a.rows(), 1, data).expect("column")
}

/// Multiplies row `b` of `x` by `col[b]` (a `B × 1` batch).
fn scale_rows(x: &DenseBatch, col: &DenseBatch) -> DenseBatch {
    let mut out = x.clone();
    for b in 0..out.rows() {
        let f = col.get(b, 0);
        out.row_mut(b).iter_mut().for_each(|v| *v *= f);
    }
    out
}

impl<'kb> Graph<'kb> {
    pub fn new(kb: &'kb KnowledgeBase) -> Self {
        Graph {
            kb,
            nodes: Vec::new(),
        }
    }

    pub fn kb(&self) -> &'kb KnowledgeBase {
        self.kb
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn push(&mut self, op: Op<'kb>, value: DenseBatch, ty: Option<String>) -> usize {
        self.nodes.push(Node { op, value, ty });
        self.nodes.len() - 1
    }

    /// The memoized value of a multiset expression.
    pub fn forward(&self, root: MultisetExpr) -> &DenseBatch {
        &self.nodes[root.0].value
    }

    pub fn value(&self, t: Tensor) -> &DenseBatch {
        &self.nodes[t.0].value
    }

    pub fn type_of(&self, e: MultisetExpr) -> &str {
        self.nodes[e.0].ty.as_deref().expect("multiset nodes are typed")
    }

    /// Decodes a multiset value to entity names.
    pub fn decode(
        &self,
        e: MultisetExpr,
        top_k: Option<usize>,
        min_weight: f64,
    ) -> Result<Vec<crate::kb::DecodedSet>> {
        self.kb
            .decode(self.forward(e), self.type_of(e), top_k, min_weight)
    }

    // ----- leaves -----

    pub fn constant(&mut self, value: DenseBatch) -> Tensor {
        Tensor(self.push(Op::Constant, value, None))
    }

    /// A constant multiset; the width must match the type's cardinality.
    pub fn constant_expr(&mut self, value: DenseBatch, type_name: &str) -> Result<MultisetExpr> {
        let n = self.kb.type_decl(type_name)?.cardinality();
        if value.cols() != n {
            return Err(ShapeError::new(
                "constant",
                value.shape_str(),
                format!("type {type_name} with {n} entities"),
            )
            .into());
        }
        Ok(MultisetExpr(self.push(
            Op::Constant,
            value,
            Some(type_name.to_string()),
        )))
    }

    /// Enters the constrained value of a parameter.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Tensor {
        let p = store.get(id);
        let raw = p.raw();
        let value = p.constraint.apply(&raw);
        Tensor(self.push(
            Op::Param {
                id,
                constraint: p.constraint,
                raw,
            },
            value,
            None,
        ))
    }

    /// Singleton multiset `{name: 1}`.
    pub fn one(&mut self, name: &str, type_name: &str) -> Result<MultisetExpr> {
        self.one_batch(&[name], type_name)
    }

    /// One one-hot row per name.
    pub fn one_batch(&mut self, names: &[&str], type_name: &str) -> Result<MultisetExpr> {
        let ty = self.kb.type_decl(type_name)?;
        let idx = names.iter().map(|n| ty.index_of(n)).collect::<Result<Vec<_>>>()?;
        let value = DenseBatch::one_hot(&idx, ty.cardinality());
        self.constant_expr(value, type_name)
    }

    pub fn none(&mut self, type_name: &str) -> Result<MultisetExpr> {
        let n = self.kb.type_decl(type_name)?.cardinality();
        self.constant_expr(DenseBatch::zeros(1, n), type_name)
    }

    pub fn all(&mut self, type_name: &str) -> Result<MultisetExpr> {
        let n = self.kb.type_decl(type_name)?.cardinality();
        self.constant_expr(DenseBatch::filled(1, n, 1.0), type_name)
    }

    // ----- casts -----

    pub fn as_tensor(&self, e: MultisetExpr) -> Tensor {
        Tensor(e.0)
    }

    /// Reinterprets a dense node as a multiset of the given type.
    pub fn as_expr(&mut self, t: Tensor, type_name: &str) -> Result<MultisetExpr> {
        let n = self.kb.type_decl(type_name)?.cardinality();
        let v = &self.nodes[t.0].value;
        if v.cols() != n {
            return Err(NqlError::Type(format!(
                "tensor of width {} cannot be a multiset of type {type_name} ({n} entities)",
                v.cols()
            )));
        }
        let value = v.clone();
        Ok(MultisetExpr(self.push(
            Op::View(t.0),
            value,
            Some(type_name.to_string()),
        )))
    }

    // ----- relational operators (unchecked types) -----

    pub(crate) fn rel_node(
        &mut self,
        input: usize,
        rel: &'kb RelationDecl,
        inverse: bool,
        out_ty: &str,
    ) -> Result<usize> {
        let value = sparse::spmm_right(&self.nodes[input].value, rel.oriented(inverse))?;
        Ok(self.push(Op::Rel { input, rel, inverse }, value, Some(out_ty.to_string())))
    }

    pub(crate) fn weighted_rel_node(
        &mut self,
        input: usize,
        weights: usize,
        rel: &'kb RelationDecl,
        inverse: bool,
        out_ty: &str,
    ) -> Result<usize> {
        let w = &self.nodes[weights].value;
        if w.rows() != 1 || w.cols() != rel.matrix().nnz() {
            return Err(ShapeError::new(
                "relation weights",
                w.shape_str(),
                format!("1x{} for relation {}", rel.matrix().nnz(), rel.name()),
            )
            .into());
        }
        let matrix = rel.matrix().with_values(w.data().to_vec())?;
        let s = &self.nodes[input].value;
        let value = if inverse {
            sparse::spmm_right_transpose(s, &matrix)?
        } else {
            sparse::spmm_right(s, &matrix)?
        };
        Ok(self.push(
            Op::WeightedRel {
                input,
                weights,
                matrix,
                inverse,
            },
            value,
            Some(out_ty.to_string()),
        ))
    }

    pub(crate) fn follow_node(
        &mut self,
        input: usize,
        mix: usize,
        group: &'kb RelationGroup,
        inverse: bool,
        out_ty: &str,
    ) -> Result<usize> {
        let (s, r) = broadcast_pair("follow", &self.nodes[input].value, &self.nodes[mix].value)?;
        let value = sparse::weighted_sum_matvec(&s, &r, &group.matrices(inverse))?;
        Ok(self.push(
            Op::Follow {
                input,
                mix,
                group,
                inverse,
            },
            value,
            Some(out_ty.to_string()),
        ))
    }

    pub(crate) fn add_node(&mut self, a: usize, b: usize, ty: Option<String>) -> Result<usize> {
        let (x, y) = broadcast_pair("add", &self.nodes[a].value, &self.nodes[b].value)?;
        if x.cols() != y.cols() {
            return Err(ShapeError::new("add", x.shape_str(), y.shape_str()).into());
        }
        let value = sparse::add(&x, &y)?;
        Ok(self.push(Op::Add(a, b), value, ty))
    }

    pub(crate) fn mul_node(&mut self, a: usize, b: usize, ty: Option<String>) -> Result<usize> {
        let (x, y) = broadcast_pair("multiply", &self.nodes[a].value, &self.nodes[b].value)?;
        if x.cols() != y.cols() {
            return Err(ShapeError::new("multiply", x.shape_str(), y.shape_str()).into());
        }
        let value = sparse::hadamard(&x, &y)?;
        Ok(self.push(Op::Mul(a, b), value, ty))
    }

    pub(crate) fn if_any_node(&mut self, s: usize, t: usize) -> Result<usize> {
        let totals = sparse::row_sum(&self.nodes[t].value);
        let (x, f) = broadcast_pair("if_any", &self.nodes[s].value, &totals)?;
        let value = scale_rows(&x, &f);
        let ty = self.nodes[s].ty.clone();
        Ok(self.push(Op::IfAny { s, t }, value, ty))
    }

    pub(crate) fn scale_node(&mut self, s: usize, a: usize) -> Result<usize> {
        let av = &self.nodes[a].value;
        if av.cols() != 1 {
            return Err(ShapeError::new("scale", self.nodes[s].value.shape_str(), av.shape_str()).into());
        }
        let (x, f) = broadcast_pair("scale", &self.nodes[s].value, av)?;
        let value = scale_rows(&x, &f);
        let ty = self.nodes[s].ty.clone();
        Ok(self.push(Op::Scale { s, a }, value, ty))
    }

    // ----- dense operators -----

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.add_node(a.0, b.0, None).map(Tensor)
    }

    /// Elementwise product with row broadcasting.
    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.mul_node(a.0, b.0, None).map(Tensor)
    }

    /// Multiplies each row of `x` by the matching entry of the `B × 1`
    /// (or `1 × 1`) tensor `a`.
    pub fn scale_by(&mut self, x: Tensor, a: Tensor) -> Result<Tensor> {
        self.scale_node(x.0, a.0).map(Tensor)
    }

    pub fn matmul(&mut self, x: Tensor, w: Tensor) -> Result<Tensor> {
        let (xv, wv) = (&self.nodes[x.0].value, &self.nodes[w.0].value);
        if xv.cols() != wv.rows() {
            return Err(ShapeError::new("matmul", xv.shape_str(), wv.shape_str()).into());
        }
        let value = matmul(xv, wv);
        Ok(Tensor(self.push(Op::MatMul { x: x.0, w: w.0 }, value, None)))
    }

    pub fn tanh(&mut self, x: Tensor) -> Tensor {
        let value = map(&self.nodes[x.0].value, f64::tanh);
        Tensor(self.push(Op::Tanh(x.0), value, None))
    }

    pub fn sigmoid(&mut self, x: Tensor) -> Tensor {
        let value = map(&self.nodes[x.0].value, sigmoid);
        Tensor(self.push(Op::Sigmoid(x.0), value, None))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Tensor) -> Tensor {
        let value = softmax_rows(&self.nodes[x.0].value);
        Tensor(self.push(Op::Softmax(x.0), value, None))
    }

    /// `1 - x`.
    pub fn one_minus(&mut self, x: Tensor) -> Tensor {
        let value = map(&self.nodes[x.0].value, |v| 1.0 - v);
        Tensor(self.push(Op::OneMinus(x.0), value, None))
    }

    /// Sum of all entries, as `1 × 1`.
    pub fn sum(&mut self, x: Tensor) -> Tensor {
        let total = self.nodes[x.0].value.data().iter().sum();
        Tensor(self.push(Op::Sum(x.0), DenseBatch::scalar(total), None))
    }

    /// Row `b` of the output is the mean of `table` rows listed in
    /// `tokens[b]`; an empty list gives a zero row.
    pub fn mean_embed(&mut self, table: Tensor, tokens: Vec<Vec<usize>>) -> Result<Tensor> {
        let tv = &self.nodes[table.0].value;
        let mut value = DenseBatch::zeros(tokens.len(), tv.cols());
        for (b, toks) in tokens.iter().enumerate() {
            if toks.is_empty() {
                continue;
            }
            let inv = 1.0 / toks.len() as f64;
            let row = value.row_mut(b);
            for &t in toks {
                if t >= tv.rows() {
                    return Err(
                        ShapeError::new("embedding lookup", tv.shape_str(), format!("token {t}")).into(),
                    );
                }
                for (o, v) in row.iter_mut().zip(tv.row(t)) {
                    *o += v * inv;
                }
            }
        }
        Ok(Tensor(self.push(
            Op::MeanEmbed {
                table: table.0,
                tokens,
            },
            value,
            None,
        )))
    }

    pub(crate) fn loss_node(&mut self, y: usize, targets: Vec<Vec<usize>>, spec: LossSpec) -> Result<Tensor> {
        let value = spec.value(&self.nodes[y].value, &targets)?;
        Ok(Tensor(self.push(
            Op::Loss { y, targets, spec },
            DenseBatch::scalar(value),
            None,
        )))
    }

    // ----- differentiation -----

    /// Gradients of a `1 × 1` node with respect to every parameter that
    /// reaches it.
    pub fn backward(&self, loss: Tensor) -> Result<Gradients> {
        let root = loss.0;
        if root >= self.nodes.len() {
            return Err(NqlError::Usage("backward: node is not part of this graph".into()));
        }
        if self.nodes[root].value.shape() != (1, 1) {
            return Err(NqlError::Usage(format!(
                "backward needs a scalar (1x1) node, got {}",
                self.nodes[root].value.shape_str()
            )));
        }
        let mut adj: Vec<Option<DenseBatch>> = (0..=root).map(|_| None).collect();
        adj[root] = Some(DenseBatch::scalar(1.0));
        let mut grads = Gradients::default();
        for id in (0..=root).rev() {
            let Some(g) = adj[id].take() else { continue };
            let node = &self.nodes[id];
            let value = &node.value;
            let mut send = |target: usize, grad: DenseBatch| {
                let want = self.nodes[target].value.rows();
                let grad = if grad.rows() != want {
                    grad.reduce_rows(want)
                } else {
                    grad
                };
                match &mut adj[target] {
                    Some(acc) => acc.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            };
            let val = |i: usize| &self.nodes[i].value;
            match &node.op {
                Op::Constant => {}
                Op::Param { id, constraint, raw } => {
                    let graw = constraint.backward(raw, value, &g);
                    grads.add(*id, graw.data());
                }
                Op::View(src) => send(*src, g),
                Op::Rel { input, rel, inverse } => {
                    send(*input, sparse::spmm_right(&g, rel.oriented(!inverse))?);
                }
                Op::WeightedRel {
                    input,
                    weights,
                    matrix,
                    inverse,
                } => {
                    let s = val(*input);
                    let (gs, gw) = if *inverse {
                        (
                            sparse::spmm_right(&g, matrix)?,
                            sparse::entry_gradients(&g, matrix, s)?,
                        )
                    } else {
                        (
                            sparse::spmm_right_transpose(&g, matrix)?,
                            sparse::entry_gradients(s, matrix, &g)?,
                        )
                    };
                    send(*input, gs);
                    let n = gw.len();
                    send(*weights, DenseBatch::from_vec(1, n, gw)?);
                }
                Op::Follow {
                    input,
                    mix,
                    group,
                    inverse,
                } => {
                    let (s, r) = broadcast_pair("follow", val(*input), val(*mix))?;
                    send(
                        *input,
                        sparse::weighted_sum_matvec(&g, &r, &group.matrices(!inverse))?,
                    );
                    let mats = group.matrices(*inverse);
                    let mut gr = DenseBatch::zeros(s.rows(), mats.len());
                    for (i, m) in mats.iter().enumerate() {
                        for (b, v) in sparse::bilinear_rows(&s, m, &g)?.into_iter().enumerate() {
                            gr.set(b, i, v);
                        }
                    }
                    send(*mix, gr);
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Mul(a, b) => {
                    let (x, y) = broadcast_pair("multiply", val(*a), val(*b))?;
                    send(*a, sparse::hadamard(&g, &y)?);
                    send(*b, sparse::hadamard(&g, &x)?);
                }
                Op::IfAny { s, t } => {
                    let totals = sparse::row_sum(val(*t));
                    let (x, f) = broadcast_pair("if_any", val(*s), &totals)?;
                    send(*s, scale_rows(&g, &f));
                    let dots = row_dots(&g, &x);
                    let n = val(*t).cols();
                    let mut gt = DenseBatch::zeros(dots.rows(), n);
                    for b in 0..dots.rows() {
                        let d = dots.get(b, 0);
                        gt.row_mut(b).iter_mut().for_each(|v| *v = d);
                    }
                    send(*t, gt);
                }
                Op::Scale { s, a } => {
                    let (x, f) = broadcast_pair("scale", val(*s), val(*a))?;
                    send(*s, scale_rows(&g, &f));
                    send(*a, row_dots(&g, &x));
                }
                Op::MatMul { x, w } => {
                    send(*x, matmul_t(&g, val(*w)));
                    send(*w, t_matmul(val(*x), &g));
                }
                Op::Tanh(x) => send(*x, zip_map(&g, value, |gv, y| gv * (1.0 - y * y))),
                Op::Sigmoid(x) => send(*x, zip_map(&g, value, |gv, y| gv * y * (1.0 - y))),
                Op::Softmax(x) => send(*x, softmax_backward(value, &g)),
                Op::OneMinus(x) => send(*x, map(&g, |v| -v)),
                Op::Sum(x) => {
                    let (r, c) = val(*x).shape();
                    send(*x, DenseBatch::filled(r, c, g.get(0, 0)));
                }
                Op::MeanEmbed { table, tokens } => {
                    let (r, c) = val(*table).shape();
                    let mut gt = DenseBatch::zeros(r, c);
                    for (b, toks) in tokens.iter().enumerate() {
                        if toks.is_empty() {
                            continue;
                        }
                        let inv = 1.0 / toks.len() as f64;
                        for &t in toks {
                            for (o, v) in gt.row_mut(t).iter_mut().zip(g.row(b)) {
                                *o += v * inv;
                            }
                        }
                    }
                    send(*table, gt);
                }
                Op::Loss { y, targets, spec } => {
                    let gy = spec.gradient(val(*y), targets)?;
                    send(*y, sparse::scale(&gy, g.get(0, 0)));
                }
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_helpers() {
        let x = DenseBatch::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = DenseBatch::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.5, 1.0, 0.0]]).unwrap();
        let y = matmul(&x, &w);
        assert_eq!(y.data(), &[2.0, 2.0, 2.0, 5.0, 4.0, 6.0]);
        let wt = DenseBatch::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(matmul_t(&x, &wt).data(), y.data());
        let g = t_matmul(&x, &y);
        assert_eq!(g.shape(), (2, 3));
        assert_eq!(g.get(0, 0), 1.0 * 2.0 + 3.0 * 5.0);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let kb = KnowledgeBase::default();
        let mut g = Graph::new(&kb);
        let t = g.constant(DenseBatch::zeros(2, 2));
        assert!(matches!(g.backward(t), Err(NqlError::Usage(_))));
    }

    #[test]
    fn sum_of_product_gradient() {
        let kb = KnowledgeBase::default();
        let mut store = ParamStore::new();
        let id = store
            .add("w", 1, 3, vec![1.0, 2.0, 3.0], Constraint::Identity)
            .unwrap();
        let mut g = Graph::new(&kb);
        let w = g.param(&store, id);
        let x = g.constant(DenseBatch::from_rows(&[vec![1.0, 1.0, 1.0], vec![0.0, 2.0, 0.0]]).unwrap());
        let p = g.mul(x, w).unwrap();
        let s = g.sum(p);
        assert_eq!(g.value(s).get(0, 0), 1.0 + 2.0 + 3.0 + 4.0);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(id).unwrap(), &[1.0, 3.0, 1.0]);
    }
}
