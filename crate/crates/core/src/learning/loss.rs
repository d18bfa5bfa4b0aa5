use serde::{Deserialize, Serialize};

use crate::error::{NqlError, Result, ShapeError};
use crate::graph::{Graph, MultisetExpr, Tensor};
use crate::sparse::DenseBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `-log((Σ_{j∈T} y_j + ε) / (Σ_j y_j + εN))`, averaged over rows.
    #[default]
    TargetMass,
    /// Per-entity binary cross-entropy on `y` clamped to `[ε, 1-ε]`.
    BinaryCrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub epsilon: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            kind: LossKind::TargetMass,
            epsilon: 1e-8,
        }
    }
}

fn check(y: &DenseBatch, targets: &[Vec<usize>]) -> Result<()> {
    if targets.len() != y.rows() {
        return Err(ShapeError::new("loss", y.shape_str(), format!("{} target sets", targets.len())).into());
    }
    for (b, t) in targets.iter().enumerate() {
        if t.is_empty() {
            return Err(NqlError::Validation(format!("empty target set in batch row {b}")));
        }
        if let Some(&j) = t.iter().find(|&&j| j >= y.cols()) {
            return Err(NqlError::Validation(format!(
                "target index {j} out of range for {} entities",
                y.cols()
            )));
        }
    }
    Ok(())
}

/// Sorted, deduplicated copy, so repeated targets count once.
fn unique(t: &[usize]) -> Vec<usize> {
    let mut t = t.to_vec();
    t.sort_unstable();
    t.dedup();
    t
}

impl LossSpec {
    pub fn target_mass() -> Self {
        Self::default()
    }

    pub fn bce() -> Self {
        LossSpec {
            kind: LossKind::BinaryCrossEntropy,
            epsilon: 1e-7,
        }
    }

    pub fn value(&self, y: &DenseBatch, targets: &[Vec<usize>]) -> Result<f64> {
        check(y, targets)?;
        let eps = self.epsilon;
        let n = y.cols() as f64;
        let rows = y.rows() as f64;
        let mut total = 0.0;
        for (b, t) in targets.iter().enumerate() {
            let row = y.row(b);
            let t = unique(t);
            total += match self.kind {
                LossKind::TargetMass => {
                    let s: f64 = row.iter().sum();
                    let tm: f64 = t.iter().map(|&j| row[j]).sum();
                    (s + eps * n).ln() - (tm + eps).ln()
                }
                LossKind::BinaryCrossEntropy => {
                    let mut l = 0.0;
                    let mut k = 0;
                    for (j, &v) in row.iter().enumerate() {
                        let p = v.clamp(eps, 1.0 - eps);
                        if k < t.len() && t[k] == j {
                            l -= p.ln();
                            k += 1;
                        } else {
                            l -= (1.0 - p).ln();
                        }
                    }
                    l / n
                }
            };
        }
        Ok(total / rows)
    }

    pub fn gradient(&self, y: &DenseBatch, targets: &[Vec<usize>]) -> Result<DenseBatch> {
        check(y, targets)?;
        let eps = self.epsilon;
        let n = y.cols() as f64;
        let rows = y.rows() as f64;
        let mut g = DenseBatch::zeros(y.rows(), y.cols());
        for (b, t) in targets.iter().enumerate() {
            let row = y.row(b);
            let t = unique(t);
            let out = g.row_mut(b);
            match self.kind {
                LossKind::TargetMass => {
                    let s: f64 = row.iter().sum();
                    let tm: f64 = t.iter().map(|&j| row[j]).sum();
                    let base = 1.0 / ((s + eps * n) * rows);
                    out.iter_mut().for_each(|v| *v = base);
                    let hit = 1.0 / ((tm + eps) * rows);
                    for &j in &t {
                        out[j] -= hit;
                    }
                }
                LossKind::BinaryCrossEntropy => {
                    let mut k = 0;
                    for (j, &v) in row.iter().enumerate() {
                        let inside = v > eps && v < 1.0 - eps;
                        let p = v.clamp(eps, 1.0 - eps);
                        let d = if k < t.len() && t[k] == j {
                            k += 1;
                            -1.0 / p
                        } else {
                            1.0 / (1.0 - p)
                        };
                        out[j] = if inside { d / (n * rows) } else { 0.0 };
                    }
                }
            }
        }
        Ok(g)
    }
}

impl<'kb> Graph<'kb> {
    /// Scalar loss node comparing predictions `y` with per-row target
    /// entity indices.
    pub fn loss(&mut self, spec: LossSpec, y: MultisetExpr, targets: Vec<Vec<usize>>) -> Result<Tensor> {
        self.loss_node(y.0, targets, spec)
    }
}

/// Number of rows whose largest entry (ties to the lowest index) is a
/// target. Rows whose maximum is not positive count as misses.
pub fn hits_at_1(y: &DenseBatch, targets: &[Vec<usize>]) -> usize {
    (0..y.rows())
        .filter(|&b| {
            let row = y.row(b);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            !row.is_empty() && row[best] > 0.0 && targets[b].contains(&best)
        })
        .count()
}
