//! A small KB and dataset for model tests, and a hand-unrolled recurrent
//! forward pass computed with plain loops over parameter values.

use nql::graph::ParamStore;
use nql::io::{Example, FactTriple, SchemaSpec};
use nql::{build_kb, KnowledgeBase};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dense::{DenseGroup, DenseKb, DenseRelation};

pub const SMALL_TYPE: &str = "node_t";
pub const SMALL_GROUP: &str = "rel_t";
pub const SMALL_RELATIONS: [&str; 4] = ["ra", "rb", "rc", "rd"];

pub struct SmallKb {
    pub kb: KnowledgeBase,
    pub dense: DenseKb,
}

/// `n` entities, four random relations over them and one group of all four.
pub fn small_kb(rng: &mut impl Rng, n: usize, density: f64) -> SmallKb {
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut schema = SchemaSpec::new().with_closed_type(SMALL_TYPE, &refs);
    let mut dense = DenseKb::default();
    dense.types.insert(SMALL_TYPE.to_string(), names.clone());
    let mut facts = Vec::new();
    for rel in SMALL_RELATIONS {
        schema = schema.with_relation(rel, SMALL_TYPE, SMALL_TYPE);
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if rng.gen_bool(density) {
                    let w = rng.gen_range(0.5..1.5);
                    m[i][j] = w;
                    facts.push(FactTriple::new(rel, &names[i], &names[j]).weighted(w));
                }
            }
        }
        dense.relations.insert(
            rel.to_string(),
            DenseRelation {
                domain: SMALL_TYPE.into(),
                range: SMALL_TYPE.into(),
                m,
            },
        );
    }
    schema = schema.with_group(SMALL_GROUP, &SMALL_RELATIONS);
    dense.types.insert(
        SMALL_GROUP.into(),
        SMALL_RELATIONS.iter().map(|s| s.to_string()).collect(),
    );
    dense.groups.insert(
        SMALL_GROUP.into(),
        DenseGroup {
            members: SMALL_RELATIONS.iter().map(|s| s.to_string()).collect(),
            domain: SMALL_TYPE.into(),
            range: SMALL_TYPE.into(),
        },
    );
    let kb = build_kb(&schema, facts).expect("small KB is valid");
    SmallKb { kb, dense }
}

/// Chain questions of 1 to `max_hops` hops whose answer sets are nonempty.
pub fn small_dataset(rng: &mut impl Rng, kb: &SmallKb, count: usize, max_hops: usize) -> Vec<Example> {
    let names = &kb.dense.types[SMALL_TYPE];
    let mut out = Vec::new();
    while out.len() < count {
        let seed = names.choose(rng).unwrap().clone();
        let hops = rng.gen_range(1..=max_hops);
        let rels: Vec<&str> = (0..hops).map(|_| *SMALL_RELATIONS.choose(rng).unwrap()).collect();
        let mut set: Vec<bool> = names.iter().map(|n| *n == seed).collect();
        for r in &rels {
            let m = &kb.dense.relations[*r].m;
            let mut next = vec![false; names.len()];
            for (i, row) in m.iter().enumerate() {
                if set[i] {
                    for (j, &w) in row.iter().enumerate() {
                        if w != 0.0 {
                            next[j] = true;
                        }
                    }
                }
            }
            set = next;
        }
        let targets: Vec<String> = names
            .iter()
            .zip(&set)
            .filter(|(_, &s)| s)
            .map(|(n, _)| n.clone())
            .collect();
        if targets.is_empty() {
            continue;
        }
        let question = format!(
            "what is {} of {seed}",
            rels.iter().rev().cloned().collect::<Vec<_>>().join(" of ")
        );
        out.push(Example {
            question,
            seed,
            targets,
        });
    }
    out
}

fn values<'a>(store: &'a ParamStore, name: &str) -> (&'a [f64], usize) {
    let id = store
        .by_name(name)
        .unwrap_or_else(|| panic!("no parameter {name}"));
    let p = store.get(id);
    (&p.values, p.cols)
}

/// `x · W + b` for a row vector `x` and row-major `W`.
fn affine(store: &ParamStore, name: &str, x: &[f64]) -> Vec<f64> {
    let (w, cols) = values(store, &format!("{name}.weight"));
    let (b, _) = values(store, &format!("{name}.bias"));
    (0..cols)
        .map(|j| {
            b[j] + x
                .iter()
                .enumerate()
                .map(|(i, xi)| xi * w[i * cols + j])
                .sum::<f64>()
        })
        .collect()
}

/// The recurrent model's prediction for one question, unrolled by hand.
///
/// `tokens` are encoder vocabulary indices; `stop_override[i]`, when set,
/// replaces step `i`'s stop probability. Relation mixture index `k` is the
/// group's `k`-th member.
#[allow(clippy::too_many_arguments)]
pub fn recurrent_oracle(
    store: &ParamStore,
    dense: &DenseKb,
    group: &str,
    tokens: &[usize],
    seed: &str,
    max_hops: usize,
    stop_override: &[Option<f64>],
    add_leftover: bool,
) -> Vec<f64> {
    let (emb, d) = values(store, "encoder.embedding");
    let mut s = vec![0.0; d];
    for &t in tokens {
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += emb[t * d + k] / tokens.len() as f64;
        }
    }
    let g = &dense.groups[group];
    let names = &dense.types[&g.domain];
    let mut e: Vec<f64> = names.iter().map(|n| if n == seed { 1.0 } else { 0.0 }).collect();
    let mut y = vec![0.0; names.len()];
    let mut p = 1.0;
    for step in 0..max_hops {
        s = affine(store, "cell", &s).iter().map(|v| v.tanh()).collect();
        let logits = affine(store, "relation", &s);
        let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
        let z: f64 = ex.iter().sum();
        let r: Vec<f64> = ex.iter().map(|v| v / z).collect();
        let p_stop = match stop_override.get(step).copied().flatten() {
            Some(v) => v,
            None => 1.0 / (1.0 + (-affine(store, "stop", &s)[0]).exp()),
        };
        let mut next = vec![0.0; names.len()];
        for (k, member) in g.members.iter().enumerate() {
            for (i, row) in dense.relations[member].m.iter().enumerate() {
                for (j, &w) in row.iter().enumerate() {
                    next[j] += r[k] * e[i] * w;
                }
            }
        }
        e = next;
        for (yi, ei) in y.iter_mut().zip(&e) {
            *yi += p * p_stop * ei;
        }
        p *= 1.0 - p_stop;
    }
    if add_leftover {
        for (yi, ei) in y.iter_mut().zip(&e) {
            *yi += p * ei;
        }
    }
    y
}

/// Loss of `model` on `data`, and its gradients.
pub fn model_loss(
    model: &dyn nql::learning::Model,
    kb: &KnowledgeBase,
    data: &[Example],
    spec: nql::learning::LossSpec,
) -> (f64, nql::graph::Gradients) {
    let targets = nql::learning::target_indices(kb, model, data).expect("targets resolve");
    let mut g = nql::Graph::new(kb);
    let pairs: Vec<(&str, &str)> = data
        .iter()
        .map(|e| (e.question.as_str(), e.seed.as_str()))
        .collect();
    let y = model.predict(&mut g, &pairs).expect("predict");
    let l = g.loss(spec, y, targets).expect("loss");
    let value = g.value(l).get(0, 0);
    (value, g.backward(l).expect("backward"))
}

/// A model configuration with its vocabulary built from `data`.
pub fn config_for(
    kind: nql::learning::ModelKind,
    data: &[Example],
    dim: usize,
    max_hops: usize,
) -> nql::learning::ModelConfig {
    let mut c = nql::learning::ModelConfig::new(kind, SMALL_GROUP);
    c.dim = dim;
    c.max_hops = max_hops;
    if kind != nql::learning::ModelKind::Template {
        c.vocab =
            nql::learning::Vocabulary::build(data.iter().map(|e| (e.question.as_str(), e.seed.as_str())))
                .words()
                .to_vec();
    }
    c
}
