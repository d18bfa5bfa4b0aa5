//! Random small KBs and a brute-force dense evaluator for queries over them.
//!
//! The evaluator shares no code with the engine: relations are plain nested
//! `Vec`s filled from the same fact list that is fed to `build_kb`, and every
//! operator is a textbook loop.

use std::collections::BTreeMap;

use nql::io::{FactTriple, SchemaSpec};
use nql::query::{FollowArg, Query, QueryKind};
use nql::{build_kb, KnowledgeBase};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct DenseRelation {
    pub domain: String,
    pub range: String,
    /// `m[i][j]` is the summed weight of facts `(i, j)`.
    pub m: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct DenseGroup {
    pub members: Vec<String>,
    pub domain: String,
    pub range: String,
}

/// Everything needed to evaluate a query without the engine.
#[derive(Debug, Clone, Default)]
pub struct DenseKb {
    pub types: BTreeMap<String, Vec<String>>,
    pub relations: BTreeMap<String, DenseRelation>,
    pub groups: BTreeMap<String, DenseGroup>,
}

/// A dense value: a type name and one weight per entity of that type.
pub type DenseValue = (String, Vec<f64>);

impl DenseKb {
    fn index(&self, ty: &str, name: &str) -> Option<usize> {
        self.types.get(ty)?.iter().position(|e| e == name)
    }

    fn traverse(s: &[f64], m: &[Vec<f64>], inverse: bool, out_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; out_len];
        for (i, row) in m.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if inverse {
                    out[i] += s[j] * w;
                } else {
                    out[j] += s[i] * w;
                }
            }
        }
        out
    }

    /// Evaluates `q`, or `None` if it is ill-typed or names something unknown.
    pub fn eval(&self, q: &Query) -> Option<DenseValue> {
        match &q.kind {
            QueryKind::One { entity, type_name } => {
                let n = self.types.get(type_name)?.len();
                let i = self.index(type_name, entity)?;
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                Some((type_name.clone(), v))
            }
            QueryKind::None { type_name } => {
                Some((type_name.clone(), vec![0.0; self.types.get(type_name)?.len()]))
            }
            QueryKind::All { type_name } => {
                Some((type_name.clone(), vec![1.0; self.types.get(type_name)?.len()]))
            }
            QueryKind::Var(_) => None,
            QueryKind::RelCall {
                input,
                relation,
                inverse,
            } => {
                let (ty, s) = self.eval(input)?;
                self.apply_relation(&ty, &s, relation, *inverse)
            }
            QueryKind::Follow { input, arg, inverse } => {
                let (ty, s) = self.eval(input)?;
                match arg {
                    FollowArg::Name(r) => self.apply_relation(&ty, &s, r, *inverse),
                    FollowArg::Expr(e) => {
                        let (gty, r) = self.eval(e)?;
                        let g = self.groups.get(&gty)?;
                        let (from, to) = if *inverse {
                            (&g.range, &g.domain)
                        } else {
                            (&g.domain, &g.range)
                        };
                        if from != &ty {
                            return None;
                        }
                        let n = self.types[to].len();
                        let mut out = vec![0.0; n];
                        for (k, member) in g.members.iter().enumerate() {
                            let part = Self::traverse(&s, &self.relations[member].m, *inverse, n);
                            for (o, p) in out.iter_mut().zip(part) {
                                *o += r[k] * p;
                            }
                        }
                        Some((to.clone(), out))
                    }
                }
            }
            QueryKind::Union(a, b) | QueryKind::Intersect(a, b) => {
                let (ta, va) = self.eval(a)?;
                let (tb, vb) = self.eval(b)?;
                if ta != tb {
                    return None;
                }
                let union = matches!(q.kind, QueryKind::Union(..));
                let v = va
                    .iter()
                    .zip(&vb)
                    .map(|(x, y)| if union { x + y } else { x * y })
                    .collect();
                Some((ta, v))
            }
            QueryKind::IfAny { input, cond } => {
                let (ty, s) = self.eval(input)?;
                let (_, t) = self.eval(cond)?;
                let mass: f64 = t.iter().sum();
                Some((ty, s.iter().map(|x| x * mass).collect()))
            }
            QueryKind::Scale { input, factor } => {
                let (ty, s) = self.eval(input)?;
                Some((ty, s.iter().map(|x| x * factor).collect()))
            }
        }
    }

    fn apply_relation(&self, ty: &str, s: &[f64], relation: &str, inverse: bool) -> Option<DenseValue> {
        let r = self.relations.get(relation)?;
        let (from, to) = if inverse {
            (&r.range, &r.domain)
        } else {
            (&r.domain, &r.range)
        };
        if from != ty {
            return None;
        }
        let n = self.types[to].len();
        Some((to.clone(), Self::traverse(s, &r.m, inverse, n)))
    }

    /// A dense value as `(entity, weight)` pairs, zeros dropped.
    pub fn named(&self, value: &DenseValue) -> BTreeMap<String, f64> {
        self.types[&value.0]
            .iter()
            .zip(&value.1)
            .filter(|(_, &w)| w != 0.0)
            .map(|(n, &w)| (n.clone(), w))
            .collect()
    }
}

/// Size limits for [`random_kb`].
#[derive(Debug, Clone, Copy)]
pub struct RandomKbParams {
    pub max_types: usize,
    pub max_entities: usize,
    pub max_relations: usize,
    pub max_density: f64,
}

impl Default for RandomKbParams {
    fn default() -> Self {
        RandomKbParams {
            max_types: 3,
            max_entities: 50,
            max_relations: 6,
            max_density: 0.3,
        }
    }
}

/// A generated KB in three forms: schema plus facts, the engine KB built
/// from them, and the dense oracle built from the same facts.
pub struct RandomKb {
    pub schema: SchemaSpec,
    pub facts: Vec<FactTriple>,
    pub kb: KnowledgeBase,
    pub dense: DenseKb,
}

/// Types `t0..`, entities `t0_e0..`, relations `r0..` with weights in
/// `[0.1, 2)`, some repeated facts, and a group `g_<dom>_<range>` for every
/// signature shared by at least two relations.
pub fn random_kb(rng: &mut impl Rng, p: &RandomKbParams) -> RandomKb {
    let mut dense = DenseKb::default();
    let n_types = rng.gen_range(1..=p.max_types);
    let mut schema = SchemaSpec::new();
    for t in 0..n_types {
        let ty = format!("t{t}");
        let n = rng.gen_range(1..=p.max_entities);
        let names: Vec<String> = (0..n).map(|i| format!("{ty}_e{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        schema = schema.with_closed_type(&ty, &refs);
        dense.types.insert(ty, names);
    }
    let type_names: Vec<String> = dense.types.keys().cloned().collect();
    let n_rels = rng.gen_range(1..=p.max_relations);
    let mut facts = Vec::new();
    for r in 0..n_rels {
        let name = format!("r{r}");
        let domain = type_names.choose(rng).unwrap().clone();
        let range = type_names.choose(rng).unwrap().clone();
        schema = schema.with_relation(&name, &domain, &range);
        let (nd, nr) = (dense.types[&domain].len(), dense.types[&range].len());
        let density = rng.gen_range(0.0..=p.max_density);
        let mut m = vec![vec![0.0; nr]; nd];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if rng.gen_bool(density) {
                    let copies = if rng.gen_bool(0.05) { 2 } else { 1 };
                    for _ in 0..copies {
                        let w: f64 = rng.gen_range(0.1..2.0);
                        *cell += w;
                        facts.push(
                            FactTriple::new(&name, &dense.types[&domain][i], &dense.types[&range][j])
                                .weighted(w),
                        );
                    }
                }
            }
        }
        dense.relations.insert(name, DenseRelation { domain, range, m });
    }
    let mut by_sig: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for (name, r) in &dense.relations {
        by_sig
            .entry((r.domain.clone(), r.range.clone()))
            .or_default()
            .push(name.clone());
    }
    for ((domain, range), members) in by_sig {
        if members.len() < 2 {
            continue;
        }
        let gname = format!("g_{domain}_{range}");
        let refs: Vec<&str> = members.iter().map(String::as_str).collect();
        schema = schema.with_group(&gname, &refs);
        dense.types.insert(gname.clone(), members.clone());
        dense.groups.insert(
            gname,
            DenseGroup {
                members,
                domain,
                range,
            },
        );
    }
    facts.shuffle(rng);
    let kb = build_kb(&schema, facts.clone()).expect("generated KB is valid");
    RandomKb {
        schema,
        facts,
        kb,
        dense,
    }
}
