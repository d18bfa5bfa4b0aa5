//! Random query generators: well-typed queries over a [`DenseKb`], and
//! syntax-only queries with awkward names for parser round trips.

use nql::query::Query;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dense::DenseKb;

/// The operators of the query algebra, for coverage accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    Relation,
    InverseRelation,
    Follow,
    Union,
    Intersect,
    IfAny,
    Scale,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::Relation,
        OpKind::InverseRelation,
        OpKind::Follow,
        OpKind::Union,
        OpKind::Intersect,
        OpKind::IfAny,
        OpKind::Scale,
    ];
}

#[derive(Debug, Clone, Default)]
pub struct OpCounts(pub std::collections::BTreeMap<OpKind, usize>);

impl OpCounts {
    fn bump(&mut self, k: OpKind) {
        *self.0.entry(k).or_default() += 1;
    }

    pub fn get(&self, k: OpKind) -> usize {
        self.0.get(&k).copied().unwrap_or(0)
    }

    pub fn covers_all(&self) -> bool {
        OpKind::ALL.iter().all(|&k| self.get(k) > 0)
    }
}

fn leaf(rng: &mut impl Rng, kb: &DenseKb, ty: &str) -> Query {
    let names = &kb.types[ty];
    match rng.gen_range(0..20) {
        0..=11 => Query::one(names.choose(rng).unwrap(), ty),
        12..=17 => Query::all(ty),
        _ => Query::none(ty),
    }
}

/// A random query of type `ty` with at most `depth` nested operators.
pub fn typed_query(rng: &mut impl Rng, kb: &DenseKb, ty: &str, depth: usize, counts: &mut OpCounts) -> Query {
    if depth == 0 || rng.gen_bool(0.15) {
        return leaf(rng, kb, ty);
    }
    let forward: Vec<&String> = kb
        .relations
        .iter()
        .filter(|(_, r)| r.range == ty)
        .map(|(n, _)| n)
        .collect();
    let backward: Vec<&String> = kb
        .relations
        .iter()
        .filter(|(_, r)| r.domain == ty)
        .map(|(n, _)| n)
        .collect();
    let groups: Vec<(&String, bool)> = kb
        .groups
        .iter()
        .flat_map(|(n, g)| {
            let mut v = Vec::new();
            if g.range == ty {
                v.push((n, false));
            }
            if g.domain == ty {
                v.push((n, true));
            }
            v
        })
        .collect();
    loop {
        match rng.gen_range(0..8) {
            0 if !forward.is_empty() => {
                let r = forward.choose(rng).unwrap();
                let dom = kb.relations[*r].domain.clone();
                counts.bump(OpKind::Relation);
                let input = typed_query(rng, kb, &dom, depth - 1, counts);
                return if rng.gen_bool(0.8) {
                    input.rel(r, false)
                } else {
                    input.follow_name(r, false)
                };
            }
            1 if !backward.is_empty() => {
                let r = backward.choose(rng).unwrap();
                let range = kb.relations[*r].range.clone();
                counts.bump(OpKind::InverseRelation);
                let input = typed_query(rng, kb, &range, depth - 1, counts);
                return if rng.gen_bool(0.8) {
                    input.rel(r, true)
                } else {
                    input.follow_name(r, true)
                };
            }
            2 | 3 if !groups.is_empty() => {
                let &(g, inverse) = groups.choose(rng).unwrap();
                let spec = &kb.groups[g];
                let from = if inverse {
                    spec.range.clone()
                } else {
                    spec.domain.clone()
                };
                counts.bump(OpKind::Follow);
                let input = typed_query(rng, kb, &from, depth - 1, counts);
                let mix = typed_query(rng, kb, g, depth - 1, counts);
                return input.follow(mix, inverse);
            }
            4 => {
                counts.bump(OpKind::Union);
                let a = typed_query(rng, kb, ty, depth - 1, counts);
                return a.union(typed_query(rng, kb, ty, depth - 1, counts));
            }
            5 => {
                counts.bump(OpKind::Intersect);
                let a = typed_query(rng, kb, ty, depth - 1, counts);
                return a.intersect(typed_query(rng, kb, ty, depth - 1, counts));
            }
            6 => {
                counts.bump(OpKind::IfAny);
                let other: Vec<&String> = kb.types.keys().collect();
                let cond_ty = (*other.choose(rng).unwrap()).clone();
                let a = typed_query(rng, kb, ty, depth - 1, counts);
                return a.if_any(typed_query(rng, kb, &cond_ty, depth - 1, counts));
            }
            7 => {
                counts.bump(OpKind::Scale);
                let factor = rng.gen_range(0.1..3.0);
                return typed_query(rng, kb, ty, depth - 1, counts).scale(factor);
            }
            _ => continue,
        }
    }
}

const IDENTS: [&str; 8] = [
    "wife", "x", "person_t", "_tmp", "r2", "parentOf", "Name_9", "a1b2",
];
const AWKWARD: [&str; 10] = [
    "Henry_VIII of house of Tudor",
    "it's",
    "back\\slash",
    "tab\there",
    "new\nline",
    "",
    "12 monkeys",
    "naïve café",
    "\"double\"",
    "a|b&c.d(e)",
];

fn name(rng: &mut impl Rng) -> String {
    if rng.gen_bool(0.5) {
        IDENTS.choose(rng).unwrap().to_string()
    } else {
        AWKWARD.choose(rng).unwrap().to_string()
    }
}

fn ident(rng: &mut impl Rng) -> String {
    IDENTS.choose(rng).unwrap().to_string()
}

fn factor(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(0..100) as f64,
        1 => rng.gen_range(-5.0..5.0),
        2 => rng.gen_range(1e-9..1e-3),
        3 => rng.gen_range(1e3..1e12),
        _ => rng.gen_range(0.0..1.0),
    }
}

/// Any syntactically valid query, ignoring types. Names include quotes,
/// escapes, spaces, unicode and empty strings.
pub fn syntax_query(rng: &mut impl Rng, depth: usize) -> Query {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..4) {
            0 => Query::one(&name(rng), &name(rng)),
            1 => Query::all(&name(rng)),
            2 => Query::none(&name(rng)),
            _ => Query::var(&ident(rng)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => syntax_query(rng, d).rel(&ident(rng), rng.gen_bool(0.3)),
        1 => syntax_query(rng, d).follow_name(&name(rng), rng.gen_bool(0.3)),
        2 => {
            let s = syntax_query(rng, d);
            s.follow(syntax_query(rng, d), rng.gen_bool(0.3))
        }
        3 => syntax_query(rng, d).union(syntax_query(rng, d)),
        4 => syntax_query(rng, d).intersect(syntax_query(rng, d)),
        5 => syntax_query(rng, d).if_any(syntax_query(rng, d)),
        _ => syntax_query(rng, d).scale(factor(rng)),
    }
}
