//! Uniform random KBs of a requested size, for benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NqlError, Result};
use crate::kb::KnowledgeBase;
use crate::sparse::SparseMatrix;

pub const UNIFORM_TYPE: &str = "node_t";
pub const UNIFORM_GROUP: &str = "rel_t";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformKbSpec {
    pub entities: usize,
    /// Total distinct facts, split as evenly as possible across relations.
    pub tuples: usize,
    pub relations: usize,
    pub seed: u64,
}

impl Default for UniformKbSpec {
    fn default() -> Self {
        UniformKbSpec {
            entities: 100_000,
            tuples: 1_000_000,
            relations: 12,
            seed: 0,
        }
    }
}

pub fn relation_name(i: usize) -> String {
    format!("r{i:02}")
}

/// One entity type, `relations` relations over it with uniformly random
/// distinct unit-weight edges, and a group holding every relation. With
/// zero relations the KB has no group.
pub fn uniform_kb(spec: &UniformKbSpec) -> Result<KnowledgeBase> {
    let n = spec.entities;
    let capacity = (n as u128) * (n as u128) * spec.relations as u128;
    if spec.tuples as u128 > capacity {
        return Err(NqlError::Validation(format!(
            "{} tuples do not fit in {} relations over {n} entities",
            spec.tuples, spec.relations
        )));
    }
    if n > u32::MAX as usize {
        return Err(NqlError::Validation("too many entities".into()));
    }
    let names: Vec<String> = (0..n).map(|i| format!("e{i:06}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut relations = Vec::with_capacity(spec.relations);
    for r in 0..spec.relations {
        let want = spec.tuples / spec.relations + usize::from(r < spec.tuples % spec.relations);
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(want);
        while pairs.len() < want {
            let missing = want - pairs.len();
            pairs.extend((0..missing).map(|_| (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32))));
            pairs.sort_unstable();
            pairs.dedup();
        }
        let matrix = SparseMatrix::from_triplets(
            n,
            n,
            pairs.into_iter().map(|(s, o)| (s as usize, o as usize, 1.0)),
        )
        .map_err(|e| NqlError::Validation(e.to_string()))?;
        relations.push((
            relation_name(r),
            UNIFORM_TYPE.to_string(),
            UNIFORM_TYPE.to_string(),
            matrix,
        ));
    }
    let kb = KnowledgeBase::from_parts(vec![(UNIFORM_TYPE.to_string(), names)], relations)?;
    if spec.relations == 0 {
        return Ok(kb);
    }
    let members: Vec<String> = (0..spec.relations).map(relation_name).collect();
    let members: Vec<&str> = members.iter().map(String::as_str).collect();
    kb.make_group(UNIFORM_GROUP, &members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_counts() {
        let kb = uniform_kb(&UniformKbSpec {
            entities: 50,
            tuples: 1001,
            relations: 4,
            seed: 3,
        })
        .unwrap();
        assert_eq!(kb.num_facts(), 1001);
        assert_eq!(kb.type_decl(UNIFORM_TYPE).unwrap().cardinality(), 50);
        assert_eq!(kb.group(UNIFORM_GROUP).unwrap().len(), 4);
        assert_eq!(kb.relation("r00").unwrap().matrix().nnz(), 251);
    }

    #[test]
    fn empty_and_impossible() {
        let kb = uniform_kb(&UniformKbSpec {
            entities: 0,
            tuples: 0,
            relations: 0,
            seed: 0,
        })
        .unwrap();
        assert_eq!(kb.num_facts(), 0);
        assert!(uniform_kb(&UniformKbSpec {
            entities: 2,
            tuples: 9,
            relations: 2,
            seed: 0
        })
        .is_err());
    }
}
