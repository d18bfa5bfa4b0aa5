//! Family trees, the twelve derived kinship relations, and a seeded
//! synthetic kinship generator.
//!
//! A [`FamilyTree`] stores only primitive facts: gender, parent links and
//! marriages. Every named relation is derived from those by traversal, so
//! the tree doubles as a brute-force oracle for chain queries.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NqlError, Result};
use crate::io::{Example, FactTriple, SchemaSpec};

/// The twelve familial relations, in canonical group order.
pub const KIN_RELATIONS: [&str; 12] = [
    "aunt", "brother", "daughter", "father", "husband", "mother", "nephew", "niece", "sister", "son",
    "uncle", "wife",
];

pub const PERSON_TYPE: &str = "person_t";
pub const KIN_GROUP: &str = "rel_t";

/// Human-readable derivation rules, shipped with generated KBs.
pub const KINSHIP_RULES: &str = "\
Derived relations (rel(x) is the set of y such that y is the rel of x):
  father(x)   = parents of x that are male
  mother(x)   = parents of x that are female
  husband(x)  = spouses of x that are male
  wife(x)     = spouses of x that are female
  son(x)      = children of x that are male
  daughter(x) = children of x that are female
  brother(x)  = males other than x sharing at least one parent with x
  sister(x)   = females other than x sharing at least one parent with x
  uncle(x)    = brothers of a parent of x, plus husbands of sisters of a parent of x
  aunt(x)     = sisters of a parent of x, plus wives of brothers of a parent of x
  nephew(x)   = males y such that x is an aunt or uncle of y
  niece(x)    = females y such that x is an aunt or uncle of y
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Default)]
pub struct FamilyTree {
    names: Vec<String>,
    genders: Vec<Gender>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    spouses: Vec<Vec<usize>>,
}

impl FamilyTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_person(&mut self, name: &str, gender: Gender) -> usize {
        self.names.push(name.to_string());
        self.genders.push(gender);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        self.spouses.push(Vec::new());
        self.names.len() - 1
    }

    pub fn add_parent(&mut self, child: usize, parent: usize) {
        if !self.parents[child].contains(&parent) {
            self.parents[child].push(parent);
            self.children[parent].push(child);
        }
    }

    pub fn marry(&mut self, a: usize, b: usize) {
        if a != b && !self.spouses[a].contains(&b) {
            self.spouses[a].push(b);
            self.spouses[b].push(a);
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, person: usize) -> &str {
        &self.names[person]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn gender(&self, person: usize) -> Gender {
        self.genders[person]
    }

    pub fn parents(&self, person: usize) -> &[usize] {
        &self.parents[person]
    }

    pub fn spouses(&self, person: usize) -> &[usize] {
        &self.spouses[person]
    }

    fn filter(&self, people: impl IntoIterator<Item = usize>, g: Gender) -> BTreeSet<usize> {
        people.into_iter().filter(|&p| self.genders[p] == g).collect()
    }

    fn siblings(&self, x: usize) -> BTreeSet<usize> {
        self.parents[x]
            .iter()
            .flat_map(|&p| self.children[p].iter().copied())
            .filter(|&c| c != x)
            .collect()
    }

    fn blood_piblings(&self, x: usize, g: Gender) -> BTreeSet<usize> {
        self.parents[x]
            .iter()
            .flat_map(|&p| self.siblings(p))
            .filter(|&s| self.genders[s] == g)
            .collect()
    }

    fn aunts_and_uncles(&self, x: usize) -> BTreeSet<usize> {
        let mut out = self.related(x, "aunt").expect("known relation");
        out.extend(self.related(x, "uncle").expect("known relation"));
        out
    }

    /// The set `rel(x)`, computed from primitive facts.
    pub fn related(&self, x: usize, rel: &str) -> Result<BTreeSet<usize>> {
        use Gender::*;
        Ok(match rel {
            "father" => self.filter(self.parents[x].iter().copied(), Male),
            "mother" => self.filter(self.parents[x].iter().copied(), Female),
            "husband" => self.filter(self.spouses[x].iter().copied(), Male),
            "wife" => self.filter(self.spouses[x].iter().copied(), Female),
            "son" => self.filter(self.children[x].iter().copied(), Male),
            "daughter" => self.filter(self.children[x].iter().copied(), Female),
            "brother" => self.filter(self.siblings(x), Male),
            "sister" => self.filter(self.siblings(x), Female),
            "uncle" => {
                let mut out = self.blood_piblings(x, Male);
                for a in self.blood_piblings(x, Female) {
                    out.extend(self.filter(self.spouses[a].iter().copied(), Male));
                }
                out
            }
            "aunt" => {
                let mut out = self.blood_piblings(x, Female);
                for u in self.blood_piblings(x, Male) {
                    out.extend(self.filter(self.spouses[u].iter().copied(), Female));
                }
                out
            }
            "nephew" | "niece" => {
                let g = if rel == "nephew" { Male } else { Female };
                // Anyone x is an aunt/uncle of is a child of a sibling of x or
                // of a sibling of x's spouse.
                let mut candidates = BTreeSet::new();
                let mut anchors = vec![x];
                anchors.extend(self.spouses[x].iter().copied());
                for a in anchors {
                    for s in self.siblings(a) {
                        candidates.extend(self.children[s].iter().copied());
                    }
                }
                candidates
                    .into_iter()
                    .filter(|&y| self.genders[y] == g && self.aunts_and_uncles(y).contains(&x))
                    .collect()
            }
            other => return Err(NqlError::UnknownRelation(other.to_string())),
        })
    }

    /// Support of the chain `x.r1().r2()...`, by explicit traversal.
    pub fn chain(&self, x: usize, rels: &[&str]) -> Result<BTreeSet<usize>> {
        let mut frontier: BTreeSet<usize> = BTreeSet::from([x]);
        for rel in rels {
            let mut next = BTreeSet::new();
            for &p in &frontier {
                next.extend(self.related(p, rel)?);
            }
            frontier = next;
        }
        Ok(frontier)
    }

    /// Unit-weight facts for all twelve relations, in a stable order.
    pub fn facts(&self) -> Vec<FactTriple> {
        let mut out = Vec::new();
        for rel in KIN_RELATIONS {
            for x in 0..self.len() {
                for y in self.related(x, rel).expect("known relation") {
                    out.push(FactTriple::new(rel, &self.names[x], &self.names[y]));
                }
            }
        }
        out
    }

    /// `person_t`, the twelve relations, and the `rel_t` group over them.
    pub fn schema() -> SchemaSpec {
        let mut schema = SchemaSpec::new().with_type(PERSON_TYPE);
        for rel in KIN_RELATIONS {
            schema = schema.with_relation(rel, PERSON_TYPE, PERSON_TYPE);
        }
        schema.with_group(KIN_GROUP, &KIN_RELATIONS)
    }
}

/// Parameters of the synthetic kinship generator.
#[derive(Debug, Clone, PartialEq)]
pub struct KinshipSpec {
    pub seed: u64,
    pub generations: usize,
    pub persons_per_generation: usize,
    pub marriage_prob: f64,
    pub min_children: usize,
    pub max_children: usize,
}

impl Default for KinshipSpec {
    fn default() -> Self {
        KinshipSpec {
            seed: 7,
            generations: 4,
            persons_per_generation: 75,
            marriage_prob: 0.8,
            min_children: 1,
            max_children: 4,
        }
    }
}

impl KinshipSpec {
    pub fn validate(&self) -> Result<()> {
        if self.generations == 0 || self.persons_per_generation == 0 {
            return Err(NqlError::Validation(
                "kinship spec needs at least one generation and one person per generation".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.marriage_prob) {
            return Err(NqlError::Validation(format!(
                "marriage probability {} is outside [0, 1]",
                self.marriage_prob
            )));
        }
        if self.min_children > self.max_children {
            return Err(NqlError::Validation(format!(
                "min_children {} exceeds max_children {}",
                self.min_children, self.max_children
            )));
        }
        Ok(())
    }
}

/// A generated KB: schema, facts, and the tree that answers chain queries.
#[derive(Debug, Clone)]
pub struct GeneratedKinship {
    pub schema: SchemaSpec,
    pub facts: Vec<FactTriple>,
    pub oracle: FamilyTree,
}

/// Generates a multi-generation population.
///
/// Marriages pair an unmarried man and woman of the same generation, each
/// person marries at most once, and every child has both parents from one
/// marriage. Each generation is topped up with unrelated newcomers to reach
/// the target size.
pub fn generate_kinship(spec: &KinshipSpec) -> Result<GeneratedKinship> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tree = FamilyTree::new();
    let width = (spec.generations * spec.persons_per_generation * (spec.max_children + 1))
        .to_string()
        .len()
        .max(4);
    let new_person = |tree: &mut FamilyTree, rng: &mut ChaCha8Rng| {
        let g = if rng.gen_bool(0.5) {
            Gender::Male
        } else {
            Gender::Female
        };
        let name = format!("p{:0width$}", tree.len());
        tree.add_person(&name, g)
    };

    let mut generation: Vec<usize> = Vec::new();
    for gen in 0..spec.generations {
        while generation.len() < spec.persons_per_generation {
            generation.push(new_person(&mut tree, &mut rng));
        }
        if gen + 1 == spec.generations {
            break;
        }
        let mut men: Vec<usize> = generation
            .iter()
            .copied()
            .filter(|&p| tree.gender(p) == Gender::Male)
            .collect();
        let mut women: Vec<usize> = generation
            .iter()
            .copied()
            .filter(|&p| tree.gender(p) == Gender::Female)
            .collect();
        men.shuffle(&mut rng);
        women.shuffle(&mut rng);
        let mut next = Vec::new();
        for (&m, &w) in men.iter().zip(&women) {
            if !rng.gen_bool(spec.marriage_prob) {
                continue;
            }
            tree.marry(m, w);
            let n = rng.gen_range(spec.min_children..=spec.max_children);
            for _ in 0..n {
                let c = new_person(&mut tree, &mut rng);
                tree.add_parent(c, m);
                tree.add_parent(c, w);
                next.push(c);
            }
        }
        generation = next;
    }
    let facts = tree.facts();
    Ok(GeneratedKinship {
        schema: FamilyTree::schema(),
        facts,
        oracle: tree,
    })
}

/// Examples `x -> rel(x)` for every person with a nonempty answer.
pub fn relation_dataset(tree: &FamilyTree, rel: &str) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for x in 0..tree.len() {
        let targets = tree.related(x, rel)?;
        if targets.is_empty() {
            continue;
        }
        out.push(Example {
            question: chain_question(&[rel], tree.name(x)),
            seed: tree.name(x).to_string(),
            targets: targets.iter().map(|&t| tree.name(t).to_string()).collect(),
        });
    }
    Ok(out)
}

/// English question for a chain applied in order `rels[0]`, `rels[1]`, ...:
/// `["husband", "father"]` becomes "who is the father of the husband of X".
pub fn chain_question(rels: &[&str], seed: &str) -> String {
    let mut q = String::from("who is");
    for rel in rels.iter().rev() {
        q.push_str(" the ");
        q.push_str(rel);
        q.push_str(" of");
    }
    q.push(' ');
    q.push_str(seed);
    q
}

/// Random chain questions with nonempty answers; no `(seed, chain)` pair
/// repeats. `hops` lists the allowed chain lengths, sampled uniformly.
pub fn chain_dataset(tree: &FamilyTree, hops: &[usize], count: usize, seed: u64) -> Result<Vec<Example>> {
    if tree.is_empty() || hops.is_empty() || hops.contains(&0) {
        return Err(NqlError::Validation(
            "chain dataset needs a nonempty tree and positive hop counts".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count.saturating_mul(200).max(10_000) {
            return Err(NqlError::Validation(format!(
                "could only find {} of {count} distinct answerable chain questions",
                out.len()
            )));
        }
        let h = hops[rng.gen_range(0..hops.len())];
        let x = rng.gen_range(0..tree.len());
        let rels: Vec<&str> = (0..h)
            .map(|_| KIN_RELATIONS[rng.gen_range(0..KIN_RELATIONS.len())])
            .collect();
        let key = (x, rels.clone());
        if seen.contains(&key) {
            continue;
        }
        let targets = tree.chain(x, &rels)?;
        if targets.is_empty() {
            continue;
        }
        seen.insert(key);
        out.push(Example {
            question: chain_question(&rels, tree.name(x)),
            seed: tree.name(x).to_string(),
            targets: targets.iter().map(|&t| tree.name(t).to_string()).collect(),
        });
    }
    Ok(out)
}
