//! The knowledge-base context: typed entity symbol tables, weighted
//! relations, and relation groups.
//!
//! A [`KnowledgeBase`] is frozen once built. Extending it with a new
//! relation group returns a new value that shares all relation storage.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{NqlError, Result, ShapeError};
use crate::io::{FactTriple, SchemaSpec};
use crate::sparse::{DenseBatch, SparseMatrix};

/// Name of the sentinel entity appended to types declared with `oov`.
pub const OOV_ENTITY: &str = "<oov>";

/// An entity type: a bijection between entity names and dense indices.
#[derive(Clone)]
pub struct TypeDecl {
    name: String,
    names: Vec<String>,
    index: HashMap<String, usize>,
    oov: Option<usize>,
}

impl fmt::Debug for TypeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeDecl")
            .field("name", &self.name)
            .field("cardinality", &self.names.len())
            .field("oov", &self.oov.is_some())
            .finish()
    }
}

impl TypeDecl {
    pub(crate) fn new(name: &str, names: Vec<String>, oov: bool) -> Result<Self> {
        let mut names = names;
        let mut index = HashMap::with_capacity(names.len() + 1);
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(NqlError::Validation(format!(
                    "entity `{n}` declared twice in type `{name}`"
                )));
            }
        }
        let oov = if oov {
            if index.contains_key(OOV_ENTITY) {
                return Err(NqlError::Validation(format!(
                    "type `{name}` uses the reserved entity name `{OOV_ENTITY}`"
                )));
            }
            let i = names.len();
            names.push(OOV_ENTITY.to_string());
            index.insert(OOV_ENTITY.to_string(), i);
            Some(i)
        } else {
            None
        };
        Ok(TypeDecl {
            name: name.to_string(),
            names,
            index,
            oov,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `N_τ`, including the out-of-vocabulary sentinel when present.
    pub fn cardinality(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn entity_name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    /// Index of an entity; unknown names fall back to the sentinel when the
    /// type was declared with `oov`.
    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied().or(self.oov)
    }

    /// Exact-match lookup that never falls back to the sentinel.
    pub fn lookup_exact(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.lookup(name).ok_or_else(|| NqlError::UnknownEntity {
            name: name.to_string(),
            type_name: self.name.clone(),
        })
    }

    pub fn oov_index(&self) -> Option<usize> {
        self.oov
    }
}

/// A weighted binary relation with its matrix and precomputed transpose.
#[derive(Debug, Clone)]
pub struct RelationDecl {
    name: String,
    domain: String,
    range: String,
    matrix: SparseMatrix,
    transpose: SparseMatrix,
}

impl RelationDecl {
    pub(crate) fn new(name: &str, domain: &str, range: &str, matrix: SparseMatrix) -> Self {
        let transpose = matrix.transpose();
        RelationDecl {
            name: name.to_string(),
            domain: domain.to_string(),
            range: range.to_string(),
            matrix,
            transpose,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn range(&self) -> &str {
        &self.range
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn transpose(&self) -> &SparseMatrix {
        &self.transpose
    }

    /// Matrix for traversal in the given direction.
    pub fn oriented(&self, inverse: bool) -> &SparseMatrix {
        if inverse {
            &self.transpose
        } else {
            &self.matrix
        }
    }

    /// `(input type, output type)` for traversal in the given direction.
    pub fn signature(&self, inverse: bool) -> (&str, &str) {
        if inverse {
            (&self.range, &self.domain)
        } else {
            (&self.domain, &self.range)
        }
    }
}

/// Relations sharing one signature, promoted to an entity type whose
/// entities are the member relation names.
#[derive(Debug, Clone)]
pub struct RelationGroup {
    name: String,
    domain: String,
    range: String,
    members: Vec<Arc<RelationDecl>>,
    induced: Arc<TypeDecl>,
}

impl RelationGroup {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn range(&self) -> &str {
        &self.range
    }

    /// Number of member relations `k`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Arc<RelationDecl>] {
        &self.members
    }

    pub fn member_names(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|r| r.name())
    }

    pub fn induced_type(&self) -> &TypeDecl {
        &self.induced
    }

    pub fn signature(&self, inverse: bool) -> (&str, &str) {
        if inverse {
            (&self.range, &self.domain)
        } else {
            (&self.domain, &self.range)
        }
    }

    pub fn matrices(&self, inverse: bool) -> Vec<&SparseMatrix> {
        self.members.iter().map(|r| r.oriented(inverse)).collect()
    }
}

/// The frozen pair of relations and typed entities, plus relation groups.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    types: BTreeMap<String, Arc<TypeDecl>>,
    relations: BTreeMap<String, Arc<RelationDecl>>,
    groups: BTreeMap<String, Arc<RelationGroup>>,
}

/// One decoded batch row: `(entity name, weight)` pairs.
pub type DecodedSet = Vec<(String, f64)>;

impl KnowledgeBase {
    pub fn type_decl(&self, name: &str) -> Result<&TypeDecl> {
        self.types
            .get(name)
            .map(Arc::as_ref)
            .ok_or_else(|| NqlError::UnknownType(name.to_string()))
    }

    pub fn relation(&self, name: &str) -> Result<&RelationDecl> {
        self.relations
            .get(name)
            .map(Arc::as_ref)
            .ok_or_else(|| NqlError::UnknownRelation(name.to_string()))
    }

    pub fn group(&self, name: &str) -> Option<&RelationGroup> {
        self.groups.get(name).map(Arc::as_ref)
    }

    pub fn types(&self) -> impl Iterator<Item = &TypeDecl> {
        self.types.values().map(Arc::as_ref)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.relations.values().map(Arc::as_ref)
    }

    pub fn groups(&self) -> impl Iterator<Item = &RelationGroup> {
        self.groups.values().map(Arc::as_ref)
    }

    /// Total stored (relation, subject, object) entries.
    pub fn num_facts(&self) -> usize {
        self.relations.values().map(|r| r.matrix.nnz()).sum()
    }

    /// Sum of entity counts over all non-group types.
    pub fn num_entities(&self) -> usize {
        self.types
            .iter()
            .filter(|(name, _)| !self.groups.contains_key(*name))
            .map(|(_, t)| t.cardinality())
            .sum()
    }

    /// Approximate heap footprint of matrices and symbol tables.
    pub fn heap_bytes(&self) -> usize {
        let rel: usize = self
            .relations
            .values()
            .map(|r| r.matrix.heap_bytes() + r.transpose.heap_bytes())
            .sum();
        let sym: usize = self
            .types
            .values()
            .map(|t| {
                t.names
                    .iter()
                    .map(|n| 2 * n.capacity() + 3 * std::mem::size_of::<String>() + 16)
                    .sum::<usize>()
            })
            .sum();
        rel + sym
    }

    /// Assembles a KB from named entity lists and prebuilt matrices, whose
    /// rows and columns index the domain and range entity lists.
    pub fn from_parts(
        types: Vec<(String, Vec<String>)>,
        relations: Vec<(String, String, String, SparseMatrix)>,
    ) -> Result<KnowledgeBase> {
        let mut kb = KnowledgeBase::default();
        for (name, names) in types {
            if kb.types.contains_key(&name) {
                return Err(NqlError::Validation(format!("type `{name}` declared twice")));
            }
            let decl = TypeDecl::new(&name, names, false)?;
            kb.types.insert(name, Arc::new(decl));
        }
        for (name, domain, range, matrix) in relations {
            let rows = kb.type_decl(&domain)?.cardinality();
            let cols = kb.type_decl(&range)?.cardinality();
            if (matrix.n_rows(), matrix.n_cols()) != (rows, cols) {
                return Err(ShapeError::new(
                    "relation matrix",
                    format!("{name}: {}x{}", matrix.n_rows(), matrix.n_cols()),
                    format!("{domain} x {range} = {rows}x{cols}"),
                )
                .into());
            }
            if kb.relations.contains_key(&name) {
                return Err(NqlError::Validation(format!("relation `{name}` declared twice")));
            }
            let decl = RelationDecl::new(&name, &domain, &range, matrix);
            kb.relations.insert(name, Arc::new(decl));
        }
        Ok(kb)
    }

    /// Returns a KB extended with a relation group. All members must share
    /// their domain and range types; the group name becomes a new type.
    pub fn make_group(&self, group_name: &str, members: &[&str]) -> Result<KnowledgeBase> {
        let mut kb = self.clone();
        kb.insert_group(group_name, members)?;
        Ok(kb)
    }

    pub(crate) fn insert_group(&mut self, group_name: &str, members: &[&str]) -> Result<()> {
        if members.is_empty() {
            return Err(NqlError::Validation(format!(
                "relation group `{group_name}` has no members"
            )));
        }
        if self.types.contains_key(group_name) {
            return Err(NqlError::Validation(format!(
                "relation group `{group_name}` collides with an existing type name"
            )));
        }
        let rels = members
            .iter()
            .map(|m| {
                self.relations
                    .get(*m)
                    .cloned()
                    .ok_or_else(|| NqlError::UnknownRelation(m.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let sig = (rels[0].domain.clone(), rels[0].range.clone());
        let offending: Vec<String> = rels
            .iter()
            .filter(|r| (r.domain.as_str(), r.range.as_str()) != (sig.0.as_str(), sig.1.as_str()))
            .map(|r| format!("{} ({} -> {})", r.name, r.domain, r.range))
            .collect();
        if !offending.is_empty() {
            return Err(NqlError::Type(format!(
                "relation group `{group_name}` expects members of signature {} -> {}; offending: {}",
                sig.0,
                sig.1,
                offending.join(", ")
            )));
        }
        let induced = Arc::new(TypeDecl::new(
            group_name,
            members.iter().map(|m| m.to_string()).collect(),
            false,
        )?);
        self.types.insert(group_name.to_string(), induced.clone());
        self.groups.insert(
            group_name.to_string(),
            Arc::new(RelationGroup {
                name: group_name.to_string(),
                domain: sig.0,
                range: sig.1,
                members: rels,
                induced,
            }),
        );
        Ok(())
    }

    /// Converts batch rows of type `type_name` back to entity names, sorted
    /// by weight descending with ties broken by entity index. Zero entries
    /// and entries below `min_weight` are dropped.
    pub fn decode(
        &self,
        batch: &DenseBatch,
        type_name: &str,
        top_k: Option<usize>,
        min_weight: f64,
    ) -> Result<Vec<DecodedSet>> {
        let ty = self.type_decl(type_name)?;
        if batch.cols() != ty.cardinality() {
            return Err(ShapeError::new(
                "decode",
                batch.shape_str(),
                format!("type {} with {} entities", ty.name, ty.cardinality()),
            )
            .into());
        }
        Ok((0..batch.rows())
            .map(|b| {
                let mut hits: Vec<(usize, f64)> = batch
                    .row(b)
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, w)| w != 0.0 && w >= min_weight)
                    .collect();
                hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                if let Some(k) = top_k {
                    hits.truncate(k);
                }
                hits.into_iter().map(|(i, w)| (ty.names[i].clone(), w)).collect()
            })
            .collect())
    }
}

/// Renders a decoded set in multiset notation, e.g. `{'blue': 0.9, 'red': 1.0}`.
pub fn format_multiset(set: &[(String, f64)]) -> String {
    let body: Vec<String> = set
        .iter()
        .map(|(n, w)| format!("{}: {:?}", quote(n), w))
        .collect();
    format!("{{{}}}", body.join(", "))
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

struct TypeBuilder {
    declared: Vec<String>,
    index: HashMap<String, u32>,
    extra: Vec<String>,
    closed: bool,
    oov: bool,
}

impl TypeBuilder {
    fn intern(&mut self, type_name: &str, name: &str, line: Option<usize>) -> Result<u32> {
        if let Some(&i) = self.index.get(name) {
            return Ok(i);
        }
        if self.closed {
            return Err(NqlError::Fact {
                line,
                message: format!("entity `{name}` is not a member of closed type `{type_name}`"),
            });
        }
        let i = (self.declared.len() + self.extra.len()) as u32;
        self.extra.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    /// Final names and the provisional-id → final-index map. Declared
    /// entities keep declaration order; fact-introduced ones are sorted.
    fn finish(self) -> (Vec<String>, Vec<u32>, bool) {
        let base = self.declared.len();
        let mut order: Vec<usize> = (0..self.extra.len()).collect();
        order.sort_by(|&a, &b| self.extra[a].cmp(&self.extra[b]));
        let mut remap: Vec<u32> = (0..base as u32).collect();
        remap.resize(base + self.extra.len(), 0);
        for (rank, &j) in order.iter().enumerate() {
            remap[base + j] = (base + rank) as u32;
        }
        let mut extra = self.extra;
        let mut names = self.declared;
        let mut sorted: Vec<String> = order.iter().map(|&j| std::mem::take(&mut extra[j])).collect();
        names.append(&mut sorted);
        (names, remap, self.oov)
    }
}

/// Builds a frozen KB. See [`try_build_kb`] for fallible fact streams.
pub fn build_kb(schema: &SchemaSpec, facts: impl IntoIterator<Item = FactTriple>) -> Result<KnowledgeBase> {
    try_build_kb(schema, facts.into_iter().map(Ok))
}

/// Builds a frozen KB from a schema and a stream of facts.
///
/// Duplicate `(relation, subject, object)` facts have their weights summed.
/// Entities named only in facts are added to the relevant open type; the
/// resulting KB is identical for any permutation of the fact stream.
pub fn try_build_kb(
    schema: &SchemaSpec,
    facts: impl IntoIterator<Item = Result<FactTriple>>,
) -> Result<KnowledgeBase> {
    schema.validate()?;
    let mut types: BTreeMap<String, TypeBuilder> = BTreeMap::new();
    for t in &schema.types {
        let index = t
            .entities
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        types.insert(
            t.name.clone(),
            TypeBuilder {
                declared: t.entities.clone(),
                index,
                extra: Vec::new(),
                closed: t.closed,
                oov: t.oov,
            },
        );
    }
    let rel_index: HashMap<&str, usize> = schema
        .relations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let mut triplets: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); schema.relations.len()];

    for fact in facts {
        let fact = fact?;
        let &ri = rel_index
            .get(fact.relation.as_str())
            .ok_or_else(|| NqlError::Fact {
                line: fact.line,
                message: format!("undeclared relation `{}`", fact.relation),
            })?;
        if !fact.weight.is_finite() || fact.weight < 0.0 {
            return Err(NqlError::Validation(format!(
                "{}fact weight {} must be finite and nonnegative",
                fact.line.map(|l| format!("line {l}: ")).unwrap_or_default(),
                fact.weight
            )));
        }
        let spec = &schema.relations[ri];
        let s = types.get_mut(&spec.domain).expect("validated schema").intern(
            &spec.domain,
            &fact.subject,
            fact.line,
        )?;
        let o = types.get_mut(&spec.range).expect("validated schema").intern(
            &spec.range,
            &fact.object,
            fact.line,
        )?;
        triplets[ri].push((s, o, fact.weight));
    }

    let mut kb = KnowledgeBase::default();
    let mut remaps: HashMap<String, Vec<u32>> = HashMap::new();
    for (name, tb) in types {
        let (names, remap, oov) = tb.finish();
        kb.types
            .insert(name.clone(), Arc::new(TypeDecl::new(&name, names, oov)?));
        remaps.insert(name, remap);
    }
    for (spec, trips) in schema.relations.iter().zip(triplets) {
        let n_rows = kb.types[&spec.domain].cardinality();
        let n_cols = kb.types[&spec.range].cardinality();
        let (rs, cs) = (&remaps[&spec.domain], &remaps[&spec.range]);
        let matrix = SparseMatrix::from_triplets(
            n_rows,
            n_cols,
            trips
                .into_iter()
                .map(|(s, o, w)| (rs[s as usize] as usize, cs[o as usize] as usize, w)),
        )
        .map_err(|e| NqlError::Validation(format!("relation `{}`: {e}", spec.name)))?;
        kb.relations.insert(
            spec.name.clone(),
            Arc::new(RelationDecl::new(&spec.name, &spec.domain, &spec.range, matrix)),
        );
    }
    for g in &schema.groups {
        let members: Vec<&str> = g.members.iter().map(String::as_str).collect();
        kb.insert_group(&g.name, &members)?;
    }
    Ok(kb)
}
