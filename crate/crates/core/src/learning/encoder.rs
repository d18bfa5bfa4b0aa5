use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Constraint, Graph, ParamId, ParamStore, Tensor};

/// Placeholder token that replaces the seed entity's name in a question.
pub const ENTITY_TOKEN: &str = "__entity__";
/// Vocabulary index shared by every unknown feature.
pub const UNK: usize = 0;

/// Lowercased word tokens with the seed's name replaced by [`ENTITY_TOKEN`].
pub fn tokenize(question: &str, seed: &str) -> Vec<String> {
    let masked = if seed.is_empty() {
        question.to_string()
    } else {
        question.replace(seed, &format!(" {ENTITY_TOKEN} "))
    };
    masked
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Unigram features plus positions counted from the end (`word@-k`) and
/// from the start (`word@+k`).
pub fn features(question: &str, seed: &str) -> Vec<String> {
    let toks = tokenize(question, seed);
    let n = toks.len();
    let mut out = Vec::with_capacity(3 * n);
    for (i, t) in toks.iter().enumerate() {
        out.push(t.clone());
        out.push(format!("{t}@-{}", n - i));
        out.push(format!("{t}@+{}", i + 1));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    /// `words[0]` is the unknown-feature slot.
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Self {
        let mut all = vec!["<unk>".to_string()];
        all.extend(words.into_iter().filter(|w| w != "<unk>"));
        let index = all.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary { words: all, index }
    }

    /// All features of the given `(question, seed)` pairs, sorted.
    pub fn build<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let set: BTreeSet<String> = pairs.into_iter().flat_map(|(q, s)| features(q, s)).collect();
        Self::from_words(set.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 1
    }

    /// Words in index order, excluding the unknown slot.
    pub fn words(&self) -> &[String] {
        &self.words[1..]
    }

    /// Feature indices of a question; an empty question yields `[UNK]`.
    pub fn encode(&self, question: &str, seed: &str) -> Vec<usize> {
        let ids: Vec<usize> = features(question, seed)
            .iter()
            .map(|f| self.index.get(f).copied().unwrap_or(UNK))
            .collect();
        if ids.is_empty() {
            vec![UNK]
        } else {
            ids
        }
    }
}

pub(crate) fn uniform_init(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect()
}

/// `x · W + b`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Affine {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let weight = store.add(
            &format!("{name}.weight"),
            input,
            output,
            uniform_init(rng, input * output),
            Constraint::Identity,
        )?;
        let bias = store.add(
            &format!("{name}.bias"),
            1,
            output,
            uniform_init(rng, output),
            Constraint::Identity,
        )?;
        Ok(Affine { weight, bias })
    }

    pub fn apply(&self, g: &mut Graph<'_>, store: &ParamStore, x: Tensor) -> Result<Tensor> {
        let w = g.param(store, self.weight);
        let b = g.param(store, self.bias);
        let xw = g.matmul(x, w)?;
        g.add(xw, b)
    }
}

/// Bag-of-features question encoder: the mean of feature embeddings.
#[derive(Debug, Clone)]
pub struct QueryEncoder {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub embedding: ParamId,
}

impl QueryEncoder {
    pub fn new(store: &mut ParamStore, vocab: Vocabulary, dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let embedding = store.add(
            "encoder.embedding",
            vocab.len(),
            dim,
            uniform_init(rng, vocab.len() * dim),
            Constraint::Identity,
        )?;
        Ok(QueryEncoder {
            vocab,
            dim,
            embedding,
        })
    }

    /// `B × dim` encodings of `(question, seed)` pairs.
    pub fn encode(
        &self,
        g: &mut Graph<'_>,
        store: &ParamStore,
        questions: &[(&str, &str)],
    ) -> Result<Tensor> {
        let tokens = questions.iter().map(|(q, s)| self.vocab.encode(q, s)).collect();
        let table = g.param(store, self.embedding);
        g.mean_embed(table, tokens)
    }
}
