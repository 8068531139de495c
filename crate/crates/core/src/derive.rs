//! Synset, lexeme and baseline embeddings derived from a trained model, and
//! nearest-neighbor search across words, lexemes and synsets.

use std::cmp::Ordering;
use std::fmt;

use crate::autoencoder::{
    encode_dimension, fill_empty_synsets, word_columns, FillReport, TrainedModel,
};
use crate::embedding::{cosine, norm, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::resource::ResourceGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ItemKind {
    Word,
    Lexeme,
    Synset,
}

impl ItemKind {
    /// Id prefix used in output files: `W/`, `L/` or `S/`.
    pub fn prefix(self) -> &'static str {
        match self {
            ItemKind::Word => "W/",
            ItemKind::Lexeme => "L/",
            ItemKind::Synset => "S/",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedItem {
    pub kind: ItemKind,
    pub id: String,
}

impl TypedItem {
    pub fn new(kind: ItemKind, id: impl Into<String>) -> Self {
        TypedItem {
            kind,
            id: id.into(),
        }
    }

    /// Parse a prefixed id such as `W/suit`.
    pub fn parse(s: &str) -> Option<Self> {
        [ItemKind::Word, ItemKind::Lexeme, ItemKind::Synset]
            .into_iter()
            .find_map(|kind| {
                s.strip_prefix(kind.prefix())
                    .map(|id| TypedItem::new(kind, id))
            })
    }
}

impl fmt::Display for TypedItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.id)
    }
}

fn check_model(model: &TrainedModel, w: &EmbeddingMatrix, graph: &ResourceGraph) -> Result<()> {
    if model.dim() != w.dim() {
        return Err(Error::Shape(format!(
            "model has {} dimensions, embeddings {}",
            model.dim(),
            w.dim()
        )));
    }
    if model.pattern.num_words() != graph.num_words()
        || model.pattern.num_synsets() != graph.num_synsets()
        || model.pattern.nnz() != graph.lexemes().len()
    {
        return Err(Error::Shape(
            "model was trained on a different resource".to_owned(),
        ));
    }
    Ok(())
}

/// `S = E w` per dimension, followed by [`fill_empty_synsets`].
pub fn derive_synset_embeddings(
    model: &TrainedModel,
    w: &EmbeddingMatrix,
    graph: &ResourceGraph,
) -> Result<(EmbeddingMatrix, FillReport)> {
    check_model(model, w, graph)?;
    let columns = word_columns(w, graph)?;
    let n = w.dim();
    let mut data = vec![0.0; graph.num_synsets() * n];
    for (d, (sys, column)) in model.systems.iter().zip(&columns).enumerate() {
        let s = encode_dimension(&model.pattern, &sys.e, column)?;
        for (j, v) in s.into_iter().enumerate() {
            data[j * n + d] = v;
        }
    }
    let ids = graph.synsets().iter().map(|s| s.id.clone()).collect();
    let s = EmbeddingMatrix::new(ids, data, n)?;
    Ok(fill_empty_synsets(&s, graph))
}

/// The two lexeme embeddings the autoencoder defines for one lexeme.
#[derive(Clone, Debug, PartialEq)]
pub struct LexemeEmbeddingPair {
    /// `E_ji * w_i` per dimension.
    pub encoder_side: Vec<f64>,
    /// `D_ij * s_j` per dimension.
    pub decoder_side: Vec<f64>,
}

impl LexemeEmbeddingPair {
    pub fn combined(&self, theta: f64) -> Vec<f64> {
        self.encoder_side
            .iter()
            .zip(&self.decoder_side)
            .map(|(e, d)| theta * e + (1.0 - theta) * d)
            .collect()
    }
}

/// Encoder- and decoder-side lexeme embeddings, in the graph's lexeme order.
pub fn derive_lexeme_pairs(
    model: &TrainedModel,
    w: &EmbeddingMatrix,
    s: &EmbeddingMatrix,
    graph: &ResourceGraph,
) -> Result<Vec<LexemeEmbeddingPair>> {
    check_model(model, w, graph)?;
    if s.dim() != w.dim() {
        return Err(Error::Shape(format!(
            "synset embeddings have {} dimensions, word embeddings {}",
            s.dim(),
            w.dim()
        )));
    }
    let columns = word_columns(w, graph)?;
    let n = w.dim();
    let mut pairs = Vec::with_capacity(graph.lexemes().len());
    for lexeme in graph.lexemes() {
        let (Some(i), Some(j)) = (
            graph.word_index(&lexeme.word),
            graph.synset_index(&lexeme.synset),
        ) else {
            return Err(Error::DanglingReference {
                entity: format!("lexeme {}", lexeme.id()),
                kind: "word or synset",
                id: lexeme.id(),
            });
        };
        let k = model
            .pattern
            .find(j, i)
            .expect("pattern built from the same graph");
        let s_row = s
            .get(&lexeme.synset)
            .ok_or_else(|| Error::Shape(format!("no synset embedding for `{}`", lexeme.synset)))?;
        let mut pair = LexemeEmbeddingPair {
            encoder_side: vec![0.0; n],
            decoder_side: vec![0.0; n],
        };
        for (d, sys) in model.systems.iter().enumerate() {
            pair.encoder_side[d] = sys.e[k] * columns[d][i];
            pair.decoder_side[d] = sys.d[k] * s_row[d];
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Lexeme embeddings `theta * encoder_side + (1 - theta) * decoder_side`,
/// with ids `word%synset`.
pub fn derive_lexeme_embeddings(
    model: &TrainedModel,
    w: &EmbeddingMatrix,
    s: &EmbeddingMatrix,
    graph: &ResourceGraph,
    theta: f64,
) -> Result<EmbeddingMatrix> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::config("theta", format!("{theta} is outside [0, 1]")));
    }
    let pairs = derive_lexeme_pairs(model, w, s, graph)?;
    let ids = graph.lexemes().iter().map(|l| l.id()).collect();
    let rows: Vec<Vec<f64>> = pairs.iter().map(|p| p.combined(theta)).collect();
    EmbeddingMatrix::from_rows(ids, &rows, w.dim())
}

/// Baseline synset vectors: the sum of the member words' embeddings.
pub fn naive_synset_embeddings(graph: &ResourceGraph, w: &EmbeddingMatrix) -> EmbeddingMatrix {
    let n = w.dim();
    let mut data = vec![0.0; graph.num_synsets() * n];
    for lexeme in graph.lexemes() {
        let (Some(j), Some(row)) = (graph.synset_index(&lexeme.synset), w.get(&lexeme.word)) else {
            continue;
        };
        for (acc, v) in data[j * n..(j + 1) * n].iter_mut().zip(row) {
            *acc += v;
        }
    }
    let ids = graph.synsets().iter().map(|s| s.id.clone()).collect();
    EmbeddingMatrix::new(ids, data, n).expect("synset ids are unique and sums finite")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub item: TypedItem,
    pub cosine: f64,
}

/// Top-`k` items by cosine to `query`, pooled over all stores.
///
/// Ties are broken by kind (word, lexeme, synset) and then by id. Zero-norm
/// rows never appear.
pub fn nearest_neighbors(
    query: &[f64],
    stores: &[(ItemKind, &EmbeddingMatrix)],
    k: usize,
    exclude: Option<&TypedItem>,
) -> Result<Vec<Neighbor>> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    let mut found = Vec::new();
    for &(kind, store) in stores {
        if store.dim() != query.len() {
            return Err(Error::Shape(format!(
                "query has {} dimensions, {} store has {}",
                query.len(),
                kind.prefix(),
                store.dim()
            )));
        }
        for (id, row) in store.rows() {
            if norm(row) == 0.0 {
                continue;
            }
            if exclude.is_some_and(|x| x.kind == kind && x.id == id) {
                continue;
            }
            found.push(Neighbor {
                item: TypedItem::new(kind, id),
                cosine: cosine(query, row),
            });
        }
    }
    found.sort_by(|a, b| {
        b.cosine
            .partial_cmp(&a.cosine)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.item.cmp(&b.item))
    });
    found.truncate(k);
    Ok(found)
}
