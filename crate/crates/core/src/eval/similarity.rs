//! Context-sensitive word similarity (AvgSim / AvgSimC) on SCWS-style data.

use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use rayon::prelude::*;

use super::spearman::spearman;
use crate::embedding::{cosine, sentence_centroid, EmbeddingMatrix, TokenNormalizer};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SenseMethod {
    /// Plain mean of the sense vectors.
    AvgSim,
    /// Mean weighted by each sense's cosine to the context.
    AvgSimC,
}

impl FromStr for SenseMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "avgsim" => Ok(SenseMethod::AvgSim),
            "avgsimc" => Ok(SenseMethod::AvgSimC),
            _ => Err(format!("unknown method `{s}` (expected avgsim or avgsimc)")),
        }
    }
}

/// Collapse a word's sense vectors into one vector.
///
/// AvgSimC weights are `max(cos(sense, context), 0)`; if every weight is 0 the
/// plain mean is used.
pub fn sense_vector<V: AsRef<[f64]>>(
    senses: &[V],
    method: SenseMethod,
    context: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let Some(first) = senses.first() else {
        return Err(Error::Empty("word has no sense vectors".to_owned()));
    };
    let dim = first.as_ref().len();
    if senses.iter().any(|s| s.as_ref().len() != dim) {
        return Err(Error::Shape("sense vectors differ in length".to_owned()));
    }
    let weights: Vec<f64> = match method {
        SenseMethod::AvgSim => vec![1.0; senses.len()],
        SenseMethod::AvgSimC => {
            let context =
                context.ok_or_else(|| Error::config("method", "AvgSimC needs a context vector"))?;
            if context.len() != dim {
                return Err(Error::Shape(format!(
                    "context has {} dimensions, senses {dim}",
                    context.len()
                )));
            }
            let w: Vec<f64> = senses
                .iter()
                .map(|s| cosine(s.as_ref(), context).max(0.0))
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                vec![1.0; senses.len()]
            } else {
                w
            }
        }
    };
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; dim];
    for (sense, weight) in senses.iter().zip(&weights) {
        for (acc, v) in out.iter_mut().zip(sense.as_ref()) {
            *acc += weight * v;
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Sense vectors available for each word.
#[derive(Clone, Debug, Default)]
pub struct SenseInventory {
    senses: HashMap<String, Vec<Vec<f64>>>,
}

impl SenseInventory {
    /// Group lexeme rows (ids `word%synset`) by word.
    pub fn from_lexemes(lexemes: &EmbeddingMatrix) -> Self {
        let mut senses: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
        for (id, row) in lexemes.rows() {
            if let Some((word, _)) = id.rsplit_once('%') {
                senses
                    .entry(word.to_owned())
                    .or_default()
                    .push(row.to_vec());
            }
        }
        SenseInventory { senses }
    }

    /// The synset vectors of each word, using lexeme ids to find which
    /// synsets a word belongs to.
    pub fn from_synsets(lexemes: &EmbeddingMatrix, synsets: &EmbeddingMatrix) -> Result<Self> {
        let mut senses: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
        for id in lexemes.ids() {
            let Some((word, synset)) = id.rsplit_once('%') else {
                continue;
            };
            let row = synsets
                .get(synset)
                .ok_or_else(|| Error::Shape(format!("no embedding for synset `{synset}`")))?;
            senses
                .entry(word.to_owned())
                .or_default()
                .push(row.to_vec());
        }
        Ok(SenseInventory { senses })
    }

    /// One sense per word: the word vector itself.
    pub fn from_words(words: &EmbeddingMatrix) -> Self {
        SenseInventory {
            senses: words
                .rows()
                .map(|(id, row)| (id.to_owned(), vec![row.to_vec()]))
                .collect(),
        }
    }

    pub fn senses(&self, word: &str) -> Option<&[Vec<f64>]> {
        self.senses.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.senses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senses.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextualPair {
    pub word1: String,
    pub pos1: String,
    pub context1: Vec<String>,
    pub word2: String,
    pub pos2: String,
    pub context2: Vec<String>,
    pub rating: f64,
}

/// Split a context into tokens, dropping `<b>`/`</b>` target markup.
/// Returns the tokens and the position of the marked target, if any.
fn tokenize_context(text: &str) -> (Vec<String>, Option<usize>) {
    let spaced = text.replace("<b>", " <b> ").replace("</b>", " </b> ");
    let mut tokens = Vec::new();
    let mut target = None;
    for tok in spaced.split_whitespace() {
        match tok {
            "<b>" => target = Some(tokens.len()),
            "</b>" => {}
            t => tokens.push(t.to_owned()),
        }
    }
    (tokens, target)
}

/// Parse the tab-separated SCWS layout:
/// `id word1 pos1 word2 pos2 context1 context2 rating [ratings...]`.
pub fn parse_scws(text: &str) -> Result<Vec<ContextualPair>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected at least 8 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let rating: f64 = fields[7]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad rating `{}`", fields[7])))?;
        if !rating.is_finite() {
            return Err(Error::parse(line_no, "non-finite rating"));
        }
        let context = |field: &str, word: &str| {
            let (tokens, target) = tokenize_context(field);
            if target.is_none() && !tokens.iter().any(|t| t == word) {
                return Err(Error::parse(
                    line_no,
                    format!("context does not contain target word `{word}`"),
                ));
            }
            Ok(tokens)
        };
        let context1 = context(fields[5], fields[1])?;
        let context2 = context(fields[6], fields[3])?;
        pairs.push(ContextualPair {
            word1: fields[1].to_owned(),
            pos1: fields[2].to_owned(),
            context1,
            word2: fields[3].to_owned(),
            pos2: fields[4].to_owned(),
            context2,
            rating,
        });
    }
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    /// System similarity for each scored pair, in input order.
    pub scores: Vec<f64>,
    /// Human rating for each scored pair.
    pub ratings: Vec<f64>,
    /// Pairs skipped because a word has no sense vectors.
    pub skipped: usize,
    pub rho: f64,
}

/// Score every pair and correlate with the human ratings.
///
/// Context vectors sum the word embeddings of the context, excluding stop
/// words and the test word itself.
pub fn score_dataset(
    pairs: &[ContextualPair],
    inventory: &SenseInventory,
    context_embeddings: &EmbeddingMatrix,
    method: SenseMethod,
    stopwords: &HashSet<String>,
    normalizer: TokenNormalizer,
) -> Result<ScoreReport> {
    let scored: Vec<Option<(f64, f64)>> = pairs
        .par_iter()
        .map(|pair| -> Result<Option<(f64, f64)>> {
            let side = |word: &str, context: &[String]| -> Result<Option<Vec<f64>>> {
                let word = normalizer.apply(word);
                let Some(senses) = inventory.senses(&word) else {
                    return Ok(None);
                };
                let tokens: Vec<String> = context
                    .iter()
                    .map(|t| normalizer.apply(t).into_owned())
                    .collect();
                let c = sentence_centroid(&tokens, context_embeddings, stopwords, Some(&word));
                sense_vector(senses, method, Some(&c.vector)).map(Some)
            };
            let a = side(&pair.word1, &pair.context1)?;
            let b = side(&pair.word2, &pair.context2)?;
            Ok(match (a, b) {
                (Some(a), Some(b)) => Some((cosine(&a, &b), pair.rating)),
                _ => None,
            })
        })
        .collect::<Result<_>>()?;

    let skipped = scored.iter().filter(|s| s.is_none()).count();
    let (scores, ratings): (Vec<f64>, Vec<f64>) = scored.into_iter().flatten().unzip();
    if scores.is_empty() {
        return Err(Error::Empty(format!(
            "all {} pair(s) were skipped: no sense vectors for their words",
            pairs.len()
        )));
    }
    if skipped > 0 {
        log::info!(
            "skipped {skipped} of {} pair(s) with uncovered words",
            pairs.len()
        );
    }
    let rho = spearman(&scores, &ratings)?;
    Ok(ScoreReport {
        scores,
        ratings,
        skipped,
        rho,
    })
}
