//! Embedding-based feature sets for word sense disambiguation classifiers.
//!
//! For a target word with `k` senses, centroid `c` of its sentence and sense
//! vectors `s_1..s_k` (all of dimension `n`):
//!
//! - cosine: `cos(c, s_1), ..., cos(c, s_k)` (`k` values)
//! - product: `c * s_1, ..., c * s_k` elementwise, sense-major (`n k` values)
//! - raw: `c, s_1, ..., s_k` concatenated (`n (k + 1)` values)

use std::collections::HashSet;
use std::io::Write;
use std::str::FromStr;

use crate::embedding::{cosine, sentence_centroid, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::resource::ResourceGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureVariant {
    Cosine,
    Product,
    Raw,
}

impl FeatureVariant {
    pub fn expected_len(self, n: usize, k: usize) -> usize {
        match self {
            FeatureVariant::Cosine => k,
            FeatureVariant::Product => n * k,
            FeatureVariant::Raw => n * (k + 1),
        }
    }
}

impl FromStr for FeatureVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(FeatureVariant::Cosine),
            "product" => Ok(FeatureVariant::Product),
            "raw" => Ok(FeatureVariant::Raw),
            _ => Err(format!(
                "unknown feature variant `{s}` (expected cosine, product or raw)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub variant: FeatureVariant,
    pub n: usize,
    pub k: usize,
    pub values: Vec<f64>,
}

pub fn wsd_feature_sets<V: AsRef<[f64]>>(
    centroid: &[f64],
    synsets: &[V],
    variant: FeatureVariant,
) -> Result<FeatureVector> {
    let k = synsets.len();
    if k == 0 {
        return Err(Error::Empty("target word has no synsets".to_owned()));
    }
    let n = centroid.len();
    if let Some(bad) = synsets.iter().find(|s| s.as_ref().len() != n) {
        return Err(Error::Shape(format!(
            "synset vector has {} dimensions, centroid {n}",
            bad.as_ref().len()
        )));
    }
    let values = match variant {
        FeatureVariant::Cosine => synsets
            .iter()
            .map(|s| cosine(centroid, s.as_ref()))
            .collect(),
        FeatureVariant::Product => synsets
            .iter()
            .flat_map(|s| centroid.iter().zip(s.as_ref()).map(|(c, v)| c * v))
            .collect(),
        FeatureVariant::Raw => centroid
            .iter()
            .chain(synsets.iter().flat_map(|s| s.as_ref().iter()))
            .copied()
            .collect(),
    };
    Ok(FeatureVector {
        variant,
        n,
        k,
        values,
    })
}

/// One disambiguation instance: a target word in a tokenized sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WsdInstance {
    pub id: String,
    pub target: String,
    pub tokens: Vec<String>,
}

/// Parse `<instanceId>\t<targetWord>\t<space-separated sentence>` lines.
pub fn parse_instances(text: &str) -> Result<Vec<WsdInstance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(idx, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, target, sentence] = fields.as_slice() else {
                return Err(Error::parse(
                    idx + 1,
                    "expected `<id>\\t<target>\\t<sentence>`",
                ));
            };
            if id.contains(char::is_whitespace) {
                return Err(Error::parse(
                    idx + 1,
                    format!("instance id `{id}` contains whitespace"),
                ));
            }
            Ok(WsdInstance {
                id: (*id).to_owned(),
                target: (*target).to_owned(),
                tokens: sentence.split_whitespace().map(str::to_owned).collect(),
            })
        })
        .collect()
}

/// Features for every instance whose target has at least one sense in
/// `graph`. Senses follow the resource's sense order. Returns the features and
/// the number of skipped instances.
pub fn extract_features(
    instances: &[WsdInstance],
    graph: &ResourceGraph,
    synsets: &EmbeddingMatrix,
    words: &EmbeddingMatrix,
    stopwords: &HashSet<String>,
    variant: FeatureVariant,
) -> Result<(Vec<(String, FeatureVector)>, usize)> {
    let mut out = Vec::with_capacity(instances.len());
    let mut skipped = 0;
    for inst in instances {
        let senses = graph
            .senses_of(&inst.target)
            .map(|id| {
                synsets
                    .get(id)
                    .ok_or_else(|| Error::Shape(format!("no embedding for synset `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if senses.is_empty() {
            skipped += 1;
            continue;
        }
        let c = sentence_centroid(&inst.tokens, words, stopwords, None);
        out.push((
            inst.id.clone(),
            wsd_feature_sets(&c.vector, &senses, variant)?,
        ));
    }
    if skipped > 0 {
        log::info!("skipped {skipped} instance(s) whose target has no senses");
    }
    Ok((out, skipped))
}

/// One line per instance: `<instanceId> <v1> ... <vm>`.
pub fn write_features<W: Write>(
    features: &[(String, FeatureVector)],
    mut out: W,
) -> std::io::Result<()> {
    for (id, fv) in features {
        write!(out, "{id}")?;
        for v in &fv.values {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}
