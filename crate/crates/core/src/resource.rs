//! Lexical resource graph: words, synsets, the lexemes joining them and typed
//! synset relations.
//!
//! Resources are read from a line-based format with tab-separated fields
//! (shown here as `<TAB>`):
//!
//! ```text
//! # comment
//! word<TAB><wordId>
//! synset<TAB><synsetId>[<TAB><pos>]
//! lexeme<TAB><wordId><TAB><synsetId>
//! relation<TAB><kind><TAB><sourceSynsetId><TAB><targetSynsetId>
//! ```
//!
//! Declarations may appear in any order; references are checked after the
//! whole file has been read. Repeated declarations collapse to one.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The relation types the trainer understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationKind {
    Hypernymy,
    Antonymy,
    Similarity,
    VerbGroup,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] = [
        RelationKind::Hypernymy,
        RelationKind::Antonymy,
        RelationKind::Similarity,
        RelationKind::VerbGroup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Hypernymy => "hypernymy",
            RelationKind::Antonymy => "antonymy",
            RelationKind::Similarity => "similarity",
            RelationKind::VerbGroup => "verb_group",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Synset {
    pub id: String,
    /// Carried for bookkeeping only; training ignores it.
    pub pos: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexemeKey {
    pub word: String,
    pub synset: String,
}

impl LexemeKey {
    pub fn new(word: impl Into<String>, synset: impl Into<String>) -> Self {
        LexemeKey {
            word: word.into(),
            synset: synset.into(),
        }
    }

    /// Serialized form used in embedding files: `word%synset`.
    pub fn id(&self) -> String {
        format!("{}%{}", self.word, self.synset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationTuple {
    pub kind: RelationKind,
    pub source: String,
    pub target: String,
}

/// A lexical resource. Words and synsets get dense indices in declaration
/// order; lexemes keep their first-seen order, which also fixes the sense
/// order of each word.
#[derive(Clone, Debug, Default)]
pub struct ResourceGraph {
    words: Vec<String>,
    synsets: Vec<Synset>,
    lexemes: Vec<LexemeKey>,
    relations: Vec<RelationTuple>,
    word_index: HashMap<String, usize>,
    synset_index: HashMap<String, usize>,
}

impl PartialEq for ResourceGraph {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
            && self.synsets == other.synsets
            && self.lexemes == other.lexemes
            && self.relations == other.relations
    }
}

impl ResourceGraph {
    /// Assemble a graph without validating references. Duplicates collapse to
    /// their first occurrence.
    pub fn from_parts(
        words: impl IntoIterator<Item = String>,
        synsets: impl IntoIterator<Item = Synset>,
        lexemes: impl IntoIterator<Item = LexemeKey>,
        relations: impl IntoIterator<Item = RelationTuple>,
    ) -> Self {
        let mut graph = ResourceGraph::default();
        for word in words {
            if !graph.word_index.contains_key(&word) {
                graph.word_index.insert(word.clone(), graph.words.len());
                graph.words.push(word);
            }
        }
        for synset in synsets {
            if !graph.synset_index.contains_key(&synset.id) {
                graph
                    .synset_index
                    .insert(synset.id.clone(), graph.synsets.len());
                graph.synsets.push(synset);
            }
        }
        let mut seen = HashSet::new();
        for lexeme in lexemes {
            if seen.insert(lexeme.clone()) {
                graph.lexemes.push(lexeme);
            }
        }
        let mut seen = HashSet::new();
        for relation in relations {
            if seen.insert(relation.clone()) {
                graph.relations.push(relation);
            }
        }
        graph
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn lexemes(&self) -> &[LexemeKey] {
        &self.lexemes
    }

    pub fn relations(&self) -> &[RelationTuple] {
        &self.relations
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_synsets(&self) -> usize {
        self.synsets.len()
    }

    pub fn word_index(&self, id: &str) -> Option<usize> {
        self.word_index.get(id).copied()
    }

    pub fn synset_index(&self, id: &str) -> Option<usize> {
        self.synset_index.get(id).copied()
    }

    /// Synsets of `word` in resource sense order.
    pub fn senses_of<'a>(&'a self, word: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.lexemes
            .iter()
            .filter(move |l| l.word == word)
            .map(|l| l.synset.as_str())
    }

    /// Member words of `synset`.
    pub fn members_of<'a>(&'a self, synset: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.lexemes
            .iter()
            .filter(move |l| l.synset == synset)
            .map(|l| l.word.as_str())
    }

    /// Synsets that no lexeme points to.
    pub fn empty_synsets(&self) -> Vec<usize> {
        let mut has_lexeme = vec![false; self.synsets.len()];
        for lexeme in &self.lexemes {
            if let Some(j) = self.synset_index(&lexeme.synset) {
                has_lexeme[j] = true;
            }
        }
        (0..self.synsets.len())
            .filter(|&j| !has_lexeme[j])
            .collect()
    }
}

/// A broken graph invariant. Violations are reported as data by
/// [`validate_graph`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownWord { entity: String, id: String },
    UnknownSynset { entity: String, id: String },
    SelfRelation { entity: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownWord { entity, id } => {
                write!(f, "{entity}: references unknown word `{id}`")
            }
            Violation::UnknownSynset { entity, id } => {
                write!(f, "{entity}: references unknown synset `{id}`")
            }
            Violation::SelfRelation { entity } => {
                write!(f, "{entity}: source and target are the same synset")
            }
        }
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        match v {
            Violation::UnknownWord { entity, id } => Error::DanglingReference {
                entity,
                kind: "word",
                id,
            },
            Violation::UnknownSynset { entity, id } => Error::DanglingReference {
                entity,
                kind: "synset",
                id,
            },
            v @ Violation::SelfRelation { .. } => Error::InvalidGraph(v.to_string()),
        }
    }
}

pub fn validate_graph(g: &ResourceGraph) -> Vec<Violation> {
    let mut violations = Vec::new();
    for lexeme in &g.lexemes {
        let entity = format!("lexeme {}", lexeme.id());
        if g.word_index(&lexeme.word).is_none() {
            violations.push(Violation::UnknownWord {
                entity: entity.clone(),
                id: lexeme.word.clone(),
            });
        }
        if g.synset_index(&lexeme.synset).is_none() {
            violations.push(Violation::UnknownSynset {
                entity,
                id: lexeme.synset.clone(),
            });
        }
    }
    for rel in &g.relations {
        let entity = format!("relation {} {} {}", rel.kind, rel.source, rel.target);
        for id in [&rel.source, &rel.target] {
            if g.synset_index(id).is_none() {
                violations.push(Violation::UnknownSynset {
                    entity: entity.clone(),
                    id: id.clone(),
                });
            }
        }
        if rel.source == rel.target {
            violations.push(Violation::SelfRelation { entity });
        }
    }
    violations
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResourceFormat {
    #[default]
    Tsv,
}

pub fn load_resource(path: impl AsRef<Path>, format: ResourceFormat) -> Result<ResourceGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        ResourceFormat::Tsv => parse_resource(&text),
    }
}

/// Parse and validate a resource in the TSV format.
pub fn parse_resource(text: &str) -> Result<ResourceGraph> {
    let mut words = Vec::new();
    let mut synsets = Vec::new();
    let mut lexemes = Vec::new();
    let mut relations = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::parse(line_no, "empty field"));
        }
        let arity = |expected: &[usize]| {
            if expected.contains(&fields.len()) {
                Ok(())
            } else {
                Err(Error::parse(
                    line_no,
                    format!("`{}` record has {} field(s)", fields[0], fields.len() - 1),
                ))
            }
        };
        match fields[0] {
            "word" => {
                arity(&[2])?;
                words.push(fields[1].to_owned());
            }
            "synset" => {
                arity(&[2, 3])?;
                synsets.push(Synset {
                    id: fields[1].to_owned(),
                    pos: fields.get(2).map(|p| (*p).to_owned()),
                });
            }
            "lexeme" => {
                arity(&[3])?;
                lexemes.push(LexemeKey::new(fields[1], fields[2]));
            }
            "relation" => {
                arity(&[4])?;
                let kind = fields[1]
                    .parse::<RelationKind>()
                    .map_err(|e| Error::parse(line_no, e))?;
                relations.push(RelationTuple {
                    kind,
                    source: fields[2].to_owned(),
                    target: fields[3].to_owned(),
                });
            }
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("unknown record type `{other}`"),
                ));
            }
        }
    }

    let graph = ResourceGraph::from_parts(words, synsets, lexemes, relations);
    match validate_graph(&graph).into_iter().next() {
        Some(violation) => Err(violation.into()),
        None => Ok(graph),
    }
}

pub fn write_resource<W: Write>(g: &ResourceGraph, mut out: W) -> std::io::Result<()> {
    for word in &g.words {
        writeln!(out, "word\t{word}")?;
    }
    for synset in &g.synsets {
        match &synset.pos {
            Some(pos) => writeln!(out, "synset\t{}\t{pos}", synset.id)?,
            None => writeln!(out, "synset\t{}", synset.id)?,
        }
    }
    for lexeme in &g.lexemes {
        writeln!(out, "lexeme\t{}\t{}", lexeme.word, lexeme.synset)?;
    }
    for rel in &g.relations {
        writeln!(
            out,
            "relation\t{}\t{}\t{}",
            rel.kind, rel.source, rel.target
        )?;
    }
    Ok(())
}

pub fn save_resource(g: &ResourceGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_resource(g, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Restrict the graph to words in `vocab`. Synsets and relations are kept
/// even when a synset loses all of its lexemes.
pub fn intersect_vocabulary(g: &ResourceGraph, vocab: &HashSet<String>) -> ResourceGraph {
    ResourceGraph::from_parts(
        g.words.iter().filter(|w| vocab.contains(*w)).cloned(),
        g.synsets.iter().cloned(),
        g.lexemes
            .iter()
            .filter(|l| vocab.contains(&l.word))
            .cloned(),
        g.relations.iter().cloned(),
    )
}

/// Positions `(synset, word)` where a lexeme exists. This is the shared
/// support of every encoder matrix (synsets x words) and, transposed, every
/// decoder matrix.
///
/// Entries are sorted by `(synset, word)`; entry `k` is the `k`-th stored
/// coefficient of both matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    num_synsets: usize,
    num_words: usize,
    entries: Vec<(usize, usize)>,
    by_word: Vec<Vec<usize>>,
    by_synset: Vec<Vec<usize>>,
}

impl SparsityPattern {
    /// Build a pattern from `(synset, word)` index pairs. Duplicates are
    /// dropped.
    pub fn from_entries(
        num_synsets: usize,
        num_words: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize)> = entries.into_iter().collect();
        for &(j, i) in &entries {
            if j >= num_synsets {
                return Err(Error::OutOfRange {
                    index: j,
                    len: num_synsets,
                });
            }
            if i >= num_words {
                return Err(Error::OutOfRange {
                    index: i,
                    len: num_words,
                });
            }
        }
        entries.sort_unstable();
        entries.dedup();

        let mut by_word = vec![Vec::new(); num_words];
        let mut by_synset = vec![Vec::new(); num_synsets];
        for (k, &(j, i)) in entries.iter().enumerate() {
            by_word[i].push(k);
            by_synset[j].push(k);
        }
        Ok(SparsityPattern {
            num_synsets,
            num_words,
            entries,
            by_word,
            by_synset,
        })
    }

    pub fn num_synsets(&self) -> usize {
        self.num_synsets
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(synset, word)` of every stored coefficient.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Entries belonging to word `i`, ordered by synset.
    pub fn word_entries(&self, i: usize) -> &[usize] {
        &self.by_word[i]
    }

    /// Entries belonging to synset `j`, ordered by word.
    pub fn synset_entries(&self, j: usize) -> &[usize] {
        &self.by_synset[j]
    }

    /// Entry groups forming the columns of the encoder matrix (one per word).
    pub fn word_groups(&self) -> &[Vec<usize>] {
        &self.by_word
    }

    /// Entry groups forming the columns of the decoder matrix (one per synset).
    pub fn synset_groups(&self) -> &[Vec<usize>] {
        &self.by_synset
    }

    pub fn find(&self, synset: usize, word: usize) -> Option<usize> {
        self.entries.binary_search(&(synset, word)).ok()
    }
}

pub fn build_sparsity_pattern(g: &ResourceGraph) -> Result<SparsityPattern> {
    let entries = g
        .lexemes
        .iter()
        .map(|l| {
            let j = g
                .synset_index(&l.synset)
                .ok_or_else(|| Error::DanglingReference {
                    entity: format!("lexeme {}", l.id()),
                    kind: "synset",
                    id: l.synset.clone(),
                })?;
            let i = g
                .word_index(&l.word)
                .ok_or_else(|| Error::DanglingReference {
                    entity: format!("lexeme {}", l.id()),
                    kind: "word",
                    id: l.word.clone(),
                })?;
            Ok((j, i))
        })
        .collect::<Result<Vec<_>>>()?;
    SparsityPattern::from_entries(g.num_synsets(), g.num_words(), entries)
}

/// Fixed `r x |S|` matrix with one `+1` (source) and one `-1` (target) per
/// row.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationMatrix {
    num_synsets: usize,
    rows: Vec<(usize, usize)>,
}

impl RelationMatrix {
    pub fn from_pairs(
        num_synsets: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let rows: Vec<(usize, usize)> = pairs.into_iter().collect();
        for &(src, dst) in &rows {
            for idx in [src, dst] {
                if idx >= num_synsets {
                    return Err(Error::OutOfRange {
                        index: idx,
                        len: num_synsets,
                    });
                }
            }
            if src == dst {
                return Err(Error::InvalidGraph(format!(
                    "relation row with identical endpoints {src}"
                )));
            }
        }
        Ok(RelationMatrix { num_synsets, rows })
    }

    pub fn empty(num_synsets: usize) -> Self {
        RelationMatrix {
            num_synsets,
            rows: Vec::new(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_synsets(&self) -> usize {
        self.num_synsets
    }

    /// `(source, target)` synset index per row.
    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// Nonzero entries of row `r` as `(column, value)`.
    pub fn row_entries(&self, r: usize) -> [(usize, f64); 2] {
        let (src, dst) = self.rows[r];
        [(src, 1.0), (dst, -1.0)]
    }

    /// `R x`, for `x` of length `|S|`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|&(src, dst)| x[src] - x[dst])
            .collect()
    }
}

pub fn build_relation_matrix(g: &ResourceGraph, kinds: &[RelationKind]) -> Result<RelationMatrix> {
    let pairs = g
        .relations
        .iter()
        .filter(|r| kinds.contains(&r.kind))
        .map(|r| {
            let lookup = |id: &String| {
                g.synset_index(id).ok_or_else(|| Error::DanglingReference {
                    entity: format!("relation {} {} {}", r.kind, r.source, r.target),
                    kind: "synset",
                    id: id.clone(),
                })
            };
            Ok((lookup(&r.source)?, lookup(&r.target)?))
        })
        .collect::<Result<Vec<_>>>()?;
    RelationMatrix::from_pairs(g.num_synsets(), pairs)
}
