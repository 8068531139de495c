//! Dense embedding matrices and the plain-text interchange format.
//!
//! The text format has a `<count> <dim>` header followed by one
//! `<id> <v1> ... <vdim>` line per item, separated by single spaces.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    dim: usize,
}

impl EmbeddingMatrix {
    /// Row-major `data` of length `ids.len() * dim`.
    pub fn new(ids: Vec<String>, data: Vec<f64>, dim: usize) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::Shape(format!(
                "{} ids x {dim} dims needs {} values, got {}",
                ids.len(),
                ids.len() * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "embedding row `{}`",
                ids[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Shape(format!("duplicate id `{id}`")));
            }
        }
        Ok(EmbeddingMatrix {
            ids,
            index,
            data,
            dim,
        })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>], dim: usize) -> Result<Self> {
        if let Some(row) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape(format!(
                "row of length {} in a {dim}-dimensional matrix",
                row.len()
            )));
        }
        Self::new(ids, rows.concat(), dim)
    }

    pub fn zeros(ids: Vec<String>, dim: usize) -> Result<Self> {
        let len = ids.len() * dim;
        Self::new(ids, vec![0.0; len], dim)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks(self.dim.max(1)))
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vocabulary(&self) -> HashSet<String> {
        self.ids.iter().cloned().collect()
    }

    /// Copy with every id prefixed, e.g. `W/` for words.
    pub fn with_id_prefix(&self, prefix: &str) -> Self {
        let ids = self.ids.iter().map(|id| format!("{prefix}{id}")).collect();
        Self::new(ids, self.data.clone(), self.dim).expect("prefixing keeps ids unique")
    }

    /// Copy keeping only ids starting with `prefix`, with the prefix removed.
    pub fn strip_id_prefix(&self, prefix: &str) -> Result<Self> {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, row) in self.rows() {
            if let Some(rest) = id.strip_prefix(prefix) {
                ids.push(rest.to_owned());
                data.extend_from_slice(row);
            }
        }
        Self::new(ids, data, self.dim)
    }
}

/// One embedding dimension across all items.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionColumn {
    pub d: usize,
    pub values: Vec<f64>,
}

pub fn dimension_column(m: &EmbeddingMatrix, d: usize) -> Result<DimensionColumn> {
    if d >= m.dim {
        return Err(Error::OutOfRange {
            index: d,
            len: m.dim,
        });
    }
    Ok(DimensionColumn {
        d,
        values: (0..m.len()).map(|i| m.data[i * m.dim + d]).collect(),
    })
}

pub fn read_embeddings_text(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings_text(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_embeddings_text<R: BufRead>(reader: R) -> Result<EmbeddingMatrix> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<embeddings>", e))?,
        None => return Err(Error::parse(1, "missing `<count> <dim>` header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) => (c, d),
            _ => return Err(Error::parse(1, format!("malformed header `{header}`"))),
        },
        _ => return Err(Error::parse(1, format!("malformed header `{header}`"))),
    };

    let mut ids = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut seen = HashSet::with_capacity(count);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io("<embeddings>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let id = tokens.next().expect("non-empty line has a token");
        let values: Vec<&str> = tokens.collect();
        if values.len() != dim {
            return Err(Error::parse(
                line_no,
                format!("expected {} tokens, found {}", dim + 1, values.len() + 1),
            ));
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::parse(line_no, format!("duplicate id `{id}`")));
        }
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(line_no, format!("non-numeric value `{v}`")))?;
            if !x.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value `{v}`")));
            }
            data.push(x);
        }
        ids.push(id.to_owned());
    }
    if ids.len() != count {
        return Err(Error::parse(
            1,
            format!("header declares {count} rows, found {}", ids.len()),
        ));
    }
    EmbeddingMatrix::new(ids, data, dim)
}

pub fn write_embeddings<W: Write>(m: &EmbeddingMatrix, mut out: W, precision: usize) -> Result<()> {
    if let Some(bad) = m
        .ids
        .iter()
        .find(|id| id.is_empty() || id.chars().any(char::is_whitespace))
    {
        return Err(Error::Shape(format!(
            "id `{bad}` is empty or contains whitespace"
        )));
    }
    let io = |e| Error::io("<embeddings>", e);
    writeln!(out, "{} {}", m.len(), m.dim).map_err(io)?;
    let mut line = String::new();
    for (id, row) in m.rows() {
        line.clear();
        line.push_str(id);
        for v in row {
            use std::fmt::Write as _;
            // normalize negative zero so equal matrices serialize identically
            let v = if *v == 0.0 { 0.0 } else { *v };
            write!(line, " {v:.precision$}").expect("writing to a String");
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_embeddings_text(
    m: &EmbeddingMatrix,
    path: impl AsRef<Path>,
    precision: usize,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_embeddings(m, BufWriter::new(file), precision).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Cosine similarity. Zero-norm inputs yield 0.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different lengths");
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0)
}

pub fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Optional rewriting of tokens before embedding lookup.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TokenNormalizer {
    #[default]
    Identity,
    Lowercase,
    /// Lowercase and replace every ASCII digit with `0`.
    LowercaseZeroDigits,
}

impl TokenNormalizer {
    pub fn apply<'a>(&self, token: &'a str) -> std::borrow::Cow<'a, str> {
        use std::borrow::Cow;
        match self {
            TokenNormalizer::Identity => Cow::Borrowed(token),
            TokenNormalizer::Lowercase => Cow::Owned(token.to_lowercase()),
            TokenNormalizer::LowercaseZeroDigits => Cow::Owned(
                token
                    .to_lowercase()
                    .chars()
                    .map(|c| if c.is_ascii_digit() { '0' } else { c })
                    .collect(),
            ),
        }
    }
}

impl std::str::FromStr for TokenNormalizer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "none" | "identity" => Ok(TokenNormalizer::Identity),
            "lowercase" => Ok(TokenNormalizer::Lowercase),
            "lowercase-zero-digits" => Ok(TokenNormalizer::LowercaseZeroDigits),
            other => Err(format!("unknown token normalizer `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Centroid {
    pub vector: Vec<f64>,
    /// Tokens that contributed to the sum.
    pub used: usize,
    /// Tokens skipped because they have no embedding.
    pub out_of_vocabulary: usize,
}

impl Centroid {
    pub fn is_empty_context(&self) -> bool {
        self.used == 0
    }
}

/// Sum of the embeddings of `tokens`, skipping stop words, the `exclude`
/// token and tokens without an embedding.
pub fn sentence_centroid<S: AsRef<str>>(
    tokens: &[S],
    m: &EmbeddingMatrix,
    stopwords: &HashSet<String>,
    exclude: Option<&str>,
) -> Centroid {
    let mut vector = vec![0.0; m.dim];
    let mut used = 0;
    let mut out_of_vocabulary = 0;
    for token in tokens {
        let token = token.as_ref();
        if stopwords.contains(token) || exclude == Some(token) {
            continue;
        }
        match m.get(token) {
            Some(row) => {
                for (acc, v) in vector.iter_mut().zip(row) {
                    *acc += v;
                }
                used += 1;
            }
            None => out_of_vocabulary += 1,
        }
    }
    if out_of_vocabulary > 0 {
        log::debug!("centroid skipped {out_of_vocabulary} out-of-vocabulary token(s)");
    }
    Centroid {
        vector,
        used,
        out_of_vocabulary,
    }
}

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// The bundled 50-word English stop-word list.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}
