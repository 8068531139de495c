//! Least-squares translation between two embedding spaces.
//!
//! Given row-aligned matrices `X` (source) and `Y` (target), the translation
//! matrix `L` minimizes `||X L - Y||_F`, i.e. `L = (X^T X)^{-1} X^T Y`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Largest accepted condition number of `X^T X`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl AlignedPair {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Shape(format!(
                "aligned pair has {} source rows and {} target rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("aligned pair".to_owned()));
        }
        Ok(AlignedPair { x, y })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationFit {
    pub matrix: DMatrix<f64>,
    /// `||X L - Y||_F` on the training rows.
    pub residual: f64,
}

fn check_conditioning(gram: &DMatrix<f64>) -> Result<()> {
    let eig = gram.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let n = gram.nrows();
    if max == 0.0 || min <= 0.0 || max / min > MAX_CONDITION {
        let rank = eig.iter().filter(|&&v| v > max / MAX_CONDITION).count();
        return Err(Error::RankDeficient(format!(
            "source matrix has numerical rank {rank} of {n} columns (condition number {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    Ok(())
}

/// Solve the normal equations by Cholesky factorization.
pub fn fit_translation_matrix(pair: &AlignedPair) -> Result<TranslationFit> {
    let x = &pair.x;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Empty(
            "aligned pair has no rows or columns".to_owned(),
        ));
    }
    let gram = x.transpose() * x;
    check_conditioning(&gram)?;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("X^T X is not positive definite".to_owned()))?;
    let matrix = chol.solve(&(x.transpose() * &pair.y));
    let residual = residual(&matrix, pair)?;
    Ok(TranslationFit { matrix, residual })
}

/// `(X^T X)^{-1} (X^T Y)` with an explicit inverse.
pub fn closed_form_translation(pair: &AlignedPair) -> Result<DMatrix<f64>> {
    let x = &pair.x;
    let inv = (x.transpose() * x)
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("X^T X is singular".to_owned()))?;
    Ok(inv * (x.transpose() * &pair.y))
}

pub fn apply_translation(l: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != l.nrows() {
        return Err(Error::Shape(format!(
            "cannot apply a {}x{} translation to {}-column rows",
            l.nrows(),
            l.ncols(),
            x.ncols()
        )));
    }
    Ok(x * l)
}

pub fn residual(l: &DMatrix<f64>, pair: &AlignedPair) -> Result<f64> {
    let mapped = apply_translation(l, &pair.x)?;
    if mapped.shape() != pair.y.shape() {
        return Err(Error::Shape(format!(
            "translated rows are {:?}, targets {:?}",
            mapped.shape(),
            pair.y.shape()
        )));
    }
    Ok((mapped - &pair.y).norm())
}

/// Read a bilingual lexicon: one `<source id> <target id>` pair per line.
pub fn read_lexicon(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text)
}

pub fn parse_lexicon(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => pairs.push((a.to_owned(), b.to_owned())),
            _ => return Err(Error::parse(idx + 1, "expected `<source id> <target id>`")),
        }
    }
    Ok(pairs)
}

/// Stack the rows named by `lexicon`. Pairs with an id missing from either
/// space, or repeating an earlier pair, are skipped and counted.
pub fn aligned_pair_from_lexicon(
    lexicon: &[(String, String)],
    source: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
) -> Result<(AlignedPair, usize)> {
    let mut seen = HashSet::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut skipped = 0;
    for (a, b) in lexicon {
        match (source.get(a), target.get(b)) {
            (Some(x), Some(y)) if seen.insert((a, b)) => {
                xs.extend_from_slice(x);
                ys.extend_from_slice(y);
            }
            _ => skipped += 1,
        }
    }
    let m = xs.len() / source.dim().max(1);
    if m == 0 {
        return Err(Error::Empty(
            "no lexicon pair is covered by both embedding files".to_owned(),
        ));
    }
    let x = DMatrix::from_row_slice(m, source.dim(), &xs);
    let y = DMatrix::from_row_slice(m, target.dim(), &ys);
    Ok((AlignedPair::new(x, y)?, skipped))
}
