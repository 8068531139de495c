use crate::error::{Error, Result};
use crate::resource::SparsityPattern;

/// Encoder and decoder coefficients of one embedding dimension.
///
/// Both matrices live on the same [`SparsityPattern`]: entry `k = (j, i)` is
/// `E[j][i]` in the encoder (synsets x words) and `D[i][j]` in the decoder
/// (words x synsets). Positions outside the pattern are structural zeros and
/// are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionSystem {
    pub e: Vec<f64>,
    pub d: Vec<f64>,
}

impl DimensionSystem {
    /// Column-normalized uniform start: every encoder column (word) and every
    /// decoder column (synset) spreads its unit mass evenly over its entries.
    pub fn uniform(pattern: &SparsityPattern) -> Self {
        let mut e = vec![0.0; pattern.nnz()];
        let mut d = vec![0.0; pattern.nnz()];
        for group in pattern.word_groups() {
            let share = 1.0 / group.len() as f64;
            for &k in group {
                e[k] = share;
            }
        }
        for group in pattern.synset_groups() {
            let share = 1.0 / group.len() as f64;
            for &k in group {
                d[k] = share;
            }
        }
        DimensionSystem { e, d }
    }

    pub fn max_abs(&self) -> f64 {
        self.e
            .iter()
            .chain(&self.d)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().chain(&self.d).all(|v| v.is_finite())
    }
}

pub fn init_systems(pattern: &SparsityPattern, n: usize) -> Vec<DimensionSystem> {
    vec![DimensionSystem::uniform(pattern); n]
}

/// Columns whose sum is this close to zero are not rescaled.
pub const NEAR_ZERO_COLUMN_SUM: f64 = 1e-12;

/// Divide every column by its sum. `columns` lists the stored entries of each
/// column. All-zero columns are skipped; columns with a nonzero entry but a
/// near-zero sum are left untouched and their indices returned.
pub fn column_normalize(values: &mut [f64], columns: &[Vec<usize>]) -> Vec<usize> {
    let mut flagged = Vec::new();
    for (c, column) in columns.iter().enumerate() {
        if column.iter().all(|&k| values[k] == 0.0) {
            continue;
        }
        let sum: f64 = column.iter().map(|&k| values[k]).sum();
        if sum.abs() < NEAR_ZERO_COLUMN_SUM {
            flagged.push(c);
            continue;
        }
        for &k in column {
            values[k] /= sum;
        }
    }
    flagged
}

/// `s = E w`.
pub fn encode_dimension(pattern: &SparsityPattern, e: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    check_len("encoder coefficients", e.len(), pattern.nnz())?;
    check_len("word column", w.len(), pattern.num_words())?;
    let mut s = vec![0.0; pattern.num_synsets()];
    for (k, &(j, i)) in pattern.entries().iter().enumerate() {
        s[j] += e[k] * w[i];
    }
    Ok(s)
}

/// `w_bar = D s`.
pub fn decode_dimension(pattern: &SparsityPattern, d: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    check_len("decoder coefficients", d.len(), pattern.nnz())?;
    check_len("synset column", s.len(), pattern.num_synsets())?;
    let mut w_bar = vec![0.0; pattern.num_words()];
    for (k, &(j, i)) in pattern.entries().iter().enumerate() {
        w_bar[i] += d[k] * s[j];
    }
    Ok(w_bar)
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{what}: expected length {expected}, got {got}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // s1 = {w1, w2}, s2 = {w1, w3}
    fn fixture() -> SparsityPattern {
        SparsityPattern::from_entries(2, 3, [(0, 0), (0, 1), (1, 0), (1, 2)]).unwrap()
    }

    fn bijection() -> SparsityPattern {
        SparsityPattern::from_entries(3, 3, [(0, 2), (1, 0), (2, 1)]).unwrap()
    }

    #[test]
    fn uniform_init() {
        let p = fixture();
        let sys = DimensionSystem::uniform(&p);
        // word w1 sits in two synsets
        assert_eq!(sys.e, vec![0.5, 1.0, 0.5, 1.0]);
        // both synsets have two lexemes
        assert_eq!(sys.d, vec![0.5, 0.5, 0.5, 0.5]);
        assert_eq!(init_systems(&p, 3).len(), 3);
    }

    #[test]
    fn uniform_init_leaves_lexemeless_columns_empty() {
        let p = SparsityPattern::from_entries(2, 2, [(0, 0)]).unwrap();
        let sys = DimensionSystem::uniform(&p);
        assert_eq!(sys.e, vec![1.0]);
        assert_eq!(sys.d, vec![1.0]);
        assert!(p.word_entries(1).is_empty());
        assert!(p.synset_entries(1).is_empty());
    }

    #[test]
    fn normalize_dense_columns() {
        // [[1, 3], [1, 1]] stored column-major as entries 0..4
        let mut v = vec![1.0, 1.0, 3.0, 1.0];
        let cols = vec![vec![0, 1], vec![2, 3]];
        assert!(column_normalize(&mut v, &cols).is_empty());
        assert_eq!(v, vec![0.5, 0.5, 0.75, 0.25]);

        let before = v.clone();
        column_normalize(&mut v, &cols);
        for (a, b) in v.iter().zip(&before) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn normalize_flags_cancelling_column() {
        let mut v = vec![0.6, -0.6, 0.0, 0.0];
        let cols = vec![vec![0, 1], vec![2, 3]];
        assert_eq!(column_normalize(&mut v, &cols), vec![0]);
        assert_eq!(v, vec![0.6, -0.6, 0.0, 0.0]);
    }

    #[test]
    fn encode_fixture() {
        let p = fixture();
        let sys = DimensionSystem::uniform(&p);
        let s = encode_dimension(&p, &sys.e, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s, vec![2.5, 4.5]);
    }

    #[test]
    fn decode_fixture() {
        let p = fixture();
        let sys = DimensionSystem::uniform(&p);
        // w1 gets 0.5 * 2.5 + 0.5 * 4.5; w2 and w3 receive half of their
        // only synset since every synset column is split in two
        let w_bar = decode_dimension(&p, &sys.d, &[2.5, 4.5]).unwrap();
        assert_eq!(w_bar, vec![3.5, 1.25, 2.25]);
        assert_eq!(
            decode_dimension(&p, &sys.d, &[0.0, 0.0]).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn bijection_is_identity() {
        let p = bijection();
        let sys = DimensionSystem::uniform(&p);
        let w = [3.0, -1.0, 0.25];
        let s = encode_dimension(&p, &sys.e, &w).unwrap();
        // synset j holds word pattern[j].1
        assert_eq!(s, vec![0.25, 3.0, -1.0]);
        assert_eq!(decode_dimension(&p, &sys.d, &s).unwrap(), w.to_vec());
    }

    #[test]
    fn empty_synset_encodes_to_zero() {
        let p = SparsityPattern::from_entries(2, 1, [(0, 0)]).unwrap();
        let sys = DimensionSystem::uniform(&p);
        assert_eq!(
            encode_dimension(&p, &sys.e, &[7.0]).unwrap(),
            vec![7.0, 0.0]
        );
    }

    #[test]
    fn shape_mismatch() {
        let p = fixture();
        let sys = DimensionSystem::uniform(&p);
        assert!(matches!(
            encode_dimension(&p, &sys.e, &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            decode_dimension(&p, &sys.d, &[1.0]),
            Err(Error::Shape(_))
        ));
    }
}
