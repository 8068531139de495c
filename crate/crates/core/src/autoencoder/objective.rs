//! Per-dimension training objective and its exact gradient.
//!
//! For word column `w`, encoder `E` and decoder `D`, with `s = E w`:
//!
//! - synset term: `||D s - w||^2`
//! - lexeme term: `sum_k (E_ji w_i - D_ij s_j)^2` over pattern entries `k = (j, i)`
//! - relation term: `||R s||^2`
//!
//! combined as `alpha * synset + beta * lexeme + (1 - alpha - beta) * relation`.

use super::system::{decode_dimension, encode_dimension, DimensionSystem};
use crate::error::{Error, Result};
use crate::resource::{RelationMatrix, SparsityPattern};

const WEIGHT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = LossWeights { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    field,
                    format!("{v} must be a finite value >= 0"),
                ));
            }
        }
        if self.alpha + self.beta > 1.0 + WEIGHT_SLACK {
            return Err(Error::config(
                "alpha+beta",
                format!("{} + {} exceeds 1", self.alpha, self.beta),
            ));
        }
        Ok(())
    }

    /// Weight of the relation term, `1 - alpha - beta`.
    pub fn relation(&self) -> f64 {
        (1.0 - self.alpha - self.beta).max(0.0)
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 0.33,
            beta: 0.33,
        }
    }
}

/// Loss value and its three unweighted terms. With per-term mean scaling the
/// terms are reported already divided by their summand counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub synset: f64,
    pub lexeme: f64,
    pub relation: f64,
}

/// Everything about one dimension's problem except the coefficients.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub pattern: &'a SparsityPattern,
    pub relations: &'a RelationMatrix,
    pub weights: LossWeights,
    pub per_term_mean_scaling: bool,
}

impl<'a> Objective<'a> {
    pub fn new(
        pattern: &'a SparsityPattern,
        relations: &'a RelationMatrix,
        weights: LossWeights,
    ) -> Self {
        Objective {
            pattern,
            relations,
            weights,
            per_term_mean_scaling: false,
        }
    }

    pub fn with_mean_scaling(mut self, on: bool) -> Self {
        self.per_term_mean_scaling = on;
        self
    }

    fn scales(&self) -> [f64; 3] {
        if !self.per_term_mean_scaling {
            return [1.0; 3];
        }
        let inv = |n: usize| if n == 0 { 1.0 } else { 1.0 / n as f64 };
        [
            inv(self.pattern.num_words()),
            inv(self.pattern.nnz()),
            inv(self.relations.num_rows()),
        ]
    }

    fn check(&self, sys: &DimensionSystem, w: &[f64]) -> Result<()> {
        if self.relations.num_synsets() != self.pattern.num_synsets() {
            return Err(Error::Shape(format!(
                "relation matrix spans {} synsets, pattern {}",
                self.relations.num_synsets(),
                self.pattern.num_synsets()
            )));
        }
        if sys.e.len() != self.pattern.nnz() || sys.d.len() != self.pattern.nnz() {
            return Err(Error::Shape(format!(
                "system has {}/{} coefficients, pattern {}",
                sys.e.len(),
                sys.d.len(),
                self.pattern.nnz()
            )));
        }
        if w.len() != self.pattern.num_words() {
            return Err(Error::Shape(format!(
                "word column has length {}, pattern {}",
                w.len(),
                self.pattern.num_words()
            )));
        }
        Ok(())
    }
}

struct Forward {
    s: Vec<f64>,
    w_bar: Vec<f64>,
}

fn forward(obj: &Objective<'_>, sys: &DimensionSystem, w: &[f64]) -> Result<Forward> {
    obj.check(sys, w)?;
    let s = encode_dimension(obj.pattern, &sys.e, w)?;
    let w_bar = decode_dimension(obj.pattern, &sys.d, &s)?;
    Ok(Forward { s, w_bar })
}

pub fn compute_loss(sys: &DimensionSystem, w: &[f64], obj: &Objective<'_>) -> Result<LossParts> {
    let fwd = forward(obj, sys, w)?;
    let [cs, cl, cr] = obj.scales();

    let synset: f64 = fwd
        .w_bar
        .iter()
        .zip(w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        * cs;
    let lexeme: f64 = obj
        .pattern
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &(j, i))| {
            let u = sys.e[k] * w[i] - sys.d[k] * fwd.s[j];
            u * u
        })
        .sum::<f64>()
        * cl;
    let relation: f64 = obj
        .relations
        .apply(&fwd.s)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        * cr;

    for (name, v) in [
        ("synset term", synset),
        ("lexeme term", lexeme),
        ("relation term", relation),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(name.to_owned()));
        }
    }
    let weights = obj.weights;
    Ok(LossParts {
        total: weights.alpha * synset + weights.beta * lexeme + weights.relation() * relation,
        synset,
        lexeme,
        relation,
    })
}

/// Gradients with respect to the stored coefficients, laid out like
/// [`DimensionSystem`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub e: Vec<f64>,
    pub d: Vec<f64>,
}

/// Exact gradient of the total loss. Terms with zero weight contribute
/// nothing, not even rounding noise.
pub fn compute_gradients(
    sys: &DimensionSystem,
    w: &[f64],
    obj: &Objective<'_>,
) -> Result<Gradients> {
    let fwd = forward(obj, sys, w)?;
    let [cs, cl, cr] = obj.scales();
    let c_syn = obj.weights.alpha * cs;
    let c_lex = obj.weights.beta * cl;
    let c_rel = obj.weights.relation() * cr;

    let entries = obj.pattern.entries();
    let mut grad_e = vec![0.0; entries.len()];
    let mut grad_d = vec![0.0; entries.len()];
    // dL/ds, pushed back through s = E w at the end
    let mut grad_s = vec![0.0; obj.pattern.num_synsets()];

    if c_syn != 0.0 {
        for (k, &(j, i)) in entries.iter().enumerate() {
            let r = 2.0 * c_syn * (fwd.w_bar[i] - w[i]);
            grad_d[k] += r * fwd.s[j];
            grad_s[j] += r * sys.d[k];
        }
    }
    if c_lex != 0.0 {
        for (k, &(j, i)) in entries.iter().enumerate() {
            let u = 2.0 * c_lex * (sys.e[k] * w[i] - sys.d[k] * fwd.s[j]);
            grad_e[k] += u * w[i];
            grad_d[k] -= u * fwd.s[j];
            grad_s[j] -= u * sys.d[k];
        }
    }
    if c_rel != 0.0 {
        for &(src, dst) in obj.relations.rows() {
            let v = 2.0 * c_rel * (fwd.s[src] - fwd.s[dst]);
            grad_s[src] += v;
            grad_s[dst] -= v;
        }
    }
    for (k, &(j, i)) in entries.iter().enumerate() {
        grad_e[k] += grad_s[j] * w[i];
    }

    if grad_e.iter().chain(&grad_d).any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".to_owned()));
    }
    Ok(Gradients {
        e: grad_e,
        d: grad_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (SparsityPattern, RelationMatrix) {
        let p = SparsityPattern::from_entries(2, 3, [(0, 0), (0, 1), (1, 0), (1, 2)]).unwrap();
        let r = RelationMatrix::from_pairs(2, [(0, 1)]).unwrap();
        (p, r)
    }

    const W: [f64; 3] = [1.0, 2.0, 4.0];

    #[test]
    fn weights_validation() {
        assert!(LossWeights::new(0.7, 0.7).is_err());
        assert!(LossWeights::new(-0.1, 0.2).is_err());
        assert!(LossWeights::new(0.3, 0.7).is_ok());
        assert_eq!(LossWeights::new(1.0, 0.0).unwrap().relation(), 0.0);
    }

    #[test]
    fn relation_only_loss() {
        let (p, r) = fixture();
        let sys = DimensionSystem::uniform(&p);
        let obj = Objective::new(&p, &r, LossWeights::new(0.0, 0.0).unwrap());
        let parts = compute_loss(&sys, &W, &obj).unwrap();
        // (2.5 - 4.5)^2
        assert_eq!(parts.total, 4.0);
        assert_eq!(parts.relation, 4.0);
    }

    #[test]
    fn reconstruction_only_loss() {
        let (p, r) = fixture();
        let sys = DimensionSystem::uniform(&p);
        let obj = Objective::new(&p, &r, LossWeights::new(1.0, 0.0).unwrap());
        let parts = compute_loss(&sys, &W, &obj).unwrap();
        // w_bar = [3.5, 1.25, 2.25]: 2.5^2 + 0.75^2 + 1.75^2
        assert_eq!(parts.total, 9.875);
        assert_eq!(parts.synset, 9.875);
    }

    #[test]
    fn lexeme_loss_by_hand() {
        let (p, r) = fixture();
        let sys = DimensionSystem::uniform(&p);
        let obj = Objective::new(&p, &r, LossWeights::new(0.0, 1.0).unwrap());
        // encoder lexemes: (s1,w1)=0.5, (s1,w2)=2, (s2,w1)=0.5, (s2,w3)=4
        // decoder lexemes: 1.25, 1.25, 2.25, 2.25
        let expected = 0.75f64.powi(2) + 0.75f64.powi(2) + 1.75f64.powi(2) + 1.75f64.powi(2);
        let parts = compute_loss(&sys, &W, &obj).unwrap();
        assert!((parts.lexeme - expected).abs() < 1e-12);
        assert_eq!(parts.total, parts.lexeme);
    }

    #[test]
    fn mean_scaling_divides_each_term() {
        let (p, r) = fixture();
        let sys = DimensionSystem::uniform(&p);
        let weights = LossWeights::new(0.2, 0.5).unwrap();
        let raw = compute_loss(&sys, &W, &Objective::new(&p, &r, weights)).unwrap();
        let scaled = compute_loss(
            &sys,
            &W,
            &Objective::new(&p, &r, weights).with_mean_scaling(true),
        )
        .unwrap();
        assert!((scaled.synset - raw.synset / 3.0).abs() < 1e-12);
        assert!((scaled.lexeme - raw.lexeme / 4.0).abs() < 1e-12);
        assert!((scaled.relation - raw.relation).abs() < 1e-12);
        let total = 0.2 * scaled.synset + 0.5 * scaled.lexeme + 0.3 * scaled.relation;
        assert!((scaled.total - total).abs() < 1e-12);
    }

    #[test]
    fn bijection_is_stationary() {
        let p = SparsityPattern::from_entries(3, 3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let r = RelationMatrix::empty(3);
        let sys = DimensionSystem::uniform(&p);
        let obj = Objective::new(&p, &r, LossWeights::new(1.0, 0.0).unwrap());
        let w = [0.3, -2.0, 5.5];
        assert_eq!(compute_loss(&sys, &w, &obj).unwrap().total, 0.0);
        let g = compute_gradients(&sys, &w, &obj).unwrap();
        assert!(g.e.iter().chain(&g.d).all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn dropped_terms_leave_no_trace() {
        let (p, r) = fixture();
        let mut sys = DimensionSystem::uniform(&p);
        sys.e[0] = 0.8;
        sys.d[3] = -0.3;
        let full = Objective::new(&p, &r, LossWeights::new(1.0, 0.0).unwrap());
        let g = compute_gradients(&sys, &W, &full).unwrap();

        // synset term gradient written out directly
        let s = encode_dimension(&p, &sys.e, &W).unwrap();
        let w_bar = decode_dimension(&p, &sys.d, &s).unwrap();
        let mut gs = [0.0; 2];
        for (k, &(j, i)) in p.entries().iter().enumerate() {
            assert_eq!(g.d[k], 2.0 * (w_bar[i] - W[i]) * s[j]);
            gs[j] += 2.0 * (w_bar[i] - W[i]) * sys.d[k];
        }
        for (k, &(j, i)) in p.entries().iter().enumerate() {
            assert_eq!(g.e[k], gs[j] * W[i]);
        }
    }

    #[test]
    fn shape_errors() {
        let (p, r) = fixture();
        let sys = DimensionSystem::uniform(&p);
        let obj = Objective::new(&p, &r, LossWeights::default());
        assert!(matches!(
            compute_loss(&sys, &[1.0], &obj),
            Err(Error::Shape(_))
        ));
        let bad_r = RelationMatrix::empty(5);
        let obj = Objective::new(&p, &bad_r, LossWeights::default());
        assert!(matches!(
            compute_gradients(&sys, &W, &obj),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn non_finite_loss_names_term() {
        let (p, r) = fixture();
        let mut sys = DimensionSystem::uniform(&p);
        sys.d[0] = f64::MAX;
        let obj = Objective::new(&p, &r, LossWeights::new(1.0, 0.0).unwrap());
        match compute_loss(&sys, &W, &obj) {
            Err(Error::NonFinite(term)) => assert_eq!(term, "synset term"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
