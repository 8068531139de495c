//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use lexemb::autoencoder::LossWeights;
use lexemb::resource::{
    build_relation_matrix, build_sparsity_pattern, LexemeKey, RelationKind, RelationMatrix,
    RelationTuple, ResourceGraph, SparsityPattern, Synset,
};
use rand::Rng;

pub fn testdata(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

/// A random resource with up to the given sizes. Every word has a sense.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_words: usize,
    max_synsets: usize,
    max_relations: usize,
) -> ResourceGraph {
    let nw = rng.gen_range(1..=max_words);
    let ns = rng.gen_range(1..=max_synsets);
    let words: Vec<String> = (0..nw).map(|i| format!("w{i}")).collect();
    let synsets: Vec<Synset> = (0..ns)
        .map(|j| Synset {
            id: format!("s{j}"),
            pos: None,
        })
        .collect();
    let mut lexemes = Vec::new();
    for w in &words {
        let senses = rng.gen_range(1..=ns.min(3));
        for _ in 0..senses {
            lexemes.push(LexemeKey::new(
                w.clone(),
                format!("s{}", rng.gen_range(0..ns)),
            ));
        }
    }
    let mut relations = Vec::new();
    if ns > 1 {
        for _ in 0..rng.gen_range(0..=max_relations) {
            let a = rng.gen_range(0..ns);
            let b = (a + rng.gen_range(1..ns)) % ns;
            relations.push(RelationTuple {
                kind: RelationKind::ALL[rng.gen_range(0..RelationKind::ALL.len())],
                source: format!("s{a}"),
                target: format!("s{b}"),
            });
        }
    }
    ResourceGraph::from_parts(words, synsets, lexemes, relations)
}

pub fn structures(g: &ResourceGraph) -> (SparsityPattern, RelationMatrix) {
    (
        build_sparsity_pattern(g).unwrap(),
        build_relation_matrix(g, &RelationKind::ALL).unwrap(),
    )
}

pub fn random_weights<R: Rng>(rng: &mut R) -> LossWeights {
    let alpha: f64 = rng.gen_range(0.0..=1.0);
    let beta: f64 = rng.gen_range(0.0..=1.0 - alpha);
    LossWeights { alpha, beta }
}

/// Dense `|S| x |W|` encoder and `|W| x |S|` decoder from pattern-ordered
/// coefficients.
pub fn densify(p: &SparsityPattern, e: &[f64], d: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut ed = vec![vec![0.0; p.num_words()]; p.num_synsets()];
    let mut dd = vec![vec![0.0; p.num_synsets()]; p.num_words()];
    for (k, &(j, i)) in p.entries().iter().enumerate() {
        ed[j][i] = e[k];
        dd[i][j] = d[k];
    }
    (ed, dd)
}

/// Loss computed with dense matrices, straight from the definition.
pub fn dense_loss(
    p: &SparsityPattern,
    r: &RelationMatrix,
    weights: LossWeights,
    mean_scaling: bool,
    e: &[f64],
    d: &[f64],
    w: &[f64],
) -> f64 {
    let (ed, dd) = densify(p, e, d);
    let s: Vec<f64> = ed
        .iter()
        .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
        .collect();
    let w_bar: Vec<f64> = dd
        .iter()
        .map(|row| row.iter().zip(&s).map(|(a, b)| a * b).sum())
        .collect();
    let mut syn: f64 = w_bar.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum();
    let mut lex = 0.0;
    for &(j, i) in p.entries() {
        lex += (ed[j][i] * w[i] - dd[i][j] * s[j]).powi(2);
    }
    let mut rel: f64 = r.rows().iter().map(|&(a, b)| (s[a] - s[b]).powi(2)).sum();
    if mean_scaling {
        syn /= p.num_words().max(1) as f64;
        lex /= p.nnz().max(1) as f64;
        rel /= r.num_rows().max(1) as f64;
    }
    let gamma = (1.0 - weights.alpha - weights.beta).max(0.0);
    weights.alpha * syn + weights.beta * lex + gamma * rel
}

/// Average ranks by counting, O(n^2).
pub fn brute_force_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho from brute-force ranks via the textbook Pearson formula.
pub fn brute_force_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rx = brute_force_ranks(xs);
    let ry = brute_force_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}
