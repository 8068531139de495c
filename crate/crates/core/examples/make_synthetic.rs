//! Regenerate the bundled synthetic dataset.
//!
//! cargo run --example make_synthetic -- [output dir]
//!
//! Every synset gets a random latent direction. A word vector is the sum of
//! its synsets' directions plus noise, and context words sit near one
//! synset each. Similarity ratings come from the cosine between the senses
//! that a pair's contexts were drawn from.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20150701;
const WORDS: usize = 50;
const SYNSETS: usize = 30;
const RELATIONS: usize = 20;
const DIM: usize = 10;
/// Spread of latent synset directions, close to that of pretrained vectors.
const SCALE: f64 = 0.3;
/// Words without an embedding, dropped by vocabulary intersection.
const UNEMBEDDED: usize = 5;
/// Synsets without member words; they get vectors from their neighbors.
const MEMBERLESS: usize = 3;
const CONTEXT_WORDS: usize = 30;
const PAIRS: usize = 40;
const INSTANCES: usize = 20;
const KINDS: [&str; 4] = ["hypernymy", "antonymy", "similarity", "verb_group"];

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..DIM).map(|_| scale * gaussian(rng)).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn row(id: &str, v: &[f64]) -> String {
    let mut s = id.to_owned();
    for x in v {
        write!(s, " {x:.6}").unwrap();
    }
    s.push('\n');
    s
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata/synthetic"));
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let words: Vec<String> = (0..WORDS).map(|i| format!("w{i:02}")).collect();
    let synsets: Vec<String> = (0..SYNSETS).map(|j| format!("s{j:02}")).collect();
    let latent: Vec<Vec<f64>> = (0..SYNSETS).map(|_| random_vec(&mut rng, SCALE)).collect();

    // every synset but the last MEMBERLESS gets at least one member
    let populated = SYNSETS - MEMBERLESS;
    let mut senses: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); WORDS];
    for j in 0..populated {
        senses[j % WORDS].insert(j);
    }
    for s in senses.iter_mut() {
        let extra = rng.gen_range(0..3);
        while s.len() < 1 + extra {
            s.insert(rng.gen_range(0..populated));
        }
    }

    let mut relations = BTreeSet::new();
    for j in populated..SYNSETS {
        relations.insert((
            rng.gen_range(0..KINDS.len()),
            j,
            rng.gen_range(0..populated),
        ));
    }
    while relations.len() < RELATIONS {
        let a = rng.gen_range(0..SYNSETS);
        let b = rng.gen_range(0..SYNSETS);
        if a != b {
            relations.insert((rng.gen_range(0..KINDS.len()), a, b));
        }
    }

    let mut resource = String::from("# synthetic resource\n");
    for w in &words {
        writeln!(resource, "word\t{w}").unwrap();
    }
    for (j, s) in synsets.iter().enumerate() {
        writeln!(
            resource,
            "synset\t{s}\t{}",
            if j % 3 == 0 { "v" } else { "n" }
        )
        .unwrap();
    }
    for (i, s) in senses.iter().enumerate() {
        for &j in s {
            writeln!(resource, "lexeme\t{}\t{}", words[i], synsets[j]).unwrap();
        }
    }
    for &(k, a, b) in &relations {
        writeln!(
            resource,
            "relation\t{}\t{}\t{}",
            KINDS[k], synsets[a], synsets[b]
        )
        .unwrap();
    }
    fs::write(dir.join("resource.tsv"), resource).unwrap();

    let mut vectors = Vec::new();
    for (i, s) in senses.iter().enumerate().take(WORDS - UNEMBEDDED) {
        let mut v = random_vec(&mut rng, 0.1 * SCALE);
        for &j in s {
            for (x, l) in v.iter_mut().zip(&latent[j]) {
                *x += l;
            }
        }
        vectors.push((words[i].clone(), v));
    }
    let mut context_sense = Vec::new();
    for c in 0..CONTEXT_WORDS {
        let j = c % populated;
        let v: Vec<f64> = latent[j]
            .iter()
            .zip(random_vec(&mut rng, 0.2 * SCALE))
            .map(|(l, n)| l + n)
            .collect();
        vectors.push((format!("c{c:02}"), v));
        context_sense.push(j);
    }
    let mut embeddings = format!("{} {DIM}\n", vectors.len());
    for (id, v) in &vectors {
        embeddings.push_str(&row(id, v));
    }
    fs::write(dir.join("embeddings.txt"), embeddings).unwrap();

    // a context of three context words near `sense`, with the target marked
    let context = |rng: &mut ChaCha8Rng, target: &str, sense: usize| {
        let near: Vec<usize> = (0..CONTEXT_WORDS)
            .filter(|&c| context_sense[c] == sense)
            .collect();
        let mut tokens: Vec<String> = (0..3)
            .map(|_| {
                let c = near
                    .choose(rng)
                    .copied()
                    .unwrap_or_else(|| rng.gen_range(0..CONTEXT_WORDS));
                format!("c{c:02}")
            })
            .collect();
        tokens.insert(rng.gen_range(0..=tokens.len()), format!("<b>{target}</b>"));
        tokens.insert(0, "the".to_owned());
        tokens.join(" ")
    };

    let embedded = WORDS - UNEMBEDDED;
    let mut scws = String::new();
    for p in 0..PAIRS {
        let a = rng.gen_range(0..embedded);
        let mut b = rng.gen_range(0..embedded);
        if a == b {
            b = (b + 1) % embedded;
        }
        let sa = *senses[a]
            .iter()
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .unwrap();
        let sb = *senses[b]
            .iter()
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .unwrap();
        let rating = (5.0 + 5.0 * cosine(&latent[*sa], &latent[*sb])).clamp(0.0, 10.0);
        writeln!(
            scws,
            "{}\t{}\tn\t{}\tn\t{}\t{}\t{rating:.2}",
            p + 1,
            words[a],
            words[b],
            context(&mut rng, &words[a], *sa),
            context(&mut rng, &words[b], *sb),
        )
        .unwrap();
    }
    fs::write(dir.join("scws.txt"), scws).unwrap();

    let mut wsd = String::new();
    for n in 0..INSTANCES {
        let i = rng.gen_range(0..embedded);
        let s = *senses[i]
            .iter()
            .collect::<Vec<_>>()
            .choose(&mut rng)
            .unwrap();
        let sentence = context(&mut rng, &words[i], *s)
            .replace("<b>", "")
            .replace("</b>", "");
        writeln!(wsd, "d{n:03}\t{}\t{sentence}", words[i]).unwrap();
    }
    fs::write(dir.join("wsd.txt"), wsd).unwrap();

    println!("wrote synthetic data to {}", dir.display());
}
