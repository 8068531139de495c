//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{
    brute_force_spearman, dense_loss, densify, random_graph, random_weights, structures, testdata,
};
use lexemb::autoencoder::{
    compute_gradients, train_all, train_dimension_observed, write_model_checkpoint,
    DimensionSystem, LossWeights, Objective, TrainingConfig,
};
use lexemb::crosslingual::{closed_form_translation, fit_translation_matrix, AlignedPair};
use lexemb::embedding::read_embeddings_text;
use lexemb::eval::{grid_search, spearman, write_surface_tsv, wsd_feature_sets, FeatureVariant};
use lexemb::resource::{
    build_relation_matrix, build_sparsity_pattern, intersect_vocabulary, load_resource,
    parse_resource, RelationKind, RelationMatrix, ResourceFormat,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

/// Records log messages so the phase switch can be checked.
struct Capture(Mutex<Vec<String>>);

impl log::Log for Capture {
    fn enabled(&self, _: &log::Metadata<'_>) -> bool {
        true
    }

    fn log(&self, record: &log::Record<'_>) {
        self.0.lock().unwrap().push(record.args().to_string());
    }

    fn flush(&self) {}
}

static LOGS: Capture = Capture(Mutex::new(Vec::new()));

fn take_logs() -> Vec<String> {
    std::mem::take(&mut *LOGS.0.lock().unwrap())
}

const FIXTURE: &str = "word\tw1\nword\tw2\nword\tw3\nsynset\ts1\tn\nsynset\ts2\tn\n\
lexeme\tw1\ts1\nlexeme\tw1\ts2\nlexeme\tw2\ts1\nlexeme\tw3\ts2\nrelation\thypernymy\ts1\ts2\n";
const FIXTURE_W: [f64; 3] = [1.0, 2.0, 4.0];

fn gradient_oracle() -> Check {
    const H: f64 = 1e-6;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2015);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = random_graph(&mut rng, 6, 5, 4);
        let (p, r) = structures(&g);
        let weights = random_weights(&mut rng);
        let obj = Objective::new(&p, &r, weights);
        let sys = DimensionSystem {
            e: (0..p.nnz()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            d: (0..p.nnz()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        // n = 3: one word column per dimension
        for _ in 0..3 {
            let w: Vec<f64> = (0..p.num_words())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let grads = compute_gradients(&sys, &w, &obj).map_err(|e| e.to_string())?;
            let loss = |e: &[f64], d: &[f64]| dense_loss(&p, &r, weights, false, e, d, &w);
            for k in 0..p.nnz() {
                let mut plus = sys.clone();
                let mut minus = sys.clone();
                plus.e[k] += H;
                minus.e[k] -= H;
                let fd_e = (loss(&plus.e, &plus.d) - loss(&minus.e, &minus.d)) / (2.0 * H);
                let mut plus = sys.clone();
                let mut minus = sys.clone();
                plus.d[k] += H;
                minus.d[k] -= H;
                let fd_d = (loss(&plus.e, &plus.d) - loss(&minus.e, &minus.d)) / (2.0 * H);
                for (a, f) in [(grads.e[k], fd_e), (grads.d[k], fd_d)] {
                    worst = worst.max((a - f).abs() / a.abs().max(f.abs()).max(1e-3));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(worst < 1e-4, "max relative error {worst:e}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "max relative error {worst:.2e} over 20 instances in {elapsed:.2?}"
    ))
}

fn fixture_structures() -> (lexemb::resource::SparsityPattern, RelationMatrix) {
    let g = parse_resource(FIXTURE).unwrap();
    (
        build_sparsity_pattern(&g).unwrap(),
        build_relation_matrix(&g, &RelationKind::ALL).unwrap(),
    )
}

fn convergence() -> Check {
    let (p, r) = fixture_structures();
    let config = TrainingConfig {
        weights: LossWeights {
            alpha: 1.0,
            beta: 0.0,
        },
        thread_count: 1,
        ..TrainingConfig::default()
    };
    let start = Instant::now();
    let (_, trace) = lexemb::autoencoder::train_dimension(&FIXTURE_W, &p, &r, &config)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let initial = trace.initial.synset;
    let last = trace.final_loss().synset;
    ensure!((initial - 9.875).abs() < 1e-12, "initial loss {initial}");
    ensure!(
        last < 0.1 * initial,
        "final {last:e} not below 10% of {initial}"
    );
    ensure!(last < 0.675, "final {last:e} not below 0.675");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "lr {} x {} iterations: reconstruction loss {initial} -> {last:.3e} in {elapsed:.2?}",
        config.learning_rate, config.iterations
    ))
}

fn invariant_suite() -> Check {
    let (p, r) = fixture_structures();
    let mut switches_seen = 0;
    for (alpha, beta) in [(1.0, 0.0), (0.33, 0.33), (0.2, 0.5), (0.0, 1.0), (0.0, 0.0)] {
        let config = TrainingConfig {
            weights: LossWeights { alpha, beta },
            thread_count: 1,
            ..TrainingConfig::default()
        };
        take_logs();
        let mut failure = None;
        let mut switches = 0;
        let mut was_normalized = true;
        let result = train_dimension_observed(&FIXTURE_W, &p, &r, &config, |state| {
            if failure.is_some() {
                return;
            }
            let (e, d) = densify(&p, &state.system.e, &state.system.d);
            for (j, row) in e.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    if p.find(j, i).is_none() && *v != 0.0 {
                        failure = Some(format!("iteration {}: E[{j}][{i}] = {v}", state.iteration));
                    }
                }
            }
            for (i, row) in d.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if p.find(j, i).is_none() && *v != 0.0 {
                        failure = Some(format!("iteration {}: D[{i}][{j}] = {v}", state.iteration));
                    }
                }
            }
            if was_normalized && !state.normalized {
                switches += 1;
            }
            was_normalized = state.normalized;
            if state.normalized {
                let e_cols =
                    (0..p.num_words()).map(|i| e.iter().map(|row| row[i]).collect::<Vec<_>>());
                let d_cols =
                    (0..p.num_synsets()).map(|j| d.iter().map(|row| row[j]).collect::<Vec<_>>());
                for col in e_cols.chain(d_cols) {
                    let sum: f64 = col.iter().sum();
                    if col.iter().any(|v| *v != 0.0) && (sum - 1.0).abs() > 1e-9 {
                        failure = Some(format!("iteration {}: column sum {sum}", state.iteration));
                    }
                }
            }
        });
        let (_, trace) = result.map_err(|e| e.to_string())?;
        if let Some(f) = failure {
            return Err(format!("alpha {alpha} beta {beta}: {f}"));
        }
        ensure!(
            switches <= 1,
            "alpha {alpha} beta {beta}: {switches} phase switches"
        );
        ensure!(
            trace.flagged_columns == 0,
            "alpha {alpha} beta {beta}: {} near-zero columns skipped",
            trace.flagged_columns
        );
        let logged = take_logs()
            .iter()
            .filter(|m| m.contains("column normalization off"))
            .count();
        ensure!(
            logged == switches && trace.normalization_stopped_at.is_some() == (switches == 1),
            "alpha {alpha} beta {beta}: {switches} switch(es), {logged} log line(s)"
        );
        switches_seen += switches;
    }
    Ok(format!(
        "5 weightings x 1000 iterations; {switches_seen} phase switch(es), each logged once"
    ))
}

fn synthetic() -> (
    lexemb::resource::ResourceGraph,
    lexemb::embedding::EmbeddingMatrix,
) {
    let g = load_resource(testdata("synthetic/resource.tsv"), ResourceFormat::Tsv).unwrap();
    let w = read_embeddings_text(testdata("synthetic/embeddings.txt")).unwrap();
    (intersect_vocabulary(&g, &w.vocabulary()), w)
}

fn determinism() -> Check {
    let (g, w) = synthetic();
    let mut outputs = Vec::new();
    for threads in [1, 4] {
        let config = TrainingConfig {
            thread_count: threads,
            ..TrainingConfig::default()
        };
        let model = train_all(&w, &g, &config).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_model_checkpoint(&model, &mut buf).unwrap();
        outputs.push(buf);
    }
    ensure!(
        outputs[0] == outputs[1],
        "checkpoints differ between 1 and 4 threads"
    );
    Ok(format!(
        "{} byte checkpoints identical for 1 and 4 threads",
        outputs[0].len()
    ))
}

fn zero_loss_fixpoint() -> Check {
    let g = parse_resource(
        "word\ta\nword\tb\nword\tc\nsynset\tx\nsynset\ty\nsynset\tz\n\
         lexeme\ta\tx\nlexeme\tb\ty\nlexeme\tc\tz\n",
    )
    .unwrap();
    let p = build_sparsity_pattern(&g).unwrap();
    let r = RelationMatrix::empty(p.num_synsets());
    let config = TrainingConfig {
        weights: LossWeights {
            alpha: 1.0,
            beta: 0.0,
        },
        thread_count: 1,
        ..TrainingConfig::default()
    };
    let w = [0.7, -1.3, 2.5];
    let initial = DimensionSystem::uniform(&p);
    let mut worst_loss = 0.0f64;
    let mut worst_drift = 0.0f64;
    let (last, trace) = train_dimension_observed(&w, &p, &r, &config, |state| {
        worst_loss = worst_loss.max(state.loss.total.abs());
        for (a, b) in state
            .system
            .e
            .iter()
            .chain(&state.system.d)
            .zip(initial.e.iter().chain(&initial.d))
        {
            worst_drift = worst_drift.max((a - b).abs());
        }
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        trace.initial.total.abs() <= 1e-12,
        "initial loss {}",
        trace.initial.total
    );
    ensure!(worst_loss <= 1e-12, "loss reached {worst_loss:e}");
    ensure!(
        worst_drift <= 1e-12,
        "coefficients moved by {worst_drift:e}"
    );
    ensure!(last == initial, "final system differs from the initial one");
    Ok(format!(
        "max loss {worst_loss:e}, max coefficient drift {worst_drift:e}"
    ))
}

fn spearman_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(68);
    let mut compared = 0;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=10);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        match (spearman(&xs, &ys), brute_force_spearman(&xs, &ys)) {
            (Ok(a), Some(b)) => {
                worst = worst.max((a - b).abs());
                compared += 1;
            }
            (Err(_), None) => {}
            (a, b) => return Err(format!("{xs:?} {ys:?}: {a:?} vs oracle {b:?}")),
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!(
        "{compared} defined cases agree within {worst:.1e}; undefined cases agree"
    ))
}

fn translation_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = DMatrix::from_fn(20, 5, |_, _| rng.gen_range(-1.0..1.0));
    let l_true = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-2.0..2.0));
    let pair = AlignedPair::new(x.clone(), &x * &l_true).map_err(|e| e.to_string())?;
    let fit = fit_translation_matrix(&pair).map_err(|e| e.to_string())?;
    let closed = closed_form_translation(&pair).map_err(|e| e.to_string())?;
    let recovery = (&fit.matrix - &l_true).abs().max();
    let agreement = (&fit.matrix - &closed).abs().max();
    ensure!(recovery <= 1e-8, "recovery error {recovery:e}");
    ensure!(agreement <= 1e-8, "closed form differs by {agreement:e}");
    Ok(format!(
        "recovery error {recovery:.1e}, closed-form gap {agreement:.1e}"
    ))
}

fn feature_schema() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=5);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let senses: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for (variant, want) in [
            (FeatureVariant::Cosine, k),
            (FeatureVariant::Product, n * k),
            (FeatureVariant::Raw, n * (k + 1)),
        ] {
            let got = wsd_feature_sets(&c, &senses, variant)
                .map_err(|e| e.to_string())?
                .values
                .len();
            ensure!(
                got == want,
                "{variant:?} n={n} k={k}: {got} values, expected {want}"
            );
        }
    }
    Ok("200 random (n, k) draws match k, nk, n(k+1)".to_owned())
}

fn grid() -> Check {
    // plateau of maxima along alpha + beta = 1
    let metric = |w: &LossWeights| Ok(((w.alpha + w.beta) * 10.0).round());
    let mut runs = Vec::new();
    for threads in [1, 4] {
        let r = grid_search(0.1, threads, Ok, metric).map_err(|e| e.to_string())?;
        let mut tsv = Vec::new();
        write_surface_tsv(&r, &mut tsv).unwrap();
        runs.push((r, tsv));
    }
    let (r, tsv) = &runs[0];
    ensure!(r.surface.len() == 66, "{} lattice points", r.surface.len());
    let rows = String::from_utf8(tsv.clone()).unwrap().lines().count() - 1;
    ensure!(rows == 66, "{rows} surface rows");
    let best = r.best.ok_or("no best point")?;
    ensure!(
        (best.alpha, best.beta) == (0.0, 1.0),
        "tie broken to ({}, {})",
        best.alpha,
        best.beta
    );
    ensure!(runs[0] == runs[1], "results differ between 1 and 4 threads");
    Ok("66 points, 66 rows, tie resolved to (0, 1) on every run".to_owned())
}

fn synthetic_pipeline() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap();
    let resource = testdata("synthetic/resource.tsv");
    let embeddings = testdata("synthetic/embeddings.txt");
    let scws = testdata("synthetic/scws.txt");
    let common = [
        "--resource",
        resource.to_str().unwrap(),
        "--embeddings",
        embeddings.to_str().unwrap(),
        "--out",
        out,
    ];
    let checkpoint = dir.path().join("checkpoint.txt");
    let run = |args: &[&str]| -> std::result::Result<String, String> {
        let o = Command::new(env!("CARGO_BIN_EXE_lexemb"))
            .args(args)
            .args(common)
            .env("RUST_LOG", "off")
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&o.stderr).trim()
            ));
        }
        Ok(String::from_utf8_lossy(&o.stdout).into_owned())
    };
    run(&["train"])?;
    run(&["derive", "--checkpoint", checkpoint.to_str().unwrap()])?;
    let printed = run(&["eval-scws", "--dataset", scws.to_str().unwrap()])?;
    let elapsed = start.elapsed();

    let rho: f64 = printed
        .trim()
        .parse()
        .map_err(|_| format!("unexpected output `{printed}`"))?;
    ensure!(rho.is_finite(), "rho {rho}");
    for name in [
        "checkpoint.txt",
        "loss_trace.tsv",
        "words.txt",
        "lexemes.txt",
        "synsets.txt",
    ] {
        ensure!(dir.path().join(name).is_file(), "{name} missing");
    }
    let trace = fs::read_to_string(dir.path().join("loss_trace.tsv")).unwrap();
    let dims = read_embeddings_text(&embeddings).unwrap().dim();
    let want = 1 + dims * (TrainingConfig::default().iterations + 1);
    ensure!(
        trace.lines().count() == want,
        "loss trace has {} lines, expected {want}",
        trace.lines().count()
    );
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "50 words / 30 synsets / 20 relations, n={dims}: rho x 100 = {rho} in {elapsed:.2?} \
         (scores on real benchmarks need external datasets; not gated)"
    ))
}

fn main() -> ExitCode {
    log::set_logger(&LOGS).expect("logger installs once");
    log::set_max_level(log::LevelFilter::Info);

    let criteria: [Criterion; 10] = [
        ("gradient oracle", gradient_oracle),
        ("fixture convergence", convergence),
        ("training invariants", invariant_suite),
        ("thread-count determinism", determinism),
        ("zero-loss fixpoint", zero_loss_fixpoint),
        ("spearman oracle", spearman_oracle),
        ("translation recovery", translation_recovery),
        ("feature schema", feature_schema),
        ("grid search", grid),
        ("synthetic end-to-end pipeline", synthetic_pipeline),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
