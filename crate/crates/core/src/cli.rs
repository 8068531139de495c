//! Command-line front end.
//!
//! Settings are resolved with the precedence flags > config file > defaults.
//! The config file is flat `key = value` text using the long flag names
//! (`learning-rate` and `learning_rate` are both accepted).

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::autoencoder::{
    read_checkpoint, train_all, write_loss_trace, write_model_checkpoint, LossWeights,
    TrainedModel, TrainingConfig,
};
use crate::crosslingual::{
    aligned_pair_from_lexicon, apply_translation, fit_translation_matrix, read_lexicon,
};
use crate::derive::{
    derive_lexeme_embeddings, derive_synset_embeddings, naive_synset_embeddings, nearest_neighbors,
    ItemKind, TypedItem,
};
use crate::embedding::{
    default_stopwords, load_stopwords, read_embeddings_text, write_embeddings_text,
    EmbeddingMatrix, TokenNormalizer,
};
use crate::error::{Error, Result};
use crate::eval::{
    extract_features, grid_search, parse_instances, parse_scws, score_dataset, write_features,
    write_surface_tsv, FeatureVariant, SenseInventory, SenseMethod,
};
use crate::resource::{
    build_sparsity_pattern, intersect_vocabulary, load_resource, ResourceFormat, ResourceGraph,
};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "LEXEMB_THREADS";

const PRECISION: usize = 6;

#[derive(Parser, Debug)]
#[command(
    name = "lexemb",
    version,
    about = "Lexeme and synset embeddings from word embeddings and a lexical resource"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat key=value file with defaults for the options below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Lexical resource (TSV).
    #[arg(long, global = true)]
    resource: Option<PathBuf>,
    /// Word embeddings (text format).
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Stop word list, one word per line.
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Encoder-side share of lexeme embeddings.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    /// Divide each loss term by its number of summands.
    #[arg(long, global = true)]
    mean_scaling: bool,
    /// Worker threads (default: $LEXEMB_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Train the autoencoder; writes checkpoint.txt and loss_trace.tsv.
    Train,
    /// Write words.txt, lexemes.txt and synsets.txt.
    Derive {
        /// Reuse a checkpoint instead of training.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Print the nearest words, lexemes and synsets of an item such as `W/suit`.
    Query {
        item: String,
        #[arg(short = 'k', default_value_t = 10)]
        k: usize,
        /// Directory with derived embeddings (default: --out).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Contextual word similarity; prints Spearman's rho x 100.
    EvalScws {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value = "avgsimc")]
        method: SenseMethod,
        #[arg(long, value_enum, default_value_t = SenseKind::Lexeme)]
        sense_kind: SenseKind,
        #[arg(long, default_value = "identity")]
        normalizer: TokenNormalizer,
    },
    /// Embedding features for a WSD classifier.
    WsdFeatures {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value = "cosine")]
        variant: FeatureVariant,
        /// Use summed member-word vectors as synset vectors.
        #[arg(long)]
        naive: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Search alpha and beta, scoring each point on a similarity dataset.
    Gridsearch {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value = "avgsimc")]
        method: SenseMethod,
    },
    /// Fit a least-squares map between two embedding spaces.
    Translate {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Lines of `<source id> <target id>`.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Source-space embeddings to map into the target space.
        #[arg(long)]
        apply: Option<PathBuf>,
        #[arg(long)]
        applied_output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenseKind {
    Lexeme,
    Synset,
    Word,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub resource: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub out: PathBuf,
    pub training: TrainingConfig,
    pub command: Command,
}

const FILE_KEYS: [&str; 11] = [
    "resource",
    "embeddings",
    "stopwords",
    "out",
    "alpha",
    "beta",
    "theta",
    "iterations",
    "learning_rate",
    "mean_scaling",
    "threads",
];

/// Parse a flat `key = value` config file. Unknown keys are errors.
pub fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut values = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(idx + 1, "expected `key = value`"));
        };
        let key = key.trim().replace('-', "_");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(Error::config(key, "unknown configuration key"));
        }
        if values
            .insert(key.clone(), value.trim().to_owned())
            .is_some()
        {
            return Err(Error::config(key, "set more than once"));
        }
    }
    Ok(values)
}

fn file_value<T: FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    file.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
        })
        .transpose()
}

fn require_existing(field: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("`{}` does not exist", path.display()),
        ))
    }
}

fn usage_error(e: clap::Error) -> Error {
    let rendered = e.render().to_string();
    let first = rendered.lines().next().unwrap_or("invalid arguments");
    Error::Usage(first.trim_start_matches("error: ").to_owned())
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    let c = cli.common;
    let file = match &c.config {
        Some(path) => {
            require_existing("config", path)?;
            parse_config_file(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
        }
        None => HashMap::new(),
    };
    let defaults = TrainingConfig::default();
    let env_threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::config(THREADS_ENV, format!("cannot parse `{v}`")))?,
        ),
        Err(_) => None,
    };
    let training = TrainingConfig {
        weights: LossWeights {
            alpha: c
                .alpha
                .or(file_value(&file, "alpha")?)
                .unwrap_or(defaults.weights.alpha),
            beta: c
                .beta
                .or(file_value(&file, "beta")?)
                .unwrap_or(defaults.weights.beta),
        },
        iterations: c
            .iterations
            .or(file_value(&file, "iterations")?)
            .unwrap_or(defaults.iterations),
        learning_rate: c
            .learning_rate
            .or(file_value(&file, "learning_rate")?)
            .unwrap_or(defaults.learning_rate),
        theta: c
            .theta
            .or(file_value(&file, "theta")?)
            .unwrap_or(defaults.theta),
        per_term_mean_scaling: c.mean_scaling
            || file_value(&file, "mean_scaling")?.unwrap_or(defaults.per_term_mean_scaling),
        thread_count: c
            .threads
            .or(file_value(&file, "threads")?)
            .or(env_threads)
            .unwrap_or(defaults.thread_count),
    };
    training.validate()?;

    let path = |flag: Option<PathBuf>, key: &str| -> Result<Option<PathBuf>> {
        Ok(flag.or(file_value::<PathBuf>(&file, key)?))
    };
    let config = RunConfig {
        resource: path(c.resource, "resource")?,
        embeddings: path(c.embeddings, "embeddings")?,
        stopwords: path(c.stopwords, "stopwords")?,
        out: path(c.out, "out")?.unwrap_or_else(|| PathBuf::from("lexemb-out")),
        training,
        command: cli.command,
    };
    for (field, p) in [
        ("resource", &config.resource),
        ("embeddings", &config.embeddings),
        ("stopwords", &config.stopwords),
    ] {
        if let Some(p) = p {
            require_existing(field, p)?;
        }
    }
    match &config.command {
        Command::Train | Command::Query { .. } => {}
        Command::Derive { checkpoint } => {
            if let Some(p) = checkpoint {
                require_existing("checkpoint", p)?;
            }
        }
        Command::EvalScws { dataset, .. } | Command::Gridsearch { dataset, .. } => {
            require_existing("dataset", dataset)?
        }
        Command::WsdFeatures { instances, .. } => require_existing("instances", instances)?,
        Command::Translate {
            source,
            target,
            lexicon,
            apply,
            ..
        } => {
            require_existing("source", source)?;
            require_existing("target", target)?;
            require_existing("lexicon", lexicon)?;
            if let Some(p) = apply {
                require_existing("apply", p)?;
            }
        }
    }
    if let Command::Gridsearch { step, .. } = &config.command {
        crate::eval::lattice(*step)?;
    }
    if let Command::Query { k: 0, .. } = &config.command {
        return Err(Error::config("k", "must be at least 1"));
    }
    Ok(config)
}

/// Parse arguments (including the program name) and any config file they
/// name. Help and version requests come back as [`Error::Usage`].
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    resolve(Cli::try_parse_from(args).map_err(usage_error)?)
}

/// Parse arguments and execute the requested command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(usage_error(e)),
    };
    let config = resolve(cli)?;
    log::info!("resolved config: {config:?}");
    execute(&config)
}

fn required<'a>(value: &'a Option<PathBuf>, field: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::config(field, "required by this command"))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn load_inputs(config: &RunConfig) -> Result<(ResourceGraph, EmbeddingMatrix)> {
    let graph = load_resource(required(&config.resource, "resource")?, ResourceFormat::Tsv)?;
    let words = read_embeddings_text(required(&config.embeddings, "embeddings")?)?;
    let graph = intersect_vocabulary(&graph, &words.vocabulary());
    if graph.num_words() == 0 {
        return Err(Error::Empty("no resource word has an embedding".to_owned()));
    }
    log::info!(
        "resource after intersection: {} words, {} synsets ({} empty), {} lexemes, {} relations",
        graph.num_words(),
        graph.num_synsets(),
        graph.empty_synsets().len(),
        graph.lexemes().len(),
        graph.relations().len()
    );
    Ok((graph, words))
}

fn stopwords(config: &RunConfig) -> Result<std::collections::HashSet<String>> {
    match &config.stopwords {
        Some(p) => load_stopwords(p),
        None => Ok(default_stopwords()),
    }
}

fn read_derived(dir: &Path, name: &str, kind: ItemKind) -> Result<EmbeddingMatrix> {
    read_embeddings_text(dir.join(name))?.strip_id_prefix(kind.prefix())
}

fn execute(config: &RunConfig) -> Result<()> {
    match &config.command {
        Command::Train => cmd_train(config),
        Command::Derive { checkpoint } => cmd_derive(config, checkpoint.as_deref()),
        Command::Query { item, k, dir } => {
            cmd_query(dir.as_deref().unwrap_or(&config.out), item, *k)
        }
        Command::EvalScws {
            dataset,
            dir,
            method,
            sense_kind,
            normalizer,
        } => cmd_eval_scws(
            config,
            dataset,
            dir.as_deref().unwrap_or(&config.out),
            *method,
            *sense_kind,
            *normalizer,
        ),
        Command::WsdFeatures {
            instances,
            dir,
            variant,
            naive,
            output,
        } => cmd_wsd_features(
            config,
            instances,
            dir.as_deref().unwrap_or(&config.out),
            *variant,
            *naive,
            output
                .clone()
                .unwrap_or_else(|| config.out.join("features.txt")),
        ),
        Command::Gridsearch {
            dataset,
            step,
            method,
        } => cmd_gridsearch(config, dataset, *step, *method),
        Command::Translate {
            source,
            target,
            lexicon,
            output,
            apply,
            applied_output,
        } => cmd_translate(
            source,
            target,
            lexicon,
            output
                .clone()
                .unwrap_or_else(|| config.out.join("translation.txt")),
            apply.as_deref(),
            applied_output
                .clone()
                .unwrap_or_else(|| config.out.join("translated.txt")),
        ),
    }
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    let (graph, words) = load_inputs(config)?;
    let model = train_all(&words, &graph, &config.training)?;
    let checkpoint = config.out.join("checkpoint.txt");
    let trace = config.out.join("loss_trace.tsv");
    write_model_checkpoint(&model, create_file(&checkpoint)?)
        .map_err(|e| Error::io(&checkpoint, e))?;
    write_loss_trace(&model, create_file(&trace)?).map_err(|e| Error::io(&trace, e))?;
    let total: f64 = model.traces.iter().map(|t| t.final_loss().total).sum();
    println!(
        "trained {} dimension(s); summed final loss {total:.6e}",
        model.dim()
    );
    println!("wrote {}", checkpoint.display());
    println!("wrote {}", trace.display());
    Ok(())
}

fn cmd_derive(config: &RunConfig, checkpoint: Option<&Path>) -> Result<()> {
    let (graph, words) = load_inputs(config)?;
    let model = match checkpoint {
        Some(path) => {
            let pattern = build_sparsity_pattern(&graph)?;
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let systems = read_checkpoint(BufReader::new(file), &pattern)?;
            TrainedModel {
                pattern,
                systems,
                traces: Vec::new(),
                config: config.training.clone(),
            }
        }
        None => train_all(&words, &graph, &config.training)?,
    };
    let (synsets, report) = derive_synset_embeddings(&model, &words, &graph)?;
    if !report.unreachable.is_empty() {
        log::warn!(
            "{} empty synset(s) have no embedded neighbor and stay zero",
            report.unreachable.len()
        );
    }
    let lexemes =
        derive_lexeme_embeddings(&model, &words, &synsets, &graph, config.training.theta)?;
    for (name, m) in [
        ("words.txt", words.with_id_prefix(ItemKind::Word.prefix())),
        (
            "lexemes.txt",
            lexemes.with_id_prefix(ItemKind::Lexeme.prefix()),
        ),
        (
            "synsets.txt",
            synsets.with_id_prefix(ItemKind::Synset.prefix()),
        ),
    ] {
        let path = config.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_embeddings_text(&m, &path, PRECISION)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_query(dir: &Path, item: &str, k: usize) -> Result<()> {
    let query = TypedItem::parse(item)
        .ok_or_else(|| Error::config("item", format!("`{item}` needs a W/, L/ or S/ prefix")))?;
    let words = read_derived(dir, "words.txt", ItemKind::Word)?;
    let lexemes = read_derived(dir, "lexemes.txt", ItemKind::Lexeme)?;
    let synsets = read_derived(dir, "synsets.txt", ItemKind::Synset)?;
    let stores = [
        (ItemKind::Word, &words),
        (ItemKind::Lexeme, &lexemes),
        (ItemKind::Synset, &synsets),
    ];
    let (_, store) = stores
        .iter()
        .find(|(kind, _)| *kind == query.kind)
        .expect("every kind has a store");
    let vector = store
        .get(&query.id)
        .ok_or_else(|| Error::config("item", format!("`{item}` has no embedding")))?
        .to_vec();
    let mut stdout = std::io::stdout().lock();
    for (rank, n) in nearest_neighbors(&vector, &stores, k, Some(&query))?
        .iter()
        .enumerate()
    {
        writeln!(stdout, "{}\t{}\t{:.4}", rank + 1, n.item, n.cosine)
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn cmd_eval_scws(
    config: &RunConfig,
    dataset: &Path,
    dir: &Path,
    method: SenseMethod,
    kind: SenseKind,
    normalizer: TokenNormalizer,
) -> Result<()> {
    let pairs = parse_scws(&fs::read_to_string(dataset).map_err(|e| Error::io(dataset, e))?)?;
    let context = match &config.embeddings {
        Some(p) => read_embeddings_text(p)?,
        None => read_derived(dir, "words.txt", ItemKind::Word)?,
    };
    let inventory = match kind {
        SenseKind::Word => SenseInventory::from_words(&context),
        SenseKind::Lexeme => {
            SenseInventory::from_lexemes(&read_derived(dir, "lexemes.txt", ItemKind::Lexeme)?)
        }
        SenseKind::Synset => SenseInventory::from_synsets(
            &read_derived(dir, "lexemes.txt", ItemKind::Lexeme)?,
            &read_derived(dir, "synsets.txt", ItemKind::Synset)?,
        )?,
    };
    let report = score_dataset(
        &pairs,
        &inventory,
        &context,
        method,
        &stopwords(config)?,
        normalizer,
    )?;
    if report.skipped > 0 {
        log::info!("skipped {} of {} pairs", report.skipped, pairs.len());
    }
    println!("{:.1}", report.rho * 100.0);
    Ok(())
}

fn cmd_wsd_features(
    config: &RunConfig,
    instances: &Path,
    dir: &Path,
    variant: FeatureVariant,
    naive: bool,
    output: PathBuf,
) -> Result<()> {
    let (graph, words) = load_inputs(config)?;
    let synsets = if naive {
        naive_synset_embeddings(&graph, &words)
    } else {
        read_derived(dir, "synsets.txt", ItemKind::Synset)?
    };
    let instances =
        parse_instances(&fs::read_to_string(instances).map_err(|e| Error::io(instances, e))?)?;
    let (features, skipped) = extract_features(
        &instances,
        &graph,
        &synsets,
        &words,
        &stopwords(config)?,
        variant,
    )?;
    write_features(&features, create_file(&output)?).map_err(|e| Error::io(&output, e))?;
    println!(
        "wrote {} feature vector(s), skipped {skipped}",
        features.len()
    );
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_gridsearch(
    config: &RunConfig,
    dataset: &Path,
    step: f64,
    method: SenseMethod,
) -> Result<()> {
    let (graph, words) = load_inputs(config)?;
    let pairs = parse_scws(&fs::read_to_string(dataset).map_err(|e| Error::io(dataset, e))?)?;
    let stop = stopwords(config)?;
    let result = grid_search(
        step,
        config.training.thread_count,
        |weights| {
            let training = TrainingConfig {
                weights,
                thread_count: 1,
                ..config.training.clone()
            };
            let model = train_all(&words, &graph, &training)?;
            let (synsets, _) = derive_synset_embeddings(&model, &words, &graph)?;
            derive_lexeme_embeddings(&model, &words, &synsets, &graph, training.theta)
        },
        |lexemes| {
            let inventory = SenseInventory::from_lexemes(lexemes);
            score_dataset(
                &pairs,
                &inventory,
                &words,
                method,
                &stop,
                TokenNormalizer::Identity,
            )
            .map(|r| r.rho)
        },
    )?;
    let path = config.out.join("surface.tsv");
    write_surface_tsv(&result, create_file(&path)?).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    let best = result
        .best
        .ok_or_else(|| Error::Empty("no grid point produced a score".to_owned()))?;
    println!(
        "best alpha={} beta={} rho={:.4}",
        best.alpha,
        best.beta,
        best.metric.expect("best point has a metric")
    );
    Ok(())
}

fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = create_file(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {}", m.nrows(), m.ncols()).map_err(io)?;
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" ")).map_err(io)?;
    }
    out.flush().map_err(io)
}

fn cmd_translate(
    source: &Path,
    target: &Path,
    lexicon: &Path,
    output: PathBuf,
    apply: Option<&Path>,
    applied_output: PathBuf,
) -> Result<()> {
    let src = read_embeddings_text(source)?;
    let tgt = read_embeddings_text(target)?;
    let (pair, skipped) = aligned_pair_from_lexicon(&read_lexicon(lexicon)?, &src, &tgt)?;
    if skipped > 0 {
        log::info!("skipped {skipped} lexicon pair(s) not covered by both spaces");
    }
    let fit = fit_translation_matrix(&pair)?;
    write_matrix(&fit.matrix, &output)?;
    println!("residual {:.6e}", fit.residual);
    println!("wrote {}", output.display());
    if let Some(path) = apply {
        let x = read_embeddings_text(path)?;
        let rows = DMatrix::from_row_slice(
            x.len(),
            x.dim(),
            &x.rows().flat_map(|(_, r)| r.to_vec()).collect::<Vec<_>>(),
        );
        let mapped = apply_translation(&fit.matrix, &rows)?;
        let data: Vec<f64> = (0..mapped.nrows())
            .flat_map(|r| mapped.row(r).iter().copied().collect::<Vec<_>>())
            .collect();
        let translated = EmbeddingMatrix::new(x.ids().to_vec(), data, mapped.ncols())?;
        if let Some(parent) = applied_output
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
        {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_embeddings_text(&translated, &applied_output, PRECISION)?;
        println!("wrote {}", applied_output.display());
    }
    Ok(())
}
