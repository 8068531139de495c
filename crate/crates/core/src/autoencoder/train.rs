use rayon::prelude::*;

use super::objective::{compute_gradients, compute_loss, LossParts, LossWeights, Objective};
use super::system::{column_normalize, DimensionSystem};
use crate::embedding::{dimension_column, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::resource::{
    build_relation_matrix, build_sparsity_pattern, RelationKind, RelationMatrix, ResourceGraph,
    SparsityPattern,
};

/// Loss above this is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub weights: LossWeights,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Encoder-side share of the combined lexeme embedding.
    pub theta: f64,
    pub per_term_mean_scaling: bool,
    pub thread_count: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            weights: LossWeights::default(),
            iterations: 1000,
            learning_rate: 0.01,
            theta: 0.5,
            per_term_mean_scaling: false,
            thread_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(
                "learning_rate",
                format!("{} must be a positive number", self.learning_rate),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::config(
                "theta",
                format!("{} is outside [0, 1]", self.theta),
            ));
        }
        if self.thread_count == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration losses of one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTrace {
    /// Loss of the initial, uniformly normalized system.
    pub initial: LossParts,
    /// Loss after each iteration; one entry per iteration.
    pub steps: Vec<LossParts>,
    /// Iteration (1-based) whose loss increase switched column normalization
    /// off. Normalization was still applied on that iteration.
    pub normalization_stopped_at: Option<usize>,
    /// Number of near-zero-sum columns skipped while normalizing.
    pub flagged_columns: usize,
}

impl LossTrace {
    pub fn final_loss(&self) -> LossParts {
        self.steps.last().copied().unwrap_or(self.initial)
    }
}

/// State handed to a training observer after every iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    pub iteration: usize,
    pub system: &'a DimensionSystem,
    pub loss: LossParts,
    /// Whether column normalization was applied on this iteration.
    pub normalized: bool,
}

pub fn train_dimension(
    w: &[f64],
    pattern: &SparsityPattern,
    relations: &RelationMatrix,
    config: &TrainingConfig,
) -> Result<(DimensionSystem, LossTrace)> {
    train_dimension_observed(w, pattern, relations, config, |_| {})
}

/// Gradient descent on one dimension.
///
/// Starts from the uniform column-normalized system. While the loss keeps
/// decreasing, every step is followed by column normalization of both
/// matrices; the first iteration whose loss exceeds its predecessor turns
/// normalization off for good and plain gradient descent continues.
pub fn train_dimension_observed(
    w: &[f64],
    pattern: &SparsityPattern,
    relations: &RelationMatrix,
    config: &TrainingConfig,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<(DimensionSystem, LossTrace)> {
    config.validate()?;
    let objective = Objective::new(pattern, relations, config.weights)
        .with_mean_scaling(config.per_term_mean_scaling);

    let mut system = DimensionSystem::uniform(pattern);
    let initial = compute_loss(&system, w, &objective)?;
    let mut trace = LossTrace {
        initial,
        steps: Vec::with_capacity(config.iterations),
        normalization_stopped_at: None,
        flagged_columns: 0,
    };

    let mut previous = initial.total;
    let mut normalizing = true;
    let lr = config.learning_rate;
    for iteration in 1..=config.iterations {
        let grads = compute_gradients(&system, w, &objective).map_err(|_| Error::Divergence {
            iteration,
            loss: f64::NAN,
        })?;
        for (c, g) in system.e.iter_mut().zip(&grads.e) {
            *c -= lr * g;
        }
        for (c, g) in system.d.iter_mut().zip(&grads.d) {
            *c -= lr * g;
        }

        let normalized = normalizing;
        if normalizing {
            trace.flagged_columns += column_normalize(&mut system.e, pattern.word_groups()).len();
            trace.flagged_columns += column_normalize(&mut system.d, pattern.synset_groups()).len();
        }

        let loss = match compute_loss(&system, w, &objective) {
            Ok(loss) if loss.total <= DIVERGENCE_LIMIT => loss,
            Ok(loss) => {
                return Err(Error::Divergence {
                    iteration,
                    loss: loss.total,
                })
            }
            Err(_) => {
                return Err(Error::Divergence {
                    iteration,
                    loss: f64::NAN,
                })
            }
        };

        if normalizing && loss.total > previous {
            normalizing = false;
            trace.normalization_stopped_at = Some(iteration);
            log::info!(
                "iteration {iteration}: loss rose {previous:e} -> {:e}, column normalization off",
                loss.total
            );
        }

        observer(&IterationState {
            iteration,
            system: &system,
            loss,
            normalized,
        });
        trace.steps.push(loss);
        previous = loss.total;
    }

    Ok((system, trace))
}

/// The trained per-dimension systems of a whole embedding space.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub pattern: SparsityPattern,
    pub systems: Vec<DimensionSystem>,
    pub traces: Vec<LossTrace>,
    pub config: TrainingConfig,
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.systems.len()
    }

    /// Largest coefficient magnitude over all dimensions.
    pub fn max_abs_weight(&self) -> f64 {
        self.systems
            .iter()
            .map(DimensionSystem::max_abs)
            .fold(0.0, f64::max)
    }
}

/// Per-dimension word columns in the graph's word order.
pub fn word_columns(w: &EmbeddingMatrix, graph: &ResourceGraph) -> Result<Vec<Vec<f64>>> {
    let rows = graph
        .words()
        .iter()
        .map(|id| {
            w.index_of(id).ok_or_else(|| {
                Error::Shape(format!(
                    "word `{id}` has no embedding; intersect the vocabulary first"
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    (0..w.dim())
        .map(|d| {
            let column = dimension_column(w, d)?;
            Ok(rows.iter().map(|&r| column.values[r]).collect())
        })
        .collect()
}

/// Train one independent autoencoder per embedding dimension.
///
/// Dimensions run on a pool of `config.thread_count` workers; results are
/// merged by dimension index, so the model does not depend on scheduling.
pub fn train_all(
    w: &EmbeddingMatrix,
    graph: &ResourceGraph,
    config: &TrainingConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let pattern = build_sparsity_pattern(graph)?;
    let relations = build_relation_matrix(graph, &RelationKind::ALL)?;
    let columns = word_columns(w, graph)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.thread_count)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let results: Vec<Result<(DimensionSystem, LossTrace)>> = pool.install(|| {
        columns
            .par_iter()
            .map(|column| train_dimension(column, &pattern, &relations, config))
            .collect()
    });

    let mut systems = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (d, result) in results.into_iter().enumerate() {
        match result {
            Ok((system, trace)) => {
                systems.push(system);
                traces.push(trace);
            }
            Err(e) => failures.push((d, e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::DimensionFailures(failures));
    }

    let model = TrainedModel {
        pattern,
        systems,
        traces,
        config: config.clone(),
    };
    let max_abs = model.max_abs_weight();
    if max_abs > 2.0 {
        log::warn!("learned coefficients reach |{max_abs:.3}|, outside the usual [-2, 2]");
    }
    let switched = model
        .traces
        .iter()
        .filter(|t| t.normalization_stopped_at.is_some())
        .count();
    log::info!(
        "trained {} dimension(s); normalization stopped early in {switched}",
        model.dim()
    );
    Ok(model)
}
