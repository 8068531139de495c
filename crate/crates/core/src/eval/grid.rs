//! Grid search over the constraint weights `alpha` and `beta`.

use std::io::Write;

use rayon::prelude::*;

use crate::autoencoder::LossWeights;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    /// `None` when training or evaluation failed at this point.
    pub metric: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    /// Every lattice point, ordered by alpha then beta.
    pub surface: Vec<GridPoint>,
    pub best: Option<GridPoint>,
}

/// All `(alpha, beta)` on a `step` lattice with `alpha + beta <= 1`, ordered
/// by alpha then beta.
pub fn lattice(step: f64) -> Result<Vec<LossWeights>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::config("step", format!("{step} is not in (0, 1]")));
    }
    let cells = (1.0 / step).round();
    if (cells * step - 1.0).abs() > 1e-9 {
        return Err(Error::config(
            "step",
            format!("{step} does not divide 1 evenly"),
        ));
    }
    let m = cells as usize;
    let mut points = Vec::with_capacity((m + 1) * (m + 2) / 2);
    for a in 0..=m {
        for b in 0..=(m - a) {
            points.push(LossWeights {
                alpha: a as f64 / m as f64,
                beta: b as f64 / m as f64,
            });
        }
    }
    Ok(points)
}

/// Train and evaluate at every lattice point.
///
/// Points run in parallel on `threads` workers. A failure at a point leaves a
/// missing cell. The best point maximizes the metric; ties go to the smaller
/// alpha, then the smaller beta.
pub fn grid_search<T>(
    step: f64,
    threads: usize,
    trainer: impl Fn(LossWeights) -> Result<T> + Sync,
    evaluator: impl Fn(&T) -> Result<f64> + Sync,
) -> Result<GridSearchResult> {
    let points = lattice(step)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let surface: Vec<GridPoint> = pool.install(|| {
        points
            .par_iter()
            .map(|&weights| {
                let metric = trainer(weights)
                    .and_then(|model| evaluator(&model))
                    .map_err(|e| log::warn!("alpha={} beta={}: {e}", weights.alpha, weights.beta))
                    .ok()
                    .filter(|m| m.is_finite());
                GridPoint {
                    alpha: weights.alpha,
                    beta: weights.beta,
                    metric,
                }
            })
            .collect()
    });

    let mut best: Option<GridPoint> = None;
    for point in &surface {
        let Some(m) = point.metric else { continue };
        if best.is_none_or(|b| m > b.metric.expect("best has a metric")) {
            best = Some(*point);
        }
    }
    Ok(GridSearchResult { surface, best })
}

/// Surface as TSV with columns `alpha beta metric`; missing cells read `NA`.
pub fn write_surface_tsv<W: Write>(result: &GridSearchResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "alpha\tbeta\tmetric")?;
    for p in &result.surface {
        match p.metric {
            Some(m) => writeln!(out, "{}\t{}\t{m}", p.alpha, p.beta)?,
            None => writeln!(out, "{}\t{}\tNA", p.alpha, p.beta)?,
        }
    }
    out.flush()
}
