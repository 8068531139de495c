use crate::embedding::EmbeddingMatrix;
use crate::resource::ResourceGraph;

/// Sweeps over relation chains before giving up on an empty synset.
pub const MAX_FILL_SWEEPS: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FillReport {
    /// Empty synsets that received a vector, in synset order.
    pub filled: Vec<String>,
    /// Empty synsets with no reachable non-empty relation neighbor.
    pub unreachable: Vec<String>,
}

/// Give lexeme-less synsets the mean vector of their related synsets.
///
/// Relations are treated as undirected. Each sweep fills every empty synset
/// that has at least one known neighbor, using only vectors known at the
/// start of the sweep; sweeps repeat until nothing changes or
/// [`MAX_FILL_SWEEPS`] is reached. Synsets left over keep their zero row.
pub fn fill_empty_synsets(
    s: &EmbeddingMatrix,
    graph: &ResourceGraph,
) -> (EmbeddingMatrix, FillReport) {
    let mut out = s.clone();
    let empty = graph.empty_synsets();
    if empty.is_empty() {
        return (out, FillReport::default());
    }

    // synset index in graph -> row in `s`
    let rows: Vec<Option<usize>> = graph
        .synsets()
        .iter()
        .map(|syn| s.index_of(&syn.id))
        .collect();
    let mut neighbors = vec![Vec::new(); graph.num_synsets()];
    for rel in graph.relations() {
        if let (Some(a), Some(b)) = (
            graph.synset_index(&rel.source),
            graph.synset_index(&rel.target),
        ) {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }

    let mut known = vec![true; graph.num_synsets()];
    for &j in &empty {
        known[j] = false;
    }
    let dim = s.dim();
    let mut filled = Vec::new();
    for _ in 0..MAX_FILL_SWEEPS {
        let mut updates = Vec::new();
        for &j in empty.iter().filter(|&&j| !known[j]) {
            let sources: Vec<usize> = neighbors[j]
                .iter()
                .filter(|&&n| known[n])
                .filter_map(|&n| rows[n])
                .collect();
            if sources.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; dim];
            for &r in &sources {
                for (acc, v) in mean.iter_mut().zip(out.row(r)) {
                    *acc += v;
                }
            }
            let count = sources.len() as f64;
            mean.iter_mut().for_each(|v| *v /= count);
            updates.push((j, mean));
        }
        if updates.is_empty() {
            break;
        }
        for (j, mean) in updates {
            if let Some(r) = rows[j] {
                out.row_mut(r).copy_from_slice(&mean);
            }
            known[j] = true;
            filled.push(j);
        }
    }

    filled.sort_unstable();
    let name = |j: usize| graph.synsets()[j].id.clone();
    let report = FillReport {
        filled: filled.into_iter().map(name).collect(),
        unreachable: empty.into_iter().filter(|&j| !known[j]).map(name).collect(),
    };
    if !report.unreachable.is_empty() {
        log::warn!(
            "{} empty synset(s) have no related non-empty synset and stay zero",
            report.unreachable.len()
        );
    }
    (out, report)
}
