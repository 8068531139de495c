//! Evaluation: word similarity in context, WSD feature sets and weight search.

mod grid;
mod similarity;
mod spearman;
mod wsd;

pub use grid::{grid_search, lattice, write_surface_tsv, GridPoint, GridSearchResult};
pub use similarity::{
    parse_scws, score_dataset, sense_vector, ContextualPair, ScoreReport, SenseInventory,
    SenseMethod,
};
pub use spearman::{fractional_ranks, spearman};
pub use wsd::{
    extract_features, parse_instances, write_features, wsd_feature_sets, FeatureVariant,
    FeatureVector, WsdInstance,
};
