//! Critical site percolation on the triangular lattice: crossings, pivotal and
//! pioneering sites, arm events, and the box-graph construction used to bound
//! moments of their counts.

pub mod arms;
pub mod boxgraph;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod features;
mod flow;
pub mod geometry;
pub mod io;
pub mod percolation;
pub mod svg;

pub use config::{sample_config, Configuration};
pub use error::{Error, Result};
pub use features::{
    explore_interface, feature_counts, feature_sets, lowest_crossing, on_some_crossing_set, pioneering_set,
    pivotal_flip_oracle, pivotal_set, pivotal_set_direct, ExplorationTrace, FeatureCounts, FeatureEngine,
    FeatureSets, Terminal,
};
pub use geometry::{Rect, Side, Vertex};
pub use percolation::{State, EndpointRule, PathQuery};
