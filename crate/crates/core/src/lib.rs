//! Experiments on the geometry of near-shortest s-t paths in sparse
//! random graphs and in first-passage percolation on the complete
//! graph: correlated graph ensembles, exhaustive near-optimal path
//! enumeration, overlap spectra and gap verdicts, a low-degree
//! path-count estimator, exact Wasserstein transport between path
//! ensembles, and brute-force counting oracles that anchor every
//! statistical claim to an exact small-case computation.
//!
//! Everything is deterministic given a seed: randomness is
//! counter-based per (seed, stream, slot), so results are independent
//! of iteration order and thread count.

pub mod error;
pub mod rng;
pub mod graph;
pub mod ensembles;
pub mod estimator;
pub mod harness;
pub mod fpp;
pub mod oracle;
pub mod overlap_lab;
pub mod path_engine;
pub mod report;
pub mod transport;

pub use error::{Error, Result};
pub use graph::{Graph, SINK, SOURCE};
