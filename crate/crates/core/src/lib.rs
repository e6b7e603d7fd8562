//! Implicit-feedback recommenders evaluated on local, long-tail music.
//!
//! The crate provides a sparse playlist x track store, artist locality
//! classification from event records, three recommenders (item-item
//! neighborhood, ALS-trained weighted matrix factorization, BPR-trained
//! matrix factorization) with random and popularity baselines, ranking
//! metrics, and a cross-evaluation harness that ranks only the local tracks
//! of a city.

pub mod error;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod interactions;
pub mod linalg;
pub mod metrics;
pub mod recommenders;
pub mod report;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use interactions::{build_matrix, Catalog, InteractionMatrix, SparseVector, SparseView};
