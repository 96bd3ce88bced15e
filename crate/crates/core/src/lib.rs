//! Document-grounded deck evaluation.
//!
//! The pipeline: normalize a LaTeX or markdown source into one stream,
//! segment it into typed slices, link the slices into a hierarchical
//! content tree, and overlay a BM25 index with tree-aware score fusion.
//! Slide/script packages are then aligned back to the source via retrieval
//! and scored on two boards: an artifact scoreboard (stability, fidelity,
//! legibility, aesthetics) and a delivery scoreboard (timing, narrative,
//! complementarity, pacing, attention, rehearsal readiness).
//!
//! [`orchestration`] adds the deterministic generation-time machinery:
//! a per-node pacing state machine, effect-conflict gating, and first-order
//! sequential augmentation with style inheritance.
//!
//! The `parallel` feature (on by default) backs the per-node and per-slide
//! inner loops with rayon; disabling it falls back to sequential iteration
//! with bit-identical results.

// Validation deliberately writes `!(v > 0.0)` so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod config;
pub mod deck;
pub mod delivery;
pub mod error;
pub mod ingest;
pub mod orchestration;
pub mod report;
pub mod retrieval;
pub mod scorers;
pub mod text;
pub mod tree;

pub use error::{Error, Result};
