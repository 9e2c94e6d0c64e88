//! Confidence-based curriculum construction for multi-task training.
//!
//! The pipeline turns per-instance confidence logs into difficulty scores
//! ([`scoring`]), arranges the scored corpus into ordered splits
//! ([`splitting`]), and expands those into a stage-by-stage training manifest
//! with replay of earlier splits ([`scheduler`]). [`simulate`] provides a toy
//! learner for end-to-end checks and [`analysis`] the per-difficulty reports.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod numeric;
pub mod scheduler;
pub mod scoring;
pub mod seed;
pub mod simulate;
pub mod splitting;

pub use error::{Error, Result};
