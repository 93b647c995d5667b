//! Core library: corpus loading, featurization, hierarchical clustering,
//! cluster summaries, the review command language, and the on-disk index.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod featurize;
pub mod index;
pub mod pipeline;
pub mod querylang;
pub mod seeding;
pub mod summarize;
pub mod synth;
