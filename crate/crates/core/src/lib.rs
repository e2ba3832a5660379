//! Implicit argument prediction with an event composition coherence model.
//!
//! The pipeline reads pre-parsed documents as scripts of events, builds a
//! vocabulary of role-suffixed tokens, trains skip-gram embeddings over
//! event pseudo-sentences, trains a pairwise coherence model on
//! automatically generated cloze triples, and uses it to fill missing
//! arguments, either on held-out cloze instances or on the nominal
//! implicit-argument dataset.

pub mod checkpoint;
pub mod cloze;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod evalx;
pub mod eventcomp;
pub mod fixtures;
pub mod gc;
pub mod inference;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod salience;
pub mod toyworld;

pub use error::{Error, Result};
