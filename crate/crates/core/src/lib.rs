//! Generalization-gap measurement for representation-based classifiers.

pub mod data;
pub mod error;
pub mod bounds;
pub mod gaps;
pub mod info;
pub mod io;
pub mod noise;
pub mod oracle;
pub mod potl;
pub mod seed;
pub mod synth;
pub mod trainers;

pub use data::LabeledEmbeddings;
pub use error::{Error, Result};
