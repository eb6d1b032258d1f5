//! Exact desk-scale simulation of quantum delegated and federated learning
//! over quantum homomorphic encryption.

pub mod client;
pub mod crypto;
pub mod dlp;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod learner;
pub mod protocol;
pub mod simulator;

pub use error::{Error, Result};
