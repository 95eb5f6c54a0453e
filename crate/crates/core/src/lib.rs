//! Variational autoencoder with an auxiliary softmax multi-classifier that
//! tracks the mutual information I(z,x) and the marginal divergence
//! D_KL(q(z)||p(z)) during training (VAE-AS), together with the Monte-Carlo
//! aggregated-posterior and MINE estimators used to cross-check it.
//!
//! All entropies and divergences are in nats. Everything is `f64`, seeded,
//! and deterministic: identical configs produce byte-identical outputs.

pub mod baselines;
pub mod checkpoint;
pub mod classifier;
pub mod config;
pub mod data;
pub mod error;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod objective;
pub mod pgm;
pub mod report;
pub mod rng;
pub mod train;
pub mod vae;

pub use error::{Error, Result};
pub use rng::{Purpose, SeededRng};
