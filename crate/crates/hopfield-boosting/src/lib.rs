//! Energy-based out-of-distribution detection with modern Hopfield networks.
//!
//! The crate implements the building blocks of Hopfield-style OOD detection
//! on precomputed embeddings: numerically stable log-sum-exp kernels, the
//! modern Hopfield energy, the boundary energy between an in-distribution
//! memory and an auxiliary outlier memory, the boosting-style weight update
//! that resamples weak learners near the decision boundary, OOD scores and
//! their evaluation metrics (FPR95, AUROC), toy-scale pattern dynamics, and
//! numerical verifiers for the algebraic identities the energies satisfy
//! (log-cosh form, Bernoulli-variance interpretation, RBF and SVM
//! equivalences, HE/SHE limits).
//!
//! All numeric kernels are generic over the floating-point scalar via
//! [`Scalar`]; `f64` is the default type parameter everywhere and the type
//! the file formats and the CLI operate in.

pub mod baselines;
pub mod boosting;
pub mod config;
pub mod energy;
pub mod error;
pub mod gradients;
pub mod io;
pub mod memory;
pub mod metrics;
pub mod scalar;
pub mod threads;
pub mod toylab;
pub mod verify;

pub use config::{Geometry, HopfieldConfig, ToyConfig};
pub use energy::{Decision, EnergyVector};
pub use error::{ErrorClass, HbError, Result};
pub use memory::{normalize_columns, PatternMemory, QueryBatch};
pub use scalar::Scalar;

/// `f32` pattern memory.
pub type PatternMemory32 = memory::PatternMemory<f32>;
/// `f64` pattern memory (the default).
pub type PatternMemory64 = memory::PatternMemory<f64>;
/// `f32` query batch.
pub type QueryBatch32 = memory::QueryBatch<f32>;
/// `f64` query batch (the default).
pub type QueryBatch64 = memory::QueryBatch<f64>;
/// `f32` Hopfield configuration.
pub type HopfieldConfig32 = config::HopfieldConfig<f32>;
/// `f64` Hopfield configuration (the default).
pub type HopfieldConfig64 = config::HopfieldConfig<f64>;
