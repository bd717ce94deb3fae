//! Configuration types for energy evaluation and the toy training loop.

use crate::error::{HbError, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Inverse temperature and normalization policy governing every energy
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfieldConfig<F: Scalar = f64> {
    beta: F,
    normalize_inputs: bool,
}

impl<F: Scalar> HopfieldConfig<F> {
    /// A configuration with inverse temperature `beta`. When
    /// `normalize_inputs` is set, the energy operations require patterns and
    /// queries to be unit-norm and reject anything else.
    pub fn new(beta: F, normalize_inputs: bool) -> Result<Self> {
        if !(beta.is_finite() && beta > F::zero()) {
            return Err(HbError::InvalidParameter {
                name: "beta",
                reason: format!("must be positive and finite, got {beta}"),
            });
        }
        Ok(Self {
            beta,
            normalize_inputs,
        })
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn normalize_inputs(&self) -> bool {
        self.normalize_inputs
    }
}

/// Geometry of a toy dynamics run: dot-product energies with re-projection
/// onto the unit sphere, or squared-Euclidean-distance energies in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Sphere,
    Euclidean,
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Geometry::Sphere => write!(f, "sphere"),
            Geometry::Euclidean => write!(f, "euclidean"),
        }
    }
}

/// Parameters of a toy boosting run.
///
/// Defaults follow the settings that work best at small scale: `beta = 4`,
/// `lambda = 0.5`, weight recomputation every 50 gradient steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyConfig {
    /// Inverse temperature.
    pub beta: f64,
    /// Weight of the OOD loss term in the composite loss.
    pub lambda: f64,
    /// Initial learning rate.
    pub lr: f64,
    /// Per-step learning-rate multiplier (1.0 keeps the rate constant).
    pub lr_growth: f64,
    /// Number of gradient steps.
    pub steps: usize,
    /// Recompute the AUX sampling weights every this many steps.
    pub resample_every: usize,
    /// Mini-batch size drawn from each pool.
    pub batch_n: usize,
    /// Record a trajectory snapshot every this many steps.
    pub record_every: usize,
    /// RNG seed; identical configs produce bit-identical trajectories.
    pub seed: u64,
    /// Pattern-space geometry.
    pub geometry: Geometry,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            beta: 4.0,
            lambda: 0.5,
            lr: 0.1,
            lr_growth: 1.0,
            steps: 100,
            resample_every: 50,
            batch_n: 20,
            record_every: 10,
            seed: 0,
            geometry: Geometry::Sphere,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, ok: bool, reason: String| {
            if ok {
                Ok(())
            } else {
                Err(HbError::InvalidParameter { name, reason })
            }
        };
        check(
            "beta",
            self.beta.is_finite() && self.beta > 0.0,
            format!("must be positive and finite, got {}", self.beta),
        )?;
        check(
            "lambda",
            self.lambda.is_finite() && self.lambda >= 0.0,
            format!("must be nonnegative, got {}", self.lambda),
        )?;
        check(
            "lr",
            self.lr.is_finite() && self.lr > 0.0,
            format!("must be positive, got {}", self.lr),
        )?;
        check(
            "lr_growth",
            self.lr_growth.is_finite() && self.lr_growth > 0.0,
            format!("must be positive, got {}", self.lr_growth),
        )?;
        check("steps", self.steps >= 1, "must be >= 1".to_string())?;
        check(
            "resample_every",
            self.resample_every >= 1,
            "must be >= 1".to_string(),
        )?;
        check("batch_n", self.batch_n >= 1, "must be >= 1".to_string())?;
        check(
            "record_every",
            self.record_every >= 1,
            "must be >= 1".to_string(),
        )?;
        Ok(())
    }

    /// Energy configuration induced by this toy run: sphere geometry
    /// requires unit-norm inputs, Euclidean geometry does not.
    pub fn hopfield(&self) -> Result<HopfieldConfig<f64>> {
        HopfieldConfig::new(self.beta, self.geometry == Geometry::Sphere)
    }
}
