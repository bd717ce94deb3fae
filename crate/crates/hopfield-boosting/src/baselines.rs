//! Post-hoc Hopfield-energy OOD scores (HE, SHE, HE with an AUX term) and
//! numerical verifiers for the RBF-network and RBF-SVM equivalences of the
//! energy formulation.
//!
//! HE and SHE historically operate on raw (unnormalized) features, so these
//! scores only validate dimensions and ignore the normalization policy.

use crate::config::HopfieldConfig;
use crate::energy::{dots, lse_raw, neg_half_sq_dists, sq_norm};
use crate::error::{HbError, Result};
use crate::memory::{is_unit, PatternMemory};
use crate::scalar::{cast, Scalar};
use ndarray::{Array1, ArrayView1};

/// Hopfield-energy score `lse(beta, Xc^T xi)` over a class memory; the
/// shifted variant subtracts `ln(Nc)/beta`, which leaves class-balanced
/// comparisons unchanged and makes the beta -> 0 limit the mean similarity.
pub fn he_score<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    class_mem: &PatternMemory<F>,
    shifted: bool,
) -> Result<F> {
    check_dims(query.len(), class_mem.dim(), "he_score")?;
    let mut s = lse_raw(cfg.beta(), dots(class_mem, query).view());
    if shifted {
        s = s - cast::<F>(class_mem.len() as f64).ln() / cfg.beta();
    }
    Ok(s)
}

/// Simplified Hopfield-energy score: the dot product with the class mean.
pub fn she_score<F: Scalar>(query: ArrayView1<'_, F>, class_mean: ArrayView1<'_, F>) -> Result<F> {
    check_dims(query.len(), class_mean.len(), "she_score")?;
    Ok(query
        .iter()
        .zip(class_mean.iter())
        .fold(F::zero(), |acc, (&q, &m)| acc + q * m))
}

/// HE extended with an AUX memory term: `he_score - lse(beta, O^T xi)`.
///
/// With the full ID memory as the class memory this reduces to the
/// two-memory OOD score.
pub fn he_aux_score<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    class_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_dims(query.len(), class_mem.dim(), "he_aux_score")?;
    check_dims(query.len(), aux_mem.dim(), "he_aux_score")?;
    Ok(he_score(cfg, query, class_mem, false)? - lse_raw(cfg.beta(), dots(aux_mem, query).view()))
}

/// Both sides of the RBF-network identity.
#[derive(Debug, Clone, Copy)]
pub struct RbfCheck<F: Scalar = f64> {
    /// `-ln(phi(xi))/beta` for the softmax-weighted RBF network.
    pub lhs: F,
    /// `-lse(beta, M^T xi) + 1/2 xi^T xi + lse(beta, a)`.
    pub rhs: F,
    pub diff: F,
}

/// Evaluates an RBF network with softmax-normalized weights
/// `w = sm(beta a)`, `a_i = 1/2 mu_i^T mu_i`, and its energy form; the two
/// sides agree identically.
pub fn rbf_energy_check<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    centers: &PatternMemory<F>,
    query: ArrayView1<'_, F>,
) -> Result<RbfCheck<F>> {
    check_dims(query.len(), centers.dim(), "rbf_energy_check")?;
    let beta = cfg.beta();
    let half = cast::<F>(0.5);

    let a: Array1<F> = Array1::from_iter(
        (0..centers.len()).map(|i| half * sq_norm(centers.column(i))),
    );
    let log_weights: Array1<F> =
        a.mapv(|ai| beta * ai) - Array1::from_elem(a.len(), beta * lse_raw(beta, a.view()));
    // phi(xi) = sum_i w_i exp(-beta/2 ||xi - mu_i||^2), evaluated in log space
    let dists = neg_half_sq_dists(centers, query);
    let log_terms: Array1<F> = Array1::from_iter(
        dists
            .iter()
            .zip(log_weights.iter())
            .map(|(&v, &lw)| beta * v + lw),
    );
    let lhs = -lse_raw(F::one(), log_terms.view()) / beta;

    let rhs = -lse_raw(beta, dots(centers, query).view()) + half * sq_norm(query)
        + lse_raw(beta, a.view());
    Ok(RbfCheck {
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
    })
}

/// Dual representation of a two-class RBF SVM on unit-norm patterns.
#[derive(Debug, Clone)]
pub struct SvmDual<F: Scalar = f64> {
    alphas: Array1<F>,
    targets: Vec<i8>,
    patterns: PatternMemory<F>,
}

impl<F: Scalar> SvmDual<F> {
    /// Validates the dual: nonnegative multipliers, targets in {-1, +1}
    /// with at least one strictly positive multiplier per class, and
    /// unit-norm patterns.
    pub fn new(alphas: Array1<F>, targets: Vec<i8>, patterns: PatternMemory<F>) -> Result<Self> {
        if alphas.len() != targets.len() || alphas.len() != patterns.len() {
            return Err(HbError::DimensionMismatch {
                context: "svm dual",
                left: alphas.len(),
                right: patterns.len(),
            });
        }
        if let Some(i) = alphas.iter().position(|a| !(a.is_finite() && *a >= F::zero())) {
            return Err(HbError::InvalidParameter {
                name: "alphas",
                reason: format!("multiplier {i} must be finite and nonnegative"),
            });
        }
        if targets.iter().any(|t| *t != 1 && *t != -1) {
            return Err(HbError::InvalidParameter {
                name: "targets",
                reason: "targets must be +1 or -1".into(),
            });
        }
        for side in [1i8, -1i8] {
            if !targets
                .iter()
                .zip(alphas.iter())
                .any(|(&t, &a)| t == side && a > F::zero())
            {
                return Err(HbError::InvalidParameter {
                    name: "alphas",
                    reason: format!("no strictly positive multiplier with target {side}"),
                });
            }
        }
        if !patterns.is_normalized() {
            for i in 0..patterns.len() {
                if !is_unit(patterns.column(i)) {
                    return Err(HbError::NotNormalized {
                        what: "svm support vectors",
                        index: i,
                        norm: crate::memory::column_norm(patterns.column(i))
                            .to_f64()
                            .unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(Self {
            alphas,
            targets,
            patterns,
        })
    }

    pub fn alphas(&self) -> &Array1<F> {
        &self.alphas
    }

    pub fn targets(&self) -> &[i8] {
        &self.targets
    }

    pub fn patterns(&self) -> &PatternMemory<F> {
        &self.patterns
    }
}

/// The SVM log score evaluated two ways.
#[derive(Debug, Clone, Copy)]
pub struct SvmCheck<F: Scalar = f64> {
    /// `ln(sum_ID alpha_i k(x_i, xi))/beta - ln(sum_AUX alpha_j k(o_j, xi))/beta`
    /// with the RBF kernel, evaluated directly.
    pub direct: F,
    /// The same score through augmented Hopfield memories (an extra row
    /// `ln(alpha_i)/beta` on the patterns, an extra 1 on the query).
    pub hopfield: F,
    pub diff: F,
}

/// Verifies that the RBF-SVM log-ratio score equals a difference of two lse
/// terms over alpha-augmented memories. Support vectors with zero
/// multiplier are dropped before logs are taken (they contribute nothing to
/// either side).
pub fn svm_score_equiv<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    dual: &SvmDual<F>,
    query: ArrayView1<'_, F>,
) -> Result<SvmCheck<F>> {
    check_dims(query.len(), dual.patterns().dim(), "svm_score_equiv")?;
    let beta = cfg.beta();

    let side_score = |side: i8| -> Result<(F, F)> {
        let indices: Vec<usize> = dual
            .targets()
            .iter()
            .enumerate()
            .filter(|(i, &t)| t == side && dual.alphas()[*i] > F::zero())
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            return Err(HbError::InvalidParameter {
                name: "alphas",
                reason: format!("no strictly positive multiplier with target {side}"),
            });
        }
        // direct: ln(sum alpha_i exp(-beta/2 ||xi - z_i||^2)) / beta
        let mem = dual.patterns().select(&indices)?;
        let dists = neg_half_sq_dists(&mem, query);
        let log_terms: Array1<F> = Array1::from_iter(
            indices
                .iter()
                .zip(dists.iter())
                .map(|(&i, &v)| beta * v + dual.alphas()[i].ln()),
        );
        let direct = lse_raw(F::one(), log_terms.view()) / beta;
        // hopfield: lse over the alpha-augmented memory and query
        let aug: Array1<F> = Array1::from_iter(
            indices
                .iter()
                .enumerate()
                .map(|(k, &i)| mem_dot(&mem, k, query) + dual.alphas()[i].ln() / beta),
        );
        let hopfield = lse_raw(beta, aug.view());
        Ok((direct, hopfield))
    };

    let (direct_id, hopfield_id) = side_score(1)?;
    let (direct_aux, hopfield_aux) = side_score(-1)?;
    // the -1/2 xi^T xi - 1/2 terms of the direct form cancel in the difference
    let half = cast::<F>(0.5);
    let correction = half * sq_norm(query) + half;
    let direct = (direct_id - correction) - (direct_aux - correction);
    let hopfield = hopfield_id - hopfield_aux;
    Ok(SvmCheck {
        direct,
        hopfield,
        diff: (direct - hopfield).abs(),
    })
}

fn mem_dot<F: Scalar>(mem: &PatternMemory<F>, col: usize, query: ArrayView1<'_, F>) -> F {
    mem.column(col)
        .iter()
        .zip(query.iter())
        .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
}

fn check_dims(left: usize, right: usize, context: &'static str) -> Result<()> {
    if left != right {
        return Err(HbError::DimensionMismatch {
            context,
            left,
            right,
        });
    }
    Ok(())
}
