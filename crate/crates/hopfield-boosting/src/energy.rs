//! Log-sum-exp kernels, modern Hopfield energies, the boundary energy, and
//! the OOD score.
//!
//! Everything here is a pure function of immutable inputs. All reductions
//! over patterns run in a fixed left-to-right order, so results are
//! bit-reproducible for a given build; batch operations may parallelize over
//! query columns without changing any per-column result.

use crate::config::HopfieldConfig;
use crate::error::{HbError, Result};
use crate::memory::{is_unit, PatternMemory, QueryBatch};
use crate::scalar::{cast, Scalar};
use crate::threads;
use ndarray::{Array1, ArrayView1};

/// Outcome of the threshold decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Id,
    Ood,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decision::Id => write!(f, "ID"),
            Decision::Ood => write!(f, "OOD"),
        }
    }
}

/// A vector of boundary energies, one per query column.
///
/// Every entry satisfies the boundary-energy upper bound
/// `-2/beta * ln 2` (up to 1e-9 rounding slack).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector<F: Scalar = f64> {
    values: Array1<F>,
}

impl<F: Scalar> EnergyVector<F> {
    pub(crate) fn new(values: Array1<F>, cfg: &HopfieldConfig<F>) -> Result<Self> {
        let bound = cast::<F>(-2.0) / cfg.beta() * cast::<F>(std::f64::consts::LN_2)
            + cast::<F>(1e-9);
        if let Some(index) = values.iter().position(|v| !(*v <= bound)) {
            return Err(HbError::NonFinite {
                what: "boundary energy above its upper bound",
                index,
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array1<F> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Array1<F> {
        self.values
    }
}

/// Log-sum-exp with inverse temperature: `beta^-1 * ln sum_i exp(beta z_i)`.
///
/// Computed with max-subtraction, so no intermediate overflows for any
/// finite input; the result always lies in `[max(z), max(z) + ln(n)/beta]`.
pub fn lse<F: Scalar>(cfg: &HopfieldConfig<F>, z: ArrayView1<'_, F>) -> Result<F> {
    validate_vector(z, "lse input")?;
    Ok(lse_raw(cfg.beta(), z))
}

/// Softmax with inverse temperature: `exp(beta z_i - beta lse(beta, z))`.
pub fn softmax<F: Scalar>(cfg: &HopfieldConfig<F>, z: ArrayView1<'_, F>) -> Result<Array1<F>> {
    validate_vector(z, "softmax input")?;
    Ok(softmax_raw(cfg.beta(), z))
}

/// Modern Hopfield energy `-lse(beta, X^T xi) + 1/2 xi^T xi`, plus the
/// constant `ln(N)/beta + M^2/2` when `include_constant` is set (M is the
/// largest pattern norm).
pub fn mhe<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    memory: &PatternMemory<F>,
    include_constant: bool,
) -> Result<F> {
    check_query(cfg, query, memory, "mhe")?;
    check_memory(cfg, memory, "mhe memory")?;
    let half = cast::<F>(0.5);
    let mut e = -lse_raw(cfg.beta(), dots(memory, query).view()) + half * sq_norm(query);
    if include_constant {
        let n = cast::<F>(memory.len() as f64);
        let m = memory.max_norm();
        e = e + n.ln() / cfg.beta() + half * m * m;
    }
    Ok(e)
}

/// Boundary energy
/// `-2 lse(beta, (X||O)^T xi) + lse(beta, X^T xi) + lse(beta, O^T xi)`.
///
/// Maximal (`-2 ln(2)/beta`) exactly on the induced decision boundary where
/// the two per-memory lse terms tie.
pub fn boundary_energy<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let zx = dots(id_mem, query);
    let zo = dots(aux_mem, query);
    let joint = concat(&zx, &zo);
    Ok(-cast::<F>(2.0) * lse_raw(cfg.beta(), joint.view())
        + lse_raw(cfg.beta(), zx.view())
        + lse_raw(cfg.beta(), zo.view()))
}

/// Log-cosh form of the boundary energy:
/// `-2/beta * ln cosh(beta/2 * (lse_X - lse_O)) - 2/beta * ln 2`.
///
/// Algebraically identical to [`boundary_energy`]; `ln cosh` is evaluated as
/// `|a| + ln(1 + exp(-2|a|)) - ln 2` so large lse gaps cannot overflow.
pub fn boundary_energy_logcosh<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let lse_x = lse_raw(cfg.beta(), dots(id_mem, query).view());
    let lse_o = lse_raw(cfg.beta(), dots(aux_mem, query).view());
    Ok(logcosh_energy(cfg.beta(), lse_x - lse_o))
}

pub(crate) fn logcosh_energy<F: Scalar>(beta: F, lse_gap: F) -> F {
    let two = cast::<F>(2.0);
    let ln2 = cast::<F>(std::f64::consts::LN_2);
    let a = beta / two * lse_gap;
    let log_cosh = a.abs() + (-two * a.abs()).exp().ln_1p() - ln2;
    -two / beta * log_cosh - two / beta * ln2
}

/// Boundary energies of every query column.
pub fn boundary_energy_batch<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    queries: &QueryBatch<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<EnergyVector<F>> {
    let values = threads::map_indexed(queries.len(), |i| {
        boundary_energy(cfg, queries.column(i), id_mem, aux_mem)
    })?;
    EnergyVector::new(Array1::from_vec(values), cfg)
}

/// OOD score `lse(beta, X^T xi) - lse(beta, O^T xi)`; higher means more
/// in-distribution.
pub fn score<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    Ok(lse_raw(cfg.beta(), dots(id_mem, query).view())
        - lse_raw(cfg.beta(), dots(aux_mem, query).view()))
}

/// Scores of every query column.
pub fn score_batch<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    queries: &QueryBatch<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<Array1<F>> {
    let values = threads::map_indexed(queries.len(), |i| {
        score(cfg, queries.column(i), id_mem, aux_mem)
    })?;
    Ok(Array1::from_vec(values))
}

/// Class posteriors `(p_id, p_aux)` of the two-memory model:
/// `p_aux = sigmoid(beta (lse_O - lse_X))` and `p_id = 1 - p_aux`.
///
/// The smaller posterior is always evaluated directly (full relative
/// precision even deep in the sigmoid tails) and the larger one as its
/// complement; the pair sums to 1 exactly.
pub fn posterior_pair<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<(F, F)> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let lse_x = lse_raw(cfg.beta(), dots(id_mem, query).view());
    let lse_o = lse_raw(cfg.beta(), dots(aux_mem, query).view());
    let t = cfg.beta() * (lse_o - lse_x);
    let small = sigmoid(-t.abs());
    Ok(if t >= F::zero() {
        (small, F::one() - small)
    } else {
        (F::one() - small, small)
    })
}

/// Threshold decision: ID iff `score >= gamma`.
pub fn decide<F: Scalar>(score: F, gamma: F) -> Decision {
    if score >= gamma {
        Decision::Id
    } else {
        Decision::Ood
    }
}

/// Log-density of the equal-weight Gaussian mixture
/// `1/N sum_i N(xi; c_i, beta^-1 I)`.
///
/// Evaluated through exact Gaussian log-densities combined with a stable
/// log-sum-exp; serves as the brute-force oracle for [`mhe`].
pub fn gaussian_mixture_logdensity<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    centers: &PatternMemory<F>,
) -> Result<F> {
    check_dims(query.len(), centers.dim(), "gaussian mixture")?;
    let beta = cfg.beta();
    let d = cast::<F>(query.len() as f64);
    let n = cast::<F>(centers.len() as f64);
    let two_pi = cast::<F>(2.0 * std::f64::consts::PI);
    let half = cast::<F>(0.5);
    let v = neg_half_sq_dists(centers, query);
    // ln sum_i exp(beta v_i) = beta * lse(beta, v)
    Ok(-half * d * (two_pi / beta).ln() + beta * lse_raw(beta, v.view()) - n.ln())
}

/// Distance-based log-sum-exp
/// `beta^-1 * ln sum_i exp(-beta/2 ||xi - x_i||^2)`.
///
/// For unit-norm patterns and query this equals
/// `lse(beta, X^T xi) - 1/2 xi^T xi - 1/2`.
pub fn euclidean_lse<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    memory: &PatternMemory<F>,
) -> Result<F> {
    check_dims(query.len(), memory.dim(), "euclidean lse")?;
    Ok(lse_raw(cfg.beta(), neg_half_sq_dists(memory, query).view()))
}

/// Boundary energy with every lse term replaced by its distance-based
/// counterpart; used by the planar toy examples.
pub fn euclidean_boundary_energy<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_dims(query.len(), id_mem.dim(), "euclidean boundary energy")?;
    check_dims(query.len(), aux_mem.dim(), "euclidean boundary energy")?;
    let vx = neg_half_sq_dists(id_mem, query);
    let vo = neg_half_sq_dists(aux_mem, query);
    let joint = concat(&vx, &vo);
    Ok(-cast::<F>(2.0) * lse_raw(cfg.beta(), joint.view())
        + lse_raw(cfg.beta(), vx.view())
        + lse_raw(cfg.beta(), vo.view()))
}

/// Distance-based OOD score.
pub fn euclidean_score<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<F> {
    check_dims(query.len(), id_mem.dim(), "euclidean score")?;
    check_dims(query.len(), aux_mem.dim(), "euclidean score")?;
    Ok(euclidean_lse(cfg, query, id_mem)? - euclidean_lse(cfg, query, aux_mem)?)
}

// ---------------------------------------------------------------------------
// internal helpers
// ---------------------------------------------------------------------------

pub(crate) fn lse_raw<F: Scalar>(beta: F, z: ArrayView1<'_, F>) -> F {
    let m = z.fold(F::neg_infinity(), |acc, &v| acc.max(v));
    let sum = z.fold(F::zero(), |acc, &v| acc + (beta * (v - m)).exp());
    m + sum.ln() / beta
}

pub(crate) fn softmax_raw<F: Scalar>(beta: F, z: ArrayView1<'_, F>) -> Array1<F> {
    let m = z.fold(F::neg_infinity(), |acc, &v| acc.max(v));
    let mut e: Array1<F> = z.mapv(|v| (beta * (v - m)).exp());
    let sum = e.fold(F::zero(), |acc, &v| acc + v);
    e.mapv_inplace(|v| v / sum);
    e
}

pub(crate) fn sigmoid<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// `X^T xi` for a memory and a query.
pub(crate) fn dots<F: Scalar>(memory: &PatternMemory<F>, query: ArrayView1<'_, F>) -> Array1<F> {
    memory.view().t().dot(&query)
}

/// `-1/2 ||xi - x_i||^2` per stored pattern.
pub(crate) fn neg_half_sq_dists<F: Scalar>(
    memory: &PatternMemory<F>,
    query: ArrayView1<'_, F>,
) -> Array1<F> {
    let half = cast::<F>(0.5);
    Array1::from_iter((0..memory.len()).map(|i| {
        let col = memory.column(i);
        let d2 = col
            .iter()
            .zip(query.iter())
            .fold(F::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        -half * d2
    }))
}

pub(crate) fn concat<F: Scalar>(a: &Array1<F>, b: &Array1<F>) -> Array1<F> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend(a.iter().copied());
    v.extend(b.iter().copied());
    Array1::from_vec(v)
}

pub(crate) fn sq_norm<F: Scalar>(v: ArrayView1<'_, F>) -> F {
    v.fold(F::zero(), |acc, &x| acc + x * x)
}

fn validate_vector<F: Scalar>(z: ArrayView1<'_, F>, what: &'static str) -> Result<()> {
    if z.is_empty() {
        return Err(HbError::EmptyInput(what));
    }
    if let Some(index) = z.iter().position(|v| !v.is_finite()) {
        return Err(HbError::NonFinite { what, index });
    }
    Ok(())
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

pub(crate) fn check_memory<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    memory: &PatternMemory<F>,
    what: &'static str,
) -> Result<()> {
    if cfg.normalize_inputs() && !memory.is_normalized() {
        return Err(HbError::NotNormalized {
            what,
            index: 0,
            norm: memory.max_norm().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

pub(crate) fn check_query<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    memory: &PatternMemory<F>,
    context: &'static str,
) -> Result<()> {
    check_dims(query.len(), memory.dim(), context)?;
    if let Some(index) = query.iter().position(|v| !v.is_finite()) {
        return Err(HbError::NonFinite {
            what: "query",
            index,
        });
    }
    if cfg.normalize_inputs() && !is_unit(query) {
        return Err(HbError::NotNormalized {
            what: "query",
            index: 0,
            norm: crate::memory::column_norm(query).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

pub(crate) fn check_boundary_inputs<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<()> {
    check_query(cfg, query, id_mem, "boundary energy")?;
    check_dims(query.len(), aux_mem.dim(), "boundary energy")?;
    check_memory(cfg, id_mem, "ID memory")?;
    check_memory(cfg, aux_mem, "AUX memory")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::normalize_columns;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn cfg(beta: f64) -> HopfieldConfig<f64> {
        HopfieldConfig::new(beta, false).unwrap()
    }

    fn cfg_norm(beta: f64) -> HopfieldConfig<f64> {
        HopfieldConfig::new(beta, true).unwrap()
    }

    fn random_unit_memory(rng: &mut ChaCha12Rng, d: usize, n: usize) -> PatternMemory<f64> {
        let raw = Array2::from_shape_fn((d, n), |_| rng.gen_range(-1.0..1.0));
        normalize_columns(&raw).unwrap()
    }

    fn random_unit_query(rng: &mut ChaCha12Rng, d: usize) -> Array1<f64> {
        let raw = Array2::from_shape_fn((d, 1), |_| rng.gen_range(-1.0..1.0));
        normalize_columns(&raw).unwrap().column(0).to_owned()
    }

    #[test]
    fn lse_single_element_is_identity() {
        for &c in &[-3.25, 0.0, 11.0] {
            let v = lse(&cfg(7.0), array![c].view()).unwrap();
            assert_abs_diff_eq!(v, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn lse_two_zeros_is_ln_two() {
        let v = lse(&cfg(1.0), array![0.0, 0.0].view()).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn lse_matches_direct_summation() {
        let z: Array1<f64> = array![1.0, 2.0, 3.0];
        let beta: f64 = 2.0;
        let direct = (z.mapv(|v| (beta * v).exp()).sum()).ln() / beta;
        let v = lse(&cfg(beta), z.view()).unwrap();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-12);
    }

    #[test]
    fn lse_errors() {
        let empty: Array1<f64> = array![];
        assert!(matches!(
            lse(&cfg(1.0), empty.view()),
            Err(HbError::EmptyInput(_))
        ));
        assert!(matches!(
            lse(&cfg(1.0), array![1.0, f64::NAN].view()),
            Err(HbError::NonFinite { .. })
        ));
    }

    #[test]
    fn lse_bounds_and_softmax_limit() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..20);
            let z = Array1::from_shape_fn(n, |_| rng.gen_range(-5.0..5.0));
            let beta = *[0.5, 4.0, 1e4].iter().nth(rng.gen_range(0..3)).unwrap();
            let v = lse(&cfg(beta), z.view()).unwrap();
            let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            assert!(v >= m - 1e-12);
            assert!(v <= m + (n as f64).ln() / beta + 1e-12);
            if beta == 1e4 {
                assert!(v - m <= (n as f64).ln() / 1e4 + 1e-12);
            }
        }
    }

    #[test]
    fn softmax_constant_input_is_uniform() {
        let w = softmax(&cfg(3.0), array![2.5, 2.5, 2.5].view()).unwrap();
        for &x in w.iter() {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn softmax_analytic_quarter_three_quarters() {
        let w = softmax(&cfg(1.0), array![0.0, 3.0f64.ln()].view()).unwrap();
        assert_abs_diff_eq!(w[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.75, epsilon = 1e-14);
    }

    #[test]
    fn softmax_matches_direct_normalization() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..16);
            let z = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
            let beta = 1.7;
            let w = softmax(&cfg(beta), z.view()).unwrap();
            let e = z.mapv(|v| (beta * v).exp());
            let total = e.sum();
            for (a, b) in w.iter().zip(e.iter()) {
                assert_abs_diff_eq!(*a, b / total, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mhe_single_pattern_examples() {
        let mem = PatternMemory::new(array![[1.0], [0.0]]).unwrap();
        let c = cfg_norm(3.0);
        // query equal to the stored unit pattern
        let e = mhe(&c, array![1.0, 0.0].view(), &mem, true).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
        // orthogonal unit query
        let e = mhe(&c, array![0.0, 1.0].view(), &mem, true).unwrap();
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mhe_dimension_mismatch() {
        let mem = PatternMemory::new(array![[1.0], [0.0]]).unwrap();
        assert!(matches!(
            mhe(&cfg(1.0), array![1.0, 0.0, 0.0].view(), &mem, false),
            Err(HbError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn boundary_energy_identical_memories_attains_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for &beta in &[0.5, 4.0, 32.0] {
            let mem = random_unit_memory(&mut rng, 4, 6);
            let q = random_unit_query(&mut rng, 4);
            let e = boundary_energy(&cfg_norm(beta), q.view(), &mem, &mem).unwrap();
            assert_abs_diff_eq!(e, -2.0 / beta * std::f64::consts::LN_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_energy_forms_agree() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let d = rng.gen_range(2..8);
            let nx = rng.gen_range(1..10);
            let no = rng.gen_range(1..10);
            let x = random_unit_memory(&mut rng, d, nx);
            let o = random_unit_memory(&mut rng, d, no);
            let q = random_unit_query(&mut rng, d);
            let c = cfg_norm(*[0.5, 4.0, 32.0].iter().nth(rng.gen_range(0..3)).unwrap());
            let direct = boundary_energy(&c, q.view(), &x, &o).unwrap();
            let cosh_form = boundary_energy_logcosh(&c, q.view(), &x, &o).unwrap();
            assert_abs_diff_eq!(direct, cosh_form, epsilon = 1e-9);
            assert!(direct <= -2.0 / c.beta() * std::f64::consts::LN_2 + 1e-9);
        }
    }

    #[test]
    fn logcosh_asymptote_for_large_gap() {
        // Memories pulling the two lse terms far apart: E_b -> -|lse gap|.
        let beta = 32.0;
        let x = PatternMemory::new(array![[1.0], [0.0]]).unwrap();
        let o = PatternMemory::new(array![[-1.0], [0.0]]).unwrap();
        let q = array![1.0, 0.0];
        let c = cfg_norm(beta);
        let lse_x = lse(&c, dots(&x, q.view()).view()).unwrap();
        let lse_o = lse(&c, dots(&o, q.view()).view()).unwrap();
        let gap = lse_x - lse_o;
        assert!(gap.abs() >= 40.0 / beta);
        let e = boundary_energy_logcosh(&c, q.view(), &x, &o).unwrap();
        assert_abs_diff_eq!(e, -gap.abs(), epsilon = 1e-9);
    }

    #[test]
    fn unnormalized_inputs_rejected_when_demanded() {
        let raw = PatternMemory::new(array![[2.0], [0.0]]).unwrap();
        let unit = PatternMemory::new(array![[1.0], [0.0]]).unwrap();
        let q = array![1.0, 0.0];
        assert!(matches!(
            boundary_energy(&cfg_norm(2.0), q.view(), &raw, &unit),
            Err(HbError::NotNormalized { .. })
        ));
        // fine when normalization is not demanded
        assert!(boundary_energy(&cfg(2.0), q.view(), &raw, &unit).is_ok());
    }

    #[test]
    fn batch_matches_scalar_and_is_permutation_equivariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let x = random_unit_memory(&mut rng, 3, 5);
        let o = random_unit_memory(&mut rng, 3, 4);
        let c = cfg_norm(4.0);
        let qdata = normalize_columns(&Array2::from_shape_fn((3, 6), |_| {
            rng.gen_range(-1.0..1.0)
        }))
        .unwrap();
        let queries = QueryBatch::new(qdata.data().clone()).unwrap();
        let batch = boundary_energy_batch(&c, &queries, &x, &o).unwrap();
        for i in 0..queries.len() {
            let single = boundary_energy(&c, queries.column(i), &x, &o).unwrap();
            assert_abs_diff_eq!(batch.values()[i], single, epsilon = 0.0);
        }
        // permuting query columns permutes the output
        let perm = [5usize, 3, 0, 1, 4, 2];
        let mut pdata = Array2::zeros((3, 6));
        for (k, &i) in perm.iter().enumerate() {
            pdata.column_mut(k).assign(&queries.column(i));
        }
        let permuted = boundary_energy_batch(&c, &QueryBatch::new(pdata).unwrap(), &x, &o).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(permuted.values()[k], batch.values()[i]);
        }
    }

    #[test]
    fn score_zero_for_identical_memories() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mem = random_unit_memory(&mut rng, 4, 7);
        let q = random_unit_query(&mut rng, 4);
        let s = score(&cfg_norm(4.0), q.view(), &mem, &mem).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn score_sign_matches_posterior_half() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..100 {
            let x = random_unit_memory(&mut rng, 3, 5);
            let o = random_unit_memory(&mut rng, 3, 5);
            let q = random_unit_query(&mut rng, 3);
            let c = cfg_norm(4.0);
            let s = score(&c, q.view(), &x, &o).unwrap();
            let (p_id, _) = posterior_pair(&c, q.view(), &x, &o).unwrap();
            assert_eq!(s >= 0.0, p_id >= 0.5);
            assert_eq!(decide(s, 0.0), if p_id >= 0.5 { Decision::Id } else { Decision::Ood });
        }
    }

    #[test]
    fn score_matches_two_lse_calls() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let x = random_unit_memory(&mut rng, 5, 6);
        let o = random_unit_memory(&mut rng, 5, 9);
        let q = random_unit_query(&mut rng, 5);
        let c = cfg_norm(2.5);
        let s = score(&c, q.view(), &x, &o).unwrap();
        let a = lse(&c, dots(&x, q.view()).view()).unwrap();
        let b = lse(&c, dots(&o, q.view()).view()).unwrap();
        assert_abs_diff_eq!(s, a - b, epsilon = 1e-14);
    }

    #[test]
    fn posteriors_sum_to_one_exactly_and_multiply_to_energy() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for _ in 0..200 {
            let d = rng.gen_range(2..6);
            let n = rng.gen_range(1..8);
            let x = random_unit_memory(&mut rng, d, n);
            let o = random_unit_memory(&mut rng, d, n);
            let q = random_unit_query(&mut rng, d);
            let c = cfg_norm(4.0);
            let (p_id, p_aux) = posterior_pair(&c, q.view(), &x, &o).unwrap();
            assert_eq!(p_id + p_aux, 1.0);
            assert!(p_id > 0.0 && p_id < 1.0);
            let e = boundary_energy(&c, q.view(), &x, &o).unwrap();
            assert_abs_diff_eq!((c.beta() * e).exp(), p_id * p_aux, epsilon = 1e-10);
        }
    }

    #[test]
    fn posterior_half_for_identical_memories() {
        let mem = PatternMemory::new(array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (p_id, p_aux) =
            posterior_pair(&cfg_norm(4.0), array![1.0, 0.0].view(), &mem, &mem).unwrap();
        assert_abs_diff_eq!(p_id, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p_aux, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn decide_boundary_inclusive() {
        assert_eq!(decide(0.0, 0.0), Decision::Id);
        assert_eq!(decide(-1.0, 0.0), Decision::Ood);
    }

    #[test]
    fn gaussian_mixture_at_mode_one_dimension() {
        let centers = PatternMemory::new(array![[0.7]]).unwrap();
        let v = gaussian_mixture_logdensity(&cfg(1.0), array![0.7].view(), &centers).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_mixture_collapses_for_duplicate_centers() {
        let one = PatternMemory::new(array![[0.3], [0.4]]).unwrap();
        let two = PatternMemory::new(array![[0.3, 0.3], [0.4, 0.4]]).unwrap();
        let q = array![0.1, -0.2];
        let a = gaussian_mixture_logdensity(&cfg(2.0), q.view(), &one).unwrap();
        let b = gaussian_mixture_logdensity(&cfg(2.0), q.view(), &two).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn mhe_equals_mixture_oracle_up_to_constant() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let d = 4;
        let mem = random_unit_memory(&mut rng, d, 6);
        let c = cfg_norm(4.0);
        let mut offsets = Vec::new();
        for _ in 0..10 {
            let q = random_unit_query(&mut rng, d);
            let e = mhe(&c, q.view(), &mem, true).unwrap();
            let ld = gaussian_mixture_logdensity(&c, q.view(), &mem).unwrap();
            offsets.push(e - (-ld / c.beta()));
        }
        let spread = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-9, "offset spread {spread} too large");
    }

    #[test]
    fn euclidean_lse_zero_at_stored_pattern() {
        let mem = PatternMemory::new(array![[0.3], [-0.8]]).unwrap();
        let v = euclidean_lse(&cfg(5.0), array![0.3, -0.8].view(), &mem).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_lse_dot_product_form_on_unit_data() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let mem = random_unit_memory(&mut rng, 4, 5);
        let q = random_unit_query(&mut rng, 4);
        let c = cfg(3.0);
        let e = euclidean_lse(&c, q.view(), &mem).unwrap();
        let dot_form = lse(&c, dots(&mem, q.view()).view()).unwrap() - 0.5 * sq_norm(q.view()) - 0.5;
        assert_abs_diff_eq!(e, dot_form, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_lse_matches_direct_summation() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        let mem = PatternMemory::new(Array2::from_shape_fn((3, 6), |_| rng.gen_range(-2.0..2.0)))
            .unwrap();
        let q = Array1::from_shape_fn(3, |_| rng.gen_range(-2.0..2.0));
        let beta: f64 = 1.5;
        let direct = (0..mem.len())
            .map(|i| {
                let diff = &mem.column(i).to_owned() - &q;
                (-beta / 2.0 * diff.mapv(|v| v * v).sum()).exp()
            })
            .sum::<f64>()
            .ln()
            / beta;
        let v = euclidean_lse(&cfg(beta), q.view(), &mem).unwrap();
        assert_abs_diff_eq!(v, direct, epsilon = 1e-12);
    }

    #[cfg(test)]
    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Simplex validity of the softmax for inputs spanning extreme
            // magnitudes.
            #[test]
            fn softmax_is_simplex(
                values in proptest::collection::vec(-1e4f64..1e4, 1..24),
                beta in prop_oneof![Just(0.5), Just(4.0), Just(32.0), Just(1e4)],
            ) {
                let z = Array1::from_vec(values);
                let w = softmax(&cfg(beta), z.view()).unwrap();
                prop_assert!(w.iter().all(|&x| x >= 0.0));
                prop_assert!((w.sum() - 1.0).abs() <= 1e-12);
            }

            #[test]
            fn lse_within_max_bounds(
                values in proptest::collection::vec(-1e4f64..1e4, 1..24),
                beta in prop_oneof![Just(0.5), Just(4.0), Just(32.0)],
            ) {
                let z = Array1::from_vec(values);
                let v = lse(&cfg(beta), z.view()).unwrap();
                let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                prop_assert!(v >= m - 1e-9);
                prop_assert!(v <= m + (z.len() as f64).ln() / beta + 1e-9);
            }
        }
    }
}
