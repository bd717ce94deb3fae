//! Analytical derivatives of the Hopfield and boundary energies, the
//! one-step Hopfield update, and a central finite-difference oracle.

use crate::config::HopfieldConfig;
use crate::energy::{
    check_boundary_inputs, check_memory, check_query, concat, dots, lse_raw, neg_half_sq_dists,
    softmax_raw,
};
use crate::error::{HbError, Result};
use crate::memory::PatternMemory;
use crate::scalar::{cast, Scalar};
use ndarray::{Array1, Array2, ArrayView1};

/// Gradient of the modern Hopfield energy w.r.t. the query:
/// `-X sm(beta X^T xi) + xi`.
pub fn grad_query_mhe<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    memory: &PatternMemory<F>,
) -> Result<Array1<F>> {
    check_query(cfg, query, memory, "grad_query_mhe")?;
    check_memory(cfg, memory, "grad_query_mhe memory")?;
    let update = retrieve(cfg.beta(), query, memory);
    Ok(&query.to_owned() - &update)
}

/// One-step Hopfield update `X sm(beta X^T xi)`, i.e. gradient descent on
/// the energy with step size 1.
pub fn hopfield_update<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    memory: &PatternMemory<F>,
) -> Result<Array1<F>> {
    check_query(cfg, query, memory, "hopfield_update")?;
    check_memory(cfg, memory, "hopfield_update memory")?;
    Ok(retrieve(cfg.beta(), query, memory))
}

/// Gradient of the boundary energy w.r.t. the query, direct form:
/// `-2 (X||O) sm(beta (X||O)^T xi) + X sm(beta X^T xi) + O sm(beta O^T xi)`.
pub fn grad_query_boundary<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<Array1<F>> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let beta = cfg.beta();
    let zx = dots(id_mem, query);
    let zo = dots(aux_mem, query);
    let sm_joint = softmax_raw(beta, concat(&zx, &zo).view());
    let n = id_mem.len();
    let joint_part = id_mem.view().dot(&sm_joint.slice(ndarray::s![..n]))
        + aux_mem.view().dot(&sm_joint.slice(ndarray::s![n..]));
    let part_x = id_mem.view().dot(&softmax_raw(beta, zx.view()));
    let part_o = aux_mem.view().dot(&softmax_raw(beta, zo.view()));
    Ok(joint_part * cast::<F>(-2.0) + &part_x + &part_o)
}

/// Gradient of the boundary energy w.r.t. the query via the log-cosh form:
/// `-tanh(beta/2 (lse_X - lse_O)) (X sm(beta X^T xi) - O sm(beta O^T xi))`.
pub fn grad_query_boundary_tanh<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<Array1<F>> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let beta = cfg.beta();
    let zx = dots(id_mem, query);
    let zo = dots(aux_mem, query);
    let t = (beta / cast::<F>(2.0) * (lse_raw(beta, zx.view()) - lse_raw(beta, zo.view()))).tanh();
    let part_x = id_mem.view().dot(&softmax_raw(beta, zx.view()));
    let part_o = aux_mem.view().dot(&softmax_raw(beta, zo.view()));
    Ok((&part_x - &part_o) * (-t))
}

/// Gradients of the boundary energy w.r.t. both memory matrices.
///
/// The tanh factor is shared:
/// `dX = -tanh(beta/2 (lse_X - lse_O)) xi sm(beta X^T xi)^T` and `dO` is the
/// same expression with the memory roles swapped (so its tanh flips sign).
pub fn grad_memory_boundary<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<(Array2<F>, Array2<F>)> {
    check_boundary_inputs(cfg, query, id_mem, aux_mem)?;
    let beta = cfg.beta();
    let zx = dots(id_mem, query);
    let zo = dots(aux_mem, query);
    let t = (beta / cast::<F>(2.0) * (lse_raw(beta, zx.view()) - lse_raw(beta, zo.view()))).tanh();
    let sm_x = softmax_raw(beta, zx.view());
    let sm_o = softmax_raw(beta, zo.view());
    Ok((outer(query, sm_x.view(), -t), outer(query, sm_o.view(), t)))
}

/// Query gradient of the distance-based boundary energy.
pub fn euclidean_grad_query_boundary<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<Array1<F>> {
    check_euclidean_dims(query, id_mem, aux_mem)?;
    let beta = cfg.beta();
    let vx = neg_half_sq_dists(id_mem, query);
    let vo = neg_half_sq_dists(aux_mem, query);
    let sm_joint = softmax_raw(beta, concat(&vx, &vo).view());
    let n = id_mem.len();
    let joint_part = id_mem.view().dot(&sm_joint.slice(ndarray::s![..n]))
        + aux_mem.view().dot(&sm_joint.slice(ndarray::s![n..]));
    let part_x = id_mem.view().dot(&softmax_raw(beta, vx.view()));
    let part_o = aux_mem.view().dot(&softmax_raw(beta, vo.view()));
    Ok(joint_part * cast::<F>(-2.0) + &part_x + &part_o)
}

/// Memory gradients of the distance-based boundary energy:
/// `d/dx_i = -tanh(beta/2 (L_X - L_O)) sm_i (xi - x_i)` per column, and the
/// sign-flipped counterpart for the AUX memory.
pub fn euclidean_grad_memory_boundary<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<(Array2<F>, Array2<F>)> {
    check_euclidean_dims(query, id_mem, aux_mem)?;
    let beta = cfg.beta();
    let vx = neg_half_sq_dists(id_mem, query);
    let vo = neg_half_sq_dists(aux_mem, query);
    let t = (beta / cast::<F>(2.0) * (lse_raw(beta, vx.view()) - lse_raw(beta, vo.view()))).tanh();
    let sm_x = softmax_raw(beta, vx.view());
    let sm_o = softmax_raw(beta, vo.view());
    let mut dx = Array2::zeros((id_mem.dim(), id_mem.len()));
    for i in 0..id_mem.len() {
        let diff = &query.to_owned() - &id_mem.column(i).to_owned();
        dx.column_mut(i).assign(&(diff * (-t * sm_x[i])));
    }
    let mut do_ = Array2::zeros((aux_mem.dim(), aux_mem.len()));
    for i in 0..aux_mem.len() {
        let diff = &query.to_owned() - &aux_mem.column(i).to_owned();
        do_.column_mut(i).assign(&(diff * (t * sm_o[i])));
    }
    Ok((dx, do_))
}

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / 2h` per
/// coordinate.
pub fn finite_difference<F, Func>(f: Func, point: ArrayView1<'_, F>, h: F) -> Result<Array1<F>>
where
    F: Scalar,
    Func: Fn(ArrayView1<'_, F>) -> Result<F>,
{
    if !(h.is_finite() && h > F::zero()) {
        return Err(HbError::InvalidParameter {
            name: "h",
            reason: format!("finite-difference step must be positive, got {h}"),
        });
    }
    let mut grad = Array1::zeros(point.len());
    let mut x = point.to_owned();
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = f(x.view())?;
        x[i] = orig - h;
        let minus = f(x.view())?;
        x[i] = orig;
        let g = (plus - minus) / (cast::<F>(2.0) * h);
        if !g.is_finite() {
            return Err(HbError::NonFinite {
                what: "finite difference",
                index: i,
            });
        }
        grad[i] = g;
    }
    Ok(grad)
}

/// Comparison of an analytic gradient against its numeric counterpart.
#[derive(Debug, Clone)]
pub struct GradReport<F: Scalar = f64> {
    pub analytic: Array1<F>,
    pub numeric: Array1<F>,
    pub max_rel_err: F,
    pub tol: F,
    pub pass: bool,
}

impl<F: Scalar> GradReport<F> {
    /// Relative error `|a - n| / max(1e-12, |a| + |n|)` with tensor-level
    /// magnitudes: the largest entry deviation over the summed infinity
    /// norms. (A per-entry denominator would amplify the ~1e-11 roundoff
    /// floor of f64 central differences on near-zero entries past any
    /// useful tolerance.) The report passes iff the error is within `tol`.
    pub fn compare(analytic: Array1<F>, numeric: Array1<F>, tol: F) -> Self {
        let floor = cast::<F>(1e-12);
        let inf_norm = |v: &Array1<F>| v.iter().fold(F::zero(), |m, &x| m.max(x.abs()));
        let deviation = analytic
            .iter()
            .zip(numeric.iter())
            .map(|(&a, &n)| (a - n).abs())
            .fold(F::zero(), F::max);
        let max_rel_err = deviation / floor.max(inf_norm(&analytic) + inf_norm(&numeric));
        GradReport {
            analytic,
            numeric,
            max_rel_err,
            tol,
            pass: max_rel_err <= tol,
        }
    }
}

fn retrieve<F: Scalar>(beta: F, query: ArrayView1<'_, F>, memory: &PatternMemory<F>) -> Array1<F> {
    let sm = softmax_raw(beta, dots(memory, query).view());
    memory.view().dot(&sm)
}

fn outer<F: Scalar>(query: ArrayView1<'_, F>, sm: ArrayView1<'_, F>, scale: F) -> Array2<F> {
    let mut out = Array2::zeros((query.len(), sm.len()));
    for (j, &w) in sm.iter().enumerate() {
        let col = query.mapv(|q| scale * q * w);
        out.column_mut(j).assign(&col);
    }
    out
}

fn check_euclidean_dims<F: Scalar>(
    query: ArrayView1<'_, F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<()> {
    if query.len() != id_mem.dim() {
        return Err(HbError::DimensionMismatch {
            context: "euclidean boundary gradient",
            left: query.len(),
            right: id_mem.dim(),
        });
    }
    if query.len() != aux_mem.dim() {
        return Err(HbError::DimensionMismatch {
            context: "euclidean boundary gradient",
            left: query.len(),
            right: aux_mem.dim(),
        });
    }
    Ok(())
}
