//! Boosting-style training at toy scale: boundary-energy weights over the
//! AUX pool, categorical resampling of weak learners, the OOD loss and the
//! composite loss with a linear classification head, a training loop that
//! applies gradients directly to the sampled patterns, and a Monte-Carlo
//! experiment on the benefit of boundary-constrained outlier sampling.

use crate::config::{Geometry, HopfieldConfig, ToyConfig};
use crate::energy::{
    boundary_energy, boundary_energy_batch, euclidean_boundary_energy, lse_raw, softmax,
};
use crate::error::{HbError, Result};
use crate::gradients::{euclidean_grad_memory_boundary, grad_memory_boundary};
use crate::memory::{PatternMemory, QueryBatch};
use crate::scalar::Scalar;
use crate::threads;
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Simplex-constrained resampling weights over the AUX pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights<F: Scalar = f64> {
    weights: Array1<F>,
}

impl<F: Scalar> SampleWeights<F> {
    /// Validates nonnegativity and unit sum (within 1e-9).
    pub fn new(weights: Array1<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(HbError::InvalidWeights("empty weight vector".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(HbError::InvalidWeights(format!(
                "non-finite weight at index {i}"
            )));
        }
        if let Some(i) = weights.iter().position(|w| *w < F::zero()) {
            return Err(HbError::InvalidWeights(format!(
                "negative weight at index {i}"
            )));
        }
        let sum = weights
            .fold(F::zero(), |a, &b| a + b)
            .to_f64()
            .unwrap_or(f64::NAN);
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HbError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(HbError::InvalidWeights("empty weight vector".into()));
        }
        let w = F::one() / crate::scalar::cast::<F>(len as f64);
        Ok(Self {
            weights: Array1::from_elem(len, w),
        })
    }

    pub fn values(&self) -> &Array1<F> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Boosting weight update: `w = sm(beta * E_b(pool; X, O))`.
///
/// Pool points close to the decision boundary (high boundary energy) get
/// proportionally larger weights.
pub fn update_weights<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    pool: &QueryBatch<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<SampleWeights<F>> {
    let energies = boundary_energy_batch(cfg, pool, id_mem, aux_mem)?;
    SampleWeights::new(softmax(cfg, energies.values().view())?)
}

/// Weight update with the distance-based boundary energy (planar scenes).
pub fn euclidean_update_weights<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    pool: &QueryBatch<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
) -> Result<SampleWeights<F>> {
    let values = threads::map_indexed(pool.len(), |i| {
        euclidean_boundary_energy(cfg, pool.column(i), id_mem, aux_mem)
    })?;
    SampleWeights::new(softmax(cfg, Array1::from_vec(values).view())?)
}

/// Draws `n` indices i.i.d. with replacement from the categorical
/// distribution given by the weights; deterministic for a given seed.
pub fn weighted_sample<F: Scalar>(
    weights: &SampleWeights<F>,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(HbError::InvalidParameter {
            name: "n",
            reason: "must draw at least one sample".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok(weighted_sample_with_rng(weights, n, &mut rng))
}

/// Inverse-CDF categorical sampling on the cumulative weight vector.
pub(crate) fn weighted_sample_with_rng<F: Scalar, R: Rng>(
    weights: &SampleWeights<F>,
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0f64;
    for w in weights.values().iter() {
        acc += w.to_f64().unwrap_or(0.0);
        cum.push(acc);
    }
    let total = *cum.last().expect("weights validated nonempty");
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            cum.partition_point(|&c| c <= u).min(cum.len() - 1)
        })
        .collect()
}

/// OOD loss: mean boundary energy over all patterns of the joined batch,
/// each evaluated as a query against the batch memories (self-similarity
/// terms included).
pub fn l_ood<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_batch: &PatternMemory<F>,
    aux_batch: &PatternMemory<F>,
) -> Result<F> {
    mean_boundary_energy(cfg, id_batch, aux_batch, Geometry::Sphere)
}

/// OOD loss with the distance-based boundary energy.
pub fn euclidean_l_ood<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_batch: &PatternMemory<F>,
    aux_batch: &PatternMemory<F>,
) -> Result<F> {
    mean_boundary_energy(cfg, id_batch, aux_batch, Geometry::Euclidean)
}

fn mean_boundary_energy<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_batch: &PatternMemory<F>,
    aux_batch: &PatternMemory<F>,
    geometry: Geometry,
) -> Result<F> {
    let total_n = id_batch.len() + aux_batch.len();
    let energy = |q: ArrayView1<'_, F>| match geometry {
        Geometry::Sphere => boundary_energy(cfg, q, id_batch, aux_batch),
        Geometry::Euclidean => euclidean_boundary_energy(cfg, q, id_batch, aux_batch),
    };
    let mut sum = F::zero();
    for i in 0..id_batch.len() {
        sum = sum + energy(id_batch.column(i))?;
    }
    for i in 0..aux_batch.len() {
        sum = sum + energy(aux_batch.column(i))?;
    }
    Ok(sum / crate::scalar::cast::<F>(total_n as f64))
}

/// Two-class linear classification head on raw pattern coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    /// `K x d` weight matrix.
    pub weights: Array2<f64>,
    /// Per-class bias.
    pub bias: Array1<f64>,
}

impl LinearHead {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: Array2::zeros((classes, dim)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn logits(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weights.dot(&x) + &self.bias
    }
}

/// Multinomial cross-entropy of the head on a batch of patterns.
pub fn cross_entropy(
    head: &LinearHead,
    batch: &PatternMemory<f64>,
    labels: &[usize],
) -> Result<f64> {
    if labels.len() != batch.len() {
        return Err(HbError::DimensionMismatch {
            context: "cross entropy labels",
            left: labels.len(),
            right: batch.len(),
        });
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= head.classes() {
            return Err(HbError::LabelOutOfRange {
                label: y,
                classes: head.classes(),
            });
        }
        let logits = head.logits(batch.column(i));
        total += lse_raw(1.0, logits.view()) - logits[y];
    }
    Ok(total / labels.len() as f64)
}

/// Composite loss `total = ce + lambda * ood`.
///
/// The cross-entropy term is evaluated on the ID batch with the given
/// labels; the OOD term is the geometry-appropriate [`l_ood`].
pub fn composite_loss(
    cfg: &ToyConfig,
    id_batch: &PatternMemory<f64>,
    aux_batch: &PatternMemory<f64>,
    labels: &[usize],
    head: &LinearHead,
) -> Result<(f64, f64, f64)> {
    cfg.validate()?;
    let hcfg = cfg.hopfield()?;
    let ce = cross_entropy(head, id_batch, labels)?;
    let ood = match cfg.geometry {
        Geometry::Sphere => l_ood(&hcfg, id_batch, aux_batch)?,
        Geometry::Euclidean => euclidean_l_ood(&hcfg, id_batch, aux_batch)?,
    };
    Ok((ce + cfg.lambda * ood, ce, ood))
}

/// One recorded state of a toy run.
#[derive(Debug, Clone)]
pub struct ToySnapshot {
    pub step: usize,
    /// Full ID pool at this step.
    pub id_patterns: Array2<f64>,
    /// Full AUX pool at this step.
    pub aux_patterns: Array2<f64>,
    /// ID indices of the most recent mini-batch (empty at step 0).
    pub id_indices: Vec<usize>,
    /// AUX indices of the most recent mini-batch (empty at step 0).
    pub aux_indices: Vec<usize>,
    /// Current AUX sampling weights.
    pub weights: Array1<f64>,
    /// OOD loss over the full pools.
    pub l_ood: f64,
    /// Cross-entropy over the full ID pool, when the head is enabled.
    pub ce: Option<f64>,
}

/// Per-step snapshot sequence of a toy run.
#[derive(Debug, Clone)]
pub struct ToyTrajectory {
    pub config: ToyConfig,
    pub enable_ce: bool,
    pub snapshots: Vec<ToySnapshot>,
}

/// Runs the boosting loop on toy pools, applying energy gradients directly
/// to the sampled patterns.
///
/// Per step: an ID mini-batch is sampled uniformly without replacement and
/// an AUX mini-batch by the current weights with replacement; the memory
/// gradients of the mean boundary energy over the joined batch are applied
/// to the sampled pool entries (re-projecting onto the unit sphere for
/// sphere geometry); the AUX weights are recomputed over the full pools
/// every `resample_every` steps. With `enable_ce` a two-class linear head is
/// trained jointly and its cross-entropy gradients also flow into the
/// sampled ID patterns (the OOD gradient is then scaled by `lambda`).
///
/// A snapshot is recorded at step 0 and every `record_every` steps; the
/// recorded losses are evaluated over the full pools. Identical configs
/// (seed included) produce bit-identical trajectories.
pub fn run_toy_boosting(
    cfg: &ToyConfig,
    id_pool: &PatternMemory<f64>,
    aux_pool: &PatternMemory<f64>,
    labels: Option<&[usize]>,
    enable_ce: bool,
) -> Result<ToyTrajectory> {
    cfg.validate()?;
    let hcfg = cfg.hopfield()?;
    if id_pool.dim() != aux_pool.dim() {
        return Err(HbError::DimensionMismatch {
            context: "toy pools",
            left: id_pool.dim(),
            right: aux_pool.dim(),
        });
    }
    if cfg.batch_n > id_pool.len() || cfg.batch_n > aux_pool.len() {
        return Err(HbError::InvalidParameter {
            name: "batch_n",
            reason: format!(
                "batch size {} exceeds pool sizes ({}, {})",
                cfg.batch_n,
                id_pool.len(),
                aux_pool.len()
            ),
        });
    }
    if cfg.geometry == Geometry::Sphere && !(id_pool.is_normalized() && aux_pool.is_normalized()) {
        return Err(HbError::NotNormalized {
            what: "toy pools (sphere geometry)",
            index: 0,
            norm: f64::NAN,
        });
    }
    let labels: Option<Vec<usize>> = match (enable_ce, labels) {
        (true, Some(l)) => {
            if l.len() != id_pool.len() {
                return Err(HbError::DimensionMismatch {
                    context: "toy labels",
                    left: l.len(),
                    right: id_pool.len(),
                });
            }
            if let Some(&bad) = l.iter().find(|&&y| y >= 2) {
                return Err(HbError::LabelOutOfRange {
                    label: bad,
                    classes: 2,
                });
            }
            Some(l.to_vec())
        }
        (true, None) => {
            return Err(HbError::InvalidParameter {
                name: "labels",
                reason: "enable_ce requires class labels for the ID pool".into(),
            })
        }
        (false, _) => None,
    };

    let d = id_pool.dim();
    let mut id_data = id_pool.data().clone();
    let mut aux_data = aux_pool.data().clone();
    let mut head = LinearHead::zeros(2, d);
    let mut weights = SampleWeights::<f64>::uniform(aux_data.ncols())?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut lr = cfg.lr;
    let mut snapshots = Vec::new();

    let record = |snapshots: &mut Vec<ToySnapshot>,
                  step: usize,
                  id_data: &Array2<f64>,
                  aux_data: &Array2<f64>,
                  id_idx: &[usize],
                  aux_idx: &[usize],
                  weights: &SampleWeights<f64>,
                  head: &LinearHead|
     -> Result<()> {
        let id_mem = PatternMemory::new(id_data.clone())?;
        let aux_mem = PatternMemory::new(aux_data.clone())?;
        let full_lood = match cfg.geometry {
            Geometry::Sphere => l_ood(&hcfg, &id_mem, &aux_mem)?,
            Geometry::Euclidean => euclidean_l_ood(&hcfg, &id_mem, &aux_mem)?,
        };
        let ce = match &labels {
            Some(l) if enable_ce => Some(cross_entropy(head, &id_mem, l)?),
            _ => None,
        };
        snapshots.push(ToySnapshot {
            step,
            id_patterns: id_data.clone(),
            aux_patterns: aux_data.clone(),
            id_indices: id_idx.to_vec(),
            aux_indices: aux_idx.to_vec(),
            weights: weights.values().clone(),
            l_ood: full_lood,
            ce,
        });
        Ok(())
    };

    record(
        &mut snapshots,
        0,
        &id_data,
        &aux_data,
        &[],
        &[],
        &weights,
        &head,
    )?;

    for step in 1..=cfg.steps {
        let id_idx = rand::seq::index::sample(&mut rng, id_data.ncols(), cfg.batch_n).into_vec();
        let aux_idx = weighted_sample_with_rng(&weights, cfg.batch_n, &mut rng);

        let xs = PatternMemory::new(select_columns(&id_data, &id_idx))?;
        let os = PatternMemory::new(select_columns(&aux_data, &aux_idx))?;

        // Memory gradients of the mean boundary energy over the joined batch.
        let mut gx = Array2::<f64>::zeros((d, cfg.batch_n));
        let mut go = Array2::<f64>::zeros((d, cfg.batch_n));
        let grad = |q: ArrayView1<'_, f64>| match cfg.geometry {
            Geometry::Sphere => grad_memory_boundary(&hcfg, q, &xs, &os),
            Geometry::Euclidean => euclidean_grad_memory_boundary(&hcfg, q, &xs, &os),
        };
        for i in 0..cfg.batch_n {
            let (dx, do_) = grad(xs.column(i))?;
            gx += &dx;
            go += &do_;
        }
        for i in 0..cfg.batch_n {
            let (dx, do_) = grad(os.column(i))?;
            gx += &dx;
            go += &do_;
        }
        let ood_scale = if enable_ce { cfg.lambda } else { 1.0 } / (2.0 * cfg.batch_n as f64);
        gx *= ood_scale;
        go *= ood_scale;

        // Cross-entropy gradients: into the head and the sampled ID patterns.
        if enable_ce {
            let l = labels.as_ref().expect("labels validated above");
            let inv_b = 1.0 / cfg.batch_n as f64;
            let mut dw = Array2::<f64>::zeros(head.weights.raw_dim());
            let mut db = Array1::<f64>::zeros(head.bias.len());
            for (k, &idx) in id_idx.iter().enumerate() {
                let x = xs.column(k);
                let logits = head.logits(x);
                let z = lse_raw(1.0, logits.view());
                let mut p = logits.mapv(|v| (v - z).exp());
                p[l[idx]] -= 1.0;
                for c in 0..head.classes() {
                    let g = p[c] * inv_b;
                    db[c] += g;
                    for j in 0..d {
                        dw[[c, j]] += g * x[j];
                    }
                }
                let dx = head.weights.t().dot(&p) * inv_b;
                gx.column_mut(k).zip_mut_with(&dx, |a, b| *a += b);
            }
            head.weights.zip_mut_with(&dw, |a, b| *a -= lr * b);
            head.bias.zip_mut_with(&db, |a, b| *a -= lr * b);
        }

        // Apply to the sampled pool entries; duplicates accumulate.
        for (k, &idx) in id_idx.iter().enumerate() {
            let g = gx.column(k);
            id_data
                .column_mut(idx)
                .zip_mut_with(&g, |a, b| *a -= lr * b);
        }
        for (k, &idx) in aux_idx.iter().enumerate() {
            let g = go.column(k);
            aux_data
                .column_mut(idx)
                .zip_mut_with(&g, |a, b| *a -= lr * b);
        }
        if cfg.geometry == Geometry::Sphere {
            for &idx in &id_idx {
                renormalize_column(&mut id_data, idx);
            }
            for &idx in &aux_idx {
                renormalize_column(&mut aux_data, idx);
            }
        }

        lr *= cfg.lr_growth;

        if step % cfg.resample_every == 0 {
            let id_mem = PatternMemory::new(id_data.clone())?;
            let aux_mem = PatternMemory::new(aux_data.clone())?;
            let pool = QueryBatch::new(aux_data.clone())?;
            weights = match cfg.geometry {
                Geometry::Sphere => update_weights(&hcfg, &pool, &id_mem, &aux_mem)?,
                Geometry::Euclidean => euclidean_update_weights(&hcfg, &pool, &id_mem, &aux_mem)?,
            };
        }

        if step % cfg.record_every == 0 {
            record(
                &mut snapshots,
                step,
                &id_data,
                &aux_data,
                &id_idx,
                &aux_idx,
                &weights,
                &head,
            )?;
        }
    }

    Ok(ToyTrajectory {
        config: cfg.clone(),
        enable_ce,
        snapshots,
    })
}

fn select_columns(data: &Array2<f64>, indices: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((data.nrows(), indices.len()));
    for (k, &i) in indices.iter().enumerate() {
        out.column_mut(k).assign(&data.column(i));
    }
    out
}

fn renormalize_column(data: &mut Array2<f64>, idx: usize) {
    let norm = data.column(idx).mapv(|v| v * v).sum().sqrt();
    if norm > 0.0 {
        data.column_mut(idx).mapv_inplace(|v| v / norm);
    }
}

/// Result of the boundary-constrained sampling Monte-Carlo.
#[derive(Debug, Clone)]
pub struct BoundaryMcSummary {
    pub trials: usize,
    /// Per-trial margins `mu^T theta / ||theta||` of the unconstrained arm.
    pub margins_unconstrained: Vec<f64>,
    /// Per-trial margins of the boundary-filtered arm.
    pub margins_filtered: Vec<f64>,
    pub mean_margin_unconstrained: f64,
    pub mean_margin_filtered: f64,
    /// Trials in which the filtered arm had the strictly larger margin.
    pub filtered_wins: usize,
    /// Overall acceptance rate of the rejection filter.
    pub acceptance_rate: f64,
}

/// Monte-Carlo comparison of classifiers built from unconstrained AUX draws
/// (`o ~ N(-mu, sigma^2 I)`) versus draws rejection-filtered to the
/// boundary band `|2 mu^T o| <= eps sigma^2`.
///
/// Each trial draws one ID sample set `x ~ N(mu, sigma^2 I)` shared by both
/// arms, forms `theta = mean(x) - mean(o)` per arm, and records the margin
/// `mu^T theta / ||theta||`.
pub fn boundary_mc_experiment(
    d: usize,
    mu_norm: f64,
    sigma: f64,
    eps: f64,
    n_per_class: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundaryMcSummary> {
    if d < 2 {
        return Err(HbError::InvalidParameter {
            name: "d",
            reason: "need at least 2 dimensions".into(),
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HbError::InvalidParameter {
            name: "sigma",
            reason: format!("must be positive, got {sigma}"),
        });
    }
    // Signal/noise requirement of the margin bound (r >= 1.37).
    let r = mu_norm / sigma;
    if !(r >= 1.37) {
        return Err(HbError::InvalidParameter {
            name: "mu_norm/sigma",
            reason: format!("signal/noise ratio {r} below 1.37"),
        });
    }
    if !(eps > 0.0) {
        return Err(HbError::InvalidParameter {
            name: "eps",
            reason: "must be positive".into(),
        });
    }
    if n_per_class == 0 || trials == 0 {
        return Err(HbError::InvalidParameter {
            name: "n_per_class/trials",
            reason: "must be positive".into(),
        });
    }

    let mut margins_u = Vec::with_capacity(trials);
    let mut margins_f = Vec::with_capacity(trials);
    let mut wins = 0usize;
    let mut attempts = 0u64;
    let mut accepts = 0u64;
    // Acceptance of |2 mu^T o| <= eps sigma^2 only involves the mu-direction
    // component of o, so candidates are screened on that single coordinate
    // before the remaining coordinates are drawn.
    let accept_band = eps * sigma * sigma / (2.0 * mu_norm);

    for trial in 0..trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64 + 1);

        // mu = mu_norm * e0; ID samples shared by both arms.
        let mut x_mean = Array1::<f64>::zeros(d);
        for _ in 0..n_per_class {
            for j in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                x_mean[j] += if j == 0 { mu_norm + sigma * g } else { sigma * g };
            }
        }
        x_mean /= n_per_class as f64;

        let mut o_mean_u = Array1::<f64>::zeros(d);
        for _ in 0..n_per_class {
            for j in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                o_mean_u[j] += if j == 0 { -mu_norm + sigma * g } else { sigma * g };
            }
        }
        o_mean_u /= n_per_class as f64;

        let mut o_mean_f = Array1::<f64>::zeros(d);
        let mut accepted = 0usize;
        while accepted < n_per_class {
            attempts += 1;
            let g0: f64 = rng.sample(StandardNormal);
            let o0 = -mu_norm + sigma * g0;
            if o0.abs() <= accept_band {
                accepts += 1;
                accepted += 1;
                o_mean_f[0] += o0;
                for j in 1..d {
                    let g: f64 = rng.sample(StandardNormal);
                    o_mean_f[j] += sigma * g;
                }
            }
            if attempts >= 200_000 && (accepts as f64 / attempts as f64) < 1e-4 {
                return Err(HbError::FilterTooStrict {
                    rate: accepts as f64 / attempts as f64,
                });
            }
        }
        o_mean_f /= n_per_class as f64;

        let margin = |o_mean: &Array1<f64>| {
            let theta = &x_mean - o_mean;
            let norm = theta.mapv(|v| v * v).sum().sqrt();
            mu_norm * theta[0] / norm
        };
        let m_u = margin(&o_mean_u);
        let m_f = margin(&o_mean_f);
        if m_f > m_u {
            wins += 1;
        }
        margins_u.push(m_u);
        margins_f.push(m_f);
    }

    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(BoundaryMcSummary {
        trials,
        mean_margin_unconstrained: mean(&margins_u),
        mean_margin_filtered: mean(&margins_f),
        margins_unconstrained: margins_u,
        margins_filtered: margins_f,
        filtered_wins: wins,
        acceptance_rate: if attempts == 0 {
            1.0
        } else {
            accepts as f64 / attempts as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::normalize_columns;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn cfg_norm(beta: f64) -> HopfieldConfig<f64> {
        HopfieldConfig::new(beta, true).unwrap()
    }

    fn unit_mem(data: Array2<f64>) -> PatternMemory<f64> {
        normalize_columns(&data).unwrap()
    }

    #[test]
    fn weights_validation() {
        assert!(SampleWeights::new(array![0.5, 0.5]).is_ok());
        assert!(SampleWeights::new(array![0.6, 0.5]).is_err());
        assert!(SampleWeights::new(array![-0.1, 1.1]).is_err());
        assert!(SampleWeights::new(Array1::<f64>::zeros(0)).is_err());
    }

    #[test]
    fn equidistant_pool_gets_uniform_weights() {
        // Identical pool points: every boundary energy is equal.
        let x = unit_mem(array![[1.0, 0.9], [0.1, 0.4]]);
        let o = unit_mem(array![[-1.0, -0.8], [0.1, 0.5]]);
        let p: Array2<f64> = array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
        let pool = QueryBatch::new(p).unwrap();
        let w = update_weights(&cfg_norm(4.0), &pool, &x, &o).unwrap();
        for &v in w.values().iter() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pool_of_one_gets_weight_one() {
        let x = unit_mem(array![[1.0], [0.0]]);
        let o = unit_mem(array![[-1.0], [0.0]]);
        let pool = QueryBatch::new(array![[0.0], [1.0]]).unwrap();
        let w = update_weights(&cfg_norm(2.0), &pool, &x, &o).unwrap();
        assert_eq!(w.len(), 1);
        assert_abs_diff_eq!(w.values()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weight_ratio_follows_energy_gap() {
        let beta = 3.0;
        let c = cfg_norm(beta);
        let x = unit_mem(array![[1.0, 0.8], [0.0, 0.6]]);
        let o = unit_mem(array![[-1.0, -0.7], [0.0, 0.7]]);
        let pool_data = normalize_columns::<f64>(&array![[0.2, 0.9], [0.98, -0.1]])
            .unwrap()
            .data()
            .clone();
        let pool = QueryBatch::new(pool_data).unwrap();
        let e1 = boundary_energy(&c, pool.column(0), &x, &o).unwrap();
        let e2 = boundary_energy(&c, pool.column(1), &x, &o).unwrap();
        let w = update_weights(&c, &pool, &x, &o).unwrap();
        let ratio = w.values()[0] / w.values()[1];
        assert_abs_diff_eq!(ratio, (beta * (e1 - e2)).exp(), epsilon = 1e-9);
    }

    #[test]
    fn weights_invariant_under_constant_energy_shift() {
        let c = cfg_norm(2.0);
        let e: Array1<f64> = array![-0.9, -0.4, -1.3];
        let w1 = softmax(&c, e.view()).unwrap();
        let shifted = e.mapv(|v| v + 5.0);
        let w2 = softmax(&c, shifted.view()).unwrap();
        for (a, b) in w1.iter().zip(w2.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_weights_always_hit_same_index() {
        let w = SampleWeights::new(array![0.0, 0.0, 1.0, 0.0]).unwrap();
        let idx = weighted_sample(&w, 250, 99).unwrap();
        assert!(idx.iter().all(|&i| i == 2));
    }

    #[test]
    fn same_seed_gives_identical_draws() {
        let w = SampleWeights::new(array![0.1, 0.2, 0.3, 0.4]).unwrap();
        let a = weighted_sample(&w, 1000, 1234).unwrap();
        let b = weighted_sample(&w, 1000, 1234).unwrap();
        assert_eq!(a, b);
        let c = weighted_sample(&w, 1000, 1235).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_weights_give_uniform_frequencies() {
        let w = SampleWeights::<f64>::uniform(4).unwrap();
        let idx = weighted_sample(&w, 100_000, 7).unwrap();
        for k in 0..4 {
            let freq = idx.iter().filter(|&&i| i == k).count() as f64 / 100_000.0;
            assert!((freq - 0.25).abs() < 0.01, "index {k} frequency {freq}");
        }
    }

    #[test]
    fn zero_draws_rejected() {
        let w = SampleWeights::<f64>::uniform(3).unwrap();
        assert!(weighted_sample(&w, 0, 1).is_err());
    }

    #[test]
    fn l_ood_attains_bound_for_identical_batches() {
        let beta = 4.0;
        let m = unit_mem(array![[1.0, 0.0, -0.4], [0.0, 1.0, 0.9]]);
        let v = l_ood(&cfg_norm(beta), &m, &m).unwrap();
        assert_abs_diff_eq!(v, -2.0 / beta * std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn l_ood_matches_per_column_loop() {
        let beta = 2.0;
        let c = cfg_norm(beta);
        let x = unit_mem(array![[1.0, 0.7, 0.2], [0.1, 0.7, -0.9]]);
        let o = unit_mem(array![[-1.0, -0.6], [0.0, 0.8]]);
        let v = l_ood(&c, &x, &o).unwrap();
        let mut sum = 0.0;
        for i in 0..x.len() {
            sum += boundary_energy(&c, x.column(i), &x, &o).unwrap();
        }
        for i in 0..o.len() {
            sum += boundary_energy(&c, o.column(i), &x, &o).unwrap();
        }
        assert_abs_diff_eq!(v, sum / 5.0, epsilon = 1e-13);
        assert!(v <= -2.0 / beta * std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn composite_loss_pieces() {
        let mut cfg = ToyConfig {
            geometry: Geometry::Euclidean,
            ..ToyConfig::default()
        };
        let id = PatternMemory::new(array![[0.5, -0.5], [0.0, 0.0]]).unwrap();
        let aux = PatternMemory::new(array![[0.0, 0.1], [1.0, -1.0]]).unwrap();
        let labels = [0usize, 1];
        let head = LinearHead::zeros(2, 2);
        // uniform logits: ce = ln 2
        let (_, ce, _) = composite_loss(&cfg, &id, &aux, &labels, &head).unwrap();
        assert_abs_diff_eq!(ce, std::f64::consts::LN_2, epsilon = 1e-12);
        // lambda = 0: total = ce
        cfg.lambda = 0.0;
        let (total, ce, _) = composite_loss(&cfg, &id, &aux, &labels, &head).unwrap();
        assert_abs_diff_eq!(total, ce, epsilon = 0.0);
        // additivity
        cfg.lambda = 0.5;
        let (total, ce, ood) = composite_loss(&cfg, &id, &aux, &labels, &head).unwrap();
        assert_abs_diff_eq!(total, ce + 0.5 * ood, epsilon = 1e-15);
    }

    #[test]
    fn cross_entropy_label_out_of_range() {
        let id = PatternMemory::new(array![[0.5], [0.0]]).unwrap();
        let head = LinearHead::zeros(2, 2);
        assert!(matches!(
            cross_entropy(&head, &id, &[3]),
            Err(HbError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn trajectory_snapshot_count_and_noop_boundary() {
        let cfg = ToyConfig {
            beta: 2.0,
            steps: 1,
            record_every: 2,
            batch_n: 2,
            geometry: Geometry::Euclidean,
            ..ToyConfig::default()
        };
        let id = PatternMemory::new(array![[0.5, 0.6, 0.7], [0.0, 0.1, -0.1]]).unwrap();
        let aux = PatternMemory::new(array![[-0.5, -0.6, -0.7], [0.0, 0.1, -0.1]]).unwrap();
        let traj = run_toy_boosting(&cfg, &id, &aux, None, false).unwrap();
        // steps=1 with stride 2: only the initial snapshot is recorded
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].step, 0);
        assert!(traj.snapshots[0].id_indices.is_empty());

        let cfg = ToyConfig {
            steps: 20,
            record_every: 5,
            ..cfg
        };
        let traj = run_toy_boosting(&cfg, &id, &aux, None, false).unwrap();
        assert_eq!(traj.snapshots.len(), 5); // steps/stride + 1
        assert!(traj
            .snapshots
            .iter()
            .all(|s| s.l_ood.is_finite() && s.weights.iter().all(|w| w.is_finite())));
    }

    #[test]
    fn trajectories_are_bit_identical_for_same_config() {
        let cfg = ToyConfig {
            beta: 2.0,
            steps: 12,
            record_every: 3,
            batch_n: 3,
            seed: 42,
            geometry: Geometry::Euclidean,
            ..ToyConfig::default()
        };
        let id = PatternMemory::new(array![[0.5, 0.6, 0.7, 0.9], [0.0, 0.1, -0.1, 0.2]]).unwrap();
        let aux =
            PatternMemory::new(array![[-0.5, -0.6, -0.7, -0.9], [0.0, 0.1, -0.1, 0.2]]).unwrap();
        let a = run_toy_boosting(&cfg, &id, &aux, None, false).unwrap();
        let b = run_toy_boosting(&cfg, &id, &aux, None, false).unwrap();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (sa, sb) in a.snapshots.iter().zip(b.snapshots.iter()) {
            assert_eq!(sa.id_patterns, sb.id_patterns);
            assert_eq!(sa.aux_patterns, sb.aux_patterns);
            assert_eq!(sa.aux_indices, sb.aux_indices);
            assert_eq!(sa.weights, sb.weights);
            assert_eq!(sa.l_ood.to_bits(), sb.l_ood.to_bits());
        }
    }

    #[test]
    fn ce_requires_labels() {
        let cfg = ToyConfig {
            geometry: Geometry::Euclidean,
            batch_n: 1,
            ..ToyConfig::default()
        };
        let id = PatternMemory::new(array![[0.5], [0.0]]).unwrap();
        let aux = PatternMemory::new(array![[-0.5], [0.0]]).unwrap();
        assert!(run_toy_boosting(&cfg, &id, &aux, None, true).is_err());
    }

    #[test]
    fn mc_signal_noise_precondition() {
        assert!(matches!(
            boundary_mc_experiment(5, 1.0, 1.0, 0.5, 10, 5, 1),
            Err(HbError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn mc_vacuous_filter_arms_statistically_identical() {
        // Huge eps: the filter accepts everything and the two arms differ
        // only by independent draws. Welch t on the margins stays small.
        let s = boundary_mc_experiment(6, 3.0, 1.0, 1e6, 30, 200, 7).unwrap();
        assert!((s.acceptance_rate - 1.0).abs() < 1e-12);
        let n = s.trials as f64;
        let mean_u = s.mean_margin_unconstrained;
        let mean_f = s.mean_margin_filtered;
        let var =
            |v: &Vec<f64>, m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        let vu = var(&s.margins_unconstrained, mean_u);
        let vf = var(&s.margins_filtered, mean_f);
        let t = (mean_f - mean_u) / ((vu / n + vf / n).sqrt());
        // |t| < 2.58 corresponds to a two-sided p above 0.01
        assert!(t.abs() < 2.58, "t = {t}");
    }

    #[test]
    fn mc_noiseless_limit_margin_is_mu_norm() {
        // sigma -> 0 with the filter made vacuous: both margins -> ||mu||.
        let s = boundary_mc_experiment(6, 3.0, 0.01, 1e9, 40, 50, 11).unwrap();
        assert!((s.mean_margin_unconstrained - 3.0).abs() < 1e-3);
        assert!((s.mean_margin_filtered - 3.0).abs() < 1e-3);
    }
}
