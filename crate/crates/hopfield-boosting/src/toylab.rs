//! Synthetic scenes and figure statistics for the toy experiments: an ID
//! cluster near a pole of the sphere with outliers over the remaining
//! surface, planar Gaussian blobs, grid-based boundary agreement, the
//! boundary-energy heatmap, and the variance statistic of the planar
//! dynamics.

use crate::config::HopfieldConfig;
use crate::energy::{boundary_energy_batch, euclidean_boundary_energy, euclidean_score, score};
use crate::error::{HbError, Result};
use crate::memory::{normalize_columns, PatternMemory, QueryBatch};
use crate::scalar::{cast, Scalar};
use crate::threads;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Sphere scene: ID patterns wrapped around a pole, AUX patterns over the
/// remaining surface (a cap around the pole is left empty so the scene has
/// a nontrivial boundary).
#[derive(Debug, Clone)]
pub struct SphereScene {
    pub id_pool: PatternMemory<f64>,
    pub aux_pool: PatternMemory<f64>,
    pub pole: Array1<f64>,
    pub concentration: f64,
}

/// Planar scene: 2-D pools, optionally with two ID classes.
#[derive(Debug, Clone)]
pub struct PlanarScene {
    pub id_pool: PatternMemory<f64>,
    pub aux_pool: PatternMemory<f64>,
    /// Class labels (0/1) for the ID pool, when it carries two classes.
    pub labels: Option<Vec<usize>>,
}

/// Excluded-cap angular radius as a multiple of the typical ID angular
/// spread `atan2(sqrt(d-1), concentration)`.
const CAP_SCALE: f64 = 2.0;

/// Generates a sphere scene: ID points are `concentration * pole` plus
/// standard Gaussian noise (then normalized), AUX points are uniform on the
/// sphere, rejection-filtered off the polar cap.
pub fn gen_sphere_scene(
    d: usize,
    n_id: usize,
    n_aux: usize,
    concentration: f64,
    seed: u64,
) -> Result<SphereScene> {
    if d < 2 {
        return Err(HbError::InvalidParameter {
            name: "d",
            reason: "sphere scenes need d >= 2".into(),
        });
    }
    if n_id == 0 || n_aux == 0 {
        return Err(HbError::InvalidParameter {
            name: "n_id/n_aux",
            reason: "pool sizes must be positive".into(),
        });
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(HbError::InvalidParameter {
            name: "concentration",
            reason: format!("must be positive, got {concentration}"),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pole = Array1::<f64>::zeros(d);
    pole[d - 1] = 1.0;

    let mut id_raw = Array2::<f64>::zeros((d, n_id));
    for i in 0..n_id {
        for j in 0..d {
            let g: f64 = rng.sample(StandardNormal);
            id_raw[[j, i]] = concentration * pole[j] + g;
        }
    }
    let id_pool = normalize_columns(&id_raw)?;

    let cap_cos = (CAP_SCALE * ((d as f64 - 1.0).sqrt()).atan2(concentration)).cos();
    let mut aux_raw = Array2::<f64>::zeros((d, n_aux));
    let mut col = 0usize;
    let mut guard = 0usize;
    while col < n_aux {
        guard += 1;
        if guard > 1000 * n_aux {
            return Err(HbError::DegenerateScene(
                "sphere cap rejection accepts too few points".into(),
            ));
        }
        let mut v = Array1::<f64>::zeros(d);
        let mut norm_sq = 0.0;
        for j in 0..d {
            let g: f64 = rng.sample(StandardNormal);
            v[j] = g;
            norm_sq += g * g;
        }
        if norm_sq < 1e-24 {
            continue;
        }
        let norm = norm_sq.sqrt();
        v.mapv_inplace(|x| x / norm);
        if v.dot(&pole) <= cap_cos {
            for j in 0..d {
                aux_raw[[j, col]] = v[j];
            }
            col += 1;
        }
    }
    let aux_pool = PatternMemory::new(aux_raw)?;

    Ok(SphereScene {
        id_pool,
        aux_pool,
        pole,
        concentration,
    })
}

/// Two isotropic Gaussian blobs at `+-(separation/2) e1`: the positive blob
/// is the ID pool, the negative one the AUX pool.
pub fn gen_planar_blobs(
    n_per_class: usize,
    separation: f64,
    spread: f64,
    seed: u64,
) -> Result<PlanarScene> {
    if n_per_class == 0 {
        return Err(HbError::InvalidParameter {
            name: "n_per_class",
            reason: "must be positive".into(),
        });
    }
    if !(separation > 0.0) || !(spread > 0.0) {
        return Err(HbError::InvalidParameter {
            name: "separation/spread",
            reason: "must be positive".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let blob = |center: f64, rng: &mut ChaCha12Rng| {
        let mut m = Array2::<f64>::zeros((2, n_per_class));
        for i in 0..n_per_class {
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            m[[0, i]] = center + spread * g0;
            m[[1, i]] = spread * g1;
        }
        m
    };
    let id = blob(separation / 2.0, &mut rng);
    let aux = blob(-separation / 2.0, &mut rng);
    Ok(PlanarScene {
        id_pool: PatternMemory::new(id)?,
        aux_pool: PatternMemory::new(aux)?,
        labels: None,
    })
}

/// Two ID class blobs at `+-(separation/2) e1` (labels 0/1) plus AUX points
/// uniform over the square `[-aux_halfwidth, aux_halfwidth]^2`.
pub fn gen_interaction_scene(
    n_per_class: usize,
    n_aux: usize,
    separation: f64,
    spread: f64,
    aux_halfwidth: f64,
    seed: u64,
) -> Result<PlanarScene> {
    if n_per_class == 0 || n_aux == 0 {
        return Err(HbError::InvalidParameter {
            name: "n_per_class/n_aux",
            reason: "pool sizes must be positive".into(),
        });
    }
    if !(separation > 0.0) || !(spread > 0.0) || !(aux_halfwidth > 0.0) {
        return Err(HbError::InvalidParameter {
            name: "separation/spread/aux_halfwidth",
            reason: "must be positive".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut id = Array2::<f64>::zeros((2, 2 * n_per_class));
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for c in 0..2 {
        let center = if c == 0 {
            separation / 2.0
        } else {
            -separation / 2.0
        };
        for i in 0..n_per_class {
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            id[[0, c * n_per_class + i]] = center + spread * g0;
            id[[1, c * n_per_class + i]] = spread * g1;
            labels.push(c);
        }
    }
    let mut aux = Array2::<f64>::zeros((2, n_aux));
    for i in 0..n_aux {
        aux[[0, i]] = rng.gen_range(-aux_halfwidth..aux_halfwidth);
        aux[[1, i]] = rng.gen_range(-aux_halfwidth..aux_halfwidth);
    }
    Ok(PlanarScene {
        id_pool: PatternMemory::new(id)?,
        aux_pool: PatternMemory::new(aux)?,
        labels: Some(labels),
    })
}

/// Uniformly distributed unit vectors, for sphere-scene evaluation grids.
pub fn gen_sphere_grid(d: usize, n: usize, seed: u64) -> Result<QueryBatch<f64>> {
    if d < 2 || n == 0 {
        return Err(HbError::InvalidParameter {
            name: "d/n",
            reason: "need d >= 2 and n >= 1".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut grid = Array2::<f64>::zeros((d, n));
    let mut col = 0usize;
    while col < n {
        let mut nsq = 0.0;
        let mut v = vec![0.0f64; d];
        for x in v.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = g;
            nsq += g * g;
        }
        if nsq < 1e-24 {
            continue;
        }
        let norm = nsq.sqrt();
        for (j, x) in v.iter().enumerate() {
            grid[[j, col]] = x / norm;
        }
        col += 1;
    }
    QueryBatch::new(grid)
}

/// Rectangular raster grid over `[x0, x1] x [y0, y1]`, row-major in y then x.
pub fn gen_planar_grid(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
) -> Result<QueryBatch<f64>> {
    if nx < 2 || ny < 2 {
        return Err(HbError::InvalidParameter {
            name: "nx/ny",
            reason: "need at least 2 points per axis".into(),
        });
    }
    if !(x1 > x0) || !(y1 > y0) {
        return Err(HbError::InvalidParameter {
            name: "grid extent",
            reason: "upper bounds must exceed lower bounds".into(),
        });
    }
    let mut grid = Array2::<f64>::zeros((2, nx * ny));
    let mut k = 0;
    for iy in 0..ny {
        let y = y0 + (y1 - y0) * iy as f64 / (ny - 1) as f64;
        for ix in 0..nx {
            let x = x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64;
            grid[[0, k]] = x;
            grid[[1, k]] = y;
            k += 1;
        }
    }
    QueryBatch::new(grid)
}

/// Fraction of grid points on which the score sign under the subsampled
/// memories matches the sign under the full memories.
pub fn boundary_agreement<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    full_id: &PatternMemory<F>,
    full_aux: &PatternMemory<F>,
    sub_id: &PatternMemory<F>,
    sub_aux: &PatternMemory<F>,
    grid: &QueryBatch<F>,
) -> Result<F> {
    if grid.is_empty() {
        return Err(HbError::EmptyInput("agreement grid"));
    }
    let matches = threads::map_indexed(grid.len(), |i| {
        let q = grid.column(i);
        let full = score(cfg, q, full_id, full_aux)? >= F::zero();
        let sub = score(cfg, q, sub_id, sub_aux)? >= F::zero();
        Ok::<bool, HbError>(full == sub)
    })?;
    let agree = matches.iter().filter(|&&m| m).count();
    Ok(cast::<F>(agree as f64) / cast::<F>(grid.len() as f64))
}

/// `exp(beta * E_b)` per grid point; always in `(0, 1/4]`.
pub fn heatmap_field<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
    grid: &QueryBatch<F>,
) -> Result<Array1<F>> {
    let energies = boundary_energy_batch(cfg, grid, id_mem, aux_mem)?;
    Ok(energies.values().mapv(|e| (cfg.beta() * e).exp()))
}

/// Distance-based counterpart of [`heatmap_field`] for planar scenes.
pub fn euclidean_heatmap_field<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
    grid: &QueryBatch<F>,
) -> Result<Array1<F>> {
    let values = threads::map_indexed(grid.len(), |i| {
        Ok::<F, HbError>(
            (cfg.beta() * euclidean_boundary_energy(cfg, grid.column(i), id_mem, aux_mem)?).exp(),
        )
    })?;
    Ok(Array1::from_vec(values))
}

/// Distance-based score field over a grid (its sign gives the induced
/// decision regions of planar scenes).
pub fn euclidean_score_field<F: Scalar>(
    cfg: &HopfieldConfig<F>,
    id_mem: &PatternMemory<F>,
    aux_mem: &PatternMemory<F>,
    grid: &QueryBatch<F>,
) -> Result<Array1<F>> {
    let values = threads::map_indexed(grid.len(), |i| {
        euclidean_score(cfg, grid.column(i), id_mem, aux_mem)
    })?;
    Ok(Array1::from_vec(values))
}

/// Variance of the patterns' projections onto the scene's inter-class-mean
/// axis (`var_orth`, the direction orthogonal to the decision boundary) and
/// onto its perpendicular (`var_par`).
///
/// The axis runs through the ID and AUX pool means of the scene; coincident
/// means are rejected as degenerate.
pub fn orthogonal_variance_stat(
    scene: &PlanarScene,
    patterns: &PatternMemory<f64>,
) -> Result<(f64, f64)> {
    if scene.id_pool.dim() != 2 || patterns.dim() != 2 {
        return Err(HbError::DimensionMismatch {
            context: "orthogonal variance statistic",
            left: patterns.dim(),
            right: 2,
        });
    }
    let mid = scene.id_pool.mean_pattern();
    let maux = scene.aux_pool.mean_pattern();
    let axis = &maux - &mid;
    let norm = axis.mapv(|v| v * v).sum().sqrt();
    if norm < 1e-9 {
        return Err(HbError::DegenerateScene(
            "coincident class means leave the boundary axis undefined".into(),
        ));
    }
    let u = axis.mapv(|v| v / norm);
    let perp = ndarray::array![-u[1], u[0]];
    let project = |dir: &Array1<f64>| {
        let proj: Vec<f64> = (0..patterns.len())
            .map(|i| patterns.column(i).dot(dir))
            .collect();
        let mean = proj.iter().sum::<f64>() / proj.len() as f64;
        proj.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / proj.len() as f64
    };
    Ok((project(&u), project(&perp)))
}
