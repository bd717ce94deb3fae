//! Numerical verification suites for the algebraic identities of the
//! energies, the hand-derived gradients, the RBF/SVM equivalences, the
//! HE-to-SHE limit, and the boundary-sampling Monte-Carlo.
//!
//! Each suite runs a battery of randomized checks at its documented default
//! tolerance (overridable) and reports per-check pass/fail results.

use crate::baselines::{he_score, rbf_energy_check, she_score, svm_score_equiv, SvmDual};
use crate::boosting::boundary_mc_experiment;
use crate::config::HopfieldConfig;
use crate::energy::{
    boundary_energy, boundary_energy_logcosh, euclidean_boundary_energy,
    gaussian_mixture_logdensity, mhe, posterior_pair, score,
};
use crate::error::{HbError, Result};
use crate::gradients::{
    euclidean_grad_memory_boundary, euclidean_grad_query_boundary, finite_difference,
    grad_memory_boundary, grad_query_boundary, grad_query_boundary_tanh, grad_query_mhe,
    hopfield_update, GradReport,
};
use crate::memory::{normalize_columns, PatternMemory};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// One verification check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn threshold(name: &str, worst: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            passed: worst <= tol,
            detail: format!("worst {worst:.3e}, tolerance {tol:.3e}"),
        }
    }
}

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// The named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradcheck,
    Identities,
    Rbf,
    Svm,
    HeShe,
    BoundaryMc,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Gradcheck,
        Suite::Identities,
        Suite::Rbf,
        Suite::Svm,
        Suite::HeShe,
        Suite::BoundaryMc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Gradcheck => "gradcheck",
            Suite::Identities => "identities",
            Suite::Rbf => "rbf",
            Suite::Svm => "svm",
            Suite::HeShe => "heshe",
            Suite::BoundaryMc => "boundary-mc",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = HbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradcheck" => Ok(Suite::Gradcheck),
            "identities" => Ok(Suite::Identities),
            "rbf" => Ok(Suite::Rbf),
            "svm" => Ok(Suite::Svm),
            "heshe" => Ok(Suite::HeShe),
            "boundary-mc" => Ok(Suite::BoundaryMc),
            other => Err(HbError::InvalidParameter {
                name: "suite",
                reason: format!(
                    "unknown suite {other:?}; expected one of gradcheck, identities, rbf, svm, heshe, boundary-mc"
                ),
            }),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs one suite with the given base seed; `tol` overrides the suite's
/// default tolerances where a tolerance applies.
pub fn run_suite(suite: Suite, seed: u64, tol: Option<f64>) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Gradcheck => gradcheck(seed, tol)?,
        Suite::Identities => identities(seed, tol)?,
        Suite::Rbf => rbf(seed, tol)?,
        Suite::Svm => svm(seed, tol)?,
        Suite::HeShe => heshe(seed, tol)?,
        Suite::BoundaryMc => boundary_mc(seed)?,
    };
    Ok(SuiteReport { suite, checks })
}

const BETAS: [f64; 3] = [0.5, 4.0, 32.0];

fn random_unit_memory(rng: &mut ChaCha12Rng, d: usize, n: usize) -> PatternMemory<f64> {
    loop {
        let raw = Array2::from_shape_fn((d, n), |_| rng.gen_range(-1.0..1.0));
        if let Ok(mem) = normalize_columns(&raw) {
            return mem;
        }
    }
}

fn random_memory(rng: &mut ChaCha12Rng, d: usize, n: usize) -> PatternMemory<f64> {
    PatternMemory::new(Array2::from_shape_fn((d, n), |_| rng.gen_range(-1.0..1.0))).unwrap()
}

fn random_unit_query(rng: &mut ChaCha12Rng, d: usize) -> Array1<f64> {
    random_unit_memory(rng, d, 1).column(0).to_owned()
}

/// Energy identities over 1000 random instances (d <= 16, N = M <= 32,
/// beta in {0.5, 4, 32}): the log-cosh form, the Bernoulli-variance
/// product, the posterior logit, and the Gaussian-mixture offset of the
/// Hopfield energy.
fn identities(seed: u64, tol: Option<f64>) -> Result<Vec<Check>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol_forms = tol.unwrap_or(1e-9);
    let tol_product = tol.unwrap_or(1e-10);
    let tol_logit = tol.unwrap_or(1e-10);
    let tol_mixture = tol.unwrap_or(1e-9);

    let mut worst_forms = 0.0f64;
    let mut worst_product = 0.0f64;
    let mut worst_logit = 0.0f64;
    let mut worst_mixture = 0.0f64;

    for i in 0..1000 {
        let d = rng.gen_range(2..=16);
        let n = rng.gen_range(1..=32);
        let beta = BETAS[i % BETAS.len()];
        let cfg = HopfieldConfig::new(beta, true)?;
        let x = random_unit_memory(&mut rng, d, n);
        let o = random_unit_memory(&mut rng, d, n);
        let q = random_unit_query(&mut rng, d);

        let direct = boundary_energy(&cfg, q.view(), &x, &o)?;
        let cosh_form = boundary_energy_logcosh(&cfg, q.view(), &x, &o)?;
        worst_forms = worst_forms.max((direct - cosh_form).abs());

        let (p_id, p_aux) = posterior_pair(&cfg, q.view(), &x, &o)?;
        worst_product = worst_product.max(((beta * direct).exp() - p_id * p_aux).abs());

        let s = score(&cfg, q.view(), &x, &o)?;
        // p_aux is the exact complement of p_id by construction, so the
        // logit is evaluated as ln(p_id / p_aux)
        worst_logit = worst_logit.max((s - (p_id / p_aux).ln() / beta).abs());

        // Hopfield energy vs the mixture log-density: the offset is a
        // query-independent constant
        if i % 100 == 0 {
            let mut offsets = Vec::with_capacity(10);
            for _ in 0..10 {
                let qq = random_unit_query(&mut rng, d);
                let e = mhe(&cfg, qq.view(), &x, true)?;
                let ld = gaussian_mixture_logdensity(&cfg, qq.view(), &x)?;
                offsets.push(e + ld / beta);
            }
            let spread = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - offsets.iter().cloned().fold(f64::INFINITY, f64::min);
            worst_mixture = worst_mixture.max(spread);
        }
    }

    Ok(vec![
        Check::threshold("boundary-energy-forms-agree", worst_forms, tol_forms),
        Check::threshold("exp-energy-is-posterior-product", worst_product, tol_product),
        Check::threshold("score-is-posterior-logit", worst_logit, tol_logit),
        Check::threshold("hopfield-energy-mixture-offset", worst_mixture, tol_mixture),
    ])
}

/// Analytic gradients against central finite differences (h = 1e-5) over
/// 100 random instances, plus the update-rule identity.
fn gradcheck(seed: u64, tol: Option<f64>) -> Result<Vec<Check>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol = tol.unwrap_or(1e-6);
    let h = 1e-5;

    let mut worst = vec![0.0f64; 7];
    let mut worst_update = 0.0f64;

    for _ in 0..100 {
        let d = rng.gen_range(2..=8);
        let nx = rng.gen_range(1..=12);
        let no = rng.gen_range(1..=12);
        let cfg = HopfieldConfig::new(rng.gen_range(0.5..4.0), false)?;
        let x = random_memory(&mut rng, d, nx);
        let o = random_memory(&mut rng, d, no);
        let q = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));

        let fd_query = |f: &dyn Fn(ndarray::ArrayView1<'_, f64>) -> Result<f64>| {
            finite_difference(f, q.view(), h)
        };

        // query gradient of the Hopfield energy
        let analytic = grad_query_mhe(&cfg, q.view(), &x)?;
        let numeric = fd_query(&|v| mhe(&cfg, v, &x, false))?;
        worst[0] = worst[0].max(GradReport::compare(analytic.clone(), numeric, tol).max_rel_err);

        // update rule = query - gradient
        let upd = hopfield_update(&cfg, q.view(), &x)?;
        for i in 0..d {
            worst_update = worst_update.max((upd[i] - (q[i] - analytic[i])).abs());
        }

        // query gradient of the boundary energy, both forms
        let direct = grad_query_boundary(&cfg, q.view(), &x, &o)?;
        let numeric = fd_query(&|v| boundary_energy(&cfg, v, &x, &o))?;
        worst[1] = worst[1].max(GradReport::compare(direct.clone(), numeric, tol).max_rel_err);
        let tanh_form = grad_query_boundary_tanh(&cfg, q.view(), &x, &o)?;
        worst[2] = worst[2].max(GradReport::compare(tanh_form, direct, tol).max_rel_err);

        // memory gradients
        let (dx, do_) = grad_memory_boundary(&cfg, q.view(), &x, &o)?;
        let flat_x = Array1::from_iter(x.data().iter().copied());
        let numeric_x = finite_difference(
            |v| {
                let m = Array2::from_shape_vec((d, nx), v.to_vec()).unwrap();
                boundary_energy(&cfg, q.view(), &PatternMemory::new(m)?, &o)
            },
            flat_x.view(),
            h,
        )?;
        worst[3] = worst[3].max(
            GradReport::compare(Array1::from_iter(dx.iter().copied()), numeric_x, tol).max_rel_err,
        );
        let flat_o = Array1::from_iter(o.data().iter().copied());
        let numeric_o = finite_difference(
            |v| {
                let m = Array2::from_shape_vec((d, no), v.to_vec()).unwrap();
                boundary_energy(&cfg, q.view(), &x, &PatternMemory::new(m)?)
            },
            flat_o.view(),
            h,
        )?;
        worst[4] = worst[4].max(
            GradReport::compare(Array1::from_iter(do_.iter().copied()), numeric_o, tol).max_rel_err,
        );

        // distance-based counterparts
        let analytic = euclidean_grad_query_boundary(&cfg, q.view(), &x, &o)?;
        let numeric = fd_query(&|v| euclidean_boundary_energy(&cfg, v, &x, &o))?;
        worst[5] = worst[5].max(GradReport::compare(analytic, numeric, tol).max_rel_err);
        let (dx, do_) = euclidean_grad_memory_boundary(&cfg, q.view(), &x, &o)?;
        let analytic = Array1::from_iter(dx.iter().chain(do_.iter()).copied());
        let flat = Array1::from_iter(
            x.data().iter().chain(o.data().iter()).copied(),
        );
        let numeric = finite_difference(
            |v| {
                let mx = Array2::from_shape_vec((d, nx), v.as_slice().unwrap()[..d * nx].to_vec())
                    .unwrap();
                let mo = Array2::from_shape_vec((d, no), v.as_slice().unwrap()[d * nx..].to_vec())
                    .unwrap();
                euclidean_boundary_energy(
                    &cfg,
                    q.view(),
                    &PatternMemory::new(mx)?,
                    &PatternMemory::new(mo)?,
                )
            },
            flat.view(),
            h,
        )?;
        worst[6] = worst[6].max(GradReport::compare(analytic, numeric, tol).max_rel_err);
    }

    Ok(vec![
        Check::threshold("grad-query-hopfield-vs-fd", worst[0], tol),
        Check::threshold("grad-query-boundary-vs-fd", worst[1], tol),
        Check::threshold("grad-query-boundary-tanh-form", worst[2], tol),
        Check::threshold("grad-memory-id-vs-fd", worst[3], tol),
        Check::threshold("grad-memory-aux-vs-fd", worst[4], tol),
        Check::threshold("grad-query-euclidean-vs-fd", worst[5], tol),
        Check::threshold("grad-memory-euclidean-vs-fd", worst[6], tol),
        Check::threshold("update-rule-is-query-minus-gradient", worst_update, 1e-12),
    ])
}

/// RBF-network identity over 1000 random instances.
fn rbf(seed: u64, tol: Option<f64>) -> Result<Vec<Check>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol = tol.unwrap_or(1e-10);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=12);
        let cfg = HopfieldConfig::new(rng.gen_range(0.5..4.0), false)?;
        let centers = random_memory(&mut rng, d, n);
        let q = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
        let check = rbf_energy_check(&cfg, &centers, q.view())?;
        worst = worst.max(check.diff);
    }
    Ok(vec![Check::threshold("rbf-energy-identity", worst, tol)])
}

/// RBF-SVM score equivalence and decision agreement over random duals.
fn svm(seed: u64, tol: Option<f64>) -> Result<Vec<Check>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol = tol.unwrap_or(1e-10);
    let mut worst = 0.0f64;
    let mut disagreements = 0usize;
    for _ in 0..500 {
        let d = rng.gen_range(2..=8);
        let per_side = rng.gen_range(1..=6);
        let cfg = HopfieldConfig::new(rng.gen_range(0.5..4.0), false)?;
        let patterns = random_unit_memory(&mut rng, d, 2 * per_side);
        let alphas = Array1::from_shape_fn(2 * per_side, |_| rng.gen_range(0.05..2.0));
        let targets: Vec<i8> = (0..2 * per_side)
            .map(|i| if i < per_side { 1 } else { -1 })
            .collect();
        let dual = SvmDual::new(alphas, targets, patterns)?;
        let q = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
        let check = svm_score_equiv(&cfg, &dual, q.view())?;
        worst = worst.max(check.diff);
        if (check.direct >= 0.0) != (check.hopfield >= 0.0) {
            disagreements += 1;
        }
    }
    Ok(vec![
        Check::threshold("svm-score-identity", worst, tol),
        Check {
            name: "svm-decision-agreement".into(),
            passed: disagreements == 0,
            detail: format!("{disagreements} disagreements over 500 duals"),
        },
    ])
}

/// Shifted HE converges to SHE as beta goes to zero; checked at beta = 1e-6
/// for patterns with entries in [-1, 1].
fn heshe(seed: u64, tol: Option<f64>) -> Result<Vec<Check>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tol = tol.unwrap_or(1e-4);
    let cfg = HopfieldConfig::new(1e-6, false)?;
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let d = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=16);
        let mem = random_memory(&mut rng, d, n);
        let q = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0));
        let he = he_score(&cfg, q.view(), &mem, true)?;
        let she = she_score(q.view(), mem.mean_pattern().view())?;
        worst = worst.max((he - she).abs());
    }
    Ok(vec![Check::threshold("shifted-he-to-she-limit", worst, tol)])
}

/// Boundary-sampling Monte-Carlo at the documented parameters
/// (d = 10, ||mu|| = 3, sigma = 1, eps = 0.5, n = 50, 200 trials).
///
/// Checks the guarantee side (every filtered margin clears the analytic
/// lower bound) and the arm-dominance comparison (filtered margin larger in
/// at least 95% of trials). See the README for the status of the latter.
fn boundary_mc(seed: u64) -> Result<Vec<Check>> {
    let (d, mu_norm, sigma, eps, n, trials) = (10usize, 3.0, 1.0, 0.5, 50usize, 200usize);
    let summary = boundary_mc_experiment(d, mu_norm, sigma, eps, n, trials, seed)?;
    // analytic lower bound on the filtered-arm margin
    let bound = (mu_norm.powi(2) - sigma.sqrt() * mu_norm.powf(1.5) - sigma * sigma * eps / 2.0)
        / (2.0 * (mu_norm.powi(2) + sigma * sigma / n as f64 * (d as f64 + 1.0 / sigma)).sqrt());
    let below_bound = summary
        .margins_filtered
        .iter()
        .filter(|&&m| m < bound)
        .count();
    let wins_needed = (0.95 * trials as f64).ceil() as usize;
    Ok(vec![
        Check {
            name: "filtered-margin-clears-lower-bound".into(),
            passed: below_bound == 0,
            detail: format!(
                "{below_bound} of {trials} trials below bound {bound:.4}; mean filtered margin {:.4}",
                summary.mean_margin_filtered
            ),
        },
        Check {
            name: "filtered-margin-dominates-unconstrained".into(),
            passed: summary.filtered_wins >= wins_needed,
            detail: format!(
                "filtered wins {} of {trials} (needs {wins_needed}); means: filtered {:.4}, unconstrained {:.4}",
                summary.filtered_wins,
                summary.mean_margin_filtered,
                summary.mean_margin_unconstrained
            ),
        },
    ])
}
