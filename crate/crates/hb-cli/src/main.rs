//! `hb`: OOD scoring on precomputed embeddings, metric evaluation, toy
//! boosting experiments, and numerical verification suites.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification-check
//! failure. All commands are deterministic given their flags; the optional
//! `HB_THREADS` variable parallelizes batch evaluations without changing
//! any numeric result.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use hopfield_boosting::boosting::{run_toy_boosting, update_weights, weighted_sample};
use hopfield_boosting::config::{Geometry, HopfieldConfig, ToyConfig};
use hopfield_boosting::error::{ErrorClass, HbError};
use hopfield_boosting::io;
use hopfield_boosting::memory::{normalize_columns, PatternMemory, QueryBatch};
use hopfield_boosting::metrics::{evaluate, ScoredDataset};
use hopfield_boosting::toylab::{
    boundary_agreement, euclidean_heatmap_field, gen_interaction_scene, gen_planar_blobs,
    gen_planar_grid, gen_sphere_grid, gen_sphere_scene, heatmap_field, orthogonal_variance_stat,
    PlanarScene,
};
use hopfield_boosting::verify::{run_suite, Suite};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hb",
    about = "Hopfield-energy OOD detection on precomputed embeddings",
    long_about = "Scores queries against an in-distribution memory and an auxiliary outlier \
                  memory via log-sum-exp energies, evaluates FPR95/AUROC, runs toy-scale \
                  boosting dynamics, and verifies the algebraic identities numerically.\n\n\
                  Memories hold one embedding per file row; at full scale they are typically \
                  tens of thousands of random samples from the ID and AUX sets. Exit codes: \
                  0 ok, 1 usage error, 2 data error, 3 verification failure.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score query embeddings against ID and AUX memories (higher = more ID)
    Score(ScoreArgs),
    /// Compute FPR95/AUROC from ID and OOD score files
    Eval(EvalArgs),
    /// Compute boundary-energy resampling weights for an AUX pool
    Weights(WeightsArgs),
    /// Draw indices from a weight file (categorical, with replacement)
    Sample(SampleArgs),
    /// Run a toy boosting experiment and export its trajectory
    Toy(ToyArgs),
    /// Run a numerical verification suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ScoreArgs {
    /// ID memory embeddings (binary or CSV, auto-detected)
    #[arg(long, value_name = "PATH")]
    id_emb: PathBuf,
    /// AUX memory embeddings
    #[arg(long, value_name = "PATH")]
    aux_emb: PathBuf,
    /// Query embeddings, one score per query
    #[arg(long, value_name = "PATH")]
    query: PathBuf,
    /// Inverse temperature
    #[arg(long)]
    beta: f64,
    /// Skip unit-normalization of memories and queries
    #[arg(long)]
    no_normalize: bool,
    /// Output CSV (index,value)
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV of scores on held-out ID data
    #[arg(long, value_name = "PATH")]
    scores_id: PathBuf,
    /// CSV of scores on OOD data
    #[arg(long, value_name = "PATH")]
    scores_ood: PathBuf,
    /// True-positive-rate target for the threshold
    #[arg(long, default_value_t = 0.95)]
    tpr: f64,
    /// Output metrics JSON
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct WeightsArgs {
    /// ID memory embeddings
    #[arg(long, value_name = "PATH")]
    id_emb: PathBuf,
    /// AUX memory embeddings
    #[arg(long, value_name = "PATH")]
    aux_emb: PathBuf,
    /// AUX pool to weight (often the same file as --aux-emb)
    #[arg(long, value_name = "PATH")]
    pool: PathBuf,
    /// Inverse temperature
    #[arg(long)]
    beta: f64,
    /// Output CSV (index,value)
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Weight CSV as written by `hb weights`
    #[arg(long, value_name = "PATH")]
    weights: PathBuf,
    /// Number of draws
    #[arg(long)]
    n: usize,
    /// RNG seed
    #[arg(long)]
    seed: u64,
    /// Output CSV (draw,index)
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct ToyArgs {
    /// Scene: sphere | blobs | interaction
    scene: String,
    /// Optional JSON run config (flat keys; flags override)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_growth: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    resample_every: Option<usize>,
    #[arg(long)]
    batch_n: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sphere dimension (sphere scene)
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// ID pool size (sphere) or per-class count (planar scenes)
    #[arg(long)]
    n_id: Option<usize>,
    /// AUX pool size
    #[arg(long)]
    n_aux: Option<usize>,
    /// ID concentration around the pole (sphere scene)
    #[arg(long, default_value_t = 4.0)]
    concentration: f64,
    /// Blob separation (planar scenes)
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Blob spread (planar scenes)
    #[arg(long, default_value_t = 0.8)]
    spread: f64,
    /// Half-width of the uniform AUX square (interaction scene)
    #[arg(long, default_value_t = 4.0)]
    aux_halfwidth: f64,
    /// Output directory (trajectory, heatmaps, summary)
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: gradcheck | identities | rbf | svm | heshe | boundary-mc
    suite: String,
    /// Base seed for the randomized checks
    #[arg(long, default_value_t = 12345)]
    seed: u64,
    /// Tolerance override (where the suite uses one)
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Weights(args) => cmd_weights(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Toy(args) => cmd_toy(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
            })
        }
    }
}

fn load_memory(path: &Path) -> Result<PatternMemory<f64>, HbError> {
    io::read_embeddings(path, io::detect_format(path)?)
}

fn cmd_score(args: ScoreArgs) -> Result<u8, HbError> {
    let cfg = HopfieldConfig::new(args.beta, !args.no_normalize)?;
    let mut id_mem = load_memory(&args.id_emb)?;
    let mut aux_mem = load_memory(&args.aux_emb)?;
    let mut queries = load_memory(&args.query)?;
    if !args.no_normalize {
        id_mem = normalize_columns(id_mem.data())?;
        aux_mem = normalize_columns(aux_mem.data())?;
        queries = normalize_columns(queries.data())?;
    }
    let batch = QueryBatch::new(queries.into_data())?;
    let scores = hopfield_boosting::energy::score_batch(&cfg, &batch, &id_mem, &aux_mem)?;
    io::write_scores(&args.out, scores.as_slice().expect("contiguous"))?;
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8, HbError> {
    let id = io::read_scores(&args.scores_id)?;
    let ood = io::read_scores(&args.scores_ood)?;
    let metrics = evaluate(&ScoredDataset::new(id, ood)?, args.tpr)?;
    io::write_metrics(&args.out, &metrics)?;
    Ok(0)
}

fn cmd_weights(args: WeightsArgs) -> Result<u8, HbError> {
    let cfg = HopfieldConfig::new(args.beta, true)?;
    let id_mem = normalize_columns(load_memory(&args.id_emb)?.data())?;
    let aux_mem = normalize_columns(load_memory(&args.aux_emb)?.data())?;
    let pool = QueryBatch::new(normalize_columns(load_memory(&args.pool)?.data())?.into_data())?;
    let weights = update_weights(&cfg, &pool, &id_mem, &aux_mem)?;
    io::write_weights(&args.out, &weights)?;
    Ok(0)
}

fn cmd_sample(args: SampleArgs) -> Result<u8, HbError> {
    let weights = io::read_weights(&args.weights)?;
    let indices = weighted_sample(&weights, args.n, args.seed)?;
    io::write_indices(&args.out, &indices)?;
    Ok(0)
}

fn cmd_toy(args: ToyArgs) -> Result<u8, HbError> {
    let base = match &args.config {
        Some(path) => io::parse_config(path)?,
        None => ToyConfig::default(),
    };
    let geometry = match args.scene.as_str() {
        "sphere" => Geometry::Sphere,
        "blobs" | "interaction" => Geometry::Euclidean,
        other => {
            return Err(HbError::InvalidParameter {
                name: "scene",
                reason: format!("unknown scene {other:?}; expected sphere, blobs, or interaction"),
            })
        }
    };
    let cfg = ToyConfig {
        beta: args.beta.unwrap_or(if args.scene == "blobs" { 2.0 } else { base.beta }),
        lambda: args.lambda.unwrap_or(base.lambda),
        lr: args.lr.unwrap_or(base.lr),
        lr_growth: args.lr_growth.unwrap_or(base.lr_growth),
        steps: args.steps.unwrap_or(base.steps),
        resample_every: args.resample_every.unwrap_or(base.resample_every),
        batch_n: args.batch_n.unwrap_or(base.batch_n),
        record_every: args.record_every.unwrap_or(base.record_every),
        seed: args.seed.unwrap_or(base.seed),
        geometry,
    };
    cfg.validate()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| HbError::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;

    match args.scene.as_str() {
        "sphere" => toy_sphere(&args, cfg),
        "blobs" => toy_blobs(&args, cfg, false),
        _ => toy_blobs(&args, cfg, true),
    }
}

fn toy_sphere(args: &ToyArgs, mut cfg: ToyConfig) -> Result<u8, HbError> {
    let n_id = args.n_id.unwrap_or(60);
    let n_aux = args.n_aux.unwrap_or(60);
    cfg.batch_n = cfg.batch_n.min(n_id).min(n_aux);
    let scene = gen_sphere_scene(args.dim, n_id, n_aux, args.concentration, cfg.seed)?;
    let hcfg = cfg.hopfield()?;
    let grid = gen_sphere_grid(args.dim, 1000, cfg.seed.wrapping_add(1))?;

    let field = heatmap_field(&hcfg, &scene.id_pool, &scene.aux_pool, &grid)?;
    io::write_field_csv(
        args.out_dir.join("heatmap_initial.csv"),
        &grid,
        field.as_slice().expect("contiguous"),
    )?;

    let traj = run_toy_boosting(&cfg, &scene.id_pool, &scene.aux_pool, None, false)?;
    io::write_trajectory(&args.out_dir, &traj)?;

    let last = traj.snapshots.last().expect("at least the initial snapshot");
    let final_id = PatternMemory::new(last.id_patterns.clone())?;
    let final_aux = PatternMemory::new(last.aux_patterns.clone())?;
    let field = heatmap_field(&hcfg, &final_id, &final_aux, &grid)?;
    io::write_field_csv(
        args.out_dir.join("heatmap_final.csv"),
        &grid,
        field.as_slice().expect("contiguous"),
    )?;

    // weighted vs uniform subsample agreement on the initial pools
    let pool = QueryBatch::new(scene.aux_pool.data().clone())?;
    let weights = update_weights(&hcfg, &pool, &scene.id_pool, &scene.aux_pool)?;
    let n_sub = cfg.batch_n;
    let w_idx = weighted_sample(&weights, n_sub, cfg.seed.wrapping_add(2))?;
    let uniform = hopfield_boosting::boosting::SampleWeights::<f64>::uniform(n_aux)?;
    let u_idx = weighted_sample(&uniform, n_sub, cfg.seed.wrapping_add(3))?;
    let id_sub = scene
        .id_pool
        .select(&weighted_sample(
            &hopfield_boosting::boosting::SampleWeights::<f64>::uniform(n_id)?,
            n_sub,
            cfg.seed.wrapping_add(4),
        )?)?;
    let agree_w = boundary_agreement(
        &hcfg,
        &scene.id_pool,
        &scene.aux_pool,
        &id_sub,
        &scene.aux_pool.select(&w_idx)?,
        &grid,
    )?;
    let agree_u = boundary_agreement(
        &hcfg,
        &scene.id_pool,
        &scene.aux_pool,
        &id_sub,
        &scene.aux_pool.select(&u_idx)?,
        &grid,
    )?;

    let cross_dots: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mut sum = 0.0;
            for i in 0..s.id_patterns.ncols() {
                for j in 0..s.aux_patterns.ncols() {
                    sum += s.id_patterns.column(i).dot(&s.aux_patterns.column(j));
                }
            }
            sum / (s.id_patterns.ncols() * s.aux_patterns.ncols()) as f64
        })
        .collect();

    let summary = serde_json::json!({
        "scene": "sphere",
        "l_ood_initial": traj.snapshots.first().map(|s| s.l_ood),
        "l_ood_final": traj.snapshots.last().map(|s| s.l_ood),
        "cross_class_dot_per_snapshot": cross_dots,
        "boundary_agreement_weighted": agree_w,
        "boundary_agreement_uniform": agree_u,
    });
    write_summary(&args.out_dir, &summary)?;
    Ok(0)
}

fn toy_blobs(args: &ToyArgs, mut cfg: ToyConfig, interaction: bool) -> Result<u8, HbError> {
    let n_per_class = args.n_id.unwrap_or(if interaction { 25 } else { 35 });
    let scene = if interaction {
        gen_interaction_scene(
            n_per_class,
            args.n_aux.unwrap_or(100),
            args.separation,
            args.spread,
            args.aux_halfwidth,
            cfg.seed,
        )?
    } else {
        gen_planar_blobs(n_per_class, args.separation, args.spread, cfg.seed)?
    };
    cfg.batch_n = cfg.batch_n.min(scene.id_pool.len()).min(scene.aux_pool.len());
    let hcfg = cfg.hopfield()?;
    let grid = planar_grid_for(&scene)?;

    let field = euclidean_heatmap_field(&hcfg, &scene.id_pool, &scene.aux_pool, &grid)?;
    io::write_field_csv(
        args.out_dir.join("heatmap_initial.csv"),
        &grid,
        field.as_slice().expect("contiguous"),
    )?;

    let labels = scene.labels.as_deref();
    let traj = run_toy_boosting(&cfg, &scene.id_pool, &scene.aux_pool, labels, interaction)?;
    io::write_trajectory(&args.out_dir, &traj)?;

    let first = traj.snapshots.first().expect("initial snapshot");
    let last = traj.snapshots.last().expect("initial snapshot");
    let final_id = PatternMemory::new(last.id_patterns.clone())?;
    let final_aux = PatternMemory::new(last.aux_patterns.clone())?;
    let field = euclidean_heatmap_field(&hcfg, &final_id, &final_aux, &grid)?;
    io::write_field_csv(
        args.out_dir.join("heatmap_final.csv"),
        &grid,
        field.as_slice().expect("contiguous"),
    )?;

    let var_pair = |id: &ndarray::Array2<f64>, aux: &ndarray::Array2<f64>| -> Result<(f64, f64), HbError> {
        let (vo_id, vp_id) = orthogonal_variance_stat(&scene, &PatternMemory::new(id.clone())?)?;
        let (vo_aux, vp_aux) = orthogonal_variance_stat(&scene, &PatternMemory::new(aux.clone())?)?;
        Ok((vo_id + vo_aux, vp_id + vp_aux))
    };
    let (vo0, vp0) = var_pair(&first.id_patterns, &first.aux_patterns)?;
    let (vo1, vp1) = var_pair(&last.id_patterns, &last.aux_patterns)?;

    let summary = serde_json::json!({
        "scene": if interaction { "interaction" } else { "blobs" },
        "l_ood_initial": first.l_ood,
        "l_ood_final": last.l_ood,
        "ce_initial": first.ce,
        "ce_final": last.ce,
        "var_orth_initial": vo0,
        "var_orth_final": vo1,
        "var_par_initial": vp0,
        "var_par_final": vp1,
    });
    write_summary(&args.out_dir, &summary)?;
    Ok(0)
}

fn planar_grid_for(scene: &PlanarScene) -> Result<QueryBatch<f64>, HbError> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for mem in [&scene.id_pool, &scene.aux_pool] {
        for i in 0..mem.len() {
            for j in 0..2 {
                lo[j] = lo[j].min(mem.column(i)[j]);
                hi[j] = hi[j].max(mem.column(i)[j]);
            }
        }
    }
    let margin = 0.2 * ((hi[0] - lo[0]).max(hi[1] - lo[1])).max(1e-3);
    gen_planar_grid(
        lo[0] - margin,
        hi[0] + margin,
        lo[1] - margin,
        hi[1] + margin,
        60,
        60,
    )
}

fn write_summary(dir: &Path, summary: &serde_json::Value) -> Result<(), HbError> {
    let path = dir.join("summary.json");
    let body = serde_json::to_string_pretty(summary).expect("serializable summary");
    std::fs::write(&path, body + "\n").map_err(|e| HbError::Io { path, source: e })
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, HbError> {
    let suite: Suite = args.suite.parse()?;
    let report = run_suite(suite, args.seed, args.tol)?;
    println!("suite: {} (seed {})", report.suite, args.seed);
    for check in &report.checks {
        println!(
            "  [{}] {:<40} {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if report.passed() {
        println!("result: all {} checks passed", report.checks.len());
        Ok(0)
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        println!("result: {failed} of {} checks failed", report.checks.len());
        Ok(EXIT_VERIFY)
    }
}
