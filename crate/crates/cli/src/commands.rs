use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use loa::equivariance::{build_table1, Table1Config};
use loa::framework::{run_with, RunOptions, Trajectory};
use loa::loa_model::{Checkpoint, ModelWeights, WeightFile};
use loa::numerics::Rng;
use loa::problems::{ManifestEntry, Problem, ProblemKind, ProblemManifest};
use loa::training::{history_csv, train_with, TrainConfig};
use loa::Error;

use crate::algos::{self, AlgoOptions};
use crate::out::{prepare, slug, write_atomic, write_json, CliError, CliResult};
use crate::svg::{line_chart, Series};
use crate::{Common, EXIT_DIVERGED, EXIT_MISMATCH, EXIT_OK};

pub const TABLE1_SCHEMA: &str = include_str!("../schema/table1.schema.json");

/// Training and test sets default to `TRAIN_FUNCTIONS` and `TEST_FUNCTIONS`
/// quadratics of dimension `TRAIN_DIM`.
pub const TRAIN_DIM: usize = 20;
pub const TRAIN_FUNCTIONS: usize = 20;
pub const TEST_FUNCTIONS: usize = 10;

/// Problem sets plus the training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub problems: PathBuf,
    #[serde(default)]
    pub test_problems: Option<PathBuf>,
    #[serde(default)]
    pub config: TrainConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AnyManifest {
    Training(TrainingManifest),
    Problems(ProblemManifest),
}

fn base_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn load_problems(path: &Path) -> CliResult<Vec<Problem>> {
    let m: ProblemManifest = read_json(path)?;
    Ok(m.build(&base_of(path))?)
}

fn train_suite(seed: u64) -> ProblemManifest {
    ProblemManifest::quadratics(seed, TRAIN_DIM, TRAIN_FUNCTIONS, 1)
}

fn test_suite(seed: u64) -> ProblemManifest {
    ProblemManifest::quadratics(seed, TRAIN_DIM, TEST_FUNCTIONS, 1).with_stream("test-problems")
}

fn load_weights(path: &Option<PathBuf>) -> CliResult<Option<ModelWeights>> {
    path.as_ref()
        .map(|p| {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?;
            let file: WeightFile = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            Ok(file.into_weights()?)
        })
        .transpose()
}

fn data_dir() -> PathBuf {
    std::env::var_os("LOA_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

// ---------------------------------------------------------------- gen-data

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dimension of the training quadratics.
    #[arg(long, default_value_t = TRAIN_DIM)]
    pub n: usize,
    /// Number of training quadratics.
    #[arg(long, default_value_t = TRAIN_FUNCTIONS)]
    pub count: usize,
    /// Number of held-out quadratics.
    #[arg(long, default_value_t = TEST_FUNCTIONS)]
    pub test_count: usize,
}

#[derive(Serialize)]
struct GenDataConfig<'a> {
    command: &'static str,
    seed: u64,
    out: &'a Path,
    n: usize,
    count: usize,
    test_count: usize,
    data_dir: PathBuf,
}

pub fn gen_data(a: &GenDataArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let seed = a.common.seed;
    prepare(
        out,
        &GenDataConfig {
            command: "gen-data",
            seed,
            out,
            n: a.n,
            count: a.count,
            test_count: a.test_count,
            data_dir: data_dir(),
        },
    )?;
    let mut sets: Vec<(&str, ProblemManifest)> = vec![
        ("problems", ProblemManifest::quadratics(seed, a.n, a.count, 1)),
        (
            "test_problems",
            ProblemManifest::quadratics(seed, a.n, a.test_count, 1).with_stream("test-problems"),
        ),
        ("transfer_n100", ProblemManifest::quadratics(seed, 100, 3, 1).with_stream("transfer-n100")),
        (
            "transfer_logistic",
            ProblemManifest {
                seed,
                stream: "transfer-logistic".into(),
                init_step: loa::problems::DEFAULT_INIT_STEP,
                entries: vec![ManifestEntry {
                    kind: ProblemKind::Logistic {
                        n: 50,
                        m_per_class: 50,
                        eta: 1e-3,
                    },
                    count: 3,
                    inits_per_function: 1,
                }],
            },
        ),
    ];
    let mut ridge = vec![ManifestEntry {
        kind: ProblemKind::RidgeSynthetic {
            rows: 200,
            cols: 20,
            lambda: 0.1,
        },
        count: 2,
        inits_per_function: 1,
    }];
    let diabetes = data_dir().join("diabetes.csv");
    if diabetes.exists() {
        ridge.push(ManifestEntry {
            kind: ProblemKind::RidgeCsv {
                path: fs::canonicalize(&diabetes)?,
                target: 10,
                lambda: 1.0,
            },
            count: 1,
            inits_per_function: 1,
        });
    } else {
        eprintln!("warning: {} not found; ridge transfer set is synthetic only", diabetes.display());
    }
    sets.push((
        "transfer_ridge",
        ProblemManifest {
            seed,
            stream: "transfer-ridge".into(),
            init_step: loa::problems::DEFAULT_INIT_STEP,
            entries: ridge,
        },
    ));

    let mut summary = String::from("set,label,n,f_star\n");
    for (name, m) in &sets {
        let path = out.join(format!("{name}.json"));
        write_json(&path, m)?;
        for p in m.build(out)? {
            summary.push_str(&format!(
                "{name},{},{},{}\n",
                p.label,
                p.dim(),
                p.f_star.map(|f| format!("{f:e}")).unwrap_or_default()
            ));
        }
    }
    write_atomic(&out.join("problems_summary.csv"), summary)?;
    write_json(
        &out.join("train_manifest.json"),
        &TrainingManifest {
            problems: "problems.json".into(),
            test_problems: Some("test_problems.json".into()),
            config: TrainConfig {
                seed,
                ..Default::default()
            },
            seed: Some(seed),
        },
    )?;
    println!("wrote {} problem sets to {}", sets.len(), out.display());
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------- train

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Training manifest, or a plain problem manifest.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    /// Unrolled iterations.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Start from random weights instead of the BFGS-coincident ones.
    #[arg(long)]
    pub no_coincident_init: bool,
    /// Evaluate batch members on separate threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Serialize)]
struct TrainRunConfig<'a> {
    command: &'static str,
    seed: u64,
    out: &'a Path,
    problems: String,
    test_problems: Option<String>,
    train: &'a TrainConfig,
}

pub fn train(a: &TrainArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let seed = a.common.seed;
    let (mut cfg, problems, test, src, test_src) = match &a.problems {
        None => (
            TrainConfig::default(),
            train_suite(seed).build(Path::new("."))?,
            test_suite(seed).build(Path::new("."))?,
            format!("default: {TRAIN_FUNCTIONS} quadratics, n = {TRAIN_DIM}"),
            Some(format!("default: {TEST_FUNCTIONS} quadratics, n = {TRAIN_DIM}")),
        ),
        Some(path) => match read_json::<AnyManifest>(path)? {
            AnyManifest::Problems(m) => (
                TrainConfig::default(),
                m.build(&base_of(path))?,
                Vec::new(),
                path.display().to_string(),
                None,
            ),
            AnyManifest::Training(t) => {
                let base = base_of(path);
                let ps = load_problems(&base.join(&t.problems))?;
                let test = match &t.test_problems {
                    Some(tp) => load_problems(&base.join(tp))?,
                    None => Vec::new(),
                };
                (
                    t.config.clone(),
                    ps,
                    test,
                    base.join(&t.problems).display().to_string(),
                    t.test_problems.as_ref().map(|tp| base.join(tp).display().to_string()),
                )
            }
        },
    };
    cfg.seed = seed;
    if let Some(k) = a.k {
        cfg.k_unroll = k;
    }
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if a.no_coincident_init {
        cfg.coincident_init = false;
    }
    cfg.parallel |= a.parallel;
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    prepare(
        out,
        &TrainRunConfig {
            command: "train",
            seed,
            out,
            problems: src,
            test_problems: test_src,
            train: &cfg,
        },
    )?;
    let ckpt = out.join("checkpoints");
    let save = |name: &str, w: &ModelWeights, epoch: usize, loss: f64| {
        write_json(
            &ckpt.join(name),
            &WeightFile::from_weights(
                w,
                Some(Checkpoint {
                    epoch,
                    mean_loss: loss,
                }),
            ),
        )
    };
    let mut observer = |r: &loa::training::EpochRecord, w: &ModelWeights, best: bool| -> loa::Result<()> {
        if r.epoch == 0 || r.epoch % 10 == 0 {
            println!("epoch {:>4}  mean loss {:.12}", r.epoch, r.mean_train_loss);
        }
        let to_io = |e: CliError| Error::Io(std::io::Error::other(e.message));
        save("last.json", w, r.epoch, r.mean_train_loss).map_err(to_io)?;
        if best {
            save("best.json", w, r.epoch, r.mean_train_loss).map_err(to_io)?;
        }
        Ok(())
    };
    let outcome = match train_with(&cfg, &problems, &test, cfg.initial_weights(), &mut observer) {
        Ok(o) => o,
        Err(Error::TrainingDiverged { epoch, last_good }) => {
            let path = ckpt.join("last_good.json");
            save("last_good.json", &last_good, epoch.saturating_sub(1), f64::NAN)?;
            eprintln!("training diverged at epoch {epoch}; last good weights: {}", path.display());
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e.into()),
    };
    for e in &outcome.reference.excluded {
        eprintln!("warning: excluded '{}': {}", e.label, e.reason);
    }
    write_json(&out.join("reference.json"), &outcome.reference)?;
    write_atomic(&out.join("loss_history.csv"), outcome.history_csv())?;
    write_atomic(&out.join("training_curve.csv"), history_csv(&outcome.history, true))?;
    write_json(
        &out.join("weights.json"),
        &WeightFile::from_weights(
            &outcome.best,
            Some(Checkpoint {
                epoch: outcome.best_epoch,
                mean_loss: outcome.best_loss,
            }),
        ),
    )?;
    println!(
        "best mean loss {:.6} at epoch {} (log 2 = {:.6})",
        outcome.best_loss,
        outcome.best_epoch,
        std::f64::consts::LN_2
    );
    Ok(EXIT_OK)
}

// -------------------------------------------------------------- eval/bench

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub problem: String,
    pub status: String,
    pub iterations: usize,
    pub final_f: f64,
    /// `(f(x_K) − f*)/(f(x₀) − f*)`.
    pub final_rel_subopt: Option<f64>,
    pub final_grad_norm: f64,
    pub wall_time: f64,
    /// Seconds per iteration divided by that of gradient descent on the
    /// same problem, when gradient descent was run.
    pub time_per_iter_rel_gd: Option<f64>,
    pub trajectory_file: Option<String>,
}

fn summarize(name: &str, p: &Problem, t: &Trajectory, status: &str) -> RunSummary {
    RunSummary {
        algorithm: name.into(),
        problem: p.label.clone(),
        status: status.into(),
        iterations: t.steps(),
        final_f: t.f_values.last().copied().unwrap_or(f64::NAN),
        final_rel_subopt: p.f_star.filter(|_| !t.f_values.is_empty()).map(|s| t.relative_suboptimality(s)),
        final_grad_norm: t.grad_norms.last().copied().unwrap_or(f64::NAN),
        wall_time: t.wall_time,
        time_per_iter_rel_gd: None,
        trajectory_file: None,
    }
}

fn run_one(name: &str, p: &Problem, opts: &AlgoOptions, k: usize, tol: Option<f64>) -> CliResult<(Trajectory, String)> {
    let spec = algos::build(name, p, opts)?;
    let h = spec.default_hyper();
    let s0 = spec.initial_state(p, &h)?;
    match run_with(spec.as_ref(), p, s0, k, &h, RunOptions { grad_tol: tol }) {
        Ok(t) => Ok((t, "ok".into())),
        Err(Error::Divergence { iteration, partial }) => Ok((*partial, format!("diverged at {iteration}"))),
        Err(Error::LineSearchFailure { .. }) => Ok((Trajectory::default(), "line search failed".into())),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trained weight file.
    #[arg(long)]
    pub weights: PathBuf,
    /// Problem manifest; defaults to the held-out quadratics.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub line_search: bool,
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    command: &'static str,
    seed: u64,
    out: &'a Path,
    weights: &'a Path,
    problems: String,
    k: usize,
    gamma: Option<f64>,
    line_search: bool,
}

#[derive(Serialize)]
struct EvalRow {
    problem: String,
    bfgs_gap: Option<f64>,
    loa_gap: Option<f64>,
    loa_not_worse: bool,
    loa_finite: bool,
    loa_decreased: bool,
}

#[derive(Serialize)]
struct EvalSummary {
    k: usize,
    problems: usize,
    loa_not_worse_fraction: f64,
    all_finite: bool,
    all_decreased: bool,
    rows: Vec<EvalRow>,
}

pub fn eval(a: &EvalArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let weights = load_weights(&Some(a.weights.clone()))?;
    let problems = match &a.problems {
        Some(p) => load_problems(p)?,
        None => test_suite(a.common.seed).build(Path::new("."))?,
    };
    prepare(
        out,
        &EvalConfig {
            command: "eval",
            seed: a.common.seed,
            out,
            weights: &a.weights,
            problems: a
                .problems
                .as_ref()
                .map_or_else(|| "default held-out quadratics".into(), |p| p.display().to_string()),
            k: a.k,
            gamma: a.gamma,
            line_search: a.line_search,
        },
    )?;
    let opts = AlgoOptions {
        gamma: a.gamma,
        line_search: a.line_search,
        weights,
    };
    let mut rows = Vec::new();
    let mut csv = String::from("problem,bfgs_gap,loa_gap,loa_not_worse,loa_finite,loa_decreased\n");
    for p in &problems {
        let (tb, _) = run_one("bfgs", p, &opts, a.k, None)?;
        let (tl, status) = run_one("loa-bfgs", p, &opts, a.k, None)?;
        let gap = |t: &Trajectory| p.f_star.and_then(|s| t.f_values.last().map(|f| f - s));
        let (gb, gl) = (gap(&tb), gap(&tl));
        let finite = status == "ok" && tl.iterates.iter().all(|x| x.is_finite());
        let row = EvalRow {
            problem: p.label.clone(),
            bfgs_gap: gb,
            loa_gap: gl,
            loa_not_worse: matches!((gb, gl), (Some(b), Some(l)) if l <= b),
            loa_finite: finite,
            loa_decreased: finite && tl.final_value() <= tl.f_values[0],
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.problem,
            gb.map(|v| format!("{v:e}")).unwrap_or_default(),
            gl.map(|v| format!("{v:e}")).unwrap_or_default(),
            row.loa_not_worse,
            row.loa_finite,
            row.loa_decreased
        ));
        rows.push(row);
    }
    let n = rows.len().max(1) as f64;
    let summary = EvalSummary {
        k: a.k,
        problems: rows.len(),
        loa_not_worse_fraction: rows.iter().filter(|r| r.loa_not_worse).count() as f64 / n,
        all_finite: rows.iter().all(|r| r.loa_finite),
        all_decreased: rows.iter().all(|r| r.loa_decreased),
        rows,
    };
    write_atomic(&out.join("eval.csv"), csv)?;
    write_json(&out.join("eval.json"), &summary)?;
    println!(
        "loa-bfgs not worse than BFGS on {:.0}% of {} problems; all finite: {}; all decreased: {}",
        100.0 * summary.loa_not_worse_fraction,
        summary.problems,
        summary.all_finite,
        summary.all_decreased
    );
    Ok(if summary.rows.iter().all(|r| !r.loa_finite) {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    })
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Problem manifest; defaults to the training quadratics.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "gd,bfgs")]
    pub algos: String,
    /// Weight file for loa-bfgs.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Overrides every algorithm's step size.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub line_search: bool,
    /// Stop a run once the gradient norm falls below this value.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also draw one SVG chart per problem.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Serialize)]
struct BenchConfig<'a> {
    command: &'static str,
    seed: u64,
    out: &'a Path,
    problems: String,
    algos: &'a [String],
    weights: Option<&'a Path>,
    k: usize,
    gamma: Option<f64>,
    line_search: bool,
    tol: Option<f64>,
    svg: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchSummary {
    pub k: usize,
    pub algorithms: Vec<String>,
    pub runs: Vec<serde_json::Value>,
}

pub fn bench(a: &BenchArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let names = algos::parse_list(&a.algos)?;
    if a.k == 0 {
        return Err(CliError::usage("--k must be positive"));
    }
    let weights = load_weights(&a.weights)?;
    if names.iter().any(|n| n == "loa-bfgs") && weights.is_none() {
        return Err(CliError::usage("loa-bfgs needs --weights"));
    }
    let problems = match &a.problems {
        Some(p) => load_problems(p)?,
        None => train_suite(a.common.seed).build(Path::new("."))?,
    };
    prepare(
        out,
        &BenchConfig {
            command: "bench",
            seed: a.common.seed,
            out,
            problems: a
                .problems
                .as_ref()
                .map_or_else(|| "default training quadratics".into(), |p| p.display().to_string()),
            algos: &names,
            weights: a.weights.as_deref(),
            k: a.k,
            gamma: a.gamma,
            line_search: a.line_search,
            tol: a.tol,
            svg: a.svg,
        },
    )?;
    let opts = AlgoOptions {
        gamma: a.gamma,
        line_search: a.line_search,
        weights,
    };
    let traj_dir = out.join("trajectories");
    let mut runs: Vec<RunSummary> = Vec::new();
    for p in &problems {
        let mut per_problem = Vec::new();
        for name in &names {
            let (t, status) = run_one(name, p, &opts, a.k, a.tol)?;
            let file = format!("{}__{}.csv", name, slug(&p.label));
            let meta = serde_json::json!({
                "algorithm": name,
                "problem": p.label,
                "status": status,
                "k": a.k,
                "f_star": p.f_star,
                "seed": a.common.seed,
            });
            write_atomic(&traj_dir.join(&file), t.to_csv(p.f_star, &meta))?;
            let mut s = summarize(name, p, &t, &status);
            s.trajectory_file = Some(format!("trajectories/{file}"));
            per_problem.push((s, t));
        }
        let gd_rate = per_problem
            .iter()
            .find(|(s, _)| s.algorithm == "gd")
            .map(|(s, _)| s.wall_time / s.iterations.max(1) as f64);
        for (mut s, _) in per_problem {
            if let Some(g) = gd_rate.filter(|g| *g > 0.0) {
                s.time_per_iter_rel_gd = Some(s.wall_time / s.iterations.max(1) as f64 / g);
            }
            runs.push(s);
        }
        if a.svg {
            write_convergence_svg(out, p, &names, &traj_dir)?;
        }
    }
    let failed = runs.iter().filter(|r| r.status != "ok").count();
    let summary = BenchSummary {
        k: a.k,
        algorithms: names,
        runs: runs.iter().map(|r| serde_json::to_value(r).expect("serializable")).collect(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("{} runs, {} failed; summary in {}", runs.len(), failed, out.join("summary.json").display());
    Ok(if failed == runs.len() { EXIT_DIVERGED } else { EXIT_OK })
}

/// Reads a trajectory CSV back as `(k, f − f*)` pairs.
fn read_gap_series(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut pts = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if let (Some(k), Some(g)) = (cols.first(), cols.get(2)) {
            if let (Ok(k), Ok(g)) = (k.parse::<f64>(), g.parse::<f64>()) {
                pts.push((k, g));
            }
        }
    }
    Ok(pts)
}

fn write_convergence_svg(out: &Path, p: &Problem, names: &[String], traj_dir: &Path) -> CliResult<()> {
    let mut series = Vec::new();
    for name in names {
        let path = traj_dir.join(format!("{}__{}.csv", name, slug(&p.label)));
        series.push(Series {
            name: name.clone(),
            points: read_gap_series(&path)?,
        });
    }
    let svg = line_chart(&p.label, "iteration k", "f(x_k) − f*", &series, true);
    write_atomic(&out.join("plots").join(format!("{}.svg", slug(&p.label))), svg)
}

// ------------------------------------------------------------ equiv-check

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weights for the learned row; random weights from the seed otherwise.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Pass tolerance on the relative iterate deviation.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Negative control: ADAM with the coordinate-wise square replaced by
    /// its mean, which makes the orthogonal cell pass.
    #[arg(long)]
    pub isotropic_adam: bool,
}

pub fn equiv_check(a: &EquivArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let cfg = Table1Config {
        seed: a.common.seed,
        k: a.k,
        tol: a.tol,
        adam_isotropic: a.isotropic_adam,
        ..Default::default()
    };
    let weights = match load_weights(&a.weights)? {
        Some(w) => w,
        None => ModelWeights::init_random(&mut Rng::new(a.common.seed, "model")),
    };
    #[derive(Serialize)]
    struct EquivConfig<'a> {
        command: &'static str,
        out: &'a Path,
        weights: Option<&'a Path>,
        table: &'a Table1Config,
    }
    prepare(
        out,
        &EquivConfig {
            command: "equiv-check",
            out,
            weights: a.weights.as_deref(),
            table: &cfg,
        },
    )?;
    let table = build_table1(&cfg, &weights)?;
    write_atomic(&out.join("table1.md"), table.to_markdown())?;
    write_atomic(&out.join("table1.json"), table.to_json())?;
    write_atomic(&out.join("table1.schema.json"), TABLE1_SCHEMA)?;
    print!("{}", table.to_markdown());
    if table.matches_expected() {
        println!("all cells match the expected table");
        Ok(EXIT_OK)
    } else {
        for m in &table.mismatches {
            println!(
                "mismatch: {} / {}: expected {:?}, observed {:?}",
                m.algorithm, m.transform, m.expected, m.observed
            );
        }
        Ok(EXIT_MISMATCH)
    }
}

// ---------------------------------------------------------------- report

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory holding earlier bench or train output; defaults to --out.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

pub fn report(a: &ReportArgs) -> CliResult<u8> {
    let out = &a.common.out;
    let input = a.input.clone().unwrap_or_else(|| out.clone());
    #[derive(Serialize)]
    struct ReportConfig<'a> {
        command: &'static str,
        out: &'a Path,
        input: &'a Path,
    }
    prepare(
        out,
        &ReportConfig {
            command: "report",
            out,
            input: &input,
        },
    )?;
    let mut md = String::from("# Report\n\n");
    let mut found = false;

    let summary_path = input.join("summary.json");
    if summary_path.exists() {
        found = true;
        let summary: BenchSummary = read_json(&summary_path)?;
        md.push_str(&format!("## Benchmark (K = {})\n\n", summary.k));
        md.push_str("| algorithm | problems | ok | median final relative gap |\n|---|---|---|---|\n");
        let mut by_problem: BTreeMap<String, Vec<Series>> = BTreeMap::new();
        for name in &summary.algorithms {
            let runs: Vec<&serde_json::Value> = summary.runs.iter().filter(|r| r["algorithm"] == *name).collect();
            let ok = runs.iter().filter(|r| r["status"] == "ok").count();
            let mut gaps: Vec<f64> = runs.iter().filter_map(|r| r["final_rel_subopt"].as_f64()).collect();
            gaps.sort_by(f64::total_cmp);
            let median = gaps.get(gaps.len() / 2).map(|g| format!("{g:.3e}")).unwrap_or_else(|| "n/a".into());
            md.push_str(&format!("| {name} | {} | {ok} | {median} |\n", runs.len()));
            for r in runs {
                if let (Some(file), Some(problem)) = (r["trajectory_file"].as_str(), r["problem"].as_str()) {
                    by_problem.entry(problem.to_string()).or_default().push(Series {
                        name: name.clone(),
                        points: read_gap_series(&input.join(file))?,
                    });
                }
            }
        }
        md.push('\n');
        for (problem, series) in &by_problem {
            let file = format!("plots/{}.svg", slug(problem));
            write_atomic(
                &out.join(&file),
                line_chart(problem, "iteration k", "f(x_k) − f*", series, true),
            )?;
            md.push_str(&format!("- [{problem}]({file})\n"));
        }
        md.push('\n');
    }

    let history_path = input.join("loss_history.csv");
    if history_path.exists() {
        found = true;
        let text = fs::read_to_string(&history_path)?;
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for line in text.lines().skip(1) {
            let c: Vec<&str> = line.split(',').collect();
            let e: f64 = c.first().and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
            if let Some(v) = c.get(1).and_then(|v| v.parse::<f64>().ok()) {
                train.push((e, v));
            }
            if let Some(v) = c.get(2).and_then(|v| v.parse::<f64>().ok()) {
                test.push((e, v));
            }
        }
        let last = train.last().map(|p| p.0).unwrap_or(0.0);
        let mut series = vec![Series {
            name: "train".into(),
            points: train.clone(),
        }];
        if !test.is_empty() {
            series.push(Series {
                name: "test".into(),
                points: test,
            });
        }
        series.push(Series {
            name: "log 2".into(),
            points: vec![(0.0, std::f64::consts::LN_2), (last, std::f64::consts::LN_2)],
        });
        write_atomic(&out.join("plots/loss.svg"), line_chart("Training loss", "epoch", "mean loss", &series, false))?;
        let best = train.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        md.push_str(&format!(
            "## Training\n\nBest mean training loss {best:.6} (log 2 = {:.6}). [loss curve](plots/loss.svg)\n",
            std::f64::consts::LN_2
        ));
    }
    if !found {
        return Err(CliError::usage(format!(
            "{} holds neither summary.json nor loss_history.csv",
            input.display()
        )));
    }
    write_atomic(&out.join("report.md"), md)?;
    println!("wrote {}", out.join("report.md").display());
    Ok(EXIT_OK)
}
