//! Acceptance run: one line per criterion, each at its stated tolerance.
//!
//! Exit status is 0 even when a criterion fails so the workspace test run
//! stays usable while a criterion is known to be unattainable here; set
//! `LOA_ACCEPTANCE_STRICT=1` to turn any failure into a non-zero exit.

use std::io::BufRead;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use loa::baselines::{classical_bfgs_spec, gd_spec, LineSearchConfig};
use loa::equivariance::{build_table1, check_equivariance, check_theorem2, violates_monotonicity, Table1Config, Verdict};
use loa::framework::{run, run_with, AlgorithmSpec, ProblemTransform, RunOptions, Trajectory};
use loa::loa_bfgs::{qn_update, run_learned, QuasiNewtonSpec, UpdateGuards};
use loa::loa_model::ModelWeights;
use loa::numerics::{Eager, Matrix, Rng, Vector};
use loa::problems::{
    gen_quadratic_with_spectrum, parse_csv_numeric, parse_libsvm, serialize_libsvm, Dataset, ManifestEntry,
    Problem, ProblemKind, ProblemManifest, Quadratic, Spectrum,
};
use loa::training::{precompute_reference, train, unrolled_loss, BatchItem, TrainConfig, Unroll};

type Outcome = Result<String, String>;

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn run(&mut self, id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let r = f();
        let dt = start.elapsed();
        let over = if dt > budget {
            format!(" [over budget {:.0}s]", budget.as_secs_f64())
        } else {
            String::new()
        };
        self.total += 1;
        match r {
            Ok(detail) => {
                self.passed += 1;
                println!("PASS {id:>2} {name}: {detail} ({:.2}s{over})", dt.as_secs_f64());
            }
            Err(detail) => println!("FAIL {id:>2} {name}: {detail} ({:.2}s{over})", dt.as_secs_f64()),
        }
    }
}

fn model_seed_weights() -> ModelWeights {
    ModelWeights::init_bfgs_coincident(&mut Rng::new(0, "model"))
}

fn training_suite() -> Vec<Problem> {
    ProblemManifest::quadratics(0, 20, 20, 1).build(".".as_ref()).expect("suite builds")
}

fn test_suite() -> Vec<Problem> {
    ProblemManifest::quadratics(0, 20, 10, 1)
        .with_stream("test-problems")
        .build(".".as_ref())
        .expect("suite builds")
}

fn bfgs_run(p: &Problem, k: usize) -> loa::Result<Trajectory> {
    let spec = classical_bfgs_spec(1.0, LineSearchConfig::default());
    let h = spec.default_hyper();
    let s0 = spec.initial_state(p, &h)?;
    run(&spec, p, s0, k, &h)
}

/// `max_k ‖x_k − x̂_k‖ / max_j ‖x_j‖`.
fn iterate_dev(a: &Trajectory, b: &Trajectory) -> f64 {
    if a.iterates.len() != b.iterates.len() {
        return f64::INFINITY;
    }
    let scale = a.iterates.iter().map(Vector::norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iterates
        .iter()
        .zip(&b.iterates)
        .map(|(x, y)| x.sub(y).norm() / scale)
        .fold(0.0, f64::max)
}

fn c1_coincidence() -> Outcome {
    let w = model_seed_weights();
    let mut worst: f64 = 0.0;
    let suite = training_suite();
    for p in &suite {
        let a = bfgs_run(p, 40).map_err(|e| format!("{}: BFGS {e}", p.label))?;
        let b = run_learned(p, &w, 40, 1.0, LineSearchConfig::default()).map_err(|e| format!("{}: {e}", p.label))?;
        worst = worst.max(iterate_dev(&a, &b));
    }
    let msg = format!("max relative deviation {worst:.3e} over {} problems, K = 40", suite.len());
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c2_log2() -> Outcome {
    let suite = training_suite();
    let u = Unroll {
        k: 40,
        segment: 5,
        gamma: 1.0,
    };
    let table = precompute_reference(&suite, u.k, u.segment, u.gamma).map_err(|e| e.to_string())?;
    let items: Vec<BatchItem> = table
        .rows
        .iter()
        .map(|r| BatchItem {
            problem: &suite[r.index],
            reference: &r.gaps,
        })
        .collect();
    if items.is_empty() {
        return Err("no valid reference rows".into());
    }
    let w = model_seed_weights();
    let mut worst: f64 = 0.0;
    for it in &items {
        let l = unrolled_loss(&w, std::slice::from_ref(it), u).map_err(|e| e.to_string())?;
        worst = worst.max((l - std::f64::consts::LN_2).abs());
    }
    let batch = unrolled_loss(&w, &items, u).map_err(|e| e.to_string())?;
    worst = worst.max((batch - std::f64::consts::LN_2).abs());
    let msg = format!("|loss − log 2| ≤ {worst:.3e} on {} problems", items.len());
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3_table1() -> Outcome {
    let weights = ModelWeights::init_random(&mut Rng::new(0, "model"));
    let t = build_table1(&Table1Config::default(), &weights).map_err(|e| e.to_string())?;
    if t.matches_expected() {
        Ok(format!("{} rows × 5 transforms match", t.rows.len()))
    } else {
        Err(t
            .mismatches
            .iter()
            .map(|m| format!("{}/{}: expected {:?}, got {:?}", m.algorithm, m.transform, m.expected, m.observed))
            .collect::<Vec<_>>()
            .join("; "))
    }
}

fn c4_learned_equivariance() -> Outcome {
    let weights = ModelWeights::init_random(&mut Rng::new(0, "model"));
    let mut rng = Rng::new(0, "learned-equivariance");
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in [3usize, 10] {
        let problems = ProblemManifest::quadratics(0, n, 3, 1)
            .with_stream(&format!("learned-equivariance-n{n}"))
            .build(".".as_ref())
            .map_err(|e| e.to_string())?;
        for p in &problems {
            let spec = QuasiNewtonSpec::learned(weights.clone(), 1.0, LineSearchConfig::default());
            let transforms = [
                ProblemTransform::random_translation(n, &mut rng),
                ProblemTransform::random_permutation(n, &mut rng),
                ProblemTransform::GeometricScale(0.1),
                ProblemTransform::GeometricScale(10.0),
                ProblemTransform::FunctionScale(1e-3),
                ProblemTransform::FunctionScale(1e3),
            ];
            for t in &transforms {
                let r = check_equivariance(&spec, t, p, 20, 1e-8, false).map_err(|e| e.to_string())?;
                count += 1;
                worst = worst.max(r.max_rel_iterate_dev);
                if r.verdict != Verdict::Pass {
                    return Err(format!(
                        "{} on {}: deviation {:.3e} ({:?})",
                        t.kind(),
                        p.label,
                        r.max_rel_iterate_dev,
                        r.verdict
                    ));
                }
            }
        }
    }
    Ok(format!("{count} checks pass, max deviation {worst:.3e}"))
}

fn c5_descent_monitor() -> Outcome {
    let mut rng = Rng::new(0, "descent-monitor");
    let spectrum = Spectrum {
        min_low: 1.0,
        min_high: 2.0,
        max_low: 2.0,
        max_high: 4.0,
    };
    let mut worst_grad: f64 = 0.0;
    let mut longest = 0;
    for i in 0..10 {
        let p = gen_quadratic_with_spectrum(10, spectrum, &mut rng.split(&format!("q{i}"))).map_err(|e| e.to_string())?;
        let l = p.lipschitz().ok_or("no Hessian")?;
        let gamma = 1.9 / l;
        let spec = gd_spec(gamma);
        let h = spec.default_hyper();
        let s0 = spec.initial_state(&p, &h).map_err(|e| e.to_string())?;
        let t = run_with(&spec, &p, s0, 500, &h, RunOptions { grad_tol: Some(1e-6) }).map_err(|e| e.to_string())?;
        let v = check_theorem2(&t, l, gamma).map_err(|e| e.to_string())?;
        if !v.hypotheses_met || v.monotone != Some(true) {
            return Err(format!("{}: hypotheses {}, monotone {:?}", p.label, v.hypotheses_met, v.monotone));
        }
        if !(v.final_grad_norm <= 1e-6) {
            return Err(format!("{}: final gradient norm {:.3e}", p.label, v.final_grad_norm));
        }
        worst_grad = worst_grad.max(v.final_grad_norm);
        longest = longest.max(t.steps());
    }
    // Stiff negative control: spectrum {1, 100}, γ = 2.5/L.
    let a = Matrix::from_diag(&Vector::from_slice(&[1.0, 10.0]));
    let q = Quadratic::new(a, Vector::zeros(2), 1.0).map_err(|e| e.to_string())?;
    let stiff = Problem::new(
        std::sync::Arc::new(q),
        Vector::from_slice(&[1.1, 1.1]),
        Vector::from_slice(&[1.0, 1.0]),
        Some(0.0),
        "stiff",
    )
    .map_err(|e| e.to_string())?;
    let l = stiff.lipschitz().ok_or("no Hessian")?;
    let spec = gd_spec(2.5 / l);
    let h = spec.default_hyper();
    let s0 = spec.initial_state(&stiff, &h).map_err(|e| e.to_string())?;
    let t = match run(&spec, &stiff, s0, 50, &h) {
        Ok(t) => t,
        Err(loa::Error::Divergence { partial, .. }) => *partial,
        Err(e) => return Err(e.to_string()),
    };
    if !violates_monotonicity(&t) {
        return Err("γ = 2.5/L on the stiff quadratic stayed monotone".into());
    }
    Ok(format!(
        "10 runs monotone, max final ‖∇f‖ {worst_grad:.2e} within {longest} iterations; γ = 2.5/L violates descent"
    ))
}

fn c6_fd() -> Outcome {
    let problems = ProblemManifest::quadratics(0, 5, 2, 1)
        .with_stream("fd-check")
        .build(".".as_ref())
        .map_err(|e| e.to_string())?;
    let u = Unroll {
        k: 10,
        segment: 5,
        gamma: 1.0,
    };
    let table = precompute_reference(&problems, u.k, u.segment, u.gamma).map_err(|e| e.to_string())?;
    let items: Vec<BatchItem> = table
        .rows
        .iter()
        .map(|r| BatchItem {
            problem: &problems[r.index],
            reference: &r.gaps,
        })
        .collect();
    if items.is_empty() {
        return Err("no valid reference rows".into());
    }
    let w = model_seed_weights().perturbed(&mut Rng::new(0, "fd-perturb"), 0.05);
    let (_, grads) = loa::training::loss_and_grad(&w, &items, u).map_err(|e| e.to_string())?;
    let tape = loa::training::flatten(&grads);
    let fd = loa::training::truncated_fd_grad(&w, &items, u, 1e-6).map_err(|e| e.to_string())?;
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(1e-8);
    let worst = tape
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
        .fold(0.0, f64::max);
    let msg = format!("max relative error {worst:.3e} over {} parameters (floor {floor:.1e})", tape.len());
    if tape.len() == 216 && worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c7_train(weights_out: &mut Option<ModelWeights>) -> Outcome {
    let cfg = TrainConfig::default();
    let suite = training_suite();
    let test = test_suite();
    let out = train(&cfg, &suite, &test, cfg.initial_weights()).map_err(|e| e.to_string())?;
    let first = out.history.first().map(|r| r.mean_train_loss).unwrap_or(f64::NAN);
    *weights_out = Some(out.best.clone());
    let msg = format!(
        "best mean loss {:.4} at epoch {} of {} (epoch 0: {first:.6})",
        out.best_loss, out.best_epoch, cfg.epochs
    );
    if out.best_loss < 0.60 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn final_gap(p: &Problem, t: &Trajectory) -> f64 {
    p.f_star.map_or(f64::NAN, |s| t.final_value() - s)
}

fn c8_transfer(weights: Option<&ModelWeights>) -> Outcome {
    let w = weights.ok_or("no trained weights")?;
    let fresh = test_suite();
    let mut wins = 0;
    for p in &fresh {
        let b = bfgs_run(p, 40).map_err(|e| format!("{}: BFGS {e}", p.label))?;
        if let Ok(l) = run_learned(p, w, 40, 1.0, LineSearchConfig::default()) {
            if final_gap(p, &l) <= final_gap(p, &b) {
                wins += 1;
            }
        }
    }
    let frac = wins as f64 / fresh.len() as f64;

    let data_dir = data_dir();
    let mut sets = vec![
        ProblemManifest::quadratics(0, 100, 3, 1).with_stream("transfer-n100"),
        ProblemManifest {
            seed: 0,
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
    if data_dir.join("diabetes.csv").exists() {
        ridge.push(ManifestEntry {
            kind: ProblemKind::RidgeCsv {
                path: data_dir.join("diabetes.csv"),
                target: 10,
                lambda: 1.0,
            },
            count: 1,
            inits_per_function: 1,
        });
    }
    sets.push(ProblemManifest {
        seed: 0,
        stream: "transfer-ridge".into(),
        init_step: loa::problems::DEFAULT_INIT_STEP,
        entries: ridge,
    });
    let mut checked = 0;
    for m in &sets {
        for p in m.build(".".as_ref()).map_err(|e| e.to_string())? {
            let t = run_learned(&p, w, 100, 1.0, LineSearchConfig::default()).map_err(|e| format!("{}: {e}", p.label))?;
            if !t.iterates.iter().all(Vector::is_finite) {
                return Err(format!("{}: non-finite iterate", p.label));
            }
            if !(t.final_value() <= t.f_values[0]) {
                return Err(format!("{}: f_K {:.4e} > f_0 {:.4e}", p.label, t.final_value(), t.f_values[0]));
            }
            checked += 1;
        }
    }
    let msg = format!(
        "not worse than BFGS on {wins}/{} fresh problems ({:.0}%); {checked} transfer runs finite and decreasing",
        fresh.len(),
        100.0 * frac
    );
    if frac >= 0.7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c9_update() -> Outcome {
    let mut rng = Rng::new(0, "bfgs-update");
    let n = 5;
    let guards = UpdateGuards::default();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r = rng.normal_matrix(n, n);
        let b = r.transpose().matmul(&r).add(&Matrix::identity(n));
        let s = rng.normal_matrix(n, n);
        let a = s.transpose().matmul(&s).add(&Matrix::identity(n));
        let d = rng.normal_vector(n);
        let dg = a.matvec(&d);
        // Textbook inverse update: (I − ρ d Δgᵀ) B (I − ρ Δg dᵀ) + ρ d dᵀ.
        let rho = 1.0 / dg.dot(&d);
        let left = Matrix::identity(n).sub(&Matrix::outer(&d, &dg).scale(rho));
        let right = Matrix::identity(n).sub(&Matrix::outer(&dg, &d).scale(rho));
        let expected = left.matmul(&b).matmul(&right).add(&Matrix::outer(&d, &d).scale(rho));
        let mut ops = Eager;
        let bdg = b.matvec(&dg).to_column();
        let (got, skipped) = qn_update(&mut ops, &b, &dg.to_column(), &d.to_column(), &bdg, &d.to_column(), &guards);
        if skipped {
            return Err("curvature guard skipped a positive-curvature update".into());
        }
        worst = worst.max(got.sub(&expected).max_abs());
    }
    let msg = format!("max entry difference {worst:.3e} over 100 states");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn data_dir() -> PathBuf {
    std::env::var_os("LOA_DATA_DIR").map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
    })
}

/// Row count and largest feature index, read without the library parser.
fn scan_libsvm(path: &std::path::Path) -> std::io::Result<(usize, usize)> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let (mut rows, mut width) = (0, 0);
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        for tok in line.split_whitespace().skip(1) {
            if let Some(i) = tok.split(':').next().and_then(|i| i.parse::<usize>().ok()) {
                width = width.max(i);
            }
        }
    }
    Ok((rows, width))
}

fn c10_parsers() -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    // Round trip on a seeded sparse dataset.
    let mut rng = Rng::new(0, "libsvm-roundtrip");
    let (m, n) = (40, 12);
    let mut feats = Matrix::zeros(m, n);
    for v in feats.as_mut_slice() {
        if rng.uniform(0.0, 1.0) < 0.3 {
            *v = rng.normal(0.0, 2.0);
        }
    }
    for i in 0..m {
        feats.as_mut_slice()[i * n + n - 1] = 1.0;
    }
    let labels = Vector::new((0..m).map(|i| (i % 2) as f64).collect());
    let ds = Dataset {
        features: feats,
        labels,
    };
    let text = serialize_libsvm(&ds);
    match parse_libsvm(text.as_bytes()) {
        Ok(back) if back == ds && serialize_libsvm(&back) == text => notes.push("round trip exact".to_string()),
        Ok(_) => failures.push("round trip differs".to_string()),
        Err(e) => failures.push(format!("round trip: {e}")),
    }

    // Real datasets, checked against an independent scan.
    let dir = data_dir();
    for (name, rows, cols) in [("mushrooms", 8124, 112), ("w8a", 49749, 300)] {
        let path = dir.join(name);
        if !path.exists() {
            failures.push(format!("{name} not found in {}", dir.display()));
            continue;
        }
        let scan = scan_libsvm(&path).map_err(|e| e.to_string())?;
        let parsed = std::fs::File::open(&path)
            .map_err(|e| e.to_string())
            .and_then(|f| parse_libsvm(std::io::BufReader::new(f)).map_err(|e| e.to_string()));
        match parsed {
            Ok(d) if (d.rows(), d.cols()) == scan && scan == (rows, cols) => {
                notes.push(format!("{name} {}×{}", d.rows(), d.cols()))
            }
            Ok(d) => failures.push(format!(
                "{name}: parsed {}×{}, scan {:?}, published {rows}×{cols}",
                d.rows(),
                d.cols(),
                scan
            )),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }

    // CSV standardization on the diabetes table.
    let csv_path = dir.join("diabetes.csv");
    match std::fs::read_to_string(&csv_path) {
        Err(e) => failures.push(format!("{}: {e}", csv_path.display())),
        Ok(raw) => {
            let d = parse_csv_numeric(raw.as_bytes(), 10).map_err(|e| e.to_string())?;
            let raw_target: Vec<f64> = raw
                .lines()
                .skip(1)
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.rsplit(',').next().unwrap().trim().parse().unwrap())
                .collect();
            let mut worst: f64 = 0.0;
            for j in 0..d.cols() {
                let col = d.features.column(j);
                let mean = col.iter().sum::<f64>() / col.len() as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
                worst = worst.max(mean.abs()).max((var - 1.0).abs());
            }
            if d.rows() == raw_target.len() && d.labels.as_slice() == raw_target.as_slice() && worst <= 1e-12 {
                notes.push(format!("csv {}×{} standardized (error {worst:.1e})", d.rows(), d.cols()));
            } else {
                failures.push(format!("csv standardization error {worst:.3e}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!("{}; passed: {}", failures.join("; "), notes.join("; ")))
    }
}

fn main() {
    let mut r = Report { passed: 0, total: 0 };
    let s = Duration::from_secs;
    r.run(1, "BFGS coincidence", s(10), c1_coincidence);
    r.run(2, "epoch-0 loss is log 2", s(30), c2_log2);
    r.run(3, "invariance table", s(60), c3_table1);
    r.run(4, "learned method equivariances", s(60), c4_learned_equivariance);
    r.run(5, "descent monitor", s(30), c5_descent_monitor);
    r.run(6, "unrolled gradient vs finite differences", s(60), c6_fd);
    let mut weights = None;
    r.run(7, "desk-scale training", s(600), || c7_train(&mut weights));
    r.run(8, "transfer", s(300), || c8_transfer(weights.as_ref()));
    r.run(9, "BFGS update oracle", s(5), c9_update);
    r.run(10, "parsers", s(10), c10_parsers);
    println!("{}/{} criteria pass", r.passed, r.total);
    let strict = std::env::var("LOA_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && r.passed != r.total {
        std::process::exit(1);
    }
}
