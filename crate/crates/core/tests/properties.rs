use loa::baselines::{gd_spec, heavy_ball_spec, LineSearchConfig};
use loa::equivariance::{check_equivariance, Verdict};
use loa::framework::{run, transform_problem, AlgorithmSpec, ProblemTransform, State};
use loa::loa_bfgs::QuasiNewtonSpec;
use loa::loa_model::ModelWeights;
use loa::numerics::{Matrix, Rng, Vector};
use loa::problems::{gen_quadratic, parse_libsvm, serialize_libsvm, Dataset};
use proptest::prelude::*;

fn transform(kind: u8, n: usize, lambda: f64, rng: &mut Rng) -> ProblemTransform {
    match kind % 5 {
        0 => ProblemTransform::random_translation(n, rng),
        1 => ProblemTransform::random_permutation(n, rng),
        2 => ProblemTransform::random_orthogonal(n, rng),
        3 => ProblemTransform::GeometricScale(lambda),
        _ => ProblemTransform::FunctionScale(lambda),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_point_map(seed in 0u64..1000, n in 1usize..8, kind in 0u8..5, lambda in 0.05f64..20.0) {
        let mut rng = Rng::new(seed, "prop-inverse");
        let t = transform(kind, n, lambda, &mut rng);
        let x = rng.normal_vector(n);
        let back = t.inverse().point(&t.point(&x));
        prop_assert!(back.rel_dist(&x, 1.0) < 1e-12);
        prop_assert!((t.inverse().value(t.value(2.5)) - 2.5).abs() < 1e-12);
    }

    /// `f̂(T x) = λ f(x)` and `∇f̂(T x)` equals the gradient map applied to
    /// `∇f(x)`.
    #[test]
    fn transformed_objective_is_consistent(seed in 0u64..1000, n in 2usize..6, kind in 0u8..5, lambda in 0.1f64..10.0) {
        let mut rng = Rng::new(seed, "prop-objective");
        let p = gen_quadratic(n, &mut rng).unwrap();
        let t = transform(kind, n, lambda, &mut rng);
        let (q, _) = transform_problem(&t, &p, &State::new()).unwrap();
        let x = rng.normal_vector(n);
        let fx = p.value(&x);
        prop_assert!((q.value(&t.point(&x)) - t.value(fx)).abs() <= 1e-10 * t.value(fx).abs().max(1.0));
        let g = t.gradient(&p.gradient(&x));
        prop_assert!(q.gradient(&t.point(&x)).rel_dist(&g, 1e-12) < 1e-10);
    }

    #[test]
    fn libsvm_round_trip(seed in 0u64..1000, m in 1usize..30, n in 1usize..15, density in 0.05f64..1.0) {
        let mut rng = Rng::new(seed, "prop-libsvm");
        let mut f = Matrix::zeros(m, n);
        for v in f.as_mut_slice() {
            if rng.uniform(0.0, 1.0) < density {
                *v = rng.normal(0.0, 3.0);
            }
        }
        // Pin the width so the parsed dataset has all `n` columns.
        for i in 0..m {
            f.as_mut_slice()[i * n + n - 1] = 1.0;
        }
        let labels = Vector::new((0..m).map(|i| ((i + seed as usize) % 2) as f64).collect());
        let ds = Dataset { features: f, labels };
        let text = serialize_libsvm(&ds);
        let back = parse_libsvm(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(serialize_libsvm(&back), text);
    }
}

/// Perturbed coincident weights: far from BFGS, but without the chaotic
/// dynamics of untrained random weights, which amplify rounding in
/// translated runs past the pass tolerance.
fn learned() -> QuasiNewtonSpec {
    let w = ModelWeights::init_bfgs_coincident(&mut Rng::new(1, "model")).perturbed(&mut Rng::new(1, "noise"), 0.1);
    QuasiNewtonSpec::learned(w, 1.0, LineSearchConfig::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Checking `T` and then `T⁻¹` gives deviations within a factor 2 of
    /// each other, for the transforms heavy ball is exactly equivariant to.
    #[test]
    fn report_symmetry(seed in 0u64..500, kind in 0u8..3, lambda in 0.2f64..5.0) {
        let mut rng = Rng::new(seed, "prop-symmetry");
        let p = gen_quadratic(4, &mut rng).unwrap();
        let t = transform(kind, 4, lambda, &mut rng);
        let spec = heavy_ball_spec(0.5, 1.0 / p.lipschitz().unwrap()).unwrap();
        let fwd = check_equivariance(&spec, &t, &p, 15, 1e-8, false).unwrap();
        let (q, _) = transform_problem(&t, &p, &State::new()).unwrap();
        let bwd = check_equivariance(&spec, &t.inverse(), &q, 15, 1e-8, false).unwrap();
        let (a, b) = (fwd.max_rel_iterate_dev, bwd.max_rel_iterate_dev);
        let floor = 1e-13;
        prop_assert!(a.max(floor) <= 2.0 * b.max(floor) && b.max(floor) <= 2.0 * a.max(floor), "{a:e} vs {b:e}");
    }

    /// Value residual is bounded by 10 × iterate deviation × largest
    /// gradient norm along either run. Geometric factors stay near 1 so the
    /// fixed step keeps both runs convergent.
    #[test]
    fn value_residual_bounded_by_iterate_deviation(seed in 0u64..500, kind in 0u8..4, lambda in 0.8f64..1.25) {
        let mut rng = Rng::new(seed, "prop-residual");
        let p = gen_quadratic(4, &mut rng).unwrap();
        let t = transform(kind, 4, lambda, &mut rng);
        let spec = gd_spec(1.0 / p.lipschitz().unwrap());
        let h = spec.default_hyper();
        let traj = run(&spec, &p, spec.initial_state(&p, &h).unwrap(), 15, &h).unwrap();
        let (q, _) = transform_problem(&t, &p, &State::new()).unwrap();
        let hat = run(&spec, &q, spec.initial_state(&q, &h).unwrap(), 15, &h).unwrap();
        let r = check_equivariance(&spec, &t, &p, 15, 1e-8, false).unwrap();
        // Deviations are relative to the transformed run's scales.
        let mapped: Vec<Vector> = traj.iterates.iter().map(|x| t.point(x)).collect();
        let scale = mapped.iter().map(Vector::norm).fold(0.0, f64::max);
        let fscale = traj.f_values.iter().fold(0.0f64, |m, f| m.max(t.value(*f).abs()));
        let gmax = mapped
            .iter()
            .chain(&hat.iterates)
            .map(|x| q.gradient(x).norm())
            .fold(0.0, f64::max);
        let value_abs = r.max_rel_value_dev * fscale;
        let iterate_abs = r.max_rel_iterate_dev * scale;
        prop_assert!(value_abs <= 10.0 * iterate_abs * gmax + 1e-12 * fscale.max(1.0));
    }

    /// The learned method passes every exact-equivariance check on fresh
    /// random weights and problems.
    #[test]
    fn learned_method_equivariant(seed in 0u64..500, kind in 0u8..2, n in 2usize..7) {
        let mut rng = Rng::new(seed, "prop-learned");
        let p = gen_quadratic(n, &mut rng).unwrap();
        let t = transform(kind, n, 1.0, &mut rng);
        let r = check_equivariance(&learned(), &t, &p, 15, 1e-8, false).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass, "deviation {}", r.max_rel_iterate_dev);
    }
}
