use kaczmarz::analysis::{beta_upper, grk_bounds, momentum_factors};
use kaczmarz::experiment::{run_experiment, ExperimentSpec, MethodSpec, ProblemSource};
use kaczmarz::linalg::{residual, Problem, RowAccessMatrix, SvdOracle};
use kaczmarz::mtx::{parse_matrix_market, write_matrix_market, ReadOptions};
use kaczmarz::selection::{active_set_gamma, greedy_set, GammaMode, GammaOutcome};
use kaczmarz::solvers::{run, SolverConfig};
use kaczmarz::{gen_random_problem, RandomProblemSpec};
use proptest::prelude::*;
use std::path::Path;

fn matrix_strategy(max_m: usize, max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        prop::collection::vec(-3.0..3.0f64, m * n).prop_map(move |mut v| {
            for i in 0..m {
                let row = &mut v[i * n..(i + 1) * n];
                if row.iter().map(|x| x * x).sum::<f64>() < 1e-3 {
                    row[i % n] = 1.0;
                }
            }
            (m, n, v)
        })
    })
}

fn weights(a: &RowAccessMatrix, r: &[f64]) -> Vec<f64> {
    r.iter().zip(a.row_norms_sq()).map(|(ri, s)| ri * ri / s).collect()
}

fn small_spec() -> impl Strategy<Value = RandomProblemSpec> {
    (3usize..25, 2usize..10, 1.5f64..20.0, any::<u64>()).prop_flat_map(|(m, n, kappa, seed)| {
        (1..=m.min(n)).prop_map(move |r| RandomProblemSpec::new(m, n, r, kappa, seed))
    })
}

proptest! {
    #[test]
    fn greedy_set_contains_argmax_and_clears_mean((m, n, v) in matrix_strategy(8, 6),
                                                   r in prop::collection::vec(-5.0..5.0f64, 8),
                                                   theta in 0.0..=1.0f64) {
        let a = RowAccessMatrix::from_row_major(m, n, v).unwrap();
        let r = &r[..m];
        prop_assume!(r.iter().any(|x| x.abs() > 1e-6));
        let w = weights(&a, r);
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        for mode in [GammaMode::Exact, GammaMode::Frobenius] {
            let gamma = match active_set_gamma(&a, r, mode, None, 0.0).unwrap() {
                GammaOutcome::Gamma { gamma, .. } => gamma,
                GammaOutcome::Converged => unreachable!(),
            };
            let ws = greedy_set(&a, r, gamma, theta).unwrap();
            prop_assert!(!ws.indices.is_empty());
            let argmax = w.iter().position(|&x| x == wmax).unwrap();
            prop_assert!(ws.indices.contains(&argmax));
            for &i in &ws.indices {
                prop_assert!(w[i] >= ws.mean_bound * (1.0 - 1e-12), "w={} mean={}", w[i], ws.mean_bound);
                prop_assert!(w[i] >= ws.threshold);
            }
            for (i, &wi) in w.iter().enumerate() {
                if wi >= ws.threshold {
                    prop_assert!(ws.indices.contains(&i));
                }
            }
        }
    }

    #[test]
    fn greedy_set_is_scale_invariant((m, n, v) in matrix_strategy(8, 6),
                                     r in prop::collection::vec(-5.0..5.0f64, 8),
                                     c in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64]) {
        let a = RowAccessMatrix::from_row_major(m, n, v).unwrap();
        let r = &r[..m];
        prop_assume!(r.iter().any(|x| x.abs() > 1e-6));
        let ca = a.scaled(c).unwrap();
        let cr: Vec<f64> = r.iter().map(|x| c * x).collect();
        let base = greedy_set(&a, r, a.frobenius_sq(), 0.5).unwrap();
        let scaled = greedy_set(&ca, &cr, ca.frobenius_sq(), 0.5).unwrap();
        // Rows within rounding distance of the threshold may flip.
        let w = weights(&a, r);
        for i in 0..m {
            if (w[i] - base.threshold).abs() > 1e-9 * base.threshold.max(1e-300) {
                prop_assert_eq!(base.indices.contains(&i), scaled.indices.contains(&i), "row {}", i);
            }
        }
        let p2 = 2f64.powi((c.abs().log2().round()) as i32) * c.signum();
        let a2 = a.scaled(p2).unwrap();
        let r2: Vec<f64> = r.iter().map(|x| p2 * x).collect();
        prop_assert_eq!(greedy_set(&a2, &r2, a2.frobenius_sq(), 0.5).unwrap().indices, base.indices);
    }

    #[test]
    fn dense_and_sparse_residuals_agree((m, n, v) in matrix_strategy(10, 8),
                                        x in prop::collection::vec(-4.0..4.0f64, 8),
                                        b in prop::collection::vec(-4.0..4.0f64, 10)) {
        let dense = RowAccessMatrix::from_row_major(m, n, v).unwrap();
        let sparse = dense.to_csr().unwrap();
        prop_assert!(sparse.is_sparse());
        let rd = residual(&dense, &x[..n], &b[..m]).unwrap();
        let rs = residual(&sparse, &x[..n], &b[..m]).unwrap();
        let scale = rd.iter().map(|t| t.abs()).fold(1.0, f64::max);
        for (p, q) in rd.iter().zip(&rs) {
            prop_assert!((p - q).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn mtx_write_read_is_identity((m, n, v) in matrix_strategy(12, 9), keep in prop::collection::vec(any::<bool>(), 108)) {
        let mut v = v;
        for (i, x) in v.iter_mut().enumerate() {
            if !keep[i] && (i % n) != ((i / n) % n) {
                *x = 0.0;
            }
        }
        let a = RowAccessMatrix::from_row_major(m, n, v).unwrap().to_csr().unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let back = parse_matrix_market(buf.as_slice(), Path::new("mem.mtx"), ReadOptions::default()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn improved_factor_beats_classical(f in 1.0..100.0f64, u in 0.01..0.999f64, w in 1e-6..1.0f64, k in 2usize..50) {
        let gamma = f * u;
        let s = gamma * w;
        let improved = 1.0 - s / gamma;
        let classical = 1.0 - 0.5 * (f / gamma + 1.0) * s / f;
        prop_assert!(improved < classical);
        let (c, i) = grk_bounds(s, f, gamma, k).unwrap();
        prop_assert!(i <= c);
    }

    #[test]
    fn momentum_sum_nondecreasing_in_beta(alpha in 0.05..=1.0f64, ratio in 1e-4..0.5f64) {
        let (s, f) = (ratio, 1.0);
        let upper = beta_upper(alpha, s, f).unwrap();
        let q0 = momentum_factors(alpha, 0.0, s, f).unwrap().q;
        let mut prev = f64::NEG_INFINITY;
        for j in 0..50 {
            let beta = upper * j as f64 / 50.0;
            let rep = momentum_factors(alpha, beta, s, f).unwrap();
            let sum = rep.gamma1 + rep.gamma2;
            prop_assert!(rep.feasible);
            prop_assert!(sum >= prev - 1e-15);
            prop_assert!(rep.q >= sum - 1e-15 && rep.q < 1.0);
            prop_assert!(rep.q >= q0 - 1e-15);
            prev = sum;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_spectrum_in_range(spec in small_spec()) {
        let p = gen_random_problem(&spec).unwrap();
        let o = SvdOracle::new(&p.a).unwrap();
        prop_assert_eq!(o.rank, spec.rank);
        for s in &o.singular_values[..spec.rank] {
            prop_assert!(*s >= 1.0 - 1e-9 && *s <= spec.kappa + 1e-9);
        }
    }

    #[test]
    fn sigma_min_bounds_row_space_error(spec in small_spec(), y in prop::collection::vec(-3.0..3.0f64, 10)) {
        let p = gen_random_problem(&spec).unwrap();
        let o = SvdOracle::new(&p.a).unwrap();
        let xs = p.x_star.as_ref().unwrap();
        let d = o.project_row_space(&y[..spec.n]);
        let x: Vec<f64> = xs.iter().zip(&d).map(|(a, b)| a + b).collect();
        let ad = residual(&p.a, &x, &p.b).unwrap();
        let lhs: f64 = ad.iter().map(|t| t * t).sum();
        let e: f64 = d.iter().map(|t| t * t).sum();
        prop_assert!(lhs >= o.sigma_min().powi(2) * e * (1.0 - 1e-10) - 1e-20);
    }

    #[test]
    fn iterates_stay_in_row_space(spec in small_spec(), which in 0usize..4, seed in any::<u64>()) {
        let p = gen_random_problem(&spec).unwrap();
        let o = SvdOracle::new(&p.a).unwrap();
        let base = [SolverConfig::grk(), SolverConfig::igrk(), SolverConfig::mgrk(0.3), SolverConfig::rk()][which].clone();
        let cfg = SolverConfig { record_iterates: true, max_iters: 400, ..base.with_seed(seed) };
        let t = run(&p, &cfg).unwrap();
        let xs = p.x_star.as_ref().unwrap();
        for x in t.iterates.as_ref().unwrap() {
            let e: Vec<f64> = x.iter().zip(xs).map(|(a, b)| a - b).collect();
            let null: f64 = o.null_component(&e).iter().map(|t| t * t).sum::<f64>().sqrt();
            prop_assert!(null <= 1e-8, "null component {}", null);
        }
    }

    #[test]
    fn error_is_monotone_without_momentum(spec in small_spec(), alpha in 0.1..1.9f64, exact in any::<bool>(), seed in any::<u64>()) {
        let p = gen_random_problem(&spec).unwrap();
        let base = if exact { SolverConfig::igrk() } else { SolverConfig::grk() };
        let cfg = SolverConfig { alpha, max_iters: 2000, ..base.with_seed(seed) };
        let t = run(&p, &cfg).unwrap();
        let e0 = t.records[0].err_sq.unwrap();
        for w in t.records.windows(2) {
            let (a, b) = (w[0].err_sq.unwrap(), w[1].err_sq.unwrap());
            prop_assert!(b <= a + 1e-12 * e0, "{} -> {}", a, b);
        }
    }

    #[test]
    fn gamma_modes_are_ordered_after_a_projection(spec in small_spec(), i in any::<prop::sample::Index>(), y in prop::collection::vec(-3.0..3.0f64, 10)) {
        let p = gen_random_problem(&spec).unwrap();
        let i = i.index(spec.m);
        // Project a random point onto row i's hyperplane so that r_i = 0.
        let mut x = y[..spec.n].to_vec();
        let row = p.a.row(i);
        let coef = (row.dot(&x) - p.b[i]) / p.a.row_norm_sq(i);
        row.axpy(-coef, &mut x);
        let r = residual(&p.a, &x, &p.b).unwrap();
        let b_inf = p.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tau = 1e-12 * b_inf.max(1.0);
        let g = |mode| match active_set_gamma(&p.a, &r, mode, Some(i), tau).unwrap() {
            GammaOutcome::Gamma { gamma, .. } => gamma,
            GammaOutcome::Converged => 0.0,
        };
        let (ge, gl, gf) = (g(GammaMode::Exact), g(GammaMode::LastRow), g(GammaMode::Frobenius));
        prop_assert!(ge <= gl * (1.0 + 1e-12));
        prop_assert!(gl <= gf);
    }
}

#[test]
fn equal_seeds_give_identical_selections() {
    let p = gen_random_problem(&RandomProblemSpec::new(80, 15, 15, 8.0, 4)).unwrap();
    for cfg in [SolverConfig::grk(), SolverConfig::mgrk(0.4), SolverConfig::rk()] {
        let a = run(&p, &cfg.clone().with_seed(11)).unwrap();
        let b = run(&p, &cfg.clone().with_seed(11)).unwrap();
        assert_eq!(a.selections(), b.selections());
        assert_eq!(a.final_x, b.final_x);
    }
}

#[test]
fn experiment_is_reproducible_from_seed() {
    let spec = ExperimentSpec {
        trials: 3,
        base_seed: 42,
        ..ExperimentSpec::new(
            ProblemSource::Random(RandomProblemSpec::new(60, 12, 9, 6.0, 0)),
            vec![
                MethodSpec { label: "grk".into(), config: SolverConfig::grk() },
                MethodSpec { label: "mgrk".into(), config: SolverConfig::mgrk(0.3) },
            ],
        )
    };
    let strip = |mut r: kaczmarz::ExperimentResult| {
        for m in &mut r.methods {
            m.mean_seconds = 0.0;
            for t in &mut m.trials {
                t.seconds = 0.0;
            }
        }
        r
    };
    assert_eq!(strip(run_experiment(&spec).unwrap()), strip(run_experiment(&spec).unwrap()));
}

#[test]
fn consistent_problem_needs_matching_rhs() {
    let a = RowAccessMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
    assert!(Problem::with_min_norm_solution(a.clone(), vec![1.0, 2.0]).is_ok());
    assert!(Problem::with_min_norm_solution(a, vec![1.0, 3.0]).is_err());
}
