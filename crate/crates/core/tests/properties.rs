use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proxlab::harness::{parse_trace_csv, write_trace_csv, ExperimentConfig, TraceRow};
use proxlab::linalg;
use proxlab::ppm::{reference_solution, run_ppm, PpmOptions, StepSchedule};
use proxlab::prox::{prox, InnerTolerance};
use proxlab::regularity::{estimate_constants, EstimationPlan};
use proxlab::zoo::{
    generate_lasso_data, make_benchmark, make_ml_problem, parse_libsvm_str, to_libsvm_string,
    BenchmarkId, DataSource, Dataset, MlData, MlProblemParams,
};
use proxlab::ProblemSpec;

fn convex_benchmarks() -> Vec<ProblemSpec> {
    vec![
        make_benchmark(BenchmarkId::Quad1d),
        make_benchmark(BenchmarkId::QuadQuartic),
        make_benchmark(BenchmarkId::AnisoQuad(9.0)),
    ]
}

fn lasso(seed: u64) -> ProblemSpec {
    let data = generate_lasso_data(6, 10, 3, seed).unwrap();
    make_ml_problem(MlProblemParams::lasso(1.0), data.into()).unwrap()
}

fn tight() -> InnerTolerance {
    InnerTolerance::absolute(1e-13).with_budget(1_000_000)
}

fn point(dim: usize, raw: &[f64]) -> Array1<f64> {
    raw.iter().copied().cycle().take(dim).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_firmly_nonexpansive(
        which in 0usize..4,
        c in 0.05f64..4.0,
        a in prop::collection::vec(-4.0f64..4.0, 10),
        b in prop::collection::vec(-4.0f64..4.0, 10),
    ) {
        let p = if which < 3 { convex_benchmarks().swap_remove(which) } else { lasso(1) };
        let (x, y) = (point(p.dim(), &a), point(p.dim(), &b));
        let px = prox(&p, &x, c, &tight()).unwrap().point;
        let py = prox(&p, &y, c, &tight()).unwrap().point;
        let d = &px - &py;
        prop_assert!(d.dot(&d) <= (&x - &y).dot(&d) + 1e-9);
    }

    #[test]
    fn ppm_never_increases_the_objective(which in 0usize..5, c_frac in 0.05f64..0.95, x0 in -5.0f64..5.0) {
        let id = BenchmarkId::all()[which];
        let p = make_benchmark(id);
        // Any step with 1/c > ρ; convex problems take c in (0.05, 0.95)·10.
        let c = if p.rho > 0.0 { c_frac / p.rho } else { 10.0 * c_frac };
        let opts = PpmOptions { max_iter: 40, ..PpmOptions::default() };
        let t = run_ppm(&p, &Array1::from_elem(p.dim(), x0), &StepSchedule::constant(c), &opts).unwrap();
        for w in t.records.windows(2) {
            prop_assert!(w[1].f <= w[0].f + 1e-10 * (1.0 + w[0].f.abs()), "{id}: {} -> {}", w[0].f, w[1].f);
        }
    }

    #[test]
    fn convex_ppm_is_fejer_monotone(which in 0usize..3, c in 0.05f64..5.0, x0 in -5.0f64..5.0) {
        let p = convex_benchmarks().swap_remove(which);
        let opts = PpmOptions { max_iter: 30, ..PpmOptions::default() };
        let t = run_ppm(&p, &Array1::from_elem(p.dim(), x0), &StepSchedule::constant(c), &opts).unwrap();
        for w in t.records.windows(2) {
            prop_assert!(w[1].dist.unwrap() <= w[0].dist.unwrap() + 1e-12);
        }
    }

    #[test]
    fn certificate_bounds_distance_to_exact_prox(
        seed in 0u64..50,
        c in 0.05f64..2.0,
        z in prop::collection::vec(-3.0f64..3.0, 10),
        loose in 1e-6f64..1e-2,
    ) {
        // The subproblem is (1/c)-strongly convex, so ‖x − prox(z)‖ ≤ c·r.
        let p = lasso(seed);
        let z = Array1::from(z);
        let rough = prox(&p, &z, c, &InnerTolerance::absolute(loose)).unwrap();
        let exact = prox(&p, &z, c, &tight()).unwrap();
        let gap = linalg::dist(rough.point.view(), exact.point.view());
        prop_assert!(gap <= c * rough.residual_norm + c * exact.residual_norm + 1e-12);
    }

    #[test]
    fn weakly_convex_certificate(c_frac in 0.05f64..0.95, z in -4.0f64..3.0, loose in 1e-8f64..1e-3) {
        // Modulus of the subproblem is 1/c − ρ.
        let p = make_benchmark(BenchmarkId::WcPiecewise);
        let c = c_frac / p.rho;
        let z = Array1::from_elem(1, z);
        let rough = prox(&p, &z, c, &InnerTolerance::absolute(loose)).unwrap();
        let exact = prox(&p, &z, c, &tight()).unwrap();
        let m = 1.0 / c - p.rho;
        let gap = linalg::dist(rough.point.view(), exact.point.view());
        prop_assert!(gap <= (rough.residual_norm + exact.residual_norm) / m + 1e-12);
    }

    #[test]
    fn estimates_are_monotone_in_nu(nu1 in 0.05f64..3.0, extra in 0.0f64..5.0) {
        let p = make_benchmark(BenchmarkId::QuadQuartic);
        let nu2 = nu1 + extra;
        let r1 = estimate_constants(&p, &EstimationPlan::grid(nu1, -2.0, 2.0, 1001)).unwrap();
        let r2 = estimate_constants(&p, &EstimationPlan::grid(nu2, -2.0, 2.0, 1001)).unwrap();
        for (a, b) in [(r1.mu_r(), r2.mu_r()), (r1.mu_p(), r2.mu_p()), (r1.mu_q(), r2.mu_q()), (r1.mu_s(), r2.mu_s())] {
            prop_assert!(a.unwrap() >= b.unwrap() - 1e-12);
        }
        prop_assert!(r1.mu_e().unwrap() <= r2.mu_e().unwrap() + 1e-12);
    }

    #[test]
    fn libsvm_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_libsvm_str(&text, None);
    }

    #[test]
    fn libsvm_structured_input_never_panics(
        lines in prop::collection::vec(("[-+]?[0-2]", prop::collection::vec((0usize..6, -1e3f64..1e3), 0..4)), 0..6),
    ) {
        let text: String = lines
            .iter()
            .map(|(l, feats)| {
                let f: Vec<String> = feats.iter().map(|(i, v)| format!("{i}:{v}")).collect();
                format!("{l} {}\n", f.join(" "))
            })
            .collect();
        let _ = parse_libsvm_str(&text, None);
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = ExperimentConfig::from_json(&text);
    }

    #[test]
    fn trace_parser_never_panics(body in "[0-9e.,+\\-a-z\\n]{0,200}") {
        let text = format!("k,c_k,f,cost_gap,dist_S,residual_norm,eps_k,delta_k,criterion_ok\n{body}");
        let _ = parse_trace_csv(&text);
    }

    #[test]
    fn libsvm_round_trip(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..8)) {
        let n = rows.len();
        let features = Array2::from_shape_vec((n, 3), rows.concat()).unwrap();
        let labels: Array1<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset { features, labels, source: DataSource::Synthetic { seed: 0 } };
        let (a, y) = parse_libsvm_str(&to_libsvm_string(&ds), Some(3)).unwrap();
        prop_assert_eq!(a, ds.features);
        prop_assert_eq!(y, ds.labels);
    }

    #[test]
    fn trace_csv_round_trip(c in 0.01f64..3.0, x0 in -5.0f64..5.0, which in 0usize..5) {
        let p = make_benchmark(BenchmarkId::all()[which]);
        let c = if p.rho > 0.0 { c.min(0.9 / p.rho) } else { c };
        let opts = PpmOptions { max_iter: 10, ..PpmOptions::default() };
        let t = run_ppm(&p, &Array1::from_elem(p.dim(), x0), &StepSchedule::constant(c), &opts).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let rows = parse_trace_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(rows, TraceRow::from_trace(&t));
    }
}

#[test]
fn grid_refinement_is_stable() {
    for (id, lo, hi, nu) in [
        (BenchmarkId::Quad1d, -1.0, 1.0, 1.0),
        (BenchmarkId::QuadQuartic, -2.0, 2.0, 1.0),
        (BenchmarkId::WcPiecewise, -2.0, 0.0, 1.0),
    ] {
        let p = make_benchmark(id);
        let coarse = estimate_constants(&p, &EstimationPlan::grid(nu, lo, hi, 5001)).unwrap();
        let fine = estimate_constants(&p, &EstimationPlan::grid(nu, lo, hi, 10_001)).unwrap();
        for (name, a, b) in [
            ("mu_r", coarse.mu_r(), fine.mu_r()),
            ("mu_e", coarse.mu_e(), fine.mu_e()),
            ("mu_p", coarse.mu_p(), fine.mu_p()),
            ("mu_q", coarse.mu_q(), fine.mu_q()),
        ] {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert!((a - b).abs() <= 0.02 * b.abs(), "{id} {name}: {a} vs {b}");
        }
    }
}

#[test]
fn reference_solution_matches_closed_form() {
    // ½(x − 4)² + |x| + ½x² is minimized at 3/2 with value 23/4.
    let p = make_ml_problem(
        MlProblemParams::elastic_net(1.0, 1.0),
        MlData::Regression {
            a: Array2::eye(1),
            y: ndarray::array![4.0],
        },
    )
    .unwrap();
    let (_, r) = reference_solution(&p, &Default::default()).unwrap();
    assert!((r.point[0] - 1.5).abs() < 1e-9);
    assert!((r.value - 5.75).abs() < 1e-12);
}
