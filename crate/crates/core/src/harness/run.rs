//! Execute a config: build the problem, optionally estimate and audit its
//! constants, run the solver, check the bounds and write the artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{DataConfig, ExperimentConfig, ProblemConfig, StartPoint};
use super::trace_csv::emit_trace_csv;
use crate::error::{Error, Result};
use crate::gd::{check_descent, run_gd, verify_gd_rates, GdParams, GdStep};
use crate::ippm::{
    check_inexact_one_step, check_ippm_linear, check_ippm_sublinear, run_ippm, IppmOptions,
};
use crate::linalg;
use crate::ppm::{
    check_linear_rates, check_one_step, check_sublinear_bound, reference_solution, run_ppm,
    BoundCheck, IterationTrace, Method, PpmOptions, RateBounds, RateCheckOptions, RateConstants,
    ReferenceEffort, StepSchedule, StopReason,
};
use crate::problem::{Point, ProblemSpec};
use crate::prox::InnerTolerance;
use crate::regularity::{
    audit_implications, estimate_constants, AuditEntry, EstimationPlan, RegularityReport, Sampling,
};
use crate::zoo::{
    generate_blobs, generate_lasso_data, load_libsvm, make_benchmark, make_ml_problem,
    to_libsvm_string, BenchmarkId, MlData, MlKind, MlProblemParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BOUND_VIOLATION: i32 = 2;

/// Contraction threshold used for the "sustained linear decay" statistic.
pub const CONTRACTION_THRESHOLD: f64 = 0.999;
const RATIO_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Solve(Method),
    Estimate,
    Audit,
    GenData,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
}

impl CheckSummary {
    fn new(name: &str, b: &BoundCheck) -> Self {
        CheckSummary {
            name: name.into(),
            checked: b.checked(),
            violations: b.holds.iter().filter(|h| **h == Some(false)).count(),
            first_violation: b.first_violation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub name: String,
    pub problem: String,
    pub solver: Method,
    pub seed: u64,
    pub iterations: usize,
    pub stop: StopReason,
    pub f_star: Option<f64>,
    pub reference_residual: Option<f64>,
    pub final_gap: Option<f64>,
    pub final_dist: Option<f64>,
    /// "known", "estimated" or "none".
    pub constants_source: &'static str,
    pub rate_constants: Option<RateConstants>,
    /// Factors at the first step size (proximal methods only).
    pub bounds_at_c0: Option<RateBounds>,
    /// ω₁ and ω₂ (gradient descent only).
    pub gd_factors: Option<(f64, f64)>,
    pub cost_ratios: Vec<Option<f64>>,
    pub dist_ratios: Vec<Option<f64>>,
    pub max_cost_ratio: Option<f64>,
    pub max_dist_ratio: Option<f64>,
    /// Longest run of consecutive cost ratios below the contraction threshold.
    pub longest_contracting_run: usize,
    pub gap_strictly_decreasing: Option<bool>,
    pub checks: Vec<CheckSummary>,
    pub audit: Option<Vec<AuditEntry>>,
    pub passed: bool,
}

#[derive(Serialize)]
struct RegularityArtifact<'a> {
    constants: &'a RegularityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<&'a [AuditEntry]>,
}

/// The configured objective; ML problems get a reference f★ installed.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    match &cfg.problem {
        ProblemConfig::Benchmark { id } => Ok(make_benchmark(id.parse::<BenchmarkId>()?)),
        ProblemConfig::Ml {
            kind,
            lambda,
            mu_en,
            rho_svm,
            data,
        } => {
            let params = match kind {
                MlKind::Svm => MlProblemParams::svm(rho_svm.unwrap_or_default()),
                MlKind::Lasso => MlProblemParams::lasso(lambda.unwrap_or_default()),
                MlKind::ElasticNet => MlProblemParams::elastic_net(
                    lambda.unwrap_or_default(),
                    mu_en.unwrap_or_default(),
                ),
            };
            let p = make_ml_problem(params, load_data(data, cfg.seed)?)?;
            Ok(reference_solution(&p, &ReferenceEffort::default())?.0)
        }
    }
}

fn load_data(data: &DataConfig, seed: u64) -> Result<MlData> {
    Ok(match data {
        DataConfig::SyntheticRegression { n, m, s } => {
            generate_lasso_data(*n, *m, *s, seed)?.into()
        }
        DataConfig::SyntheticBlobs { n, d, separation } => {
            MlData::Classification(generate_blobs(*n, *d, *separation, seed))
        }
        DataConfig::Libsvm { path } => MlData::Classification(load_libsvm(path)?),
    })
}

pub fn start_point(cfg: &ExperimentConfig, dim: usize) -> Result<Point> {
    match cfg.x0.clone().unwrap_or(StartPoint::Fill(1.0)) {
        StartPoint::Fill(v) => Ok(Point::from_elem(dim, v)),
        StartPoint::Vector(v) if v.len() == dim => Ok(Point::from(v)),
        StartPoint::Vector(v) => Err(Error::Config {
            field: "x0".into(),
            message: format!("problem has dimension {dim}, x0 has {}", v.len()),
        }),
    }
}

/// Grid over the known bracket in one or two dimensions, else a seeded ball
/// around the solution. ν defaults to f(x_0) − f★; `global` samples without restriction.
pub fn estimation_plan(
    cfg: &ExperimentConfig,
    p: &ProblemSpec,
    x0: &Point,
) -> Result<EstimationPlan> {
    let est = cfg
        .estimation
        .clone()
        .unwrap_or(super::config::EstimationConfig {
            nu: None,
            global: false,
            sampling: None,
            tau_s: None,
        });
    let f_star = p.f_star.ok_or(Error::NeedsReference)?;
    let nu = if est.global {
        Some(f64::INFINITY)
    } else {
        est.nu
    };
    let nu = nu
        .or(cfg.nu)
        .unwrap_or_else(|| (p.finite_value(x0).map(|f| f - f_star).unwrap_or(1.0)).max(1e-6));
    let sampling = est
        .sampling
        .unwrap_or_else(|| match (p.dim(), p.known.bracket) {
            (1, Some((lo, hi))) => Sampling::Grid {
                lo,
                hi,
                count: 10_001,
            },
            (2, Some((lo, hi))) => Sampling::Grid { lo, hi, count: 201 },
            _ => {
                let radius = p
                    .project_solution(x0)
                    .map(|s| linalg::dist(x0.view(), s.view()))
                    .unwrap_or_else(|| linalg::norm(x0.view()))
                    .max(1.0);
                Sampling::Random {
                    count: 2000,
                    radius,
                    center: None,
                    seed: cfg.seed,
                }
            }
        });
    Ok(EstimationPlan {
        nu,
        sampling,
        tau_s: est.tau_s.unwrap_or(1e-9),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn write_regularity(
    out: &Path,
    report: &RegularityReport,
    audit: Option<&[AuditEntry]>,
) -> Result<PathBuf> {
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&RegularityArtifact {
        constants: report,
        audit,
    })?;
    write_file(&path, &(text + "\n"))?;
    Ok(path)
}

/// Run one task for a validated config, writing artifacts under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, task: Task, out: &Path) -> Result<RunOutcome> {
    cfg.validate_fields()?;
    if let Task::Solve(m) = task {
        cfg.validate_for(m)?;
    }
    std::fs::create_dir_all(out)?;
    match task {
        Task::GenData => gen_data(cfg, out),
        Task::Estimate | Task::Audit => {
            let p = build_problem(cfg)?;
            let x0 = start_point(cfg, p.dim())?;
            let report = estimate_constants(&p, &estimation_plan(cfg, &p, &x0)?)?;
            let audit = (task == Task::Audit).then(|| audit_implications(&report, p.rho));
            let passed = audit.as_ref().is_none_or(|a| a.iter().all(|e| !is_fail(e)));
            let path = write_regularity(out, &report, audit.as_deref())?;
            Ok(RunOutcome {
                exit_code: if passed {
                    EXIT_OK
                } else {
                    EXIT_BOUND_VIOLATION
                },
                passed,
                artifacts: vec![path],
                summary: None,
            })
        }
        Task::Solve(method) => solve(cfg, method, out),
    }
}

fn is_fail(e: &AuditEntry) -> bool {
    e.outcome == crate::regularity::AuditOutcome::Fail
}

fn gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let ProblemConfig::Ml { data, .. } = &cfg.problem else {
        return Err(Error::Config {
            field: "problem".into(),
            message: "gen-data needs an ML problem with a synthetic data source".into(),
        });
    };
    let path = match data {
        DataConfig::SyntheticBlobs { n, d, separation } => {
            let path = out.join("data.libsvm");
            write_file(
                &path,
                &to_libsvm_string(&generate_blobs(*n, *d, *separation, cfg.seed)),
            )?;
            path
        }
        DataConfig::SyntheticRegression { n, m, s } => {
            let d = generate_lasso_data(*n, *m, *s, cfg.seed)?;
            let path = out.join("data.csv");
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(&path)?;
            let mut header = vec!["y".to_string()];
            header.extend((1..=*m).map(|j| format!("a{j}")));
            w.write_record(&header)?;
            for (i, row) in d.a.rows().into_iter().enumerate() {
                let mut rec = vec![format!("{:e}", d.y[i])];
                rec.extend(row.iter().map(|v| format!("{v:e}")));
                w.write_record(&rec)?;
            }
            w.flush()?;
            let truth = out.join("x_hat.csv");
            let text: String = d.x_hat.iter().map(|v| format!("{v:e}\n")).collect();
            write_file(&truth, &text)?;
            path
        }
        DataConfig::Libsvm { .. } => {
            return Err(Error::Config {
                field: "problem.data".into(),
                message: "gen-data needs a synthetic data source".into(),
            })
        }
    };
    Ok(RunOutcome {
        exit_code: EXIT_OK,
        passed: true,
        artifacts: vec![path],
        summary: None,
    })
}

fn gd_params(
    cfg: &ExperimentConfig,
    p: &ProblemSpec,
    report: Option<&RegularityReport>,
) -> Result<GdParams> {
    let over = cfg.gd.unwrap_or(super::config::GdConfig {
        step: GdStep::MuOverL2,
        l: None,
        mu: None,
        beta: None,
    });
    let missing = |what: &str| Error::Config {
        field: format!("gd.{what}"),
        message: "not known for this problem; set it or enable estimation".into(),
    };
    let l = over.l.or(p.smoothness).ok_or_else(|| missing("l"))?;
    let mu = over
        .mu
        .or(p.known.mu_r)
        .or(report.and_then(|r| r.mu_r()))
        .ok_or_else(|| missing("mu"))?;
    let beta = over
        .beta
        .or(p.known.pl_beta)
        .or(report.and_then(|r| r.mu_p()).map(|m| m / 2.0))
        .ok_or_else(|| missing("beta"))?;
    let params = GdParams {
        l,
        mu,
        beta,
        step: over.step,
    };
    params.validate()?;
    Ok(params)
}

fn monotone_check(trace: &IterationTrace) -> BoundCheck {
    let holds = trace
        .records
        .windows(2)
        .map(|w| Some(w[1].f <= w[0].f + 1e-12 * (1.0 + w[0].f.abs())))
        .collect();
    BoundCheck::from_holds(holds, 0)
}

fn solve(cfg: &ExperimentConfig, method: Method, out: &Path) -> Result<RunOutcome> {
    let p = build_problem(cfg)?;
    let x0 = start_point(cfg, p.dim())?;
    let mut artifacts = Vec::new();

    let mut report = None;
    let mut audit = None;
    if cfg.estimate || cfg.audit {
        let r = estimate_constants(&p, &estimation_plan(cfg, &p, &x0)?)?;
        if cfg.audit {
            audit = Some(audit_implications(&r, p.rho));
        }
        artifacts.push(write_regularity(out, &r, audit.as_deref())?);
        report = Some(r);
    }

    // Known constants are valid bounds; sampled estimates can be optimistic in
    // high dimension, so they only drive the checks when nothing is known.
    let known = RateConstants::from_known(&p);
    let have_known = known.mu_p.is_some() || known.mu_q.is_some() || known.mu_e.is_some();
    let (consts, source, rate_opts) = match &report {
        _ if have_known => (
            Some(known),
            "known",
            RateCheckOptions {
                nu: cfg.nu.unwrap_or(f64::INFINITY),
                rel_slack: 1e-9,
                ..RateCheckOptions::default()
            },
        ),
        Some(r) => (
            Some(r.rate_constants(p.rho)),
            "estimated",
            RateCheckOptions {
                nu: r.nu,
                rel_slack: 0.1,
                ..RateCheckOptions::default()
            },
        ),
        None => (None, "none", RateCheckOptions::default()),
    };

    let ppm_opts = PpmOptions {
        max_iter: cfg.max_iter,
        inner: InnerTolerance::absolute(cfg.inner_tol.unwrap_or(1e-10)),
        gap_tol: cfg.gap_tol.unwrap_or(1e-10),
        nu: Some(rate_opts.nu).filter(|v| v.is_finite()),
        ..PpmOptions::default()
    };
    let schedule = cfg.schedule.clone().unwrap_or(StepSchedule::constant(1.0));
    let mut checks = Vec::new();
    let mut gd_factors = None;
    let convex = p.is_convex() && p.f_star.is_some();
    let trace = match method {
        Method::Ppm => {
            let t = run_ppm(&p, &x0, &schedule, &ppm_opts)?;
            if let (true, Some(xs)) = (convex, t.x_star.as_ref()) {
                let d0 = linalg::dist(x0.view(), xs.view());
                checks.push(CheckSummary::new(
                    "sublinear",
                    &check_sublinear_bound(&t, d0)?,
                ));
                checks.push(CheckSummary::new("one_step", &check_one_step(&p, &t, xs)?));
            }
            checks.push(CheckSummary::new("monotone", &monotone_check(&t)));
            if let Some(k) = &consts {
                let lr = check_linear_rates(&t, k, &rate_opts);
                checks.push(CheckSummary::new("linear_cost", &lr.cost));
                checks.push(CheckSummary::new("linear_dist", &lr.dist));
            }
            t
        }
        Method::Ippm => {
            let crit = cfg.criterion.expect("validated");
            let opts = IppmOptions {
                ppm: ppm_opts,
                test_mode: cfg.test_mode,
                inexactness: cfg.inexactness.unwrap_or(crate::ippm::Inexactness::Solver),
                ..IppmOptions::default()
            };
            let t = run_ippm(&p, &x0, &schedule, &crit, &opts)?;
            if convex && t.x_star.is_some() {
                checks.push(CheckSummary::new(
                    "ippm_sublinear",
                    &check_ippm_sublinear(&t)?,
                ));
            }
            if cfg.test_mode && t.x_star.is_some() {
                checks.push(CheckSummary::new(
                    "ippm_one_step",
                    &check_inexact_one_step(&t)?,
                ));
            }
            if let Some(k) = &consts {
                let lr = check_ippm_linear(&t, k, &rate_opts);
                checks.push(CheckSummary::new("ippm_linear", &lr.holds));
            }
            t
        }
        Method::Gd => {
            let params = gd_params(cfg, &p, report.as_ref())?;
            gd_factors = Some((params.omega1(), params.omega2()));
            let t = run_gd(&p, &x0, &params, cfg.max_iter)?;
            let rates = verify_gd_rates(&t, &params);
            checks.push(CheckSummary::new("gd_dist", &rates.dist));
            checks.push(CheckSummary::new("gd_cost", &rates.cost));
            checks.push(CheckSummary::new("descent", &check_descent(&t, params.l)));
            t
        }
    };

    let trace_path = out.join("trace.csv");
    emit_trace_csv(&trace, &trace_path)?;
    artifacts.push(trace_path);

    let cost_ratios = trace.cost_ratios(RATIO_FLOOR);
    let dist_ratios = trace.dist_ratios(RATIO_FLOOR);
    let max_of = |v: &[Option<f64>]| v.iter().flatten().copied().reduce(f64::max);
    let mut longest = 0;
    let mut run = 0;
    for r in &cost_ratios {
        run = if r.is_some_and(|r| r < CONTRACTION_THRESHOLD) {
            run + 1
        } else {
            0
        };
        longest = longest.max(run);
    }
    let gaps: Option<Vec<f64>> = trace.records.iter().map(|r| r.cost_gap).collect();
    let passed = checks.iter().all(|c| c.violations == 0)
        && audit.as_ref().is_none_or(|a| a.iter().all(|e| !is_fail(e)));
    let last = trace.last();
    let summary = Summary {
        name: cfg.display_name(),
        problem: p.name.clone(),
        solver: method,
        seed: cfg.seed,
        iterations: trace.iterations(),
        stop: trace.stop,
        f_star: p.f_star,
        reference_residual: p.reference_residual,
        final_gap: last.cost_gap,
        final_dist: last.dist,
        constants_source: source,
        rate_constants: consts,
        bounds_at_c0: (method != Method::Gd)
            .then(|| consts.map(|k| k.bounds(schedule.step(0))))
            .flatten(),
        gd_factors,
        max_cost_ratio: max_of(&cost_ratios),
        max_dist_ratio: max_of(&dist_ratios),
        cost_ratios,
        dist_ratios,
        longest_contracting_run: longest,
        gap_strictly_decreasing: gaps.map(|g| g.windows(2).all(|w| w[1] < w[0])),
        checks,
        audit,
        passed,
    };
    let summary_path = out.join("summary.json");
    write_file(
        &summary_path,
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    artifacts.push(summary_path);

    Ok(RunOutcome {
        exit_code: if cfg.test_mode && !passed {
            EXIT_BOUND_VIOLATION
        } else {
            EXIT_OK
        },
        passed,
        artifacts,
        summary: Some(summary),
    })
}
