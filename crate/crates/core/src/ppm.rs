//! Exact proximal point method x_{k+1} = prox_{c_k,f}(x_k) and checks of its
//! sublinear, one-step and linear convergence bounds on a recorded trace.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{min_norm_subgradient, Point, ProblemSpec, SinglePoint};
use crate::prox::{self, InnerTolerance};

/// Step sizes c_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant {
        c: f64,
    },
    /// Explicit values; the last one repeats.
    Sequence {
        values: Vec<f64>,
    },
    /// c_k = c0 · growthᵏ.
    Geometric {
        c0: f64,
        growth: f64,
    },
}

impl StepSchedule {
    pub fn constant(c: f64) -> Self {
        StepSchedule::Constant { c }
    }

    pub fn step(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Constant { c } => *c,
            StepSchedule::Sequence { values } => values[k.min(values.len() - 1)],
            StepSchedule::Geometric { c0, growth } => c0 * growth.powi(k as i32),
        }
    }

    /// Smallest step over the first `horizon` iterations.
    pub fn min_step(&self, horizon: usize) -> f64 {
        (0..horizon.max(1))
            .map(|k| self.step(k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every step over the horizon is positive and satisfies 1/c > ρ.
    pub fn validate(&self, rho: f64, horizon: usize) -> Result<()> {
        if let StepSchedule::Sequence { values } = self {
            if values.is_empty() {
                return Err(Error::InvalidParams("step sequence is empty".into()));
            }
        }
        if let StepSchedule::Geometric { growth, .. } = self {
            if !(*growth > 0.0 && growth.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "growth must be positive, got {growth}"
                )));
            }
        }
        let limit = match self {
            StepSchedule::Sequence { values } => horizon.max(values.len()),
            _ => horizon,
        };
        for k in 0..limit.max(1) {
            let c = self.step(k);
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "step c_{k} = {c} is not positive"
                )));
            }
            if rho > 0.0 && 1.0 / c <= rho {
                return Err(Error::StepTooLarge { c, rho });
            }
        }
        Ok(())
    }
}

/// Which algorithm produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ppm,
    Ippm,
    Gd,
}

/// Comparison of one inexact step with the exact prox (test mode only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStep {
    /// ‖x_{k+1} − prox(x_k)‖.
    pub error: f64,
    /// ‖prox(x_k) − x_k‖.
    pub exact_step: f64,
    /// dist(prox(x_k), S), when S is known.
    pub dist: Option<f64>,
}

/// The step from x_k to x_{k+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Prox parameter c_k, or the step size t_k for gradient descent.
    pub c: f64,
    /// Certified residual of x_{k+1} for the k-th subproblem; ‖∇f(x_k)‖ for gradient descent.
    pub residual_norm: f64,
    pub inner_iterations: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub criterion_ok: Option<bool>,
    pub reference: Option<ReferenceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub x: Point,
    pub f: f64,
    pub cost_gap: Option<f64>,
    pub dist: Option<f64>,
    /// Diameter of {x_0, …, x_k}.
    pub diameter: f64,
    /// The step leaving x_k; absent on the final record.
    pub step: Option<StepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    GapTolerance,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub method: Method,
    pub problem: String,
    pub x0: Point,
    pub f_star: Option<f64>,
    /// Π_S(x_0), when S is known.
    pub x_star: Option<Point>,
    pub records: Vec<IterRecord>,
    pub nu: Option<f64>,
    /// First k with f(x_k) ≤ f★ + ν.
    pub k0: Option<usize>,
    /// dist²(x_0, S)/(2ν · min c_k) over the realized horizon.
    pub k0_a_priori: Option<f64>,
    pub stop: StopReason,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace has at least x0")
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.x)
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| r.step.as_ref())
    }

    /// Per-step ratios gap_{k+1}/gap_k, skipping denominators below `floor`.
    pub fn cost_ratios(&self, floor: f64) -> Vec<Option<f64>> {
        self.records
            .windows(2)
            .map(|w| match (w[0].cost_gap, w[1].cost_gap) {
                (Some(a), Some(b)) if a >= floor => Some(b / a),
                _ => None,
            })
            .collect()
    }

    /// Per-step ratios dist_{k+1}/dist_k, skipping denominators below `floor`.
    pub fn dist_ratios(&self, floor: f64) -> Vec<Option<f64>> {
        self.records
            .windows(2)
            .map(|w| match (w[0].dist, w[1].dist) {
                (Some(a), Some(b)) if a >= floor => Some(b / a),
                _ => None,
            })
            .collect()
    }

    /// First k with cost gap at most ν.
    pub fn entry_index(&self, nu: f64) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.cost_gap.is_some_and(|g| g <= nu))
    }
}

/// Outcome of one outer step, produced by the exact or inexact step rule.
#[derive(Debug, Clone)]
pub(crate) struct StepOutcome {
    pub next: Point,
    pub record: StepRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmOptions {
    pub max_iter: usize,
    pub inner: InnerTolerance,
    /// Stop once f(x_k) − f★ ≤ this (when f★ is known).
    pub gap_tol: f64,
    /// Stop once ‖x_{k+1} − x_k‖/c_k ≤ this.
    pub stationarity_tol: f64,
    /// Sublevel offset ν used to record k₀.
    pub nu: Option<f64>,
}

impl Default for PpmOptions {
    fn default() -> Self {
        PpmOptions {
            max_iter: 500,
            inner: InnerTolerance::absolute(1e-10),
            gap_tol: 1e-10,
            stationarity_tol: 1e-10,
            nu: None,
        }
    }
}

pub(crate) struct TraceBuilder<'a> {
    p: &'a ProblemSpec,
    trace: IterationTrace,
}

impl<'a> TraceBuilder<'a> {
    pub(crate) fn new(
        p: &'a ProblemSpec,
        method: Method,
        x0: &Point,
        nu: Option<f64>,
    ) -> Result<Self> {
        p.check_point(x0)?;
        let x_star = p.project_solution(x0);
        let mut b = TraceBuilder {
            p,
            trace: IterationTrace {
                method,
                problem: p.name.clone(),
                x0: x0.clone(),
                f_star: p.f_star,
                x_star,
                records: Vec::new(),
                nu,
                k0: None,
                k0_a_priori: None,
                stop: StopReason::MaxIter,
            },
        };
        b.push(x0.clone())?;
        Ok(b)
    }

    pub(crate) fn current(&self) -> &IterRecord {
        self.trace.last()
    }

    fn push(&mut self, x: Point) -> Result<()> {
        let f = self.p.finite_value(&x)?;
        let cost_gap = self.p.f_star.map(|fs| f - fs);
        let dist = self
            .p
            .project_solution(&x)
            .map(|s| linalg::dist(x.view(), s.view()));
        let prev = self.trace.records.last().map_or(0.0, |r| r.diameter);
        let diameter = self
            .trace
            .records
            .iter()
            .map(|r| linalg::dist(r.x.view(), x.view()))
            .fold(prev, f64::max);
        self.trace.records.push(IterRecord {
            k: self.trace.records.len(),
            x,
            f,
            cost_gap,
            dist,
            diameter,
            step: None,
        });
        Ok(())
    }

    /// Attach the step leaving the current iterate and append x_{k+1}.
    pub(crate) fn advance(&mut self, outcome: StepOutcome) -> Result<()> {
        self.trace.records.last_mut().expect("nonempty").step = Some(outcome.record);
        self.push(outcome.next)
    }

    pub(crate) fn finish(mut self, stop: StopReason, horizon_min_c: Option<f64>) -> IterationTrace {
        self.trace.stop = stop;
        if let Some(nu) = self.trace.nu {
            self.trace.k0 = self.trace.entry_index(nu);
            let d0 = self.trace.records[0].dist;
            if let (Some(d0), Some(c)) = (d0, horizon_min_c) {
                self.trace.k0_a_priori = Some(d0 * d0 / (2.0 * nu * c));
            }
        }
        self.trace
    }
}

/// Shared outer loop of the exact and inexact methods.
pub(crate) fn run_outer(
    p: &ProblemSpec,
    x0: &Point,
    sched: &StepSchedule,
    opts: &PpmOptions,
    method: Method,
    mut step: impl FnMut(usize, &Point, f64) -> Result<StepOutcome>,
) -> Result<IterationTrace> {
    sched.validate(p.rho, opts.max_iter)?;
    let mut b = TraceBuilder::new(p, method, x0, opts.nu)?;
    let mut stop = StopReason::MaxIter;
    let mut min_c = f64::INFINITY;
    for k in 0..opts.max_iter {
        if b.current().cost_gap.is_some_and(|g| g <= opts.gap_tol) {
            stop = StopReason::GapTolerance;
            break;
        }
        let c = sched.step(k);
        min_c = min_c.min(c);
        let x = b.current().x.clone();
        let outcome = step(k, &x, c)?;
        let moved = linalg::dist(outcome.next.view(), x.view());
        b.advance(outcome)?;
        if moved / c <= opts.stationarity_tol {
            stop = StopReason::Stationary;
            break;
        }
    }
    let min_c = min_c.is_finite().then_some(min_c);
    Ok(b.finish(stop, min_c))
}

/// Exact proximal point method.
///
/// Subproblems without a closed form are solved to `opts.inner`; the reported
/// residuals feed the slack of the bound checks.
pub fn run_ppm(
    p: &ProblemSpec,
    x0: &Point,
    sched: &StepSchedule,
    opts: &PpmOptions,
) -> Result<IterationTrace> {
    run_outer(p, x0, sched, opts, Method::Ppm, |_, x, c| {
        let r = prox::prox(p, x, c, &opts.inner)?;
        Ok(StepOutcome {
            next: r.point,
            record: StepRecord {
                c,
                residual_norm: r.residual_norm,
                inner_iterations: r.inner_iterations,
                eps: None,
                delta: None,
                criterion_ok: None,
                reference: None,
            },
        })
    })
}

/// Per-iteration outcome of a bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    /// `None` where the check was skipped.
    pub holds: Vec<Option<bool>>,
    pub first_violation: Option<usize>,
}

impl BoundCheck {
    pub(crate) fn from_holds(holds: Vec<Option<bool>>, offset: usize) -> Self {
        let first_violation = holds
            .iter()
            .position(|h| *h == Some(false))
            .map(|i| i + offset);
        BoundCheck {
            holds,
            first_violation,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn checked(&self) -> usize {
        self.holds.iter().filter(|h| h.is_some()).count()
    }
}

const CHECK_TOL: f64 = 1e-9;

/// Sublinear envelope f(x_k) − f★ ≤ dist²(x_0,S)/(2 Σ_{t<k} c_t) for k ≥ 1.
///
/// Inexact subproblem solves add Σ_{t<k} 2c_t r_t ‖x_{t+1} − x★‖/(2 Σ c_t)
/// when S is known. `holds[i]` refers to k = i + 1.
pub fn check_sublinear_bound(trace: &IterationTrace, dist0: f64) -> Result<BoundCheck> {
    if trace.f_star.is_none() {
        return Err(Error::NeedsReference);
    }
    let mut sum_c = 0.0;
    let mut slack = 0.0;
    let mut holds = Vec::new();
    for w in trace.records.windows(2) {
        let step = w[0].step.as_ref().expect("inner records carry a step");
        sum_c += step.c;
        slack += 2.0 * step.c * step.residual_norm * w[1].dist.unwrap_or(0.0);
        let gap = w[1].cost_gap.expect("f★ known");
        let bound = (dist0 * dist0 + slack) / (2.0 * sum_c);
        holds.push(Some(gap <= bound + CHECK_TOL * (1.0 + bound.abs())));
    }
    Ok(BoundCheck::from_holds(holds, 1))
}

/// One-step improvement 2c_k(f(x_{k+1}) − f(x★)) ≤ ‖x_k − x★‖² − ‖x_{k+1} − x★‖²
/// for any comparison point x★, with slack 2c_k r_k ‖x_{k+1} − x★‖ for a
/// subproblem residual r_k. `holds[k]` refers to the step from x_k.
pub fn check_one_step(
    p: &ProblemSpec,
    trace: &IterationTrace,
    x_star: &Point,
) -> Result<BoundCheck> {
    let f_star = p.finite_value(x_star)?;
    let mut holds = Vec::new();
    for w in trace.records.windows(2) {
        let step = w[0].step.as_ref().expect("inner records carry a step");
        let d0 = linalg::dist(w[0].x.view(), x_star.view());
        let d1 = linalg::dist(w[1].x.view(), x_star.view());
        let lhs = 2.0 * step.c * (w[1].f - f_star);
        let rhs = d0 * d0 - d1 * d1;
        let slack = 2.0 * step.c * step.residual_norm * d1;
        let scale = 1.0 + d0 * d0 + lhs.abs();
        holds.push(Some(lhs <= rhs + slack + CHECK_TOL * scale));
    }
    Ok(BoundCheck::from_holds(holds, 0))
}

/// Constants entering the linear rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateConstants {
    pub mu_p: Option<f64>,
    pub mu_q: Option<f64>,
    pub mu_e: Option<f64>,
    /// Weak-convexity modulus; QG enters as β = μ_q − ρ/2.
    pub rho: f64,
}

/// Contraction factors at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    /// 2/(2 + μ_p c) for the cost gap.
    pub omega: Option<f64>,
    /// 1/√(2cβ + 1) for the distance.
    pub theta_qg: Option<f64>,
    /// 1/√(c²/μ_e² + 1) for the distance.
    pub theta_eb: Option<f64>,
}

impl RateBounds {
    /// The sharper of the two distance factors.
    pub fn theta(&self) -> Option<f64> {
        match (self.theta_qg, self.theta_eb) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

impl RateConstants {
    pub fn from_known(p: &ProblemSpec) -> Self {
        RateConstants {
            mu_p: p.known.mu_p,
            mu_q: p.known.mu_q,
            mu_e: p.known.mu_e,
            rho: p.rho,
        }
    }

    /// μ_q − ρ/2 when positive.
    pub fn beta(&self) -> Option<f64> {
        self.mu_q.map(|q| q - self.rho / 2.0).filter(|b| *b > 0.0)
    }

    pub fn bounds(&self, c: f64) -> RateBounds {
        let positive = |v: Option<f64>| v.filter(|x| *x > 0.0 && x.is_finite());
        RateBounds {
            omega: positive(self.mu_p).map(|mp| 2.0 / (2.0 + mp * c)),
            theta_qg: self.beta().map(|b| 1.0 / (2.0 * c * b + 1.0).sqrt()),
            // From dist(x_{k+1},S) ≤ μ_e‖x_{k+1} − x_k‖/c and firm nonexpansiveness.
            theta_eb: positive(self.mu_e).map(|me| 1.0 / ((c * c) / (me * me) + 1.0).sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCheckOptions {
    /// Checks start at the first k with f(x_k) − f★ ≤ ν.
    pub nu: f64,
    /// Multiplicative slack on the contraction factors (estimator tolerance).
    pub rel_slack: f64,
    /// Ratios with denominators below this are skipped.
    pub floor: f64,
}

impl Default for RateCheckOptions {
    fn default() -> Self {
        RateCheckOptions {
            nu: f64::INFINITY,
            rel_slack: 0.0,
            floor: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRateCheck {
    pub cost: BoundCheck,
    pub dist: BoundCheck,
    pub entry: Option<usize>,
}

/// Linear rates gap_{k+1} ≤ ω_k gap_k and dist_{k+1} ≤ θ_k dist_k for k ≥ k₀.
///
/// `holds[k]` refers to the step from x_k; steps before the sublevel entry
/// index or with tiny denominators are skipped.
pub fn check_linear_rates(
    trace: &IterationTrace,
    consts: &RateConstants,
    opts: &RateCheckOptions,
) -> LinearRateCheck {
    let entry = trace.entry_index(opts.nu);
    let mut cost = Vec::new();
    let mut dist = Vec::new();
    for (k, w) in trace.records.windows(2).enumerate() {
        let step = w[0].step.as_ref().expect("inner records carry a step");
        let active = entry.is_some_and(|e| k >= e);
        let b = consts.bounds(step.c);
        let judge = |prev: Option<f64>, next: Option<f64>, factor: Option<f64>| match (
            prev, next, factor,
        ) {
            (Some(a), Some(n), Some(f)) if active && a >= opts.floor => {
                Some(n <= f * (1.0 + opts.rel_slack) * a + 1e-15)
            }
            _ => None,
        };
        cost.push(judge(w[0].cost_gap, w[1].cost_gap, b.omega));
        dist.push(judge(w[0].dist, w[1].dist, b.theta()));
    }
    LinearRateCheck {
        cost: BoundCheck::from_holds(cost, 0),
        dist: BoundCheck::from_holds(dist, 0),
        entry,
    }
}

/// How hard [`reference_solution`] works.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceEffort {
    pub c: f64,
    pub iterations: usize,
    pub inner: InnerTolerance,
}

impl Default for ReferenceEffort {
    fn default() -> Self {
        ReferenceEffort {
            c: 10.0,
            iterations: 300,
            inner: InnerTolerance::absolute(1e-12).with_budget(100_000),
        }
    }
}

/// Best point found by a reference solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub point: Point,
    pub value: f64,
    /// dist(0, ∂f(point)), or an upper bound on it.
    pub residual: f64,
}

/// Install f★ (and, for strongly convex problems, S = {x_ref}) from a tight PPM run.
///
/// Inner solves that run out of budget contribute their best candidate; the
/// quality of the result is recorded as `reference_residual`.
pub fn reference_solution(
    p: &ProblemSpec,
    effort: &ReferenceEffort,
) -> Result<(ProblemSpec, ReferenceSolution)> {
    if !p.is_convex() {
        return Err(Error::InvalidParams(
            "reference solutions need a convex problem".into(),
        ));
    }
    let mut x = Point::zeros(p.dim());
    let mut best = (p.finite_value(&x)?, x.clone());
    for _ in 0..effort.iterations {
        let next = match prox::prox(p, &x, effort.c, &effort.inner) {
            Ok(r) => r.point,
            Err(Error::InnerBudgetExhausted { best, .. }) => best.point,
            Err(e) => return Err(e),
        };
        let moved = linalg::dist(next.view(), x.view());
        x = next;
        let fx = p.finite_value(&x)?;
        if fx <= best.0 {
            best = (fx, x.clone());
        }
        if moved / effort.c <= 1e-14 {
            break;
        }
    }
    let (value, point) = best;
    let residual = min_norm_subgradient(p, &point, false)?.norm;
    let solution = (p.strong_convexity > 0.0)
        .then(|| Arc::new(SinglePoint(point.clone())) as Arc<dyn crate::problem::SolutionSet>);
    let mut q = p.clone().with_optimum(value, solution);
    q.reference_residual = Some(residual);
    Ok((
        q,
        ReferenceSolution {
            point,
            value,
            residual,
        },
    ))
}
