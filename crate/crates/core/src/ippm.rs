//! Inexact proximal point method x_{k+1} ≈ prox_{c_k,f}(x_k) under summable
//! absolute (A, A′) or relative (B, B′) error criteria, with checks of its
//! sublinear and linear bounds.
//!
//! Criteria A and B compare against the true prox and are only available in
//! test mode, where a tight reference solve stands in for it:
//! - A: ‖x_{k+1} − prox(x_k)‖ ≤ ε_k
//! - B: ‖x_{k+1} − prox(x_k)‖ ≤ δ_k ‖x_{k+1} − x_k‖
//! - A′: dist(0, H_k(x_{k+1})) ≤ ε_k / c_k
//! - B′: dist(0, H_k(x_{k+1})) ≤ (δ_k / c_k) ‖x_{k+1} − x_k‖

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ppm::{
    run_outer, BoundCheck, IterationTrace, Method, PpmOptions, RateCheckOptions, RateConstants,
    ReferenceStep, StepOutcome, StepRecord, StepSchedule,
};
use crate::problem::{Point, ProblemSpec};
use crate::prox::{self, residual_certificate, InnerTolerance, ProxResult};
use crate::zoo::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionKind {
    A,
    B,
    /// A and B simultaneously.
    AB,
    #[serde(rename = "Aprime")]
    APrime,
    #[serde(rename = "Bprime")]
    BPrime,
}

impl CriterionKind {
    /// Needs the true prox, so only runs in test mode.
    pub fn needs_reference(self) -> bool {
        matches!(
            self,
            CriterionKind::A | CriterionKind::B | CriterionKind::AB
        )
    }

    fn uses_eps(self) -> bool {
        matches!(
            self,
            CriterionKind::A | CriterionKind::AB | CriterionKind::APrime
        )
    }

    fn uses_delta(self) -> bool {
        matches!(
            self,
            CriterionKind::B | CriterionKind::AB | CriterionKind::BPrime
        )
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CriterionKind::A => "A",
            CriterionKind::B => "B",
            CriterionKind::AB => "AB",
            CriterionKind::APrime => "Aprime",
            CriterionKind::BPrime => "Bprime",
        };
        f.write_str(s)
    }
}

/// A criterion with geometric tolerances ε_k = ε₀γᵏ and δ_k = δ₀γᵏ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InexactCriterion {
    pub kind: CriterionKind,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_eps0() -> f64 {
    0.1
}

fn default_delta0() -> f64 {
    0.5
}

fn default_gamma() -> f64 {
    0.7
}

impl InexactCriterion {
    pub fn new(kind: CriterionKind) -> Self {
        InexactCriterion {
            kind,
            eps0: default_eps0(),
            delta0: default_delta0(),
            gamma: default_gamma(),
        }
    }

    pub fn with_eps(mut self, eps0: f64, gamma: f64) -> Self {
        self.eps0 = eps0;
        self.gamma = gamma;
        self
    }

    pub fn with_delta(mut self, delta0: f64, gamma: f64) -> Self {
        self.delta0 = delta0;
        self.gamma = gamma;
        self
    }

    pub fn eps(&self, k: usize) -> Option<f64> {
        self.kind
            .uses_eps()
            .then(|| self.eps0 * self.gamma.powi(k as i32))
    }

    pub fn delta(&self, k: usize) -> Option<f64> {
        self.kind
            .uses_delta()
            .then(|| self.delta0 * self.gamma.powi(k as i32))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.eps0 >= 0.0 && self.eps0.is_finite())
            || !(self.delta0 >= 0.0 && self.delta0.is_finite())
        {
            return Err(Error::InvalidParams(
                "eps0 and delta0 must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// How inexact steps are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Inexactness {
    /// Stop the inner solver as soon as the criterion is met.
    Solver,
    /// Move the tight prox as far as the criterion allows: away from S when it
    /// is known, otherwise along a seeded random direction.
    Adversarial { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IppmOptions {
    pub ppm: PpmOptions,
    pub test_mode: bool,
    pub inexactness: Inexactness,
    /// Tolerance of the tight reference solves.
    pub reference_tol: InnerTolerance,
}

impl Default for IppmOptions {
    fn default() -> Self {
        IppmOptions {
            ppm: PpmOptions::default(),
            test_mode: false,
            inexactness: Inexactness::Solver,
            reference_tol: InnerTolerance::absolute(1e-12).with_budget(100_000),
        }
    }
}

/// Floor on the absolute inner target under the relative rule B′, so that
/// steps with ‖x_{k+1} − x_k‖ → 0 still terminate.
pub const RELATIVE_RULE_FLOOR: f64 = 1e-13;

fn tight_prox(p: &ProblemSpec, z: &Point, c: f64, tol: &InnerTolerance) -> Result<ProxResult> {
    match prox::prox(p, z, c, tol) {
        Err(Error::InnerBudgetExhausted { best, .. }) => Ok(*best),
        other => other,
    }
}

struct Judge<'a> {
    p: &'a ProblemSpec,
    crit: &'a InexactCriterion,
    k: usize,
    z: &'a Point,
    c: f64,
    reference: Option<&'a Point>,
}

impl Judge<'_> {
    /// Whether candidate `x` with certified residual `r` meets the criterion.
    fn holds(&self, x: &Point, r: f64) -> bool {
        let step = linalg::dist(x.view(), self.z.view());
        let err = self.reference.map(|xr| linalg::dist(x.view(), xr.view()));
        let eps = self.crit.eps(self.k).unwrap_or(0.0);
        let delta = self.crit.delta(self.k).unwrap_or(0.0);
        match self.crit.kind {
            CriterionKind::A => err.is_some_and(|e| e <= eps),
            CriterionKind::B => err.is_some_and(|e| e <= delta * step),
            CriterionKind::AB => err.is_some_and(|e| e <= eps && e <= delta * step),
            CriterionKind::APrime => r <= eps / self.c,
            CriterionKind::BPrime => r <= delta / self.c * step,
        }
    }

    fn candidate(&self, x: Point, inner_iterations: usize) -> Result<ProxResult> {
        let (r, _) = residual_certificate(self.p, &x, self.z, self.c)?;
        let mut out = ProxResult::new(x, r, inner_iterations);
        out.exact = false;
        Ok(out)
    }
}

/// Inexact proximal point method.
///
/// Criteria A, B and AB need `opts.test_mode`; otherwise the call fails with
/// `CriterionUnverifiable`. In test mode every step is also compared with a
/// tight reference prox and the comparison is recorded.
pub fn run_ippm(
    p: &ProblemSpec,
    x0: &Point,
    sched: &StepSchedule,
    crit: &InexactCriterion,
    opts: &IppmOptions,
) -> Result<IterationTrace> {
    crit.validate()?;
    if crit.kind.needs_reference() && !opts.test_mode {
        return Err(Error::CriterionUnverifiable(crit.kind.to_string()));
    }
    let mut rng = match opts.inexactness {
        Inexactness::Adversarial { seed } => Some(rng_from_seed(seed)),
        Inexactness::Solver => None,
    };
    run_outer(p, x0, sched, &opts.ppm, Method::Ippm, |k, z, c| {
        let needs_tight =
            opts.test_mode || matches!(opts.inexactness, Inexactness::Adversarial { .. });
        let tight = if needs_tight {
            Some(tight_prox(p, z, c, &opts.reference_tol)?)
        } else {
            None
        };
        let reference = if opts.test_mode {
            tight.as_ref().map(|t| &t.point)
        } else {
            None
        };
        let judge = Judge {
            p,
            crit,
            k,
            z,
            c,
            reference,
        };
        let chosen = match opts.inexactness {
            Inexactness::Solver => solver_step(&judge, &opts.ppm.inner, tight.as_ref())?,
            Inexactness::Adversarial { .. } => {
                let tight = tight.as_ref().expect("computed above");
                adversarial_step(&judge, tight, rng.as_mut().expect("seeded"))?
            }
        };
        let criterion_ok = judge.holds(&chosen.point, chosen.residual_norm);
        let reference = if opts.test_mode {
            let t = tight.as_ref().expect("computed in test mode");
            Some(ReferenceStep {
                error: linalg::dist(chosen.point.view(), t.point.view()),
                exact_step: linalg::dist(t.point.view(), z.view()),
                dist: p
                    .project_solution(&t.point)
                    .map(|s| linalg::dist(s.view(), t.point.view())),
            })
        } else {
            None
        };
        Ok(StepOutcome {
            next: chosen.point,
            record: StepRecord {
                c,
                residual_norm: chosen.residual_norm,
                inner_iterations: chosen.inner_iterations,
                eps: crit.eps(k),
                delta: crit.delta(k),
                criterion_ok: Some(criterion_ok),
                reference,
            },
        })
    })
}

/// Run the inner solver with the criterion as its stopping rule.
///
/// A′ and B′ map directly onto the inner tolerance. For A, B and AB the
/// absolute target starts at the level implied by the strong convexity of the
/// subproblem and shrinks tenfold until the reference comparison passes,
/// falling back to the reference point itself.
fn solver_step(
    judge: &Judge,
    base: &InnerTolerance,
    tight: Option<&ProxResult>,
) -> Result<ProxResult> {
    let crit = judge.crit;
    let k = judge.k;
    let c = judge.c;
    match crit.kind {
        CriterionKind::APrime => {
            let eps = crit.eps(k).expect("A′ has ε");
            let tol = InnerTolerance {
                target_residual: (eps / c).max(f64::MIN_POSITIVE),
                relative: None,
                ..*base
            };
            prox::prox(judge.p, judge.z, c, &tol)
        }
        CriterionKind::BPrime => {
            let delta = crit.delta(k).expect("B′ has δ");
            let tol = InnerTolerance {
                target_residual: RELATIVE_RULE_FLOOR,
                relative: Some(delta / c),
                ..*base
            };
            prox::prox(judge.p, judge.z, c, &tol)
        }
        CriterionKind::A | CriterionKind::B | CriterionKind::AB => {
            let tight = tight.expect("test mode");
            let modulus = 1.0 / c - judge.p.rho;
            let exact_step = linalg::dist(tight.point.view(), judge.z.view());
            let eps = crit.eps(k).unwrap_or(f64::INFINITY);
            let relative = crit
                .delta(k)
                .map_or(f64::INFINITY, |d| 0.5 * d * exact_step);
            let mut target = eps.min(relative) * modulus;
            while target > 1e-13 {
                let tol = InnerTolerance {
                    target_residual: target,
                    relative: None,
                    ..*base
                };
                let cand = prox::prox(judge.p, judge.z, c, &tol)?;
                if judge.holds(&cand.point, cand.residual_norm) {
                    return Ok(cand);
                }
                target /= 10.0;
            }
            Ok(tight.clone())
        }
    }
}

/// Perturb the tight prox by the largest step the criterion admits,
/// halving from an initial size until the criterion holds.
fn adversarial_step(
    judge: &Judge,
    tight: &ProxResult,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<ProxResult> {
    let crit = judge.crit;
    let x = &tight.point;
    let direction = {
        let away = judge
            .p
            .project_solution(x)
            .map(|s| x - &s)
            .filter(|d| linalg::norm(d.view()) > 0.0);
        let d = away.unwrap_or_else(|| (0..x.len()).map(|_| StandardNormal.sample(rng)).collect());
        let n = linalg::norm(d.view());
        d / n
    };
    let exact_step = linalg::dist(x.view(), judge.z.view());
    let eps = crit.eps(judge.k).unwrap_or(f64::INFINITY);
    let delta = crit
        .delta(judge.k)
        .map_or(f64::INFINITY, |d| d * exact_step);
    let mut size = eps.min(delta);
    if !size.is_finite() {
        size = 0.0;
    }
    for _ in 0..60 {
        if size == 0.0 {
            break;
        }
        let cand = x + &(&direction * size);
        if judge.p.value(&cand).is_finite() {
            let out = judge.candidate(cand, 0)?;
            if judge.holds(&out.point, out.residual_norm) {
                return Ok(out);
            }
        }
        size *= 0.5;
    }
    Ok(tight.clone())
}

/// θ̂ = (θ + 2δ)/(1 − δ).
pub fn inexact_theta(theta: f64, delta: f64) -> f64 {
    (theta + 2.0 * delta) / (1.0 - delta)
}

/// Best-iterate bound
/// min_{j≤k} f(x_j) − f★ ≤ (dist²(x_0,S) + 2D Σ_{j<k} ε_j)/(2 Σ_{j<k} c_j)
/// where D is the diameter of {x_0, …, x_k, Π_S(x_0)}. `holds[i]` refers to k = i + 1.
pub fn check_ippm_sublinear(trace: &IterationTrace) -> Result<BoundCheck> {
    let x_star = trace
        .x_star
        .as_ref()
        .ok_or_else(|| Error::NotAvailable("solution oracle".into()))?;
    if trace.f_star.is_none() {
        return Err(Error::NeedsReference);
    }
    let d0 = linalg::dist(trace.x0.view(), x_star.view());
    let mut diameter = 0.0f64;
    let mut seen: Vec<&Point> = vec![x_star];
    let mut best = f64::INFINITY;
    let mut sum_c = 0.0;
    let mut sum_eps = 0.0;
    let mut holds = Vec::new();
    for (i, rec) in trace.records.iter().enumerate() {
        for q in &seen {
            diameter = diameter.max(linalg::dist(rec.x.view(), q.view()));
        }
        seen.push(&rec.x);
        best = best.min(rec.cost_gap.expect("f★ known"));
        if i > 0 {
            let bound = (d0 * d0 + 2.0 * diameter * sum_eps) / (2.0 * sum_c);
            holds.push(Some(best <= bound + 1e-9 * (1.0 + bound)));
        }
        if let Some(step) = &rec.step {
            sum_c += step.c;
            sum_eps += step.eps.unwrap_or(0.0);
        }
    }
    Ok(BoundCheck::from_holds(holds, 1))
}

/// Inexact one-step inequality
/// (1 − δ_k) dist(x_{k+1},S) ≤ 2δ_k dist(x_k,S) + dist(prox(x_k),S),
/// with δ_k = 0 for criteria without a relative part. Needs the reference
/// comparisons recorded in test mode. `holds[k]` refers to the step from x_k.
pub fn check_inexact_one_step(trace: &IterationTrace) -> Result<BoundCheck> {
    let mut holds = Vec::new();
    for w in trace.records.windows(2) {
        let step = w[0].step.as_ref().expect("inner records carry a step");
        let reference = step
            .reference
            .ok_or_else(|| Error::NotAvailable("reference prox (test mode)".into()))?;
        let (Some(d0), Some(d1), Some(dr)) = (w[0].dist, w[1].dist, reference.dist) else {
            return Err(Error::NotAvailable("solution oracle".into()));
        };
        let delta = step.delta.unwrap_or(0.0);
        if delta >= 1.0 {
            holds.push(None);
            continue;
        }
        let lhs = (1.0 - delta) * d1;
        let rhs = 2.0 * delta * d0 + dr;
        holds.push(Some(lhs <= rhs + 1e-9));
    }
    Ok(BoundCheck::from_holds(holds, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InexactRateCheck {
    pub holds: BoundCheck,
    /// θ̂_k for each step, where defined.
    pub theta_hat: Vec<Option<f64>>,
    /// First index from which contraction is asserted.
    pub k_bar: Option<usize>,
}

/// dist(x_{k+1},S) ≤ θ̂_k dist(x_k,S) for k ≥ k̄, where k̄ is the later of the
/// sublevel entry index and the first k with δ_k < 1, and θ̂_k < 1.
pub fn check_ippm_linear(
    trace: &IterationTrace,
    consts: &RateConstants,
    opts: &RateCheckOptions,
) -> InexactRateCheck {
    let entry = trace.entry_index(opts.nu);
    let first_small_delta = trace.records.iter().position(|r| {
        r.step
            .as_ref()
            .is_some_and(|s| s.delta.unwrap_or(0.0) < 1.0)
    });
    let k_bar = entry.zip(first_small_delta).map(|(a, b)| a.max(b));
    let mut holds = Vec::new();
    let mut theta_hat = Vec::new();
    for (k, w) in trace.records.windows(2).enumerate() {
        let step = w[0].step.as_ref().expect("inner records carry a step");
        let delta = step.delta.unwrap_or(0.0);
        let th = consts
            .bounds(step.c)
            .theta()
            .filter(|_| delta < 1.0)
            .map(|t| inexact_theta(t, delta));
        theta_hat.push(th);
        let verdict = match (th, w[0].dist, w[1].dist) {
            (Some(t), Some(d0), Some(d1))
                if k_bar.is_some_and(|kb| k >= kb) && t < 1.0 && d0 >= opts.floor =>
            {
                Some(d1 <= t * (1.0 + opts.rel_slack) * d0 + 1e-15)
            }
            _ => None,
        };
        holds.push(verdict);
    }
    InexactRateCheck {
        holds: BoundCheck::from_holds(holds, 0),
        theta_hat,
        k_bar,
    }
}

/// Averaged iterates after k steps and their Jensen bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedIterate {
    pub k: usize,
    /// (1/k) Σ_{j=1}^{k} x_j.
    pub plain: Point,
    /// Σ_{j<k} c_j x_{j+1} / Σ_{j<k} c_j.
    pub weighted: Point,
    pub plain_gap: f64,
    pub weighted_gap: f64,
    /// (1/k) Σ_{j<k} (f(x_{j+1}) − f★).
    pub plain_bound: f64,
    /// Σ c_j (f(x_{j+1}) − f★) / Σ c_j.
    pub weighted_bound: f64,
}

impl AveragedIterate {
    pub fn bounds_hold(&self, tol: f64) -> bool {
        self.plain_gap <= self.plain_bound + tol && self.weighted_gap <= self.weighted_bound + tol
    }
}

/// Plain and step-weighted averages of x_1, …, x_k for every k ≥ 1.
pub fn averaged_iterates(p: &ProblemSpec, trace: &IterationTrace) -> Result<Vec<AveragedIterate>> {
    let f_star = trace.f_star.ok_or(Error::NeedsReference)?;
    let n = trace.x0.len();
    let mut sum_x = Point::zeros(n);
    let mut sum_cx = Point::zeros(n);
    let mut sum_c = 0.0;
    let mut sum_gap = 0.0;
    let mut sum_cgap = 0.0;
    let mut out = Vec::new();
    for (j, w) in trace.records.windows(2).enumerate() {
        let c = w[0].step.as_ref().expect("inner records carry a step").c;
        let gap = w[1].f - f_star;
        sum_x += &w[1].x;
        sum_cx.scaled_add(c, &w[1].x);
        sum_c += c;
        sum_gap += gap;
        sum_cgap += c * gap;
        let k = j + 1;
        let plain = &sum_x / k as f64;
        let weighted = &sum_cx / sum_c;
        out.push(AveragedIterate {
            k,
            plain_gap: p.finite_value(&plain)? - f_star,
            weighted_gap: p.finite_value(&weighted)? - f_star,
            plain,
            weighted,
            plain_bound: sum_gap / k as f64,
            weighted_bound: sum_cgap / sum_c,
        });
    }
    Ok(out)
}
