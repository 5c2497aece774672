//! Gradient descent x_{k+1} = x_k − t ∇f(x_k) and its linear rates under the
//! restricted secant inequality and the PL inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ppm::{BoundCheck, IterationTrace, Method, StepRecord, StopReason, TraceBuilder};
use crate::problem::{Point, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum GdStep {
    /// t = μ/L².
    MuOverL2,
    /// t = 1/L; the distance rate is not asserted for this step.
    OneOverL,
    Custom {
        t: f64,
    },
}

/// Smoothness and regularity constants driving gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdParams {
    /// Lipschitz constant of the gradient.
    pub l: f64,
    /// Restricted secant constant: ⟨∇f(x), x − Π_S(x)⟩ ≥ μ dist²(x, S).
    pub mu: f64,
    /// PL constant: ½‖∇f(x)‖² ≥ β(f(x) − f★).
    pub beta: f64,
    pub step: GdStep,
}

impl GdParams {
    /// Parameters from the problem's smoothness and known constants.
    pub fn from_known(p: &ProblemSpec) -> Result<Self> {
        let l = p.smoothness.ok_or(Error::NotSmooth)?;
        let mu = p
            .known
            .mu_r
            .ok_or_else(|| Error::NotAvailable("restricted secant constant".into()))?;
        let beta = p
            .known
            .pl_beta
            .ok_or_else(|| Error::NotAvailable("PL constant".into()))?;
        let params = GdParams {
            l,
            mu,
            beta,
            step: GdStep::MuOverL2,
        };
        params.validate()?;
        Ok(params)
    }

    /// μ ≤ L and β ≤ L³/(2μL − μ²); both follow from the definitions.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L", self.l), ("mu", self.mu), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.mu > self.l {
            return Err(Error::InvalidParams(format!(
                "mu = {} exceeds L = {}",
                self.mu, self.l
            )));
        }
        let cap = self.l.powi(3) / (2.0 * self.mu * self.l - self.mu * self.mu);
        if self.beta > cap * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "beta = {} exceeds L³/(2μL − μ²) = {cap}",
                self.beta
            )));
        }
        if let GdStep::Custom { t } = self.step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "step t must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        match self.step {
            GdStep::MuOverL2 => self.mu / (self.l * self.l),
            GdStep::OneOverL => 1.0 / self.l,
            GdStep::Custom { t } => t,
        }
    }

    /// The step lies outside (0, 2/L), where the rate analysis does not apply.
    pub fn precondition_breach(&self) -> bool {
        let t = self.step_size();
        !(t > 0.0 && t < 2.0 / self.l)
    }

    /// Squared distance factor 1 − 2tμ + t²L².
    pub fn dist_factor_sq(&self) -> f64 {
        let t = self.step_size();
        1.0 - 2.0 * t * self.mu + t * t * self.l * self.l
    }

    /// Distance factor; √(1 − μ²/L²) at t = μ/L².
    pub fn omega1(&self) -> f64 {
        self.dist_factor_sq().max(0.0).sqrt()
    }

    /// Cost factor 1 + (−2t + Lt²)β; (L³ − 2μLβ + μ²β)/L³ at t = μ/L².
    pub fn omega2(&self) -> f64 {
        let t = self.step_size();
        1.0 + (-2.0 * t + self.l * t * t) * self.beta
    }
}

/// Gradient descent for `iters` steps, stopping early at a zero gradient.
pub fn run_gd(
    p: &ProblemSpec,
    x0: &Point,
    params: &GdParams,
    iters: usize,
) -> Result<IterationTrace> {
    if p.smoothness.is_none() {
        return Err(Error::NotSmooth);
    }
    params.validate()?;
    let t = params.step_size();
    let mut b = TraceBuilder::new(p, Method::Gd, x0, None)?;
    let mut stop = StopReason::MaxIter;
    for _ in 0..iters {
        let x = b.current().x.clone();
        let g = p.subgradient(&x).element;
        let gn = linalg::norm(g.view());
        if gn == 0.0 {
            stop = StopReason::Stationary;
            break;
        }
        let next = &x - &(&g * t);
        b.advance(crate::ppm::StepOutcome {
            next,
            record: StepRecord {
                c: t,
                residual_norm: gn,
                inner_iterations: 0,
                eps: None,
                delta: None,
                criterion_ok: None,
                reference: None,
            },
        })?;
    }
    Ok(b.finish(stop, None))
}

/// Per-step ratios (dist_{k+1}/dist_k, gap_{k+1}/gap_k), reported as 0 when
/// the denominator is below `floor`.
pub fn gd_ratios(trace: &IterationTrace, floor: f64) -> Vec<(f64, f64)> {
    let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) if a >= floor => b / a,
        _ => 0.0,
    };
    trace
        .records
        .windows(2)
        .map(|w| {
            (
                ratio(w[0].dist, w[1].dist),
                ratio(w[0].cost_gap, w[1].cost_gap),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdRateCheck {
    pub dist: BoundCheck,
    pub cost: BoundCheck,
    /// The step lies outside (0, 2/L); failures then say nothing about the bounds.
    pub precondition_breach: bool,
}

impl GdRateCheck {
    pub fn all_hold(&self) -> bool {
        self.dist.all_hold() && self.cost.all_hold()
    }
}

const RATIO_FLOOR: f64 = 1e-14;

/// dist ratio ≤ ω₁ and cost ratio ≤ ω₂ at every step with denominators ≥ 1e−14.
pub fn verify_gd_rates(trace: &IterationTrace, params: &GdParams) -> GdRateCheck {
    let w1 = params.omega1();
    let w2 = params.omega2();
    let skip_dist = matches!(params.step, GdStep::OneOverL);
    let judge = |a: Option<f64>, b: Option<f64>, w: f64| match (a, b) {
        (Some(a), Some(b)) if a >= RATIO_FLOOR => Some(b <= w * a * (1.0 + 1e-12) + 1e-15),
        _ => None,
    };
    let mut dist = Vec::new();
    let mut cost = Vec::new();
    for w in trace.records.windows(2) {
        dist.push(if skip_dist {
            None
        } else {
            judge(w[0].dist, w[1].dist, w1)
        });
        cost.push(judge(w[0].cost_gap, w[1].cost_gap, w2));
    }
    GdRateCheck {
        dist: BoundCheck::from_holds(dist, 0),
        cost: BoundCheck::from_holds(cost, 0),
        precondition_breach: params.precondition_breach(),
    }
}

/// f(x_{k+1}) − f(x_k) ≤ ((−2t + Lt²)/2)‖∇f(x_k)‖² at every step.
pub fn check_descent(trace: &IterationTrace, l: f64) -> BoundCheck {
    let holds = trace
        .records
        .windows(2)
        .map(|w| {
            let s = w[0].step.as_ref().expect("inner records carry a step");
            let t = s.c;
            let bound = 0.5 * (-2.0 * t + l * t * t) * s.residual_norm * s.residual_norm;
            Some(w[1].f - w[0].f <= bound + 1e-12 * (1.0 + w[0].f.abs()))
        })
        .collect();
    BoundCheck::from_holds(holds, 0)
}

/// dist²(x_{k+1},S) ≤ (1 − 2tμ + t²L²) dist²(x_k,S) at every step.
pub fn check_distance_chain(trace: &IterationTrace, params: &GdParams) -> BoundCheck {
    let factor = params.dist_factor_sq();
    let holds = trace
        .records
        .windows(2)
        .map(|w| match (w[0].dist, w[1].dist) {
            (Some(a), Some(b)) => Some(b * b <= factor * a * a * (1.0 + 1e-12) + 1e-300),
            _ => None,
        })
        .collect();
    BoundCheck::from_holds(holds, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{make_benchmark, BenchmarkId};
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn quad1d_one_step() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let params = GdParams::from_known(&p).unwrap();
        assert_eq!(params.step_size(), 0.5);
        assert_eq!(params.omega1(), 0.0);
        let t = run_gd(&p, &array![5.0], &params, 5).unwrap();
        assert_eq!(t.records[1].x, array![0.0]);
        assert_eq!(t.iterations(), 1);
        assert!(verify_gd_rates(&t, &params).all_hold());
    }

    #[test]
    fn aniso_fifty_steps() {
        let p = make_benchmark(BenchmarkId::AnisoQuad(9.0));
        let params = GdParams::from_known(&p).unwrap();
        assert_eq!(params.step_size(), 1.0 / 81.0);
        let t = run_gd(&p, &array![1.0, 1.0], &params, 50).unwrap();
        assert_eq!(t.iterations(), 50);
        let chk = verify_gd_rates(&t, &params);
        assert!(chk.all_hold());
        assert_eq!(chk.dist.checked(), 50);
        assert!(check_descent(&t, params.l).all_hold());
        assert!(check_distance_chain(&t, &params).all_hold());
    }

    #[test]
    fn start_in_solution_set() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let params = GdParams::from_known(&p).unwrap();
        let t = run_gd(&p, &array![0.0], &params, 5).unwrap();
        assert_eq!(t.iterations(), 0);
        assert!(gd_ratios(&t, RATIO_FLOOR)
            .iter()
            .all(|&(a, b)| a == 0.0 && b == 0.0));
    }

    #[test]
    fn long_step_is_a_precondition_breach() {
        let p = make_benchmark(BenchmarkId::AnisoQuad(9.0));
        let params = GdParams {
            step: GdStep::Custom { t: 3.0 / 9.0 },
            ..GdParams::from_known(&p).unwrap()
        };
        let t = run_gd(&p, &array![1.0, 1.0], &params, 10).unwrap();
        let chk = verify_gd_rates(&t, &params);
        assert!(chk.precondition_breach);
        assert!(!chk.all_hold());
    }

    #[test]
    fn parameter_validation() {
        let base = GdParams {
            l: 2.0,
            mu: 2.0,
            beta: 2.0,
            step: GdStep::MuOverL2,
        };
        assert!(base.validate().is_ok());
        assert!(GdParams { mu: 3.0, ..base }.validate().is_err());
        assert!(GdParams { beta: 10.0, ..base }.validate().is_err());
        let kinked = make_benchmark(BenchmarkId::WcPiecewise);
        assert!(matches!(
            run_gd(&kinked, &array![0.0], &base, 3),
            Err(Error::NotSmooth)
        ));
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = crate::zoo::rng_from_seed(4);
        for id in BenchmarkId::all() {
            let p = make_benchmark(id);
            if p.smoothness.is_none() {
                continue;
            }
            let (lo, hi) = p.known.bracket.unwrap();
            for _ in 0..100 {
                let x: Point = (0..p.dim()).map(|_| rng.random_range(lo..hi)).collect();
                let g = p.subgradient(&x).element;
                for i in 0..p.dim() {
                    let h = 1e-6;
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd =
                        (p.finite_value(&xp).unwrap() - p.finite_value(&xm).unwrap()) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + g[i].abs()), "{id}");
                }
            }
        }
    }
}
