//! Problem abstraction: value, subdifferential and solution-set oracles of a
//! proper closed ρ-weakly convex function.

use std::fmt;
use std::sync::Arc;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::zoo::{CompositeModel, SvmModel};

/// A point of ℝⁿ.
pub type Point = Array1<f64>;

/// Default absolute tolerance used across checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Extended-real value: finite or `+∞` (outside the domain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

/// One element of the Fréchet subdifferential.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub element: Point,
    /// The element is the minimum-norm element of the subdifferential.
    pub min_norm: bool,
}

/// Structure exposed to the inner prox solvers.
#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    Generic,
    Composite(&'a CompositeModel),
    Svm(&'a SvmModel),
}

/// Oracle bundle of an objective function.
///
/// Implementations must be pure: every method depends only on its arguments.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &Point) -> ExtReal;

    /// Some element of ∂̂f(x), flagged when it is the minimum-norm one.
    fn subgradient(&self, x: &Point) -> Subgradient;

    /// The element of ∂̂f(x) closest to `target`, when computable in closed form.
    ///
    /// With `target = 0` this is the minimum-norm element; with
    /// `target = -(x - z)/c` it yields dist(0, ∂f(x) + (x - z)/c).
    fn nearest_subgradient(&self, _x: &Point, _target: &Point) -> Option<Point> {
        None
    }

    /// Closed-form minimizer of f(·) + ‖· − z‖²/(2c).
    fn prox(&self, _z: &Point, _c: f64) -> Option<Point> {
        None
    }

    fn structure(&self) -> Structure<'_> {
        Structure::Generic
    }

    /// Breakpoints of a piecewise-defined one-dimensional function.
    fn kinks(&self) -> &[f64] {
        &[]
    }
}

/// Nearest-point oracle of the solution set S.
pub trait SolutionSet: Send + Sync + fmt::Debug {
    fn project(&self, x: &Point) -> Point;
}

/// S = {x★}.
#[derive(Debug, Clone)]
pub struct SinglePoint(pub Point);

impl SolutionSet for SinglePoint {
    fn project(&self, _x: &Point) -> Point {
        self.0.clone()
    }
}

/// Constant values known analytically for a problem, attached as test metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownConstants {
    pub mu_s: Option<f64>,
    pub mu_r: Option<f64>,
    pub mu_e: Option<f64>,
    pub mu_p: Option<f64>,
    pub mu_q: Option<f64>,
    /// PL constant in the smooth form ½‖∇f‖² ≥ β(f − f★).
    pub pl_beta: Option<f64>,
    /// EB and PL fail somewhere on the whole space.
    pub eb_pl_fail_globally: bool,
    /// Bracket containing S, used by grid checks.
    pub bracket: Option<(f64, f64)>,
}

/// A problem instance: objective oracles plus everything known about it.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    objective: Arc<dyn Objective>,
    /// Weak-convexity modulus; zero for convex problems.
    pub rho: f64,
    /// Lipschitz constant of the gradient, for differentiable problems.
    pub smoothness: Option<f64>,
    /// Strong-convexity modulus; zero when not strongly convex.
    pub strong_convexity: f64,
    pub f_star: Option<f64>,
    solution: Option<Arc<dyn SolutionSet>>,
    pub known: KnownConstants,
    /// Stationarity residual of the installed reference solution, if any.
    pub reference_residual: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("rho", &self.rho)
            .field("smoothness", &self.smoothness)
            .field("f_star", &self.f_star)
            .field("has_solution_oracle", &self.solution.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, objective: Arc<dyn Objective>, rho: f64) -> Self {
        assert!(rho >= 0.0, "weak-convexity modulus must be nonnegative");
        ProblemSpec {
            name: name.into(),
            objective,
            rho,
            smoothness: None,
            strong_convexity: 0.0,
            f_star: None,
            solution: None,
            known: KnownConstants::default(),
            reference_residual: None,
        }
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }

    pub fn with_strong_convexity(mut self, mu: f64) -> Self {
        self.strong_convexity = mu;
        self
    }

    pub fn with_optimum(mut self, f_star: f64, solution: Option<Arc<dyn SolutionSet>>) -> Self {
        self.f_star = Some(f_star);
        self.solution = solution;
        self
    }

    pub fn with_known(mut self, known: KnownConstants) -> Self {
        self.known = known;
        self
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &Point) -> ExtReal {
        self.objective.value(x)
    }

    /// Finite value or `DomainError`.
    pub fn finite_value(&self, x: &Point) -> Result<f64> {
        self.objective.value(x).finite().ok_or(Error::DomainError)
    }

    pub fn subgradient(&self, x: &Point) -> Subgradient {
        self.objective.subgradient(x)
    }

    pub fn has_solution_oracle(&self) -> bool {
        self.solution.is_some()
    }

    pub fn project_solution(&self, x: &Point) -> Option<Point> {
        self.solution.as_ref().map(|s| s.project(x))
    }

    pub fn is_convex(&self) -> bool {
        self.rho == 0.0
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::BadShape(format!(
                "point has length {}, problem dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadShape("point has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Minimum-norm element of ∂̂f(x) and its norm, with an `approximate` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSubgradient {
    pub element: Point,
    pub norm: f64,
    /// The element is some subgradient, not certified to be the minimum-norm one.
    pub approximate: bool,
}

/// dist(0, ∂̂f(x)) together with the element attaining it.
///
/// With `require_exact`, fails with `NotAvailable` unless the oracle knows the
/// minimum-norm element in closed form.
pub fn min_norm_subgradient(
    p: &ProblemSpec,
    x: &Point,
    require_exact: bool,
) -> Result<MinNormSubgradient> {
    p.finite_value(x)?;
    let zero = Point::zeros(p.dim());
    if let Some(element) = p.objective().nearest_subgradient(x, &zero) {
        let norm = linalg::norm(element.view());
        return Ok(MinNormSubgradient {
            element,
            norm,
            approximate: false,
        });
    }
    let g = p.subgradient(x);
    if !g.min_norm && require_exact {
        return Err(Error::NotAvailable(
            "closed-form minimum-norm subgradient".into(),
        ));
    }
    let norm = linalg::norm(g.element.view());
    Ok(MinNormSubgradient {
        element: g.element,
        norm,
        approximate: !g.min_norm,
    })
}

/// dist(x, S) = ‖x − Π_S(x)‖.
pub fn distance_to_solution(p: &ProblemSpec, x: &Point) -> Result<f64> {
    let proj = p
        .project_solution(x)
        .ok_or_else(|| Error::NotAvailable("solution oracle".into()))?;
    Ok(linalg::dist(x.view(), proj.view()))
}

/// Excess of the weakly convex subgradient inequality
/// f(x) + ⟨v, y − x⟩ − (ρ/2)‖y − x‖² − f(y); nonpositive when it holds.
pub fn subgradient_inequality_excess(p: &ProblemSpec, x: &Point, y: &Point) -> Result<f64> {
    let fx = p.finite_value(x)?;
    let fy = match p.value(y) {
        ExtReal::Finite(v) => v,
        ExtReal::PosInfinity => return Ok(f64::NEG_INFINITY),
    };
    let v = p.subgradient(x).element;
    let d = y - x;
    Ok(fx + v.dot(&d) - 0.5 * p.rho * d.dot(&d) - fy)
}

/// Excess of the approximate secant inequality
/// f(λx + (1−λ)y) − λf(x) − (1−λ)f(y) − ρλ(1−λ)‖x − y‖²/2.
pub fn secant_excess(p: &ProblemSpec, rho: f64, x: &Point, y: &Point, lambda: f64) -> Result<f64> {
    let fx = p.finite_value(x)?;
    let fy = p.finite_value(y)?;
    let m = x * lambda + y * (1.0 - lambda);
    let fm = match p.value(&m) {
        ExtReal::Finite(v) => v,
        ExtReal::PosInfinity => return Ok(f64::INFINITY),
    };
    let d = x - y;
    Ok(fm - lambda * fx - (1.0 - lambda) * fy - 0.5 * rho * lambda * (1.0 - lambda) * d.dot(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{make_benchmark, BenchmarkId};
    use ndarray::array;

    #[test]
    fn min_norm_matches_appendix_table() {
        let p = make_benchmark(BenchmarkId::WcPiecewise);
        let at = |x: f64| min_norm_subgradient(&p, &array![x], true).unwrap();
        assert_eq!(at(-1.0).norm, 0.0);
        assert_eq!(at(-0.5).norm, 1.0);
        assert!((at(-0.75).norm - 1.5).abs() < 1e-15);
        assert!((at(0.0).norm - 6.0).abs() < 1e-15);
    }

    #[test]
    fn min_norm_of_smooth_quadratic() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let g = min_norm_subgradient(&p, &array![3.0], true).unwrap();
        assert_eq!(g.element, array![6.0]);
        assert_eq!(g.norm, 6.0);
        assert!(!g.approximate);
    }

    #[test]
    fn distance_examples() {
        let q = make_benchmark(BenchmarkId::Quad1d);
        assert_eq!(distance_to_solution(&q, &array![2.0]).unwrap(), 2.0);
        let w = make_benchmark(BenchmarkId::WcPiecewise);
        assert_eq!(distance_to_solution(&w, &array![0.0]).unwrap(), 1.0);
        let s = make_benchmark(BenchmarkId::SineQuad);
        let pi = std::f64::consts::PI;
        assert!((distance_to_solution(&s, &array![pi]).unwrap() - pi).abs() < 1e-15);
    }

    #[test]
    fn distance_without_oracle_is_not_available() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let bare = ProblemSpec::new("bare", p.objective.clone(), 0.0);
        assert!(matches!(
            distance_to_solution(&bare, &array![1.0]),
            Err(Error::NotAvailable(_))
        ));
    }

    #[test]
    fn solution_points_are_stationary_with_optimal_value() {
        for id in BenchmarkId::all() {
            let p = make_benchmark(id);
            for x0 in [-3.0, -0.3, 0.0, 1.7, 5.0] {
                let x = Point::from_elem(p.dim(), x0);
                let s = p.project_solution(&x).unwrap();
                assert!((p.finite_value(&s).unwrap() - p.f_star.unwrap()).abs() < 1e-12);
                let g = min_norm_subgradient(&p, &s, false).unwrap();
                assert!(g.norm < 1e-12, "{id:?}");
            }
        }
    }
}
