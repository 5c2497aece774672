//! Proximal mapping prox_{c,f}(z) = argmin f(x) + ‖x − z‖²/(2c), exact or certified-inexact.
//!
//! Every result carries an explicit element of the subproblem subdifferential
//! H(x) = ∂f(x) + (x − z)/c. Its norm upper-bounds dist(0, H(x)) and is what
//! the inexact stopping rules consume.

mod composite;
mod scalar;
mod svm_dual;

use serde::{Deserialize, Serialize};

pub use composite::inner_solve_composite;
pub use scalar::inner_solve_scalar;
pub use svm_dual::inner_solve_svm_dual;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{Point, ProblemSpec, Structure};

/// Residual norms at or below this are reported as exact.
pub const EXACT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxResult {
    pub point: Point,
    /// Element of ∂f(point) + (point − z)/c.
    pub residual_element: Point,
    pub residual_norm: f64,
    pub inner_iterations: usize,
    pub exact: bool,
}

impl ProxResult {
    pub(crate) fn new(point: Point, residual_element: Point, inner_iterations: usize) -> Self {
        let residual_norm = linalg::norm(residual_element.view());
        ProxResult {
            point,
            residual_element,
            residual_norm,
            inner_iterations,
            exact: residual_norm <= EXACT_RESIDUAL,
        }
    }
}

/// Stopping rule of the inner solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerTolerance {
    /// Absolute bound on the residual norm.
    pub target_residual: f64,
    pub max_inner_iterations: usize,
    /// Also accept once residual ≤ `relative`·‖x − z‖ (the relative rule).
    pub relative: Option<f64>,
}

impl InnerTolerance {
    pub fn absolute(target_residual: f64) -> Self {
        InnerTolerance {
            target_residual,
            max_inner_iterations: 10_000,
            relative: None,
        }
    }

    pub fn with_budget(mut self, max_inner_iterations: usize) -> Self {
        self.max_inner_iterations = max_inner_iterations;
        self
    }

    /// Accept a candidate `x` for center `z` with the given residual norm.
    pub fn accepts(&self, residual_norm: f64, x: &Point, z: &Point) -> bool {
        if residual_norm <= self.target_residual {
            return true;
        }
        match self.relative {
            Some(r) => residual_norm <= r * linalg::dist(x.view(), z.view()),
            None => false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_residual > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target residual must be positive, got {}",
                self.target_residual
            )));
        }
        Ok(())
    }
}

impl Default for InnerTolerance {
    fn default() -> Self {
        InnerTolerance::absolute(1e-10)
    }
}

/// Tracks the candidate with the smallest residual for budget-exhaustion reports.
#[derive(Debug, Default)]
pub(crate) struct BestSoFar(Option<ProxResult>);

impl BestSoFar {
    pub(crate) fn offer(&mut self, r: &ProxResult) {
        if self
            .0
            .as_ref()
            .is_none_or(|b| r.residual_norm < b.residual_norm)
        {
            self.0 = Some(r.clone());
        }
    }

    pub(crate) fn exhausted(self, iterations: usize) -> Error {
        Error::InnerBudgetExhausted {
            iterations,
            best: Box::new(self.0.expect("at least one candidate evaluated")),
        }
    }
}

/// Check `c > 0` and, for weakly convex problems, `1/c > ρ`.
pub fn validate_step(p: &ProblemSpec, c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "step c must be positive, got {c}"
        )));
    }
    if p.rho > 0.0 && 1.0 / c <= p.rho {
        return Err(Error::StepTooLarge { c, rho: p.rho });
    }
    Ok(())
}

/// An element v + (x − z)/c of H(x) with v ∈ ∂f(x), and its norm.
///
/// When the oracle can return the subgradient nearest to −(x − z)/c the norm is
/// exactly dist(0, H(x)); otherwise it is an upper bound.
pub fn residual_certificate(p: &ProblemSpec, x: &Point, z: &Point, c: f64) -> Result<(Point, f64)> {
    p.finite_value(x)?;
    let shift = (x - z) / c;
    let target = -&shift;
    let v = p
        .objective()
        .nearest_subgradient(x, &target)
        .unwrap_or_else(|| p.subgradient(x).element);
    let r = v + shift;
    let n = linalg::norm(r.view());
    Ok((r, n))
}

/// prox_{c,f}(z): closed form when the objective has one, otherwise an inner
/// solver chosen by the objective's structure.
pub fn prox(p: &ProblemSpec, z: &Point, c: f64, tol: &InnerTolerance) -> Result<ProxResult> {
    validate_step(p, c)?;
    tol.validate()?;
    p.check_point(z)?;
    if let Some(x) = p.objective().prox(z, c) {
        let (r, _) = residual_certificate(p, &x, z, c)?;
        return Ok(ProxResult::new(x, r, 0));
    }
    match p.objective().structure() {
        Structure::Composite(model) => inner_solve_composite(model, z, c, tol),
        Structure::Svm(model) => inner_solve_svm_dual(model, z, c, tol),
        Structure::Generic if p.dim() == 1 => inner_solve_scalar(p, z, c, tol),
        Structure::Generic => Err(Error::NotAvailable(format!(
            "prox solver for the {}-dimensional objective `{}`",
            p.dim(),
            p.name
        ))),
    }
}

/// Value of the prox subproblem f(x) + ‖x − z‖²/(2c).
pub fn subproblem_value(p: &ProblemSpec, x: &Point, z: &Point, c: f64) -> Result<f64> {
    let d = x - z;
    Ok(p.finite_value(x)? + d.dot(&d) / (2.0 * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{
        generate_blobs, make_benchmark, make_ml_problem, BenchmarkId, DataSource, Dataset, MlData,
        MlProblemParams,
    };
    use ndarray::{array, Array2};

    #[test]
    fn quad1d_closed_form() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let r = prox(&p, &array![3.0], 1.0, &InnerTolerance::default()).unwrap();
        assert_eq!(r.point, array![1.0]);
        assert!(r.exact);
        assert_eq!(r.inner_iterations, 0);
    }

    #[test]
    fn certificate_examples() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let (v, n) = residual_certificate(&p, &array![1.0], &array![3.0], 1.0).unwrap();
        assert_eq!(v, array![0.0]);
        assert_eq!(n, 0.0);
        let (_, n) = residual_certificate(&p, &array![1.1], &array![3.0], 1.0).unwrap();
        assert!((n - 0.3).abs() < 1e-12);
    }

    #[test]
    fn step_too_large_for_weakly_convex() {
        let p = make_benchmark(BenchmarkId::WcPiecewise);
        assert!(matches!(
            prox(&p, &array![0.0], 0.5, &InnerTolerance::default()),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(prox(&p, &array![0.0], 0.4, &InnerTolerance::default()).is_ok());
    }

    #[test]
    fn pure_l1_prox_is_soft_threshold() {
        // ½‖0·x − 0‖² + |x| is the absolute value.
        let p = make_ml_problem(
            MlProblemParams::lasso(1.0),
            MlData::Regression {
                a: Array2::zeros((1, 1)),
                y: array![0.0],
            },
        )
        .unwrap();
        let r = prox(&p, &array![2.0], 1.0, &InnerTolerance::absolute(1e-12)).unwrap();
        assert!((r.point[0] - 1.0).abs() < 1e-12);
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn lasso_toy_prox_matches_separable_oracle() {
        let (yv, lam, c) = ([3.0, 0.0], 1.0, 0.16);
        let p = make_ml_problem(
            MlProblemParams::lasso(lam),
            MlData::Regression {
                a: Array2::eye(2),
                y: array![yv[0], yv[1]],
            },
        )
        .unwrap();
        let tol = InnerTolerance::absolute(1e-10);
        let r = prox(&p, &array![0.0, 0.0], c, &tol).unwrap();
        assert!(r.residual_norm <= tol.target_residual);
        for (i, &yi) in yv.iter().enumerate() {
            let phi = |t: f64| 0.5 * (t - yi).powi(2) + lam * t.abs() + t * t / (2.0 * c);
            let oracle = golden_section(phi, -10.0, 10.0);
            assert!((r.point[i] - oracle).abs() < 1e-8, "coordinate {i}");
        }
    }

    fn toy_svm() -> ProblemSpec {
        let ds = Dataset {
            features: array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
            labels: array![1.0, -1.0, 1.0, -1.0],
            source: DataSource::Synthetic { seed: 0 },
        };
        make_ml_problem(MlProblemParams::svm(1.0), MlData::Classification(ds)).unwrap()
    }

    #[test]
    fn svm_toy_prox_matches_grid() {
        let p = toy_svm();
        let z = array![0.0, 0.0];
        let r = prox(&p, &z, 1.0, &InnerTolerance::absolute(1e-8)).unwrap();
        assert!(r.residual_norm <= 1e-8);
        // The subproblem is separable across the two coordinates for this data,
        // so the 2D grid search reduces to two 1D scans of the same grid.
        let grid = crate::linalg::linspace(-3.0, 3.0, 60_001);
        let phi1 = |t: f64| {
            let x = array![t, 0.0];
            subproblem_value(&p, &x, &z, 1.0).unwrap()
        };
        let phi2 = |t: f64| {
            let x = array![r.point[0], t];
            subproblem_value(&p, &x, &z, 1.0).unwrap()
        };
        let best = |phi: &dyn Fn(f64) -> f64| {
            grid.iter()
                .copied()
                .min_by(|a, b| phi(*a).total_cmp(&phi(*b)))
                .unwrap()
        };
        assert!((r.point[0] - best(&phi1)).abs() < 1e-4);
        assert!((r.point[1] - best(&phi2)).abs() < 1e-4);
    }

    #[test]
    fn svm_already_optimal_center_needs_no_iterations() {
        let p = toy_svm();
        let z = array![0.0, 0.0];
        let first = prox(&p, &z, 1.0, &InnerTolerance::absolute(1e-10)).unwrap();
        // The prox of a minimizer of f is itself; 0.5 is the optimum of the toy SVM.
        let opt = array![0.5, 0.5];
        let r = prox(&p, &opt, 1.0, &InnerTolerance::absolute(1e-10)).unwrap();
        assert_eq!(r.inner_iterations, 0);
        assert_eq!(r.point, opt);
        assert!(first.inner_iterations > 0);
    }

    #[test]
    fn svm_budget_exhaustion() {
        let p = make_ml_problem(
            MlProblemParams::svm(1.0),
            MlData::Classification(generate_blobs(40, 3, 1.0, 2)),
        )
        .unwrap();
        let tol = InnerTolerance::absolute(1e-30).with_budget(5);
        match prox(&p, &array![1.0, -2.0, 0.5], 1.0, &tol) {
            Err(Error::InnerBudgetExhausted { iterations, best }) => {
                assert_eq!(iterations, 5);
                assert!(best.residual_norm.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sine_quad_prox_is_stationary() {
        let p = make_benchmark(BenchmarkId::SineQuad);
        for &z in &[-7.0, -2.0, 0.3, 2.5, 9.0] {
            let r = prox(&p, &array![z], 0.09, &InnerTolerance::absolute(1e-11)).unwrap();
            assert!(r.residual_norm <= 1e-11, "z={z}");
        }
    }
}
