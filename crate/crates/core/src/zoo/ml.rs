//! Linear SVM, lasso and elastic-net objectives.

use ndarray::{Array1, Array2};

use crate::linalg;
use crate::problem::{ExtReal, Objective, Point, Structure, Subgradient};

/// ½‖y − Ax‖² + λ‖x‖₁ + (μ/2)‖x‖²; lasso when μ = 0.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    pub a: Array2<f64>,
    pub y: Array1<f64>,
    pub lambda: f64,
    pub mu: f64,
    /// Lipschitz constant of the gradient of the smooth part: σ_max(A)² + μ.
    pub smooth_lipschitz: f64,
}

impl CompositeModel {
    pub fn new(a: Array2<f64>, y: Array1<f64>, lambda: f64, mu: f64) -> Self {
        let smooth_lipschitz = linalg::max_singular_value_sq(&a, 1e-10) + mu;
        CompositeModel {
            a,
            y,
            lambda,
            mu,
            smooth_lipschitz,
        }
    }

    /// Gradient of ½‖y − Ax‖² + (μ/2)‖x‖².
    pub fn smooth_grad(&self, x: &Point) -> Point {
        let r = self.a.dot(x) - &self.y;
        self.a.t().dot(&r) + x * self.mu
    }

    pub fn smooth_value(&self, x: &Point) -> f64 {
        let r = self.a.dot(x) - &self.y;
        0.5 * r.dot(&r) + 0.5 * self.mu * x.dot(x)
    }

    fn l1(&self, x: &Point) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

impl Objective for CompositeModel {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Point) -> ExtReal {
        ExtReal::Finite(self.smooth_value(x) + self.l1(x))
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        let zero = Point::zeros(self.dim());
        Subgradient {
            element: self.nearest_subgradient(x, &zero).expect("separable"),
            min_norm: true,
        }
    }

    fn nearest_subgradient(&self, x: &Point, target: &Point) -> Option<Point> {
        let g = self.smooth_grad(x);
        let lam = self.lambda;
        Some(
            g.iter()
                .zip(x.iter())
                .zip(target.iter())
                .map(|((&gi, &xi), &ti)| {
                    if xi > 0.0 {
                        gi + lam
                    } else if xi < 0.0 {
                        gi - lam
                    } else {
                        ti.clamp(gi - lam, gi + lam)
                    }
                })
                .collect(),
        )
    }

    fn structure(&self) -> Structure<'_> {
        Structure::Composite(self)
    }
}

/// (1/n) Σ max{0, 1 − bᵢ aᵢᵀx} + (ρ/2)‖x‖².
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
    pub rho: f64,
}

impl SvmModel {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    /// Margins bᵢ aᵢᵀx.
    pub fn margins(&self, x: &Point) -> Array1<f64> {
        self.features.dot(x) * &self.labels
    }

    /// ρx − (1/n) Σ sᵢ bᵢ aᵢ for hinge weights sᵢ ∈ [0, 1].
    pub fn element_from_weights(&self, x: &Point, weights: &Array1<f64>) -> Point {
        let n = self.n() as f64;
        let coef = weights * &self.labels / n;
        x * self.rho - self.features.t().dot(&coef)
    }
}

impl Objective for SvmModel {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &Point) -> ExtReal {
        let hinge: f64 = self.margins(x).iter().map(|m| (1.0 - m).max(0.0)).sum();
        ExtReal::Finite(hinge / self.n() as f64 + 0.5 * self.rho * x.dot(x))
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        let m = self.margins(x);
        let mut at_kink = false;
        let weights = m.mapv(|mi| {
            if mi < 1.0 {
                1.0
            } else if mi > 1.0 {
                0.0
            } else {
                at_kink = true;
                0.5
            }
        });
        Subgradient {
            element: self.element_from_weights(x, &weights),
            min_norm: !at_kink,
        }
    }

    fn nearest_subgradient(&self, x: &Point, _target: &Point) -> Option<Point> {
        let g = self.subgradient(x);
        // Singleton subdifferential away from the kinks.
        g.min_norm.then_some(g.element)
    }

    fn structure(&self) -> Structure<'_> {
        Structure::Svm(self)
    }
}
