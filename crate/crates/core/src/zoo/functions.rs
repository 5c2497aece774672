//! One- and two-dimensional benchmark objectives.

use ndarray::array;

use crate::problem::{ExtReal, Objective, Point, Subgradient};

/// Quadratic piece `a x² + b x + c` on the interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPiece {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadPiece {
    fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    fn slope(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }
}

/// Continuous piecewise-quadratic function of one variable.
///
/// Pieces are contiguous and cover the real line. At a breakpoint the
/// subdifferential is the interval hull of the two one-sided slopes.
#[derive(Debug, Clone)]
pub struct PiecewiseQuadratic {
    pieces: Vec<QuadPiece>,
    breakpoints: Vec<f64>,
}

impl PiecewiseQuadratic {
    pub fn new(pieces: Vec<QuadPiece>) -> Self {
        assert!(!pieces.is_empty());
        assert_eq!(pieces[0].lo, f64::NEG_INFINITY);
        assert_eq!(pieces[pieces.len() - 1].hi, f64::INFINITY);
        for w in pieces.windows(2) {
            assert_eq!(w[0].hi, w[1].lo, "pieces must be contiguous");
        }
        let breakpoints = pieces[1..].iter().map(|p| p.lo).collect();
        PiecewiseQuadratic {
            pieces,
            breakpoints,
        }
    }

    fn piece_index(&self, x: f64) -> usize {
        self.pieces
            .iter()
            .position(|p| x < p.hi)
            .unwrap_or(self.pieces.len() - 1)
    }

    fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Interval [lo, hi] of the subdifferential at x.
    pub fn subdifferential(&self, x: f64) -> (f64, f64) {
        if let Some(i) = self.breakpoints.iter().position(|&b| b == x) {
            let left = self.pieces[i].slope(x);
            let right = self.pieces[i + 1].slope(x);
            (left.min(right), left.max(right))
        } else {
            let s = self.pieces[self.piece_index(x)].slope(x);
            (s, s)
        }
    }

    fn prox_scalar(&self, z: f64, c: f64) -> f64 {
        let phi = |x: f64| self.eval(x) + (x - z) * (x - z) / (2.0 * c);
        let mut best = f64::NAN;
        let mut best_val = f64::INFINITY;
        let mut consider = |x: f64| {
            if x.is_finite() {
                let v = phi(x);
                if v < best_val {
                    best_val = v;
                    best = x;
                }
            }
        };
        for p in &self.pieces {
            let qa = p.a + 0.5 / c;
            let qb = p.b - z / c;
            if qa > 0.0 {
                consider((-qb / (2.0 * qa)).clamp(p.lo, p.hi));
            }
            consider(p.lo);
            consider(p.hi);
        }
        best
    }
}

impl Objective for PiecewiseQuadratic {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> ExtReal {
        ExtReal::Finite(self.eval(x[0]))
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        let (lo, hi) = self.subdifferential(x[0]);
        Subgradient {
            element: array![0.0f64.clamp(lo, hi)],
            min_norm: true,
        }
    }

    fn nearest_subgradient(&self, x: &Point, target: &Point) -> Option<Point> {
        let (lo, hi) = self.subdifferential(x[0]);
        Some(array![target[0].clamp(lo, hi)])
    }

    fn prox(&self, z: &Point, c: f64) -> Option<Point> {
        Some(array![self.prox_scalar(z[0], c)])
    }

    fn kinks(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// f(x) = x² on |x| ≤ 1 and ½x⁴ + ½ outside: convex, not globally L-smooth.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadQuartic;

impl QuadQuartic {
    fn eval(x: f64) -> f64 {
        if x.abs() <= 1.0 {
            x * x
        } else {
            0.5 * x.powi(4) + 0.5
        }
    }

    fn slope(x: f64) -> f64 {
        if x.abs() <= 1.0 {
            2.0 * x
        } else {
            2.0 * x.powi(3)
        }
    }
}

impl Objective for QuadQuartic {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> ExtReal {
        ExtReal::Finite(Self::eval(x[0]))
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        Subgradient {
            element: array![Self::slope(x[0])],
            min_norm: true,
        }
    }

    fn nearest_subgradient(&self, x: &Point, _target: &Point) -> Option<Point> {
        Some(array![Self::slope(x[0])])
    }

    fn prox(&self, z: &Point, c: f64) -> Option<Point> {
        let z = z[0];
        let inner = z / (1.0 + 2.0 * c);
        if inner.abs() <= 1.0 {
            return Some(array![inner]);
        }
        // 2x³ + (x − z)/c = 0 on |x| > 1; the left side is increasing in x.
        let h = |x: f64| 2.0 * x.powi(3) + (x - z) / c;
        let (mut lo, mut hi) = if z > 0.0 {
            (1.0, z.max(1.0))
        } else {
            (z.min(-1.0), -1.0)
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let step = h(x) / (6.0 * x * x + 1.0 / c);
            let next = x - step;
            if next.is_finite() && (lo..=hi).contains(&next) {
                x = next;
            }
        }
        Some(array![x])
    }
}

/// f(x) = x² + 6 sin²(x): quadratic growth holds globally, but there are
/// suboptimal stationary points.
#[derive(Debug, Clone, Copy, Default)]
pub struct SineQuad;

impl Objective for SineQuad {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Point) -> ExtReal {
        let s = x[0].sin();
        ExtReal::Finite(x[0] * x[0] + 6.0 * s * s)
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        Subgradient {
            element: array![2.0 * x[0] + 6.0 * (2.0 * x[0]).sin()],
            min_norm: true,
        }
    }

    fn nearest_subgradient(&self, x: &Point, _target: &Point) -> Option<Point> {
        Some(self.subgradient(x).element)
    }
}

/// f(x) = ½(x₁² + κ x₂²).
#[derive(Debug, Clone, Copy)]
pub struct AnisoQuad {
    pub curvature: f64,
}

impl Objective for AnisoQuad {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Point) -> ExtReal {
        ExtReal::Finite(0.5 * (x[0] * x[0] + self.curvature * x[1] * x[1]))
    }

    fn subgradient(&self, x: &Point) -> Subgradient {
        Subgradient {
            element: array![x[0], self.curvature * x[1]],
            min_norm: true,
        }
    }

    fn nearest_subgradient(&self, x: &Point, _target: &Point) -> Option<Point> {
        Some(self.subgradient(x).element)
    }

    fn prox(&self, z: &Point, c: f64) -> Option<Point> {
        Some(array![z[0] / (1.0 + c), z[1] / (1.0 + c * self.curvature)])
    }
}
