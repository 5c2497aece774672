//! Accelerated proximal gradient for the composite subproblem
//! s(x) + λ‖x‖₁ + ‖x − z‖²/(2c), where s is the smooth part of the model.

use super::{BestSoFar, InnerTolerance, ProxResult};
use crate::error::Result;
use crate::linalg::soft_threshold;
use crate::problem::Point;
use crate::zoo::CompositeModel;

/// Solve the composite prox subproblem, warm-started at `z`.
///
/// Uses step 1/(L_s + 1/c) and the constant momentum of the strongly convex
/// variant, with a gradient-based restart. After each step
/// w = prox_{tλ‖·‖₁}(y − t∇q(y)) the vector (y − w)/t + ∇q(w) − ∇q(y) lies in
/// the subdifferential of the subproblem at w and serves as the certificate.
pub fn inner_solve_composite(
    model: &CompositeModel,
    z: &Point,
    c: f64,
    tol: &InnerTolerance,
) -> Result<ProxResult> {
    let grad_q = |x: &Point| model.smooth_grad(x) + (x - z) / c;
    let lip = model.smooth_lipschitz + 1.0 / c;
    let strong = model.mu + 1.0 / c;
    let t = 1.0 / lip;
    let momentum = (lip.sqrt() - strong.sqrt()) / (lip.sqrt() + strong.sqrt());

    let mut best = BestSoFar::default();
    let start = ProxResult::new(z.clone(), exact_residual(model, z, z, c), 0);
    if tol.accepts(start.residual_norm, z, z) {
        return Ok(start);
    }
    best.offer(&start);

    let mut x = z.clone();
    let mut y = z.clone();
    for it in 1..=tol.max_inner_iterations {
        let gy = grad_q(&y);
        let step = &y - &(&gy * t);
        let w = step.mapv(|v| soft_threshold(v, t * model.lambda));
        let cert = (&y - &w) / t + grad_q(&w) - gy;
        let candidate = ProxResult::new(w.clone(), cert, it);
        if tol.accepts(candidate.residual_norm, &w, z) {
            return Ok(candidate);
        }
        best.offer(&candidate);
        // Gradient-based restart: drop the momentum when it points uphill.
        let uphill = (&y - &w).dot(&(&w - &x)) > 0.0;
        y = if uphill {
            w.clone()
        } else {
            &w + &((&w - &x) * momentum)
        };
        x = w;
    }
    Err(best.exhausted(tol.max_inner_iterations))
}

/// dist(0, H(x)) in closed form: the ℓ₁ subdifferential is a box.
fn exact_residual(model: &CompositeModel, x: &Point, z: &Point, c: f64) -> Point {
    let g = model.smooth_grad(x) + (x - z) / c;
    let lam = model.lambda;
    g.iter()
        .zip(x.iter())
        .map(|(&gi, &xi)| {
            if xi > 0.0 {
                gi + lam
            } else if xi < 0.0 {
                gi - lam
            } else {
                soft_threshold(gi, lam)
            }
        })
        .collect()
}
