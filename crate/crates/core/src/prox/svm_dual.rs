//! Dual coordinate ascent for the hinge-loss prox subproblem
//! (1/n) Σ max{0, 1 − bᵢ aᵢᵀx} + (ρ/2)‖x‖² + ‖x − z‖²/(2c).

use ndarray::Array1;

use super::{BestSoFar, InnerTolerance, ProxResult};
use crate::error::Result;
use crate::problem::Point;
use crate::zoo::SvmModel;

/// Margins within this distance of 1 count as kinks, where any hinge weight
/// in [0, 1] is a valid subgradient.
pub const KINK_BAND: f64 = 1e-9;

/// Solve the SVM prox subproblem through its box-constrained dual.
///
/// With σ = ρ + 1/c and u = z/(cσ), the primal point is
/// x(α) = u + (1/σ) Σ αᵢ bᵢ aᵢ for αᵢ ∈ [0, 1/n]. Each epoch updates every αᵢ
/// exactly. The certificate uses hinge weights sᵢ read off the margins of
/// x(α), taking sᵢ = nαᵢ inside the kink band. The dual starts from the hinge
/// selection at `z`, which is checked first; an epoch is one inner iteration.
pub fn inner_solve_svm_dual(
    model: &SvmModel,
    z: &Point,
    c: f64,
    tol: &InnerTolerance,
) -> Result<ProxResult> {
    let n = model.n();
    let nf = n as f64;
    let sigma = model.rho + 1.0 / c;
    let u = z / (c * sigma);
    let rows: Vec<Array1<f64>> = model
        .features
        .rows()
        .into_iter()
        .zip(model.labels.iter())
        .map(|(a, &b)| a.to_owned() * b)
        .collect();
    let sq_norms: Vec<f64> = rows.iter().map(|r| r.dot(r)).collect();

    let weights_at = |x: &Point, alpha: Option<&Array1<f64>>| -> Array1<f64> {
        let m = model.margins(x);
        Array1::from_shape_fn(n, |i| {
            if (m[i] - 1.0).abs() <= KINK_BAND {
                alpha.map_or(0.5, |a| (a[i] * nf).clamp(0.0, 1.0))
            } else if m[i] < 1.0 {
                1.0
            } else {
                0.0
            }
        })
    };
    let certify = |x: &Point, weights: &Array1<f64>, iterations: usize| {
        let r = model.element_from_weights(x, weights) + (x - z) / c;
        ProxResult::new(x.clone(), r, iterations)
    };

    let mut best = BestSoFar::default();
    let mut alpha = weights_at(z, None) / nf;
    let start = certify(z, &(&alpha * nf), 0);
    if tol.accepts(start.residual_norm, z, z) {
        return Ok(start);
    }
    best.offer(&start);

    let mut x = u.clone();
    for (i, row) in rows.iter().enumerate() {
        x.scaled_add(alpha[i] / sigma, row);
    }
    for epoch in 1..=tol.max_inner_iterations {
        for (i, row) in rows.iter().enumerate() {
            if sq_norms[i] == 0.0 {
                alpha[i] = 1.0 / nf;
                continue;
            }
            let grad = 1.0 - row.dot(&x);
            let next = (alpha[i] + sigma * grad / sq_norms[i]).clamp(0.0, 1.0 / nf);
            let delta = next - alpha[i];
            if delta != 0.0 {
                x.scaled_add(delta / sigma, row);
                alpha[i] = next;
            }
        }
        let candidate = certify(&x, &weights_at(&x, Some(&alpha)), epoch);
        if tol.accepts(candidate.residual_norm, &x, z) {
            return Ok(candidate);
        }
        best.offer(&candidate);
    }
    Err(best.exhausted(tol.max_inner_iterations))
}
