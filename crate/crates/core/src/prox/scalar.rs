//! Bisection on the monotone subproblem subdifferential of a one-dimensional objective.

use ndarray::array;

use super::{residual_certificate, BestSoFar, InnerTolerance, ProxResult};
use crate::error::Result;
use crate::problem::{Point, ProblemSpec};

/// Prox of a one-dimensional objective with 1/c > ρ.
///
/// H(x) = ∂f(x) + (x − z)/c is strongly monotone with modulus 1/c − ρ, so the
/// root lies within |g(z)|/(1/c − ρ) of `z`. Breakpoints inside the bracket
/// are tested first; then bisection on the sign of the subgradient nearest to
/// −(x − z)/c, one halving per inner iteration.
pub fn inner_solve_scalar(
    p: &ProblemSpec,
    z: &Point,
    c: f64,
    tol: &InnerTolerance,
) -> Result<ProxResult> {
    let modulus = 1.0 / c - p.rho;
    let zc = z[0];
    let mut best = BestSoFar::default();
    let eval = |x: f64, it: usize| -> Result<ProxResult> {
        let (r, _) = residual_certificate(p, &array![x], z, c)?;
        Ok(ProxResult::new(array![x], r, it))
    };

    let start = eval(zc, 0)?;
    if tol.accepts(start.residual_norm, z, z) {
        return Ok(start);
    }
    let g0 = start.residual_element[0];
    best.offer(&start);
    let radius = g0.abs() / modulus;
    let (mut lo, mut hi) = if g0 > 0.0 {
        (zc - radius, zc)
    } else {
        (zc, zc + radius)
    };

    for &k in p.objective().kinks() {
        if (lo..=hi).contains(&k) {
            let r = eval(k, 0)?;
            if r.residual_norm == 0.0 {
                return Ok(r);
            }
        }
    }

    let mut iterations = 0;
    for it in 1..=tol.max_inner_iterations {
        iterations = it;
        let mid = 0.5 * (lo + hi);
        let r = eval(mid, it)?;
        if tol.accepts(r.residual_norm, &r.point, z) {
            return Ok(r);
        }
        let h = r.residual_element[0];
        best.offer(&r);
        if h > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Err(best.exhausted(iterations))
}
