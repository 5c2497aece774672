//! Small dense helpers over `ndarray` vectors and matrices.

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Largest squared singular value of `a` by power iteration on `aᵀa`.
///
/// Stops once the Rayleigh quotient changes by less than `rel_tol` relative.
pub fn max_singular_value_sq(a: &Array2<f64>, rel_tol: f64) -> f64 {
    let m = a.ncols();
    if m == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Array1<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n0 = norm(v.view());
    v /= n0;
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let w = a.t().dot(&a.dot(&v));
        let next = v.dot(&w);
        let nw = norm(w.view());
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Soft-thresholding, the prox of `t|·|`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn power_iteration_on_diagonal() {
        let a = array![[3.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        let s = max_singular_value_sq(&a, 1e-12);
        assert!((s - 9.0).abs() < 1e-8);
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(2.0, 1.0), 1.0);
        assert_eq!(soft_threshold(-2.0, 1.0), -1.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let g = linspace(-2.0, 0.0, 10_001);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[10_000], 0.0);
        assert_eq!(g[7_500], -0.5);
    }
}
