//! Synthetic inputs shared by the benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rn_core::Sample;

/// Runge data on `[-1, 1]` with the trapezoid weights and monomial columns `1, x, .., x^(n-1)`.
pub fn runge(n: usize, points: usize) -> Sample {
    let dx = 2.0 / (points - 1) as f64;
    let x = DMatrix::from_fn(points, n, |l, k| (-1.0 + l as f64 * dx).powi(k as i32));
    let f = DVector::from_fn(points, |l, _| {
        let t = -1.0 + l as f64 * dx;
        1.0 / (1.0 + 25.0 * t * t)
    });
    let w = DVector::from_fn(points, |l, _| if l == 0 || l + 1 == points { dx / 2.0 } else { dx });
    Sample::new(x, f, w).expect("valid sample")
}

/// Random attributes in `[-1, 1]` with a smooth label.
pub fn random_sample(m: usize, n: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: DMatrix<f64> = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let f = DVector::from_fn(m, |l, _| x.row(l).iter().map(|v| v.sin()).sum::<f64>());
    Sample::new(x, f, DVector::from_element(m, 1.0)).expect("valid sample")
}

/// Random symmetric `F` and symmetric positive definite `G`.
pub fn random_pencil(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let g = &a * a.transpose() + DMatrix::identity(n, n) * n as f64;
    let f = &b + b.transpose();
    (f, g)
}
