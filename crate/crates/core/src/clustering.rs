//! Optimal D-cluster reduction.
//!
//! A Gaussian quadrature with D nodes is built on the discrete measure given
//! by the Lebesgue quadrature (nodes `f_i`, masses `w_i`). Its eigenpolynomials
//! `psi_G^m(f)` are then carried back to x-space as
//! `psi_G^m(x) = sum_i psi_G^m(f_i) <psi_i> psi_i(x)`.
//!
//! The orthonormal polynomials come from a Lanczos recurrence on the measure,
//! taken on the affine image of `[min, max]` of the positive-mass support.

use nalgebra::{DMatrix, DVector};

use crate::eigenkernel::solve_gsym;
use crate::error::{Error, Result};
use crate::spectral::LebesgueQuadrature;

/// Relative tolerance for merging nodes and for ignoring tiny masses.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub support: DVector<f64>,
    pub mass: DVector<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: DVector<f64>, mass: DVector<f64>) -> Result<Self> {
        if support.len() != mass.len() {
            return Err(Error::Dimension(format!("{} nodes, {} masses", support.len(), mass.len())));
        }
        if mass.iter().any(|m| *m < 0.0 || !m.is_finite()) || support.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("measure masses must be finite and nonnegative".into()));
        }
        Ok(DiscreteMeasure { support, mass })
    }

    /// Unit mass on every node.
    pub fn equal(support: DVector<f64>) -> Result<Self> {
        let mass = DVector::from_element(support.len(), 1.0);
        Self::new(support, mass)
    }

    pub fn total(&self) -> f64 {
        self.mass.sum()
    }

    fn positive(&self) -> Vec<f64> {
        let cut = SUPPORT_TOL * self.total();
        let mut pts: Vec<f64> = self
            .support
            .iter()
            .zip(self.mass.iter())
            .filter(|(_, m)| **m > cut)
            .map(|(s, _)| *s)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// Distinct nodes carrying mass above `SUPPORT_TOL * total`.
    pub fn effective_support(&self) -> usize {
        let pts = self.positive();
        let scale = pts.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut count = 0;
        let mut last: Option<f64> = None;
        for p in pts {
            if last.is_none_or(|q| p - q > SUPPORT_TOL * scale) {
                count += 1;
                last = Some(p);
            }
        }
        count
    }
}

/// A D-point Gaussian quadrature and its orthonormal polynomials.
#[derive(Debug, Clone)]
pub struct GaussQuadrature {
    pub nodes: DVector<f64>,
    pub weights: DVector<f64>,
    /// Three-term recurrence of the orthonormal polynomials `p_k` in the
    /// scaled variable `u = (f - center) / half_width`:
    /// `beta[k+1] p_{k+1} = (u - alpha[k]) p_k - beta[k] p_{k-1}`.
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    /// D x D; column m holds `psi_G^m` in the `p_k` basis.
    pub vectors: DMatrix<f64>,
    pub total: f64,
    pub center: f64,
    pub half_width: f64,
}

impl GaussQuadrature {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    fn basis(&self, f: f64) -> DVector<f64> {
        let d = self.dim();
        let u = (f - self.center) / self.half_width;
        let mut p = DVector::zeros(d);
        p[0] = 1.0 / self.total.sqrt();
        if d > 1 {
            p[1] = (u - self.alpha[0]) * p[0] / self.beta[1];
        }
        for k in 1..d.saturating_sub(1) {
            p[k + 1] = ((u - self.alpha[k]) * p[k] - self.beta[k] * p[k - 1]) / self.beta[k + 1];
        }
        p
    }

    /// `psi_G^m(f)` for every m.
    pub fn eval(&self, f: f64) -> DVector<f64> {
        self.vectors.tr_mul(&self.basis(f))
    }

    /// `psi_G^m(f_i)` as a len(f) x D matrix.
    pub fn eval_many(&self, f: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(f.len(), self.dim());
        for (i, v) in f.iter().enumerate() {
            out.set_row(i, &self.eval(*v).transpose());
        }
        out
    }
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Gaussian quadrature with `d` nodes on a discrete measure.
///
/// Lanczos on `diag(support)` started from `sqrt(mass)`, with full
/// reorthogonalization, gives the Jacobi matrix; its eigenvalues are the nodes
/// and the squared first eigenvector components the normalized weights.
pub fn gauss_on_measure(measure: &DiscreteMeasure, d: usize) -> Result<GaussQuadrature> {
    let support = measure.effective_support();
    if d == 0 || d > support {
        return Err(Error::SupportTooSmall { requested: d, support });
    }
    let pts = measure.positive();
    let (lo, hi) = (pts[0], pts[pts.len() - 1]);
    let center = 0.5 * (lo + hi);
    let half_width = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let total = measure.total();

    let u = measure.support.map(|s| (s - center) / half_width);
    let mut q0 = measure.mass.map(f64::sqrt);
    q0 /= total.sqrt();
    let mut alpha = DVector::zeros(d);
    let mut beta = DVector::zeros(d);
    let mut qs = vec![q0];
    for k in 0..d {
        let mut v = u.component_mul(&qs[k]);
        alpha[k] = qs[k].dot(&v);
        orthogonalize(&mut v, &qs);
        if k + 1 < d {
            let b = v.norm();
            if !(b > SUPPORT_TOL) {
                return Err(Error::SupportTooSmall { requested: d, support: k + 1 });
            }
            beta[k + 1] = b;
            qs.push(v / b);
        }
    }

    let mut jacobi = DMatrix::from_diagonal(&alpha);
    for k in 1..d {
        jacobi[(k, k - 1)] = beta[k];
        jacobi[(k - 1, k)] = beta[k];
    }
    let sol = solve_gsym(&jacobi, &DMatrix::identity(d, d))?;
    let mut vectors = sol.eigenvectors;
    for mut col in vectors.column_iter_mut() {
        if col[0] < 0.0 {
            col.neg_mut();
        }
    }
    let weights = DVector::from_fn(d, |m, _| total * vectors[(0, m)] * vectors[(0, m)]);
    Ok(GaussQuadrature {
        nodes: sol.eigenvalues.map(|e| center + half_width * e),
        weights,
        alpha,
        beta,
        vectors,
        total,
        center,
        half_width,
    })
}

/// D separating functionals in x-space with their quadrature.
#[derive(Debug, Clone)]
pub struct ClusterBasis {
    pub d: usize,
    pub gauss: GaussQuadrature,
    /// Nodes `lambda_G`, weights `w_G`, and `psi_G^m(x)` coefficients in the
    /// regularized basis; usable like any other Lebesgue quadrature.
    pub quadrature: LebesgueQuadrature,
}

impl ClusterBasis {
    pub fn nodes(&self) -> &DVector<f64> {
        &self.quadrature.nodes
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.quadrature.weights
    }
}

/// Reduce a Lebesgue quadrature to its optimal `d`-cluster basis.
pub fn reduce_basis(model: &LebesgueQuadrature, d: usize) -> Result<ClusterBasis> {
    let measure = DiscreteMeasure::new(model.nodes.clone(), model.weights.clone())?;
    let gauss = gauss_on_measure(&measure, d)?;
    let psi_g = gauss.eval_many(&model.nodes); // n x d
    let mut scaled = model.alphas.clone();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col *= model.means[i];
    }
    let alphas = scaled * &psi_g;
    let means = psi_g.tr_mul(&model.weights);
    Ok(ClusterBasis {
        d,
        quadrature: LebesgueQuadrature {
            nodes: gauss.nodes.clone(),
            weights: gauss.weights.clone(),
            means,
            alphas,
            total_measure: model.total_measure,
            f_sum: model.f_sum,
            f2_sum: model.f2_sum,
        },
        gauss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_gram, lebesgue_quadrature};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn measure(s: &[f64], m: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(DVector::from_row_slice(s), DVector::from_row_slice(m)).unwrap()
    }

    #[test]
    fn two_point_centroid() {
        let q = gauss_on_measure(&measure(&[0.0, 1.0], &[1.0, 1.0]), 1).unwrap();
        assert!(close(q.nodes[0], 0.5, 1e-15));
        assert!(close(q.weights[0], 2.0, 1e-14));
    }

    #[test]
    fn full_support_reproduces_measure() {
        let m = measure(&[0.3, -1.0, 2.5, 4.0, 0.7], &[0.2, 1.0, 0.0, 3.0, 0.5]);
        assert_eq!(m.effective_support(), 4);
        let q = gauss_on_measure(&m, 4).unwrap();
        let want = [(-1.0, 1.0), (0.3, 0.2), (0.7, 0.5), (4.0, 3.0)];
        for (i, (node, w)) in want.iter().enumerate() {
            assert!(close(q.nodes[i], *node, 1e-12), "{} {}", q.nodes[i], node);
            assert!(close(q.weights[i], *w, 1e-11), "{} {}", q.weights[i], w);
        }
        assert!(matches!(gauss_on_measure(&m, 5), Err(Error::SupportTooSmall { requested: 5, support: 4 })));
    }

    #[test]
    fn exact_moments_and_lagrange_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..5.0)).collect();
        let w: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
        let m = measure(&s, &w);
        for d in 1..=6 {
            let q = gauss_on_measure(&m, d).unwrap();
            for p in 0..2 * d {
                let exact: f64 = s.iter().zip(&w).map(|(x, w)| x.powi(p as i32) * w).sum();
                let approx: f64 = q.nodes.iter().zip(q.weights.iter()).map(|(x, w)| x.powi(p as i32) * w).sum();
                assert!(close(exact, approx, 1e-9), "d={d} p={p}: {exact} {approx}");
            }
            for mm in 0..d {
                let vals = q.eval(q.nodes[mm]);
                for s2 in 0..d {
                    if s2 != mm {
                        assert!(vals[s2].abs() < 1e-9 * vals[mm].abs());
                    }
                }
            }
        }
    }

    #[test]
    fn clustered_nodes_with_outlier() {
        let s = [0.6025, 0.7129, 0.8233, 0.9335, 1.1969, 1.4954, 1.8265, 4.9578];
        let w = [37.95, 58.41, 7.297, 7.967, 7.180, 0.6524, 1.191, 25.53];
        let m = measure(&s, &w);
        let q = gauss_on_measure(&m, 8).unwrap();
        for i in 0..8 {
            assert!(close(q.nodes[i], s[i], 1e-13));
            assert!(close(q.weights[i], w[i], 1e-12), "{} {}", q.weights[i], w[i]);
        }
        let second: f64 = s.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        for d in 2..8 {
            let q = gauss_on_measure(&m, d).unwrap();
            let approx: f64 = q.nodes.iter().zip(q.weights.iter()).map(|(x, w)| x * x * w).sum();
            assert!(close(approx, second, 1e-13), "d={d}");
        }
    }

    #[test]
    fn merged_nodes_count_once() {
        let m = measure(&[1.0, 1.0 + 1e-15, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(m.effective_support(), 2);
        let m = measure(&[1.0, 2.0, 3.0], &[1.0, 1e-14, 1.0]);
        assert_eq!(m.effective_support(), 2);
    }

    #[test]
    fn reduced_basis_orthonormal_on_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mm, n) = (80, 5);
        let x: DMatrix<f64> = DMatrix::from_fn(mm, n, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) });
        let f = DVector::from_fn(mm, |l, _| x[(l, 1)].powi(2) + 0.3 * x[(l, 2)]);
        let w = DVector::from_fn(mm, |_, _| rng.gen_range(0.5..1.5));
        let gram = build_gram(&x, &f, &w).unwrap();
        let model = lebesgue_quadrature(&gram).unwrap();
        let tv_full = gram.f2_sum - model.pairs().iter().map(|(f, w)| f * f * w).sum::<f64>();
        for d in 2..=n {
            let cb = reduce_basis(&model, d).unwrap();
            let q = &cb.quadrature;
            assert!(close(q.weights.sum(), w.sum(), 1e-10));
            let psi = q.psi_matrix(&x);
            for a in 0..d {
                let mean: f64 = (0..mm).map(|l| psi[(l, a)] * w[l]).sum();
                assert!(close(mean * mean, q.weights[a], 1e-8));
                for b in 0..d {
                    let g: f64 = (0..mm).map(|l| psi[(l, a)] * psi[(l, b)] * w[l]).sum();
                    let fg: f64 = (0..mm).map(|l| psi[(l, a)] * psi[(l, b)] * f[l] * w[l]).sum();
                    let delta = if a == b { 1.0 } else { 0.0 };
                    assert!((g - delta).abs() < 1e-8);
                    assert!((fg - delta * q.nodes[a]).abs() < 1e-8);
                }
            }
            let tv = gram.f2_sum - q.pairs().iter().map(|(f, w)| f * f * w).sum::<f64>();
            assert!(close(tv, tv_full, 1e-8), "d={d}: {tv} {tv_full}");
        }
        let full = reduce_basis(&model, n).unwrap();
        for i in 0..n {
            assert!(close(full.quadrature.nodes[i], model.nodes[i], 1e-9));
            assert!(close(full.quadrature.weights[i], model.weights[i], 1e-8));
        }
    }
}
