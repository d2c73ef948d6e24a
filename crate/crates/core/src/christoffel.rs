//! Christoffel function `K(x) = 1 / (x^T G^-1 x)` used as a class label.
//!
//! The eigenproblem `<X K X^T> a = lambda_K G a` gives a spectrum summing to
//! the total measure. Its largest eigenvalues give the low-rank
//! representation basis. Gaussian quadrature on the equal-weight measure over
//! `lambda_K` gives unsupervised clusters.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::clustering::{gauss_on_measure, DiscreteMeasure, GaussQuadrature};
use crate::eigenkernel::{cholesky, solve_gsym};
use crate::error::{Error, Result};
use crate::observations::Sample;
use crate::regularizer::{weighted_gram, RegularizedBasis};
use crate::spectral::entropy_of;

/// `K(x_l)` for every row of `x` (M x N) given the Gram matrix `g`.
pub fn christoffel_values(x: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let chol = cholesky(g)?;
    let y = chol
        .l()
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(DVector::from_iterator(
        y.ncols(),
        y.column_iter().map(|c| {
            let s = c.norm_squared();
            if s > 0.0 {
                1.0 / s
            } else {
                0.0
            }
        }),
    ))
}

#[derive(Debug, Clone)]
pub struct ChristoffelSpectrum {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// N x N, column i is `psi_K^i`.
    pub alphas: DMatrix<f64>,
    pub total_measure: f64,
    pub entropy: f64,
    /// `<X_j K X_k>`
    pub k_matrix: DMatrix<f64>,
    /// `<X_j X_k>`
    pub gram: DMatrix<f64>,
}

/// Christoffel spectrum of regularized rows `x` (M x N).
pub fn christoffel_spectrum(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<ChristoffelSpectrum> {
    let g = weighted_gram(x, w);
    let k = christoffel_values(x, &g)?;
    let k_matrix = weighted_gram(x, &k.component_mul(w));
    let sol = solve_gsym(&k_matrix, &g)?;
    let total = w.sum();
    let entropy = entropy_of(sol.eigenvalues.iter().map(|l| l.max(0.0) / total));
    Ok(ChristoffelSpectrum {
        eigenvalues: sol.eigenvalues,
        alphas: sol.eigenvectors,
        total_measure: total,
        entropy,
        k_matrix,
        gram: g,
    })
}

pub fn christoffel_spectrum_sample(sample: &Sample, basis: &RegularizedBasis) -> Result<ChristoffelSpectrum> {
    christoffel_spectrum(&basis.apply(&sample.x), &sample.w)
}

impl ChristoffelSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn psi(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        self.alphas.tr_mul(&x)
    }

    /// `sum_i (lambda_i - <1>/n)^2` from the spectrum.
    pub fn spur_variation(&self) -> f64 {
        let c = self.total_measure / self.dim() as f64;
        self.eigenvalues.iter().map(|l| (l - c) * (l - c)).sum()
    }

    /// The same quantity as `Spur (G^-1 <XKX> - <1>/n)^2` without diagonalization.
    pub fn spur_variation_matrix(&self) -> Result<f64> {
        let n = self.dim();
        let a = cholesky(&self.gram)?.solve(&self.k_matrix) - DMatrix::identity(n, n) * (self.total_measure / n as f64);
        Ok((&a * &a).trace())
    }
}

/// Low-rank representation: the `d` eigenfunctionals with the largest `lambda_K`.
#[derive(Debug, Clone)]
pub struct LrrBasis {
    pub d: usize,
    /// N x d, descending eigenvalue order.
    pub functionals: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// `<1> - sum of kept eigenvalues`.
    pub error: f64,
}

pub fn lrr_reduce(spectrum: &ChristoffelSpectrum, d: usize) -> Result<LrrBasis> {
    let n = spectrum.dim();
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!("LRR dimension {d} outside 1..={n}")));
    }
    let order: Vec<usize> = (0..n).rev().take(d).collect();
    let functionals = DMatrix::from_fn(spectrum.alphas.nrows(), d, |r, c| spectrum.alphas[(r, order[c])]);
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| spectrum.eigenvalues[i]));
    let error = spectrum.total_measure - eigenvalues.sum();
    Ok(LrrBasis {
        d,
        functionals,
        eigenvalues,
        error,
    })
}

impl LrrBasis {
    /// `<x_k | phi_i>` as an n x d matrix; `x_raw` is M x n, `x_reg` is M x N.
    pub fn projections(&self, x_raw: &DMatrix<f64>, x_reg: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let mut phi = x_reg * &self.functionals;
        for (l, mut row) in phi.row_iter_mut().enumerate() {
            row *= w[l];
        }
        x_raw.transpose() * phi
    }

    /// Low-rank data matrix `sum_i <x_k|phi_i> phi_i(x_l)`.
    pub fn reconstruct(&self, x_raw: &DMatrix<f64>, x_reg: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let p = self.projections(x_raw, x_reg, w);
        x_reg * &self.functionals * p.transpose()
    }
}

/// Unsupervised clusters from the equal-weight measure on `lambda_K`.
#[derive(Debug, Clone)]
pub struct UnsupervisedClusters {
    pub gauss: GaussQuadrature,
    /// N x n.
    pub alphas: DMatrix<f64>,
    /// n x D values `psi_G^m(lambda_K^i)`.
    pub psi_g: DMatrix<f64>,
}

pub fn unsupervised_clusters(spectrum: &ChristoffelSpectrum, d: usize) -> Result<UnsupervisedClusters> {
    let measure = DiscreteMeasure::equal(spectrum.eigenvalues.clone())?;
    let gauss = gauss_on_measure(&measure, d)?;
    let psi_g = gauss.eval_many(&spectrum.eigenvalues);
    Ok(UnsupervisedClusters {
        gauss,
        alphas: spectrum.alphas.clone(),
        psi_g,
    })
}

impl UnsupervisedClusters {
    pub fn nodes(&self) -> &DVector<f64> {
        &self.gauss.nodes
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.gauss.weights
    }

    /// `p^m(x) = sum_i [psi_K^i(x) psi_G^m(lambda_K^i)]^2` at a regularized point.
    pub fn density(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        let psi = self.alphas.tr_mul(&x).map(|v| v * v);
        self.psi_g.map(|v| v * v).tr_mul(&psi)
    }
}
