//! Gram/moment matrices, the Lebesgue quadrature, and point predictors.
//!
//! All sums run over observations with their weights; `<g>` below means
//! `sum_l g(x_l) w_l`, not a normalized average.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::eigenkernel::solve_gsym;
use crate::error::{Error, Result};
use crate::observations::{EvaluatedRow, Sample};
use crate::regularizer::{weighted_gram, RegularizedBasis};

#[derive(Debug, Clone)]
pub struct GramPair {
    /// `<X_j X_k>`
    pub g: DMatrix<f64>,
    /// `<X_j f X_k>`
    pub f: DMatrix<f64>,
    /// `<X_j>`
    pub moments: DVector<f64>,
    pub total_measure: f64,
    /// `<f>`
    pub f_sum: f64,
    /// `<f^2>`
    pub f2_sum: f64,
}

/// Gram pair of regularized rows `x` (M x N).
pub fn build_gram(x: &DMatrix<f64>, f: &DVector<f64>, w: &DVector<f64>) -> Result<GramPair> {
    let m = x.nrows();
    if f.len() != m || w.len() != m {
        return Err(Error::Dimension(format!("{m} rows, {} labels, {} weights", f.len(), w.len())));
    }
    let fw = f.component_mul(w);
    Ok(GramPair {
        g: weighted_gram(x, w),
        f: weighted_gram(x, &fw),
        moments: x.transpose() * w,
        total_measure: w.sum(),
        f_sum: fw.sum(),
        f2_sum: fw.dot(f),
    })
}

pub fn build_gram_sample(sample: &Sample, basis: &RegularizedBasis) -> Result<GramPair> {
    if basis.input_dim() != sample.dim() {
        return Err(Error::Dimension(format!(
            "basis expects {} attributes, sample has {}",
            basis.input_dim(),
            sample.dim()
        )));
    }
    build_gram(&basis.apply(&sample.x), &sample.f, &sample.w)
}

/// Nodes, weights and eigenfunctionals of the Lebesgue quadrature.
#[derive(Debug, Clone)]
pub struct LebesgueQuadrature {
    /// Ascending eigenvalues.
    pub nodes: DVector<f64>,
    /// `<psi_i>^2`
    pub weights: DVector<f64>,
    /// Signed `<psi_i>`.
    pub means: DVector<f64>,
    /// N x D; column i holds the coefficients of `psi_i` in the regularized basis.
    pub alphas: DMatrix<f64>,
    pub total_measure: f64,
    pub f_sum: f64,
    pub f2_sum: f64,
}

/// Values of every predictor at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub f_rn: f64,
    pub f_ls: f64,
    pub f_rnw: f64,
    pub christoffel: f64,
    pub coverage: f64,
    pub psi: DVector<f64>,
    pub proj: DVector<f64>,
    pub entropy_cond: f64,
    /// Every `psi_i(x)` vanished (or every weighted one did); predictors fall back to the prior mean.
    pub degenerate: bool,
}

impl PointEvaluation {
    pub fn to_row(&self) -> EvaluatedRow {
        EvaluatedRow {
            f_rn: self.f_rn,
            f_ls: self.f_ls,
            christoffel: self.christoffel,
            f_rnw: self.f_rnw,
            coverage: self.coverage,
            psi: self.psi.iter().copied().collect(),
        }
    }
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy_of(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter()
        .filter(|v| *v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

pub fn lebesgue_quadrature(gram: &GramPair) -> Result<LebesgueQuadrature> {
    let sol = solve_gsym(&gram.f, &gram.g)?;
    let means = sol.eigenvectors.transpose() * &gram.moments;
    Ok(LebesgueQuadrature {
        weights: means.map(|v| v * v),
        nodes: sol.eigenvalues,
        means,
        alphas: sol.eigenvectors,
        total_measure: gram.total_measure,
        f_sum: gram.f_sum,
        f2_sum: gram.f2_sum,
    })
}

impl LebesgueQuadrature {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Regularized-basis dimension this quadrature evaluates on.
    pub fn basis_dim(&self) -> usize {
        self.alphas.nrows()
    }

    pub fn prior_mean(&self) -> f64 {
        self.f_sum / self.total_measure
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().copied().zip(self.weights.iter().copied()).collect()
    }

    /// `psi_i(x)` for one regularized point.
    pub fn psi(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        self.alphas.tr_mul(&x)
    }

    /// M x D matrix of `psi_i(x_l)`.
    pub fn psi_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.alphas
    }

    pub fn evaluate(&self, x: DVectorView<'_, f64>) -> PointEvaluation {
        self.evaluate_psi(self.psi(x))
    }

    /// Predictors from precomputed `psi_i(x)`.
    pub fn evaluate_psi(&self, psi: DVector<f64>) -> PointEvaluation {
        let d = self.dim();
        let sq = psi.map(|v| v * v);
        let norm: f64 = sq.sum();
        let f_ls: f64 = (0..d).map(|i| self.nodes[i] * self.means[i] * psi[i]).sum();
        let prior = self.prior_mean();
        if !(norm > 0.0) {
            return PointEvaluation {
                f_rn: prior,
                f_ls,
                f_rnw: prior,
                christoffel: 0.0,
                coverage: 0.0,
                proj: DVector::zeros(d),
                psi,
                entropy_cond: 0.0,
                degenerate: true,
            };
        }
        let f_rn = sq.dot(&self.nodes) / norm;
        let proj = &sq / norm;
        let post = proj.component_mul(&self.weights);
        let coverage = post.sum();
        let (f_rnw, entropy_cond, degenerate) = if coverage > 0.0 {
            let s = -post
                .iter()
                .filter(|v| **v > 0.0)
                .map(|v| v / self.total_measure * (v / coverage).ln())
                .sum::<f64>();
            (post.dot(&self.nodes) / coverage, s, false)
        } else {
            (prior, 0.0, true)
        };
        PointEvaluation {
            f_rn,
            f_ls,
            f_rnw,
            christoffel: 1.0 / norm,
            coverage,
            psi,
            proj,
            entropy_cond,
            degenerate,
        }
    }

    pub fn prior_entropy(&self) -> f64 {
        entropy_of(self.weights.iter().map(|w| w / self.total_measure))
    }
}

/// `-sum (w/<1>) ln (w/<1>)` over the quadrature weights.
pub fn prior_entropy(model: &LebesgueQuadrature) -> f64 {
    model.prior_entropy()
}

/// Both sides of `<f^2> - sum f_i^2 w_i = <(f - fbar)^2> - sum (f_i - fbar)^2 w_i`.
pub fn variation_identity(gram: &GramPair, model: &LebesgueQuadrature) -> (f64, f64) {
    let fbar = gram.f_sum / gram.total_measure;
    let explained: f64 = model.nodes.iter().zip(model.weights.iter()).map(|(f, w)| f * f * w).sum();
    let lhs = gram.f2_sum - explained;
    let centered = gram.f2_sum - 2.0 * fbar * gram.f_sum + fbar * fbar * gram.total_measure;
    let explained_c: f64 = model
        .nodes
        .iter()
        .zip(model.weights.iter())
        .map(|(f, w)| (f - fbar) * (f - fbar) * w)
        .sum();
    (lhs, centered - explained_c)
}
