//! Vector-valued class labels.
//!
//! Both the attributes `x` (n components) and the label `f` (m components)
//! are assumed already regularized, each containing a constant. Everything
//! here is built from the three matrices `Gx = <x x^T>`, `Gf = <f f^T>`
//! and `Gxf = <x f^T>`, and is unchanged by independent invertible remaps of
//! the x- and f-components.

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView, Dyn};

use crate::christoffel::{christoffel_spectrum, christoffel_values, ChristoffelSpectrum};
use crate::eigenkernel::{cholesky, solve_gsym, GevSolution};
use crate::error::{Error, Result};
use crate::regularizer::weighted_gram;
use crate::spectral::{build_gram, lebesgue_quadrature, GramPair, LebesgueQuadrature};

#[derive(Debug, Clone)]
pub struct CrossGram {
    pub gx: DMatrix<f64>,
    pub gf: DMatrix<f64>,
    /// n x m.
    pub gxf: DMatrix<f64>,
    pub total_measure: f64,
    gx_chol: Cholesky<f64, Dyn>,
    gf_chol: Cholesky<f64, Dyn>,
}

impl CrossGram {
    /// From x rows (M x n), f rows (M x m) and weights.
    pub fn new(x: &DMatrix<f64>, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<Self> {
        if x.nrows() != f.nrows() || x.nrows() != w.len() {
            return Err(Error::Dimension(format!(
                "{} x rows, {} f rows, {} weights",
                x.nrows(),
                f.nrows(),
                w.len()
            )));
        }
        let gx = weighted_gram(x, w);
        let gf = weighted_gram(f, w);
        let mut wf = f.clone();
        for (l, mut row) in wf.row_iter_mut().enumerate() {
            row *= w[l];
        }
        let gxf = x.transpose() * wf;
        Self::from_matrices(gx, gf, gxf, w.sum())
    }

    pub fn from_matrices(gx: DMatrix<f64>, gf: DMatrix<f64>, gxf: DMatrix<f64>, total_measure: f64) -> Result<Self> {
        if gxf.nrows() != gx.nrows() || gxf.ncols() != gf.nrows() {
            return Err(Error::Dimension("Gxf does not match Gx and Gf".into()));
        }
        Ok(CrossGram {
            gx_chol: cholesky(&gx)?,
            gf_chol: cholesky(&gf)?,
            gx,
            gf,
            gxf,
            total_measure,
        })
    }

    pub fn n(&self) -> usize {
        self.gx.nrows()
    }

    pub fn m(&self) -> usize {
        self.gf.nrows()
    }

    /// `<f_j(x) f_k(x)>` with f projected on x-space: `Gxf^T Gx^-1 Gxf`.
    pub fn projected_f_gram(&self) -> DMatrix<f64> {
        let p = self.gxf.tr_mul(&self.gx_chol.solve(&self.gxf));
        (&p + p.transpose()) * 0.5
    }

    /// Least-squares label estimate `Gxf^T Gx^-1 y`.
    pub fn f_ls(&self, y: DVectorView<'_, f64>) -> DVector<f64> {
        self.gxf.tr_mul(&self.gx_chol.solve(&y.into_owned()))
    }

    /// `Norm^2(y)`: the `Gf^-1` norm of `f_ls(y)`.
    pub fn norm2(&self, y: DVectorView<'_, f64>) -> f64 {
        let b = self.f_ls(y);
        b.dot(&self.gf_chol.solve(&b))
    }

    /// `b(y) = f_ls(y) / Norm(y)`.
    pub fn b(&self, y: DVectorView<'_, f64>) -> Result<DVector<f64>> {
        let n2 = self.norm2(y);
        if !(n2 > 0.0) {
            return Err(Error::Degenerate("y is orthogonal to the projected f-space".into()));
        }
        Ok(self.f_ls(y) / n2.sqrt())
    }
}

/// `m - Spur(Gxf^T Gx^-1 Gxf Gf^-1)`.
pub fn error_rank(cg: &CrossGram) -> f64 {
    let p = cg.projected_f_gram();
    cg.m() as f64 - cg.gf_chol.solve(&p).trace()
}

/// Eigenvalues of `Gxf^T Gx^-1 Gxf a = lambda Gf a`, each in `[0, 1]`.
pub fn projection_spectrum(cg: &CrossGram) -> Result<GevSolution> {
    solve_gsym(&cg.projected_f_gram(), &cg.gf)
}

/// `<f_j K^(f) f_k>`: the Christoffel matrix in f-space, rows of `f` are M x m.
pub fn f_christoffel_matrix(f: &DMatrix<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let gf = weighted_gram(f, w);
    let k = christoffel_values(f, &gf)?;
    Ok(weighted_gram(f, &k.component_mul(w)))
}

/// `K^(f->x) = Gxf Gf^-1 <f K f> Gf^-1 Gxf^T`.
pub fn k_f_to_x(cg: &CrossGram, kf: &DMatrix<f64>) -> DMatrix<f64> {
    let a = cg.gf_chol.solve(&cg.gxf.transpose()); // m x n
    let k = a.tr_mul(&(kf * &a));
    (&k + k.transpose()) * 0.5
}

/// Spectrum of `K^(f->x) a = lambda Gx a` and `Error = <1> - sum lambda`.
pub fn error_coverage_spectrum(cg: &CrossGram, kf: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    if cg.m() > cg.n() {
        return Err(Error::InvalidArgument(format!("label dimension {} exceeds attribute dimension {}", cg.m(), cg.n())));
    }
    let sol = solve_gsym(&k_f_to_x(cg, kf), &cg.gx)?;
    let err = cg.total_measure - sol.eigenvalues.sum();
    Ok((sol.eigenvalues, err))
}

/// `<1> - Spur(K^(f->x) Gx^-1)`.
pub fn error_coverage_spur(cg: &CrossGram, kf: &DMatrix<f64>) -> f64 {
    cg.total_measure - cg.gx_chol.solve(&k_f_to_x(cg, kf)).trace()
}

/// Covered fraction of the f-localized state at `g` after projecting on x-space.
pub fn varpi(cg: &CrossGram, g: DVectorView<'_, f64>) -> Result<f64> {
    let a = cg.gf_chol.solve(&g.into_owned());
    let denom = g.dot(&a);
    if !(denom > 0.0) {
        return Err(Error::Degenerate("label vector has zero Gf^-1 norm".into()));
    }
    let v = &cg.gxf * &a;
    Ok(v.dot(&cg.gx_chol.solve(&v)) / denom)
}

/// `<1> - sum_l w_l varpi(f_l)`, summed row by row.
pub fn error_coverage_rows(cg: &CrossGram, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    let mut covered = 0.0;
    for l in 0..f.nrows() {
        covered += w[l] * varpi(cg, f.row(l).transpose().as_view())?;
    }
    Ok(cg.total_measure - covered)
}

/// Probability of outcome `g` given input `y`.
pub fn prob_given(cg: &CrossGram, y: DVectorView<'_, f64>, g: DVectorView<'_, f64>) -> Result<f64> {
    let n2 = cg.norm2(y);
    if !(n2 > 0.0) {
        return Err(Error::Degenerate("y is orthogonal to the projected f-space".into()));
    }
    let ag = cg.gf_chol.solve(&g.into_owned());
    let gnorm = g.dot(&ag);
    if !(gnorm > 0.0) {
        return Err(Error::Degenerate("label vector has zero Gf^-1 norm".into()));
    }
    let num = cg.f_ls(y).dot(&ag);
    Ok(num * num / (n2 * gnorm))
}

/// `<1> - sum_l w_l Prob(f_l | x_l)`.
pub fn error_tilde(cg: &CrossGram, x: &DMatrix<f64>, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    let mut covered = 0.0;
    for l in 0..x.nrows() {
        covered += w[l] * prob_given(cg, x.row(l).transpose().as_view(), f.row(l).transpose().as_view())?;
    }
    Ok(cg.total_measure - covered)
}

/// Spectrum of the rank-one problem `b b^T a = lambda Gf a` at `y`.
pub fn b_spectrum(cg: &CrossGram, y: DVectorView<'_, f64>) -> Result<GevSolution> {
    let b = cg.b(y)?;
    solve_gsym(&(&b * b.transpose()), &cg.gf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub error_rank: f64,
    pub error_coverage: f64,
    pub error_tilde: f64,
}

pub fn error_report(x: &DMatrix<f64>, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<ErrorReport> {
    let cg = CrossGram::new(x, f, w)?;
    let kf = f_christoffel_matrix(f, w)?;
    Ok(ErrorReport {
        error_rank: error_rank(&cg),
        error_coverage: error_coverage_spectrum(&cg, &kf)?.1,
        error_tilde: error_tilde(&cg, x, f, w)?,
    })
}

/// `Error = <1>_W - K_W(g)` for an averaging predictor with row weights `W_x(l)`.
pub fn weighted_error(f: &DMatrix<f64>, row_weight: impl Fn(usize) -> f64, g: DVectorView<'_, f64>) -> Result<f64> {
    let w = DVector::from_fn(f.nrows(), |l, _| row_weight(l));
    if w.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("row weights must be nonnegative".into()));
    }
    let gw = weighted_gram(f, &w);
    let a = cholesky(&gw)?.solve(&g.into_owned());
    Ok(w.sum() - 1.0 / g.dot(&a))
}

/// Relative-frequency spectrum from the two Christoffel functions.
#[derive(Debug, Clone)]
pub struct RelativeFrequency {
    pub eigenvalues: DVector<f64>,
    pub alphas: DMatrix<f64>,
}

/// Solve `<x K(f) x^T> a = lambda_R <x K(x) x^T> a`.
pub fn relative_frequency_spectrum(x: &DMatrix<f64>, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<RelativeFrequency> {
    let kx = christoffel_values(x, &weighted_gram(x, w))?;
    let kf = christoffel_values(f, &weighted_gram(f, w))?;
    let lhs = weighted_gram(x, &kf.component_mul(w));
    let rhs = weighted_gram(x, &kx.component_mul(w));
    let sol = solve_gsym(&lhs, &rhs)?;
    Ok(RelativeFrequency {
        eigenvalues: sol.eigenvalues,
        alphas: sol.eigenvectors,
    })
}

impl RelativeFrequency {
    /// `R(x) = sum lambda psi^2 / sum psi^2`.
    pub fn estimate(&self, x: DVectorView<'_, f64>) -> f64 {
        let psi2 = self.alphas.tr_mul(&x).map(|v| v * v);
        psi2.dot(&self.eigenvalues) / psi2.sum()
    }
}

/// Keep only the diagonal of F in the `psi_K` basis: `F' = G A diag(A^T F A) A^T G`.
pub fn diagonalize_f_in_k_basis(gram: &GramPair, spectrum: &ChristoffelSpectrum) -> GramPair {
    let a = &spectrum.alphas;
    let diag = a.tr_mul(&(&gram.f * a)).diagonal();
    let ga = &gram.g * a;
    let f = &ga * DMatrix::from_diagonal(&diag) * ga.transpose();
    GramPair {
        f: (&f + f.transpose()) * 0.5,
        ..gram.clone()
    }
}

/// Per-component predictors for a vector label sharing one attribute basis.
#[derive(Debug, Clone)]
pub struct VectorPredictor {
    pub components: Vec<LebesgueQuadrature>,
    pub spectrum: ChristoffelSpectrum,
    /// N x m, `<psi_K^i | f_j | psi_K^i>`.
    pub f_diag: DMatrix<f64>,
}

impl VectorPredictor {
    /// `x` is M x N regularized, `f` is M x m raw label components.
    pub fn new(x: &DMatrix<f64>, f: &DMatrix<f64>, w: &DVector<f64>) -> Result<Self> {
        let spectrum = christoffel_spectrum(x, w)?;
        let mut components = Vec::with_capacity(f.ncols());
        let mut f_diag = DMatrix::zeros(x.ncols(), f.ncols());
        for j in 0..f.ncols() {
            let gram = build_gram(x, &f.column(j).into_owned(), w)?;
            let d = spectrum.alphas.tr_mul(&(&gram.f * &spectrum.alphas)).diagonal();
            f_diag.set_column(j, &d);
            components.push(lebesgue_quadrature(&gram)?);
        }
        Ok(VectorPredictor {
            components,
            spectrum,
            f_diag,
        })
    }

    pub fn f_rn(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        DVector::from_iterator(self.components.len(), self.components.iter().map(|q| q.evaluate(x).f_rn))
    }

    /// Posterior-style average in the `psi_K` basis.
    pub fn f_rnw(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        let psi2 = self.spectrum.psi(x).map(|v| v * v);
        let wts = psi2.component_mul(&self.spectrum.eigenvalues);
        self.f_diag.tr_mul(&wts) / wts.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn data(m: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(m, 4, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-1.0..1.0) });
        let w = DVector::from_fn(m, |_, _| rng.gen_range(0.5..1.5));
        (x, w)
    }

    #[test]
    fn f_equal_x_is_fully_explained() {
        let (x, w) = data(40, 1);
        let cg = CrossGram::new(&x, &x, &w).unwrap();
        assert!(error_rank(&cg).abs() < 1e-10);
        for l in projection_spectrum(&cg).unwrap().eigenvalues.iter() {
            assert!(close(*l, 1.0, 1e-10));
        }
        let kf = f_christoffel_matrix(&x, &w).unwrap();
        let (_, err) = error_coverage_spectrum(&cg, &kf).unwrap();
        assert!(err.abs() < 1e-9);
        assert!(error_tilde(&cg, &x, &x, &w).unwrap().abs() < 1e-9);
    }

    #[test]
    fn constant_label() {
        let (x, w) = data(30, 2);
        let f = DMatrix::from_element(30, 1, 1.0);
        let cg = CrossGram::new(&x, &f, &w).unwrap();
        let kf = f_christoffel_matrix(&f, &w).unwrap();
        let (lams, err) = error_coverage_spectrum(&cg, &kf).unwrap();
        assert!(close(lams[3], w.sum(), 1e-10));
        assert!(lams.rows(0, 3).iter().all(|l| l.abs() < 1e-10));
        assert!(err.abs() < 1e-9);
    }

    #[test]
    fn spur_equals_row_sum() {
        let (x, w) = data(50, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let f = DMatrix::from_fn(50, 2, |l, j| if j == 0 { 1.0 } else { x[(l, 1)] + rng.gen_range(-1.0..1.0) });
        let cg = CrossGram::new(&x, &f, &w).unwrap();
        let kf = f_christoffel_matrix(&f, &w).unwrap();
        let spur = error_coverage_spur(&cg, &kf);
        let rows = error_coverage_rows(&cg, &f, &w).unwrap();
        let (lams, spec) = error_coverage_spectrum(&cg, &kf).unwrap();
        assert!(close(spur, rows, 1e-10));
        assert!(close(spur, spec, 1e-10));
        assert!(lams.iter().filter(|l| l.abs() > 1e-9).count() <= 2);
        assert!(spec > 0.0 && spec < w.sum());
    }

    #[test]
    fn probabilities() {
        let (x, w) = data(40, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let f = DMatrix::from_fn(40, 3, |l, j| match j {
            0 => 1.0,
            1 => x[(l, 2)] * 2.0 + rng.gen_range(-0.5..0.5),
            _ => rng.gen_range(-1.0..1.0),
        });
        let cg = CrossGram::new(&x, &f, &w).unwrap();
        for _ in 0..20 {
            let y = DVector::from_fn(4, |i, _| if i == 0 { 1.0 } else { rng.gen_range(-2.0..2.0) });
            let g = DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0));
            let p = prob_given(&cg, y.as_view(), g.as_view()).unwrap();
            assert!((-1e-15..=1.0 + 1e-12).contains(&p));
            let ls = cg.f_ls(y.as_view());
            assert!(close(prob_given(&cg, y.as_view(), ls.as_view()).unwrap(), 1.0, 1e-12));
            let spec = b_spectrum(&cg, y.as_view()).unwrap();
            assert!(close(spec.eigenvalues[2], 1.0, 1e-10));
            assert!(spec.eigenvalues[0].abs() < 1e-10 && spec.eigenvalues[1].abs() < 1e-10);
            // bounded as y grows
            let big = &y * 1e6;
            assert!(close(prob_given(&cg, big.as_view(), g.as_view()).unwrap(), p, 1e-6));
        }
    }

    #[test]
    fn relative_frequency_identity_and_bounds() {
        let (x, w) = data(40, 5);
        let rf = relative_frequency_spectrum(&x, &x, &w).unwrap();
        for l in rf.eigenvalues.iter() {
            assert!(close(*l, 1.0, 1e-10));
        }
        let f = x.map(|v| v * v + 0.1 * v);
        let mut f2 = DMatrix::from_element(40, 2, 1.0);
        f2.set_column(1, &f.column(1));
        let rf = relative_frequency_spectrum(&x, &f2, &w).unwrap();
        for l in 0..40 {
            let r = rf.estimate(x.row(l).transpose().as_view());
            assert!(r >= rf.eigenvalues[0] - 1e-12 && r <= rf.eigenvalues[3] + 1e-12);
        }
        let doubled = relative_frequency_spectrum(&x, &f2, &(&w * 2.0)).unwrap();
        for i in 0..4 {
            assert!(close(doubled.eigenvalues[i], rf.eigenvalues[i], 1e-10));
        }
    }

    #[test]
    fn diagonal_in_christoffel_basis() {
        let (x, w) = data(40, 6);
        let f = DVector::from_fn(40, |l, _| x[(l, 1)] * x[(l, 2)] + x[(l, 3)]);
        let gram = build_gram(&x, &f, &w).unwrap();
        let spec = christoffel_spectrum(&x, &w).unwrap();
        let diag = diagonalize_f_in_k_basis(&gram, &spec);
        let want = spec.alphas.tr_mul(&(&gram.f * &spec.alphas)).diagonal();
        let mut want: Vec<f64> = want.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        let got = solve_gsym(&diag.f, &diag.g).unwrap().eigenvalues;
        for i in 0..4 {
            assert!(close(got[i], want[i], 1e-10));
        }
        let again = diagonalize_f_in_k_basis(&diag, &spec);
        assert!((&again.f - &diag.f).amax() < 1e-10 * diag.f.amax());
    }

    #[test]
    fn vector_predictors_and_weighted_error() {
        let (x, w) = data(40, 7);
        let f = DMatrix::from_fn(40, 2, |l, j| if j == 0 { x[(l, 1)] } else { 2.0 });
        let vp = VectorPredictor::new(&x, &f, &w).unwrap();
        let r = vp.f_rn(x.row(0).transpose().as_view());
        assert!(close(r[1], 2.0, 1e-10));
        let rw = vp.f_rnw(x.row(0).transpose().as_view());
        assert!(close(rw[1], 2.0, 1e-10));
        // identical outcomes everywhere: no error
        let g = DMatrix::from_element(10, 1, 3.0);
        let e = weighted_error(&g, |_| 0.5, DVector::from_element(1, 3.0).as_view()).unwrap();
        assert!(e.abs() < 1e-12);
    }
}
