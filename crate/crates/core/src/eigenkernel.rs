//! Symmetric-definite generalized eigenproblem `F a = lambda G a`.
//!
//! Reduced to a standard symmetric problem through the Cholesky factor of `G`.
//! Eigenvalues come out ascending, eigenvectors are `G`-orthonormal and each
//! one is sign-fixed so that its components sum to a nonnegative number.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GevSolution {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

impl GevSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let scale = a.amax();
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    let rel = if scale > 0.0 { worst / scale } else { 0.0 };
    if rel > SYMMETRY_TOL || !rel.is_finite() {
        return Err(Error::NotSymmetric(rel));
    }
    Ok(())
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Cholesky factor of a symmetric positive definite matrix.
pub(crate) fn cholesky(g: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    nalgebra::Cholesky::new(symmetrize(g)).ok_or(Error::NotPositiveDefinite)
}

/// Flip `v` so that its component sum is nonnegative; an exact zero sum is
/// broken by making the first nonzero component positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let s: f64 = v.iter().sum();
    let flip = if s != 0.0 {
        s < 0.0
    } else {
        v.iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0)
    };
    if flip {
        v.neg_mut();
    }
}

/// Solve `F a = lambda G a` for symmetric `F` and symmetric positive definite `G`.
pub fn solve_gsym(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<GevSolution> {
    let n = g.nrows();
    if !g.is_square() || f.shape() != g.shape() {
        return Err(Error::Dimension(format!(
            "F is {}x{}, G is {}x{}",
            f.nrows(),
            f.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    check_symmetric(f)?;
    check_symmetric(g)?;
    if n == 0 {
        return Ok(GevSolution {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let chol = cholesky(g)?;
    let l = chol.l();

    // C = L^-1 F L^-T
    let f = symmetrize(f);
    let left = l
        .solve_lower_triangular(&f)
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let c = symmetrize(&c);

    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lt = l.transpose();
    let mut eigenvalues = DVector::zeros(n);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        let v = eig.eigenvectors.column(src).into_owned();
        let mut a = lt
            .solve_upper_triangular(&v)
            .ok_or(Error::NotPositiveDefinite)?;
        fix_sign(&mut a);
        eigenvectors.set_column(dst, &a);
    }
    Ok(GevSolution {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn diagonal_problem() {
        let g = DMatrix::identity(2, 2);
        let f = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 3.0]));
        let s = solve_gsym(&f, &g).unwrap();
        assert_close(s.eigenvalues[0], 3.0, 1e-14);
        assert_close(s.eigenvalues[1], 5.0, 1e-14);
        assert_close(s.eigenvectors[(1, 0)], 1.0, 1e-14);
        assert_close(s.eigenvectors[(0, 1)], 1.0, 1e-14);
    }

    #[test]
    fn two_by_two_closed_form() {
        // det(F - lambda G) = 2 lambda^2 - 4 lambda + 1
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let s = solve_gsym(&f, &g).unwrap();
        assert_close(s.eigenvalues[0], 0.29289321881345254, 1e-14);
        assert_close(s.eigenvalues[1], 1.7071067811865475, 1e-14);
        let gram = s.eigenvectors.transpose() * &g * &s.eigenvectors;
        let fm = s.eigenvectors.transpose() * &f * &s.eigenvectors;
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert_close(gram[(i, j)], d, 1e-13);
                assert_close(fm[(i, j)], d * s.eigenvalues[i], 1e-13);
            }
        }
    }

    #[test]
    fn proportional_matrices() {
        let g = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = solve_gsym(&(&g * 2.5), &g).unwrap();
        for v in s.eigenvalues.iter() {
            assert_close(*v, 2.5, 1e-13);
        }
    }

    #[test]
    fn sign_convention() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let f = DMatrix::from_row_slice(2, 2, &[1.0, -0.7, -0.7, 0.5]);
        let s = solve_gsym(&f, &g).unwrap();
        for i in 0..2 {
            assert!(s.eigenvectors.column(i).sum() >= 0.0);
        }
        let mut v = DVector::from_vec(vec![0.0, -1.0, 1.0]);
        fix_sign(&mut v);
        assert_eq!(v.as_slice(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let f = DMatrix::identity(2, 2);
        assert!(matches!(solve_gsym(&f, &g), Err(Error::NotPositiveDefinite)));
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        assert!(matches!(
            solve_gsym(&f, &DMatrix::identity(2, 2)),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn reconstruction() {
        let g = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.3, -2.0, 0.5, 1.1, 0.3, 1.1, -3.0]);
        let s = solve_gsym(&f, &g).unwrap();
        let mut back = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let ga = &g * s.eigenvectors.column(i);
            back += &ga * ga.transpose() * s.eigenvalues[i];
        }
        assert!((back - &f).norm() <= 1e-12 * f.norm());
    }
}
