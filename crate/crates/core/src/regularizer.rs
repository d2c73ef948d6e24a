//! Attribute basis regularization.
//!
//! Every method returns a [`RegularizedBasis`]: an affine map from raw
//! attributes to functionals `X_i` whose Gram matrix is positive definite,
//! with a constant function as the last component.
//!
//! * `EV` centers the attributes, drops those with vanishing spread, and keeps
//!   the eigenvectors of the correlation matrix with nonnegligible eigenvalues.
//! * `LIN` runs a pivoted Cholesky elimination on the same correlation matrix.
//! * `NONE` keeps the raw attributes and only appends a constant when missing.
//!
//! `EV` and `LIN` span the same space, so downstream models agree.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::eigenkernel::{cholesky, solve_gsym};
use crate::error::{Error, Result};
use crate::observations::Sample;

/// Rank threshold, applied to scale-free quantities.
pub const EPSILON: f64 = 1e3 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizationMethod {
    None,
    #[default]
    Ev,
    Lin,
}

impl FromStr for RegularizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NONE" => Ok(Self::None),
            "EV" => Ok(Self::Ev),
            "LIN" => Ok(Self::Lin),
            other => Err(Error::InvalidArgument(format!(
                "regularization method `{other}` is not one of NONE, EV, LIN"
            ))),
        }
    }
}

impl fmt::Display for RegularizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "NONE",
            Self::Ev => "EV",
            Self::Lin => "LIN",
        })
    }
}

/// `X = [coeffs (x - means); 1]`, the trailing 1 present when `append_constant`.
#[derive(Debug, Clone)]
pub struct RegularizedBasis {
    pub method: RegularizationMethod,
    /// d x n.
    pub coeffs: DMatrix<f64>,
    pub means: DVector<f64>,
    /// Attribute columns that survived the spread test.
    pub kept_columns: Vec<usize>,
    /// Rank of the non-constant part.
    pub d: usize,
    pub append_constant: bool,
}

impl RegularizedBasis {
    /// Number of regularized functionals, constant included.
    pub fn dim(&self) -> usize {
        self.coeffs.nrows() + usize::from(self.append_constant)
    }

    /// Raw attribute dimension.
    pub fn input_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn apply_row(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        let z = x - &self.means;
        let head = &self.coeffs * z;
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, head.len()).copy_from(&head);
        if self.append_constant {
            out[self.dim() - 1] = 1.0;
        }
        out
    }

    /// Apply to every row of an M x n matrix.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let m = x.nrows();
        let mut z = x.clone();
        for (k, mut col) in z.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.means[k]);
        }
        let head = z * self.coeffs.transpose();
        let mut out = DMatrix::zeros(m, self.dim());
        out.columns_mut(0, head.ncols()).copy_from(&head);
        if self.append_constant {
            out.column_mut(self.dim() - 1).fill(1.0);
        }
        out
    }
}

/// Index of the first column holding one repeated nonzero value.
pub fn constant_column(x: &DMatrix<f64>) -> Option<usize> {
    if x.nrows() == 0 {
        return None;
    }
    x.column_iter()
        .position(|c| c[0] != 0.0 && c.iter().all(|v| *v == c[0]))
}

/// Weighted Gram matrix `sum_l w_l x_l x_l^T` of the rows of `x`.
pub fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut wx = x.clone();
    for (l, mut row) in wx.row_iter_mut().enumerate() {
        row *= w[l];
    }
    let g = x.transpose() * wx;
    (&g + g.transpose()) * 0.5
}

fn check_weights(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    if x.nrows() != w.len() {
        return Err(Error::Dimension(format!("{} rows, {} weights", x.nrows(), w.len())));
    }
    let total = w.sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("total measure is zero".into()));
    }
    Ok(total)
}

struct Centered {
    means: DVector<f64>,
    cov: DMatrix<f64>,
    kept: Vec<usize>,
}

fn centered(x: &DMatrix<f64>, w: &DVector<f64>, total: f64) -> Centered {
    let n = x.ncols();
    let means = x.transpose() * w / total;
    let mut z = x.clone();
    for (k, mut col) in z.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[k]);
    }
    let cov = weighted_gram(&z, w);
    let kept = (0..n)
        .filter(|&k| {
            let ms = x.column(k).iter().zip(w.iter()).map(|(v, wl)| v * v * wl).sum::<f64>() / total;
            let sigma = (cov[(k, k)].max(0.0) / total).sqrt();
            ms > 0.0 && sigma > EPSILON * ms.sqrt()
        })
        .collect();
    Centered { means, cov, kept }
}

fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

fn regularize_ev_raw(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<RegularizedBasis> {
    let total = check_weights(x, w)?;
    let n = x.ncols();
    let c = centered(x, w, total);
    let cov_s = submatrix(&c.cov, &c.kept);
    let diag = DMatrix::from_diagonal(&cov_s.diagonal());
    let sol = solve_gsym(&cov_s, &diag)?;
    let keep: Vec<usize> = (0..sol.len()).filter(|&i| sol.eigenvalues[i] > EPSILON).collect();
    let mut coeffs = DMatrix::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        let scale = 1.0 / sol.eigenvalues[i].sqrt();
        for (j, &k) in c.kept.iter().enumerate() {
            coeffs[(row, k)] = sol.eigenvectors[(j, i)] * scale;
        }
    }
    Ok(RegularizedBasis {
        method: RegularizationMethod::Ev,
        d: keep.len(),
        coeffs,
        means: c.means,
        kept_columns: c.kept,
        append_constant: true,
    })
}

fn regularize_lin_raw(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<RegularizedBasis> {
    let total = check_weights(x, w)?;
    let n = x.ncols();
    let c = centered(x, w, total);
    let s = c.kept.len();
    let scale: Vec<f64> = c.kept.iter().map(|&k| c.cov[(k, k)].sqrt()).collect();
    let mut a = DMatrix::from_fn(s, s, |i, j| c.cov[(c.kept[i], c.kept[j])] / (scale[i] * scale[j]));

    // Outer-product Cholesky with diagonal pivoting; the initial diagonal is 1.
    let mut used = vec![false; s];
    let mut pivots = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for _ in 0..s {
        let Some(p) = (0..s)
            .filter(|&i| !used[i])
            .max_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]))
        else {
            break;
        };
        if a[(p, p)] <= EPSILON {
            break;
        }
        let piv = a[(p, p)].sqrt();
        let mut col = DVector::zeros(s);
        for i in 0..s {
            if !used[i] {
                col[i] = a[(i, p)] / piv;
            }
        }
        used[p] = true;
        for i in 0..s {
            for j in 0..s {
                a[(i, j)] -= col[i] * col[j];
            }
        }
        pivots.push(p);
        cols.push(col);
    }

    let d = pivots.len();
    let l = DMatrix::from_fn(d, d, |i, j| if j <= i { cols[j][pivots[i]] } else { 0.0 });
    let select = DMatrix::from_fn(d, n, |i, k| {
        let j = pivots[i];
        if c.kept[j] == k {
            1.0 / scale[j]
        } else {
            0.0
        }
    });
    let coeffs = if d == 0 {
        DMatrix::zeros(0, n)
    } else {
        l.solve_lower_triangular(&select)
            .ok_or(Error::NotPositiveDefinite)?
    };
    Ok(RegularizedBasis {
        method: RegularizationMethod::Lin,
        d,
        coeffs,
        means: c.means,
        kept_columns: c.kept,
        append_constant: true,
    })
}

fn regularize_none_raw(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<RegularizedBasis> {
    check_weights(x, w)?;
    let n = x.ncols();
    let constant = constant_column(x);
    let basis = RegularizedBasis {
        method: RegularizationMethod::None,
        coeffs: DMatrix::identity(n, n),
        means: DVector::zeros(n),
        kept_columns: (0..n).collect(),
        d: n - usize::from(constant.is_some()),
        append_constant: constant.is_none(),
    };
    cholesky(&weighted_gram(&basis.apply(x), w))?;
    Ok(basis)
}

/// Regularize raw attribute rows `x` (M x n) with weights `w`.
pub fn regularize(
    x: &DMatrix<f64>,
    w: &DVector<f64>,
    method: RegularizationMethod,
) -> Result<RegularizedBasis> {
    match method {
        RegularizationMethod::None => regularize_none_raw(x, w),
        RegularizationMethod::Ev => regularize_ev_raw(x, w),
        RegularizationMethod::Lin => regularize_lin_raw(x, w),
    }
}

pub fn regularize_ev(sample: &Sample) -> Result<RegularizedBasis> {
    regularize_ev_raw(&sample.x, &sample.w)
}

pub fn regularize_lin(sample: &Sample) -> Result<RegularizedBasis> {
    regularize_lin_raw(&sample.x, &sample.w)
}

pub fn regularize_none(sample: &Sample) -> Result<RegularizedBasis> {
    regularize_none_raw(&sample.x, &sample.w)
}
