//! Product attributes: all monomials `x_0^k_0 ... x_{n-1}^k_{n-1}` with
//! `sum k_j = D` over a basis that contains a constant column.
//!
//! Because the constant absorbs the remaining degree, exact degree `D` over
//! the full basis covers every monomial of degree `<= D` in the other columns.
//! Columns are ordered by degree in the non-constant attributes, then
//! lexicographically descending in their exponents: for `(1, x, y)` and
//! `D = 2` this is `1, x, y, x^2, xy, y^2`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regularizer::constant_column;

pub const DEFAULT_CAP: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub k: Vec<u32>,
}

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.k.iter().sum()
    }
}

/// Number of multi-indices of total degree `d` over `n` columns, `C(n+d-1, d)`.
pub fn count_products(n: usize, d: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let overflow = || Error::Overflow { n, degree: d };
    let mut c: u128 = 1;
    for i in 1..=d as u128 {
        c = c.checked_mul(n as u128 - 1 + i).ok_or_else(overflow)? / i;
    }
    usize::try_from(c).map_err(|_| overflow())
}

// compositions of `g` into `parts` nonnegative parts, descending lexicographic
fn compositions(g: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if g == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if parts == 1 {
        prefix.push(g);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=g).rev() {
        prefix.push(first);
        compositions(g - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Multi-indices of total degree `d` over `n` columns, column `constant` taking the remainder.
pub fn multi_indices(n: usize, d: usize, constant: usize) -> Result<Vec<MultiIndex>> {
    if constant >= n {
        return Err(Error::InvalidArgument(format!("constant column {constant} outside {n} columns")));
    }
    count_products(n, d)?;
    let mut out = Vec::new();
    for g in 0..=d as u32 {
        let mut tails = Vec::new();
        compositions(g, n - 1, &mut Vec::new(), &mut tails);
        for e in tails {
            let mut k = Vec::with_capacity(n);
            k.extend_from_slice(&e[..constant]);
            k.push(d as u32 - g);
            k.extend_from_slice(&e[constant..]);
            out.push(MultiIndex { k });
        }
    }
    Ok(out)
}

/// A product expansion, reusable on new rows.
#[derive(Debug, Clone)]
pub struct ProductMap {
    pub degree: usize,
    pub constant: usize,
    pub indices: Vec<MultiIndex>,
}

impl ProductMap {
    /// Plan the expansion of an M x n basis with a constant column.
    pub fn new(rows: &DMatrix<f64>, degree: usize, cap: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("product degree must be at least 1".into()));
        }
        let constant = constant_column(rows).ok_or(Error::NoConstantColumn)?;
        let n = rows.ncols();
        let count = count_products(n, degree)?;
        if count > cap {
            return Err(Error::TooManyProducts { count, cap });
        }
        Ok(ProductMap {
            degree,
            constant,
            indices: multi_indices(n, degree, constant)?,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Expand the rows; every monomial is its parent monomial times one attribute.
    pub fn apply(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let m = rows.nrows();
        let c = self.constant;
        let strip = |k: &[u32]| -> Vec<u32> {
            k.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect()
        };
        let position: HashMap<Vec<u32>, usize> = self
            .indices
            .iter()
            .enumerate()
            .map(|(i, mi)| (strip(&mi.k), i))
            .collect();

        // monomials in the non-constant columns first
        let mut out = DMatrix::zeros(m, self.indices.len());
        for (i, mi) in self.indices.iter().enumerate() {
            let e = strip(&mi.k);
            match e.iter().position(|v| *v > 0) {
                None => out.column_mut(i).fill(1.0),
                Some(j) => {
                    let mut parent = e.clone();
                    parent[j] -= 1;
                    let p = position[&parent];
                    let col = if j >= c { j + 1 } else { j };
                    let v = out.column(p).component_mul(&rows.column(col));
                    out.set_column(i, &v);
                }
            }
        }
        for (i, mi) in self.indices.iter().enumerate() {
            let kc = mi.k[c] as i32;
            if kc > 0 {
                for l in 0..m {
                    out[(l, i)] *= rows[(l, c)].powi(kc);
                }
            }
        }
        out
    }
}

/// Expand an M x n basis containing a constant column to all degree-`d` products.
pub fn expand(rows: &DMatrix<f64>, d: usize, cap: usize) -> Result<(DMatrix<f64>, Vec<MultiIndex>)> {
    let map = ProductMap::new(rows, d, cap)?;
    let out = map.apply(rows);
    Ok((out, map.indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts() {
        assert_eq!(count_products(7, 7).unwrap(), 1716);
        assert_eq!(count_products(8, 7).unwrap(), 3432);
        for n in 1..12 {
            assert_eq!(count_products(n, 1).unwrap(), n);
            assert_eq!(count_products(n, 2).unwrap(), (n + 1) * n / 2);
            assert_eq!(count_products(n, 0).unwrap(), 1);
        }
        assert!(matches!(count_products(1000, 1000), Err(Error::Overflow { .. })));
    }

    #[test]
    fn enumeration_length_matches_count() {
        for n in 1..6 {
            for d in 0..6 {
                for c in 0..n {
                    let idx = multi_indices(n, d, c).unwrap();
                    assert_eq!(idx.len(), count_products(n, d).unwrap());
                    assert!(idx.iter().all(|m| m.degree() as usize == d));
                }
            }
        }
    }

    #[test]
    fn two_attribute_order_and_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = DMatrix::from_fn(10, 3, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-2.0..2.0) });
        let (out, idx) = expand(&rows, 2, DEFAULT_CAP).unwrap();
        let ks: Vec<Vec<u32>> = idx.iter().map(|m| m.k.clone()).collect();
        assert_eq!(
            ks,
            vec![vec![2, 0, 0], vec![1, 1, 0], vec![1, 0, 1], vec![0, 2, 0], vec![0, 1, 1], vec![0, 0, 2]]
        );
        for l in 0..10 {
            let (x, y) = (rows[(l, 1)], rows[(l, 2)]);
            let want = [1.0, x, y, x * x, x * y, y * y];
            for (i, v) in want.iter().enumerate() {
                assert_eq!(out[(l, i)], *v);
            }
        }
    }

    #[test]
    fn degree_one_is_identity_with_constant_first() {
        let rows = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 1.0, -4.0, 5.0]);
        let (out, _) = expand(&rows, 1, DEFAULT_CAP).unwrap();
        assert_eq!(out, rows);
    }

    #[test]
    fn constant_not_one_and_not_first() {
        let rows = DMatrix::from_row_slice(2, 2, &[3.0, 2.0, -1.0, 2.0]);
        let (out, idx) = expand(&rows, 3, DEFAULT_CAP).unwrap();
        assert_eq!(idx[1].k, vec![1, 2]);
        for l in 0..2 {
            let x = rows[(l, 0)];
            assert_eq!(out.row(l).iter().copied().collect::<Vec<_>>(), vec![8.0, 4.0 * x, 2.0 * x * x, x * x * x]);
        }
    }

    #[test]
    fn univariate_powers() {
        let rows = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 0.1 * i as f64 } else { 1.0 });
        let (out, _) = expand(&rows, 6, DEFAULT_CAP).unwrap();
        for l in 0..5 {
            for p in 0..=6 {
                assert!((out[(l, p)] - rows[(l, 0)].powi(p as i32)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cap_and_missing_constant() {
        let rows = DMatrix::from_element(3, 8, 1.0);
        assert!(matches!(
            expand(&rows, 7, 3000),
            Err(Error::TooManyProducts { count: 3432, cap: 3000 })
        ));
        let rows = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(expand(&rows, 2, DEFAULT_CAP), Err(Error::NoConstantColumn)));
    }
}
