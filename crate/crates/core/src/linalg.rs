//! Dense complex linear algebra in the quadrature-weighted inner product.

use nalgebra::{DMatrix, DVector};

use crate::grid::Grid;
use crate::C64;

/// Singular values (descending) and left singular vectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub sigma: Vec<f64>,
    /// Full square basis of left singular vectors, matching `sigma` then the null space.
    pub u: DMatrix<C64>,
}

/// SVD of `a`, with `u` completed to a square unitary matrix.
pub fn svd_full(a: &DMatrix<C64>) -> Spectrum {
    let (rows, cols) = a.shape();
    if rows == 0 {
        return Spectrum { sigma: vec![], u: DMatrix::zeros(0, 0) };
    }
    let padded = if cols < rows {
        let mut p = DMatrix::zeros(rows, rows);
        p.columns_mut(0, cols).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested u");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().take(cols.min(rows)).map(|&i| svd.singular_values[i]).collect();
    let mut sorted = DMatrix::zeros(rows, rows);
    for (k, &i) in order.iter().enumerate().take(rows) {
        sorted.set_column(k, &u.column(i));
    }
    Spectrum { sigma, u: sorted }
}

/// `#{sigma_k >= eps * sigma_ref}`.
pub fn numerical_rank(sigma: &[f64], eps: f64, sigma_ref: f64) -> usize {
    if sigma_ref <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s >= eps * sigma_ref && s > 0.0).count()
}

/// Map grid coordinates to the unitary frame `W^{1/2}`.
pub fn to_weighted(grid: &Grid, a: &DMatrix<C64>) -> DMatrix<C64> {
    let w = grid.full_weights();
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= C64::from(w[i].sqrt());
    }
    out
}

/// Inverse of [`to_weighted`] for vectors.
pub fn from_weighted(grid: &Grid, v: &DVector<C64>) -> DVector<C64> {
    let w = grid.full_weights();
    DVector::from_iterator(v.len(), v.iter().enumerate().map(|(i, x)| x / w[i].sqrt()))
}

/// Operator 2-norm in the weighted inner product.
pub fn weighted_norm(grid: &Grid, a: &DMatrix<C64>) -> f64 {
    let w = grid.full_weights();
    let mut b = a.clone();
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            b[(i, j)] *= (w[i] / w[j]).sqrt();
        }
    }
    b.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Matrix 1-norm.
pub fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse with a 1-norm condition number, or `None` when the LU factorization fails.
pub fn inverse_with_cond(a: &DMatrix<C64>) -> Option<(DMatrix<C64>, f64)> {
    let inv = a.clone().lu().try_inverse()?;
    if !inv.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return None;
    }
    let cond = norm1(a) * norm1(&inv);
    Some((inv, cond))
}

/// Pointwise action of an `m x m` symbol on grid functions: `mN x mN`.
pub fn pointwise(grid: &Grid, sym: &DMatrix<C64>) -> DMatrix<C64> {
    let n = grid.n();
    let m = grid.m();
    let mut out = DMatrix::zeros(m * n, m * n);
    for j in 0..m {
        for k in 0..m {
            let s = sym[(j, k)];
            if s != C64::new(0.0, 0.0) {
                for i in 0..n {
                    out[(j * n + i, k * n + i)] = s;
                }
            }
        }
    }
    out
}

/// Apply an `m x m` symbol pointwise to one grid function.
pub fn apply_pointwise(grid: &Grid, sym: &DMatrix<C64>, f: &DVector<C64>) -> DVector<C64> {
    let n = grid.n();
    let m = grid.m();
    let mut out = DVector::zeros(m * n);
    for j in 0..m {
        for k in 0..m {
            let s = sym[(j, k)];
            if s != C64::new(0.0, 0.0) {
                for i in 0..n {
                    out[j * n + i] += s * f[k * n + i];
                }
            }
        }
    }
    out
}

/// Edge-wise constant functions: column `p` takes the value `sym[(j, p)]` on edge `j`.
pub fn constant_columns(grid: &Grid, sym: &DMatrix<C64>) -> DMatrix<C64> {
    let n = grid.n();
    DMatrix::from_fn(grid.dim(), sym.ncols(), |row, p| sym[(row / n, p)])
}

/// Principal angles between the spans of the leading `r` columns of two orthonormal bases.
pub fn principal_angles(qa: &DMatrix<C64>, qb: &DMatrix<C64>) -> Vec<f64> {
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return vec![];
    }
    let m = qa.adjoint() * qb;
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.into_iter().map(|c| c.clamp(0.0, 1.0).acos()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_full_completes_basis() {
        let a = DMatrix::from_row_slice(3, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
        let s = svd_full(&a);
        assert_eq!(s.sigma.len(), 1);
        assert!((s.sigma[0] - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(s.u.shape(), (3, 3));
        let gram = s.u.adjoint() * &s.u;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-13);
        // last vectors annihilate the column
        for k in 1..3 {
            assert!((s.u.column(k).adjoint() * &a)[(0, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn angles_between_axes() {
        let e = |i: usize| DMatrix::from_fn(3, 1, |r, _| C64::from(if r == i { 1.0 } else { 0.0 }));
        let a = principal_angles(&e(0), &e(0));
        assert!(a[0].abs() < 1e-7);
        let b = principal_angles(&e(0), &e(2));
        assert!((b[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn rank_counts_relative() {
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-9], 1e-8, 1.0), 2);
        assert_eq!(numerical_rank(&[], 1e-8, 0.0), 0);
    }
}
