use super::{Complex, Matrix};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Spectral norm.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    m.clone().try_inverse().ok_or(Error::NonInvertible)
}

pub fn rotation2(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn smallest_indices(sv: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

/// Orthonormal basis (as columns) of the `dim` right singular vectors with the
/// smallest singular values, together with the largest of those singular values.
pub fn null_space(m: &Matrix, dim: usize) -> (Matrix, f64) {
    let n = m.ncols();
    if m.nrows() < n {
        // Thin SVD of a wide matrix yields fewer singular vectors than columns.
        let padded = m.clone().insert_rows(m.nrows(), n - m.nrows(), 0.0);
        return null_space(&padded, dim);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let pick = smallest_indices(&sv, dim);
    let worst = pick.iter().map(|&i| sv[i]).fold(0.0, f64::max);
    let mut out = Matrix::zeros(n, dim);
    for (c, &i) in pick.iter().enumerate() {
        for r in 0..n {
            out[(r, c)] = vt[(i, r)];
        }
    }
    (out, worst)
}

/// Complex analogue of [`null_space`].
pub fn complex_null_space(m: &DMatrix<Complex>, dim: usize) -> (DMatrix<Complex>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let pick = smallest_indices(&sv, dim);
    let worst = pick.iter().map(|&i| sv[i]).fold(0.0, f64::max);
    let mut out = DMatrix::<Complex>::zeros(n, dim);
    for (c, &i) in pick.iter().enumerate() {
        for r in 0..n {
            out[(r, c)] = vt[(i, r)].conj();
        }
    }
    (out, worst)
}

/// Orthonormal basis for the column span (modified Gram-Schmidt, rank-revealing).
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let nv = v.norm();
        if nv > 1e-10 * scale {
            cols.push(v / nv);
        }
    }
    if cols.is_empty() {
        return Matrix::zeros(m.nrows(), 0);
    }
    Matrix::from_columns(&cols)
}

/// Smallest principal angle between the column spans of `a` and `b`.
pub fn principal_angle(a: &Matrix, b: &Matrix) -> f64 {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = qa.transpose() * qb;
    let s = c.singular_values().iter().cloned().fold(0.0, f64::max).min(1.0);
    s.acos()
}
