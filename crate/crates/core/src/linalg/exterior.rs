use super::Matrix;
use crate::error::{Error, Result};

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Determinant of the submatrix on `rows × cols` (1 for empty index sets).
pub fn minor(m: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    match k {
        0 => 1.0,
        1 => m[(rows[0], cols[0])],
        2 => m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])],
        _ => Matrix::from_fn(k, k, |i, j| m[(rows[i], cols[j])]).determinant(),
    }
}

/// Matrix of the `k`-th exterior power in the lexicographic basis `e_I`.
pub fn exterior_power(m: &Matrix, k: usize) -> Result<Matrix> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch("exterior power of a non-square matrix".into()));
    }
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("exterior degree {k} outside 1..={d}")));
    }
    let sets = combinations(d, k);
    let n = sets.len();
    Ok(Matrix::from_fn(n, n, |r, c| minor(m, &sets[r], &sets[c])))
}
