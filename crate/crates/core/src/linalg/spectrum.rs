use super::{Complex, Matrix};
use crate::error::{Error, Result};

/// Eigenvalues sorted by non-increasing modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub eigenvalues: Vec<Complex>,
    pub moduli_gaps: Vec<f64>,
    pub is_real: Vec<bool>,
}

impl SpectrumRecord {
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }

    pub fn all_real(&self) -> bool {
        self.is_real.iter().all(|&r| r)
    }

    pub fn log_moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm().ln()).collect()
    }
}

/// Unsorted eigenvalues read off the real Schur form.
pub fn eigenvalues(m: &Matrix) -> Vec<Complex> {
    let n = m.nrows();
    match n {
        0 => return Vec::new(),
        1 => return vec![Complex::new(m[(0, 0)], 0.0)],
        _ => {}
    }
    let (_, t) = m.clone().schur().unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let coupled = i + 1 < n && {
            let sub = t[(i + 1, i)].abs();
            sub > f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs())
        };
        if coupled {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mid = 0.5 * (a + d);
            let half = 0.5 * (a - d);
            let disc = half * half + b * c;
            if disc >= 0.0 {
                // Real pair; the sign-aware form avoids cancellation.
                let s = disc.sqrt();
                let big = if mid >= 0.0 { mid + s } else { mid - s };
                let det = a * d - b * c;
                let small = if big != 0.0 { det / big } else { mid - s };
                out.push(Complex::new(big, 0.0));
                out.push(Complex::new(small, 0.0));
            } else {
                let s = (-disc).sqrt();
                out.push(Complex::new(mid, s));
                out.push(Complex::new(mid, -s));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

fn tie_key(z: &Complex) -> (u8, f64, u8) {
    let real = if z.im == 0.0 { 0 } else { 1 };
    let conj_second = if z.im < 0.0 { 1 } else { 0 };
    (real, z.arg().abs(), conj_second)
}

/// Sorts eigenvalues by modulus, then real before complex, then by |argument|,
/// then positive imaginary part first.
pub fn sort_eigenvalues(mut ev: Vec<Complex>) -> Vec<Complex> {
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut start = 0;
    while start < ev.len() {
        let mut end = start + 1;
        while end < ev.len() {
            let (x, y) = (ev[end - 1].norm(), ev[end].norm());
            if (x - y).abs() <= 1e-12 * x.max(y).max(f64::MIN_POSITIVE) {
                end += 1;
            } else {
                break;
            }
        }
        ev[start..end].sort_by(|a, b| {
            let (ka, kb) = (tie_key(a), tie_key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
        });
        start = end;
    }
    ev
}

fn check_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!("{}x{} is not a square matrix", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    Ok(())
}

/// Errors unless `m` is square, finite and numerically invertible.
pub fn check_invertible(m: &Matrix) -> Result<()> {
    check_square(m)?;
    let sv = m.singular_values();
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lo > 1e-14 * hi) {
        return Err(Error::NonInvertible);
    }
    Ok(())
}

pub fn sorted_spectrum(m: &Matrix) -> Result<SpectrumRecord> {
    check_invertible(m)?;
    let ev = sort_eigenvalues(eigenvalues(m));
    let moduli_gaps = ev.windows(2).map(|w| w[0].norm() - w[1].norm()).collect();
    let is_real = ev.iter().map(|z| z.im == 0.0).collect();
    Ok(SpectrumRecord { eigenvalues: ev, moduli_gaps, is_real })
}

/// Characteristic polynomial coefficients, lowest degree first, monic.
pub fn characteristic_polynomial(m: &Matrix) -> Vec<f64> {
    let d = m.nrows();
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut mk = Matrix::zeros(d, d);
    let id = Matrix::identity(d, d);
    for k in 1..=d {
        mk = m * &mk + &id * c[d + 1 - k];
        let am = m * &mk;
        c[d - k] = -am.trace() / k as f64;
    }
    c
}

/// Sylvester resultant of p and p' for a polynomial given lowest degree first.
fn resultant_with_derivative(p: &[f64]) -> f64 {
    let d = p.len() - 1;
    if d < 2 {
        return 1.0;
    }
    let dp: Vec<f64> = (1..=d).map(|k| k as f64 * p[k]).collect();
    let size = 2 * d - 1;
    let mut s = Matrix::zeros(size, size);
    // d-1 shifted rows of p (degree d), d shifted rows of p' (degree d-1); highest degree first.
    for r in 0..d - 1 {
        for k in 0..=d {
            s[(r, r + k)] = p[d - k];
        }
    }
    for r in 0..d {
        for k in 0..d {
            s[(d - 1 + r, r + k)] = dp[d - 1 - k];
        }
    }
    s.determinant()
}

pub fn discriminant_distinct(m: &Matrix) -> bool {
    if m.nrows() != m.ncols() || m.nrows() < 2 {
        return m.nrows() == 1;
    }
    let c = characteristic_polynomial(m);
    let d = c.len() - 1;
    // Rescale the variable so the roots are O(1).
    let s = (1..=d).map(|k| c[d - k].abs().powf(1.0 / k as f64)).fold(0.0, f64::max);
    if s == 0.0 {
        return false;
    }
    let q: Vec<f64> = (0..=d).map(|k| c[k] * s.powi(k as i32 - d as i32)).collect();
    resultant_with_derivative(&q).abs() > 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quadratic_roots(tr: f64, det: f64) -> (f64, f64) {
        let s = (tr * tr - 4.0 * det).sqrt();
        ((tr + s) / 2.0, (tr - s) / 2.0)
    }

    #[test]
    fn golden_matrix_spectrum() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let s = sorted_spectrum(&m).unwrap();
        let (a, b) = quadratic_roots(3.0, 1.0);
        assert!((s.eigenvalues[0].re - a).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - b).abs() < 1e-12);
        assert!((a - 2.618034).abs() < 1e-6 && (b - 0.381966).abs() < 1e-6);
        assert!(s.all_real());
        assert!((s.moduli_gaps[0] - (a - b)).abs() < 1e-12);
    }

    #[test]
    fn identity_spectrum() {
        let s = sorted_spectrum(&Matrix::identity(3, 3)).unwrap();
        assert!(s.eigenvalues.iter().all(|z| (z.re - 1.0).abs() < 1e-15 && z.im == 0.0));
        assert_eq!(s.moduli_gaps, vec![0.0, 0.0]);
    }

    #[test]
    fn rotation_spectrum_is_conjugate_pair() {
        let a = std::f64::consts::FRAC_PI_3;
        let s = sorted_spectrum(&crate::linalg::rotation2(a)).unwrap();
        assert!((s.eigenvalues[0] - Complex::from_polar(1.0, a)).norm() < 1e-12);
        assert!((s.eigenvalues[1] - Complex::from_polar(1.0, -a)).norm() < 1e-12);
        assert_eq!(s.is_real, vec![false, false]);
        assert!(s.moduli_gaps[0].abs() < 1e-12);
    }

    #[test]
    fn equal_moduli_put_positive_real_first() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 2.0, 0.5]));
        let s = sorted_spectrum(&m).unwrap();
        assert_eq!(s.eigenvalues[0].re, 2.0);
        assert_eq!(s.eigenvalues[1].re, -2.0);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(sorted_spectrum(&m), Err(Error::NonInvertible));
    }

    #[test]
    fn discriminant_examples() {
        assert!(discriminant_distinct(&Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])));
        assert!(!discriminant_distinct(&Matrix::identity(2, 2)));
        assert!(discriminant_distinct(&Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]))));
        assert!(!discriminant_distinct(&Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 3.0]))));
    }

    #[test]
    fn characteristic_polynomial_matches_trace_and_det() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, 0.25, 1.0, 2.0]);
        let c = characteristic_polynomial(&m);
        assert!((c[2] + m.trace()).abs() < 1e-12);
        assert!((c[0] + m.determinant()).abs() < 1e-12);
    }

    fn arb_matrix(d: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-3.0f64..3.0, d * d).prop_map(move |v| Matrix::from_row_slice(d, d, &v))
    }

    proptest! {
        #[test]
        fn log_moduli_sum_to_log_det(m in arb_matrix(4)) {
            prop_assume!(m.determinant().abs() > 1e-3);
            let s = sorted_spectrum(&m).unwrap();
            let sum: f64 = s.log_moduli().iter().sum();
            let ld = m.determinant().abs().ln();
            prop_assert!((sum - ld).abs() <= 1e-8 * ld.abs().max(1.0));
            let moduli = s.moduli();
            prop_assert!(moduli.windows(2).all(|w| w[0] >= w[1]));
            let prod = s.eigenvalues.iter().fold(Complex::new(1.0, 0.0), |a, z| a * z);
            prop_assert!((prod.re - m.determinant()).abs() <= 1e-8 * m.determinant().abs().max(1.0));
            for (z, r) in s.eigenvalues.iter().zip(&s.is_real) {
                if !r {
                    prop_assert!(s.eigenvalues.iter().any(|w| (w - z.conj()).norm() < 1e-12 * z.norm()));
                }
            }
        }
    }
}
