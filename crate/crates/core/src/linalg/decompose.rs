use super::spectrum::{check_invertible, eigenvalues, sort_eigenvalues};
use super::util::{complex_null_space, null_space, op_norm};
use super::{Complex, Matrix};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// A group of numerically equal eigenvalues. Complex clusters are stored once,
/// by the member with positive imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCluster {
    pub value: Complex,
    pub multiplicity: usize,
}

impl EigenCluster {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Clusters eigenvalues in sorted-spectrum order. Eigenvalues whose imaginary part is
/// below `1e-9·|λ|` are treated as real.
pub fn eigen_clusters(m: &Matrix) -> Result<Vec<EigenCluster>> {
    check_invertible(m)?;
    let ev: Vec<Complex> = sort_eigenvalues(
        eigenvalues(m)
            .into_iter()
            .map(|z| if z.im.abs() <= 1e-9 * z.norm() { Complex::new(z.re, 0.0) } else { z })
            .collect(),
    );
    let mut clusters: Vec<(Complex, usize)> = Vec::new();
    for z in ev {
        if z.im < 0.0 {
            continue;
        }
        let tol = 1e-7 * z.norm().max(1.0);
        if let Some(c) = clusters.iter_mut().find(|(v, _)| (*v - z).norm() <= tol) {
            let k = c.1 as f64;
            c.0 = (c.0 * k + z) / (k + 1.0);
            c.1 += 1;
        } else {
            clusters.push((z, 1));
        }
    }
    Ok(clusters.into_iter().map(|(value, multiplicity)| EigenCluster { value, multiplicity }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockKind {
    Real(f64),
    /// `modulus · R_angle` with angle in (0, π).
    Conformal { modulus: f64, angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealBlock {
    pub kind: BlockKind,
    pub start: usize,
    pub size: usize,
}

impl RealBlock {
    pub fn modulus(&self) -> f64 {
        match self.kind {
            BlockKind::Real(v) => v.abs(),
            BlockKind::Conformal { modulus, .. } => modulus,
        }
    }

    pub fn block_matrix(&self) -> Matrix {
        match self.kind {
            BlockKind::Real(v) => Matrix::from_element(1, 1, v),
            BlockKind::Conformal { modulus, angle } => super::rotation2(angle) * modulus,
        }
    }
}

/// `basis⁻¹ · M · basis` is block diagonal with the listed blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBlockDecomposition {
    pub basis: Matrix,
    pub inverse: Matrix,
    pub blocks: Vec<RealBlock>,
}

impl RealBlockDecomposition {
    pub fn block_form(&self) -> Matrix {
        let d = self.basis.nrows();
        let mut out = Matrix::zeros(d, d);
        for b in &self.blocks {
            out.view_mut((b.start, b.start), (b.size, b.size)).copy_from(&b.block_matrix());
        }
        out
    }
}

/// Flips sign so the first coordinate of size above `1e-12·‖v‖∞` is positive.
pub(crate) fn sign_normalize(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Real plane spanned by a complex eigenvector, as the pair `(a, −b)` for `w = a + ib`
/// phase-normalized so that `a ⟂ b`, `|a| ≥ |b|`. In this basis `M` acts as `|λ|·R_arg(λ)`.
pub(crate) fn eigen_plane(w: &[Complex]) -> (Vec<f64>, Vec<f64>) {
    let s: Complex = w.iter().map(|z| z * z).sum();
    let phase = Complex::from_polar(1.0, -0.5 * s.arg());
    let mut a: Vec<f64> = w.iter().map(|z| (z * phase).re).collect();
    let mut b: Vec<f64> = w.iter().map(|z| (z * phase).im).collect();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(i) = a.iter().position(|x| x.abs() > 1e-12 * scale) {
        if a[i] < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            b.iter_mut().for_each(|x| *x = -*x);
        }
    }
    (a, b.into_iter().map(|x| -x).collect())
}

/// Eigenvectors of a real eigenvalue, one column each.
pub(crate) fn real_eigenvectors(m: &Matrix, value: f64, multiplicity: usize) -> Result<Matrix> {
    let d = m.nrows();
    let shifted = m - Matrix::identity(d, d) * value;
    let (mut basis, worst) = null_space(&shifted, multiplicity);
    if worst > 1e-6 * op_norm(m).max(1.0) {
        return Err(Error::NonDiagonalizable(format!("eigenvalue {value} is defective")));
    }
    if multiplicity == 1 {
        let mut col: Vec<f64> = basis.column(0).iter().cloned().collect();
        sign_normalize(&mut col);
        basis.set_column(0, &nalgebra::DVector::from_vec(col));
    }
    Ok(basis)
}

/// Real planes for a complex eigenvalue with positive imaginary part: `2·multiplicity` columns.
pub(crate) fn complex_eigenplanes(m: &Matrix, value: Complex, multiplicity: usize) -> Result<Matrix> {
    let d = m.nrows();
    let shifted = DMatrix::<Complex>::from_fn(d, d, |i, j| {
        let base = Complex::new(m[(i, j)], 0.0);
        if i == j {
            base - value
        } else {
            base
        }
    });
    let (w, worst) = complex_null_space(&shifted, multiplicity);
    if worst > 1e-6 * op_norm(m).max(1.0) {
        return Err(Error::NonDiagonalizable(format!("eigenvalue {value} is defective")));
    }
    let mut out = Matrix::zeros(d, 2 * multiplicity);
    for c in 0..multiplicity {
        let col: Vec<Complex> = w.column(c).iter().cloned().collect();
        let (a, nb) = eigen_plane(&col);
        for r in 0..d {
            out[(r, 2 * c)] = a[r];
            out[(r, 2 * c + 1)] = nb[r];
        }
    }
    Ok(out)
}

/// Real block diagonalization of a semisimple matrix. Blocks follow the sorted spectrum;
/// one-dimensional eigenvectors are unit length with first nonzero coordinate positive.
pub fn real_block_decomposition(m: &Matrix) -> Result<RealBlockDecomposition> {
    let d = m.nrows();
    let clusters = eigen_clusters(m)?;
    let mut basis = Matrix::zeros(d, d);
    let mut blocks = Vec::with_capacity(d);
    let mut col = 0;
    for c in &clusters {
        if c.is_real() {
            let v = real_eigenvectors(m, c.value.re, c.multiplicity)?;
            for k in 0..c.multiplicity {
                basis.set_column(col, &v.column(k));
                blocks.push(RealBlock { kind: BlockKind::Real(c.value.re), start: col, size: 1 });
                col += 1;
            }
        } else {
            let planes = complex_eigenplanes(m, c.value, c.multiplicity)?;
            for k in 0..c.multiplicity {
                basis.set_column(col, &planes.column(2 * k));
                basis.set_column(col + 1, &planes.column(2 * k + 1));
                blocks.push(RealBlock {
                    kind: BlockKind::Conformal { modulus: c.value.norm(), angle: c.value.arg() },
                    start: col,
                    size: 2,
                });
                col += 2;
            }
        }
    }
    if col != d {
        return Err(Error::NonDiagonalizable("eigenvector count mismatch".into()));
    }
    let sv = basis.singular_values();
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lo > 1e-10 * hi) {
        return Err(Error::NonDiagonalizable("eigenvectors are numerically dependent".into()));
    }
    let inverse = super::inverse(&basis)?;
    Ok(RealBlockDecomposition { basis, inverse, blocks })
}
