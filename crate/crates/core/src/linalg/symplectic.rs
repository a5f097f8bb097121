use super::decompose::{complex_eigenplanes, eigen_clusters, real_eigenvectors};
use super::util::{max_abs, op_norm};
use super::Matrix;
use crate::error::{Error, Result};

/// The standard form `Ω = [[0, I], [−I, 0]]` on the basis `(e₁…eₙ, f₁…fₙ)`,
/// so that `ω(eᵢ, fⱼ) = δᵢⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    half: usize,
    omega: Matrix,
}

impl SymplecticForm {
    pub fn standard(n: usize) -> Self {
        let mut omega = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega[(i, n + i)] = 1.0;
            omega[(n + i, i)] = -1.0;
        }
        SymplecticForm { half: n, omega }
    }

    pub fn dim(&self) -> usize {
        2 * self.half
    }

    pub fn half_dim(&self) -> usize {
        self.half
    }

    pub fn matrix(&self) -> &Matrix {
        &self.omega
    }

    pub fn pairing(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.half;
        (0..n).map(|i| x[i] * y[n + i] - x[n + i] * y[i]).sum()
    }

    /// Max-norm of `MᵀΩM − Ω`.
    pub fn residual(&self, m: &Matrix) -> f64 {
        max_abs(&(m.transpose() * &self.omega * m - &self.omega))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymplecticBlock {
    /// Real pair `(λ, 1/λ)` with `|λ| > 1` on `(e_index, f_index)`.
    Hyperbolic { eigenvalue: f64, index: usize },
    /// Unit-modulus pair acting as the rotation `R_angle` on `(e_index, f_index)`.
    Elliptic { angle: f64, index: usize },
    /// Quadruple `{λ, λ̄, 1/λ, 1/λ̄}`: `modulus·R_angle` on `(e_index, e_index+1)` and
    /// `modulus⁻¹·R_angle` on the matching f-plane.
    Loxodromic { modulus: f64, angle: f64, index: usize },
}

impl SymplecticBlock {
    pub fn index(&self) -> usize {
        match *self {
            SymplecticBlock::Hyperbolic { index, .. }
            | SymplecticBlock::Elliptic { index, .. }
            | SymplecticBlock::Loxodromic { index, .. } => index,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            SymplecticBlock::Loxodromic { .. } => 2,
            _ => 1,
        }
    }

    /// Modulus of the expanding member (1 for elliptic blocks).
    pub fn modulus(&self) -> f64 {
        match *self {
            SymplecticBlock::Hyperbolic { eigenvalue, .. } => eigenvalue.abs(),
            SymplecticBlock::Elliptic { .. } => 1.0,
            SymplecticBlock::Loxodromic { modulus, .. } => modulus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticDecomposition {
    pub basis: Matrix,
    pub blocks: Vec<SymplecticBlock>,
}

impl SymplecticDecomposition {
    pub fn half_dim(&self) -> usize {
        self.basis.nrows() / 2
    }

    /// The normal form `P⁻¹MP` predicted by the blocks.
    pub fn block_form(&self) -> Matrix {
        let n = self.half_dim();
        let mut out = Matrix::zeros(2 * n, 2 * n);
        for b in &self.blocks {
            match *b {
                SymplecticBlock::Hyperbolic { eigenvalue, index } => {
                    out[(index, index)] = eigenvalue;
                    out[(n + index, n + index)] = 1.0 / eigenvalue;
                }
                SymplecticBlock::Elliptic { angle, index } => {
                    let (s, c) = angle.sin_cos();
                    out[(index, index)] = c;
                    out[(n + index, index)] = s;
                    out[(index, n + index)] = -s;
                    out[(n + index, n + index)] = c;
                }
                SymplecticBlock::Loxodromic { modulus, angle, index } => {
                    let r = super::rotation2(angle);
                    out.view_mut((index, index), (2, 2)).copy_from(&(&r * modulus));
                    out.view_mut((n + index, n + index), (2, 2)).copy_from(&(r / modulus));
                }
            }
        }
        out
    }
}

fn pairing_matrix(form: &SymplecticForm, e: &Matrix, c: &Matrix) -> Matrix {
    e.transpose() * form.matrix() * c
}

/// Symplectic basis adapted to a semisimple symplectic matrix (repeated eigenvalues allowed,
/// except on the unit circle).
pub fn symplectic_basis(m: &Matrix, form: &SymplecticForm) -> Result<SymplecticDecomposition> {
    let d = form.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("expected {d}x{d}")));
    }
    let scale = op_norm(m).powi(2).max(1.0);
    let res = form.residual(m);
    if res > 1e-8 * scale {
        return Err(Error::NotSymplectic(res));
    }
    let n = form.half_dim();
    let clusters = eigen_clusters(m)?;
    let mut e_cols: Vec<Matrix> = Vec::new();
    let mut f_cols: Vec<Matrix> = Vec::new();
    let mut blocks = Vec::new();
    let mut next = 0usize;
    let mut elliptic: Vec<(Matrix, Matrix, f64)> = Vec::new();
    for c in &clusters {
        let r = c.value.norm();
        if (r - 1.0).abs() <= 1e-9 {
            if c.is_real() {
                return Err(Error::DegenerateSpectrum("eigenvalue ±1".into()));
            }
            if c.multiplicity > 1 {
                return Err(Error::DegenerateSpectrum("repeated eigenvalue on the unit circle".into()));
            }
            let plane = complex_eigenplanes(m, c.value, 1)?;
            let a = plane.column(0).into_owned();
            let nb = plane.column(1).into_owned();
            let w = form.pairing(a.as_slice(), nb.as_slice());
            let s = w.abs().sqrt();
            if w > 0.0 {
                elliptic.push((Matrix::from_column_slice(d, 1, (a / s).as_slice()), Matrix::from_column_slice(d, 1, (nb / s).as_slice()), c.value.arg()));
            } else {
                elliptic.push((Matrix::from_column_slice(d, 1, (a / s).as_slice()), Matrix::from_column_slice(d, 1, (-nb / s).as_slice()), -c.value.arg()));
            }
            continue;
        }
        if r < 1.0 {
            continue;
        }
        let partner = c.value.inv().conj();
        let found = clusters
            .iter()
            .find(|q| (q.value - partner).norm() <= 1e-6 * partner.norm().max(1.0) && q.multiplicity == c.multiplicity);
        let Some(pc) = found else {
            return Err(Error::NotSymplectic(res));
        };
        let (e, cmat) = if c.is_real() {
            (real_eigenvectors(m, c.value.re, c.multiplicity)?, real_eigenvectors(m, pc.value.re, pc.multiplicity)?)
        } else {
            (complex_eigenplanes(m, c.value, c.multiplicity)?, complex_eigenplanes(m, pc.value, pc.multiplicity)?)
        };
        let g = pairing_matrix(form, &e, &cmat);
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::DegenerateSpectrum("isotropic eigenspace pairing".into()))?;
        let f = &cmat * ginv;
        for _ in 0..c.multiplicity {
            if c.is_real() {
                blocks.push(SymplecticBlock::Hyperbolic { eigenvalue: c.value.re, index: next });
                next += 1;
            } else {
                blocks.push(SymplecticBlock::Loxodromic { modulus: r, angle: c.value.arg(), index: next });
                next += 2;
            }
        }
        e_cols.push(e);
        f_cols.push(f);
    }
    for (a, b, angle) in elliptic {
        blocks.push(SymplecticBlock::Elliptic { angle, index: next });
        next += 1;
        e_cols.push(a);
        f_cols.push(b);
    }
    if next != n {
        return Err(Error::DegenerateSpectrum("eigenvector count mismatch".into()));
    }
    let mut basis = Matrix::zeros(d, d);
    let mut col = 0;
    for (e, f) in e_cols.iter().zip(&f_cols) {
        for k in 0..e.ncols() {
            basis.set_column(col + k, &e.column(k));
            basis.set_column(n + col + k, &f.column(k));
        }
        col += e.ncols();
    }
    let pres = form.residual(&basis);
    if pres > 1e-6 * op_norm(&basis).powi(2).max(1.0) {
        return Err(Error::DegenerateSpectrum(format!("basis is not symplectic (residual {pres:e})")));
    }
    Ok(SymplecticDecomposition { basis, blocks })
}

/// Symplectic diagonalization of a symplectic matrix with pairwise distinct eigenvalues.
pub fn symplectic_diagonalize(m: &Matrix, form: &SymplecticForm) -> Result<SymplecticDecomposition> {
    let d = form.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!("expected {d}x{d}")));
    }
    let res = form.residual(m);
    if res > 1e-8 * op_norm(m).powi(2).max(1.0) {
        return Err(Error::NotSymplectic(res));
    }
    if eigen_clusters(m)?.iter().any(|c| c.multiplicity > 1) {
        return Err(Error::DegenerateSpectrum("repeated eigenvalue".into()));
    }
    symplectic_basis(m, form)
}

/// Rotation by `theta` of the planes `span(eᵢ, eⱼ)` and `span(fᵢ, fⱼ)` in dimension `2n`
/// (indices are 0-based, `i < j < n`).
pub fn paired_rotation(theta: f64, i: usize, j: usize, n: usize) -> Result<Matrix> {
    if !(i < j && j < n) {
        return Err(Error::IndexOutOfRange(format!("paired rotation ({i}, {j}) with n = {n}")));
    }
    let (s, c) = theta.sin_cos();
    let mut r = Matrix::identity(2 * n, 2 * n);
    for off in [0, n] {
        let (a, b) = (i + off, j + off);
        r[(a, a)] = c;
        r[(b, a)] = s;
        r[(a, b)] = -s;
        r[(b, b)] = c;
    }
    Ok(r)
}

/// A symplectic matrix built from two random symmetric shears and a diagonal stretch.
pub fn random_symplectic<R: rand::Rng + ?Sized>(n: usize, spread: f64, rng: &mut R) -> Matrix {
    let sym = |rng: &mut R| {
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-spread..=spread);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    };
    let (s, t) = (sym(rng), sym(rng));
    let mut upper = Matrix::identity(2 * n, 2 * n);
    upper.view_mut((0, n), (n, n)).copy_from(&s);
    let mut lower = Matrix::identity(2 * n, 2 * n);
    lower.view_mut((n, 0), (n, n)).copy_from(&t);
    let mut stretch = Matrix::identity(2 * n, 2 * n);
    for i in 0..n {
        let d: f64 = rng.random_range(0.5..2.0);
        stretch[(i, i)] = d;
        stretch[(n + i, n + i)] = 1.0 / d;
    }
    upper * lower * stretch
}
