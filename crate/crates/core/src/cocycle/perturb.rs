use super::{return_matrix, CocycleSpec, RotationInsertion};
use crate::error::{Error, Result};
use crate::linalg::{
    inverse, op_norm, real_block_decomposition, symplectic_basis, BlockKind, Constraint, Matrix, SymplecticBlock,
    SymplecticForm,
};
use crate::shift::{format_word, SymbolicPoint, Word};

/// Post-composes the generator on the cylinder of `word` with `g`.
pub fn cylinder_perturb(a: &CocycleSpec, word: &[u8], g: &Matrix, constraint: Constraint) -> Result<CocycleSpec> {
    if word.len() != a.window() {
        return Err(Error::InvalidArgument(format!("cylinder word must have length {}", a.window())));
    }
    a.base().check_word(word)?;
    if g.nrows() != a.dim() || g.ncols() != a.dim() {
        return Err(Error::DimensionMismatch("perturbation has wrong size".into()));
    }
    crate::linalg::check_invertible(g)?;
    constraint.check(g)?;
    let mut out = a.clone();
    let current = a.generator(word).expect("admissible window");
    out.set_generator(word, g * current)?;
    Ok(out)
}

/// Largest generator difference, scaled by the bump bound when both cocycles carry the same
/// Hölder perturbation.
pub fn sup_distance(a: &CocycleSpec, b: &CocycleSpec) -> Result<f64> {
    if a.base() != b.base() || a.window() != b.window() || a.dim() != b.dim() {
        return Err(Error::InvalidArgument("cocycles live over different data".into()));
    }
    if a.hoelder() != b.hoelder() {
        return Err(Error::InvalidArgument("cocycles carry different Hölder perturbations".into()));
    }
    let mut sup = 0.0f64;
    for (w, g) in a.generators() {
        sup = sup.max(op_norm(&(g - b.generator(w).expect("same base"))));
    }
    Ok(sup * (1.0 + a.perturbation_size()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Rotate one conformal block of the real block decomposition.
    Plain,
    /// Rotate an elliptic or loxodromic block of a symplectic normal form.
    Symplectic,
}

/// `s ↦ A_s`: the return matrix of the periodic orbit picks up a rotation by `s·θ₀` in the
/// invariant planes of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationFamily {
    base: CocycleSpec,
    support: Word,
    basis: Matrix,
    basis_inverse: Matrix,
    planes: Vec<(usize, usize)>,
    theta0: f64,
    constraint: Constraint,
}

impl RotationFamily {
    pub fn base(&self) -> &CocycleSpec {
        &self.base
    }

    pub fn support(&self) -> &[u8] {
        &self.support
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn planes(&self) -> &[(usize, usize)] {
        &self.planes
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// The inserted matrix `Q·R(sθ₀)·Q⁻¹`.
    pub fn insertion(&self, s: f64) -> Matrix {
        let d = self.basis.nrows();
        let mut r = Matrix::identity(d, d);
        let (sn, cs) = (s * self.theta0).sin_cos();
        for &(i, j) in &self.planes {
            r[(i, i)] = cs;
            r[(j, j)] = cs;
            r[(i, j)] = -sn;
            r[(j, i)] = sn;
        }
        &self.basis * r * &self.basis_inverse
    }

    pub fn at(&self, s: f64) -> Result<CocycleSpec> {
        if s == 0.0 {
            return Ok(self.base.clone());
        }
        let mut out = cylinder_perturb(&self.base, &self.support, &self.insertion(s), self.constraint)?;
        out.set_rotation(Some(RotationInsertion {
            support: self.support.clone(),
            planes: self.planes.clone(),
            theta0: self.theta0,
            s,
        }));
        Ok(out)
    }
}

/// Rotation family acting on block `block` of the return matrix of `p`, inserted on the
/// window at position `ℓ − 1` so that the return matrix becomes `Q R(sθ₀) Q⁻¹ · A^ℓ_p`.
pub fn rotation_perturb_family(
    a: &CocycleSpec,
    p: &SymbolicPoint,
    block: usize,
    theta0: f64,
    mode: RotationMode,
) -> Result<RotationFamily> {
    let l = p.period().ok_or(Error::NotPeriodic)? as i64;
    let support = p.window(l - 1, a.window());
    if (0..l - 1).any(|j| p.window(j, a.window()) == support) {
        return Err(Error::InvalidArgument(format!(
            "support window {} recurs along the orbit",
            format_word(&support)
        )));
    }
    let m = return_matrix(a, p)?;
    let (basis, planes, constraint) = match mode {
        RotationMode::Plain => {
            let dec = real_block_decomposition(&m)?;
            let b = dec.blocks.get(block).ok_or_else(|| Error::NoRotationBlock(format!("no block {block}")))?;
            match b.kind {
                BlockKind::Conformal { .. } => (dec.basis.clone(), vec![(b.start, b.start + 1)], Constraint::None),
                BlockKind::Real(_) => return Err(Error::NoRotationBlock(format!("block {block} is real"))),
            }
        }
        RotationMode::Symplectic => {
            if a.dim() % 2 != 0 {
                return Err(Error::DimensionMismatch("symplectic mode needs even dimension".into()));
            }
            let n = a.dim() / 2;
            let dec = symplectic_basis(&m, &SymplecticForm::standard(n))?;
            let b = dec.blocks.get(block).ok_or_else(|| Error::NoRotationBlock(format!("no block {block}")))?;
            let planes = match *b {
                SymplecticBlock::Elliptic { index, .. } => vec![(index, n + index)],
                SymplecticBlock::Loxodromic { index, .. } => vec![(index, index + 1), (n + index, n + index + 1)],
                SymplecticBlock::Hyperbolic { .. } => {
                    return Err(Error::NoRotationBlock(format!("block {block} is hyperbolic")))
                }
            };
            (dec.basis, planes, Constraint::Symplectic)
        }
    };
    let basis_inverse = inverse(&basis)?;
    Ok(RotationFamily { base: a.clone(), support, basis, basis_inverse, planes, theta0, constraint })
}
