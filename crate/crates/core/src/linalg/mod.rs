//! Dense small-dimension linear algebra used throughout the crate.

mod decompose;
mod exterior;
mod perturb;
mod spectrum;
mod symplectic;
mod twisting;
mod util;

pub use decompose::{eigen_clusters, real_block_decomposition, BlockKind, EigenCluster, RealBlock, RealBlockDecomposition};
pub use exterior::{combinations, exterior_power, minor};
pub use perturb::moduli_separation_perturb;
pub use spectrum::{check_invertible, characteristic_polynomial, discriminant_distinct, eigenvalues, sorted_spectrum, SpectrumRecord};
pub use symplectic::{
    paired_rotation, random_symplectic, symplectic_basis, symplectic_diagonalize, SymplecticBlock, SymplecticDecomposition,
    SymplecticForm,
};
pub use twisting::{twisting_check, twisting_witness, TwistingOutcome, WedgePair};
pub use util::{
    complex_null_space, inverse, max_abs, null_space, op_norm, orthonormalize, principal_angle, rotation2,
};

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Complex = nalgebra::Complex<f64>;

/// Structure a perturbation matrix must preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    #[default]
    None,
    Symplectic,
    DetOne,
}

impl Constraint {
    /// Errors when `g` is outside the constraint class.
    pub fn check(self, g: &Matrix) -> Result<()> {
        match self {
            Constraint::None => Ok(()),
            Constraint::Symplectic => {
                if g.nrows() % 2 != 0 {
                    return Err(Error::ConstraintViolation("odd dimension cannot be symplectic".into()));
                }
                let form = SymplecticForm::standard(g.nrows() / 2);
                let r = form.residual(g);
                let scale = op_norm(g).powi(2).max(1.0);
                if r > 1e-8 * scale {
                    return Err(Error::ConstraintViolation(format!("symplectic residual {r:e}")));
                }
                Ok(())
            }
            Constraint::DetOne => {
                let det = g.determinant();
                if (det - 1.0).abs() > 1e-9 {
                    return Err(Error::ConstraintViolation(format!("determinant {det}")));
                }
                Ok(())
            }
        }
    }
}

/// Converts row-major nested vectors into a matrix.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let c = rows[0].len();
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::DimensionMismatch("ragged rows".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    Ok(Matrix::from_fn(n, c, |i, j| rows[i][j]))
}

/// Row-major nested vectors of a matrix.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}
