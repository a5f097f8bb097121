use super::{evaluate, holonomy_constants, psi_transition, CocycleSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    op_norm, orthonormalize, principal_angle, real_block_decomposition, sorted_spectrum, twisting_check, Matrix,
    SpectrumRecord, WedgePair,
};
use crate::shift::{HomoclinicPoint, SymbolicPoint};
use std::ops::RangeInclusive;

const MODULUS_GAP: f64 = 1e-9;

/// `A^ℓ_p` for a periodic point of minimal period `ℓ`.
pub fn return_matrix(a: &CocycleSpec, p: &SymbolicPoint) -> Result<Matrix> {
    let l = p.period().ok_or(Error::NotPeriodic)?;
    Ok(evaluate(a, p, l as i64))
}

pub fn periodic_eigendata(a: &CocycleSpec, p: &SymbolicPoint) -> Result<SpectrumRecord> {
    sorted_spectrum(&return_matrix(a, p)?)
}

pub(crate) fn is_pinched(s: &SpectrumRecord) -> bool {
    let m = s.moduli();
    s.all_real() && m.windows(2).all(|w| w[0] - w[1] > MODULUS_GAP * w[0])
}

/// Real eigenvalues with pairwise distinct moduli over the orbit of `p`.
pub fn pinching_check(a: &CocycleSpec, p: &SymbolicPoint) -> Result<bool> {
    Ok(is_pinched(&periodic_eigendata(a, p)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicityReport {
    pub pinching: bool,
    pub eigen_moduli: SpectrumRecord,
    pub twisting: bool,
    pub failing_pairs: Vec<WedgePair>,
    pub pairs_checked: usize,
    /// `ψ` written in the eigenbasis of the return matrix (empty unless pinched).
    pub psi_eigenbasis: Matrix,
    pub verdict: bool,
}

/// Pinching at `p` and twisting of `ψ` in the eigenbasis of the return matrix. Twisting is
/// only evaluated for pinched orbits, where the eigenbasis is real.
pub fn simplicity_check(a: &CocycleSpec, h: &HomoclinicPoint, tol: f64) -> Result<SimplicityReport> {
    let m = return_matrix(a, &h.periodic)?;
    let spectrum = sorted_spectrum(&m)?;
    let pinching = is_pinched(&spectrum);
    if !pinching {
        return Ok(SimplicityReport {
            pinching,
            eigen_moduli: spectrum,
            twisting: false,
            failing_pairs: Vec::new(),
            pairs_checked: 0,
            psi_eigenbasis: Matrix::zeros(0, 0),
            verdict: false,
        });
    }
    let t = psi_transition(a, h, tol)?;
    let dec = real_block_decomposition(&m)?;
    let psi_e = &dec.inverse * &t.psi * &dec.basis;
    let outcome = twisting_check(&psi_e);
    Ok(SimplicityReport {
        pinching,
        eigen_moduli: spectrum,
        twisting: outcome.twisted,
        failing_pairs: outcome.failing_pairs,
        pairs_checked: outcome.pairs_checked,
        psi_eigenbasis: psi_e,
        verdict: outcome.twisted,
    })
}

/// Invariant subspaces of the return matrix grouped by eigenvalue modulus, strongest first.
pub fn dominated_splitting_at(a: &CocycleSpec, p: &SymbolicPoint) -> Result<Vec<Matrix>> {
    let m = return_matrix(a, p)?;
    let dec = real_block_decomposition(&m)?;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for b in &dec.blocks {
        let cols: Vec<usize> = (b.start..b.start + b.size).collect();
        match groups.last_mut() {
            Some((r, c)) if (*r - b.modulus()).abs() <= MODULUS_GAP * r.max(b.modulus()) => c.extend(cols),
            _ => groups.push((b.modulus(), cols)),
        }
    }
    groups.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(groups.into_iter().map(|(_, c)| dec.basis.select_columns(&c)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingSample {
    pub time: i64,
    pub blocks: Vec<Matrix>,
    /// Smallest angle between a block and the sum of the others.
    pub min_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSplitting {
    pub at_z: Vec<Matrix>,
    pub samples: Vec<SplittingSample>,
    /// Largest sine distance between `A·E(σᵗz)` and `E(σᵗ⁺¹z)` over consecutive samples.
    pub invariance_defect: f64,
}

impl ExtendedSplitting {
    pub fn min_angle(&self) -> f64 {
        self.samples.iter().map(|s| s.min_angle).fold(f64::INFINITY, f64::min)
    }
}

fn block_angles(blocks: &[Matrix]) -> f64 {
    if blocks.len() < 2 {
        return std::f64::consts::FRAC_PI_2;
    }
    (0..blocks.len())
        .map(|j| {
            let others: Vec<&Matrix> = blocks.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, b)| b).collect();
            let cols: Vec<_> = others.iter().flat_map(|b| b.column_iter().map(|c| c.into_owned())).collect();
            principal_angle(&blocks[j], &Matrix::from_columns(&cols))
        })
        .fold(f64::INFINITY, f64::min)
}

fn hstack(blocks: &[Matrix]) -> Matrix {
    let cols: Vec<_> = blocks.iter().flat_map(|b| b.column_iter().map(|c| c.into_owned())).collect();
    Matrix::from_columns(&cols)
}

/// Intersection of two column spans expected to have dimension `dim`.
fn intersect(u: &Matrix, v: &Matrix, dim: usize) -> Result<Matrix> {
    let u = orthonormalize(u);
    let v = orthonormalize(v);
    let d = u.nrows();
    let mut joint = Matrix::zeros(d, u.ncols() + v.ncols());
    joint.view_mut((0, 0), (d, u.ncols())).copy_from(&u);
    joint.view_mut((0, u.ncols()), (d, v.ncols())).copy_from(&(-&v));
    let sv = joint.singular_values();
    let smallest_of_rank = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if joint.ncols() != d + dim || smallest_of_rank < 1e-8 {
        return Err(Error::SplittingExtensionFailed(format!(
            "holonomy images are not transverse (singular value {smallest_of_rank:e})"
        )));
    }
    let (null, _) = crate::linalg::null_space(&joint, dim);
    Ok(orthonormalize(&(&u * null.rows(0, u.ncols()))))
}

/// Extends an invariant dominated splitting at `p` (strongest block first) to the orbit of
/// the homoclinic point: block `j` at `σᵗz` is the stable-holonomy image of blocks `j..` at
/// `σᵗp` met with the unstable-holonomy image of blocks `..=j`. Each sample is computed from
/// the holonomies directly; invariance under the cocycle is measured between samples.
pub fn extend_splitting(
    a: &CocycleSpec,
    h: &HomoclinicPoint,
    splitting: &[Matrix],
    times: RangeInclusive<i64>,
    tol: f64,
) -> Result<ExtendedSplitting> {
    let d = a.dim();
    let m = return_matrix(a, &h.periodic)?;
    if splitting.iter().map(|b| b.ncols()).sum::<usize>() != d {
        return Err(Error::DimensionMismatch("splitting dimensions must sum to the fiber dimension".into()));
    }
    for b in splitting {
        let q = orthonormalize(b);
        let image = &m * &q;
        let off = &image - &q * (q.transpose() * &image);
        if q.ncols() != b.ncols() || op_norm(&off) > 1e-8 * op_norm(&m) {
            return Err(Error::InvalidArgument("splitting is not invariant under the return matrix".into()));
        }
    }
    let consts = holonomy_constants(a)?;
    let z = &h.point;
    let p = &h.periodic;
    let l = p.period().expect("periodic") as i64;
    // the splitting along the periodic orbit depends only on the phase
    let mut phases = vec![splitting.to_vec()];
    for r in 0..l - 1 {
        let g = a.value_at(p, r);
        let next = phases[r as usize].iter().map(|b| orthonormalize(&(&g * b))).collect();
        phases.push(next);
    }
    let at_time = |t: i64| -> Result<Vec<Matrix>> {
        let zt = z.shift(t);
        let pt = p.shift(t);
        let split = &phases[t.rem_euclid(l) as usize];
        let hs = consts.stable(a, &zt, &pt, tol)?.matrix;
        let hu = consts.unstable(a, &zt, &pt, tol)?.matrix;
        let k = split.len();
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            // the full space is skipped: its holonomy image is trivial but badly conditioned
            let block = match (j == 0, j + 1 == k) {
                (true, true) => Matrix::identity(a.dim(), a.dim()),
                (true, false) => orthonormalize(&(&hu * &split[0])),
                (false, true) => orthonormalize(&(&hs * &split[k - 1])),
                (false, false) => {
                    intersect(&(&hs * hstack(&split[j..])), &(&hu * hstack(&split[..=j])), split[j].ncols())?
                }
            };
            if block.ncols() != split[j].ncols() {
                return Err(Error::SplittingExtensionFailed(format!("block {j} collapsed at time {t}")));
            }
            out.push(block);
        }
        if block_angles(&out) < 1e-10 {
            return Err(Error::SplittingExtensionFailed(format!("blocks are not independent at time {t}")));
        }
        Ok(out)
    };
    let at_z = at_time(0)?;
    let mut samples = Vec::new();
    let mut invariance_defect = 0.0f64;
    let mut prev: Option<(i64, Vec<Matrix>)> = None;
    for t in times {
        let blocks = if t == 0 { at_z.clone() } else { at_time(t)? };
        if let Some((s, ref b)) = prev {
            let g = a.value_at(z, s);
            for (old, new) in b.iter().zip(&blocks) {
                let moved = orthonormalize(&(&g * old));
                let q = orthonormalize(new);
                let off = &moved - &q * (q.transpose() * &moved);
                invariance_defect = invariance_defect.max(op_norm(&off));
            }
        }
        samples.push(SplittingSample { time: t, min_angle: block_angles(&blocks), blocks: blocks.clone() });
        prev = Some((t, blocks));
    }
    Ok(ExtendedSplitting { at_z, samples, invariance_defect })
}
