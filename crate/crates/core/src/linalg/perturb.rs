use super::decompose::real_block_decomposition;
use super::spectrum::sorted_spectrum;
use super::symplectic::{symplectic_basis, SymplecticBlock, SymplecticForm};
use super::util::op_norm;
use super::{Constraint, Matrix};
use crate::error::{Error, Result};

const SAME_MODULUS: f64 = 1e-9;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= SAME_MODULUS * a.max(b)
}

/// Groups of block indices sharing a modulus, in order of first appearance.
fn modulus_groups(moduli: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &m) in moduli.iter().enumerate() {
        match groups.iter_mut().find(|g| same(moduli[g[0]], m)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// True when the eigenvalue moduli of `m` are pairwise distinct apart from conjugate pairs.
fn moduli_separated(m: &Matrix) -> Result<bool> {
    let s = sorted_spectrum(m)?;
    let ev = &s.eigenvalues;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            let conj_pair = ev[i].im != 0.0 && (ev[i].conj() - ev[j]).norm() <= 1e-12 * ev[i].norm();
            if !conj_pair && same(ev[i].norm(), ev[j].norm()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per-block log scalings for a plain or determinant-preserving separation.
fn log_factors(groups: &[Vec<usize>], sizes: &[usize], delta: f64, det_one: bool) -> Vec<f64> {
    let mut out = vec![0.0; sizes.len()];
    for g in groups.iter().filter(|g| g.len() > 1) {
        if det_one {
            let w: f64 = g.iter().map(|&b| sizes[b] as f64).sum();
            let centre: f64 = g.iter().enumerate().map(|(j, &b)| j as f64 * sizes[b] as f64).sum::<f64>() / w;
            for (j, &b) in g.iter().enumerate() {
                out[b] = delta * (j as f64 - centre);
            }
        } else {
            for (j, &b) in g.iter().enumerate() {
                out[b] = (j as f64 * delta).ln_1p();
            }
        }
    }
    out
}

/// Rescales blocks of equal modulus so that all moduli become distinct, keeping
/// `‖M' − M‖ ≤ ε` and the requested structure.
pub fn moduli_separation_perturb(m: &Matrix, eps: f64, constraint: Constraint) -> Result<Matrix> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation size {eps}")));
    }
    match constraint {
        Constraint::Symplectic => separate_symplectic(m, eps),
        _ => separate_plain(m, eps, constraint == Constraint::DetOne),
    }
}

fn accept(m: &Matrix, candidate: &Matrix, eps: f64) -> Result<bool> {
    Ok(op_norm(&(candidate - m)) <= eps && moduli_separated(candidate)?)
}

fn separate_plain(m: &Matrix, eps: f64, det_one: bool) -> Result<Matrix> {
    let dec = real_block_decomposition(m)?;
    let moduli: Vec<f64> = dec.blocks.iter().map(|b| b.modulus()).collect();
    let groups = modulus_groups(&moduli);
    if groups.iter().all(|g| g.len() == 1) {
        return Ok(m.clone());
    }
    let sizes: Vec<usize> = dec.blocks.iter().map(|b| b.size).collect();
    let inner = &dec.inverse * m * &dec.basis;
    let mut delta = eps / 10.0;
    for _ in 0..40 {
        let logs = log_factors(&groups, &sizes, delta, det_one);
        let mut scale = Matrix::identity(m.nrows(), m.ncols());
        for (b, l) in dec.blocks.iter().zip(&logs) {
            for k in b.start..b.start + b.size {
                scale[(k, k)] = l.exp();
            }
        }
        let candidate = &dec.basis * (&scale * &inner) * &dec.inverse;
        if accept(m, &candidate, eps)? {
            return Ok(candidate);
        }
        delta *= 0.5;
    }
    Err(Error::IterationCap(40))
}

fn separate_symplectic(m: &Matrix, eps: f64) -> Result<Matrix> {
    if m.nrows() % 2 != 0 {
        return Err(Error::ConstraintViolation("odd dimension cannot be symplectic".into()));
    }
    let n = m.nrows() / 2;
    let form = SymplecticForm::standard(n);
    let dec = symplectic_basis(m, &form)?;
    if dec.blocks.iter().filter(|b| matches!(b, SymplecticBlock::Elliptic { .. })).count() > 1 {
        return Err(Error::ConstraintViolation("elliptic blocks cannot be separated symplectically".into()));
    }
    let moduli: Vec<f64> = dec.blocks.iter().map(|b| b.modulus()).collect();
    let groups = modulus_groups(&moduli);
    if groups.iter().all(|g| g.len() == 1) {
        return Ok(m.clone());
    }
    let pinv = super::inverse(&dec.basis)?;
    let inner = &pinv * m * &dec.basis;
    let sizes = vec![1; dec.blocks.len()];
    let mut delta = eps / 10.0;
    for _ in 0..40 {
        let logs = log_factors(&groups, &sizes, delta, false);
        let mut scale = Matrix::identity(2 * n, 2 * n);
        for (b, l) in dec.blocks.iter().zip(&logs) {
            for k in b.index()..b.index() + b.width() {
                scale[(k, k)] = l.exp();
                scale[(n + k, n + k)] = (-l).exp();
            }
        }
        let candidate = &dec.basis * (&scale * &inner) * &pinv;
        if accept(m, &candidate, eps)? {
            return Ok(candidate);
        }
        delta *= 0.5;
    }
    Err(Error::IterationCap(40))
}
