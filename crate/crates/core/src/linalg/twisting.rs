use super::exterior::{combinations, minor};
use super::symplectic::paired_rotation;
use super::Matrix;
use crate::error::{Error, Result};

/// An index pair `(I, I')` with `|I| + |I'| = d` (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct WedgePair {
    pub image: Vec<usize>,
    pub complement: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TwistingOutcome {
    pub twisted: bool,
    pub failing_pairs: Vec<WedgePair>,
    pub pairs_checked: usize,
}

fn complement(d: usize, set: &[usize]) -> Vec<usize> {
    (0..d).filter(|i| !set.contains(i)).collect()
}

/// `(Λ^{|I|}ψ)(e_I) ∧ e_{I'}` equals, up to sign, the minor of ψ on rows outside `I'`
/// and columns `I`; a pair fails when that minor is below `1e-10·‖Λ^{|I|}ψ‖`, the norm
/// being the product of the `|I|` largest singular values.
pub fn twisting_check(psi: &Matrix) -> TwistingOutcome {
    let d = psi.nrows();
    let mut sv: Vec<f64> = psi.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let mut failing = Vec::new();
    let mut checked = 0;
    for k in 0..=d {
        let scale = sv[..k].iter().product::<f64>().max(f64::MIN_POSITIVE);
        let images = combinations(d, k);
        let comps = combinations(d, d - k);
        for i_set in &images {
            for c_set in &comps {
                checked += 1;
                let rows = complement(d, c_set);
                if minor(psi, &rows, i_set).abs() <= 1e-10 * scale {
                    failing.push(WedgePair { image: i_set.clone(), complement: c_set.clone() });
                }
            }
        }
    }
    TwistingOutcome { twisted: failing.is_empty(), failing_pairs: failing, pairs_checked: checked }
}

fn failures(x: &Matrix) -> Vec<WedgePair> {
    twisting_check(x).failing_pairs
}

/// Symplectic `2n×2n` matrix preserving `span{eᵢ}` whose restriction there is twisting.
///
/// Starts from the identity and repairs the first failing pair with a paired rotation that
/// moves a row of `I'` into the complementary rows, halving the angle until no previously
/// passing pair breaks.
pub fn twisting_witness(n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("half-dimension must be positive".into()));
    }
    let cap = 2 * 4usize.pow(n.min(15) as u32);
    let mut full = Matrix::identity(2 * n, 2 * n);
    let restrict = |m: &Matrix| m.view((0, 0), (n, n)).into_owned();
    let mut failing = failures(&restrict(&full));
    let mut iterations = 0;
    while let Some(target) = failing.first().cloned() {
        iterations += 1;
        if iterations > cap {
            return Err(Error::IterationCap(cap));
        }
        let rows_out = complement(n, &target.complement);
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for &a in &target.complement {
            for &b in &rows_out {
                candidates.push((a.min(b), a.max(b)));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if !candidates.contains(&(i, j)) {
                    candidates.push((i, j));
                }
            }
        }
        let mut improved = None;
        'search: for &(i, j) in &candidates {
            let mut theta = 0.5;
            for _ in 0..12 {
                for sign in [1.0, -1.0] {
                    let next = paired_rotation(sign * theta, i, j, n)? * &full;
                    let f = failures(&restrict(&next));
                    let keeps = f.iter().all(|p| failing.contains(p));
                    if keeps && !f.contains(&target) {
                        improved = Some((next, f));
                        break 'search;
                    }
                }
                theta *= 0.5;
            }
        }
        match improved {
            Some((next, f)) => {
                full = next;
                failing = f;
            }
            None => return Err(Error::IterationCap(iterations)),
        }
    }
    Ok(full)
}
