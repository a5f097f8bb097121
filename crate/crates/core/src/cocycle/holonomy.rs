use super::{evaluate, CocycleSpec};
use crate::error::{Error, Result};
use crate::linalg::{check_invertible, op_norm, Matrix};
use crate::shift::{metric, HomoclinicPoint, SymbolicPoint};

const MAX_POWER: usize = 64;
const ENUMERATION_LIMIT: u128 = 4096;
const DEPTH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub dominated: bool,
    /// First `N` with `sup ‖A^N‖‖(A^N)⁻¹‖·θ^{νN} < 1`, or the minimizing `N ≤ 64` otherwise.
    pub power: usize,
    /// `1 − sup ‖A^N‖‖(A^N)⁻¹‖·θ^{νN}` at `power`.
    pub margin: f64,
    pub locally_constant: bool,
    pub admits_holonomies: bool,
    /// Upper bounds for `sup ‖A^n‖‖(A^n)⁻¹‖`, `n = 0..=64` (exact for short words).
    pub condition_bounds: Vec<f64>,
}

fn condition(m: &Matrix) -> f64 {
    let sv = m.singular_values();
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Exact cylinder sups for short products, submultiplicative bounds beyond.
fn condition_bounds(a: &CocycleSpec) -> Vec<f64> {
    let w = a.window();
    let base = a.base();
    let mut exact_len = 0;
    while exact_len < MAX_POWER && base.count_words(exact_len + w) <= ENUMERATION_LIMIT {
        exact_len += 1;
    }
    let exact_len = exact_len.max(1);
    let mut best = vec![0.0f64; exact_len + 1];
    best[0] = 1.0;
    let m = base.alphabet_size() as u8;
    // depth-first over admissible words, carrying the running product
    let mut stack: Vec<(Vec<u8>, Matrix, usize)> = Vec::new();
    for (word, g) in a.generators() {
        stack.push((word.clone(), g.clone(), 1));
    }
    while let Some((word, prod, n)) = stack.pop() {
        best[n] = best[n].max(condition(&prod));
        if n == exact_len {
            continue;
        }
        for s in 0..m {
            if !base.allowed(*word.last().unwrap(), s) {
                continue;
            }
            let mut next = word[word.len() + 1 - w..].to_vec();
            next.push(s);
            let g = a.generator(&next).expect("admissible window");
            stack.push((next, g * &prod, n + 1));
        }
    }
    let size = a.perturbation_size();
    let factor = (1.0 + size) / (1.0 - size);
    let mut out = vec![1.0f64; MAX_POWER + 1];
    for n in 1..=MAX_POWER {
        out[n] = if n <= exact_len {
            best[n] * factor.powi(n as i32)
        } else {
            (1..n).map(|i| out[i] * out[n - i]).fold(f64::INFINITY, f64::min)
        };
    }
    out
}

/// Searches `N = 1..=64` for `sup_cylinders ‖A^N‖‖(A^N)⁻¹‖·θ^{νN} < 1`.
pub fn domination_check(a: &CocycleSpec) -> DominationReport {
    let bounds = condition_bounds(a);
    let theta_nu = a.base().theta().powf(a.nu());
    let mut best = (1, f64::INFINITY);
    let mut found = None;
    for n in 1..=MAX_POWER {
        let v = bounds[n] * theta_nu.powi(n as i32);
        if v < best.1 {
            best = (n, v);
        }
        if v < 1.0 {
            found = Some((n, v));
            break;
        }
    }
    let (power, sup) = found.unwrap_or(best);
    let locally_constant = a.is_locally_constant();
    DominationReport {
        dominated: found.is_some(),
        power,
        margin: 1.0 - sup,
        locally_constant,
        admits_holonomies: found.is_some() || locally_constant,
        condition_bounds: bounds,
    }
}

/// Constants controlling holonomy limits of a dominated cocycle.
///
/// With `q = 1 − margin` at power `N`, `K₀ = max_{r<N} sup κ(A^r)` and
/// `L = max κ(G)·a·K_ρ/(1 − a)` (`a` the bump size), the partial products satisfy
/// `‖H − H_n‖ ≤ C₁·q^{⌊n/N⌋}·d^ν` with `S = K₀·L·N/(1 − q)` and `C₁ = S·e^S`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyConstants {
    pub power: usize,
    pub rate: f64,
    pub k0: f64,
    pub lipschitz: f64,
    pub c1: f64,
    locally_constant: bool,
}

pub fn holonomy_constants(a: &CocycleSpec) -> Result<HolonomyConstants> {
    if a.is_locally_constant() {
        return Ok(HolonomyConstants { power: 1, rate: 0.0, k0: 1.0, lipschitz: 0.0, c1: 0.0, locally_constant: true });
    }
    let dom = domination_check(a);
    if !dom.dominated {
        return Err(Error::NotDominated);
    }
    let n = dom.power;
    let q = 1.0 - dom.margin;
    let k0 = dom.condition_bounds[..n].iter().cloned().fold(1.0, f64::max);
    let size = a.perturbation_size();
    let kg = a.generators().values().map(condition).fold(1.0, f64::max);
    let lipschitz = kg * size * a.rho_hoelder_constant() / (1.0 - size);
    let s = k0 * lipschitz * n as f64 / (1.0 - q);
    Ok(HolonomyConstants { power: n, rate: q, k0, lipschitz, c1: s * s.exp(), locally_constant: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolonomyKind {
    Stable,
    Unstable,
}

/// A linear map from the fiber over `source` to the fiber over `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyMap {
    pub source: SymbolicPoint,
    pub target: SymbolicPoint,
    pub kind: HolonomyKind,
    pub matrix: Matrix,
    pub truncation_error: f64,
}

impl HolonomyConstants {
    /// Truncation depth with tail bound below `tol` for points at distance ≤ 1.
    pub fn depth(&self, tol: f64) -> usize {
        if self.locally_constant || self.c1 <= tol {
            return 0;
        }
        let blocks = ((tol / self.c1).ln() / self.rate.ln()).ceil() as usize;
        (blocks * self.power).min(DEPTH_CAP)
    }

    fn tail(&self, depth: usize, dist: f64, nu: f64) -> f64 {
        if self.locally_constant {
            0.0
        } else {
            self.c1 * self.rate.powi((depth / self.power) as i32) * dist.powf(nu)
        }
    }

    /// `lim (A^n_x)⁻¹ A^n_y`, mapping the fiber over `y` to the fiber over `x`.
    pub fn stable(&self, a: &CocycleSpec, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyMap> {
        self.stable_at_depth(a, x, y, self.depth(tol))
    }

    /// `lim A^n_{σ⁻ⁿx} (A^n_{σ⁻ⁿy})⁻¹`, mapping the fiber over `y` to the fiber over `x`.
    pub fn unstable(&self, a: &CocycleSpec, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyMap> {
        self.unstable_at_depth(a, x, y, self.depth(tol))
    }

    /// Stable holonomy truncated `depth` steps past the last disagreeing window.
    pub fn stable_at_depth(
        &self,
        a: &CocycleSpec,
        x: &SymbolicPoint,
        y: &SymbolicPoint,
        depth: usize,
    ) -> Result<HolonomyMap> {
        let d = a.dim();
        let id = Matrix::identity(d, d);
        let mut out =
            HolonomyMap { source: y.clone(), target: x.clone(), kind: HolonomyKind::Stable, matrix: id.clone(), truncation_error: 0.0 };
        if x == y {
            return Ok(out);
        }
        let i0 = x.forward_agreement(y).ok_or(Error::NotOnCommonLeaf("stable"))?;
        let n0 = i0.max(0);
        let depth = if self.locally_constant { 0 } else { depth as i64 };
        // Works with H − I so that rounding stays relative to the (small) increments.
        let mut acc = Matrix::zeros(d, d);
        let mut nonzero = false;
        for k in (0..n0 + depth).rev() {
            let inc = if k >= n0 { a.stable_increment(x, y, k) } else { Some(a.inverse_at(x, k) * a.value_at(y, k) - &id) };
            if nonzero {
                acc = a.inverse_at(x, k) * acc * a.value_at(y, k);
            }
            if let Some(inc) = inc {
                acc += inc;
                nonzero = true;
            }
        }
        out.matrix = acc + id;
        if !self.locally_constant {
            let head = op_norm(&evaluate(a, x, n0).try_inverse().ok_or(Error::NonInvertible)?) * op_norm(&evaluate(a, y, n0));
            let dist = metric(&x.shift(n0), &y.shift(n0), a.base());
            out.truncation_error = head * self.tail(depth as usize, dist, a.nu());
        }
        Ok(out)
    }

    /// Unstable holonomy truncated `depth` steps before the last disagreeing window.
    pub fn unstable_at_depth(
        &self,
        a: &CocycleSpec,
        x: &SymbolicPoint,
        y: &SymbolicPoint,
        depth: usize,
    ) -> Result<HolonomyMap> {
        let d = a.dim();
        let id = Matrix::identity(d, d);
        let mut out = HolonomyMap {
            source: y.clone(),
            target: x.clone(),
            kind: HolonomyKind::Unstable,
            matrix: id.clone(),
            truncation_error: 0.0,
        };
        if x == y {
            return Ok(out);
        }
        let i1 = x.backward_agreement(y).ok_or(Error::NotOnCommonLeaf("unstable"))?;
        let n0 = (a.window() as i64 - 1).saturating_sub(i1).max(0);
        let depth = if self.locally_constant { 0 } else { depth as i64 };
        let mut acc = Matrix::zeros(d, d);
        let mut nonzero = false;
        for k in (1..=n0 + depth).rev() {
            let inc =
                if k >= n0 { a.unstable_increment(x, y, -k) } else { Some(a.value_at(x, -k) * a.inverse_at(y, -k) - &id) };
            if nonzero {
                acc = a.value_at(x, -k) * acc * a.inverse_at(y, -k);
            }
            if let Some(inc) = inc {
                acc += inc;
                nonzero = true;
            }
        }
        out.matrix = acc + id;
        if !self.locally_constant {
            let head =
                op_norm(&evaluate(a, x, -n0).try_inverse().ok_or(Error::NonInvertible)?) * op_norm(&evaluate(a, y, -n0));
            let dist = metric(&x.shift(-n0), &y.shift(-n0), a.base());
            out.truncation_error = head * self.tail(depth as usize, dist, a.nu());
        }
        Ok(out)
    }
}

/// Stable holonomy from the fiber over `y` to the fiber over `x`; `x` and `y` must agree
/// from some index on.
pub fn stable_holonomy(a: &CocycleSpec, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyMap> {
    holonomy_constants(a)?.stable(a, x, y, tol)
}

/// Unstable holonomy from the fiber over `y` to the fiber over `x`; `x` and `y` must agree
/// up to some index.
pub fn unstable_holonomy(a: &CocycleSpec, x: &SymbolicPoint, y: &SymbolicPoint, tol: f64) -> Result<HolonomyMap> {
    holonomy_constants(a)?.unstable(a, x, y, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicTransition {
    pub p: SymbolicPoint,
    pub z: SymbolicPoint,
    pub psi: Matrix,
    pub exit_time: i64,
    pub truncation_error: f64,
}

/// `ψ = H^s_{z→p} ∘ H^u_{p→z}`, an automorphism of the fiber over `p`.
pub fn psi_transition(a: &CocycleSpec, h: &HomoclinicPoint, tol: f64) -> Result<HomoclinicTransition> {
    let p = &h.periodic;
    let z = &h.point;
    match z.shift(h.exit_time).forward_agreement(p) {
        Some(i) if i <= 0 => {}
        _ => return Err(Error::MisalignedExit(h.exit_time)),
    }
    let consts = holonomy_constants(a)?;
    let hu = consts.unstable(a, z, p, tol)?;
    let hs = consts.stable(a, p, z, tol)?;
    let psi = &hs.matrix * &hu.matrix;
    check_invertible(&psi)?;
    let truncation_error = hs.truncation_error * op_norm(&hu.matrix) + op_norm(&hs.matrix) * hu.truncation_error;
    Ok(HomoclinicTransition { p: p.clone(), z: z.clone(), psi, exit_time: h.exit_time, truncation_error })
}

#[cfg(test)]
mod tests {
    use super::super::{HoelderBump, HoelderPerturbation};
    use super::*;
    use crate::linalg::rotation2;
    use crate::shift::{homoclinic_point, parse_word, SftSpec};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    fn hoelder(amplitude: f64) -> CocycleSpec {
        let a0 = diag(&[1.5, 1.0 / 1.5]);
        let a1 = rotation2(0.7) * diag(&[1.2, 1.0 / 1.2]);
        let e = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        CocycleSpec::from_symbols(SftSpec::full(2, 0.25).unwrap(), &[a0, a1])
            .unwrap()
            .with_hoelder(HoelderPerturbation {
                exponent: 1.0,
                bumps: vec![HoelderBump { word: vec![0], amplitude, direction: e }],
            })
            .unwrap()
    }

    fn lc() -> CocycleSpec {
        let a0 = diag(&[2.0, 0.5]);
        let a1 = rotation2(0.7) * diag(&[2.0, 0.5]);
        CocycleSpec::from_symbols(SftSpec::full(2, 0.5).unwrap(), &[a0, a1]).unwrap()
    }

    #[test]
    fn domination_examples() {
        for theta in [0.3, 0.5, 0.9] {
            let a = CocycleSpec::constant(SftSpec::full(2, theta).unwrap(), &Matrix::identity(2, 2)).unwrap();
            let r = domination_check(&a);
            assert!(r.dominated);
            assert_eq!(r.power, 1);
            assert!((r.margin - (1.0 - theta)).abs() < 1e-12);
        }
        // κ(Sᴺ)·2⁻ᴺ first drops below 1 at N = 5 for the unit shear.
        let shear = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let a = CocycleSpec::constant(SftSpec::full(2, 0.5).unwrap(), &shear).unwrap();
        let r = domination_check(&a);
        assert!(r.dominated);
        assert_eq!(r.power, 5);
        let oracle = |n: f64| {
            let s = (n + (n * n + 4.0).sqrt()) / 2.0;
            s * s * 0.5f64.powf(n)
        };
        assert!((r.margin - (1.0 - oracle(5.0))).abs() < 1e-12);
        assert!(oracle(4.0) > 1.0);

        let hyper = CocycleSpec::constant(SftSpec::full(2, 0.5).unwrap(), &diag(&[2.0, 0.5])).unwrap();
        let r = domination_check(&hyper);
        assert!(!r.dominated);
        assert!(r.admits_holonomies);
    }

    #[test]
    fn condition_bounds_are_exact_then_submultiplicative() {
        let a = lc();
        let b = domination_check(&a).condition_bounds;
        assert!((b[3] - 64.0).abs() < 1e-9);
        for n in 1..30 {
            assert!(b[n + 1] <= b[n] * b[1] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn locally_constant_holonomies_are_exact() {
        let a = lc();
        let x = SymbolicPoint::new(vec![1], vec![0, 1], vec![0, 1, 1], 0).unwrap();
        let y = SymbolicPoint::new(vec![0], vec![0, 1], vec![0, 1, 1], 0).unwrap();
        let h = stable_holonomy(&a, &x, &y, 1e-12).unwrap();
        assert_eq!(h.matrix, Matrix::identity(2, 2));
        assert_eq!(h.truncation_error, 0.0);
        assert_eq!(stable_holonomy(&a, &x, &x, 1e-12).unwrap().matrix, Matrix::identity(2, 2));
        assert_eq!(stable_holonomy(&a, &x, &y.shift(1), 1e-12).unwrap_err(), Error::NotOnCommonLeaf("stable"));

        let u1 = SymbolicPoint::new(vec![0, 1], vec![1], vec![0], 0).unwrap();
        let u2 = SymbolicPoint::new(vec![0, 1], vec![1], vec![1], 0).unwrap();
        let h = unstable_holonomy(&a, &u1, &u2, 1e-12).unwrap();
        assert_eq!(h.matrix, Matrix::identity(2, 2));

        // disagreement inside the forward range: the exact head product
        let x = SymbolicPoint::new(vec![0], vec![1, 0, 0], vec![1], 0).unwrap();
        let y = SymbolicPoint::new(vec![0], vec![0, 1, 0], vec![1], 0).unwrap();
        let h = stable_holonomy(&a, &x, &y, 1e-12).unwrap();
        let direct = evaluate(&a, &x, 2).try_inverse().unwrap() * evaluate(&a, &y, 2);
        assert!((h.matrix - direct).amax() < 1e-14);
    }

    #[test]
    fn hoelder_holonomy_converges_within_bound() {
        let a = hoelder(1e-3);
        let c = holonomy_constants(&a).unwrap();
        let x = SymbolicPoint::new(vec![0], vec![0, 1, 1], vec![0, 1], 0).unwrap();
        let y = SymbolicPoint::new(vec![0], vec![1, 0, 1, 1], vec![0, 1], -1).unwrap();
        assert_eq!(x.forward_agreement(&y), Some(-1 + 1));
        let h30 = c.stable_at_depth(&a, &x, &y, 30).unwrap();
        let h60 = c.stable_at_depth(&a, &x, &y, 60).unwrap();
        assert!((&h30.matrix - &h60.matrix).amax() < 1e-12);
        let dist = metric(&x, &y, a.base());
        assert!((dist - 0.25).abs() < 1e-15);
        let dev = op_norm(&(&h60.matrix - Matrix::identity(2, 2)));
        assert!(dev > 0.0 && dev <= c.c1 * dist);
        assert!(h60.truncation_error <= c.c1 * dist);
    }

    #[test]
    fn psi_examples() {
        let full = SftSpec::full(2, 0.5).unwrap();
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 3.0]);
        let hp = homoclinic_point(&[0], &[1], &full).unwrap();
        let c = CocycleSpec::constant(full.clone(), &m).unwrap();
        let t = psi_transition(&c, &hp, 1e-12).unwrap();
        assert!((t.psi - Matrix::identity(2, 2)).amax() < 1e-12);

        let a0 = diag(&[2.0, 0.5]);
        let a1 = rotation2(FRAC_PI_4) * diag(&[3.0, 1.0 / 3.0]);
        let a = CocycleSpec::from_symbols(full.clone(), &[a0, a1]).unwrap();
        let t = psi_transition(&a, &hp, 1e-12).unwrap();
        assert_eq!(t.exit_time, 1);
        let expected = diag(&[0.5, 2.0]) * rotation2(FRAC_PI_4) * diag(&[3.0, 1.0 / 3.0]);
        assert!((t.psi - expected).amax() < 1e-14);

        // longer exit: (A^N_p)⁻¹ A^N_z
        let hp = homoclinic_point(&parse_word("01").unwrap(), &parse_word("11").unwrap(), &full).unwrap();
        let t = psi_transition(&a, &hp, 1e-12).unwrap();
        let n = hp.exit_time;
        let direct = evaluate(&a, &hp.periodic, n).try_inverse().unwrap() * evaluate(&a, &hp.point, n);
        assert!((t.psi - direct).amax() < 1e-12);
    }

    fn arb_stable_pair() -> impl Strategy<Value = (SymbolicPoint, SymbolicPoint, SymbolicPoint)> {
        let word = |lo, hi| proptest::collection::vec(0u8..2, lo..hi);
        (word(1, 3), word(1, 3), word(1, 3), word(0, 5), word(1, 4), word(1, 4), word(1, 4), word(1, 3)).prop_map(
            |(l1, l2, l3, fwd, c1, c2, c3, r)| {
                let mk = |l: Vec<u8>, c: Vec<u8>| {
                    let s = -(c.len() as i64);
                    let mut core = c;
                    core.extend_from_slice(&fwd);
                    SymbolicPoint::new(l, core, r.clone(), s).unwrap()
                };
                (mk(l1, c1), mk(l2, c2), mk(l3, c3))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn stable_composition_and_equivariance((x, y, z) in arb_stable_pair()) {
            for (a, tol) in [(lc(), 1e-10), (hoelder(0.05), 1e-13)] {
                let c = holonomy_constants(&a).unwrap();
                let hxy = c.stable(&a, &x, &y, tol).unwrap();
                let hyz = c.stable(&a, &y, &z, tol).unwrap();
                let hxz = c.stable(&a, &x, &z, tol).unwrap();
                let err = hxy.truncation_error * op_norm(&hyz.matrix)
                    + op_norm(&hxy.matrix) * hyz.truncation_error + hxz.truncation_error;
                prop_assert!((&hxz.matrix - &hxy.matrix * &hyz.matrix).amax() <= err + 1e-10);
                let shifted = c.stable(&a, &x.shift(1), &y.shift(1), tol).unwrap();
                let pushed = a.value_at(&x, 0) * &hxy.matrix * a.inverse_at(&y, 0);
                let err = shifted.truncation_error + op_norm(&a.value_at(&x, 0)) * hxy.truncation_error * op_norm(&a.inverse_at(&y, 0));
                prop_assert!((shifted.matrix - pushed).amax() <= err + 1e-10);
                if x.forward_agreement(&y).map_or(false, |i| i <= 0) && !a.is_locally_constant() {
                    let dist = metric(&x, &y, a.base());
                    prop_assert!(op_norm(&(&hxy.matrix - Matrix::identity(2, 2))) <= c.c1 * dist + hxy.truncation_error);
                }
            }
        }

        #[test]
        fn unstable_composition_and_equivariance((x, y, z) in arb_stable_pair()) {
            // mirror images of stable pairs are unstable pairs
            let flip = |p: &SymbolicPoint| {
                let lo = p.core_start();
                let hi = p.core_end();
                let core: Vec<u8> = (lo..hi).rev().map(|i| p.symbol(i)).collect();
                let mut left = p.right_period().to_vec();
                left.reverse();
                let mut right = p.left_period().to_vec();
                right.reverse();
                SymbolicPoint::new(left, core, right, -hi + 1).unwrap()
            };
            let (x, y, z) = (flip(&x), flip(&y), flip(&z));
            for (a, tol) in [(lc(), 1e-10), (hoelder(0.05), 1e-13)] {
                let c = holonomy_constants(&a).unwrap();
                let hxy = c.unstable(&a, &x, &y, tol).unwrap();
                let hyz = c.unstable(&a, &y, &z, tol).unwrap();
                let hxz = c.unstable(&a, &x, &z, tol).unwrap();
                let err = hxy.truncation_error * op_norm(&hyz.matrix)
                    + op_norm(&hxy.matrix) * hyz.truncation_error + hxz.truncation_error;
                prop_assert!((&hxz.matrix - &hxy.matrix * &hyz.matrix).amax() <= err + 1e-10);
                let back = c.unstable(&a, &x.shift(-1), &y.shift(-1), tol).unwrap();
                let pushed = a.value_at(&x, -1) * &back.matrix * a.inverse_at(&y, -1);
                let err = hxy.truncation_error + op_norm(&a.value_at(&x, -1)) * back.truncation_error * op_norm(&a.inverse_at(&y, -1));
                prop_assert!((&hxy.matrix - pushed).amax() <= err + 1e-10);
            }
        }
    }
}
