//! Matrix cocycles over subshifts of finite type.

mod holonomy;
mod perturb;
mod simplicity;

pub use holonomy::{
    domination_check, holonomy_constants, psi_transition, stable_holonomy, unstable_holonomy, DominationReport,
    HolonomyConstants, HolonomyKind, HolonomyMap, HomoclinicTransition,
};
pub use perturb::{cylinder_perturb, rotation_perturb_family, sup_distance, RotationFamily, RotationMode};
pub use simplicity::{
    dominated_splitting_at, extend_splitting, periodic_eigendata, pinching_check, return_matrix, simplicity_check,
    ExtendedSplitting, SimplicityReport, SplittingSample,
};

use crate::error::{Error, Result};
use crate::linalg::{inverse, op_norm, Matrix};
use crate::shift::{format_word, lcm, SftSpec, SymbolicPoint, Word};
use std::collections::BTreeMap;

/// One term `amplitude · 1_[word](x) · ρ(x) · direction` of a Hölder perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct HoelderBump {
    pub word: Word,
    pub amplitude: f64,
    pub direction: Matrix,
}

/// Multiplies the locally constant generator by `I + Σ bumps`, where the scalar
/// `ρ(x) ∈ [0, 1]` depends on every coordinate of `x` with weights decaying like `θ^{ν|k|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoelderPerturbation {
    pub exponent: f64,
    pub bumps: Vec<HoelderBump>,
}

/// Provenance of a rotation inserted by [`RotationFamily::at`].
#[derive(Debug, Clone, PartialEq)]
pub struct RotationInsertion {
    pub support: Word,
    pub planes: Vec<(usize, usize)>,
    pub theta0: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleSpec {
    base: SftSpec,
    window: usize,
    dim: usize,
    generator: BTreeMap<Word, Matrix>,
    inverse: BTreeMap<Word, Matrix>,
    hoelder: Option<HoelderPerturbation>,
    rotation: Option<RotationInsertion>,
}

impl CocycleSpec {
    /// `generator` must cover every admissible word of length `window`.
    pub fn new(base: SftSpec, window: usize, generator: BTreeMap<Word, Matrix>) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        let dim = generator.values().next().map(|g| g.nrows()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidArgument("empty generator".into()));
        }
        let mut inv = BTreeMap::new();
        for (w, g) in &generator {
            if w.len() != window {
                return Err(Error::InvalidArgument(format!("generator word {} has wrong length", format_word(w))));
            }
            base.check_word(w)?;
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch(format!("generator at {} is not {dim}x{dim}", format_word(w))));
            }
            crate::linalg::check_invertible(g)?;
            inv.insert(w.clone(), inverse(g)?);
        }
        for w in base.admissible_words(window) {
            if !generator.contains_key(&w) {
                return Err(Error::InvalidArgument(format!("no generator for word {}", format_word(&w))));
            }
        }
        Ok(CocycleSpec { base, window, dim, generator, inverse: inv, hoelder: None, rotation: None })
    }

    /// Window-1 cocycle with one matrix per symbol.
    pub fn from_symbols(base: SftSpec, matrices: &[Matrix]) -> Result<Self> {
        if matrices.len() != base.alphabet_size() {
            return Err(Error::DimensionMismatch("one matrix per symbol expected".into()));
        }
        let gen = matrices.iter().enumerate().map(|(a, m)| (vec![a as u8], m.clone())).collect();
        Self::new(base, 1, gen)
    }

    pub fn constant(base: SftSpec, m: &Matrix) -> Result<Self> {
        let k = base.alphabet_size();
        Self::from_symbols(base, &vec![m.clone(); k])
    }

    pub fn with_hoelder(mut self, pert: HoelderPerturbation) -> Result<Self> {
        if !(pert.exponent > 0.0 && pert.exponent <= 1.0) {
            return Err(Error::InvalidArgument("Hölder exponent must lie in (0, 1]".into()));
        }
        for b in &pert.bumps {
            if b.word.is_empty() || b.word.len() > self.window {
                return Err(Error::InvalidArgument("bump words must have length 1..=window".into()));
            }
            self.base.check_word(&b.word)?;
            if b.direction.nrows() != self.dim || b.direction.ncols() != self.dim {
                return Err(Error::DimensionMismatch("bump direction has wrong size".into()));
            }
        }
        let total: f64 = pert.bumps.iter().map(|b| b.amplitude.abs() * op_norm(&b.direction)).sum();
        if total >= 0.5 {
            return Err(Error::InvalidArgument(format!("total bump size {total} must be below 1/2")));
        }
        self.hoelder = if pert.bumps.is_empty() { None } else { Some(pert) };
        Ok(self)
    }

    pub fn base(&self) -> &SftSpec {
        &self.base
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self, word: &[u8]) -> Option<&Matrix> {
        self.generator.get(word)
    }

    pub fn generators(&self) -> &BTreeMap<Word, Matrix> {
        &self.generator
    }

    pub fn hoelder(&self) -> Option<&HoelderPerturbation> {
        self.hoelder.as_ref()
    }

    pub fn rotation(&self) -> Option<&RotationInsertion> {
        self.rotation.as_ref()
    }

    pub fn is_locally_constant(&self) -> bool {
        self.hoelder.is_none()
    }

    /// Hölder exponent of the perturbation; 1 for locally constant cocycles.
    pub fn nu(&self) -> f64 {
        self.hoelder.as_ref().map_or(1.0, |h| h.exponent)
    }

    /// `Σ |amplitude|·‖direction‖`, a bound for `‖P(x)‖`.
    pub fn perturbation_size(&self) -> f64 {
        self.hoelder.as_ref().map_or(0.0, |h| h.bumps.iter().map(|b| b.amplitude.abs() * op_norm(&b.direction)).sum())
    }

    /// Constant with `|ρ(x) − ρ(y)| ≤ K·d(x, y)^ν` whenever the windows at 0 agree.
    pub fn rho_hoelder_constant(&self) -> f64 {
        let q = self.base.theta().powf(self.nu());
        (1.0 / q + q.powi(-(self.window as i32))) / 2.0
    }

    pub(crate) fn set_generator(&mut self, word: &[u8], g: Matrix) -> Result<()> {
        crate::linalg::check_invertible(&g)?;
        self.inverse.insert(word.to_vec(), inverse(&g)?);
        self.generator.insert(word.to_vec(), g);
        Ok(())
    }

    pub(crate) fn set_rotation(&mut self, r: Option<RotationInsertion>) {
        self.rotation = r;
    }

    fn lookup(&self, x: &SymbolicPoint, j: i64) -> (&Matrix, &Matrix) {
        let w = x.window(j, self.window);
        match (self.generator.get(&w), self.inverse.get(&w)) {
            (Some(g), Some(gi)) => (g, gi),
            _ => panic!("point visits inadmissible window {}", format_word(&w)),
        }
    }

    fn q(&self) -> f64 {
        self.base.theta().powf(self.nu())
    }

    /// `Σ_{k≥1} c·q^k f(k)` with `c = (1 − q)/(2q)`, where `f` is periodic with period
    /// `period` once `k > head`.
    fn weighted_series(&self, head: u64, period: u64, f: impl Fn(i64) -> f64) -> f64 {
        let q = self.q();
        let c = (1.0 - q) / (2.0 * q);
        let mut s = 0.0;
        let mut qk = 1.0;
        for k in 1..=head as i64 {
            qk *= q;
            s += qk * f(k);
        }
        let mut block = 0.0;
        for k in head as i64 + 1..=(head + period) as i64 {
            qk *= q;
            block += qk * f(k);
        }
        c * (s + block / (1.0 - q.powi(period as i32)))
    }

    fn chi(&self, a: u8) -> f64 {
        let m = self.base.alphabet_size();
        if m <= 1 {
            0.0
        } else {
            a as f64 / (m - 1) as f64
        }
    }

    /// `ρ(σʲx)`.
    fn rho(&self, x: &SymbolicPoint, j: i64) -> f64 {
        self.rho_difference(x, None, j)
    }

    /// `ρ(σʲx) − ρ(σʲy)` summed term by term so that agreeing coordinates cancel exactly;
    /// with `y = None` this is `ρ(σʲx)`.
    fn rho_difference(&self, x: &SymbolicPoint, y: Option<&SymbolicPoint>, j: i64) -> f64 {
        let w = self.window as i64;
        let back_head = |p: &SymbolicPoint| (j - p.core_start()).max(0) as u64;
        let fwd_head = |p: &SymbolicPoint| (p.core_end() - j - w).max(0) as u64;
        let (bh, bp, fh, fp) = match y {
            None => (back_head(x), x.left_period().len() as u64, fwd_head(x), x.right_period().len() as u64),
            Some(y) => (
                back_head(x).max(back_head(y)),
                lcm(x.left_period().len(), y.left_period().len()) as u64,
                fwd_head(x).max(fwd_head(y)),
                lcm(x.right_period().len(), y.right_period().len()) as u64,
            ),
        };
        let term = |i: i64| -> f64 {
            let a = x.symbol(i);
            match y {
                None => self.chi(a),
                Some(y) => {
                    let b = y.symbol(i);
                    if a == b {
                        0.0
                    } else {
                        self.chi(a) - self.chi(b)
                    }
                }
            }
        };
        let back = self.weighted_series(bh, bp, |k| term(j - k));
        let fwd = self.weighted_series(fh, fp, |k| term(j + k + w - 1));
        back + fwd
    }

    /// `Σ amplitude·direction` over the bumps whose word starts at position `j` of `x`.
    fn active_direction(&self, x: &SymbolicPoint, j: i64) -> Option<Matrix> {
        let h = self.hoelder.as_ref()?;
        let mut acc: Option<Matrix> = None;
        for b in &h.bumps {
            if (0..b.word.len()).all(|k| x.symbol(j + k as i64) == b.word[k]) {
                let t = &b.direction * b.amplitude;
                acc = Some(match acc {
                    Some(a) => a + t,
                    None => t,
                });
            }
        }
        acc
    }

    /// `P(σʲx)`, or `None` when no bump is active.
    fn perturbation_at(&self, x: &SymbolicPoint, j: i64) -> Option<Matrix> {
        self.active_direction(x, j).map(|b| b * self.rho(x, j))
    }

    /// `A(σʲx)`.
    pub fn value_at(&self, x: &SymbolicPoint, j: i64) -> Matrix {
        let (g, _) = self.lookup(x, j);
        match self.perturbation_at(x, j) {
            Some(p) => g * (Matrix::identity(self.dim, self.dim) + p),
            None => g.clone(),
        }
    }

    /// `A(σʲx)⁻¹`.
    pub fn inverse_at(&self, x: &SymbolicPoint, j: i64) -> Matrix {
        let (_, gi) = self.lookup(x, j);
        match self.perturbation_at(x, j) {
            Some(p) => {
                let ip = inverse(&(Matrix::identity(self.dim, self.dim) + p)).expect("‖P‖ < 1/2");
                ip * gi
            }
            None => gi.clone(),
        }
    }

    /// `A(σʲx)⁻¹A(σʲy) − I` for points whose windows at `j` agree.
    pub(crate) fn stable_increment(&self, x: &SymbolicPoint, y: &SymbolicPoint, j: i64) -> Option<Matrix> {
        let b = self.active_direction(x, j)?;
        let dr = self.rho_difference(y, Some(x), j);
        if dr == 0.0 {
            return None;
        }
        let ipx = inverse(&(Matrix::identity(self.dim, self.dim) + &b * self.rho(x, j))).expect("‖P‖ < 1/2");
        Some(ipx * b * dr)
    }

    /// `A(σʲx)A(σʲy)⁻¹ − I` for points whose windows at `j` agree.
    pub(crate) fn unstable_increment(&self, x: &SymbolicPoint, y: &SymbolicPoint, j: i64) -> Option<Matrix> {
        let b = self.active_direction(x, j)?;
        let dr = self.rho_difference(x, Some(y), j);
        if dr == 0.0 {
            return None;
        }
        let (g, gi) = self.lookup(x, j);
        let ipy = inverse(&(Matrix::identity(self.dim, self.dim) + &b * self.rho(y, j))).expect("‖P‖ < 1/2");
        Some(g * (b * dr) * ipy * gi)
    }

    /// Table form for fast evaluation along long finite words.
    pub fn compile(&self) -> CompiledCocycle {
        let m = self.base.alphabet_size();
        let size = m.pow(self.window as u32);
        let mut table = vec![None; size];
        for (w, g) in &self.generator {
            table[word_index(w, m)] = Some(g.clone());
        }
        let hoelder = self.hoelder.as_ref().map(|h| {
            let q = self.q();
            let depth = ((1e-17f64).ln() / q.ln()).ceil().max(1.0) as usize;
            CompiledHoelder {
                q,
                depth,
                bumps: h.bumps.iter().map(|b| (b.word.clone(), &b.direction * b.amplitude)).collect(),
            }
        });
        CompiledCocycle { dim: self.dim, window: self.window, alphabet: m, table, hoelder }
    }
}

fn word_index(w: &[u8], m: usize) -> usize {
    w.iter().fold(0, |acc, &a| acc * m + a as usize)
}

#[derive(Debug, Clone)]
struct CompiledHoelder {
    q: f64,
    depth: usize,
    bumps: Vec<(Word, Matrix)>,
}

/// Generator table indexed by window; Hölder tails are truncated once their weight drops
/// below `1e-17`.
#[derive(Debug, Clone)]
pub struct CompiledCocycle {
    dim: usize,
    window: usize,
    alphabet: usize,
    table: Vec<Option<Matrix>>,
    hoelder: Option<CompiledHoelder>,
}

impl CompiledCocycle {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Symbols needed on each side of a position for the value to be exact up to truncation.
    pub fn padding(&self) -> usize {
        self.hoelder.as_ref().map_or(0, |h| h.depth + self.window)
    }

    /// Writes `A` at position `j` of `word` into `out`; needs `j + window ≤ |word|`.
    pub fn write_value(&self, word: &[u8], j: usize, out: &mut Matrix) {
        let w = &word[j..j + self.window];
        let g = self.table[word_index(w, self.alphabet)].as_ref().expect("admissible window");
        match &self.hoelder {
            None => out.copy_from(g),
            Some(h) => {
                let mut dir: Option<Matrix> = None;
                for (bw, d) in &h.bumps {
                    if word.len() >= j + bw.len() && &word[j..j + bw.len()] == bw.as_slice() {
                        dir = Some(match dir {
                            Some(a) => a + d,
                            None => d.clone(),
                        });
                    }
                }
                match dir {
                    None => out.copy_from(g),
                    Some(b) => {
                        let chi = |a: u8| if self.alphabet <= 1 { 0.0 } else { a as f64 / (self.alphabet - 1) as f64 };
                        let c = (1.0 - h.q) / (2.0 * h.q);
                        let mut rho = 0.0;
                        let mut qk = 1.0;
                        for k in 1..=h.depth {
                            qk *= h.q;
                            let back = if j >= k { chi(word[j - k]) } else { 0.0 };
                            let f = j + k + self.window - 1;
                            let fwd = if f < word.len() { chi(word[f]) } else { 0.0 };
                            rho += qk * (back + fwd);
                        }
                        let p = Matrix::identity(self.dim, self.dim) + b * (c * rho);
                        out.copy_from(&(g * p));
                    }
                }
            }
        }
    }
}

/// `A^n_x`: the ordered product `A(σⁿ⁻¹x)···A(x)` for `n > 0`, the identity for `n = 0`
/// and `(A^{−n}_{σⁿx})⁻¹` for `n < 0`.
pub fn evaluate(a: &CocycleSpec, x: &SymbolicPoint, n: i64) -> Matrix {
    let d = a.dim;
    let mut out = Matrix::identity(d, d);
    if n >= 0 {
        for j in 0..n {
            out = a.value_at(x, j) * out;
        }
    } else {
        for j in n..0 {
            out *= a.inverse_at(x, j);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation2;
    use crate::shift::parse_word;
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    fn full2() -> SftSpec {
        SftSpec::full(2, 0.5).unwrap()
    }

    pub(crate) fn sample_hoelder() -> CocycleSpec {
        let a0 = diag(&[2.0, 0.5]);
        let a1 = rotation2(0.7) * diag(&[1.5, 1.0 / 1.5]);
        let e = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        CocycleSpec::from_symbols(SftSpec::full(2, 0.25).unwrap(), &[a0, a1])
            .unwrap()
            .with_hoelder(HoelderPerturbation {
                exponent: 1.0,
                bumps: vec![HoelderBump { word: vec![0], amplitude: 0.05, direction: e }],
            })
            .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let a = CocycleSpec::from_symbols(full2(), &[diag(&[2.0, 0.5]), diag(&[3.0, 1.0 / 3.0])]).unwrap();
        let x = SymbolicPoint::periodic(&parse_word("01").unwrap()).unwrap();
        assert_eq!(evaluate(&a, &x, 0), Matrix::identity(2, 2));
        let two = evaluate(&a, &x, 2);
        assert!((two - diag(&[6.0, 1.0 / 6.0])).amax() < 1e-15);

        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 3.0]);
        let c = CocycleSpec::constant(full2(), &m).unwrap();
        let five = evaluate(&c, &x, 5);
        assert!((five - m.pow(5)).amax() < 1e-9);
        let back = evaluate(&c, &x, -2);
        assert!((back * m.pow(2) - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        let mut gen = BTreeMap::new();
        gen.insert(vec![0u8], Matrix::identity(2, 2));
        assert!(CocycleSpec::new(full2(), 1, gen.clone()).is_err());
        gen.insert(vec![1u8], Matrix::zeros(2, 2));
        assert_eq!(CocycleSpec::new(full2(), 1, gen), Err(Error::NonInvertible));
        let a = CocycleSpec::constant(full2(), &Matrix::identity(2, 2)).unwrap();
        let big = HoelderPerturbation {
            exponent: 1.0,
            bumps: vec![HoelderBump { word: vec![0], amplitude: 0.6, direction: Matrix::identity(2, 2) }],
        };
        assert!(a.clone().with_hoelder(big).is_err());
        let bad_nu = HoelderPerturbation { exponent: 1.5, bumps: vec![] };
        assert!(a.with_hoelder(bad_nu).is_err());
    }

    #[test]
    fn rho_matches_truncated_sum() {
        let a = sample_hoelder();
        let x = SymbolicPoint::new(vec![1, 0, 0], vec![0, 1, 1, 0], vec![0, 1], -3).unwrap();
        let q = a.q();
        let c = (1.0 - q) / (2.0 * q);
        for j in -6..6 {
            let direct: f64 = (1..200)
                .map(|k| c * q.powi(k as i32) * (x.symbol(j - k) as f64 + x.symbol(j + k) as f64))
                .sum();
            assert!((a.rho(&x, j) - direct).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&a.rho(&x, j)));
        }
    }

    #[test]
    fn compiled_matches_pointwise() {
        let a = sample_hoelder();
        let c = a.compile();
        let x = SymbolicPoint::new(vec![1, 0], vec![0, 1, 1, 0, 0, 1], vec![1], 0).unwrap();
        let pad = c.padding() as i64;
        let word = x.window(-pad, (2 * pad + 10) as usize);
        let mut out = Matrix::zeros(2, 2);
        for j in 0..10 {
            c.write_value(&word, (pad + j) as usize, &mut out);
            assert!((&out - a.value_at(&x, j)).amax() < 1e-14);
        }
    }

    fn arb_point() -> impl Strategy<Value = SymbolicPoint> {
        (
            proptest::collection::vec(0u8..2, 1..3),
            proptest::collection::vec(0u8..2, 0..6),
            proptest::collection::vec(0u8..2, 1..3),
            -4i64..4,
        )
            .prop_map(|(l, c, r, s)| SymbolicPoint::new(l, c, r, s).unwrap())
    }

    proptest! {
        #[test]
        fn cocycle_identity(x in arb_point(), m in -50i64..50, n in -50i64..50) {
            let a = CocycleSpec::from_symbols(
                full2(),
                &[Matrix::from_row_slice(2, 2, &[1.1, 0.2, 0.1, 0.9]), rotation2(0.4) * 1.05],
            ).unwrap();
            for spec in [a, sample_hoelder()] {
                let lhs = evaluate(&spec, &x, m + n);
                let rhs = evaluate(&spec, &x.shift(n), m) * evaluate(&spec, &x, n);
                let scale = op_norm(&evaluate(&spec, &x.shift(n), m)) * op_norm(&evaluate(&spec, &x, n));
                prop_assert!((lhs - rhs).amax() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
