//! Rotation numbers of projectivized two-dimensional blocks.
//!
//! Circle coordinates are doubled line angles. Rotation numbers are reported in
//! line-angle units, so that over a periodic orbit `period · ρ ≡ eigen-argument (mod 2π)`.

use crate::cocycle::{evaluate, CocycleSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    check_invertible, complex_null_space, eigenvalues, null_space, real_block_decomposition, BlockKind, Complex, Matrix,
    RealBlockDecomposition,
};
use crate::shift::{cylinder_measure, sample_orbit, MarkovMeasureRecord, SymbolicPoint, Word};
use crate::suspension::{period, SuspensionSystem};
use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

/// Projective action of an orientation-preserving `2×2` matrix `M = R_β·P` (polar form),
/// lifted along the path `s ↦ R_{sβ}·P^s` from the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMap {
    matrix: Matrix2<f64>,
    beta: f64,
    stretch: Matrix2<f64>,
    inverse: Matrix2<f64>,
}

fn rot(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn sym_power(p: &Matrix2<f64>, s: f64) -> Matrix2<f64> {
    let e = SymmetricEigen::new(*p);
    let d = Matrix2::from_diagonal(&e.eigenvalues.map(|l| l.powf(s)));
    e.eigenvectors * d * e.eigenvectors.transpose()
}

impl CircleMap {
    pub fn new(m: &Matrix) -> Result<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::DimensionMismatch("circle maps come from 2×2 matrices".into()));
        }
        let mm = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        Self::from_matrix2(mm)
    }

    fn from_matrix2(mm: Matrix2<f64>) -> Result<Self> {
        let det = mm.determinant();
        if !(det > 0.0) {
            return Err(Error::OrientationReversing(det));
        }
        let beta = (mm[(1, 0)] - mm[(0, 1)]).atan2(mm[(0, 0)] + mm[(1, 1)]);
        let p = rot(-beta) * mm;
        let stretch = (p + p.transpose()) * 0.5;
        let inverse = mm.try_inverse().ok_or(Error::NonInvertible)?;
        Ok(CircleMap { matrix: mm, beta, stretch, inverse })
    }

    pub fn identity() -> Self {
        CircleMap { matrix: Matrix2::identity(), beta: 0.0, stretch: Matrix2::identity(), inverse: Matrix2::identity() }
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_row_slice(2, 2, &[self.matrix[(0, 0)], self.matrix[(0, 1)], self.matrix[(1, 0)], self.matrix[(1, 1)]])
    }

    /// Rotation angle of the polar factor, in `(−π, π]`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `F̃(φ) − φ` for the lift `F̃`.
    pub fn displacement(&self, phi: f64) -> f64 {
        let v = Vector2::new((0.5 * phi).cos(), (0.5 * phi).sin());
        let w = self.stretch * v;
        let a = (v.x * w.y - v.y * w.x).atan2(v.dot(&w));
        2.0 * (self.beta + a)
    }

    pub fn lift(&self, phi: f64) -> f64 {
        phi + self.displacement(phi)
    }

    /// `R_{sβ}·P^s`, the conformal interpolation at fraction `s`.
    pub fn power(&self, s: f64) -> Self {
        let stretch = sym_power(&self.stretch, s);
        let matrix = rot(s * self.beta) * stretch;
        let inverse = sym_power(&self.stretch, -s) * rot(-s * self.beta);
        CircleMap { matrix, beta: s * self.beta, stretch, inverse }
    }

    /// Doubled angle in `[0, 2π)` of `M⁻¹` applied to the line at `φ`.
    fn preimage(&self, phi: f64) -> f64 {
        let v = self.inverse * Vector2::new((0.5 * phi).cos(), (0.5 * phi).sin());
        (2.0 * v.y.atan2(v.x)).rem_euclid(TAU)
    }
}

pub fn projectivize_block(m: &Matrix) -> Result<CircleMap> {
    CircleMap::new(m)
}

/// One piece of a lift: `to ∘ from⁻¹` (a full return when `from` is absent).
#[derive(Debug, Clone)]
struct Segment {
    from: Option<CircleMap>,
    to: CircleMap,
}

impl Segment {
    fn displacement(&self, phi: f64) -> f64 {
        match &self.from {
            None => self.to.displacement(phi),
            Some(f) => {
                let psi = f.preimage(phi);
                self.to.displacement(psi) - f.displacement(psi)
            }
        }
    }
}

fn chain_displacement(chain: &[Segment], theta: f64) -> f64 {
    let mut phi = theta;
    for seg in chain {
        phi += seg.displacement(phi);
    }
    phi - theta
}

/// Circle maps over a suspension: on the fiber over `x` the return map is the map of the
/// window `x₀…x_{w−1}`, interpolated conformally at intermediate heights.
#[derive(Debug, Clone)]
pub struct CircleCocycle {
    sys: SuspensionSystem,
    window: usize,
    maps: BTreeMap<Word, CircleMap>,
}

impl CircleCocycle {
    pub fn new(sys: SuspensionSystem, window: usize, maps: BTreeMap<Word, CircleMap>) -> Result<Self> {
        let w = window.max(sys.roof.window());
        let mut full = BTreeMap::new();
        for word in sys.base.admissible_words(w) {
            let m = maps
                .get(&word[..window])
                .ok_or_else(|| Error::InvalidArgument(format!("no circle map for {}", crate::shift::format_word(&word))))?;
            full.insert(word, m.clone());
        }
        Ok(CircleCocycle { sys, window: w, maps: full })
    }

    /// Circle cocycle of a locally constant `2×2` cocycle.
    pub fn from_cocycle(sys: SuspensionSystem, a: &CocycleSpec) -> Result<Self> {
        if a.dim() != 2 {
            return Err(Error::DimensionMismatch("circle cocycles need a 2×2 cocycle".into()));
        }
        if !a.is_locally_constant() || a.base() != &sys.base {
            return Err(Error::InvalidArgument("a locally constant cocycle over the same subshift is required".into()));
        }
        let maps = a.generators().iter().map(|(w, m)| Ok((w.clone(), CircleMap::new(m)?))).collect::<Result<_>>()?;
        Self::new(sys, a.window(), maps)
    }

    pub fn system(&self) -> &SuspensionSystem {
        &self.sys
    }

    fn map_at(&self, x: &SymbolicPoint, j: i64) -> &CircleMap {
        &self.maps[&x.window(j, self.window)]
    }

    fn chain(&self, x: &SymbolicPoint, h: f64, t: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut pos = h;
        let mut left = t;
        let mut j = 0i64;
        loop {
            let r = self.sys.roof.at(x, j);
            let m = self.map_at(x, j);
            let from = (pos > 0.0).then(|| m.power(pos / r));
            if pos + left < r {
                if left > 0.0 {
                    out.push(Segment { from, to: m.power((pos + left) / r) });
                }
                break;
            }
            out.push(Segment { from, to: m.clone() });
            left -= r - pos;
            pos = 0.0;
            j += 1;
            if left <= 0.0 {
                break;
            }
        }
        out
    }

    /// `w̃_{(x,h),θ}(t)`: lift displacement after flowing for time `t ≥ 0`.
    pub fn lift_displacement(&self, x: &SymbolicPoint, h: f64, theta: f64, t: f64) -> f64 {
        chain_displacement(&self.chain(x, h, t), theta)
    }
}

const GRID: usize = 512;

fn golden_extremum(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (sign * f(c), sign * f(d));
    while b - a > 1e-8 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sign * f(d);
        }
    }
    sign * fc.max(fd)
}

fn envelope(chain: &[Segment]) -> (f64, f64) {
    let h = TAU / GRID as f64;
    let vals: Vec<f64> = (0..GRID).map(|i| chain_displacement(chain, i as f64 * h)).collect();
    let imax = (0..GRID).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let imin = (0..GRID).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let f = |th: f64| chain_displacement(chain, th);
    let hi = golden_extremum(&f, (imax as f64 - 1.0) * h, (imax as f64 + 1.0) * h, true).max(vals[imax]);
    let lo = golden_extremum(&f, (imin as f64 - 1.0) * h, (imin as f64 + 1.0) * h, false).min(vals[imin]);
    (hi, lo)
}

/// `(σᵗ, τᵗ)` at the flow point `(x, h)`: sup and inf over the circle of the lift displacement.
pub fn sigma_tau(c: &CircleCocycle, x: &SymbolicPoint, h: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("flow time {t} must be non-negative")));
    }
    let (hi, lo) = envelope(&c.chain(x, h, t));
    debug_assert!(hi - lo < TAU + 1e-9);
    Ok((hi, lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    /// Per unit flow time, in line-angle units.
    pub rho: f64,
    /// Return-map rotation number in line-angle units (`period · rho`).
    pub per_return: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITER: usize = 16384;

fn bump_weight(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

/// Weighted Birkhoff average of per-return displacements, doubling the horizon until two
/// successive averages agree to `1e-10`.
fn return_rotation(chain: &[Segment]) -> (f64, usize, bool) {
    let mut disp = Vec::with_capacity(MAX_ITER);
    let mut phi = 0.0f64;
    for _ in 0..MAX_ITER {
        let d = chain_displacement(chain, phi.rem_euclid(TAU));
        disp.push(d);
        phi += d;
    }
    let avg = |n: usize| {
        let (mut num, mut den) = (0.0, 0.0);
        for (k, d) in disp[..n].iter().enumerate() {
            let w = bump_weight((k as f64 + 0.5) / n as f64);
            num += w * d;
            den += w;
        }
        num / den
    };
    let mut prev = avg(32);
    let mut n = 64;
    while n <= MAX_ITER {
        let cur = avg(n);
        if (cur - prev).abs() < 1e-10 {
            return (cur, n, true);
        }
        prev = cur;
        n *= 2;
    }
    (prev, MAX_ITER, false)
}

/// Rotation number over the periodic orbit of `word`.
pub fn rho_periodic(c: &CircleCocycle, word: &[u8]) -> Result<RotationEstimate> {
    c.sys.base.check_cyclic(word)?;
    let p = SymbolicPoint::periodic(word)?;
    let ell = period(&c.sys, word)?;
    let chain: Vec<Segment> = (0..word.len() as i64).map(|j| Segment { from: None, to: c.map_at(&p, j).clone() }).collect();
    let (d, iterations, converged) = return_rotation(&chain);
    let per_return = 0.5 * d;
    Ok(RotationEstimate { rho: per_return / ell, per_return, iterations, converged })
}

/// Rotation number of a single return map, in line-angle units.
pub fn map_rotation(m: &CircleMap) -> (f64, bool) {
    let (d, _, ok) = return_rotation(&[Segment { from: None, to: m.clone() }]);
    (0.5 * d, ok)
}

/// `|arg λ|` for a `2×2` matrix with a complex eigenvalue pair.
pub fn eigen_argument(m: &Matrix) -> Result<f64> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(Error::DimensionMismatch("eigen_argument takes a 2×2 matrix".into()));
    }
    let tr = m.trace();
    let disc = 4.0 * m.determinant() - tr * tr;
    if !(disc > 0.0) {
        return Err(Error::RealSpectrum);
    }
    Ok(disc.sqrt().atan2(tr))
}

/// Distance on `R/2πZ`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRhoCheck {
    pub eigen_argument: Option<f64>,
    pub period: f64,
    pub rho: Option<f64>,
    /// `min_± dist(θ, ±period·ρ)` on the circle.
    pub residual: Option<f64>,
    /// Set when the tracked return block has real spectrum.
    pub skipped: bool,
}

/// The first conformal block of `m` as a `2×2` matrix in its own eigenbasis.
fn first_conformal_block(dec: &RealBlockDecomposition, m: &Matrix) -> Option<Matrix> {
    let b = dec.blocks.iter().find(|b| matches!(b.kind, BlockKind::Conformal { .. }))?;
    let e = dec.basis.columns(b.start, 2).into_owned();
    let ei = dec.inverse.rows(b.start, 2).into_owned();
    Some(ei * m * e)
}

/// Compares the eigen-argument of the return block with `period · ρ`. For `2×2` cocycles
/// ρ comes from iterating the composed circle maps along the orbit; in higher dimension it
/// is the rotation number of the first conformal block restricted to its plane.
pub fn theta_ell_rho_check(a: &CocycleSpec, sys: &SuspensionSystem, word: &[u8]) -> Result<ThetaRhoCheck> {
    let p = SymbolicPoint::periodic(word)?;
    a.base().check_cyclic(word)?;
    // the full word, not its primitive root: `ℓ` below is the period of the word as given
    let ret = evaluate(a, &p, word.len() as i64);
    let ell = period(sys, word)?;
    let skipped = ThetaRhoCheck { eigen_argument: None, period: ell, rho: None, residual: None, skipped: true };
    let (theta, rho) = if a.dim() == 2 {
        let theta = match eigen_argument(&ret) {
            Ok(t) => t,
            Err(Error::RealSpectrum) => return Ok(skipped),
            Err(e) => return Err(e),
        };
        let c = CircleCocycle::from_cocycle(sys.clone(), a)?;
        (theta, rho_periodic(&c, word)?.rho)
    } else {
        let dec = real_block_decomposition(&ret)?;
        let Some(block) = first_conformal_block(&dec, &ret) else { return Ok(skipped) };
        let theta = eigen_argument(&block)?;
        let (r, _) = map_rotation(&CircleMap::new(&block)?);
        (theta, r / ell)
    };
    let lr = ell * rho;
    let residual = circle_distance(theta, lr).min(circle_distance(theta, -lr));
    Ok(ThetaRhoCheck { eigen_argument: Some(theta), period: ell, rho: Some(rho), residual: Some(residual), skipped: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSample {
    pub s: f64,
    /// Continuous lift of the tracked block's rotation angle.
    pub theta: f64,
    /// Whether the tracked block has a complex eigenvalue pair at `s`.
    pub complex: bool,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaLift {
    pub samples: Vec<ThetaSample>,
    /// Anchor `period · ρ` at the first grid point.
    pub anchor: f64,
    pub period: f64,
    /// Parameter intervals where the tracked block has or acquires real spectrum.
    pub crossings: Vec<Crossing>,
}

/// `θ̃` meets `multiple·π` (real eigenvalues) somewhere in `[lo, hi]`, `hi − lo ≤ 1e-9`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub lo: f64,
    pub hi: f64,
    pub multiple: i64,
}

impl ThetaLift {
    pub fn increment(&self) -> f64 {
        self.samples.last().unwrap().theta - self.samples[0].theta
    }

    /// `θ̃` at a sampled parameter.
    pub fn at(&self, s: f64) -> Option<f64> {
        self.samples.iter().find(|x| x.s == s).map(|x| x.theta)
    }
}

/// The tracked plane at one parameter: an orthonormal basis and the restricted block.
#[derive(Debug, Clone)]
struct TrackedPlane {
    basis: Matrix,
    block: Matrix,
    modulus: f64,
    complex: bool,
    gap: f64,
}

impl TrackedPlane {
    /// Rotation angle of the restricted block, signed by the sense of rotation in the
    /// oriented basis; `0` or `π` for a real pair.
    fn angle(&self) -> Result<f64> {
        let b = &self.block;
        let (tr, det) = (b.trace(), b.determinant());
        if !(det > 0.0) {
            return Err(Error::OrientationReversing(det));
        }
        let disc = 4.0 * det - tr * tr;
        Ok(if self.complex && disc > 0.0 {
            b[(1, 0)].signum() * disc.sqrt().atan2(tr)
        } else if tr > 0.0 {
            0.0
        } else {
            PI
        })
    }
}

/// Span of the left eigenvectors of the eigenvalues in `values` (conjugates implied).
fn left_rows(m: &Matrix, values: &[Complex]) -> Matrix {
    let d = m.nrows();
    let mt = m.transpose();
    let mut clusters: Vec<(Complex, usize)> = Vec::new();
    for z in values.iter().filter(|z| z.im >= 0.0) {
        match clusters.iter_mut().find(|(v, _)| (*v - z).norm() <= 1e-7 * z.norm().max(1.0)) {
            Some(c) => c.1 += 1,
            None => clusters.push((*z, 1)),
        }
    }
    let mut rows: Vec<nalgebra::DVector<f64>> = Vec::new();
    for (z, k) in clusters {
        if z.im == 0.0 {
            let (ns, _) = null_space(&(&mt - Matrix::identity(d, d) * z.re), k);
            rows.extend(ns.column_iter().map(|c| c.into_owned()));
        } else {
            let shifted = nalgebra::DMatrix::<Complex>::from_fn(d, d, |i, j| {
                Complex::new(mt[(i, j)], 0.0) - if i == j { z } else { Complex::new(0.0, 0.0) }
            });
            let (ns, _) = complex_null_space(&shifted, k);
            for c in ns.column_iter() {
                rows.push(c.map(|x| x.re));
                rows.push(c.map(|x| x.im));
            }
        }
    }
    Matrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// Selects the complex pair, or adjacent pair of real eigenvalues, whose log-modulus is
/// nearest `target`, and returns its invariant plane. The plane is cut out by the left
/// eigenvectors of the remaining eigenvalues, which stays well conditioned when the pair
/// itself collides.
fn select_plane(m: &Matrix, target: f64, prev: Option<&Matrix>) -> Result<TrackedPlane> {
    check_invertible(m)?;
    let d = m.nrows();
    let mut ev: Vec<Complex> = eigenvalues(m)
        .into_iter()
        .map(|z| if z.im.abs() <= 1e-9 * z.norm() { Complex::new(z.re, 0.0) } else { z })
        .collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.im.total_cmp(&a.im)));
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for i in (0..d).filter(|&i| ev[i].im > 0.0) {
        let j = (0..d)
            .filter(|&j| ev[j].im < 0.0)
            .min_by(|&a, &b| (ev[a] - ev[i].conj()).norm().total_cmp(&(ev[b] - ev[i].conj()).norm()))
            .ok_or_else(|| Error::NoRotationBlock("unpaired complex eigenvalue".into()))?;
        candidates.push(vec![i, j]);
    }
    // real pairs must be adjacent in the full modulus order
    candidates.extend((1..d).filter(|&i| ev[i - 1].im == 0.0 && ev[i].im == 0.0).map(|i| vec![i - 1, i]));
    let log_mod = |c: &[usize]| c.iter().map(|&i| ev[i].norm().ln()).sum::<f64>() / c.len() as f64;
    let best = candidates
        .into_iter()
        .min_by(|a, b| (log_mod(a) - target.ln()).abs().total_cmp(&(log_mod(b) - target.ln()).abs()))
        .ok_or_else(|| Error::NoRotationBlock("no two-dimensional block".into()))?;
    let lm = log_mod(&best);
    let others: Vec<Complex> = (0..d).filter(|i| !best.contains(i)).map(|i| ev[i]).collect();
    let gap = others.iter().map(|z| (z.norm().ln() - lm).abs()).fold(f64::INFINITY, f64::min);
    let mut basis = if others.is_empty() {
        Matrix::identity(d, d)
    } else {
        null_space(&left_rows(m, &others), 2).0
    };
    let orient = match prev {
        Some(p) => (p.transpose() * &basis).determinant(),
        None => 1.0,
    };
    if orient < 0.0 {
        basis.column_mut(1).neg_mut();
    }
    let block = basis.transpose() * m * &basis;
    Ok(TrackedPlane { basis, block, modulus: lm.exp(), complex: ev[best[0]].im != 0.0, gap })
}

const MIN_GAP: f64 = 1e-6;
const MAX_STEP: f64 = PI / 4.0;
const MIN_DS: f64 = 1e-9;

/// Continuous lift over `s` of the rotation angle of a tracked two-dimensional block of the
/// return matrix over `word`. Grid steps are subdivided until consecutive angles differ by
/// less than `π/4`; the lift is anchored at `period · ρ` for the first grid point.
pub fn lift_theta_family(
    family: &dyn Fn(f64) -> Result<CocycleSpec>,
    sys: &SuspensionSystem,
    word: &[u8],
    grid: &[f64],
) -> Result<ThetaLift> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be increasing with at least two points".into()));
    }
    let p = SymbolicPoint::periodic(word)?;
    let ell = period(sys, word)?;
    let n = word.len() as i64;
    let ret = |s: f64| -> Result<Matrix> { Ok(evaluate(&family(s)?, &p, n)) };

    let m0 = ret(grid[0])?;
    let dec0 = real_block_decomposition(&m0)?;
    let first = dec0
        .blocks
        .iter()
        .find(|b| matches!(b.kind, BlockKind::Conformal { .. }))
        .ok_or(Error::RealSpectrum)?;
    let plane0 = select_plane(&m0, first.modulus(), None)?;
    let a0 = family(grid[0])?;
    let anchor = if a0.dim() == 2 && a0.is_locally_constant() {
        ell * rho_periodic(&CircleCocycle::from_cocycle(sys.clone(), &a0)?, word)?.rho
    } else {
        map_rotation(&CircleMap::new(&plane0.block)?).0
    };
    let raw0 = plane0.angle()?;
    let theta0 = raw0 + TAU * ((anchor - raw0) / TAU).round();

    let mut samples = vec![ThetaSample { s: grid[0], theta: theta0, complex: plane0.complex, modulus: plane0.modulus }];
    let mut crossings = Vec::new();
    let mut prev = plane0;
    let mut prev_theta = theta0;
    let mut prev_s = grid[0];
    for &target in &grid[1..] {
        let mut s_lo = prev_s;
        while s_lo < target {
            let mut s_hi = target;
            let (plane, theta) = loop {
                let (cand, theta) = lifted_angle(&ret, s_hi, &prev, prev_theta)?;
                let ok = (theta - prev_theta).abs() < MAX_STEP && cand.gap > MIN_GAP
                    && (prev.basis.transpose() * &cand.basis).determinant().abs() > 1e-3;
                if ok {
                    break (cand, theta);
                }
                if s_hi - s_lo < MIN_DS {
                    return Err(Error::DegenerateSpectrum(format!("tracked block degenerates near s = {s_hi}")));
                }
                s_hi = 0.5 * (s_lo + s_hi);
            };
            if let Some(x) = crossing_in(&ret, (s_lo, &prev, prev_theta), (s_hi, &plane, theta))? {
                crossings.push(x);
            }
            s_lo = s_hi;
            prev = plane;
            prev_theta = theta;
        }
        prev_s = target;
        samples.push(ThetaSample { s: target, theta: prev_theta, complex: prev.complex, modulus: prev.modulus });
    }
    Ok(ThetaLift { samples, anchor, period: ell, crossings })
}

fn lifted_angle(
    ret: &dyn Fn(f64) -> Result<Matrix>,
    s: f64,
    prev: &TrackedPlane,
    prev_theta: f64,
) -> Result<(TrackedPlane, f64)> {
    let plane = select_plane(&ret(s)?, prev.modulus, Some(&prev.basis))?;
    let raw = plane.angle()?;
    let theta = raw + TAU * ((prev_theta - raw) / TAU).round();
    Ok((plane, theta))
}

/// Bisects a grid step on which the tracked block changes between complex and real
/// spectrum, or on which a complex pair passes through a real eigenvalue.
fn crossing_in(
    ret: &dyn Fn(f64) -> Result<Matrix>,
    lo: (f64, &TrackedPlane, f64),
    hi: (f64, &TrackedPlane, f64),
) -> Result<Option<Crossing>> {
    let level = |complex: bool, theta: f64| -> f64 {
        if complex {
            (theta / PI).floor() + 0.5
        } else {
            (theta / PI).round()
        }
    };
    let (l0, l1) = (level(lo.1.complex, lo.2), level(hi.1.complex, hi.2));
    if l0 == l1 {
        return Ok(None);
    }
    let multiple = if l0 < l1 { l0.ceil() } else { l0.floor() } as i64;
    let (mut a, mut b) = (lo.0, hi.0);
    let mut anchor = (lo.1.clone(), lo.2);
    while b - a > MIN_DS {
        let mid = 0.5 * (a + b);
        let (plane, theta) = lifted_angle(ret, mid, &anchor.0, anchor.1)?;
        if level(plane.complex, theta) == l0 {
            a = mid;
            anchor = (plane, theta);
        } else {
            b = mid;
        }
    }
    Ok(Some(Crossing { lo: a, hi: b, multiple }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoMeasureEstimate {
    /// Midpoint of the bracket, per unit time in line-angle units.
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub t: f64,
    /// Whether the base integral was an exact cylinder sum (otherwise an orbit average).
    pub exact: bool,
}

const MAX_LEAVES: usize = 4096;

/// Cylinders fine enough that the lift over `[0, t]` is determined, with their measures.
fn flow_cylinders(c: &CircleCocycle, mu: &MarkovMeasureRecord, t: f64) -> Option<Vec<(Word, f64)>> {
    let w = c.window;
    let mut out = Vec::new();
    let mut stack: Vec<(Word, f64)> = c.sys.base.admissible_words(w).into_iter().map(|x| (x, 0.0)).collect();
    while let Some((word, elapsed)) = stack.pop() {
        let k = word.len() - w;
        let total = elapsed + c.sys.roof.value(&word[k..]);
        if total >= t {
            let m = cylinder_measure(mu, &word);
            if m > 0.0 {
                out.push((word, m));
            }
            if out.len() > MAX_LEAVES {
                return None;
            }
            continue;
        }
        let last = *word.last().unwrap();
        for a in 0..c.sys.base.alphabet_size() as u8 {
            if c.sys.base.allowed(last, a) {
                let mut next = word.clone();
                next.push(a);
                stack.push((next, total));
            }
        }
        if stack.len() > 16 * MAX_LEAVES {
            return None;
        }
    }
    Some(out)
}

/// `ρ_μ` bracketed between `(1/t)∫τᵗ dμ` and `(1/t)∫σᵗ dμ` over base points at height 0.
/// Uses exact cylinder sums when at most 4096 cylinders are needed, otherwise the average
/// over 4096 consecutive points of a μ-typical orbit drawn with `seed`.
pub fn rho_measure(c: &CircleCocycle, mu: &MarkovMeasureRecord, t_max: f64, seed: u64) -> Result<RhoMeasureEstimate> {
    if !mu.compatible_with(&c.sys.base) {
        return Err(Error::InvalidArgument("measure is not supported on the subshift".into()));
    }
    let mean_roof = c.sys.roof.mean(mu);
    if !(t_max >= 10.0 * mean_roof * (1.0 - 1e-12)) {
        return Err(Error::InvalidArgument(format!("t_max {t_max} is below ten mean roofs ({mean_roof})")));
    }
    let (upper, lower, exact) = match flow_cylinders(c, mu, t_max) {
        Some(cyl) => {
            let (mut hi, mut lo) = (0.0, 0.0);
            for (word, m) in &cyl {
                let x = SymbolicPoint::new(vec![word[0]], word.clone(), vec![word[word.len() - 1]], 0)?;
                let (s, t) = envelope(&c.chain(&x, 0.0, t_max));
                hi += m * s;
                lo += m * t;
            }
            (hi, lo, true)
        }
        None => {
            let min_roof = c.sys.roof.function().values().values().cloned().fold(f64::INFINITY, f64::min);
            let len = MAX_LEAVES + (t_max / min_roof).ceil() as usize + c.window + 1;
            let orbit = sample_orbit(mu, len, seed);
            let (mut hi, mut lo) = (0.0, 0.0);
            for j in 0..MAX_LEAVES {
                let x = SymbolicPoint::new(vec![orbit[j]], orbit[j..].to_vec(), vec![orbit[len - 1]], 0)?;
                let (s, t) = envelope(&c.chain(&x, 0.0, t_max));
                hi += s;
                lo += t;
            }
            (hi / MAX_LEAVES as f64, lo / MAX_LEAVES as f64, false)
        }
    };
    let upper = 0.5 * upper / t_max;
    let lower = 0.5 * lower / t_max;
    Ok(RhoMeasureEstimate { rho: 0.5 * (upper + lower), lower, upper, width: upper - lower, t: t_max, exact })
}
