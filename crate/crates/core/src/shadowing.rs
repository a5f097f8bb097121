//! Closing and shadowing: the homoclinic family of closed words, Anosov closing on hyperbolic
//! toral automorphisms, and period differences under roof changes.

use crate::error::{Error, Result};
use crate::linalg::{op_norm, real_block_decomposition, Matrix};
use crate::shift::{agreement_radius, format_word, homoclinic_point, HomoclinicPoint, SftSpec, SymbolicPoint, Word};
use crate::suspension::RoofFunction;
use nalgebra::DVector;
use num_rational::Ratio;
use serde::Serialize;

/// `pⁿ · bridge · pⁿ`, to be read cyclically.
pub fn homoclinic_family(p_word: &[u8], bridge: &[u8], n: usize, spec: &SftSpec) -> Result<Word> {
    homoclinic_point(p_word, bridge, spec)?;
    let mut w = Vec::with_capacity(2 * n * p_word.len() + bridge.len());
    for _ in 0..n {
        w.extend_from_slice(p_word);
    }
    w.extend_from_slice(bridge);
    for _ in 0..n {
        w.extend_from_slice(p_word);
    }
    spec.check_cyclic(&w)?;
    Ok(w)
}

/// The periodic point of `w_n` with the bridge starting at index 0, matching the homoclinic point.
pub fn aligned_shadow(p_word: &[u8], bridge: &[u8], n: usize, spec: &SftSpec) -> Result<SymbolicPoint> {
    let w = homoclinic_family(p_word, bridge, n, spec)?;
    Ok(SymbolicPoint::periodic(&w)?.shift((n * p_word.len()) as i64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowFit {
    pub n: usize,
    pub word: String,
    /// `(t, d(σᵗ shadow, σᵗ z))` over the matched segment, `t` measured from the bridge start.
    pub profile: Vec<(i64, f64)>,
    /// Centre of the matched segment and its half-length.
    pub centre: f64,
    pub half_length: f64,
    /// `d ≈ c·exp(−η_step·(half_length − |t − centre|))`.
    pub c: f64,
    /// Decay rate per period of `p`.
    pub eta: f64,
    /// Expected rate `|p|·log(1/θ)`.
    pub eta_expected: f64,
    /// Largest absolute residual of the fit in log scale.
    pub residual: f64,
    /// Distance at the bridge-aligned time.
    pub aligned_distance: f64,
}

impl ShadowFit {
    pub fn eta_relative_error(&self) -> f64 {
        (self.eta - self.eta_expected).abs() / self.eta_expected
    }
}

/// Distance profile between the closed orbit of `w_n` and the homoclinic orbit, with a
/// least-squares fit of the log distance against the distance to the segment ends.
pub fn exponential_shadowing_check(h: &HomoclinicPoint, n: usize, spec: &SftSpec) -> Result<ShadowFit> {
    let p = h.period_word.len();
    let w = aligned_shadow(&h.period_word, &h.bridge, n, spec)?;
    let z = &h.point;
    let len = (2 * n * p + h.bridge.len()) as i64;
    // disagreements closest to the bridge on either side
    let right = (0..=2 * len).find(|&i| w.symbol(i) != z.symbol(i)).ok_or(Error::NotPeriodic)?;
    let left = (1..=2 * len).map(|i| -i).find(|&i| w.symbol(i) != z.symbol(i)).ok_or(Error::NotPeriodic)?;
    let centre = 0.5 * (left + right) as f64;
    let half = 0.5 * (right - left) as f64;
    let theta = spec.theta();
    let mut profile = Vec::new();
    for t in left + 1..right {
        let k = agreement_radius(&w.shift(t), &z.shift(t)).ok_or(Error::NotPeriodic)?;
        profile.push((t, theta.powi(k as i32)));
    }
    let xs: Vec<f64> = profile.iter().map(|&(t, _)| half - (t as f64 - centre).abs()).collect();
    let ys: Vec<f64> = profile.iter().map(|&(_, d)| d.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - (intercept + slope * x)).abs()).fold(0.0, f64::max);
    let aligned_distance = profile.iter().find(|&&(t, _)| t == 0).map(|&(_, d)| d).unwrap_or(1.0);
    Ok(ShadowFit {
        n,
        word: format_word(&homoclinic_family(&h.period_word, &h.bridge, n, spec)?),
        profile,
        centre,
        half_length: half,
        c: intercept.exp(),
        eta: -slope * p as f64,
        eta_expected: p as f64 * (1.0 / theta).ln(),
        residual,
        aligned_distance,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// A hyperbolic automorphism of `Rᵈ/Zᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralAutomorphism {
    matrix: Vec<Vec<i64>>,
    real: Matrix,
    /// `max(|λ_s|, 1/|λ_u|)` over stable and unstable eigenvalues.
    contraction: f64,
    /// Smallest expanding modulus.
    min_expansion: f64,
    /// Condition number of the eigenbasis (1 for symmetric matrices).
    basis_condition: f64,
}

impl ToralAutomorphism {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidAutomorphism("matrix must be square".into()));
        }
        let real = Matrix::from_fn(d, d, |i, j| rows[i][j] as f64);
        let det = real.determinant().round();
        if det.abs() != 1.0 {
            return Err(Error::InvalidAutomorphism(format!("determinant {det} is not ±1")));
        }
        if crate::linalg::eigenvalues(&real).iter().any(|z| (z.norm() - 1.0).abs() < 1e-9) {
            return Err(Error::NotHyperbolic);
        }
        let dec = real_block_decomposition(&real).map_err(|e| Error::InvalidAutomorphism(e.to_string()))?;
        let mut contraction: f64 = 0.0;
        let mut min_expansion = f64::INFINITY;
        for b in &dec.blocks {
            let m = b.modulus();
            if (m - 1.0).abs() < 1e-9 {
                return Err(Error::NotHyperbolic);
            }
            if m < 1.0 {
                contraction = contraction.max(m);
            } else {
                contraction = contraction.max(1.0 / m);
                min_expansion = min_expansion.min(m);
            }
        }
        let basis_condition = op_norm(&dec.basis) * op_norm(&dec.inverse);
        Ok(ToralAutomorphism { matrix: rows, real, contraction, min_expansion, basis_condition })
    }

    /// `[[2,1],[1,1]]`.
    pub fn cat_map() -> Self {
        Self::new(vec![vec![2, 1], vec![1, 1]]).expect("cat map is hyperbolic")
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    /// Closing threshold `(1 − 1/|λ_min|) · (1/2) / 4` with `1/2` the injectivity radius of
    /// the torus and `λ_min` the weakest expansion.
    pub fn epsilon0(&self) -> f64 {
        (1.0 - 1.0 / self.min_expansion) * 0.5 / 4.0
    }

    /// Shadowing constant `κ · 2/(1 − rate)`, `κ` the eigenbasis condition number.
    pub fn shadow_constant(&self) -> f64 {
        self.basis_condition * 2.0 / (1.0 - self.contraction)
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.real * x).map(|v| v.rem_euclid(1.0))
    }
}

/// Sup-norm distance on the torus.
pub fn torus_distance(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        })
        .fold(0.0, f64::max)
}

/// Torus points `x_0 … x_{N−1}` with `d(x_{k+1}, A x_k) ≤ ε`, indices read mod `N` when periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOrbit {
    pub points: Vec<DVector<f64>>,
    pub epsilon: f64,
    pub periodic: bool,
}

impl PseudoOrbit {
    /// Measures ε on the sampling grid.
    pub fn new(a: &ToralAutomorphism, points: Vec<DVector<f64>>, periodic: bool) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| p.len() != a.dim()) {
            return Err(Error::DimensionMismatch("pseudo-orbit points must match the torus dimension".into()));
        }
        let n = points.len();
        let steps = if periodic { n } else { n - 1 };
        let epsilon = (0..steps).map(|k| torus_distance(&points[(k + 1) % n], &a.apply(&points[k]))).fold(0.0, f64::max);
        let points = points.into_iter().map(|p| p.map(|v| v.rem_euclid(1.0))).collect();
        Ok(PseudoOrbit { points, epsilon, periodic })
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }
}

type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToralShadow {
    /// Exact rational coordinates `(numerator, denominator)` of the shadow's first point in `[0,1)ᵈ`.
    pub point: Vec<(i128, i128)>,
    pub orbit: Vec<Vec<f64>>,
    pub sup_distance: f64,
    pub epsilon: f64,
    pub shadow_constant: f64,
    pub bound: f64,
    pub epsilon0: f64,
}

impl ToralShadow {
    pub fn within_bound(&self) -> bool {
        self.sup_distance <= self.bound
    }
}

fn int_pow(a: &[Vec<i128>], n: usize) -> Result<Vec<Vec<i128>>> {
    let d = a.len();
    let mut out: Vec<Vec<i128>> = (0..d).map(|i| (0..d).map(|j| (i == j) as i128).collect()).collect();
    for _ in 0..n {
        let mut next = vec![vec![0i128; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0i128;
                for k in 0..d {
                    acc = acc
                        .checked_add(out[i][k].checked_mul(a[k][j]).ok_or_else(too_long)?)
                        .ok_or_else(too_long)?;
                }
                next[i][j] = acc;
            }
        }
        out = next;
    }
    Ok(out)
}

fn too_long() -> Error {
    Error::InvalidArgument("period too long for exact closing".into())
}

/// Exact solution of `S x = b` over the rationals.
fn solve_rational(s: Vec<Vec<Q>>, b: Vec<Q>) -> Result<Vec<Q>> {
    let d = b.len();
    let mut m: Vec<Vec<Q>> = s.into_iter().zip(b).map(|(mut r, v)| {
        r.push(v);
        r
    }).collect();
    for col in 0..d {
        let piv = (col..d).find(|&r| m[r][col] != Q::from_integer(0)).ok_or(Error::NonInvertible)?;
        m.swap(col, piv);
        let pv = m[col][col];
        for j in col..=d {
            m[col][j] = m[col][j] / pv;
        }
        for r in 0..d {
            if r != col && m[r][col] != Q::from_integer(0) {
                let f = m[r][col];
                for j in col..=d {
                    let v = m[col][j];
                    m[r][j] = m[r][j] - f * v;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[d]).collect())
}

fn frac(q: Q) -> Q {
    q - Q::from_integer(q.floor().to_integer())
}

/// The periodic orbit of the same period closest to a periodic pseudo-orbit. Integer lifts
/// `m_k = round(x_{k+1} − A x_k)` fix the homotopy class; the shadow then solves
/// `(I − Aᴺ) y₀ = Σ_k A^{N−1−k} m_k` exactly.
pub fn toral_close(a: &ToralAutomorphism, pseudo: &PseudoOrbit) -> Result<ToralShadow> {
    if !pseudo.periodic {
        return Err(Error::InvalidArgument("closing needs a periodic pseudo-orbit".into()));
    }
    let eps0 = a.epsilon0();
    if pseudo.epsilon > eps0 {
        return Err(Error::EpsilonTooLarge { eps: pseudo.epsilon, eps0 });
    }
    let d = a.dim();
    let n = pseudo.period();
    let ai: Vec<Vec<i128>> = a.matrix.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let lifts: Vec<Vec<i128>> = (0..n)
        .map(|k| {
            let ax = &a.real * &pseudo.points[k];
            let next = &pseudo.points[(k + 1) % n];
            (0..d).map(|i| (next[i] - ax[i]).round() as i128).collect()
        })
        .collect();
    let mut rhs = vec![0i128; d];
    for (k, m) in lifts.iter().enumerate() {
        let p = int_pow(&ai, n - 1 - k)?;
        for i in 0..d {
            for j in 0..d {
                rhs[i] = rhs[i].checked_add(p[i][j].checked_mul(m[j]).ok_or_else(too_long)?).ok_or_else(too_long)?;
            }
        }
    }
    let an = int_pow(&ai, n)?;
    if an.iter().flatten().any(|v| v.unsigned_abs() > 1u128 << 40) {
        return Err(too_long());
    }
    let s: Vec<Vec<Q>> =
        (0..d).map(|i| (0..d).map(|j| Q::from_integer((i == j) as i128 - an[i][j])).collect()).collect();
    let y0 = solve_rational(s, rhs.into_iter().map(Q::from_integer).collect())?;
    let mut y = y0.clone();
    let mut orbit = Vec::with_capacity(n);
    let mut sup: f64 = 0.0;
    for k in 0..n {
        let yf = DVector::from_iterator(d, y.iter().map(|q| *frac(*q).numer() as f64 / *frac(*q).denom() as f64));
        sup = sup.max(torus_distance(&yf, &pseudo.points[k]));
        orbit.push(yf.iter().cloned().collect());
        let next: Vec<Q> = (0..d)
            .map(|i| (0..d).fold(Q::from_integer(lifts[k][i]), |acc, j| acc + Q::from_integer(ai[i][j]) * y[j]))
            .collect();
        y = next;
    }
    let point = y0.iter().map(|q| {
        let f = frac(*q);
        (*f.numer(), *f.denom())
    }).collect();
    let l = a.shadow_constant();
    Ok(ToralShadow {
        point,
        orbit,
        sup_distance: sup,
        epsilon: pseudo.epsilon,
        shadow_constant: l,
        bound: l * pseudo.epsilon,
        epsilon0: eps0,
    })
}

/// `sup|f| + sup |f(u) − f(v)| / θ^{ν·N(u,v)}` for a window function, `N` the first index
/// where the windows differ.
pub fn hoelder_norm(values: &[(Word, f64)], theta: f64, nu: f64) -> f64 {
    let sup = values.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut semi: f64 = 0.0;
    for (i, (u, fu)) in values.iter().enumerate() {
        for (v, fv) in &values[i + 1..] {
            let k = u.iter().zip(v).position(|(a, b)| a != b).unwrap_or(u.len());
            semi = semi.max((fu - fv).abs() / theta.powf(nu * k as f64));
        }
    }
    sup + semi
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodDifferenceReport {
    /// `(n, δ_n)`.
    pub deltas: Vec<(usize, f64)>,
    pub sup: f64,
    pub m2: f64,
    pub hoelder_norm: f64,
}

impl PeriodDifferenceReport {
    pub fn bounded(&self) -> bool {
        self.sup <= self.m2
    }
}

/// `δ_n = |period₁(w_n) − period₀(w_n)|` for `n ∈ ns`, with the uniform bound
/// `M₂ = 2‖Δ‖_ν (|bridge| + Σ_{k≥1} θ^{νk})`, `Δ = roof₁ − roof₀`.
pub fn period_difference_bound(
    roof0: &RoofFunction,
    roof1: &RoofFunction,
    h: &HomoclinicPoint,
    ns: &[usize],
    nu: f64,
) -> Result<PeriodDifferenceReport> {
    let spec = roof0.base();
    if roof1.base() != spec {
        return Err(Error::InvalidArgument("roof functions live over different subshifts".into()));
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent {nu} outside (0, 1]")));
    }
    let w = roof0.window().max(roof1.window());
    let diff: Vec<(Word, f64)> =
        spec.admissible_words(w).into_iter().map(|u| {
            let v = roof1.value(&u) - roof0.value(&u);
            (u, v)
        }).collect();
    let p = &h.periodic;
    let l = h.period_word.len() as i64;
    for j in 0..l {
        let win = p.window(j, w);
        let dv = roof1.value(&win) - roof0.value(&win);
        if dv != 0.0 {
            return Err(Error::SupportViolation(format_word(&win)));
        }
    }
    let norm = hoelder_norm(&diff, spec.theta(), nu);
    let q = spec.theta().powf(nu);
    let m2 = 2.0 * norm * (h.bridge.len() as f64 + q / (1.0 - q));
    let diff_of = |u: &[u8]| roof1.value(u) - roof0.value(u);
    let mut deltas = Vec::with_capacity(ns.len());
    for &n in ns {
        let word = homoclinic_family(&h.period_word, &h.bridge, n, spec)?;
        let x = SymbolicPoint::periodic(&word)?;
        let total: f64 = (0..word.len() as i64).map(|j| diff_of(&x.window(j, w))).sum();
        deltas.push((n, total.abs()));
    }
    let sup = deltas.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(PeriodDifferenceReport { deltas, sup, m2, hoelder_norm: norm })
}

/// Accumulated time mismatch between the closed orbit of `w_n` and the homoclinic orbit
/// over the matched segment, with the bound `Σ |roof differences|` over windows where the two
/// orbits disagree.
pub fn reparametrization_mismatch(roof: &RoofFunction, h: &HomoclinicPoint, n: usize) -> Result<(f64, f64)> {
    let spec = roof.base();
    let w = aligned_shadow(&h.period_word, &h.bridge, n, spec)?;
    let lo = -((n * h.period_word.len()) as i64);
    let hi = (h.bridge.len() + n * h.period_word.len()) as i64;
    let (mut mismatch, mut bound) = (0.0, 0.0);
    for i in lo..hi {
        let d = roof.at(&w, i) - roof.at(&h.point, i);
        mismatch += d;
        bound += d.abs();
    }
    Ok((mismatch.abs(), bound))
}
