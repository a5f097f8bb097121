//! Lyapunov spectra by QR re-orthonormalization.

use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::linalg::{exterior_power, Matrix};
use crate::shift::{cylinder_measure, sample_orbit, MarkovMeasureRecord};
use serde::Serialize;

const BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// Non-increasing.
    pub exponents: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub stderr: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    /// `|Σ exponents − (1/N) Σ log|det A||`.
    pub volume_residual: f64,
}

/// Greedy clustering of sorted exponents: a new cluster starts whenever the gap to the
/// previous exponent exceeds `gap_tol`.
pub fn multiplicity_cluster(exponents: &[f64], gap_tol: f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (i, e) in exponents.iter().enumerate() {
        if i > 0 && (exponents[i - 1] - e).abs() <= gap_tol {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
    }
    out
}

/// Default clustering tolerance `10/√N`.
pub fn default_gap_tol(steps: usize) -> f64 {
    10.0 / (steps as f64).sqrt()
}

struct QrState {
    d: usize,
    q: Vec<f64>,
    b: Vec<f64>,
}

impl QrState {
    fn new(d: usize) -> Self {
        let mut q = vec![0.0; d * d];
        for i in 0..d {
            q[i * d + i] = 1.0;
        }
        QrState { d, q, b: vec![0.0; d * d] }
    }

    /// `Q ← qr(M·Q).Q`, adding `log|R_ii|` to `logs`.
    fn step(&mut self, m: &[f64], logs: &mut [f64]) {
        let d = self.d;
        for j in 0..d {
            for i in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += m[i + d * k] * self.q[k + d * j];
                }
                self.b[i + d * j] = s;
            }
        }
        for j in 0..d {
            for i in 0..j {
                let mut r = 0.0;
                for k in 0..d {
                    r += self.b[k + d * i] * self.b[k + d * j];
                }
                for k in 0..d {
                    self.b[k + d * j] -= r * self.b[k + d * i];
                }
            }
            let norm = (0..d).map(|k| self.b[k + d * j] * self.b[k + d * j]).sum::<f64>().sqrt();
            logs[j] += norm.ln();
            for k in 0..d {
                self.b[k + d * j] /= norm;
            }
        }
        std::mem::swap(&mut self.q, &mut self.b);
    }
}

/// QR iteration over `steps` cocycle values produced by `value(j, out)`; also returns the
/// summed `log|det|`.
fn qr_exponents(d: usize, steps: usize, mut value: impl FnMut(usize, &mut Matrix)) -> (Vec<f64>, Vec<f64>, f64) {
    let mut state = QrState::new(d);
    let mut m = Matrix::zeros(d, d);
    let mut batch = vec![vec![0.0; d]; BATCHES];
    let per = steps / BATCHES;
    let mut log_det = 0.0;
    for j in 0..steps {
        value(j, &mut m);
        let b = (j / per.max(1)).min(BATCHES - 1);
        state.step(m.as_slice(), &mut batch[b]);
        log_det += m.determinant().abs().ln();
    }
    let mut total = vec![0.0; d];
    for row in &batch {
        for i in 0..d {
            total[i] += row[i];
        }
    }
    let exps: Vec<f64> = total.iter().map(|t| t / steps as f64).collect();
    let stderr = (0..d)
        .map(|i| {
            let means: Vec<f64> = (0..BATCHES)
                .map(|b| {
                    let len = if b == BATCHES - 1 { steps - per * (BATCHES - 1) } else { per };
                    batch[b][i] / len.max(1) as f64
                })
                .collect();
            let mean = means.iter().sum::<f64>() / BATCHES as f64;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (BATCHES * (BATCHES - 1)) as f64;
            var.sqrt()
        })
        .collect();
    (exps, stderr, log_det)
}

/// The μ-typical word used by [`lyapunov_qr`] for `(steps, seed)`, with the padding
/// offset of position 0.
pub fn sampled_orbit(a: &CocycleSpec, mu: &MarkovMeasureRecord, steps: usize, seed: u64) -> Result<(Vec<u8>, usize)> {
    if !mu.compatible_with(a.base()) {
        return Err(Error::InvalidArgument("measure charges forbidden transitions".into()));
    }
    let c = a.compile();
    let pad = c.padding();
    Ok((sample_orbit(mu, steps + a.window() - 1 + 2 * pad, seed), pad))
}

/// Lyapunov exponents along one sampled orbit, QR every step, stderr from 20 batch means.
pub fn lyapunov_qr(a: &CocycleSpec, mu: &MarkovMeasureRecord, steps: usize, seed: u64) -> Result<LyapunovReport> {
    if steps < 1000 {
        return Err(Error::InvalidArgument("at least 1000 steps are required".into()));
    }
    let (word, pad) = sampled_orbit(a, mu, steps, seed)?;
    let c = a.compile();
    let (exps, stderr, log_det) = qr_exponents(a.dim(), steps, |j, out| c.write_value(&word, pad + j, out));
    Ok(finish(exps, stderr, log_det, steps, seed))
}

fn finish(exps: Vec<f64>, stderr: Vec<f64>, log_det: f64, steps: usize, seed: u64) -> LyapunovReport {
    let mut pairs: Vec<(f64, f64)> = exps.into_iter().zip(stderr).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let exponents: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let volume_residual = (exponents.iter().sum::<f64>() - log_det / steps as f64).abs();
    LyapunovReport {
        multiplicities: multiplicity_cluster(&exponents, default_gap_tol(steps)),
        exponents,
        stderr: pairs.iter().map(|p| p.1).collect(),
        steps,
        seed,
        volume_residual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExteriorSumCheck {
    pub wedge_top: f64,
    pub top_sum: f64,
    pub discrepancy: f64,
}

/// Top exponent of the `k`-th exterior power cocycle against the sum of the top `k`
/// exponents, both along the same sampled orbit.
pub fn exterior_sum_check(
    a: &CocycleSpec,
    mu: &MarkovMeasureRecord,
    k: usize,
    steps: usize,
    seed: u64,
) -> Result<ExteriorSumCheck> {
    if k == 0 || k > a.dim() {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={}", a.dim())));
    }
    let base = lyapunov_qr(a, mu, steps, seed)?;
    let (word, pad) = sampled_orbit(a, mu, steps, seed)?;
    let c = a.compile();
    let d = a.dim();
    let mut scratch = Matrix::zeros(d, d);
    let wd = crate::linalg::combinations(d, k).len();
    let (exps, _, _) = qr_exponents(wd, steps, |j, out| {
        c.write_value(&word, pad + j, &mut scratch);
        out.copy_from(&exterior_power(&scratch, k).expect("k checked"));
    });
    let wedge_top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top_sum: f64 = base.exponents[..k].iter().sum();
    Ok(ExteriorSumCheck { wedge_top, top_sum, discrepancy: (wedge_top - top_sum).abs() })
}

/// Exponents of a locally constant cocycle whose generators are all diagonal or
/// conformal (`c·R_α`) on common 2×2 blocks of the standard basis, as exact cylinder
/// integrals of log-moduli.
pub fn closed_form_oracle(a: &CocycleSpec, mu: &MarkovMeasureRecord) -> Result<Vec<f64>> {
    let d = a.dim();
    closed_form_oracle_in_basis(a, mu, &Matrix::identity(d, d))
}

/// [`closed_form_oracle`] after conjugating every generator by `basis`.
pub fn closed_form_oracle_in_basis(a: &CocycleSpec, mu: &MarkovMeasureRecord, basis: &Matrix) -> Result<Vec<f64>> {
    if !a.is_locally_constant() {
        return Err(Error::NotBlockDiagonal("Hölder perturbations have no closed form".into()));
    }
    let d = a.dim();
    let inv = crate::linalg::inverse(basis)?;
    let gens: Vec<(Vec<u8>, Matrix)> =
        a.generators().iter().map(|(w, g)| (w.clone(), &inv * g * basis)).collect();
    let scale = gens.iter().map(|(_, g)| g.amax()).fold(0.0, f64::max);
    let tiny = 1e-10 * scale;
    let coupled = |i: usize, j: usize| gens.iter().any(|(_, g)| g[(i, j)].abs() > tiny || g[(j, i)].abs() > tiny);
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < d {
        if i + 1 < d && coupled(i, i + 1) {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    for (_, g) in &gens {
        for r in 0..d {
            for c in 0..d {
                let same_block = blocks.iter().any(|&(s, n)| (s..s + n).contains(&r) && (s..s + n).contains(&c));
                if !same_block && g[(r, c)].abs() > tiny {
                    return Err(Error::NotBlockDiagonal(format!("entry ({r}, {c}) couples blocks")));
                }
            }
        }
        for &(s, n) in &blocks {
            if n == 2 {
                let (p, q, u, v) = (g[(s, s)], g[(s, s + 1)], g[(s + 1, s)], g[(s + 1, s + 1)]);
                if (p - v).abs() > tiny || (q + u).abs() > tiny {
                    return Err(Error::NotBlockDiagonal(format!("block at {s} is not conformal")));
                }
            }
        }
    }
    let mut out = vec![0.0; d];
    for (w, g) in &gens {
        let weight = cylinder_measure(mu, w);
        if weight == 0.0 {
            continue;
        }
        for &(s, n) in &blocks {
            let log_mod = if n == 1 {
                g[(s, s)].abs().ln()
            } else {
                0.5 * (g[(s, s)].powi(2) + g[(s + 1, s)].powi(2)).ln()
            };
            for k in s..s + n {
                out[k] += weight * log_mod;
            }
        }
    }
    out.sort_by(|x, y| y.total_cmp(x));
    Ok(out)
}
