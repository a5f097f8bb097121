use super::{num, positive, Outcome, RoofConfig, ShiftConfig, Table, Verdict};
use crate::error::{Error, Result};
use crate::shadowing::{exponential_shadowing_check, period_difference_bound, toral_close, PseudoOrbit, ToralAutomorphism};
use crate::shift::{homoclinic_point, parse_word, HomoclinicPoint, SftSpec};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

fn homoclinic(shift: &ShiftConfig, period: &str, bridge: &str) -> Result<(SftSpec, HomoclinicPoint)> {
    let spec = shift.build()?;
    let h = homoclinic_point(&parse_word(period)?, &parse_word(bridge)?, &spec)?;
    Ok((spec, h))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowingConfig {
    pub shift: ShiftConfig,
    pub period: String,
    pub bridge: String,
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "default_eta_tol")]
    pub eta_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
}

fn default_eta_tol() -> f64 {
    0.1
}

fn default_residual_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosingConfig {
    pub matrix: Vec<Vec<i64>>,
    /// First point of an exact orbit to be jittered.
    pub start: Vec<f64>,
    pub length: usize,
    /// Jitter amplitude per coordinate.
    pub jitter: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodsConfig {
    pub shift: ShiftConfig,
    pub period: String,
    pub bridge: String,
    pub roof0: RoofConfig,
    pub roof1: RoofConfig,
    pub n_max: usize,
    #[serde(default = "default_nu")]
    pub nu: f64,
}

fn default_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E3Config {
    pub shadowing: ShadowingConfig,
    pub closing: ClosingConfig,
    pub periods: PeriodsConfig,
}

impl E3Config {
    pub fn validate(&self) -> Result<()> {
        let s = &self.shadowing;
        homoclinic(&s.shift, &s.period, &s.bridge)?;
        if s.n_min == 0 || s.n_max < s.n_min {
            return Err(Error::Config("shadowing needs 1 ≤ n_min ≤ n_max".into()));
        }
        positive("eta_tol", s.eta_tol)?;
        positive("residual_tol", s.residual_tol)?;
        let c = &self.closing;
        let a = ToralAutomorphism::new(c.matrix.clone())?;
        if c.start.len() != a.dim() || c.length == 0 {
            return Err(Error::Config("closing `start` must match the matrix size and `length` be positive".into()));
        }
        positive("jitter", c.jitter)?;
        let p = &self.periods;
        let (spec, _) = homoclinic(&p.shift, &p.period, &p.bridge)?;
        p.roof0.build(&spec)?;
        p.roof1.build(&spec)?;
        if p.n_max == 0 {
            return Err(Error::Config("periods `n_max` must be positive".into()));
        }
        if !(p.nu > 0.0 && p.nu <= 1.0) {
            return Err(Error::Config(format!("`nu` must lie in (0, 1], got {}", p.nu)));
        }
        Ok(())
    }
}

fn jittered(a: &ToralAutomorphism, base: &[DVector<f64>], amp: f64, rng: &mut ChaCha8Rng) -> Result<PseudoOrbit> {
    let pts = base.iter().map(|p| p.map(|v| v + amp * rng.random_range(-1.0..1.0))).collect();
    PseudoOrbit::new(a, pts, true)
}

pub fn run_e3(cfg: &E3Config, seed: u64) -> Result<Outcome> {
    let mut verdicts = Vec::new();
    let mut tables = Vec::new();

    // exponential shadowing
    let s = &cfg.shadowing;
    let (spec, h) = homoclinic(&s.shift, &s.period, &s.bridge)?;
    let fits = (s.n_min..=s.n_max)
        .into_par_iter()
        .map(|n| exponential_shadowing_check(&h, n, &spec))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("shadow_fits", &["n", "word", "eta", "eta_expected", "relative_error", "residual", "c"]);
    for f in &fits {
        t.push(vec![
            f.n.to_string(),
            f.word.clone(),
            num(f.eta),
            num(f.eta_expected),
            num(f.eta_relative_error()),
            num(f.residual),
            num(f.c),
        ]);
    }
    tables.push(t);
    let worst_eta = fits.iter().map(|f| f.eta_relative_error()).fold(0.0, f64::max);
    let worst_res = fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    verdicts.push(Verdict::new(
        "shadowing:eta",
        "closing_shadowing: shadowing distance decays at rate |p|·log(1/θ)",
        worst_eta <= s.eta_tol,
        format!("max relative error {worst_eta:.4} (tolerance {})", s.eta_tol),
    ));
    verdicts.push(Verdict::new(
        "shadowing:residual",
        "closing_shadowing: the decay profile is exponential",
        worst_res < s.residual_tol,
        format!("max log residual {worst_res:.4} (tolerance {})", s.residual_tol),
    ));

    // closing on the torus
    let c = &cfg.closing;
    let a = ToralAutomorphism::new(c.matrix.clone())?;
    let mut base = vec![DVector::from_vec(c.start.clone())];
    while base.len() < c.length {
        let next = a.apply(base.last().unwrap());
        base.push(next);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p1 = jittered(&a, &base, c.jitter, &mut rng)?;
    let s1 = toral_close(&a, &p1)?;
    let p2 = jittered(&a, &p1.points, p1.epsilon / 2.0, &mut rng)?;
    let s2 = toral_close(&a, &p2)?;
    verdicts.push(Verdict::new(
        "closing:bound",
        "closing_shadowing: the closed orbit stays within L·ε of the pseudo-orbit",
        s1.within_bound(),
        format!("sup distance {:e} ≤ L·ε = {:e}", s1.sup_distance, s1.bound),
    ));
    verdicts.push(Verdict::new(
        "closing:unique",
        "closing_shadowing: the shadowing orbit is unique",
        s1.point == s2.point && s2.within_bound(),
        format!("point {:?} vs {:?} after ε/2 re-jitter", s1.point, s2.point),
    ));
    let mut t = Table::new("closing", &["k", "pseudo_x", "pseudo_y", "shadow_x", "shadow_y"]);
    for (k, (p, o)) in p1.points.iter().zip(&s1.orbit).enumerate() {
        let coord = |v: &[f64], i: usize| v.get(i).copied().map(num).unwrap_or_default();
        t.push(vec![k.to_string(), coord(p.as_slice(), 0), coord(p.as_slice(), 1), coord(o, 0), coord(o, 1)]);
    }
    tables.push(t);

    // period differences
    let p = &cfg.periods;
    let (pspec, ph) = homoclinic(&p.shift, &p.period, &p.bridge)?;
    let ns: Vec<usize> = (1..=p.n_max).collect();
    let report = period_difference_bound(&p.roof0.build(&pspec)?, &p.roof1.build(&pspec)?, &ph, &ns, p.nu)?;
    verdicts.push(Verdict::new(
        "periods:bounded",
        "closing_shadowing: period differences are uniformly bounded by M₂",
        report.bounded(),
        format!("sup δ_n = {} ≤ M₂ = {}", report.sup, report.m2),
    ));
    let mut t = Table::new("period_differences", &["n", "delta"]);
    for (n, d) in &report.deltas {
        t.push(vec![n.to_string(), num(*d)]);
    }
    tables.push(t);

    let results = json!({
        "shadowing": fits,
        "closing": { "first": s1, "rejittered": s2 },
        "periods": report,
    });
    Ok((verdicts, tables, results))
}
