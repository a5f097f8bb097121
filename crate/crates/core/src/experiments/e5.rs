use super::{num, positive, GeneratorsConfig, MeasureConfig, Outcome, RoofConfig, ShiftConfig, Table, Verdict};
use crate::cocycle::{cylinder_perturb, rotation_perturb_family, sup_distance, CocycleSpec, RotationMode};
use crate::error::{Error, Result};
use crate::linalg::rotation2;
use crate::rotation::{rho_measure, rho_periodic, CircleCocycle, RhoMeasureEstimate};
use crate::shift::{parse_word, MarkovMeasureRecord, SymbolicPoint};
use crate::suspension::SuspensionSystem;
use crate::Constraint;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderKind {
    /// Rotate the generator of one cylinder by `ε`.
    Cocycle,
    /// Mix the transition matrix towards `measure_target` with weight `ε`.
    Measure,
    /// Move the rotation-family parameter to `s = ε`.
    Family,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E5Config {
    pub shift: ShiftConfig,
    #[serde(default)]
    pub roof: RoofConfig,
    pub cocycle: GeneratorsConfig,
    pub measure: MeasureConfig,
    pub measure_target: MeasureConfig,
    /// Cylinder rotated by the cocycle ladder.
    pub cylinder: String,
    /// Periodic word carrying the rotation family.
    pub period: String,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    pub t_max: f64,
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_eps_check")]
    pub eps_check: f64,
    #[serde(default = "default_width_factor")]
    pub width_factor: f64,
    pub ladders: Vec<LadderKind>,
}

fn default_theta0() -> f64 {
    1.0
}
fn default_eps_max() -> f64 {
    1e-2
}
fn default_levels() -> usize {
    8
}
fn default_eps_check() -> f64 {
    1e-4
}
fn default_width_factor() -> f64 {
    10.0
}

impl E5Config {
    pub fn validate(&self) -> Result<()> {
        let spec = self.shift.build()?;
        let sys = SuspensionSystem::new(self.roof.build(&spec)?);
        let a = self.cocycle.build(&spec)?;
        CircleCocycle::from_cocycle(sys, &a)?;
        self.measure.build(&spec)?;
        self.measure_target.build(&spec)?;
        let cyl = parse_word(&self.cylinder)?;
        if cyl.len() != a.window() {
            return Err(Error::Config("`cylinder` must have the cocycle window length".into()));
        }
        spec.check_word(&cyl)?;
        SymbolicPoint::periodic(&parse_word(&self.period)?)?;
        for (name, v) in [("theta0", self.theta0), ("t_max", self.t_max), ("eps_max", self.eps_max), ("eps_check", self.eps_check), ("width_factor", self.width_factor)] {
            positive(name, v)?;
        }
        if self.eps_max > 1.0 || self.levels == 0 || self.ladders.is_empty() {
            return Err(Error::Config("need eps_max ≤ 1, levels ≥ 1 and at least one ladder".into()));
        }
        Ok(())
    }

    fn epsilons(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.eps_max / (1u64 << k) as f64).collect()
    }
}

struct Context {
    sys: SuspensionSystem,
    base: CocycleSpec,
    mu: MarkovMeasureRecord,
    target: MarkovMeasureRecord,
}

struct Rung {
    eps: f64,
    estimate: RhoMeasureEstimate,
    /// Sup distance to the unperturbed cocycle, or total variation of the transition rows.
    distance: f64,
    /// `ρ` on the orbit of `period` (family ladder only).
    periodic: Option<f64>,
}

fn rung(cfg: &E5Config, ctx: &Context, kind: LadderKind, eps: f64, seed: u64) -> Result<Rung> {
    let circle = |a: &CocycleSpec| CircleCocycle::from_cocycle(ctx.sys.clone(), a);
    match kind {
        LadderKind::Cocycle => {
            let a = cylinder_perturb(&ctx.base, &parse_word(&cfg.cylinder)?, &rotation2(eps), Constraint::None)?;
            let estimate = rho_measure(&circle(&a)?, &ctx.mu, cfg.t_max, seed)?;
            Ok(Rung { eps, estimate, distance: sup_distance(&ctx.base, &a)?, periodic: None })
        }
        LadderKind::Measure => {
            let p = ctx.mu.stochastic() * (1.0 - eps) + ctx.target.stochastic() * eps;
            let mu = MarkovMeasureRecord::from_stochastic(p)?;
            let distance = (ctx.mu.stochastic() - mu.stochastic()).abs().row_sum().max();
            let estimate = rho_measure(&circle(&ctx.base)?, &mu, cfg.t_max, seed)?;
            Ok(Rung { eps, estimate, distance, periodic: None })
        }
        LadderKind::Family => {
            let word = parse_word(&cfg.period)?;
            let p = SymbolicPoint::periodic(&word)?;
            let family = rotation_perturb_family(&ctx.base, &p, 0, cfg.theta0, RotationMode::Plain)?;
            let a = family.at(eps)?;
            let c = circle(&a)?;
            let estimate = rho_measure(&c, &ctx.mu, cfg.t_max, seed)?;
            let periodic = Some(rho_periodic(&c, &word)?.rho);
            Ok(Rung { eps, estimate, distance: sup_distance(&ctx.base, &a)?, periodic })
        }
    }
}

pub fn run_e5(cfg: &E5Config, seed: u64) -> Result<Outcome> {
    let spec = cfg.shift.build()?;
    let ctx = Context {
        sys: SuspensionSystem::new(cfg.roof.build(&spec)?),
        base: cfg.cocycle.build(&spec)?,
        mu: cfg.measure.build(&spec)?,
        target: cfg.measure_target.build(&spec)?,
    };
    let c0 = CircleCocycle::from_cocycle(ctx.sys.clone(), &ctx.base)?;
    let r0 = rho_measure(&c0, &ctx.mu, cfg.t_max, seed)?;
    let mut verdicts = Vec::new();
    let mut tables = Vec::new();
    let mut results = Vec::new();
    for &kind in &cfg.ladders {
        let name = format!("{kind:?}").to_lowercase();
        let mut eps = cfg.epsilons();
        eps.push(cfg.eps_check);
        let rungs = eps.par_iter().map(|&e| rung(cfg, &ctx, kind, e, seed)).collect::<Result<Vec<_>>>()?;
        let (ladder, check) = rungs.split_at(cfg.levels);
        let check = &check[0];
        let diffs: Vec<f64> = ladder.iter().map(|r| (r.estimate.rho - r0.rho).abs()).collect();
        let monotone = diffs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let rho0_periodic = if kind == LadderKind::Family {
            let word = parse_word(&cfg.period)?;
            Some(rho_periodic(&c0, &word)?.rho)
        } else {
            None
        };
        let periodic_monotone = match rho0_periodic {
            Some(p0) => ladder.windows(2).all(|w| {
                (w[1].periodic.unwrap() - p0).abs() <= (w[0].periodic.unwrap() - p0).abs() + 1e-12
            }),
            None => true,
        };
        verdicts.push(Verdict::new(
            format!("{name}:monotone"),
            "rotation_number: |ρ_ε − ρ₀| decreases along the dyadic ladder",
            monotone && periodic_monotone,
            format!("differences {:?}", diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()),
        ));
        let ratio = check.estimate.width / r0.width;
        verdicts.push(Verdict::new(
            format!("{name}:width"),
            "rotation_number: the bracket at small ε stays comparable to the unperturbed bracket",
            check.estimate.width <= cfg.width_factor * r0.width,
            format!("width at ε = {:e} is {:.4}× the unperturbed width", cfg.eps_check, ratio),
        ));
        let mut t = Table::new(
            &format!("ladder_{name}"),
            &["eps", "distance", "rho", "lower", "upper", "width", "difference", "periodic_rho"],
        );
        for r in ladder.iter().chain(std::iter::once(check)) {
            t.push(vec![
                num(r.eps),
                num(r.distance),
                num(r.estimate.rho),
                num(r.estimate.lower),
                num(r.estimate.upper),
                num(r.estimate.width),
                num((r.estimate.rho - r0.rho).abs()),
                r.periodic.map(num).unwrap_or_default(),
            ]);
        }
        tables.push(t);
        results.push(json!({
            "ladder": name,
            "rungs": ladder.iter().chain(std::iter::once(check)).map(|r| json!({
                "eps": r.eps,
                "distance": r.distance,
                "estimate": r.estimate,
                "periodic_rho": r.periodic,
            })).collect::<Vec<_>>(),
            "periodic_rho0": rho0_periodic,
        }));
    }
    Ok((verdicts, tables, json!({ "unperturbed": r0, "ladders": results })))
}
