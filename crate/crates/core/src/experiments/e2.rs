use super::{num, positive, GeneratorsConfig, Outcome, ShiftConfig, Table, Verdict};
use crate::cocycle::{
    cylinder_perturb, evaluate, pinching_check, return_matrix, rotation_perturb_family, simplicity_check,
    RotationFamily, RotationMode,
};
use crate::error::{Error, Result};
use crate::linalg::{inverse, moduli_separation_perturb, op_norm, real_block_decomposition, sorted_spectrum, BlockKind};
use crate::rotation::{lift_theta_family, rho_periodic, CircleCocycle, Crossing, ThetaLift};
use crate::shadowing::homoclinic_family;
use crate::shift::{format_word, homoclinic_point, parse_word, SftSpec, SymbolicPoint, Word};
use crate::suspension::{RoofFunction, SuspensionSystem};
use crate::{Constraint, Matrix};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyMode {
    Plain,
    Symplectic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2Suite {
    pub name: String,
    pub shift: ShiftConfig,
    pub cocycle: GeneratorsConfig,
    pub period: String,
    pub bridge: String,
    pub mode: FamilyMode,
    #[serde(default)]
    pub block: usize,
    pub theta0: f64,
    pub n_max: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    pub separation_eps: f64,
    /// Generators commute with the inserted rotation, so increments have a closed form.
    #[serde(default)]
    pub commuting: bool,
    /// Symbol repeated `|w_n|` times as the bridge of the final simplicity check.
    pub final_bridge: Option<String>,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn default_grid() -> usize {
    65
}

fn default_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2Config {
    pub suite: Vec<E2Suite>,
}

impl E2Config {
    pub fn validate(&self) -> Result<()> {
        if self.suite.is_empty() {
            return Err(Error::Config("`suite` must be non-empty".into()));
        }
        for s in &self.suite {
            s.setup().map_err(|e| Error::Config(format!("suite `{}`: {e}", s.name)))?;
        }
        Ok(())
    }
}

struct Setup {
    spec: SftSpec,
    p_word: Word,
    bridge: Word,
    family: RotationFamily,
    constraint: Constraint,
}

impl E2Suite {
    fn setup(&self) -> Result<Setup> {
        positive("theta0", self.theta0)?;
        positive("separation_eps", self.separation_eps)?;
        positive("tolerance", self.tolerance)?;
        if self.n_max == 0 || self.grid_points < 2 {
            return Err(Error::Config("`n_max` must be positive and `grid_points` at least 2".into()));
        }
        let spec = self.shift.build()?;
        let a = self.cocycle.build(&spec)?;
        let p_word = parse_word(&self.period)?;
        let bridge = parse_word(&self.bridge)?;
        homoclinic_point(&p_word, &bridge, &spec)?;
        if let Some(b) = &self.final_bridge {
            let sym = parse_word(b)?;
            if sym.len() != 1 {
                return Err(Error::Config("`final_bridge` must be a single symbol".into()));
            }
        }
        let p = SymbolicPoint::periodic(&p_word)?;
        let (mode, constraint) = match self.mode {
            FamilyMode::Plain => (RotationMode::Plain, Constraint::None),
            FamilyMode::Symplectic => (RotationMode::Symplectic, Constraint::Symplectic),
        };
        let family = rotation_perturb_family(&a, &p, self.block, self.theta0, mode)?;
        Ok(Setup { spec, p_word, bridge, family, constraint })
    }
}

/// Number of cyclic windows of `word` equal to `support`.
fn visits(word: &[u8], support: &[u8]) -> usize {
    let l = word.len();
    (0..l).filter(|&k| (0..support.len()).all(|i| word[(k + i) % l] == support[i])).count()
}

struct NRun {
    n: usize,
    word: Word,
    lift: std::result::Result<ThetaLift, Error>,
    visits: usize,
    /// Largest `|θ̃(s) − ℓρ(s)|` over complex grid points (two-dimensional suites only).
    anchor_residual: Option<f64>,
}

fn run_n(setup: &Setup, suite: &E2Suite, n: usize) -> Result<NRun> {
    let word = homoclinic_family(&setup.p_word, &setup.bridge, n, &setup.spec)?;
    let sys = SuspensionSystem::new(RoofFunction::constant(setup.spec.clone(), 1.0)?);
    let grid: Vec<f64> = (0..suite.grid_points).map(|i| i as f64 / (suite.grid_points - 1) as f64).collect();
    let family = |s: f64| setup.family.at(s);
    let lift = lift_theta_family(&family, &sys, &word, &grid);
    let mut anchor_residual = None;
    if let (Ok(l), 2) = (&lift, setup.family.base().dim()) {
        let mut worst: f64 = 0.0;
        for x in l.samples.iter().filter(|x| x.complex) {
            let c = CircleCocycle::from_cocycle(sys.clone(), &setup.family.at(x.s)?)?;
            let lr = l.period * rho_periodic(&c, &word)?.rho;
            worst = worst.max((x.theta - lr).abs());
        }
        anchor_residual = Some(worst);
    }
    Ok(NRun { n, visits: visits(&word, setup.family.support()), word, lift, anchor_residual })
}

/// Replaces conformal blocks whose angle is within `tol` of `0` or `π` by the real scalar
/// of the same modulus. Returns the snapped matrix and the size of the change.
fn snap_real_collisions(m: &Matrix, tol: f64) -> Result<(Matrix, f64)> {
    let dec = real_block_decomposition(m)?;
    let mut form = dec.block_form();
    for b in &dec.blocks {
        if let BlockKind::Conformal { modulus, angle } = b.kind {
            let sign = if angle < PI / 2.0 { 1.0 } else { -1.0 };
            if angle.min(PI - angle) <= tol {
                form.view_mut((b.start, b.start), (2, 2)).copy_from(&(Matrix::identity(2, 2) * (sign * modulus)));
            }
        }
    }
    let out = &dec.basis * form * &dec.inverse;
    let change = op_norm(&(&out - m));
    Ok((out, change))
}

/// First position of `word` whose cyclic window occurs nowhere else in the word.
fn unique_position(word: &[u8], window: usize) -> Option<(usize, Word)> {
    let l = word.len();
    let win = |k: usize| -> Word { (0..window).map(|i| word[(k + i) % l]).collect() };
    (0..l).map(|k| (k, win(k))).find(|(_, w)| visits(word, w) == 1)
}

struct Pipeline {
    n: usize,
    crossing: Crossing,
    s_star: f64,
    snap: f64,
    separation: f64,
    position: Option<(usize, Word)>,
    pinching: bool,
    simplicity: Option<bool>,
}

fn run_pipeline(setup: &Setup, suite: &E2Suite, run: &NRun, lift: &ThetaLift, crossing: &Crossing) -> Result<Pipeline> {
    let p = SymbolicPoint::periodic(&run.word)?;
    let real_at = |s: f64| -> Result<bool> { Ok(sorted_spectrum(&return_matrix(&setup.family.at(s)?, &p)?)?.all_real()) };
    // When the crossing opens an interval of real spectrum, move to its middle so the
    // eigenvalues are well separated; otherwise sit on the collision itself.
    let next = lift.crossings.iter().map(|c| c.lo).filter(|&lo| lo > crossing.hi).fold(1.0, f64::min);
    let prev = lift.crossings.iter().map(|c| c.hi).filter(|&hi| hi < crossing.lo).fold(0.0, f64::max);
    let mut s_star = 0.5 * (crossing.lo + crossing.hi);
    for (end, inner) in [(crossing.hi, 0.5 * (crossing.hi + next)), (crossing.lo, 0.5 * (prev + crossing.lo))] {
        if real_at(end)? {
            s_star = if real_at(inner)? { inner } else { end };
            break;
        }
    }
    let a_s = setup.family.at(s_star)?;
    let m = return_matrix(&a_s, &p)?;
    let (collided, snap) =
        if sorted_spectrum(&m)?.all_real() { (m.clone(), 0.0) } else { snap_real_collisions(&m, 1e-6)? };
    let target = moduli_separation_perturb(&collided, suite.separation_eps, setup.constraint)?;
    let separation = op_norm(&(&target - &m));
    let (perturbed, position) = if separation == 0.0 {
        (a_s, None)
    } else {
        let window = a_s.window();
        let (k, w) = unique_position(&run.word, window)
            .ok_or_else(|| Error::InvalidArgument(format!("no unique window in {}", format_word(&run.word))))?;
        let l = run.word.len() as i64;
        let after = evaluate(&a_s, &p.shift(k as i64 + 1), l - k as i64 - 1);
        let g = inverse(&after)? * &target * inverse(&m)? * &after;
        (cylinder_perturb(&a_s, &w, &g, setup.constraint)?, Some((k, w)))
    };
    let pinching = pinching_check(&perturbed, &p)?;
    let simplicity = match &suite.final_bridge {
        Some(b) => {
            let sym = parse_word(b)?[0];
            let h = homoclinic_point(&run.word, &vec![sym; run.word.len()], &setup.spec)?;
            let r = simplicity_check(&perturbed, &h, 1e-12)?;
            Some(r.verdict)
        }
        None => None,
    };
    Ok(Pipeline { n: run.n, crossing: crossing.clone(), s_star, snap, separation, position, pinching, simplicity })
}

fn run_suite(suite: &E2Suite) -> Result<(Vec<Verdict>, Table, serde_json::Value)> {
    let setup = suite.setup()?;
    let runs = (1..=suite.n_max).into_par_iter().map(|n| run_n(&setup, suite, n)).collect::<Result<Vec<_>>>()?;
    let tol = suite.tolerance;
    let vid = |s: &str| format!("{}:{s}", suite.name);
    let mut verdicts = Vec::new();
    let mut table = Table::new(
        &format!("lift_{}", suite.name),
        &["n", "word", "visits", "predicted", "increment", "crossings", "anchor_residual", "status"],
    );
    let increments: Vec<Option<f64>> = runs.iter().map(|r| r.lift.as_ref().ok().map(|l| l.increment())).collect();
    for (r, inc) in runs.iter().zip(&increments) {
        table.push(vec![
            r.n.to_string(),
            format_word(&r.word),
            r.visits.to_string(),
            num(r.visits as f64 * suite.theta0),
            inc.map(num).unwrap_or_default(),
            r.lift.as_ref().map(|l| l.crossings.len().to_string()).unwrap_or_default(),
            r.anchor_residual.map(num).unwrap_or_default(),
            match &r.lift {
                Ok(_) => "ok".into(),
                Err(e) => format!("skipped: {e}"),
            },
        ]);
    }
    let observed_n = runs.iter().zip(&increments).find(|(_, i)| i.is_some_and(|x| x.abs() > TAU)).map(|(r, _)| r.n);

    if suite.commuting {
        let worst = runs
            .iter()
            .zip(&increments)
            .map(|(r, i)| match i {
                Some(x) => (x.abs() - r.visits as f64 * suite.theta0).abs(),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        verdicts.push(Verdict::new(
            vid("increment"),
            "rotation_number: lift increment equals the visit-count prediction",
            worst < tol,
            format!("max |Δθ̃ − visits·θ₀| = {worst:e}"),
        ));
        let predicted_n = runs.iter().find(|r| r.visits as f64 * suite.theta0 > TAU).map(|r| r.n);
        verdicts.push(Verdict::new(
            vid("smallest-n"),
            "rotation_number: the lift first exceeds 2π at the predicted n",
            predicted_n.is_some() && predicted_n == observed_n,
            format!("predicted {predicted_n:?}, observed {observed_n:?}"),
        ));
        let per_copy = visits(&setup.p_word.repeat(2), setup.family.support()) as f64 / 2.0;
        let slope = 2.0 * suite.theta0 * per_copy;
        let worst_slope = increments
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => ((b.abs() - a.abs()) - slope).abs(),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        verdicts.push(Verdict::new(
            vid("slope"),
            "rotation_number: increment is affine in n with slope 2·θ₀ per copy of p",
            worst_slope < tol,
            format!("slope {slope}, max deviation {worst_slope:e}"),
        ));
        if setup.family.base().dim() == 2 {
            let worst = runs.iter().map(|r| r.anchor_residual.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            verdicts.push(Verdict::new(
                vid("anchoring"),
                "rotation_number: θ̃(s) = ℓ·ρ along the family",
                worst < tol,
                format!("max residual {worst:e}"),
            ));
        }
    }

    let pipeline = match observed_n {
        Some(n) => {
            let run = &runs[n - 1];
            let lift = run.lift.as_ref().expect("observed n has a lift");
            let pick = lift.crossings.iter().find(|c| c.multiple % 2 == 0).or_else(|| lift.crossings.first());
            match pick {
                Some(c) => Some(run_pipeline(&setup, suite, run, lift, c)?),
                None => None,
            }
        }
        None => None,
    };
    verdicts.push(Verdict::new(
        vid("pinching"),
        "cocycle_lab: the located crossing plus a moduli separation is pinched",
        pipeline.as_ref().is_some_and(|p| p.pinching),
        match &pipeline {
            Some(p) => format!(
                "n={} s*={:.12} crossing multiple {} snap {:e} separation {:e}",
                p.n, p.s_star, p.crossing.multiple, p.snap, p.separation
            ),
            None => "no crossing located".into(),
        },
    ));
    if suite.final_bridge.is_some() {
        verdicts.push(Verdict::new(
            vid("simplicity"),
            "cocycle_lab: the perturbed cocycle satisfies the simplicity criterion",
            pipeline.as_ref().and_then(|p| p.simplicity).unwrap_or(false),
            format!("{:?}", pipeline.as_ref().and_then(|p| p.simplicity)),
        ));
    }
    let results = json!({
        "suite": suite.name,
        "theta0": suite.theta0,
        "support": format_word(setup.family.support()),
        "observed_n": observed_n,
        "lifts": runs.iter().map(|r| json!({
            "n": r.n,
            "word": format_word(&r.word),
            "visits": r.visits,
            "lift": r.lift.as_ref().ok(),
            "error": r.lift.as_ref().err().map(|e| e.to_string()),
            "anchor_residual": r.anchor_residual,
        })).collect::<Vec<_>>(),
        "pipeline": pipeline.as_ref().map(|p| json!({
            "n": p.n,
            "crossing": p.crossing,
            "s_star": p.s_star,
            "snap": p.snap,
            "separation": p.separation,
            "position": p.position.as_ref().map(|(k, w)| json!({"index": k, "window": format_word(w)})),
            "pinching": p.pinching,
            "simplicity": p.simplicity,
        })),
    });
    Ok((verdicts, table, results))
}

pub fn run_e2(cfg: &E2Config, _seed: u64) -> Result<Outcome> {
    let outs = cfg.suite.par_iter().map(run_suite).collect::<Result<Vec<_>>>()?;
    let mut verdicts = Vec::new();
    let mut tables = Vec::new();
    let mut results = Vec::new();
    for (v, t, r) in outs {
        verdicts.extend(v);
        tables.push(t);
        results.push(r);
    }
    Ok((verdicts, tables, json!({ "suites": results })))
}

