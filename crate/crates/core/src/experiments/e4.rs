use super::{join, num, positive, MeasureConfig, Outcome, RoofConfig, ShiftConfig, Table, Verdict};
use crate::error::{Error, Result};
use crate::linalg::from_rows;
use crate::suspension::{
    flow_lyapunov, lift_measure_integral, rescale_per_unit, FlowCocycle, HeightFunction, HeightPoly, SuspensionSystem,
};
use crate::Matrix;
use serde::Deserialize;
use serde_json::json;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftIdentity {
    pub name: String,
    #[serde(default)]
    pub roof: RoofConfig,
    pub measure: MeasureConfig,
    /// Coefficients of a height polynomial `Σ c_k t^k`, the same over every cylinder.
    pub integrand: Vec<f64>,
    pub expected: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeChangeConfig {
    #[serde(default)]
    pub roof: RoofConfig,
    pub measure: MeasureConfig,
    /// Per-unit-time matrices, one per symbol.
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub scale: f64,
    pub steps: usize,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
}

fn default_sigmas() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E4Config {
    pub shift: ShiftConfig,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    pub identities: Vec<LiftIdentity>,
    pub time_change: TimeChangeConfig,
}

fn default_tol() -> f64 {
    1e-12
}

impl E4Config {
    pub fn validate(&self) -> Result<()> {
        let spec = self.shift.build()?;
        positive("tolerance", self.tolerance)?;
        for id in &self.identities {
            let ctx = |e: Error| Error::Config(format!("identity `{}`: {e}", id.name));
            id.roof.build(&spec).map_err(ctx)?;
            id.measure.build(&spec).map_err(ctx)?;
            HeightPoly::new(id.integrand.clone()).map_err(ctx)?;
        }
        let t = &self.time_change;
        t.roof.build(&spec)?;
        t.measure.build(&spec)?;
        positive("scale", t.scale)?;
        positive("sigmas", t.sigmas)?;
        if t.steps < 1000 {
            return Err(Error::Config("time_change `steps` must be at least 1000".into()));
        }
        flow_cocycle(t, spec.alphabet_size())?;
        Ok(())
    }
}

fn flow_cocycle(t: &TimeChangeConfig, alphabet: usize) -> Result<FlowCocycle> {
    if t.matrices.len() != alphabet {
        return Err(Error::Config(format!("{} matrices for {alphabet} symbols", t.matrices.len())));
    }
    let generators: BTreeMap<Vec<u8>, Matrix> =
        t.matrices.iter().enumerate().map(|(a, m)| Ok((vec![a as u8], from_rows(m)?))).collect::<Result<_>>()?;
    Ok(FlowCocycle::PerUnitTime { window: 1, generators })
}

pub fn run_e4(cfg: &E4Config, seed: u64) -> Result<Outcome> {
    let spec = cfg.shift.build()?;
    let mut verdicts = Vec::new();
    let mut lift_table = Table::new("lift_identities", &["name", "value", "expected", "error"]);
    let mut lifts = Vec::new();
    for id in &cfg.identities {
        let sys = SuspensionSystem::new(id.roof.build(&spec)?);
        let mu = id.measure.build(&spec)?;
        let f = HeightFunction::uniform(&spec, HeightPoly::new(id.integrand.clone())?);
        let value = lift_measure_integral(&sys, &mu, &f);
        let err = (value - id.expected).abs();
        verdicts.push(Verdict::new(
            format!("lift:{}", id.name),
            "suspension_flow: lifted measure integrates height polynomials exactly",
            err <= cfg.tolerance,
            format!("value {value} expected {} error {err:e}", id.expected),
        ));
        lift_table.push(vec![id.name.clone(), num(value), num(id.expected), num(err)]);
        lifts.push(json!({ "name": id.name, "value": value, "expected": id.expected, "error": err }));
    }

    let t = &cfg.time_change;
    let sys_a = SuspensionSystem::new(t.roof.build(&spec)?);
    let flow_a = flow_cocycle(t, spec.alphabet_size())?;
    let sys_b = SuspensionSystem::new(sys_a.roof.scaled(t.scale)?);
    let flow_b = rescale_per_unit(&flow_a, t.scale)?;
    let mu = t.measure.build(&spec)?;
    let (ra, rb) = rayon::join(
        || flow_lyapunov(&sys_a, &flow_a, &mu, t.steps, seed),
        || flow_lyapunov(&sys_b, &flow_b, &mu, t.steps, seed.wrapping_add(1)),
    );
    let (ra, rb) = (ra?, rb?);
    let c = t.scale;
    let mut tc_table =
        Table::new("time_change", &["index", "scaled_a", "stderr_a", "scaled_b_times_c", "stderr_b_times_c", "direct_a", "deviation"]);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for i in 0..ra.scaled.len() {
        let dev = (ra.scaled[i] - c * rb.scaled[i]).abs();
        let tol = t.sigmas * (ra.scaled_stderr[i] + c * rb.scaled_stderr[i]);
        ok &= dev <= tol;
        worst = worst.max(dev / tol);
        tc_table.push(vec![
            i.to_string(),
            num(ra.scaled[i]),
            num(ra.scaled_stderr[i]),
            num(c * rb.scaled[i]),
            num(c * rb.scaled_stderr[i]),
            num(ra.direct[i]),
            num(dev),
        ]);
    }
    verdicts.push(Verdict::new(
        "time-change:agreement",
        "suspension_flow: flow exponents are invariant under a time change after scaling",
        ok,
        format!("largest deviation {worst:.3} × {}·stderr; scaled A = [{}], c·scaled B = [{}]", t.sigmas, join(&ra.scaled),
            join(&rb.scaled.iter().map(|x| c * x).collect::<Vec<_>>())),
    ));
    let results = json!({
        "lift_identities": lifts,
        "time_change": { "scale": c, "a": ra, "b": rb },
    });
    Ok((verdicts, vec![lift_table, tc_table], results))
}
