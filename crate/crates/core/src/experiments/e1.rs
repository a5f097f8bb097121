use super::{join, positive, GeneratorsConfig, MeasureConfig, Outcome, ShiftConfig, Table, Verdict};
use crate::cocycle::simplicity_check;
use crate::error::{Error, Result};
use crate::linalg::from_rows;
use crate::oseledets::{closed_form_oracle_in_basis, default_gap_tol, lyapunov_qr, multiplicity_cluster, LyapunovReport};
use crate::shift::{homoclinic_point, parse_word};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteRole {
    /// Expected to pass the simplicity criterion; its spectrum must come out simple.
    Simple,
    /// Duplicated diagonal blocks; a repeated exponent must be detected.
    Control,
    /// Reported only.
    Informative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteMember {
    pub name: String,
    pub role: SuiteRole,
    pub cocycle: GeneratorsConfig,
    #[serde(default = "default_period")]
    pub period: String,
    #[serde(default = "default_bridge")]
    pub bridge: String,
}

fn default_period() -> String {
    "0".into()
}

fn default_bridge() -> String {
    "1".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E1Config {
    pub shift: ShiftConfig,
    pub steps: usize,
    #[serde(default = "default_tol")]
    pub holonomy_tol: f64,
    /// Minimum spectral gap in units of the batch-means stderr, for `d = 2` members.
    #[serde(default = "default_gap_sigmas")]
    pub gap_sigmas: f64,
    /// Control members must match the closed form within `max(oracle_sigmas·stderr, oracle_floor)`.
    #[serde(default = "default_oracle_sigmas")]
    pub oracle_sigmas: f64,
    #[serde(default = "default_oracle_floor")]
    pub oracle_floor: f64,
    pub measures: Vec<MeasureConfig>,
    pub suite: Vec<SuiteMember>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_gap_sigmas() -> f64 {
    10.0
}

fn default_oracle_sigmas() -> f64 {
    3.0
}

fn default_oracle_floor() -> f64 {
    1e-3
}

impl E1Config {
    pub fn validate(&self) -> Result<()> {
        let spec = self.shift.build()?;
        if self.steps < 1000 {
            return Err(Error::Config("`steps` must be at least 1000".into()));
        }
        positive("holonomy_tol", self.holonomy_tol)?;
        positive("gap_sigmas", self.gap_sigmas)?;
        positive("oracle_sigmas", self.oracle_sigmas)?;
        positive("oracle_floor", self.oracle_floor)?;
        if self.measures.is_empty() || self.suite.is_empty() {
            return Err(Error::Config("`measures` and `suite` must be non-empty".into()));
        }
        for m in &self.measures {
            m.build(&spec)?;
        }
        for s in &self.suite {
            let ctx = |e: Error| Error::Config(format!("suite member `{}`: {e}", s.name));
            s.cocycle.build(&spec).map_err(ctx)?;
            homoclinic_point(&parse_word(&s.period).map_err(ctx)?, &parse_word(&s.bridge).map_err(ctx)?, &spec)
                .map_err(ctx)?;
        }
        Ok(())
    }
}

struct MemberRun {
    simplicity: bool,
    pinching: bool,
    twisting: bool,
    dim: usize,
    /// Closed-form exponents per measure, when the generators are block diagonal.
    oracle: Vec<Option<Vec<f64>>>,
    spectra: Vec<LyapunovReport>,
}

fn run_member(cfg: &E1Config, idx: usize, member: &SuiteMember, seed: u64) -> Result<MemberRun> {
    let spec = cfg.shift.build()?;
    let a = member.cocycle.build(&spec)?;
    let h = homoclinic_point(&parse_word(&member.period)?, &parse_word(&member.bridge)?, &spec)?;
    let report = simplicity_check(&a, &h, cfg.holonomy_tol)?;
    let basis = match &member.cocycle.conjugate {
        Some(q) => from_rows(q)?,
        None => crate::Matrix::identity(a.dim(), a.dim()),
    };
    let measures: Vec<_> = cfg.measures.iter().map(|m| m.build(&spec)).collect::<Result<_>>()?;
    // the oracle only exists for block-diagonal generators; its absence is not an error
    let oracle = measures
        .iter()
        .map(|mu| match member.role {
            SuiteRole::Control => closed_form_oracle_in_basis(&a, mu, &basis).map(Some),
            _ => Ok(closed_form_oracle_in_basis(&a, mu, &basis).ok()),
        })
        .collect::<Result<Vec<_>>>()?;
    let spectra = measures
        .par_iter()
        .enumerate()
        .map(|(j, mu)| lyapunov_qr(&a, mu, cfg.steps, seed.wrapping_add((idx * 64 + j) as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MemberRun {
        simplicity: report.verdict,
        pinching: report.pinching,
        twisting: report.twisting,
        dim: a.dim(),
        oracle,
        spectra,
    })
}

pub fn run_e1(cfg: &E1Config, seed: u64) -> Result<Outcome> {
    let runs = cfg
        .suite
        .par_iter()
        .enumerate()
        .map(|(i, m)| run_member(cfg, i, m, seed))
        .collect::<Result<Vec<_>>>()?;
    let gap_tol = default_gap_tol(cfg.steps);
    let mut table = Table::new(
        "spectra",
        &["member", "role", "dim", "measure", "simplicity", "exponents", "stderr", "multiplicities", "oracle"],
    );
    let mut verdicts = Vec::new();
    let mut results = Vec::new();
    for (member, run) in cfg.suite.iter().zip(&runs) {
        for ((m, r), o) in cfg.measures.iter().zip(&run.spectra).zip(&run.oracle) {
            let mult = multiplicity_cluster(&r.exponents, gap_tol);
            table.push(vec![
                member.name.clone(),
                format!("{:?}", member.role).to_lowercase(),
                run.dim.to_string(),
                m.label(),
                run.simplicity.to_string(),
                join(&r.exponents),
                join(&r.stderr),
                mult.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
                o.as_deref().map(join).unwrap_or_default(),
            ]);
        }
        let all_simple = run.spectra.iter().all(|r| multiplicity_cluster(&r.exponents, gap_tol).iter().all(|&k| k == 1));
        let vid = |suffix: &str| format!("{}:{suffix}", member.name);
        match member.role {
            SuiteRole::Simple => {
                verdicts.push(Verdict::new(
                    vid("criterion"),
                    "cocycle_lab: simplicity_check holds for the suite member",
                    run.simplicity,
                    format!("pinching={} twisting={}", run.pinching, run.twisting),
                ));
                verdicts.push(Verdict::new(
                    vid("simple-spectrum"),
                    "experiments: simplicity verdict implies all multiplicities one",
                    !run.simplicity || all_simple,
                    format!("gap_tol={gap_tol:e} all_simple={all_simple}"),
                ));
                if run.dim == 2 {
                    let worst = run
                        .spectra
                        .iter()
                        .map(|r| (r.exponents[0] - r.exponents[1]) / r.stderr.iter().cloned().fold(f64::MIN_POSITIVE, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    verdicts.push(Verdict::new(
                        vid("gap"),
                        "oseledets: exponent gap exceeds the batch-means error",
                        worst > cfg.gap_sigmas,
                        format!("min gap/stderr = {worst:.1} (required {})", cfg.gap_sigmas),
                    ));
                }
            }
            SuiteRole::Control => {
                let oracles: Vec<&Vec<f64>> = run.oracle.iter().map(|o| o.as_ref().expect("control oracle computed")).collect();
                let oracle_double =
                    oracles.iter().all(|o| o.len() >= 2 && (o[0] - o[1]).abs() <= 1e-12 * o[0].abs().max(1.0));
                let detected = run
                    .spectra
                    .iter()
                    .map(|r| multiplicity_cluster(&r.exponents, gap_tol)[0])
                    .min()
                    .unwrap_or(0);
                verdicts.push(Verdict::new(
                    vid("double-exponent"),
                    "oseledets: duplicated blocks produce a repeated exponent",
                    oracle_double && detected >= 2,
                    format!("oracle top pairs equal: {oracle_double}, smallest detected top multiplicity {detected}"),
                ));
                let worst = oracles
                    .iter()
                    .zip(&run.spectra)
                    .flat_map(|(o, r)| {
                        o.iter().zip(&r.exponents).zip(&r.stderr).map(|((x, y), e)| {
                            (x - y).abs() / (cfg.oracle_sigmas * e).max(cfg.oracle_floor)
                        })
                    })
                    .fold(0.0, f64::max);
                verdicts.push(Verdict::new(
                    vid("oracle"),
                    "oseledets: computed exponents agree with the closed form",
                    worst < 1.0,
                    format!(
                        "max |computed − closed form| is {worst:.3} of max({}·stderr, {:e})",
                        cfg.oracle_sigmas, cfg.oracle_floor
                    ),
                ));
            }
            SuiteRole::Informative => {
                verdicts.push(Verdict::new(
                    vid("informative"),
                    "experiments: the criterion is sufficient, not necessary (informative)",
                    true,
                    format!("simplicity={} all_simple={all_simple}", run.simplicity),
                ));
            }
        }
        results.push(json!({
            "member": member.name,
            "role": format!("{:?}", member.role).to_lowercase(),
            "dim": run.dim,
            "simplicity": run.simplicity,
            "pinching": run.pinching,
            "twisting": run.twisting,
            "oracle": run.oracle,
            "spectra": cfg.measures.iter().zip(&run.spectra).map(|(m, r)| json!({
                "measure": m.label(),
                "exponents": r.exponents,
                "stderr": r.stderr,
                "multiplicities": multiplicity_cluster(&r.exponents, gap_tol),
                "volume_residual": r.volume_residual,
            })).collect::<Vec<_>>(),
        }));
    }
    Ok((verdicts, vec![table], json!({ "steps": cfg.steps, "gap_tol": gap_tol, "members": results })))
}
