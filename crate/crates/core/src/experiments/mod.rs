//! Config-driven experiments with machine-readable reports.

mod e1;
mod e2;
mod e3;
mod e4;
mod e5;

pub use e1::{run_e1, E1Config};
pub use e2::{run_e2, E2Config};
pub use e3::{run_e3, E3Config};
pub use e4::{run_e4, E4Config};
pub use e5::{run_e5, E5Config};

use crate::cocycle::CocycleSpec;
use crate::error::{Error, Result};
use crate::linalg::{from_rows, inverse, Matrix};
use crate::shift::{gibbs_locally_constant, parry_measure, MarkovMeasureRecord, SftSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5];

    pub fn name(self) -> &'static str {
        match self {
            Self::E1 => "E1",
            Self::E2 => "E2",
            Self::E3 => "E3",
            Self::E4 => "E4",
            Self::E5 => "E5",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::E1 => "simplicity criterion vs. computed Lyapunov spectrum",
            Self::E2 => "rotation propagation along homoclinic closed words",
            Self::E3 => "closing, exponential shadowing and period differences",
            Self::E4 => "suspension flows: measure lift and time-change scaling",
            Self::E5 => "continuity of rotation numbers along perturbation ladders",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}` (expected E1..E5)")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    pub e1: Option<E1Config>,
    pub e2: Option<E2Config>,
    pub e3: Option<E3Config>,
    pub e4: Option<E4Config>,
    pub e5: Option<E5Config>,
}

/// A parsed config together with the hash of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

impl ExperimentConfig {
    /// Parses and validates; parse errors carry the line and column of the offending input.
    pub fn parse(text: &str) -> Result<LoadedConfig> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(LoadedConfig { config, sha256 })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn experiments(&self) -> Vec<ExperimentId> {
        let present = [self.e1.is_some(), self.e2.is_some(), self.e3.is_some(), self.e4.is_some(), self.e5.is_some()];
        ExperimentId::ALL.into_iter().zip(present).filter(|(_, p)| *p).map(|(id, _)| id).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.experiments().is_empty() {
            return Err(Error::Config("config defines no experiment section ([e1] … [e5])".into()));
        }
        let ctx = |id: &str, e: Error| Error::Config(format!("[{id}] {e}"));
        if let Some(c) = &self.e1 {
            c.validate().map_err(|e| ctx("e1", e))?;
        }
        if let Some(c) = &self.e2 {
            c.validate().map_err(|e| ctx("e2", e))?;
        }
        if let Some(c) = &self.e3 {
            c.validate().map_err(|e| ctx("e3", e))?;
        }
        if let Some(c) = &self.e4 {
            c.validate().map_err(|e| ctx("e4", e))?;
        }
        if let Some(c) = &self.e5 {
            c.validate().map_err(|e| ctx("e5", e))?;
        }
        Ok(())
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    /// Full shift on this many symbols, unless `transitions` is given.
    pub alphabet: Option<usize>,
    pub transitions: Option<Vec<Vec<u8>>>,
    pub theta: f64,
}

impl ShiftConfig {
    pub fn build(&self) -> Result<SftSpec> {
        match (&self.transitions, self.alphabet) {
            (Some(t), _) => SftSpec::from_matrix(t, self.theta),
            (None, Some(m)) => SftSpec::full(m, self.theta),
            (None, None) => Err(Error::Config("shift needs `alphabet` or `transitions`".into())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Parry,
    Bernoulli { weights: Vec<f64> },
    Markov { stochastic: Vec<Vec<f64>> },
    Gibbs { potential: Vec<Vec<f64>> },
}

impl MeasureConfig {
    pub fn label(&self) -> String {
        match self {
            Self::Parry => "parry".into(),
            Self::Bernoulli { weights } => format!("bernoulli{weights:?}").replace(' ', ""),
            Self::Markov { .. } => "markov".into(),
            Self::Gibbs { .. } => "gibbs".into(),
        }
    }

    pub fn build(&self, spec: &SftSpec) -> Result<MarkovMeasureRecord> {
        let mu = match self {
            Self::Parry => parry_measure(spec)?,
            Self::Bernoulli { weights } => MarkovMeasureRecord::bernoulli(weights)?,
            Self::Markov { stochastic } => MarkovMeasureRecord::from_stochastic(from_rows(stochastic)?)?,
            Self::Gibbs { potential } => gibbs_locally_constant(spec, &from_rows(potential)?)?,
        };
        if !mu.compatible_with(spec) {
            return Err(Error::Config(format!("measure {} charges forbidden transitions", self.label())));
        }
        Ok(mu)
    }
}

/// Generators per symbol, optionally conjugated by a common change of basis.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorsConfig {
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub conjugate: Option<Vec<Vec<f64>>>,
}

impl GeneratorsConfig {
    pub fn build(&self, spec: &SftSpec) -> Result<CocycleSpec> {
        let mut ms: Vec<Matrix> = self.matrices.iter().map(|m| from_rows(m)).collect::<Result<_>>()?;
        if let Some(q) = &self.conjugate {
            let q = from_rows(q)?;
            let qi = inverse(&q)?;
            ms = ms.into_iter().map(|m| &q * m * &qi).collect();
        }
        CocycleSpec::from_symbols(spec.clone(), &ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    /// The property this verdict instantiates, as `module: property`.
    pub invariant: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: impl Into<String>, invariant: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { id: id.into(), invariant: invariant.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }
}

/// Shortest round-trip form, switching to exponent notation for very small or large values.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Formats a list of numbers as one CSV cell.
pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub title: String,
    pub provenance: Provenance,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub results: serde_json::Value,
}

impl ExperimentReport {
    pub fn new(
        id: ExperimentId,
        provenance: Provenance,
        verdicts: Vec<Verdict>,
        tables: Vec<Table>,
        results: serde_json::Value,
    ) -> Self {
        let passed = verdicts.iter().all(|v| v.passed);
        ExperimentReport { experiment: id, title: id.title().into(), provenance, passed, verdicts, tables, results }
    }

    /// Writes `<dir>/<id>/report.json` and one CSV per table; returns the files written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let sub = dir.join(self.experiment.name().to_ascii_lowercase());
        std::fs::create_dir_all(&sub).map_err(|e| Error::Config(format!("cannot create {}: {e}", sub.display())))?;
        let mut files = Vec::new();
        let json = serde_json::to_string_pretty(self).expect("reports serialize");
        let path = sub.join("report.json");
        std::fs::write(&path, json + "\n").map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        files.push(path);
        for t in &self.tables {
            let path = sub.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.to_csv()).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
            files.push(path);
        }
        Ok(files)
    }
}

/// Runs one experiment section of a loaded config.
pub fn run(loaded: &LoadedConfig, id: ExperimentId, seed: u64) -> Result<ExperimentReport> {
    let c = &loaded.config;
    let provenance =
        Provenance { config_sha256: loaded.sha256.clone(), seed, version: env!("CARGO_PKG_VERSION").to_string() };
    let missing = || Error::Config(format!("config has no [{}] section", id.name().to_ascii_lowercase()));
    let (verdicts, tables, results) = match id {
        ExperimentId::E1 => run_e1(c.e1.as_ref().ok_or_else(missing)?, seed)?,
        ExperimentId::E2 => run_e2(c.e2.as_ref().ok_or_else(missing)?, seed)?,
        ExperimentId::E3 => run_e3(c.e3.as_ref().ok_or_else(missing)?, seed)?,
        ExperimentId::E4 => run_e4(c.e4.as_ref().ok_or_else(missing)?, seed)?,
        ExperimentId::E5 => run_e5(c.e5.as_ref().ok_or_else(missing)?, seed)?,
    };
    Ok(ExperimentReport::new(id, provenance, verdicts, tables, results))
}

pub(crate) type Outcome = (Vec<Verdict>, Vec<Table>, serde_json::Value);

/// A roof over windows of a fixed length: `default` everywhere except the listed words.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoofConfig {
    #[serde(default = "one_usize")]
    pub window: usize,
    #[serde(default = "one_f64")]
    pub default: f64,
    #[serde(default)]
    pub values: std::collections::BTreeMap<String, f64>,
}

fn one_usize() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

impl Default for RoofConfig {
    fn default() -> Self {
        RoofConfig { window: 1, default: 1.0, values: Default::default() }
    }
}

impl RoofConfig {
    pub fn build(&self, spec: &SftSpec) -> Result<crate::suspension::RoofFunction> {
        if self.window == 0 {
            return Err(Error::Config("roof `window` must be positive".into()));
        }
        for key in self.values.keys() {
            let w = crate::shift::parse_word(key)?;
            if w.len() != self.window || !spec.is_admissible(&w) {
                return Err(Error::Config(format!("roof word `{key}` is not an admissible word of length {}", self.window)));
            }
        }
        let values = spec
            .admissible_words(self.window)
            .into_iter()
            .map(|w| {
                let v = self.values.get(&crate::shift::format_word(&w)).copied().unwrap_or(self.default);
                (w, v)
            })
            .collect();
        crate::suspension::RoofFunction::new(spec.clone(), self.window, values)
    }
}
