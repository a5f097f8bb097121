//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any criterion fails.

use cocycle_core::cocycle::{holonomy_constants, CocycleSpec, HoelderBump, HoelderPerturbation};
use cocycle_core::experiments::{run, ExperimentConfig, ExperimentId, ExperimentReport};
use cocycle_core::linalg::{exterior_power, op_norm, rotation2, twisting_check, twisting_witness, SymplecticForm};
use cocycle_core::oseledets::{closed_form_oracle_in_basis, default_gap_tol, lyapunov_qr};
use cocycle_core::rotation::theta_ell_rho_check;
use cocycle_core::shift::{gibbs_locally_constant, metric, MarkovMeasureRecord, SftSpec, SymbolicPoint};
use cocycle_core::suspension::{RoofFunction, SuspensionSystem};
use cocycle_core::Matrix;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&DVector::from_row_slice(v))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_shipped(id: ExperimentId) -> ExperimentReport {
    let loaded = ExperimentConfig::load(&config_path(&format!("{}.toml", id.name().to_ascii_lowercase())))
        .expect("shipped config loads");
    run(&loaded, id, loaded.config.seed).expect("shipped experiment runs")
}

fn verdict(report: &ExperimentReport, id: &str) -> bool {
    report.verdicts.iter().find(|v| v.id == id).map_or(false, |v| v.passed)
}

fn failing(report: &ExperimentReport) -> Vec<String> {
    report.verdicts.iter().filter(|v| !v.passed).map(|v| format!("{} ({})", v.id, v.detail)).collect()
}

// ---------------------------------------------------------------- closed-form exponents

/// Stationary vector of a stochastic matrix by power iteration on the transpose.
fn stationary(p: &Matrix) -> Vec<f64> {
    let m = p.nrows();
    let mut v = DVector::from_element(m, 1.0 / m as f64);
    for _ in 0..100_000 {
        let next = p.transpose() * &v;
        let next = &next / next.sum();
        let done = (&next - &v).amax() < 1e-16;
        v = next;
        if done {
            break;
        }
    }
    v.iter().copied().collect()
}

/// Equilibrium transition matrix of `φ(i, j)` on the full shift, from a power-iterated
/// right Perron vector of `exp φ`.
fn gibbs_transitions(phi: &Matrix, allowed: impl Fn(usize, usize) -> bool) -> Matrix {
    let m = phi.nrows();
    let l = Matrix::from_fn(m, m, |i, j| if allowed(i, j) { phi[(i, j)].exp() } else { 0.0 });
    let mut r = DVector::from_element(m, 1.0);
    let mut lambda = 1.0;
    for _ in 0..100_000 {
        let next = &l * &r;
        lambda = next.norm() / r.norm();
        let next = &next / next.norm();
        let done = (&next - &r).amax() < 1e-16;
        r = next;
        if done {
            break;
        }
    }
    Matrix::from_fn(m, m, |i, j| l[(i, j)] * r[j] / (lambda * r[i]))
}

/// Per-symbol moduli of simultaneously diagonal(izable) generators; a pair `(c, c)` marks a
/// conformal block of modulus `c`.
struct DiagonalCase {
    name: &'static str,
    spec: SftSpec,
    measure: MarkovMeasureRecord,
    /// Symbol frequencies computed here, not by the library.
    frequencies: Vec<f64>,
    moduli: Vec<Vec<f64>>,
    generators: Vec<Matrix>,
    /// Change of basis that block-diagonalizes the generators.
    basis: Matrix,
}

impl DiagonalCase {
    fn oracle(&self) -> Vec<f64> {
        let d = self.moduli[0].len();
        let mut out: Vec<f64> =
            (0..d).map(|i| self.frequencies.iter().zip(&self.moduli).map(|(f, m)| f * m[i].abs().ln()).sum()).collect();
        out.sort_by(|a, b| b.partial_cmp(a).unwrap());
        out
    }
}

fn conjugate(q: &Matrix, ms: &[Matrix]) -> (Vec<Matrix>, Matrix) {
    let qi = q.clone().try_inverse().unwrap();
    (ms.iter().map(|m| q * m * &qi).collect(), q.clone())
}

fn plain(ms: &[Matrix]) -> (Vec<Matrix>, Matrix) {
    let d = ms[0].nrows();
    (ms.to_vec(), Matrix::identity(d, d))
}

fn block_conformal(c: f64, angle: f64, rest: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(2 + rest.len(), 2 + rest.len());
    m.view_mut((0, 0), (2, 2)).copy_from(&(rotation2(angle) * c));
    for (i, v) in rest.iter().enumerate() {
        m[(2 + i, 2 + i)] = *v;
    }
    m
}

fn diagonal_cases() -> Vec<DiagonalCase> {
    let full2 = SftSpec::full(2, 0.5).unwrap();
    let full3 = SftSpec::full(3, 0.5).unwrap();
    let golden = SftSpec::golden_mean(0.5).unwrap();
    let q2 = Matrix::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 1.2]);
    let q3 = Matrix::from_row_slice(3, 3, &[1.0, 0.2, -0.1, 0.3, 1.0, 0.4, -0.2, 0.1, 1.0]);
    let q4 = Matrix::from_row_slice(
        4,
        4,
        &[1.0, 0.3, -0.2, 0.1, 0.2, 1.0, 0.4, -0.3, -0.1, 0.2, 1.0, 0.5, 0.3, -0.4, 0.1, 1.0],
    );
    let markov = Matrix::from_row_slice(2, 2, &[0.9, 0.1, 0.4, 0.6]);
    let phi2 = Matrix::from_row_slice(2, 2, &[0.2, -0.4, 0.5, 0.0]);
    let phi3 = Matrix::from_row_slice(3, 3, &[0.0, 0.3, -0.2, 0.1, 0.0, 0.4, -0.5, 0.2, 0.0]);
    let golden_allowed = |i: usize, j: usize| !(i == 1 && j == 1);
    let parry_golden = gibbs_transitions(&Matrix::zeros(2, 2), golden_allowed);
    let gibbs2 = gibbs_transitions(&phi2, |_, _| true);
    let gibbs3 = gibbs_transitions(&phi3, |_, _| true);

    let bern = |w: &[f64]| MarkovMeasureRecord::bernoulli(w).unwrap();
    let mk = |name,
              spec: &SftSpec,
              measure: MarkovMeasureRecord,
              frequencies: Vec<f64>,
              moduli: Vec<Vec<f64>>,
              (generators, basis): (Vec<Matrix>, Matrix)| {
        DiagonalCase { name, spec: spec.clone(), measure, frequencies, moduli, generators, basis }
    };
    let d2 = vec![vec![2.0, 0.5], vec![3.0, 1.0 / 3.0]];
    let d2m: Vec<Matrix> = d2.iter().map(|v| diag(v)).collect();
    let d3 = vec![vec![2.0, 1.0, 0.25], vec![0.5, 1.5, 3.0], vec![-1.2, 0.8, 2.5]];
    let d3m: Vec<Matrix> = d3.iter().map(|v| diag(v)).collect();
    let d4 = vec![vec![4.0, 2.0, 0.5, 0.25], vec![1.5, 0.7, 3.0, 0.2]];
    let d4m: Vec<Matrix> = d4.iter().map(|v| diag(v)).collect();
    let gold = vec![vec![1.8, -0.6, 0.3], vec![0.4, 2.2, 1.1]];
    let goldm: Vec<Matrix> = gold.iter().map(|v| diag(v)).collect();

    vec![
        mk("d2 diag, Bernoulli(1/2)", &full2, bern(&[0.5, 0.5]), vec![0.5, 0.5], d2.clone(), plain(&d2m)),
        mk("d2 diag, Bernoulli(1/3,2/3)", &full2, bern(&[1.0 / 3.0, 2.0 / 3.0]), vec![1.0 / 3.0, 2.0 / 3.0], d2.clone(), plain(&d2m)),
        mk(
            "d2 conjugated, Markov",
            &full2,
            MarkovMeasureRecord::from_stochastic(markov.clone()).unwrap(),
            stationary(&markov),
            d2.clone(),
            conjugate(&q2, &d2m),
        ),
        mk("d2 conjugated, Gibbs", &full2, gibbs_locally_constant(&full2, &phi2).unwrap(), stationary(&gibbs2), d2, conjugate(&q2, &d2m)),
        mk("d3 diag, Bernoulli(0.2,0.3,0.5)", &full3, bern(&[0.2, 0.3, 0.5]), vec![0.2, 0.3, 0.5], d3.clone(), plain(&d3m)),
        mk("d3 conjugated, Gibbs", &full3, gibbs_locally_constant(&full3, &phi3).unwrap(), stationary(&gibbs3), d3, conjugate(&q3, &d3m)),
        mk(
            "d3 conjugated, golden-mean Parry",
            &golden,
            cocycle_core::shift::parry_measure(&golden).unwrap(),
            stationary(&parry_golden),
            gold,
            conjugate(&q3, &goldm),
        ),
        mk("d4 diag, Gibbs", &full2, gibbs_locally_constant(&full2, &phi2).unwrap(), stationary(&gibbs2), d4.clone(), plain(&d4m)),
        mk(
            "d4 conjugated, Markov",
            &full2,
            MarkovMeasureRecord::from_stochastic(markov.clone()).unwrap(),
            stationary(&markov),
            d4,
            conjugate(&q4, &d4m),
        ),
        mk(
            "d4 conformal block, Bernoulli(0.4,0.6)",
            &full2,
            bern(&[0.4, 0.6]),
            vec![0.4, 0.6],
            vec![vec![1.5, 1.5, 3.0, 0.25], vec![0.8, 0.8, 0.5, 2.0]],
            plain(&[block_conformal(1.5, 0.7, &[3.0, 0.25]), block_conformal(0.8, 2.1, &[0.5, 2.0])]),
        ),
    ]
}

fn criterion_oracle() -> Outcome {
    let cases = diagonal_cases();
    let steps = 1_000_000;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        let a = CocycleSpec::from_symbols(c.spec.clone(), &c.generators).unwrap();
        let oracle = c.oracle();
        // the library's integral must reproduce the independent one
        let lib = closed_form_oracle_in_basis(&a, &c.measure, &c.basis).unwrap();
        if lib.iter().zip(&oracle).any(|(x, y)| (x - y).abs() > 1e-10) {
            bad.push(format!("{}: library closed form {lib:?} vs {oracle:?}", c.name));
        }
        let r = lyapunov_qr(&a, &c.measure, steps, 1000 + k as u64).unwrap();
        for ((e, o), se) in r.exponents.iter().zip(&oracle).zip(&r.stderr) {
            let tol = (3.0 * se).max(1e-3);
            worst = worst.max((e - o).abs() / tol);
            if (e - o).abs() >= tol {
                bad.push(format!("{}: {e} vs {o} (tol {tol:e})", c.name));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} cocycles at N = 10⁶, worst |qr − oracle| = {worst:.3} of max(3·stderr, 1e-3){}", cases.len(), fmt_bad(&bad)),
    )
}

fn fmt_bad(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", bad.join(" | "))
    }
}

// ---------------------------------------------------------------- experiments

fn criterion_e1(report: &ExperimentReport) -> Outcome {
    let simple: Vec<_> = report.results["members"].as_array().unwrap().iter().filter(|m| m["role"] == "simple").collect();
    let dims: std::collections::BTreeSet<u64> = simple.iter().map(|m| m["dim"].as_u64().unwrap()).collect();
    let gap_tol = default_gap_tol(1_000_000);
    let steps_ok = report.results["steps"] == 1_000_000 && report.results["gap_tol"].as_f64() == Some(gap_tol);
    let all_ones = simple.iter().filter(|m| m["simplicity"] == true).all(|m| {
        m["spectra"].as_array().unwrap().iter().all(|s| s["multiplicities"].as_array().unwrap().iter().all(|k| k == 1))
    });
    let control = report.verdicts.iter().filter(|v| v.id.ends_with(":double-exponent")).all(|v| v.passed)
        && report.verdicts.iter().any(|v| v.id.ends_with(":double-exponent"));
    let ok = steps_ok && report.passed && all_ones && control && dims == [2, 3, 4].into_iter().collect();
    outcome(
        ok,
        format!(
            "{} simple members (d ∈ {dims:?}) all-ones at gap_tol {gap_tol:e}: {all_ones}; control double exponent: {control}{}",
            simple.len(),
            fmt_bad(&failing(report))
        ),
    )
}

fn criterion_theta_ell_rho() -> Outcome {
    let full2 = SftSpec::full(2, 0.5).unwrap();
    let spiral = |a: f64, s: f64| rotation2(a) * diag(&[s, 1.0 / s]);
    let a2 = CocycleSpec::from_symbols(full2.clone(), &[spiral(0.9, 1.3), spiral(1.4, 0.8)]).unwrap();
    let a4 = CocycleSpec::from_symbols(
        full2.clone(),
        &[block_conformal(1.1, 0.8, &[2.0, 0.5]), block_conformal(0.9, 1.9, &[0.4, 3.0])],
    )
    .unwrap();
    let sys = SuspensionSystem::new(RoofFunction::from_symbols(full2, &[1.0, 1.7]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    while checked < 50 && attempts < 10_000 {
        attempts += 1;
        let len = rng.random_range(1..=12);
        let word: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        let a = if checked % 5 == 4 { &a4 } else { &a2 };
        let r = theta_ell_rho_check(a, &sys, &word).unwrap();
        if r.skipped {
            continue;
        }
        checked += 1;
        worst = worst.max(r.residual.unwrap());
    }
    outcome(checked == 50 && worst < 1e-8, format!("{checked} complex return blocks, max residual {worst:e}"))
}

fn criterion_e2(report: &ExperimentReport) -> Outcome {
    let ids = [
        "commuting:increment",
        "commuting:smallest-n",
        "commuting:slope",
        "commuting:pinching",
        "symplectic:pinching",
        "symplectic:simplicity",
    ];
    let missing: Vec<&str> = ids.iter().copied().filter(|id| !verdict(report, id)).collect();
    outcome(
        missing.is_empty() && report.passed,
        format!("required verdicts {}{}", if missing.is_empty() { "all pass".into() } else { format!("missing/failed {missing:?}") }, fmt_bad(&failing(report))),
    )
}

// ---------------------------------------------------------------- holonomies

fn random_word(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<u8> {
    let n = rng.random_range(lo..hi);
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Three points with a common forward tail from index `fwd.len()` on.
fn stable_triple(rng: &mut ChaCha8Rng) -> [SymbolicPoint; 3] {
    let fwd = random_word(rng, 0, 5);
    let right = random_word(rng, 1, 3);
    std::array::from_fn(|_| {
        let head = random_word(rng, 1, 4);
        let left = random_word(rng, 1, 3);
        let s = -(head.len() as i64);
        let mut core = head;
        core.extend_from_slice(&fwd);
        SymbolicPoint::new(left, core, right.clone(), s).unwrap()
    })
}

fn mirror(p: &SymbolicPoint) -> SymbolicPoint {
    let (lo, hi) = (p.core_start(), p.core_end());
    let core: Vec<u8> = (lo..hi).rev().map(|i| p.symbol(i)).collect();
    let mut left = p.right_period().to_vec();
    left.reverse();
    let mut right = p.left_period().to_vec();
    right.reverse();
    SymbolicPoint::new(left, core, right, -hi + 1).unwrap()
}

fn criterion_holonomy() -> Outcome {
    let full = SftSpec::full(2, 0.25).unwrap();
    let a0 = diag(&[1.5, 1.0 / 1.5]);
    let a1 = rotation2(0.7) * diag(&[1.2, 1.0 / 1.2]);
    let lc = CocycleSpec::from_symbols(full.clone(), &[a0.clone(), a1.clone()]).unwrap();
    let hoelder = CocycleSpec::from_symbols(full, &[a0, a1])
        .unwrap()
        .with_hoelder(HoelderPerturbation {
            exponent: 1.0,
            bumps: vec![HoelderBump { word: vec![0], amplitude: 0.05, direction: Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]) }],
        })
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let id = Matrix::identity(2, 2);
    let mut excess = f64::NEG_INFINITY; // worst (residual − allowed)
    let mut bound_checks = 0;
    let pairs = 1000;
    for _ in 0..pairs {
        let [x, y, z] = stable_triple(&mut rng);
        for (a, tol, slack) in [(&lc, 1e-12, 1e-10), (&hoelder, 1e-13, 1e-10)] {
            let c = holonomy_constants(a).unwrap();
            // stable
            let hxy = c.stable(a, &x, &y, tol).unwrap();
            let hyz = c.stable(a, &y, &z, tol).unwrap();
            let hxz = c.stable(a, &x, &z, tol).unwrap();
            let allowed = hxy.truncation_error * op_norm(&hyz.matrix) + op_norm(&hxy.matrix) * hyz.truncation_error + hxz.truncation_error;
            excess = excess.max((&hxz.matrix - &hxy.matrix * &hyz.matrix).amax() - allowed - slack);
            let shifted = c.stable(a, &x.shift(1), &y.shift(1), tol).unwrap();
            let pushed = a.value_at(&x, 0) * &hxy.matrix * a.inverse_at(&y, 0);
            let allowed =
                shifted.truncation_error + op_norm(&a.value_at(&x, 0)) * hxy.truncation_error * op_norm(&a.inverse_at(&y, 0));
            excess = excess.max((&shifted.matrix - pushed).amax() - allowed - slack);
            if x.forward_agreement(&y).map_or(false, |i| i <= 0) && !a.is_locally_constant() {
                bound_checks += 1;
                let dist = metric(&x, &y, a.base());
                excess = excess.max(op_norm(&(&hxy.matrix - &id)) - c.c1 * dist - hxy.truncation_error);
            }
            // unstable, on the mirrored triple
            let (u, v, w) = (mirror(&x), mirror(&y), mirror(&z));
            let huv = c.unstable(a, &u, &v, tol).unwrap();
            let hvw = c.unstable(a, &v, &w, tol).unwrap();
            let huw = c.unstable(a, &u, &w, tol).unwrap();
            let allowed = huv.truncation_error * op_norm(&hvw.matrix) + op_norm(&huv.matrix) * hvw.truncation_error + huw.truncation_error;
            excess = excess.max((&huw.matrix - &huv.matrix * &hvw.matrix).amax() - allowed - slack);
            let back = c.unstable(a, &u.shift(-1), &v.shift(-1), tol).unwrap();
            let pushed = a.value_at(&u, -1) * &back.matrix * a.inverse_at(&v, -1);
            let allowed =
                huv.truncation_error + op_norm(&a.value_at(&u, -1)) * back.truncation_error * op_norm(&a.inverse_at(&v, -1));
            excess = excess.max((&huv.matrix - pushed).amax() - allowed - slack);
        }
    }
    outcome(
        excess <= 0.0,
        format!("{pairs} random triples × (locally constant, Hölder), {bound_checks} Hölder-bound checks; worst excess over allowance {excess:e}"),
    )
}

// ---------------------------------------------------------------- twisting / exterior powers

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect()).collect()
}

/// `ψ(span e_I) ⊕ span e_J = Rⁿ` for all `|I| + |J| = n`, by determinants of `[ψ e_I | e_J]`.
fn exhaustive_twisting(psi: &Matrix) -> bool {
    let n = psi.nrows();
    let scale = psi.singular_values().iter().product::<f64>().abs().max(1.0);
    (1..n).all(|k| {
        subsets(n, k).iter().all(|i| {
            subsets(n, n - k).iter().all(|j| {
                let mut m = Matrix::zeros(n, n);
                for (c, &col) in i.iter().enumerate() {
                    m.set_column(c, &psi.column(col));
                }
                for (c, &e) in j.iter().enumerate() {
                    m[(e, k + c)] = 1.0;
                }
                m.determinant().abs() > 1e-9 * scale
            })
        })
    })
}

fn criterion_twisting() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in 1..=3 {
        let w = twisting_witness(n).unwrap();
        let top = w.view((0, 0), (n, n)).into_owned();
        let symplectic = SymplecticForm::standard(n).residual(&w) < 1e-12;
        let invariant = w.view((n, 0), (n, n)).amax() == 0.0;
        let pass = twisting_check(&top).twisted && exhaustive_twisting(&top) && symplectic && invariant;
        ok &= pass;
        notes.push(format!("n={n}:{pass}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=6);
        let k = rng.random_range(1..=d);
        let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let lhs = exterior_power(&(&a * &b), k).unwrap();
        let rhs = exterior_power(&a, k).unwrap() * exterior_power(&b, k).unwrap();
        worst = worst.max((lhs - rhs).amax());
    }
    ok &= worst < 1e-10;
    outcome(ok, format!("witnesses {}; functoriality residual {worst:e} over 1000 pairs, d ≤ 6", notes.join(" ")))
}

// ---------------------------------------------------------------- reproducibility

fn write_all(reports: &BTreeMap<ExperimentId, ExperimentReport>, dir: &Path) -> Vec<PathBuf> {
    reports.values().flat_map(|r| r.write(dir).unwrap()).collect()
}

fn criterion_reproducible(first: &BTreeMap<ExperimentId, ExperimentReport>) -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files = write_all(first, a.path());
    let second: BTreeMap<_, _> = ExperimentId::ALL.iter().map(|&id| (id, run_shipped(id))).collect();
    write_all(&second, b.path());
    let differing: Vec<String> = files
        .iter()
        .filter_map(|f| {
            let rel = f.strip_prefix(a.path()).unwrap();
            (std::fs::read(f).unwrap() != std::fs::read(b.path().join(rel)).unwrap()).then(|| rel.display().to_string())
        })
        .collect();
    outcome(differing.is_empty(), format!("{} report files compared{}", files.len(), fmt_bad(&differing)))
}

// ---------------------------------------------------------------- driver

struct Runner {
    failed: usize,
    total: usize,
}

impl Runner {
    fn record(&mut self, n: usize, name: &str, budget_s: u64, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let o = f();
        let elapsed = t.elapsed();
        let pass = o.passed && elapsed <= Duration::from_secs(budget_s);
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!(
            "{} {n:>2} {name}: {} [{:.1}s / {budget_s}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
}

fn shipped_outcome(r: &ExperimentReport) -> Outcome {
    outcome(r.passed, format!("{} verdicts{}", r.verdicts.len(), fmt_bad(&failing(r))))
}

fn main() {
    let mut reports = BTreeMap::new();
    let mut keep = |r: ExperimentReport| {
        reports.insert(r.experiment, r.clone());
        r
    };
    let mut runner = Runner { failed: 0, total: 0 };
    runner.record(1, "oracle agreement", 60, criterion_oracle);
    runner.record(2, "simplicity vs spectrum (E1)", 300, || criterion_e1(&keep(run_shipped(ExperimentId::E1))));
    runner.record(3, "θ = ℓρ identity", 30, criterion_theta_ell_rho);
    runner.record(4, "rotation propagation (E2)", 300, || criterion_e2(&keep(run_shipped(ExperimentId::E2))));
    runner.record(5, "holonomy identities", 60, criterion_holonomy);
    runner.record(6, "twisting brute force", 30, criterion_twisting);
    runner.record(7, "shadowing (E3)", 120, || shipped_outcome(&keep(run_shipped(ExperimentId::E3))));
    runner.record(8, "suspension scaling (E4)", 120, || shipped_outcome(&keep(run_shipped(ExperimentId::E4))));
    runner.record(9, "continuity ladders (E5)", 120, || shipped_outcome(&keep(run_shipped(ExperimentId::E5))));
    runner.record(10, "reproducibility", 600, || criterion_reproducible(&reports));
    println!("acceptance: {} passed, {} failed", runner.total - runner.failed, runner.failed);
    if runner.failed > 0 {
        std::process::exit(1);
    }
}
