use super::{SftSpec, Word};
use crate::error::{Error, Result};
use crate::linalg::{null_space, Matrix};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Shift-invariant measures that can report cylinder weights `μ[w]` (index 0 at `w₀`).
pub trait InvariantMeasure {
    fn alphabet_size(&self) -> usize;
    fn cylinder(&self, word: &[u8]) -> f64;
}

/// A stationary Markov chain on the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasureRecord {
    stochastic: Matrix,
    stationary: Vec<f64>,
    entropy: f64,
    pressure: f64,
}

impl MarkovMeasureRecord {
    /// Measure from a row-stochastic matrix; `pressure` is 0, i.e. the chain is read as the
    /// equilibrium state of the potential `log P_ij`.
    pub fn from_stochastic(stochastic: Matrix) -> Result<Self> {
        Self::with_pressure(stochastic, 0.0)
    }

    fn with_pressure(mut p: Matrix, pressure: f64) -> Result<Self> {
        let m = p.nrows();
        if p.ncols() != m || m == 0 {
            return Err(Error::DimensionMismatch("stochastic matrix must be square".into()));
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("stochastic entries must be nonnegative".into()));
        }
        for i in 0..m {
            let s: f64 = p.row(i).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}")));
            }
            p.row_mut(i).scale_mut(1.0 / s);
        }
        let stationary = stationary_vector(&p)?;
        let mut entropy = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = p[(i, j)];
                if v > 0.0 {
                    entropy -= stationary[i] * v * v.ln();
                }
            }
        }
        Ok(MarkovMeasureRecord { stochastic: p, stationary, entropy, pressure })
    }

    pub fn bernoulli(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("Bernoulli weights must be positive".into()));
        }
        let m = weights.len();
        Self::from_stochastic(Matrix::from_fn(m, m, |_, j| weights[j] / total))
    }

    /// Checks that every positive transition is allowed by the subshift.
    pub fn compatible_with(&self, spec: &SftSpec) -> bool {
        let m = self.stochastic.nrows();
        m == spec.alphabet_size()
            && (0..m).all(|i| (0..m).all(|j| self.stochastic[(i, j)] == 0.0 || spec.allowed(i as u8, j as u8)))
    }

    pub fn stochastic(&self) -> &Matrix {
        &self.stochastic
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }
}

impl InvariantMeasure for MarkovMeasureRecord {
    fn alphabet_size(&self) -> usize {
        self.stochastic.nrows()
    }

    fn cylinder(&self, word: &[u8]) -> f64 {
        cylinder_measure(self, word)
    }
}

fn stationary_vector(p: &Matrix) -> Result<Vec<f64>> {
    let m = p.nrows();
    let mut a = p.transpose() - Matrix::identity(m, m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let mut pi = a.lu().solve(&rhs).ok_or(Error::NotPrimitive)?;
    for _ in 0..3 {
        pi = p.transpose() * pi;
        let s = pi.sum();
        pi /= s;
    }
    if pi.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NotPrimitive);
    }
    Ok(pi.iter().cloned().collect())
}

/// Perron root with positive right and left eigenvectors of a primitive nonnegative matrix.
fn perron_data(l: &Matrix) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let m = l.nrows();
    let lambda = crate::linalg::eigenvalues(l)
        .iter()
        .filter(|z| z.im == 0.0)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lambda > 0.0) {
        return Err(Error::NotPrimitive);
    }
    let positive = |v: Matrix| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    };
    let (r, _) = null_space(&(l - Matrix::identity(m, m) * lambda), 1);
    let (lv, _) = null_space(&(l.transpose() - Matrix::identity(m, m) * lambda), 1);
    let mut r = nalgebra::DVector::from_vec(positive(r));
    let mut lv = nalgebra::DVector::from_vec(positive(lv));
    // polish with a few power steps
    for _ in 0..4 {
        r = l * &r / lambda;
        lv = l.transpose() * &lv / lambda;
    }
    if r.iter().chain(lv.iter()).any(|v| !(*v > 0.0)) {
        return Err(Error::NotPrimitive);
    }
    Ok((lambda, r.iter().cloned().collect(), lv.iter().cloned().collect()))
}

/// Measure of maximal entropy.
pub fn parry_measure(spec: &SftSpec) -> Result<MarkovMeasureRecord> {
    let m = spec.alphabet_size();
    gibbs_locally_constant(spec, &Matrix::zeros(m, m))
}

/// Equilibrium state of the potential `φ(x₀, x₁)`; entries of `phi` on forbidden transitions
/// are ignored.
pub fn gibbs_locally_constant(spec: &SftSpec, phi: &Matrix) -> Result<MarkovMeasureRecord> {
    if !spec.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let m = spec.alphabet_size();
    if phi.nrows() != m || phi.ncols() != m {
        return Err(Error::DimensionMismatch(format!("potential must be {m}x{m}")));
    }
    let l = Matrix::from_fn(m, m, |i, j| if spec.allowed(i as u8, j as u8) { phi[(i, j)].exp() } else { 0.0 });
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("potential must be finite on allowed transitions".into()));
    }
    let (lambda, r, _) = perron_data(&l)?;
    let mut p = Matrix::from_fn(m, m, |i, j| l[(i, j)] * r[j] / (lambda * r[i]));
    for i in 0..m {
        let s: f64 = p.row(i).sum();
        p.row_mut(i).scale_mut(1.0 / s);
    }
    MarkovMeasureRecord::with_pressure(p, lambda.ln())
}

/// `π_{w₀} Π P_{wₖ wₖ₊₁}`; 0 for words the chain cannot produce.
pub fn cylinder_measure(mu: &MarkovMeasureRecord, word: &[u8]) -> f64 {
    let m = mu.stochastic.nrows();
    if word.is_empty() {
        return 1.0;
    }
    if word.iter().any(|&a| a as usize >= m) {
        return 0.0;
    }
    let mut v = mu.stationary[word[0] as usize];
    for p in word.windows(2) {
        v *= mu.stochastic[(p[0] as usize, p[1] as usize)];
    }
    v
}

/// Largest ratio `max(r, 1/r)` of `μ[w] / exp(−|w|·P + Σφ)` over admissible words up to `max_len`.
pub fn gibbs_bound_constant(spec: &SftSpec, mu: &MarkovMeasureRecord, phi: &Matrix, max_len: usize) -> f64 {
    let mut c = 1.0f64;
    for len in 1..=max_len {
        for w in spec.admissible_words(len) {
            let sum: f64 = w.windows(2).map(|p| phi[(p[0] as usize, p[1] as usize)]).sum();
            let r = cylinder_measure(mu, &w) / (-(len as f64) * mu.pressure + sum).exp();
            c = c.max(r).max(1.0 / r);
        }
    }
    c
}

/// A word sampled from the stationary chain.
pub fn sample_orbit(mu: &MarkovMeasureRecord, length: usize, seed: u64) -> Word {
    let m = mu.stochastic.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = WeightedIndex::new(&mu.stationary).expect("stationary vector is a distribution");
    let rows: Vec<WeightedIndex<f64>> = (0..m)
        .map(|i| WeightedIndex::new(mu.stochastic.row(i).iter().cloned()).expect("rows are distributions"))
        .collect();
    let mut out = Vec::with_capacity(length);
    if length == 0 {
        return out;
    }
    let mut a = start.sample(&mut rng);
    out.push(a as u8);
    for _ in 1..length {
        a = rows[a].sample(&mut rng);
        out.push(a as u8);
    }
    out
}

/// Uniform measure on the orbit of a periodic point.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbitMeasure {
    word: Word,
    alphabet: usize,
}

impl PeriodicOrbitMeasure {
    pub fn new(word: &[u8], spec: &SftSpec) -> Result<Self> {
        spec.check_cyclic(word)?;
        Ok(PeriodicOrbitMeasure { word: word.to_vec(), alphabet: spec.alphabet_size() })
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }
}

impl InvariantMeasure for PeriodicOrbitMeasure {
    fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    fn cylinder(&self, word: &[u8]) -> f64 {
        let l = self.word.len();
        let hits = (0..l).filter(|&s| word.iter().enumerate().all(|(k, &a)| self.word[(s + k) % l] == a)).count();
        hits as f64 / l as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parry_on_full_shifts_is_uniform() {
        for m in 2..5 {
            let spec = SftSpec::full(m, 0.5).unwrap();
            let mu = parry_measure(&spec).unwrap();
            assert!((mu.entropy() - (m as f64).ln()).abs() < 1e-12);
            assert!((mu.pressure() - (m as f64).ln()).abs() < 1e-12);
            for v in mu.stationary() {
                assert!((v - 1.0 / m as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parry_on_golden_mean() {
        let spec = SftSpec::golden_mean(0.5).unwrap();
        let mu = parry_measure(&spec).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((mu.entropy() - phi.ln()).abs() < 1e-12);
        assert_eq!(cylinder_measure(&mu, &[1, 1]), 0.0);
        // closed form: π = (φ²/(1+φ²), 1/(1+φ²))
        assert!((mu.stationary()[0] - phi * phi / (1.0 + phi * phi)).abs() < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let spec = SftSpec::full(2, 0.5).unwrap();
        let c = 0.7;
        let mu = gibbs_locally_constant(&spec, &Matrix::from_element(2, 2, c)).unwrap();
        assert!((mu.pressure() - (2f64.ln() + c)).abs() < 1e-12);
        assert!((cylinder_measure(&mu, &[0, 1]) - 0.25).abs() < 1e-12);

        let zero = gibbs_locally_constant(&spec, &Matrix::zeros(2, 2)).unwrap();
        let parry = parry_measure(&spec).unwrap();
        assert_eq!(zero, parry);

        let w = [1.0 / 3.0, 2.0 / 3.0];
        let phi = Matrix::from_fn(2, 2, |_, j| f64::ln(w[j]));
        let mu = gibbs_locally_constant(&spec, &phi).unwrap();
        assert!(mu.pressure().abs() < 1e-12);
        assert!((mu.stationary()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((cylinder_measure(&mu, &[1, 1, 0]) - 2.0 / 3.0 * 2.0 / 3.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_primitive_is_rejected() {
        let spec = SftSpec::from_matrix(&[vec![0, 1], vec![1, 0]], 0.5).unwrap();
        assert_eq!(parry_measure(&spec), Err(Error::NotPrimitive));
    }

    #[test]
    fn sampling_is_deterministic_and_matches_frequencies() {
        let spec = SftSpec::full(2, 0.5).unwrap();
        let phi = Matrix::from_row_slice(2, 2, &[0.3, -0.2, 0.1, 0.5]);
        let mu = gibbs_locally_constant(&spec, &phi).unwrap();
        let n = 1_000_000;
        let a = sample_orbit(&mu, n, 42);
        assert_eq!(a, sample_orbit(&mu, n, 42));
        assert_ne!(a[..64], sample_orbit(&mu, 64, 43)[..]);
        let tol1 = 3.0 / (n as f64).sqrt();
        let tol2 = 5.0 / (n as f64).sqrt();
        for s in 0..2u8 {
            let f = a.iter().filter(|&&x| x == s).count() as f64 / n as f64;
            assert!((f - mu.stationary()[s as usize]).abs() < tol1);
            for t in 0..2u8 {
                let f2 = a.windows(2).filter(|p| p[0] == s && p[1] == t).count() as f64 / (n - 1) as f64;
                assert!((f2 - cylinder_measure(&mu, &[s, t])).abs() < tol2);
            }
        }
    }

    #[test]
    fn gibbs_bound_is_finite() {
        let spec = SftSpec::golden_mean(0.5).unwrap();
        let phi = Matrix::from_row_slice(2, 2, &[0.4, -1.0, 0.8, 0.0]);
        let mu = gibbs_locally_constant(&spec, &phi).unwrap();
        let c = gibbs_bound_constant(&spec, &mu, &phi, 12);
        assert!(c.is_finite() && c >= 1.0 && c < 10.0);
    }

    #[test]
    fn periodic_orbit_measure() {
        let spec = SftSpec::full(2, 0.5).unwrap();
        let mu = PeriodicOrbitMeasure::new(&[0, 0, 1], &spec).unwrap();
        assert!((mu.cylinder(&[0]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu.cylinder(&[1, 0, 0, 1]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mu.cylinder(&[1, 1]), 0.0);
    }

    fn arb_chain() -> impl Strategy<Value = MarkovMeasureRecord> {
        proptest::collection::vec(0.05f64..1.0, 9).prop_map(|v| {
            let p = Matrix::from_fn(3, 3, |i, j| v[3 * i + j] / (v[3 * i] + v[3 * i + 1] + v[3 * i + 2]));
            MarkovMeasureRecord::from_stochastic(p).unwrap()
        })
    }

    proptest! {
        #[test]
        fn stationarity_and_row_sums(mu in arb_chain()) {
            let pi = nalgebra::RowDVector::from_row_slice(mu.stationary());
            let moved = &pi * mu.stochastic();
            prop_assert!((moved - &pi).amax() < 1e-12);
            for i in 0..3 {
                prop_assert!((mu.stochastic().row(i).sum() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn markov_product_structure(
            mu in arb_chain(),
            u in proptest::collection::vec(0u8..3, 1..4),
            v in proptest::collection::vec(0u8..3, 1..4),
            w in proptest::collection::vec(0u8..3, 1..4),
        ) {
            let cat = |a: &[u8], b: &[u8]| [a, b].concat();
            let lhs = cylinder_measure(&mu, &cat(&cat(&u, &v), &w)) * cylinder_measure(&mu, &v);
            let rhs = cylinder_measure(&mu, &cat(&u, &v)) * cylinder_measure(&mu, &cat(&v, &w));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn cylinders_are_consistent_and_shift_invariant(mu in arb_chain(), w in proptest::collection::vec(0u8..3, 1..10)) {
            let ext: f64 = (0..3u8).map(|a| cylinder_measure(&mu, &[w.clone(), vec![a]].concat())).sum();
            prop_assert!((ext - cylinder_measure(&mu, &w)).abs() < 1e-12);
            let pre: f64 = (0..3u8).map(|a| cylinder_measure(&mu, &[vec![a], w.clone()].concat())).sum();
            prop_assert!((pre - cylinder_measure(&mu, &w)).abs() < 1e-12);
        }
    }
}
