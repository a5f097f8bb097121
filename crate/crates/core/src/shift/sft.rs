use super::{format_word, Word};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A subshift of finite type with its metric base `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SftSpec {
    alphabet: usize,
    transitions: Vec<Vec<bool>>,
    theta: f64,
    primitive: bool,
}

impl SftSpec {
    pub fn new(transitions: Vec<Vec<bool>>, theta: f64) -> Result<Self> {
        let m = transitions.len();
        if m == 0 || m > 36 {
            return Err(Error::InvalidShift(format!("alphabet size {m} outside 1..=36")));
        }
        if transitions.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidShift("transition matrix is not square".into()));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidShift(format!("metric base {theta} outside (0, 1)")));
        }
        for i in 0..m {
            if !transitions[i].iter().any(|&b| b) {
                return Err(Error::InvalidShift(format!("symbol {i} has no successor")));
            }
            if !(0..m).any(|r| transitions[r][i]) {
                return Err(Error::InvalidShift(format!("symbol {i} has no predecessor")));
            }
        }
        let primitive = is_primitive(&transitions);
        Ok(SftSpec { alphabet: m, transitions, theta, primitive })
    }

    pub fn from_matrix(rows: &[Vec<u8>], theta: f64) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| v != 0).collect()).collect(), theta)
    }

    pub fn full(m: usize, theta: f64) -> Result<Self> {
        Self::new(vec![vec![true; m]; m], theta)
    }

    /// Two symbols with the word `11` forbidden.
    pub fn golden_mean(theta: f64) -> Result<Self> {
        Self::new(vec![vec![true, true], vec![true, false]], theta)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    pub fn allowed(&self, a: u8, b: u8) -> bool {
        (a as usize) < self.alphabet && (b as usize) < self.alphabet && self.transitions[a as usize][b as usize]
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.transitions
    }

    pub fn transition_matrix(&self) -> Matrix {
        Matrix::from_fn(self.alphabet, self.alphabet, |i, j| if self.transitions[i][j] { 1.0 } else { 0.0 })
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        w.iter().all(|&a| (a as usize) < self.alphabet) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn is_cyclically_admissible(&self, w: &[u8]) -> bool {
        !w.is_empty() && self.is_admissible(w) && self.allowed(w[w.len() - 1], w[0])
    }

    pub fn check_word(&self, w: &[u8]) -> Result<()> {
        if self.is_admissible(w) {
            Ok(())
        } else {
            Err(Error::InadmissibleWord(format_word(w)))
        }
    }

    pub fn check_cyclic(&self, w: &[u8]) -> Result<()> {
        if self.is_cyclically_admissible(w) {
            Ok(())
        } else {
            Err(Error::InadmissibleWord(format_word(w)))
        }
    }

    /// Number of admissible words of length `len`.
    pub fn count_words(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let m = self.alphabet;
        let mut counts = vec![1u128; m];
        for _ in 1..len {
            let mut next = vec![0u128; m];
            for a in 0..m {
                for b in 0..m {
                    if self.transitions[a][b] {
                        next[b] = next[b].saturating_add(counts[a]);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |s, &c| s.saturating_add(c))
    }

    /// All admissible words of length `len` in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Word> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut stack: Vec<Word> = (0..self.alphabet as u8).rev().map(|a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            if w.len() == len {
                out.push(w);
                continue;
            }
            let last = *w.last().unwrap();
            for b in (0..self.alphabet as u8).rev() {
                if self.allowed(last, b) {
                    let mut n = w.clone();
                    n.push(b);
                    stack.push(n);
                }
            }
        }
        out
    }
}

fn is_primitive(t: &[Vec<bool>]) -> bool {
    let m = t.len();
    let bound = (m - 1) * (m - 1) + 1;
    let mut power = t.to_vec();
    for _ in 1..bound {
        let mut next = vec![vec![false; m]; m];
        for i in 0..m {
            for k in 0..m {
                if power[i][k] {
                    for j in 0..m {
                        next[i][j] |= t[k][j];
                    }
                }
            }
        }
        power = next;
    }
    power.iter().all(|r| r.iter().all(|&b| b))
}
