use super::{lcm, primitive_root, SftSpec, Word};
use crate::error::{Error, Result};

/// An eventually periodic bi-infinite sequence `…LLL·core·RRR…`.
///
/// Positions below `core_start` repeat `left` so that position `core_start − 1` holds the
/// last symbol of `left`; positions from `core_start + |core|` on repeat `right` starting
/// with its first symbol. The representation is canonical: both periods are primitive,
/// the core is as short as possible and periodic points have `core_start = 0` with
/// `right[0] = x₀`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolicPoint {
    left: Word,
    core: Word,
    right: Word,
    core_start: i64,
}

impl SymbolicPoint {
    pub fn new(left: Word, core: Word, right: Word, core_start: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidArgument("periodic tails must be nonempty".into()));
        }
        let mut p = SymbolicPoint { left: primitive_root(&left), core, right: primitive_root(&right), core_start };
        p.canonicalize();
        Ok(p)
    }

    /// The periodic point with `x₀ … x_{|w|−1} = w`.
    pub fn periodic(word: &[u8]) -> Result<Self> {
        Self::new(word.to_vec(), Vec::new(), word.to_vec(), 0)
    }

    fn canonicalize(&mut self) {
        loop {
            if self.core.is_empty() && self.left == self.right {
                let p = self.right.len() as i64;
                let rot = (-self.core_start).rem_euclid(p) as usize;
                self.right.rotate_left(rot);
                self.left = self.right.clone();
                self.core_start = 0;
                return;
            }
            let next = if self.core.is_empty() { self.right[0] } else { self.core[0] };
            if next != self.left[0] {
                break;
            }
            self.left.rotate_left(1);
            self.core_start += 1;
            if self.core.is_empty() {
                self.right.rotate_left(1);
            } else {
                self.core.remove(0);
            }
        }
        while let (Some(&c), Some(&r)) = (self.core.last(), self.right.last()) {
            if c != r {
                break;
            }
            self.core.pop();
            self.right.rotate_right(1);
        }
        if self.core.is_empty() && self.left == self.right {
            self.canonicalize();
        }
    }

    pub fn left_period(&self) -> &[u8] {
        &self.left
    }

    pub fn core(&self) -> &[u8] {
        &self.core
    }

    pub fn right_period(&self) -> &[u8] {
        &self.right
    }

    pub fn core_start(&self) -> i64 {
        self.core_start
    }

    pub fn core_end(&self) -> i64 {
        self.core_start + self.core.len() as i64
    }

    pub fn is_periodic(&self) -> bool {
        self.core.is_empty() && self.left == self.right
    }

    /// Minimal period for periodic points.
    pub fn period(&self) -> Option<usize> {
        self.is_periodic().then(|| self.right.len())
    }

    pub fn symbol(&self, i: i64) -> u8 {
        if i < self.core_start {
            let k = (self.core_start - 1 - i) as usize % self.left.len();
            self.left[self.left.len() - 1 - k]
        } else if i < self.core_end() {
            self.core[(i - self.core_start) as usize]
        } else {
            self.right[((i - self.core_end()) as usize) % self.right.len()]
        }
    }

    /// Symbols at positions `start .. start + len`.
    pub fn window(&self, start: i64, len: usize) -> Word {
        (0..len as i64).map(|k| self.symbol(start + k)).collect()
    }

    pub fn shift(&self, k: i64) -> Self {
        let mut p = self.clone();
        p.core_start -= k;
        p.canonicalize();
        p
    }

    pub fn is_admissible_in(&self, spec: &SftSpec) -> bool {
        let lo = self.core_start - 2 * self.left.len() as i64 - 1;
        let hi = self.core_end() + 2 * self.right.len() as i64 + 1;
        spec.is_admissible(&self.window(lo, (hi - lo) as usize))
    }

    /// Smallest `i₀` with `xᵢ = yᵢ` for all `i ≥ i₀`; `None` when the forward tails differ
    /// and `Some(i64::MIN)` when the points are equal.
    pub fn forward_agreement(&self, other: &Self) -> Option<i64> {
        if self == other {
            return Some(i64::MIN);
        }
        let hi = self.core_end().max(other.core_end());
        let per = lcm(self.right.len(), other.right.len()) as i64;
        if (hi..hi + per).any(|i| self.symbol(i) != other.symbol(i)) {
            return None;
        }
        let lo = self.core_start.min(other.core_start) - lcm(self.left.len(), other.left.len()) as i64;
        let mut i = hi - 1;
        while i >= lo {
            if self.symbol(i) != other.symbol(i) {
                return Some(i + 1);
            }
            i -= 1;
        }
        Some(i64::MIN)
    }

    /// Largest `i₁` with `xᵢ = yᵢ` for all `i ≤ i₁`; `None` when the backward tails differ
    /// and `Some(i64::MAX)` when the points are equal.
    pub fn backward_agreement(&self, other: &Self) -> Option<i64> {
        if self == other {
            return Some(i64::MAX);
        }
        let lo = self.core_start.min(other.core_start);
        let per = lcm(self.left.len(), other.left.len()) as i64;
        if (lo - per..lo).any(|i| self.symbol(i) != other.symbol(i)) {
            return None;
        }
        let hi = self.core_end().max(other.core_end()) + lcm(self.right.len(), other.right.len()) as i64;
        (lo..hi).find(|&i| self.symbol(i) != other.symbol(i)).map(|i| i - 1).or(Some(i64::MAX))
    }
}

/// `θ^N` where `N` is the largest radius with `xᵢ = yᵢ` for `|i| < N`; 0 for equal points.
pub fn metric(x: &SymbolicPoint, y: &SymbolicPoint, spec: &SftSpec) -> f64 {
    match agreement_radius(x, y) {
        None => 0.0,
        Some(n) => spec.theta().powi(n as i32),
    }
}

/// Largest `N` with agreement on `|i| < N`, or `None` for equal points.
pub fn agreement_radius(x: &SymbolicPoint, y: &SymbolicPoint) -> Option<u64> {
    if x == y {
        return None;
    }
    let reach = [x.core_start, x.core_end(), y.core_start, y.core_end()].iter().map(|v| v.abs()).max().unwrap();
    let bound = reach
        + lcm(x.left.len(), y.left.len()) as i64
        + lcm(x.right.len(), y.right.len()) as i64
        + 2;
    (0..=bound).find(|&k| x.symbol(k) != y.symbol(k) || x.symbol(-k) != y.symbol(-k)).map(|k| k as u64)
}

pub fn periodic_point(word: &[u8], spec: &SftSpec) -> Result<SymbolicPoint> {
    spec.check_cyclic(word)?;
    SymbolicPoint::periodic(word)
}

/// `z = …ppp·bridge·ppp…` with index 0 at the first bridge symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicPoint {
    pub periodic: SymbolicPoint,
    pub point: SymbolicPoint,
    pub exit_time: i64,
    pub period_word: Word,
    pub bridge: Word,
}

pub fn homoclinic_point(p_word: &[u8], bridge: &[u8], spec: &SftSpec) -> Result<HomoclinicPoint> {
    if bridge.is_empty() {
        return Err(Error::InvalidArgument("empty bridge".into()));
    }
    let periodic = periodic_point(p_word, spec)?;
    let mut joined = p_word.to_vec();
    joined.extend_from_slice(bridge);
    joined.extend_from_slice(p_word);
    spec.check_word(&joined)?;
    let point = SymbolicPoint::new(p_word.to_vec(), bridge.to_vec(), p_word.to_vec(), 0)?;
    if point.is_periodic() {
        return Err(Error::InvalidArgument("bridge is a power of the periodic word".into()));
    }
    let p = p_word.len();
    let exit_time = (bridge.len().div_ceil(p) * p) as i64;
    let aligned = (0..p as i64).all(|i| point.symbol(exit_time + i) == periodic.symbol(i));
    if !aligned {
        return Err(Error::MisalignedExit(exit_time));
    }
    Ok(HomoclinicPoint { periodic, point, exit_time, period_word: p_word.to_vec(), bridge: bridge.to_vec() })
}
