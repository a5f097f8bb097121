//! Subshifts of finite type, eventually periodic points and Markov measures.

mod measure;
mod point;
mod sft;

pub use measure::{
    cylinder_measure, gibbs_bound_constant, gibbs_locally_constant, parry_measure, sample_orbit, InvariantMeasure,
    MarkovMeasureRecord, PeriodicOrbitMeasure,
};
pub use point::{agreement_radius, homoclinic_point, metric, periodic_point, HomoclinicPoint, SymbolicPoint};
pub use sft::SftSpec;

use crate::error::{Error, Result};

/// A finite word over the alphabet `0..m`.
pub type Word = Vec<u8>;

const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Parses a word written with the characters `0-9a-z`.
pub fn parse_word(s: &str) -> Result<Word> {
    s.bytes()
        .map(|c| {
            DIGITS
                .iter()
                .position(|&d| d == c.to_ascii_lowercase())
                .map(|p| p as u8)
                .ok_or_else(|| Error::InvalidArgument(format!("invalid symbol {:?} in word {s:?}", c as char)))
        })
        .collect()
}

pub fn format_word(w: &[u8]) -> String {
    w.iter().map(|&a| DIGITS[a as usize] as char).collect()
}

/// Shortest `u` with `w = u^k`.
pub fn primitive_root(w: &[u8]) -> Word {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| w[i] == w[i - p]) {
            return w[..p].to_vec();
        }
    }
    w.to_vec()
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
