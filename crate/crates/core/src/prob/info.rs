//! Shannon functionals in bits. `0 · log 0` is taken as 0 throughout.

use super::tensor::TensorPmf;
use crate::error::Result;

/// Entropy in bits of a (not necessarily normalized) mass vector.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum();
    h.max(0.0)
}

/// h(p) = −p log p − (1−p) log(1−p).
pub fn binary_entropy(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "binary entropy argument {p} outside [0, 1]");
    let q = 1.0 - p;
    // Evaluate on the smaller argument so that h(p) == h(1 - p) bit-for-bit.
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    let term = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
    term(a) + term(b)
}

pub fn entropy(t: &TensorPmf, subset: &[&str]) -> Result<f64> {
    t.entropy(subset)
}

pub fn conditional_entropy(t: &TensorPmf, target: &[&str], given: &[&str]) -> Result<f64> {
    t.conditional_entropy(target, given)
}

pub fn mutual_information(t: &TensorPmf, a: &[&str], b: &[&str]) -> Result<f64> {
    t.mutual_information(a, b)
}

pub fn conditional_mutual_information(t: &TensorPmf, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
    t.conditional_mutual_information(a, b, given)
}
