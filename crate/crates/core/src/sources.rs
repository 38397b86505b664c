//! Built-in source distributions.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::prob::JointPmf;

/// Doubly symmetric binary source with crossover probability `delta`.
pub fn bss(delta: f64) -> Result<JointPmf> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let same = (1.0 - delta) / 2.0;
    let flip = delta / 2.0;
    JointPmf::validate(
        &[vec![same, flip], vec![flip, same]],
        Some(vec!["0".into(), "1".into()]),
        Some(vec!["0".into(), "1".into()]),
    )
}

/// Returns `delta` when `pmf` is a doubly symmetric binary source.
pub fn as_bss(pmf: &JointPmf) -> Option<f64> {
    if pmf.nx() != 2 || pmf.ny() != 2 {
        return None;
    }
    let (a, b, c, d) = (pmf.get(0, 0), pmf.get(0, 1), pmf.get(1, 0), pmf.get(1, 1));
    let tol = 1e-12;
    if (a - d).abs() > tol || (b - c).abs() > tol {
        return None;
    }
    let delta = b + c;
    (delta > 0.0 && delta < 0.5).then_some(delta)
}

/// The 3×3 source `[[a,a,a],[b,a,a],[a,c,a]]` on which two rounds of
/// interaction beat one-way communication.
pub fn gain_example(a: f64, b: f64, c: f64) -> Result<JointPmf> {
    let tol = 1e-9;
    if ![a, b, c].iter().all(|v| v.is_finite() && *v >= 0.0) {
        return Err(Error::InvalidParameters("a, b, c must be nonnegative".into()));
    }
    if (7.0 * a + b + c - 1.0).abs() > tol {
        return Err(Error::InvalidParameters(format!(
            "7a + b + c = {} must equal 1",
            7.0 * a + b + c
        )));
    }
    if (c - a).abs() <= tol {
        return Err(Error::InvalidParameters("c must differ from a".into()));
    }
    if !(2.0 * a > b && b > a) {
        return Err(Error::InvalidParameters(format!(
            "need 2a > b > a, got a = {a}, b = {b}"
        )));
    }
    let labels = || Some(vec!["0".to_string(), "1".into(), "2".into()]);
    JointPmf::validate(&[vec![a, a, a], vec![b, a, a], vec![a, c, a]], labels(), labels())
}

/// Dirichlet(1) pmf on an `nx × ny` grid in which each cell is zeroed with
/// probability `zero_prob` (at least one cell always keeps its mass).
pub fn random_pmf(rng: &mut impl Rng, nx: usize, ny: usize, zero_prob: f64) -> Result<JointPmf> {
    if nx == 0 || ny == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut rows: Vec<Vec<f64>> = (0..nx)
        .map(|_| (0..ny).map(|_| rng.sample::<f64, _>(Exp1)).collect())
        .collect();
    let keep = (rng.random_range(0..nx), rng.random_range(0..ny));
    for (x, row) in rows.iter_mut().enumerate() {
        for (y, v) in row.iter_mut().enumerate() {
            if (x, y) != keep && rng.random_bool(zero_prob.clamp(0.0, 1.0)) {
                *v = 0.0;
            }
        }
    }
    let total: f64 = rows.iter().flatten().sum();
    rows.iter_mut().flatten().for_each(|v| *v /= total);
    JointPmf::from_rows(&rows)
}

/// Splits `splits` randomly chosen X symbols into two symbols with the same
/// conditional law of Y, in random proportions. Returns the augmented pmf and,
/// for each new X symbol, the original symbol it came from.
pub fn split_x_symbols(pmf: &JointPmf, rng: &mut impl Rng, splits: usize) -> Result<(JointPmf, Vec<usize>)> {
    let mut rows = pmf.rows();
    let mut origin: Vec<usize> = (0..pmf.nx()).collect();
    for _ in 0..splits {
        let x = rng.random_range(0..rows.len());
        let share = rng.random_range(0.1..0.9);
        let split: Vec<f64> = rows[x].iter().map(|v| v * share).collect();
        rows[x].iter_mut().for_each(|v| *v *= 1.0 - share);
        rows.push(split);
        origin.push(origin[x]);
    }
    Ok((JointPmf::from_rows(&rows)?, origin))
}
