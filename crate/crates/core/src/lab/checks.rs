//! Exact checks of the protocol entropy identities, one case or a seeded suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::protocol::{random_protocol, Protocol};
use super::transcript::transcript_law;
use crate::error::{Error, Result};
use crate::ici::ci1_exact;
use crate::ici::{cardinality_bound, chain_objective, speaker, AuxiliaryChain, Chain, DeterministicChain};
use crate::prob::{FiniteAlphabet, JointPmf, Side};
use crate::sources::{random_pmf, split_x_symbols};
use crate::structure::{collapse, gk_ci, minimal_sufficient_statistic};
use crate::wyner::{wyner_minimize, WynerConfig};

pub const IDENTITY_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Lemma1Check {
    /// H(F | X^n) + H(F | Y^n).
    pub lhs: f64,
    /// H(F).
    pub rhs: f64,
    /// Σ log|F_i|, which bounds H(F).
    pub log_range: f64,
}

pub fn lemma1_check(pmf: &JointPmf, protocol: &Protocol) -> Result<Lemma1Check> {
    let t = transcript_law(pmf, protocol)?.tensor;
    Ok(Lemma1Check {
        lhs: t.conditional_entropy(&["F"], &["Xn"])? + t.conditional_entropy(&["F"], &["Yn"])?,
        rhs: t.entropy(&["F"])?,
        log_range: protocol.message_sizes.iter().map(|&m| (m as f64).log2()).sum(),
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DecompositionCheck {
    /// n I(X ∧ Y) from the single-letter pmf.
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
    pub i_given_jf: f64,
    pub h_jf: f64,
    pub h_f_given_x: f64,
    pub h_f_given_y: f64,
    pub h_j_given_xf: f64,
    pub h_j_given_yf: f64,
}

/// Both sides of the six-term decomposition of `n I(X ∧ Y)` for a function
/// `J` of the blocks, given as `j[x_block * y_blocks + y_block]`.
pub fn decomposition_check(pmf: &JointPmf, protocol: &Protocol, j: &[usize]) -> Result<DecompositionCheck> {
    let law = transcript_law(pmf, protocol)?.tensor;
    let yb = protocol.y_blocks();
    if j.len() != protocol.x_blocks() * yb {
        return Err(Error::InvalidConfig(format!(
            "J table has {} entries, expected {}",
            j.len(),
            protocol.x_blocks() * yb
        )));
    }
    let j_size = j.iter().copied().max().map_or(1, |m| m + 1);
    let t = law.extend_fn("J", FiniteAlphabet::indexed("j", j_size), |idx| j[idx[0] * yb + idx[1]])?;
    let i_given_jf = t.conditional_mutual_information(&["Xn"], &["Yn"], &["J", "F"])?;
    let h_jf = t.entropy(&["J", "F"])?;
    let h_f_given_x = t.conditional_entropy(&["F"], &["Xn"])?;
    let h_f_given_y = t.conditional_entropy(&["F"], &["Yn"])?;
    let h_j_given_xf = t.conditional_entropy(&["J"], &["Xn", "F"])?;
    let h_j_given_yf = t.conditional_entropy(&["J"], &["Yn", "F"])?;
    let lhs = protocol.n as f64 * pmf.mutual_information();
    let rhs = i_given_jf + h_jf - h_f_given_x - h_f_given_y - h_j_given_xf - h_j_given_yf;
    Ok(DecompositionCheck {
        lhs,
        rhs,
        difference: lhs - rhs,
        i_given_jf,
        h_jf,
        h_f_given_x,
        h_f_given_y,
        h_j_given_xf,
        h_j_given_yf,
    })
}

/// Worst case of a seeded suite.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SuiteSummary {
    pub check: String,
    pub seed: u64,
    pub count: usize,
    pub tolerance: f64,
    /// Largest violation (signed for inequalities, absolute for identities).
    pub max_violation: f64,
    pub worst_case: usize,
    pub passed: bool,
}

impl SuiteSummary {
    fn new(check: &str, seed: u64, count: usize, violations: &[f64]) -> Self {
        let (worst_case, max_violation) = violations
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
        let max_violation = if count == 0 { 0.0 } else { max_violation };
        Self {
            check: check.into(),
            seed,
            count,
            tolerance: IDENTITY_CHECK_TOL,
            max_violation,
            worst_case,
            passed: max_violation <= IDENTITY_CHECK_TOL,
        }
    }
}

pub(crate) fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64 + 1);
    rng
}

fn random_side(rng: &mut impl Rng) -> Side {
    if rng.random_bool(0.5) {
        Side::X
    } else {
        Side::Y
    }
}

/// A random case with `n ≤ max_n` and alphabets of size 2 or 3.
pub fn random_case(rng: &mut impl Rng, n_range: (usize, usize)) -> Result<(JointPmf, Protocol)> {
    let nx = rng.random_range(2..=3);
    let ny = rng.random_range(2..=3);
    let pmf = random_pmf(rng, nx, ny, 0.2)?;
    let n = rng.random_range(n_range.0..=n_range.1);
    let rounds = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..rounds).map(|_| rng.random_range(1..=3)).collect();
    let protocol = random_protocol(rng.random(), n, rounds, &sizes, nx, ny, random_side(rng))?;
    Ok((pmf, protocol))
}

/// `H(F | X^n) + H(F | Y^n) ≤ H(F)` and the transcript range bound over random protocols.
pub fn lemma1_suite(seed: u64, count: usize) -> Result<(SuiteSummary, SuiteSummary)> {
    let mut ineq = Vec::with_capacity(count);
    let mut range = Vec::with_capacity(count);
    for case in 0..count {
        let (pmf, protocol) = random_case(&mut case_rng(seed, case), (1, 3))?;
        let c = lemma1_check(&pmf, &protocol)?;
        ineq.push(c.lhs - c.rhs);
        range.push(c.rhs - c.log_range);
    }
    Ok((
        SuiteSummary::new("lemma1", seed, count, &ineq),
        SuiteSummary::new("transcript_range", seed, count, &range),
    ))
}

/// Decomposition identity over random `(protocol, J)` pairs at `n = 2`.
pub fn decomposition_suite(seed: u64, count: usize) -> Result<SuiteSummary> {
    let mut gaps = Vec::with_capacity(count);
    for case in 0..count {
        let mut rng = case_rng(seed, case);
        let (pmf, protocol) = random_case(&mut rng, (2, 2))?;
        let len = protocol.x_blocks() * protocol.y_blocks();
        let j_size = rng.random_range(1..=6);
        let j: Vec<usize> = (0..len).map(|_| rng.random_range(0..j_size)).collect();
        gaps.push(decomposition_check(&pmf, &protocol, &j)?.difference.abs());
    }
    Ok(SuiteSummary::new("decomposition", seed, count, &gaps))
}

/// Random deterministic or randomized chain with sizes up to 3 within the
/// cardinality bound.
pub fn random_chain(rng: &mut impl Rng, pmf: &JointPmf) -> Result<Chain> {
    let rounds = rng.random_range(1..=3);
    let initiator = random_side(rng);
    let mut sizes = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let bound = cardinality_bound(pmf, initiator, t, &sizes);
        sizes.push(rng.random_range(1..=bound.min(3)));
    }
    if rng.random_bool(0.5) {
        Ok(Chain::Auxiliary(AuxiliaryChain::random(pmf, initiator, sizes, rng)?))
    } else {
        let mut prefix = 1;
        let functions = sizes
            .iter()
            .enumerate()
            .map(|(t, &s)| {
                let len = pmf.size(speaker(initiator, t)) * prefix;
                prefix *= s;
                (0..len).map(|_| rng.random_range(0..s)).collect()
            })
            .collect();
        Ok(Chain::Deterministic(DeterministicChain {
            initiator,
            sizes,
            functions,
        }))
    }
}

/// Generalized per-round decomposition over random chains on random pmfs.
pub fn el5_suite(seed: u64, count: usize) -> Result<SuiteSummary> {
    let mut gaps = Vec::with_capacity(count);
    for case in 0..count {
        let mut rng = case_rng(seed, case);
        let nx = rng.random_range(2..=4);
        let ny = rng.random_range(2..=4);
        let pmf = random_pmf(&mut rng, nx, ny, 0.2)?;
        let chain = random_chain(&mut rng, &pmf)?;
        let r = chain_objective(&pmf, &chain)?;
        gaps.push(r.identity_gap(pmf.mutual_information()).abs());
    }
    Ok(SuiteSummary::new("el5", seed, count, &gaps))
}

/// Largest allowed gap between the two cross-seeded Wyner bounds.
pub const WYNER_AGREEMENT_TOL: f64 = 1e-3;

const CROSS_ROUNDS: usize = 8;

/// One source augmented by redundant X symbols against its collapse by the
/// minimal sufficient statistic of X.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InvarianceCase {
    pub augmented_size: usize,
    pub collapsed_size: usize,
    pub mi_gap: f64,
    pub gk_gap: f64,
    /// Largest gap over both initiators.
    pub ci1_gap: f64,
    pub wyner_augmented: f64,
    pub wyner_collapsed: f64,
    pub wyner_gap: f64,
    pub cross_rounds: usize,
}

/// Splits random X symbols of `pmf`, collapses the result by `g1*` and
/// compares the exact quantities and cross-seeded Wyner bounds on both sides.
pub fn split_invariance_case(
    pmf: &JointPmf,
    rng: &mut impl Rng,
    wyner_restarts: usize,
    seed: u64,
) -> Result<InvarianceCase> {
    let splits = rng.random_range(1..=2);
    let (aug, _) = split_x_symbols(pmf, rng, splits)?;
    let g = minimal_sufficient_statistic(&aug, Side::X)?;
    let col = collapse(&aug, Side::X, &g)?;
    let classes = g.classes().to_vec();
    let k = g.num_classes();
    let mi_gap = (aug.mutual_information() - col.mutual_information()).abs();
    let gk_gap = (gk_ci(&aug) - gk_ci(&col)).abs();
    let mut ci1_gap: f64 = 0.0;
    for side in [Side::X, Side::Y] {
        ci1_gap = ci1_gap.max((ci1_exact(&aug, side)? - ci1_exact(&col, side)?).abs());
    }
    let cfg = WynerConfig {
        w_size: Some(col.nx() * col.ny()),
        restarts: wyner_restarts,
        seed,
        ..WynerConfig::default()
    };
    let cross = WynerConfig {
        restarts: 0,
        ..cfg.clone()
    };
    let mut a = wyner_minimize(&aug, &cfg, &[])?;
    let mut c = wyner_minimize(&col, &cfg, &[])?;
    let mut rounds = 0;
    while (a.value - c.value).abs() > 1e-4 && rounds < CROSS_ROUNDS {
        rounds += 1;
        if a.value < c.value {
            let seed = a.kernel.merge_x(&aug, &classes, k)?;
            c = wyner_minimize(&col, &cross, &[seed])?;
        } else {
            a = wyner_minimize(&aug, &cross, &[c.kernel.lift_x(&classes)])?;
        }
    }
    Ok(InvarianceCase {
        augmented_size: aug.nx(),
        collapsed_size: col.nx(),
        mi_gap,
        gk_gap,
        ci1_gap,
        wyner_augmented: a.value,
        wyner_collapsed: c.value,
        wyner_gap: (a.value - c.value).abs(),
        cross_rounds: rounds,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct InvarianceSummary {
    pub seed: u64,
    pub count: usize,
    pub max_mi_gap: f64,
    pub max_gk_gap: f64,
    pub max_ci1_gap: f64,
    pub max_wyner_gap: f64,
    pub worst_wyner_case: usize,
    pub passed: bool,
}

/// Split-symbol invariance over `count` random sources of size at most 3×3.
pub fn split_invariance_suite(seed: u64, count: usize, wyner_restarts: usize) -> Result<InvarianceSummary> {
    let cases: Vec<InvarianceCase> = (0..count)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(seed, case);
            let nx = rng.random_range(2..=3);
            let ny = rng.random_range(2..=3);
            let pmf = random_pmf(&mut rng, nx, ny, 0.2)?;
            split_invariance_case(&pmf, &mut rng, wyner_restarts, seed)
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&InvarianceCase) -> f64| cases.iter().map(f).fold(0.0, f64::max);
    let worst_wyner_case = (0..cases.len())
        .max_by(|&i, &j| cases[i].wyner_gap.total_cmp(&cases[j].wyner_gap))
        .unwrap_or(0);
    let s = InvarianceSummary {
        seed,
        count,
        max_mi_gap: max(|c| c.mi_gap),
        max_gk_gap: max(|c| c.gk_gap),
        max_ci1_gap: max(|c| c.ci1_gap),
        max_wyner_gap: max(|c| c.wyner_gap),
        worst_wyner_case,
        passed: false,
    };
    let passed = s.max_mi_gap <= IDENTITY_CHECK_TOL
        && s.max_gk_gap <= IDENTITY_CHECK_TOL
        && s.max_ci1_gap <= IDENTITY_CHECK_TOL
        && s.max_wyner_gap <= WYNER_AGREEMENT_TOL;
    Ok(InvarianceSummary { passed, ..s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::bss;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_protocol_is_tight() {
        let p = bss(0.25).unwrap();
        let c = lemma1_check(&p, &Protocol::constant(2, 2, Side::X, 2, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(c.lhs, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.rhs, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn reveal_protocol() {
        let p = bss(0.25).unwrap();
        let c = lemma1_check(&p, &Protocol::reveal(2, Side::X, 2, 2).unwrap()).unwrap();
        // lhs = H(X^2 | Y^2), rhs = H(X^2).
        assert_abs_diff_eq!(c.lhs, 2.0 * (1.0 - p.mutual_information()), epsilon = 1e-9);
        assert_abs_diff_eq!(c.rhs, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn decomposition_special_cases() {
        let p = bss(0.1).unwrap();
        let constant = Protocol::constant(2, 1, Side::X, 2, 2).unwrap();
        let identity: Vec<usize> = (0..16).collect();
        let c = decomposition_check(&p, &constant, &identity).unwrap();
        assert!(c.difference.abs() <= 1e-9);
        assert_abs_diff_eq!(c.i_given_jf, 0.0, epsilon = 1e-12);
        let c = decomposition_check(&p, &constant, &[0; 16]).unwrap();
        assert_abs_diff_eq!(c.i_given_jf, 2.0 * p.mutual_information(), epsilon = 1e-9);
        assert!(c.difference.abs() <= 1e-9);
    }

    #[test]
    fn small_suites_pass() {
        let (l1, range) = lemma1_suite(7, 50).unwrap();
        assert!(l1.passed && range.passed, "{l1:?} {range:?}");
        assert!(decomposition_suite(7, 20).unwrap().passed);
        assert!(el5_suite(7, 50).unwrap().passed);
    }

    #[test]
    fn split_invariance_small() {
        let s = split_invariance_suite(3, 6, 2).unwrap();
        assert!(s.passed, "{s:?}");
    }
}
