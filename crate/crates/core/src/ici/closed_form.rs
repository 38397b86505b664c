//! Quantities with exact single-letter formulas.

use serde::Serialize;

use super::chain::{Chain, ChainResult};
use crate::error::{Error, Result};
use crate::prob::{binary_entropy, entropy_bits, JointPmf, Side, IDENTITY_TOL};
use crate::structure::minimal_sufficient_statistic;

/// `CI_i^1` with the given initiator: the entropy of its minimal sufficient
/// statistic for the other source.
pub fn ci1_exact(pmf: &JointPmf, initiator: Side) -> Result<f64> {
    let g = minimal_sufficient_statistic(pmf, initiator)?;
    Ok(g.entropy(&pmf.marginal(initiator)))
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct BssClosedForm {
    pub delta: f64,
    pub ci_i: f64,
    pub sk_capacity: f64,
    pub r_sk: f64,
}

/// Interaction does not help on a binary symmetric source: `CI_i = 1`.
pub fn bss_closed_form(delta: f64) -> Result<BssClosedForm> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let h = binary_entropy(delta);
    Ok(BssClosedForm {
        delta,
        ci_i: 1.0,
        sk_capacity: 1.0 - h,
        r_sk: h,
    })
}

/// Which source an atom `u^r` pins down.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    X,
    Y,
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomClass {
    pub atom: Vec<usize>,
    pub mass: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub stop: Stop,
}

const STOP_TOL: f64 = 1e-6;
const ATOM_MASS_FLOOR: f64 = 1e-15;

/// For a feasible chain on a binary pair, checks that every atom of positive
/// mass has `H(X | u^r) = 0` or `H(Y | u^r) = 0`.
pub fn binary_stop_classify(pmf: &JointPmf, chain: &Chain) -> Result<Vec<AtomClass>> {
    if pmf.nx() != 2 || pmf.ny() != 2 {
        return Err(Error::InvalidAlphabet(
            "stop classification needs binary X and Y".into(),
        ));
    }
    let mi = pmf.mutual_information();
    if mi <= IDENTITY_TOL {
        return Err(Error::DegenerateMarginal("X and Y are independent"));
    }
    let ChainResult { residual, .. } = super::chain::chain_objective(pmf, chain)?;
    if residual > IDENTITY_TOL {
        return Err(Error::MarkovViolation {
            chain: "X - U^r - Y",
            residual,
        });
    }
    let aux = chain.to_auxiliary(pmf)?;
    let model = aux.model(pmf)?;
    let q = model.joint(&aux.kernels);
    let wn = model.w_count();
    let mut out = Vec::new();
    for w in 0..wn {
        let cell = |x: usize, y: usize| q[(x * 2 + y) * wn + w];
        let mass: f64 = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .map(|(x, y)| cell(x, y))
            .sum();
        if mass <= ATOM_MASS_FLOOR {
            continue;
        }
        let px: Vec<f64> = (0..2).map(|x| (cell(x, 0) + cell(x, 1)) / mass).collect();
        let py: Vec<f64> = (0..2).map(|y| (cell(0, y) + cell(1, y)) / mass).collect();
        let (h_x, h_y) = (entropy_bits(&px), entropy_bits(&py));
        let atom = (0..aux.rounds()).map(|t| model.digit(w, t)).collect();
        let stop = match (h_x <= STOP_TOL, h_y <= STOP_TOL) {
            (true, true) => Stop::Both,
            (true, false) => Stop::X,
            (false, true) => Stop::Y,
            (false, false) => return Err(Error::LemmaViolation { atom, hx: h_x, hy: h_y }),
        };
        out.push(AtomClass {
            atom,
            mass,
            h_x,
            h_y,
            stop,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ici::chain::{labeling_chain, DeterministicChain};
    use crate::ici::det_search::{det_chain_visit, DetSearchConfig};
    use crate::sources::{bss, gain_example};
    use crate::structure::noninteractive_rate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ci1_values() {
        let eq = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_abs_diff_eq!(ci1_exact(&eq, Side::X).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ci1_exact(&eq, Side::Y).unwrap(), 1.0, epsilon = 1e-12);
        let ind = JointPmf::from_rows(&[vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        assert_abs_diff_eq!(ci1_exact(&ind, Side::X).unwrap(), 0.0, epsilon = 1e-12);
        let g = gain_example(0.1, 0.15, 0.15).unwrap();
        assert_abs_diff_eq!(
            ci1_exact(&g, Side::X).unwrap(),
            entropy_bits(&[0.3, 0.35, 0.35]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bss_values() {
        let c = bss_closed_form(0.25).unwrap();
        assert_eq!(c.ci_i, 1.0);
        assert_abs_diff_eq!(c.sk_capacity, 0.188722, epsilon = 1e-6);
        assert_abs_diff_eq!(c.r_sk, 0.811278, epsilon = 1e-6);
        assert_abs_diff_eq!(bss_closed_form(0.499).unwrap().r_sk, 0.999997, epsilon = 1e-6);
        let ni = noninteractive_rate(&bss(0.25).unwrap()).unwrap();
        assert_abs_diff_eq!(c.r_sk, ni.r_ni, epsilon = 1e-12);
        assert!(bss_closed_form(0.5).is_err());
    }

    #[test]
    fn copies_stop_on_their_source() {
        let p = bss(0.25).unwrap();
        let cx = Chain::Deterministic(labeling_chain(&p, Side::X, 1, 0, &[0, 1]));
        assert!(binary_stop_classify(&p, &cx).unwrap().iter().all(|a| a.h_x <= STOP_TOL));
        let cy = Chain::Deterministic(labeling_chain(&p, Side::Y, 1, 0, &[0, 1]));
        assert!(binary_stop_classify(&p, &cy).unwrap().iter().all(|a| a.h_y <= STOP_TOL));
    }

    #[test]
    fn every_feasible_searched_chain_stops() {
        let p = bss(0.25).unwrap();
        let mut feasible: Vec<DeterministicChain> = Vec::new();
        det_chain_visit(
            &p,
            &DetSearchConfig::new(2, Side::X).with_caps(vec![2, 2]),
            |c, _, r| {
                if r <= IDENTITY_TOL {
                    feasible.push(c.clone());
                }
            },
        )
        .unwrap();
        assert!(!feasible.is_empty());
        for c in feasible {
            binary_stop_classify(&p, &Chain::Deterministic(c)).unwrap();
        }
    }

    #[test]
    fn infeasible_chain_is_rejected() {
        let p = bss(0.25).unwrap();
        let c = Chain::Deterministic(labeling_chain(&p, Side::X, 1, 0, &[0, 0]));
        assert!(matches!(
            binary_stop_classify(&p, &c),
            Err(Error::MarkovViolation { .. })
        ));
    }
}
