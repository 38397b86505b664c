use cit_core::error::Error;
use cit_core::ici::{
    chain_objective, continuous_chain_minimize, det_chain_search, det_chain_visit, Chain, ContinuousConfig,
    DetSearchConfig,
};
use cit_core::prob::{JointPmf, Side};
use cit_core::sources::{bss, gain_example, random_pmf};
use cit_core::wyner::{wyner_minimize, WynerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_pmfs(seed: u64, count: usize) -> Vec<JointPmf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let nx = rng.random_range(2..=3);
            let ny = rng.random_range(2..=3);
            random_pmf(&mut rng, nx, ny, 0.15).unwrap()
        })
        .collect()
}

/// Best objective within the caps, infinite when no chain is feasible.
fn det_value(p: &JointPmf, initiator: Side, caps: Vec<usize>) -> f64 {
    let cfg = DetSearchConfig::new(caps.len(), initiator).with_caps(caps);
    match det_chain_search(p, &cfg) {
        Ok(r) => r.best.objective,
        Err(Error::NoFeasibleChain) => f64::INFINITY,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn det_value_does_not_grow_with_rounds() {
    for p in small_pmfs(10, 12) {
        for init in [Side::X, Side::Y] {
            let v1 = det_value(&p, init, vec![2]);
            let v2 = det_value(&p, init, vec![2, 2]);
            let v3 = det_value(&p, init, vec![2, 2, 2]);
            assert!(v2 <= v1 + 1e-12 && v3 <= v2 + 1e-12, "{v1} {v2} {v3}");
        }
    }
}

#[test]
fn an_extra_silent_round_covers_the_other_initiator() {
    for p in small_pmfs(11, 12) {
        for init in [Side::X, Side::Y] {
            let other = det_value(&p, init.other(), vec![2, 2]);
            let longer = det_value(&p, init, vec![2, 2, 2]);
            assert!(longer <= other + 1e-12, "{longer} > {other}");
        }
    }
}

#[test]
fn feasible_chains_cost_at_least_the_mutual_information() {
    for p in small_pmfs(12, 6) {
        let mi = p.mutual_information();
        let cfg = DetSearchConfig::new(2, Side::X).with_caps(vec![2, 3]);
        det_chain_visit(&p, &cfg, |_, objective, residual| {
            if residual <= 1e-9 {
                assert!(objective >= mi - 1e-6, "objective {objective} < mi {mi}");
            }
        })
        .unwrap();
        let c = continuous_chain_minimize(
            &p,
            &ContinuousConfig {
                restarts: 2,
                ..ContinuousConfig::new(2, Side::X)
            },
            None,
            &[],
        )
        .unwrap();
        for cand in c.candidates.iter().filter(|c| c.feasible) {
            assert!(cand.objective >= mi - 1e-6);
        }
    }
}

#[test]
fn chain_kernels_seed_wyner() {
    for p in small_pmfs(13, 6)
        .into_iter()
        .chain([gain_example(0.1, 0.15, 0.15).unwrap()])
    {
        let best = det_chain_search(&p, &DetSearchConfig::new(2, Side::X).with_caps(vec![2, 3])).unwrap();
        let Chain::Deterministic(chain) = &best.best.chain else {
            panic!("search returns deterministic chains");
        };
        let seed = chain.to_auxiliary(&p).unwrap().to_aux_kernel(&p).unwrap();
        let w = wyner_minimize(
            &p,
            &WynerConfig {
                restarts: 0,
                ..WynerConfig::default()
            },
            &[seed],
        )
        .unwrap();
        assert!(
            w.value <= best.best.objective + 1e-9,
            "{} > {}",
            w.value,
            best.best.objective
        );
    }
}

#[test]
fn bss_chains_never_beat_one_bit() {
    let p = bss(0.25).unwrap();
    let r = det_chain_search(&p, &DetSearchConfig::new(3, Side::Y).with_caps(vec![2, 2, 2])).unwrap();
    assert!((r.best.objective - 1.0).abs() <= 1e-9);
    let c = chain_objective(&p, &r.best.chain).unwrap();
    assert!(c.identity_gap(p.mutual_information()).abs() <= 1e-9);
}
