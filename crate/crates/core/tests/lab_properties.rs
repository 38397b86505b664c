use cit_core::ici::{labeling_chain, DeterministicChain};
use cit_core::lab::{
    cr_sk_simulate, lemma1_check, random_protocol, sw_binning_simulate, transcript_law, CrSkConfig, SwConfig,
};
use cit_core::prob::{JointPmf, Side};
use cit_core::sources::{bss, gain_example};

fn copy_x(p: &JointPmf) -> DeterministicChain {
    labeling_chain(p, Side::X, 1, 0, &(0..p.nx()).collect::<Vec<_>>())
}

#[test]
fn protocols_are_reproducible_and_distinct() {
    let ps: Vec<_> = (0..3)
        .map(|seed| random_protocol(seed, 2, 2, &[2, 2], 2, 2, Side::X).unwrap())
        .collect();
    assert_eq!(ps[1], random_protocol(1, 2, 2, &[2, 2], 2, 2, Side::X).unwrap());
    assert!(ps[0] != ps[1] && ps[1] != ps[2] && ps[0] != ps[2]);
}

#[test]
fn transcript_entropy_is_bounded_by_its_range() {
    let p = gain_example(0.1, 0.15, 0.15).unwrap();
    for seed in 0..40 {
        let proto = random_protocol(seed, 2, 3, &[2, 3, 2], 3, 3, Side::Y).unwrap();
        let c = lemma1_check(&p, &proto).unwrap();
        assert!(c.rhs <= c.log_range + 1e-9);
        assert!(c.lhs <= c.rhs + 1e-9);
        let law = transcript_law(&p, &proto).unwrap();
        assert!((law.tensor.cells().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn simulations_repeat_under_a_fixed_seed() {
    let p = bss(0.25).unwrap();
    let sw = SwConfig {
        n: 12,
        rate: 0.9,
        trials: 300,
        seed: 17,
    };
    assert_eq!(
        sw_binning_simulate(&p, &sw).unwrap(),
        sw_binning_simulate(&p, &sw).unwrap()
    );
    let cfg = CrSkConfig::new(12, 0.1, 200, 17);
    let a = cr_sk_simulate(&p, &copy_x(&p), &cfg).unwrap();
    let b = cr_sk_simulate(&p, &copy_x(&p), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_key_leaks_nothing() {
    let p = gain_example(0.1, 0.15, 0.15).unwrap();
    let r = cr_sk_simulate(&p, &copy_x(&p), &CrSkConfig::new(6, 0.0, 100, 3)).unwrap();
    assert_eq!(r.key_bits, 0);
    assert_eq!(r.leakage, 0.0);
    assert_eq!(r.uniformity_gap, 0.0);
}

#[test]
fn bss_key_at_moderate_rate() {
    let p = bss(0.25).unwrap();
    let r = cr_sk_simulate(&p, &copy_x(&p), &CrSkConfig::new(16, 0.1, 2000, 0)).unwrap();
    assert!(r.cr_error_rate <= 0.2, "{r:?}");
    assert!(r.uniformity_gap <= 0.1, "{r:?}");
}
