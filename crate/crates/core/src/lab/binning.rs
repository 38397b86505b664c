//! Slepian–Wolf binning of `X^n` decoded with side information `Y^n`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decode::{ml_in_bin, LogLikelihood};
use super::hash::{bits_for, encode, LinearHash};
use crate::error::{Error, Result};
use crate::prob::JointPmf;

pub const MAX_SW_BLOCKLENGTH: usize = 24;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SwConfig {
    pub n: usize,
    /// Bits per source symbol.
    pub rate: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SwReport {
    pub n: usize,
    pub rate: f64,
    /// Hash output bits `⌈n · rate⌉`.
    pub bin_bits: usize,
    /// Bits of the block encoding.
    pub block_bits: usize,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub seed: u64,
}

/// Trial generator: stream `trial + 1` of `seed`.
pub(crate) fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

pub(crate) fn cell_sampler(pmf: &JointPmf) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(pmf.cells().to_vec()).map_err(|e| Error::InvalidParameters(e.to_string()))
}

/// `log2 P(X = a | Y = y)` for every `y`, as rows indexed by `y`.
pub(crate) fn log_conditional_x(pmf: &JointPmf) -> Vec<Vec<f64>> {
    let py = pmf.marginal_y();
    (0..pmf.ny())
        .map(|y| {
            (0..pmf.nx())
                .map(|x| {
                    let p = pmf.get(x, y);
                    if p > 0.0 {
                        (p / py[y]).log2()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect()
}

/// Per trial: draw `(x^n, y^n)`, a fresh full-rank hash with `⌈n · rate⌉`
/// output bits, and decode the ML `x^n` in the observed bin given `y^n`.
pub fn sw_binning_simulate(pmf: &JointPmf, cfg: &SwConfig) -> Result<SwReport> {
    let max_rate = (pmf.nx() as f64).log2();
    if !(cfg.rate > 0.0 && cfg.rate <= max_rate + 1e-12) {
        return Err(Error::RateOutOfRange {
            rate: cfg.rate,
            max: max_rate,
        });
    }
    if cfg.n == 0 || cfg.n > MAX_SW_BLOCKLENGTH {
        return Err(Error::InvalidConfig(format!(
            "blocklength {} outside 1..={MAX_SW_BLOCKLENGTH}",
            cfg.n
        )));
    }
    let base = pmf.nx();
    let block_bits = bits_for((base as f64).powi(cfg.n as i32));
    if block_bits > 128 {
        return Err(Error::SizeBudgetExceeded {
            what: "block encoding bits",
            required: block_bits as f64,
            budget: 128.0,
        });
    }
    let bin_bits = ((cfg.n as f64 * cfg.rate - 1e-9).ceil() as usize).min(block_bits);
    let sampler = cell_sampler(pmf)?;
    let log_cond = log_conditional_x(pmf);
    let ny = pmf.ny();
    let errors: usize = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let (xs, ys): (Vec<usize>, Vec<usize>) = (0..cfg.n)
                .map(|_| {
                    let c = sampler.sample(&mut rng);
                    (c / ny, c % ny)
                })
                .unzip();
            let hash = LinearHash::random_full_rank(&mut rng, bin_bits, block_bits);
            let syndrome = hash.apply(encode(&xs, base));
            let lp: LogLikelihood = ys.iter().map(|&y| log_cond[y].clone()).collect();
            usize::from(ml_in_bin(&hash, syndrome, base, &lp).as_deref() != Some(&xs[..]))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(SwReport {
        n: cfg.n,
        rate: cfg.rate,
        bin_bits,
        block_bits,
        trials: cfg.trials,
        errors,
        error_rate: if cfg.trials == 0 {
            0.0
        } else {
            errors as f64 / cfg.trials as f64
        },
        seed: cfg.seed,
    })
}
