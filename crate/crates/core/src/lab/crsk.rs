//! Staged common-randomness generation from a deterministic chain, followed
//! by key extraction with a linear hash.

use std::collections::HashMap;

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{cell_sampler, trial_rng};
use super::decode::{ml_in_bin, LogLikelihood};
use super::hash::{bits_for, encode, rank, LinearHash};
use crate::error::{Error, Result};
use crate::ici::{chain_objective, speaker, Chain, DeterministicChain};
use crate::prob::{JointPmf, Side, TENSOR_CELL_BUDGET};

pub const DEFAULT_SLACK: f64 = 0.25;
const KEY_HASH_DRAWS: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CrSkConfig {
    pub n: usize,
    /// Requested key bits per source symbol.
    pub key_rate: f64,
    pub trials: usize,
    pub seed: u64,
    /// Extra bits per symbol on top of `H(U_t | listener, U^{t-1})` in each stage.
    pub slack: f64,
}

impl CrSkConfig {
    pub fn new(n: usize, key_rate: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            key_rate,
            trials,
            seed,
            slack: DEFAULT_SLACK,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimReport {
    pub trials: usize,
    /// Fraction of trials with `L1 ≠ L` or `L2 ≠ L`.
    pub cr_error_rate: f64,
    /// Transcript bits per symbol.
    pub comm_rate: f64,
    /// Key bits per symbol actually produced, `⌊n · requested⌋ / n`.
    pub key_rate: f64,
    pub requested_key_rate: f64,
    /// `I(X ∧ Y) − I(X ∧ Y | U^r)`, the largest requestable key rate.
    pub available_key_rate: f64,
    pub stage_bits: Vec<usize>,
    pub key_bits: usize,
    /// `(1/n) I(K ∧ F)`.
    pub leakage: f64,
    /// True when the leakage comes from enumerating the law of the common
    /// randomness, false for the plug-in estimate from trials.
    pub leakage_exact: bool,
    /// `log|K|/n − H(K)/n`.
    pub uniformity_gap: f64,
    pub config: CrSkConfig,
}

struct Code {
    sizes: Vec<usize>,
    seg_bits: Vec<usize>,
    offsets: Vec<usize>,
    stages: Vec<LinearHash>,
    key: LinearHash,
}

impl Code {
    fn segment(&self, t: usize, u: &[Vec<usize>]) -> u128 {
        let digits: Vec<usize> = u.iter().map(|a| a[t]).collect();
        encode(&digits, self.sizes[t])
    }

    fn l_code(&self, u: &[Vec<usize>]) -> u128 {
        (0..self.sizes.len()).fold(0, |acc, t| acc | (self.segment(t, u) << self.offsets[t]))
    }

    /// Stage syndromes packed side by side.
    fn transcript(&self, u: &[Vec<usize>]) -> u128 {
        let mut f = 0u128;
        let mut shift = 0;
        for (t, h) in self.stages.iter().enumerate() {
            f |= h.apply(self.segment(t, u)) << shift;
            shift += h.out_bits();
        }
        f
    }
}

fn entropy_of<K: std::hash::Hash + Eq>(m: &HashMap<K, f64>) -> f64 {
    let total: f64 = m.values().sum();
    -m.values()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            q * q.log2()
        })
        .sum::<f64>()
}

/// `(H(K), I(K ∧ F))` from weighted `(F, K)` observations.
fn key_stats(samples: impl Iterator<Item = (u128, u128, f64)>) -> (f64, f64) {
    let mut f: HashMap<u128, f64> = HashMap::new();
    let mut k: HashMap<u128, f64> = HashMap::new();
    let mut fk: HashMap<(u128, u128), f64> = HashMap::new();
    for (fv, kv, w) in samples {
        *f.entry(fv).or_default() += w;
        *k.entry(kv).or_default() += w;
        *fk.entry((fv, kv)).or_default() += w;
    }
    let hk = entropy_of(&k);
    (hk, (hk + entropy_of(&f) - entropy_of(&fk)).max(0.0))
}

/// Runs the staged scheme `trials` times on fresh blocks.
///
/// Stage `t` sends a full-rank linear hash of `U_t^n` with
/// `min(⌈n (H(U_t | listener, U^{t-1}) + slack)⌉, ⌈n log|U_t|⌉)` bits; the
/// listener decodes ML within the bin from its block and its own view of the
/// earlier stages. The key hashes the concatenated encoding of `U^r` to
/// `⌊n · key_rate⌋` bits, chosen linearly independent of the stage hashes
/// where possible. The code is drawn once per seed.
pub fn cr_sk_simulate(pmf: &JointPmf, chain: &DeterministicChain, cfg: &CrSkConfig) -> Result<SimReport> {
    let result = chain_objective(pmf, &Chain::Deterministic(chain.clone()))?;
    if cfg.n == 0 {
        return Err(Error::InvalidConfig("blocklength must be positive".into()));
    }
    if !(cfg.key_rate >= 0.0 && cfg.slack >= 0.0) {
        return Err(Error::InvalidConfig("key rate and slack must be nonnegative".into()));
    }
    let available = pmf.mutual_information() - result.residual;
    if cfg.key_rate > 0.0 && cfg.key_rate > available + 1e-12 {
        return Err(Error::RateInfeasible {
            requested: cfg.key_rate,
            available,
        });
    }
    let rounds = chain.rounds();
    let sizes = chain.sizes.clone();
    let seg_bits: Vec<usize> = sizes.iter().map(|&s| bits_for((s as f64).powi(cfg.n as i32))).collect();
    let total_bits: usize = seg_bits.iter().sum();
    if total_bits > 128 {
        return Err(Error::SizeBudgetExceeded {
            what: "common randomness encoding bits",
            required: total_bits as f64,
            budget: 128.0,
        });
    }
    let offsets: Vec<usize> = (0..rounds).map(|t| seg_bits[..t].iter().sum()).collect();
    let stage_bits: Vec<usize> = (0..rounds)
        .map(|t| {
            let want = (cfg.n as f64 * (result.per_round_terms[t] + cfg.slack) - 1e-9)
                .ceil()
                .max(0.0) as usize;
            want.min(seg_bits[t])
        })
        .collect();
    let key_bits = ((cfg.n as f64 * cfg.key_rate + 1e-9).floor() as usize).min(total_bits);

    let mut code_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stages: Vec<LinearHash> = (0..rounds)
        .map(|t| LinearHash::random_full_rank(&mut code_rng, stage_bits[t], seg_bits[t]))
        .collect();
    let stacked: Vec<u128> = stages
        .iter()
        .zip(&offsets)
        .flat_map(|(h, &off)| h.rows.iter().map(move |r| r << off))
        .collect();
    let target = (stacked.len() + key_bits).min(total_bits);
    let mut key = LinearHash::random(&mut code_rng, key_bits, total_bits);
    let mut best_rank = 0;
    for _ in 0..KEY_HASH_DRAWS {
        let cand = LinearHash::random(&mut code_rng, key_bits, total_bits);
        let rk = rank(&[stacked.clone(), cand.rows.clone()].concat());
        if rk > best_rank {
            best_rank = rk;
            key = cand;
        }
        if rk == target {
            break;
        }
    }
    let code = Code {
        sizes: sizes.clone(),
        seg_bits,
        offsets,
        stages,
        key,
    };

    // log P(u_t | listener symbol, prefix), rows indexed listener * prefix_count + prefix.
    let mut prefix_counts = vec![1usize; rounds];
    for t in 1..rounds {
        prefix_counts[t] = prefix_counts[t - 1] * sizes[t - 1];
    }
    let atoms: Vec<Vec<usize>> = (0..pmf.nx() * pmf.ny())
        .map(|c| chain.atom(c / pmf.ny(), c % pmf.ny()))
        .collect();
    let prefix_of = |u: &[usize], t: usize| u[..t].iter().zip(&sizes).fold(0, |acc, (d, s)| acc * s + d);
    let log_cond: Vec<Vec<Vec<f64>>> = (0..rounds)
        .map(|t| {
            let listener = speaker(chain.initiator, t).other();
            let mut mass = vec![vec![0.0; sizes[t]]; pmf.size(listener) * prefix_counts[t]];
            for (c, &p) in pmf.cells().iter().enumerate() {
                let (x, y) = (c / pmf.ny(), c % pmf.ny());
                let l = if listener == Side::X { x } else { y };
                mass[l * prefix_counts[t] + prefix_of(&atoms[c], t)][atoms[c][t]] += p;
            }
            mass.into_iter()
                .map(|row| {
                    let total: f64 = row.iter().sum();
                    if total > 0.0 {
                        row.iter()
                            .map(|&m| if m > 0.0 { (m / total).log2() } else { f64::NEG_INFINITY })
                            .collect()
                    } else {
                        vec![-(sizes[t] as f64).log2(); sizes[t]]
                    }
                })
                .collect()
        })
        .collect();

    let sampler = cell_sampler(pmf)?;
    let ny = pmf.ny();
    let outcomes: Vec<(bool, u128, u128)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let cells: Vec<usize> = (0..cfg.n).map(|_| sampler.sample(&mut rng)).collect();
            let truth: Vec<Vec<usize>> = cells.iter().map(|&c| atoms[c].clone()).collect();
            let mut view_x: Vec<Vec<usize>> = vec![Vec::with_capacity(rounds); cfg.n];
            let mut view_y = view_x.clone();
            for t in 0..rounds {
                let side = speaker(chain.initiator, t);
                let (talker, listener) = match side {
                    Side::X => (&mut view_x, &mut view_y),
                    Side::Y => (&mut view_y, &mut view_x),
                };
                let own = |c: usize, s: Side| if s == Side::X { c / ny } else { c % ny };
                let sent: Vec<usize> = cells
                    .iter()
                    .zip(talker.iter())
                    .map(|(&c, v)| chain.functions[t][own(c, side) * prefix_counts[t] + prefix_of(v, t)])
                    .collect();
                let syndrome = code.stages[t].apply(encode(&sent, sizes[t]));
                let lp: LogLikelihood = cells
                    .iter()
                    .zip(listener.iter())
                    .map(|(&c, v)| log_cond[t][own(c, side.other()) * prefix_counts[t] + prefix_of(v, t)].clone())
                    .collect();
                let heard = ml_in_bin(&code.stages[t], syndrome, sizes[t], &lp).unwrap_or_else(|| vec![0; cfg.n]);
                for i in 0..cfg.n {
                    talker[i].push(sent[i]);
                    listener[i].push(heard[i]);
                }
            }
            let error = view_x != truth || view_y != truth;
            (error, code.transcript(&truth), code.key.apply(code.l_code(&truth)))
        })
        .collect();

    let errors = outcomes.iter().filter(|o| o.0).count();
    let (h_key, leakage_bits, exact) = match exact_key_stats(pmf, &atoms, &code, cfg.n) {
        Some((h, i)) => (h, i, true),
        None => {
            let (h, i) = key_stats(outcomes.iter().map(|&(_, f, k)| (f, k, 1.0)));
            (h, i, false)
        }
    };
    // An empty key is constant, so it carries no information at all.
    let (h_key, leakage_bits) = if key_bits == 0 {
        (0.0, 0.0)
    } else {
        (h_key, leakage_bits.max(0.0))
    };
    let n = cfg.n as f64;
    let comm_bits: usize = stage_bits.iter().sum();
    Ok(SimReport {
        trials: cfg.trials,
        cr_error_rate: if cfg.trials == 0 {
            0.0
        } else {
            errors as f64 / cfg.trials as f64
        },
        comm_rate: comm_bits as f64 / n,
        key_rate: key_bits as f64 / n,
        requested_key_rate: cfg.key_rate,
        available_key_rate: available,
        stage_bits,
        key_bits,
        leakage: leakage_bits / n,
        leakage_exact: exact,
        uniformity_gap: ((key_bits as f64 - h_key) / n).max(0.0),
        config: cfg.clone(),
    })
}

/// Enumerates the common randomness `U^r` over its positive-mass atoms when
/// there are at most 2^22 block values.
fn exact_key_stats(pmf: &JointPmf, atoms: &[Vec<usize>], code: &Code, n: usize) -> Option<(f64, f64)> {
    let mut law: Vec<(Vec<usize>, f64)> = Vec::new();
    for (c, &p) in pmf.cells().iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        match law.iter_mut().find(|(a, _)| *a == atoms[c]) {
            Some(e) => e.1 += p,
            None => law.push((atoms[c].clone(), p)),
        }
    }
    let states = (law.len() as f64).powi(n as i32);
    if states > TENSOR_CELL_BUDGET as f64 {
        return None;
    }
    let states = states as usize;
    let samples = (0..states).map(|mut s| {
        let mut block = Vec::with_capacity(n);
        let mut p = 1.0;
        for _ in 0..n {
            let (a, q) = &law[s % law.len()];
            s /= law.len();
            block.push(a.clone());
            p *= q;
        }
        (code.transcript(&block), code.key.apply(code.l_code(&block)), p)
    });
    debug_assert!(code.seg_bits.iter().sum::<usize>() <= 128);
    Some(key_stats(samples))
}
