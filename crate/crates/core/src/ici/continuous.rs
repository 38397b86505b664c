//! Penalty-method search over randomized chains.

use serde::{Deserialize, Serialize};

use super::chain::{
    chain_objective, check_sizes, default_sizes, labeling_chain, parents, speaker, AuxiliaryChain, Chain, ChainResult,
    DeterministicChain,
};
use crate::error::{Error, Result};
use crate::optim::{multi_start, select_best, Candidate, FactorModel, PenaltyConfig, Start, FEASIBILITY_TOL};
use crate::prob::{JointPmf, Side};
use crate::structure::minimal_sufficient_statistic;

/// Default per-round size cap on top of the cardinality bound.
pub const DEFAULT_SIZE_CAP: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContinuousConfig {
    pub rounds: usize,
    pub initiator: Side,
    /// Per-round alphabet sizes; defaults to `min(bound, 4)`.
    pub sizes: Option<Vec<usize>>,
    pub restarts: usize,
    pub penalty: PenaltyConfig,
    pub seed: u64,
}

impl ContinuousConfig {
    pub fn new(rounds: usize, initiator: Side) -> Self {
        Self {
            rounds,
            initiator,
            sizes: None,
            restarts: 32,
            penalty: PenaltyConfig::default(),
            seed: 0,
        }
    }

    pub fn resolved_sizes(&self, pmf: &JointPmf) -> Vec<usize> {
        self.sizes
            .clone()
            .unwrap_or_else(|| default_sizes(pmf, self.initiator, self.rounds, DEFAULT_SIZE_CAP))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuousResult {
    pub best: ChainResult,
    pub best_start: String,
    pub restarts_used: usize,
    pub iterations: usize,
    pub candidates: Vec<Candidate>,
    pub config: ContinuousConfig,
}

/// Chain copying `classes` of its speaker in `round`, if it fits in `sizes`.
fn copy_seed(
    pmf: &JointPmf,
    cfg: &ContinuousConfig,
    round: usize,
    sizes: &[usize],
) -> Result<Option<DeterministicChain>> {
    let side = speaker(cfg.initiator, round);
    let identity: Vec<usize> = (0..pmf.size(side)).collect();
    let mss = minimal_sufficient_statistic(pmf, side)?;
    for classes in [identity, mss.classes().to_vec()] {
        let chain = labeling_chain(pmf, cfg.initiator, cfg.rounds, round, &classes);
        if chain.sizes.iter().zip(sizes).all(|(a, b)| a <= b) {
            return Ok(Some(chain));
        }
    }
    Ok(None)
}

/// Minimizes `I(X,Y ∧ U^r) + λ I(X ∧ Y | U^r)` over per-round kernels.
///
/// Fixed seeds: `det_seed` (the best deterministic chain, if given), a copy of
/// the initiator's source in round 1, a copy of the other source in round 2,
/// the constant chain, then `extra`. Seeds larger than `sizes` are skipped.
pub fn continuous_chain_minimize(
    pmf: &JointPmf,
    cfg: &ContinuousConfig,
    det_seed: Option<&DeterministicChain>,
    extra: &[DeterministicChain],
) -> Result<ContinuousResult> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let sizes = cfg.resolved_sizes(pmf);
    if sizes.len() != cfg.rounds {
        return Err(Error::InvalidConfig(format!(
            "{} sizes given for {} rounds",
            sizes.len(),
            cfg.rounds
        )));
    }
    check_sizes(pmf, cfg.initiator, &sizes)?;

    let mut seeds: Vec<(String, DeterministicChain)> = Vec::new();
    if let Some(d) = det_seed {
        seeds.push(("det".into(), d.clone()));
    }
    if let Some(c) = copy_seed(pmf, cfg, 0, &sizes)? {
        seeds.push(("copy:1".into(), c));
    }
    if cfg.rounds >= 2 {
        if let Some(c) = copy_seed(pmf, cfg, 1, &sizes)? {
            seeds.push(("copy:2".into(), c));
        }
    }
    seeds.push((
        "constant".into(),
        labeling_chain(pmf, cfg.initiator, cfg.rounds, 0, &vec![0; pmf.size(cfg.initiator)]),
    ));
    for (i, c) in extra.iter().enumerate() {
        seeds.push((format!("supplied:{i}"), c.clone()));
    }
    let mut starts = Vec::with_capacity(seeds.len());
    for (label, chain) in seeds {
        if chain.initiator != cfg.initiator {
            continue;
        }
        if let Ok(aux) = chain.embed(pmf, &sizes) {
            starts.push(Start {
                label,
                params: aux.kernels,
            });
        }
    }
    let n_starts = starts.len() + cfg.restarts;

    let model = FactorModel::new(pmf, parents(cfg.initiator, cfg.rounds), sizes.clone())?;
    let candidates = multi_start(&model, starts, cfg.restarts, cfg.seed, &cfg.penalty);
    let best = select_best(&candidates).ok_or(Error::NoFeasiblePoint {
        threshold: FEASIBILITY_TOL,
    })?;
    let c = &candidates[best];
    let chain = Chain::Auxiliary(AuxiliaryChain {
        initiator: cfg.initiator,
        sizes,
        kernels: c.params.clone(),
    });
    Ok(ContinuousResult {
        best: chain_objective(pmf, &chain)?,
        best_start: c.label.clone(),
        restarts_used: n_starts,
        iterations: candidates.iter().map(|c| c.iterations).sum(),
        candidates,
        config: cfg.clone(),
    })
}
