//! Interchangeable `CI_i^r` solvers behind one trait, selected by name.

use serde::Serialize;

use super::chain::{labeling_chain, Chain, ChainResult, DeterministicChain};
use super::closed_form::{bss_closed_form, ci1_exact};
use super::continuous::{continuous_chain_minimize, ContinuousConfig};
use super::det_search::{det_chain_search, fit_caps, DetSearchConfig, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::optim::PenaltyConfig;
use crate::prob::{JointPmf, Side};
use crate::sources::as_bss;
use crate::structure::minimal_sufficient_statistic;

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum Provenance {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "upper bound")]
    UpperBound,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::UpperBound => "upper bound",
        }
    }
}

/// Inputs shared by all solvers. `best_det` is filled by the `det` solver
/// and read by `cont` as a seed.
#[derive(Debug, Clone, Serialize)]
pub struct SolveContext {
    pub rounds: usize,
    pub initiator: Side,
    /// Deterministic search caps; `None` uses the default caps shrunk to fit `budget`.
    pub caps: Option<Vec<usize>>,
    pub budget: f64,
    /// Continuous search sizes; `None` uses the defaults.
    pub sizes: Option<Vec<usize>>,
    pub restarts: usize,
    pub penalty: PenaltyConfig,
    pub seed: u64,
    #[serde(skip)]
    pub best_det: Option<DeterministicChain>,
}

impl SolveContext {
    pub fn new(rounds: usize, initiator: Side) -> Self {
        Self {
            rounds,
            initiator,
            caps: None,
            budget: DEFAULT_BUDGET,
            sizes: None,
            restarts: 32,
            penalty: PenaltyConfig::default(),
            seed: 0,
            best_det: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverOutcome {
    pub solver: String,
    pub initiator: Side,
    pub rounds: usize,
    pub value: f64,
    pub provenance: Provenance,
    /// Chain attaining `value`, when the solver produces one.
    pub result: Option<ChainResult>,
    pub details: serde_json::Value,
}

pub trait CiSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn applicable(&self, _pmf: &JointPmf, _ctx: &SolveContext) -> bool {
        true
    }
    fn solve(&self, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<SolverOutcome>;
}

/// One round: entropy of the initiator's minimal sufficient statistic.
pub struct ExactOneRound;

impl CiSolver for ExactOneRound {
    fn name(&self) -> &'static str {
        "exact1"
    }

    fn describe(&self) -> &'static str {
        "one-round value H(g*(initiator)), embedded as an r-round chain"
    }

    fn solve(&self, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<SolverOutcome> {
        let value = ci1_exact(pmf, ctx.initiator)?;
        let g = minimal_sufficient_statistic(pmf, ctx.initiator)?;
        let chain = labeling_chain(pmf, ctx.initiator, ctx.rounds, 0, g.classes());
        let result = super::chain::chain_objective(pmf, &Chain::Deterministic(chain))?;
        Ok(SolverOutcome {
            solver: self.name().into(),
            initiator: ctx.initiator,
            rounds: ctx.rounds,
            value,
            provenance: Provenance::Exact,
            result: Some(result),
            details: serde_json::json!({ "labeling": g }),
        })
    }
}

/// Exhaustive deterministic-chain search.
pub struct DeterministicSearch;

impl CiSolver for DeterministicSearch {
    fn name(&self) -> &'static str {
        "det"
    }

    fn describe(&self) -> &'static str {
        "exhaustive search over canonical deterministic chains"
    }

    fn solve(&self, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<SolverOutcome> {
        let base = DetSearchConfig {
            budget: ctx.budget,
            ..DetSearchConfig::new(ctx.rounds, ctx.initiator)
        };
        let caps = match &ctx.caps {
            Some(c) => c.clone(),
            None => fit_caps(pmf, ctx.initiator, base.resolved_caps(pmf), ctx.budget),
        };
        let r = det_chain_search(pmf, &base.with_caps(caps))?;
        if let Chain::Deterministic(d) = &r.best.chain {
            ctx.best_det = Some(d.clone());
        }
        Ok(SolverOutcome {
            solver: self.name().into(),
            initiator: ctx.initiator,
            rounds: ctx.rounds,
            value: r.best.objective,
            provenance: Provenance::UpperBound,
            details: serde_json::json!({
                "caps": r.caps,
                "space_size": r.space_size,
                "enumerated": r.enumerated,
                "feasible": r.feasible,
            }),
            result: Some(r.best),
        })
    }
}

/// Penalty-method search over randomized chains, seeded by `best_det`.
pub struct ContinuousSearch;

impl CiSolver for ContinuousSearch {
    fn name(&self) -> &'static str {
        "cont"
    }

    fn describe(&self) -> &'static str {
        "exponentiated-gradient penalty search over randomized chains"
    }

    fn solve(&self, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<SolverOutcome> {
        let cfg = ContinuousConfig {
            sizes: ctx.sizes.clone(),
            restarts: ctx.restarts,
            penalty: ctx.penalty.clone(),
            seed: ctx.seed,
            ..ContinuousConfig::new(ctx.rounds, ctx.initiator)
        };
        let seed = ctx
            .best_det
            .as_ref()
            .filter(|d| d.initiator == ctx.initiator && d.rounds() == ctx.rounds);
        let r = continuous_chain_minimize(pmf, &cfg, seed, &[])?;
        Ok(SolverOutcome {
            solver: self.name().into(),
            initiator: ctx.initiator,
            rounds: ctx.rounds,
            value: r.best.objective,
            provenance: Provenance::UpperBound,
            details: serde_json::json!({
                "best_start": r.best_start,
                "restarts_used": r.restarts_used,
                "iterations": r.iterations,
                "sizes": r.best.chain.sizes(),
            }),
            result: Some(r.best),
        })
    }
}

/// Binary symmetric sources: `CI_i = 1` for every number of rounds.
pub struct BinarySymmetric;

impl CiSolver for BinarySymmetric {
    fn name(&self) -> &'static str {
        "bss"
    }

    fn describe(&self) -> &'static str {
        "closed form for doubly symmetric binary sources"
    }

    fn applicable(&self, pmf: &JointPmf, _ctx: &SolveContext) -> bool {
        as_bss(pmf).is_some()
    }

    fn solve(&self, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<SolverOutcome> {
        let delta = as_bss(pmf).ok_or_else(|| Error::InvalidParameters("source is not binary symmetric".into()))?;
        let c = bss_closed_form(delta)?;
        Ok(SolverOutcome {
            solver: self.name().into(),
            initiator: ctx.initiator,
            rounds: ctx.rounds,
            value: c.ci_i,
            provenance: Provenance::Exact,
            result: None,
            details: serde_json::to_value(c).unwrap_or_default(),
        })
    }
}

pub struct SolverRegistry {
    solvers: Vec<Box<dyn CiSolver>>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ExactOneRound));
        r.register(Box::new(DeterministicSearch));
        r.register(Box::new(ContinuousSearch));
        r.register(Box::new(BinarySymmetric));
        r
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { solvers: Vec::new() }
    }

    /// Adds a solver; a solver with the same name is replaced in place.
    pub fn register(&mut self, solver: Box<dyn CiSolver>) {
        match self.solvers.iter().position(|s| s.name() == solver.name()) {
            Some(i) => self.solvers[i] = solver,
            None => self.solvers.push(solver),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn CiSolver> {
        self.solvers.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    /// Runs one solver by name, or with `"all"` every applicable solver in
    /// registration order.
    pub fn run(&self, mode: &str, pmf: &JointPmf, ctx: &mut SolveContext) -> Result<Vec<SolverOutcome>> {
        if mode == "all" {
            let mut out = Vec::new();
            for s in &self.solvers {
                if s.applicable(pmf, ctx) {
                    out.push(s.solve(pmf, ctx)?);
                }
            }
            return Ok(out);
        }
        let solver = self.get(mode).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown mode '{mode}', expected one of {:?} or all",
                self.names()
            ))
        })?;
        if !solver.applicable(pmf, ctx) {
            return Err(Error::InvalidConfig(format!(
                "mode '{mode}' does not apply to this source"
            )));
        }
        Ok(vec![solver.solve(pmf, ctx)?])
    }
}
