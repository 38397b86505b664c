//! Interactive common information `CI_i^r`.

pub mod chain;
pub mod closed_form;
pub mod continuous;
pub mod det_search;
pub mod report;
pub mod solver;

pub use chain::{
    cardinality_bound, chain_objective, default_sizes, labeling_chain, speaker, AuxiliaryChain, Chain, ChainResult,
    DeterministicChain,
};
pub use closed_form::{binary_stop_classify, bss_closed_form, ci1_exact, AtomClass, BssClosedForm, Stop};
pub use continuous::{continuous_chain_minimize, ContinuousConfig, ContinuousResult};
pub use det_search::{det_chain_search, det_chain_visit, fit_caps, space_size, DetSearchConfig, DetSearchResult};
pub use report::{rate_report, report_chains, RateReport, ReportConfig};
pub use solver::{CiSolver, Provenance, SolveContext, SolverOutcome, SolverRegistry};
