//! Finite-blocklength protocols: exact identity checks on transcript laws and
//! Monte Carlo simulation of binning and key extraction.

pub mod binning;
pub mod checks;
pub mod crsk;
pub mod decode;
pub mod hash;
pub mod protocol;
pub mod transcript;

pub use binning::{sw_binning_simulate, SwConfig, SwReport};
pub use checks::{
    decomposition_check, decomposition_suite, el5_suite, lemma1_check, lemma1_suite, split_invariance_case,
    split_invariance_suite, DecompositionCheck, InvarianceCase, InvarianceSummary, Lemma1Check, SuiteSummary,
};
pub use crsk::{cr_sk_simulate, CrSkConfig, SimReport};
pub use protocol::{random_protocol, Protocol};
pub use transcript::{transcript_law, TranscriptLaw};
