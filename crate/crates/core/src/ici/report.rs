//! All rate quantities for one source, with provenance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chain::Chain;
use super::closed_form::{bss_closed_form, ci1_exact, BssClosedForm};
use super::det_search::DEFAULT_BUDGET;
use super::solver::{Provenance, SolveContext, SolverOutcome, SolverRegistry};
use crate::error::{Error, Result};
use crate::optim::PenaltyConfig;
use crate::prob::{JointPmf, Side};
use crate::sources::as_bss;
use crate::structure::{gk_ci, noninteractive_rate};
use crate::wyner::{wyner_minimize, WynerConfig};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportConfig {
    pub rounds: usize,
    /// Deterministic search caps, shared by both initiators.
    pub caps: Option<Vec<usize>>,
    pub budget: f64,
    /// Continuous search sizes, shared by both initiators.
    pub sizes: Option<Vec<usize>>,
    pub restarts: usize,
    pub wyner_restarts: usize,
    pub penalty: PenaltyConfig,
    pub seed: u64,
}

impl ReportConfig {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            caps: None,
            budget: DEFAULT_BUDGET,
            sizes: None,
            restarts: 32,
            wyner_restarts: 32,
            penalty: PenaltyConfig::default(),
            seed: 0,
        }
    }

    fn context(&self, initiator: Side) -> SolveContext {
        SolveContext {
            caps: self.caps.clone(),
            budget: self.budget,
            sizes: self.sizes.clone(),
            restarts: self.restarts,
            penalty: self.penalty.clone(),
            seed: self.seed,
            ..SolveContext::new(self.rounds, initiator)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub h_x: f64,
    pub h_y: f64,
    pub mi: f64,
    pub sk_capacity: f64,
    pub gk_ci: f64,
    pub wyner_ub: f64,
    pub ci1_x: f64,
    pub ci1_y: f64,
    pub cir_ub: f64,
    pub r_ni: f64,
    pub r_sk_r: f64,
    pub r: usize,
    /// Which candidate attains `cir_ub`.
    pub cir_source: String,
    pub provenance: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bss: Option<BssClosedForm>,
    pub solvers: Vec<SolverOutcome>,
    pub wyner_residual: f64,
    pub wyner_best_start: String,
}

/// Assembles every quantity. Deterministic and continuous searches run for
/// both initiators and their chains seed the Wyner optimizer.
pub fn rate_report(pmf: &JointPmf, cfg: &ReportConfig) -> Result<RateReport> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let registry = SolverRegistry::default();
    let mi = pmf.mutual_information();
    let ci1_x = ci1_exact(pmf, Side::X)?;
    let ci1_y = ci1_exact(pmf, Side::Y)?;
    let ni = noninteractive_rate(pmf)?;
    let bss = as_bss(pmf).map(bss_closed_form).transpose()?;

    let mut solvers = Vec::new();
    for initiator in [Side::X, Side::Y] {
        let mut ctx = cfg.context(initiator);
        for mode in ["det", "cont"] {
            solvers.extend(registry.run(mode, pmf, &mut ctx)?);
        }
    }

    let mut seeds = Vec::new();
    for o in &solvers {
        if let Some(r) = &o.result {
            if let Ok(aux) = r.chain.to_auxiliary(pmf) {
                seeds.push(aux.to_aux_kernel(pmf)?);
            }
        }
    }
    let wyner = wyner_minimize(
        pmf,
        &WynerConfig {
            restarts: cfg.wyner_restarts,
            penalty: cfg.penalty.clone(),
            seed: cfg.seed,
            ..WynerConfig::default()
        },
        &seeds,
    )?;

    let (cir_ub, cir_source, exact) = if let Some(b) = bss {
        (b.ci_i, "bss".to_string(), true)
    } else {
        let mut best = (ci1_x, "exact1:x".to_string());
        if ci1_y < best.0 {
            best = (ci1_y, "exact1:y".into());
        }
        if cfg.rounds > 1 {
            for o in &solvers {
                let feasible = o.result.as_ref().is_some_and(|r| r.feasible);
                if feasible && o.value < best.0 {
                    best = (
                        o.value,
                        format!("{}:{}", o.solver, o.initiator.to_string().to_lowercase()),
                    );
                }
            }
        }
        (best.0, best.1, cfg.rounds == 1)
    };

    let mut provenance = BTreeMap::new();
    for k in ["h_x", "h_y", "mi", "sk_capacity", "gk_ci", "ci1_x", "ci1_y", "r_ni"] {
        provenance.insert(k.to_string(), Provenance::Exact.as_str().to_string());
    }
    provenance.insert("wyner_ub".into(), Provenance::UpperBound.as_str().into());
    let cir = if exact {
        Provenance::Exact
    } else {
        Provenance::UpperBound
    };
    provenance.insert("cir_ub".into(), cir.as_str().into());
    provenance.insert("r_sk_r".into(), cir.as_str().into());

    Ok(RateReport {
        h_x: pmf.entropy_x(),
        h_y: pmf.entropy_y(),
        mi,
        sk_capacity: mi,
        gk_ci: gk_ci(pmf),
        wyner_ub: wyner.value,
        ci1_x,
        ci1_y,
        cir_ub,
        r_ni: ni.r_ni,
        r_sk_r: cir_ub - mi,
        r: cfg.rounds,
        cir_source,
        provenance,
        bss,
        solvers,
        wyner_residual: wyner.residual,
        wyner_best_start: wyner.best_start,
    })
}

/// Chains found by the searches in a report.
pub fn report_chains(report: &RateReport) -> Vec<&Chain> {
    report
        .solvers
        .iter()
        .filter_map(|o| o.result.as_ref().map(|r| &r.chain))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{bss, gain_example};
    use approx::assert_abs_diff_eq;

    fn quick(rounds: usize) -> ReportConfig {
        ReportConfig {
            restarts: 4,
            wyner_restarts: 4,
            ..ReportConfig::new(rounds)
        }
    }

    #[test]
    fn bss_report() {
        let r = rate_report(&bss(0.25).unwrap(), &quick(2)).unwrap();
        assert_abs_diff_eq!(r.mi, 0.188722, epsilon = 1e-6);
        assert_abs_diff_eq!(r.r_ni, 0.811278, epsilon = 1e-6);
        assert_eq!(r.cir_ub, 1.0);
        assert_abs_diff_eq!(r.r_sk_r, 0.811278, epsilon = 1e-6);
        assert_eq!(r.provenance["cir_ub"], "exact");
        assert!(r.wyner_ub < 1.0 && r.wyner_ub >= r.mi - 1e-6);
    }

    #[test]
    fn equal_sources_report() {
        let p = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let r = rate_report(&p, &quick(2)).unwrap();
        assert_abs_diff_eq!(r.mi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cir_ub, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.r_sk_r, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.r_ni, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_report_beats_one_way() {
        let p = gain_example(0.1, 0.15, 0.15).unwrap();
        let r = rate_report(&p, &quick(2)).unwrap();
        assert!(r.r_sk_r < r.r_ni - 0.02, "{} vs {}", r.r_sk_r, r.r_ni);
        assert!(r.cir_ub <= r.ci1_x.min(r.ci1_y) + 1e-9);
        assert!(r.gk_ci <= r.mi + 1e-9);
        assert!(r.mi <= r.wyner_ub + 1e-6);
        assert!(r.wyner_ub <= r.cir_ub + 1e-9);
        assert_eq!(r.provenance["r_sk_r"], "upper bound");
    }
}
