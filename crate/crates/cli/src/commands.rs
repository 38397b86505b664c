use std::fs;

use cit_core::ici::{
    det_chain_search, labeling_chain, rate_report, Chain, DetSearchConfig, DeterministicChain, ReportConfig,
    SolveContext, SolverRegistry,
};
use cit_core::lab::{
    cr_sk_simulate, decomposition_suite, el5_suite, lemma1_suite, split_invariance_suite, sw_binning_simulate,
    CrSkConfig, SwConfig,
};
use cit_core::prob::{JointPmf, Side};
use cit_core::sources::{bss, gain_example};
use cit_core::structure::{gk_ci, gk_common_function, minimal_sufficient_statistic, noninteractive_rate};
use cit_core::wyner::{wyner_minimize, WynerConfig};
use serde_json::{json, Value};

use crate::output::{to_value, CliError, CliResult, Report};
use crate::{ChainChoice, CheckKind, Cli, Command, ExampleKind, Initiator, PmfArg, RateArgs, SimKind};

fn load(arg: &PmfArg) -> CliResult<JointPmf> {
    let text = fs::read_to_string(&arg.pmf).map_err(|e| CliError::new("Io", format!("{}: {e}", arg.pmf.display())))?;
    Ok(JointPmf::from_json(&text)?)
}

fn report_config(args: &RateArgs, seed: u64) -> ReportConfig {
    ReportConfig {
        caps: args.search.caps.clone(),
        budget: args.search.budget,
        sizes: args.search.sizes.clone(),
        restarts: args.search.restarts,
        wyner_restarts: args.wyner_restarts,
        seed,
        ..ReportConfig::new(args.search.rounds)
    }
}

fn rates(command: &str, pmf: &JointPmf, args: &RateArgs, seed: u64) -> CliResult<Report> {
    let cfg = report_config(args, seed);
    let report = rate_report(pmf, &cfg)?;
    Ok(Report::new(command, seed, to_value(&cfg)?, to_value(&report)?).with_pmf(pmf.to_file()))
}

fn crsk_chain(pmf: &JointPmf, choice: ChainChoice, rounds: usize) -> CliResult<DeterministicChain> {
    let copy = |side: Side| labeling_chain(pmf, side, 1, 0, &(0..pmf.size(side)).collect::<Vec<_>>());
    Ok(match choice {
        ChainChoice::X => copy(Side::X),
        ChainChoice::Y => copy(Side::Y),
        ChainChoice::Det => match det_chain_search(pmf, &DetSearchConfig::new(rounds, Side::X))?
            .best
            .chain
        {
            Chain::Deterministic(c) => c,
            Chain::Auxiliary(_) => unreachable!("the search only yields deterministic chains"),
        },
    })
}

pub fn run(cli: &Cli) -> CliResult<Report> {
    let seed = cli.seed;
    match &cli.command {
        Command::Info(arg) => {
            let p = load(arg)?;
            let result = json!({
                "h_x": p.entropy_x(),
                "h_y": p.entropy_y(),
                "h_xy": p.entropy_xy(),
                "h_x_given_y": p.entropy_xy() - p.entropy_y(),
                "h_y_given_x": p.entropy_xy() - p.entropy_x(),
                "mi": p.mutual_information(),
            });
            Ok(Report::new("info", seed, json!({}), result).with_pmf(p.to_file()))
        }
        Command::Suffstat(arg) => {
            let p = load(arg)?;
            let result = json!({
                "g1": to_value(&minimal_sufficient_statistic(&p, Side::X)?)?,
                "g2": to_value(&minimal_sufficient_statistic(&p, Side::Y)?)?,
                "noninteractive": to_value(&noninteractive_rate(&p)?)?,
            });
            Ok(Report::new("suffstat", seed, json!({}), result).with_pmf(p.to_file()))
        }
        Command::Gk(arg) => {
            let p = load(arg)?;
            let result = json!({ "mcf": to_value(&gk_common_function(&p))?, "gk_ci": gk_ci(&p) });
            Ok(Report::new("gk", seed, json!({}), result).with_pmf(p.to_file()))
        }
        Command::Wyner { pmf, restarts, w_size } => {
            let p = load(pmf)?;
            let cfg = WynerConfig {
                w_size: *w_size,
                restarts: *restarts,
                seed,
                ..WynerConfig::default()
            };
            let r = wyner_minimize(&p, &cfg, &[])?;
            Ok(Report::new("wyner", seed, to_value(&cfg)?, to_value(&r)?).with_pmf(p.to_file()))
        }
        Command::Ici {
            pmf,
            search,
            mode,
            initiator,
        } => {
            let p = load(pmf)?;
            let registry = SolverRegistry::default();
            let sides: &[Side] = match initiator {
                Initiator::X => &[Side::X],
                Initiator::Y => &[Side::Y],
                Initiator::Both => &[Side::X, Side::Y],
            };
            let mut outcomes = Vec::new();
            let mut contexts = Vec::new();
            for &side in sides {
                let mut ctx = SolveContext {
                    caps: search.caps.clone(),
                    budget: search.budget,
                    sizes: search.sizes.clone(),
                    restarts: search.restarts,
                    seed,
                    ..SolveContext::new(search.rounds, side)
                };
                outcomes.extend(registry.run(mode, &p, &mut ctx)?);
                contexts.push(ctx);
            }
            let config = json!({ "mode": mode, "solvers": registry.names(), "contexts": to_value(&contexts)? });
            Ok(Report::new("ici", seed, config, to_value(&outcomes)?).with_pmf(p.to_file()))
        }
        Command::Rates { pmf, rates: args } => rates("rates", &load(pmf)?, args, seed),
        Command::Check {
            kind,
            count,
            wyner_restarts,
        } => {
            let summaries: Vec<Value> = match kind {
                CheckKind::Lemma1 => {
                    let (l1, range) = lemma1_suite(seed, count.unwrap_or(1000))?;
                    vec![to_value(&l1)?, to_value(&range)?]
                }
                CheckKind::Decomp => vec![to_value(&decomposition_suite(seed, count.unwrap_or(200))?)?],
                CheckKind::El5 => vec![to_value(&el5_suite(seed, count.unwrap_or(500))?)?],
                CheckKind::Split => {
                    vec![to_value(&split_invariance_suite(
                        seed,
                        count.unwrap_or(200),
                        *wyner_restarts,
                    )?)?]
                }
            };
            let config =
                json!({ "kind": format!("{kind:?}").to_lowercase(), "count": count, "wyner_restarts": wyner_restarts });
            Ok(Report::new("check", seed, config, Value::Array(summaries.clone())).with_rows(summaries))
        }
        Command::Simulate {
            kind,
            pmf,
            n,
            trials,
            rate,
            key_rate,
            slack,
            chain,
            rounds,
        } => {
            let p = load(pmf)?;
            let mut results = Vec::with_capacity(n.len());
            let mut rows = Vec::with_capacity(n.len());
            let config = match kind {
                SimKind::Sw => {
                    let rate = rate.ok_or_else(|| CliError::new("InvalidConfig", "simulate sw needs --rate"))?;
                    for &n in n {
                        let r = sw_binning_simulate(
                            &p,
                            &SwConfig {
                                n,
                                rate,
                                trials: *trials,
                                seed,
                            },
                        )?;
                        rows.push(to_value(&r)?);
                        results.push(to_value(&r)?);
                    }
                    json!({ "kind": "sw", "n": n, "rate": rate, "trials": trials })
                }
                SimKind::Crsk => {
                    let c = crsk_chain(&p, *chain, *rounds)?;
                    for &n in n {
                        let cfg = CrSkConfig {
                            slack: *slack,
                            ..CrSkConfig::new(n, *key_rate, *trials, seed)
                        };
                        let r = cr_sk_simulate(&p, &c, &cfg)?;
                        rows.push(json!({
                            "n": n,
                            "trials": r.trials,
                            "cr_error_rate": r.cr_error_rate,
                            "comm_rate": r.comm_rate,
                            "key_rate": r.key_rate,
                            "requested_key_rate": r.requested_key_rate,
                            "available_key_rate": r.available_key_rate,
                            "key_bits": r.key_bits,
                            "leakage": r.leakage,
                            "leakage_exact": r.leakage_exact,
                            "uniformity_gap": r.uniformity_gap,
                            "slack": r.config.slack,
                            "seed": seed,
                        }));
                        results.push(to_value(&r)?);
                    }
                    json!({
                        "kind": "crsk",
                        "n": n,
                        "key_rate": key_rate,
                        "trials": trials,
                        "slack": slack,
                        "chain": format!("{chain:?}").to_lowercase(),
                        "rounds": rounds,
                    })
                }
            };
            Ok(Report::new("simulate", seed, config, Value::Array(results))
                .with_pmf(p.to_file())
                .with_rows(rows))
        }
        Command::Example { which } => match which {
            ExampleKind::Bss { delta, rates: args } => rates("example bss", &bss(*delta)?, args, seed),
            ExampleKind::Gain { a, b, c, rates: args } => rates("example gain", &gain_example(*a, *b, *c)?, args, seed),
        },
    }
}
