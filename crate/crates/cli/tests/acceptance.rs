//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always shown.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use cit_core::ici::{
    ci1_exact, continuous_chain_minimize, det_chain_search, det_chain_visit, Chain, ContinuousConfig, DetSearchConfig,
    DeterministicChain,
};
use cit_core::lab::{
    cr_sk_simulate, decomposition_suite, el5_suite, lemma1_suite, split_invariance_suite, sw_binning_simulate,
    CrSkConfig, SwConfig,
};
use cit_core::prob::{FiniteAlphabet, JointPmf, Side, TensorPmf};
use cit_core::sources::{bss, gain_example, random_pmf};
use cit_core::structure::{gk_common_function, minimal_sufficient_statistic};
use cit_core::wyner::{wyner_minimize, WynerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Binary entropy written out here so the checks do not lean on the library.
fn h(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

fn entropy(ps: &[f64]) -> f64 {
    ps.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

fn cit(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cit"))
        .args(args)
        .output()
        .expect("cit runs");
    (
        out.status.success(),
        String::from_utf8(out.stdout).expect("utf-8 output"),
    )
}

fn cit_json(args: &[&str]) -> Result<Value, String> {
    let (ok, text) = cit(args);
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("bad JSON from {args:?}: {e}"))?;
    if ok {
        Ok(v)
    } else {
        Err(format!("{args:?} failed: {text}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn det_best(pmf: &JointPmf, initiator: Side, caps: Vec<usize>) -> Result<f64, String> {
    let cfg = DetSearchConfig::new(caps.len(), initiator).with_caps(caps);
    det_chain_search(pmf, &cfg)
        .map(|r| r.best.objective)
        .map_err(|e| e.to_string())
}

fn bss_interaction() -> Outcome {
    let start = Instant::now();
    let expected = [(0.1, 0.468996), (0.25, 0.811278), (0.4, 0.970951)];
    let mut cont_min = f64::INFINITY;
    for (delta, rounded) in expected {
        let d = delta.to_string();
        let v = cit_json(&[
            "example",
            "bss",
            "--delta",
            &d,
            "--rounds",
            "2",
            "--restarts",
            "8",
            "--wyner-restarts",
            "4",
        ])?;
        let ci_i = v["result"]["bss"]["ci_i"].as_f64().ok_or("missing ci_i")?;
        let r_sk = v["result"]["bss"]["r_sk"].as_f64().ok_or("missing r_sk")?;
        ensure(ci_i == 1.0, || format!("δ={delta}: ci_i {ci_i}"))?;
        ensure(
            (r_sk - h(delta)).abs() <= 1e-9 && (r_sk - rounded).abs() <= 5e-7,
            || format!("δ={delta}: r_sk {r_sk}, h(δ) {}", h(delta)),
        )?;
        let p = bss(delta).map_err(|e| e.to_string())?;
        for side in [Side::X, Side::Y] {
            let det = det_best(&p, side, vec![2, 2])?;
            ensure((det - 1.0).abs() <= 1e-9, || format!("δ={delta}: det {det}"))?;
            let c =
                continuous_chain_minimize(&p, &ContinuousConfig::new(2, side), None, &[]).map_err(|e| e.to_string())?;
            ensure(c.best.feasible && c.best.objective >= 0.98, || {
                format!("δ={delta}: continuous {}", c.best.objective)
            })?;
            cont_min = cont_min.min(c.best.objective);
        }
    }
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!(
        "ci_i = 1, det = 1, continuous ≥ {cont_min:.6}, r_sk = h(δ) ({took:.1?})"
    ))
}

fn reference_gain_chain() -> DeterministicChain {
    // U1 = 1 on {0, 1}, 0 on {2}; U2 is silent after U1 = 0 and flags y = 0 after U1 = 1.
    let f1 = vec![1, 1, 0];
    let mut f2 = vec![0; 6];
    for y in 0..3 {
        f2[y * 2 + 1] = if y == 0 { 1 } else { 2 };
    }
    DeterministicChain {
        initiator: Side::X,
        sizes: vec![2, 3],
        functions: vec![f1, f2],
    }
}

fn interaction_helps() -> Outcome {
    let start = Instant::now();
    let p = gain_example(0.1, 0.15, 0.15).map_err(|e| e.to_string())?;
    let h_x = entropy(&[0.3, 0.35, 0.35]);
    let cfg = DetSearchConfig::new(2, Side::X).with_caps(vec![2, 3]);
    let best = det_chain_search(&p, &cfg).map_err(|e| e.to_string())?.best;
    ensure(best.feasible && best.objective <= h_x - 0.022, || {
        format!("best {} vs H(X) − 0.022 = {}", best.objective, h_x - 0.022)
    })?;
    for side in [Side::X, Side::Y] {
        let ci1 = ci1_exact(&p, side).map_err(|e| e.to_string())?;
        ensure(best.objective < ci1, || {
            format!("best {} not below ci1 {ci1}", best.objective)
        })?;
    }
    let target = reference_gain_chain().canonicalize(&p);
    let mut found = None;
    det_chain_visit(&p, &cfg, |c, objective, residual| {
        if c.canonicalize(&p) == target {
            found = Some((objective, residual));
        }
    })
    .map_err(|e| e.to_string())?;
    let (obj, res) = found.ok_or("reference chain not enumerated")?;
    ensure(res <= 1e-9, || format!("reference chain residual {res}"))?;
    let v = cit_json(&[
        "example", "gain", "--a", "0.1", "--b", "0.15", "--c", "0.15", "--rounds", "2",
    ])?;
    let r_sk = v["result"]["r_sk_r"].as_f64().ok_or("missing r_sk_r")?;
    let r_ni = v["result"]["r_ni"].as_f64().ok_or("missing r_ni")?;
    ensure(r_sk <= r_ni - 0.02, || format!("r_sk_2 {r_sk}, r_ni {r_ni}"))?;
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "det best {:.6} = H(X) − {:.6}, reference chain {obj:.6}, r_ni − r_sk_2 = {:.4} ({took:.1?})",
        best.objective,
        h_x - best.objective,
        r_ni - r_sk
    ))
}

fn wyner_bracket() -> Outcome {
    let delta: f64 = 0.25;
    // Binary W through two BSCs of crossover q with (1 − 2q)² = 1 − 2δ.
    let q = (1.0 - (1.0 - 2.0 * delta).sqrt()) / 2.0;
    let upper = 1.0 + h(delta) - 2.0 * h(q);
    let lower = 1.0 - h(delta);
    let start = Instant::now();
    let p = bss(delta).map_err(|e| e.to_string())?;
    let r = wyner_minimize(&p, &WynerConfig::default(), &[]).map_err(|e| e.to_string())?;
    ensure(r.feasible, || "no feasible point".into())?;
    ensure(
        r.value >= lower - 1e-3 && r.value <= upper + 0.01 && r.value < 1.0,
        || format!("value {} outside [{}, {}]", r.value, lower - 1e-3, upper + 0.01),
    )?;
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "value {:.6} in [{lower:.4}, {upper:.4} + 0.01] ({took:.1?})",
        r.value
    ))
}

fn identity_suites() -> Outcome {
    let start = Instant::now();
    let (l1, range) = lemma1_suite(1, 1000).map_err(|e| e.to_string())?;
    let dec = decomposition_suite(1, 200).map_err(|e| e.to_string())?;
    let el5 = el5_suite(1, 500).map_err(|e| e.to_string())?;
    for s in [&l1, &range, &dec, &el5] {
        ensure(s.passed && s.max_violation <= 1e-9, || format!("{s:?}"))?;
    }
    let took = within(start, Duration::from_secs(120))?;
    Ok(format!(
        "worst lemma1 {:.1e}, range {:.1e}, decomposition {:.1e}, per-round {:.1e} ({took:.1?})",
        l1.max_violation, range.max_violation, dec.max_violation, el5.max_violation
    ))
}

fn split_invariance() -> Outcome {
    let start = Instant::now();
    let s = split_invariance_suite(5, 200, 4).map_err(|e| e.to_string())?;
    ensure(
        s.max_mi_gap <= 1e-9 && s.max_gk_gap <= 1e-9 && s.max_ci1_gap <= 1e-9,
        || format!("{s:?}"),
    )?;
    ensure(s.max_wyner_gap <= 1e-3, || format!("{s:?}"))?;
    Ok(format!(
        "gaps mi {:.1e}, gk {:.1e}, ci1 {:.1e}, wyner {:.1e} ({:.1?})",
        s.max_mi_gap,
        s.max_gk_gap,
        s.max_ci1_gap,
        s.max_wyner_gap,
        start.elapsed()
    ))
}

fn structure_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_residual: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for case in 0..500 {
        let nx = rng.random_range(2..=5);
        let ny = rng.random_range(2..=5);
        let mut rows = random_pmf(&mut rng, nx, ny, 0.3).map_err(|e| e.to_string())?.rows();
        // A proportional copy of a row so that merges occur.
        let scale = rng.random_range(0.2..1.0);
        let copy: Vec<f64> = rows[0].iter().map(|v| v * scale).collect();
        rows.push(copy);
        let total: f64 = rows.iter().flatten().sum();
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v / total).collect()).collect();
        let p = JointPmf::from_rows(&rows).map_err(|e| e.to_string())?;
        let mx = p.marginal_x();
        let g = minimal_sufficient_statistic(&p, Side::X).map_err(|e| e.to_string())?;
        let t = TensorPmf::from_joint(&p)
            .extend_fn("G", FiniteAlphabet::indexed("g", g.num_classes()), |i| g.class(i[0]))
            .map_err(|e| e.to_string())?;
        let res = t
            .conditional_mutual_information(&["X"], &["Y"], &["G"])
            .map_err(|e| e.to_string())?;
        worst_residual = worst_residual.max(res);
        ensure(res <= 1e-9, || format!("case {case}: sufficiency residual {res}"))?;
        // Minimality: a labeling is sufficient iff it separates distinct
        // conditionals, so distinct classes must carry distinct conditionals.
        for a in 0..p.nx() {
            for b in 0..p.nx() {
                if mx[a] > 0.0 && mx[b] > 0.0 && g.class(a) != g.class(b) {
                    let gap = (0..p.ny())
                        .map(|y| (p.get(a, y) / mx[a] - p.get(b, y) / mx[b]).abs())
                        .fold(0.0, f64::max);
                    ensure(gap > 1e-9, || {
                        format!("case {case}: classes {a}, {b} share a conditional")
                    })?;
                }
            }
        }
        let same = (0..p.ny()).all(|y| (p.get(0, y) / mx[0] - p.get(nx, y) / mx[nx]).abs() <= 1e-12);
        ensure(!same || mx[0] == 0.0 || g.class(0) == g.class(nx), || {
            format!("case {case}: copy not merged")
        })?;

        let gk = gk_common_function(&p);
        for x in 0..p.nx() {
            for y in 0..p.ny() {
                if p.get(x, y) > 0.0 && gk.x.class(x) != gk.y.class(y) {
                    return Err(format!("case {case}: gk labels disagree at ({x}, {y})"));
                }
            }
        }
        let mi = p.mutual_information();
        ensure(gk.entropy <= mi + 1e-9, || {
            format!("case {case}: H(mcf) {} > I {mi}", gk.entropy)
        })?;
        if case % 10 == 0 {
            let cfg = WynerConfig {
                restarts: 4,
                seed: case as u64,
                ..WynerConfig::default()
            };
            let w = wyner_minimize(&p, &cfg, &[]).map_err(|e| e.to_string())?;
            for c in w.candidates.iter().filter(|c| c.feasible) {
                worst_margin = worst_margin.min(c.objective - mi);
                ensure(mi <= c.objective + 1e-6, || {
                    format!("case {case}: candidate {} < I {mi}", c.objective)
                })?;
            }
        }
    }
    Ok(format!(
        "500 sources, worst sufficiency residual {worst_residual:.1e}, min Wyner candidate − I {worst_margin:.1e} ({:.1?})",
        start.elapsed()
    ))
}

fn simulator_sanity() -> Outcome {
    let start = Instant::now();
    let p = bss(0.1).map_err(|e| e.to_string())?;
    let full = sw_binning_simulate(
        &p,
        &SwConfig {
            n: 12,
            rate: 1.0,
            trials: 2000,
            seed: 7,
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(full.error_rate <= 0.01, || {
        format!("full-rate error {}", full.error_rate)
    })?;
    let rate = h(0.1) + 0.25;
    let mut errs = Vec::new();
    for n in [8, 16, 24] {
        let r = sw_binning_simulate(
            &p,
            &SwConfig {
                n,
                rate,
                trials: 2000,
                seed: 7,
            },
        )
        .map_err(|e| e.to_string())?;
        errs.push(r.error_rate);
    }
    ensure(errs.windows(2).all(|w| w[1] <= w[0] + 0.05), || {
        format!("errors {errs:?}")
    })?;
    let q = bss(0.25).map_err(|e| e.to_string())?;
    let copy = DeterministicChain {
        initiator: Side::X,
        sizes: vec![2],
        functions: vec![vec![0, 1]],
    };
    let zero = cr_sk_simulate(&q, &copy, &CrSkConfig::new(16, 0.0, 500, 7)).map_err(|e| e.to_string())?;
    ensure(zero.leakage == 0.0 && zero.uniformity_gap == 0.0, || {
        format!("{zero:?}")
    })?;
    let cfg = CrSkConfig::new(16, 0.1, 2000, 7);
    let a = cr_sk_simulate(&q, &copy, &cfg).map_err(|e| e.to_string())?;
    let b = cr_sk_simulate(&q, &copy, &cfg).map_err(|e| e.to_string())?;
    ensure(a == b, || "same seed gave different reports".into())?;
    let sw = SwConfig {
        n: 16,
        rate,
        trials: 500,
        seed: 7,
    };
    ensure(
        sw_binning_simulate(&p, &sw).map_err(|e| e.to_string())?
            == sw_binning_simulate(&p, &sw).map_err(|e| e.to_string())?,
        || "binning not reproducible".into(),
    )?;
    let took = within(start, Duration::from_secs(300))?;
    Ok(format!(
        "full rate {:.4}, sweep {errs:?}, key 0.1: cr error {:.4} gap {:.4} ({took:.1?})",
        full.error_rate, a.cr_error_rate, a.uniformity_gap
    ))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("pool")
        .install(f)
}

fn library_snapshot() -> Result<String, String> {
    let p = gain_example(0.1, 0.15, 0.15).map_err(|e| e.to_string())?;
    let b = bss(0.25).map_err(|e| e.to_string())?;
    let e = |e: cit_core::error::Error| e.to_string();
    let det = det_chain_search(&p, &DetSearchConfig::new(2, Side::Y).with_caps(vec![3, 3])).map_err(e)?;
    let cont = continuous_chain_minimize(
        &p,
        &ContinuousConfig {
            restarts: 8,
            ..ContinuousConfig::new(2, Side::X)
        },
        None,
        &[],
    )
    .map_err(e)?;
    let w = wyner_minimize(
        &b,
        &WynerConfig {
            restarts: 8,
            seed: 3,
            ..WynerConfig::default()
        },
        &[],
    )
    .map_err(e)?;
    let sw = sw_binning_simulate(
        &b,
        &SwConfig {
            n: 16,
            rate: 0.9,
            trials: 300,
            seed: 3,
        },
    )
    .map_err(e)?;
    let Chain::Deterministic(chain) = &det.best.chain else {
        return Err("search returned a randomized chain".into());
    };
    let key = cr_sk_simulate(&p, chain, &CrSkConfig::new(4, 0.0, 200, 3)).map_err(e)?;
    let suite = el5_suite(3, 50).map_err(e)?;
    let split = split_invariance_suite(3, 4, 2).map_err(e)?;
    serde_json::to_string(&(&det, &cont, &w, &sw, &key, &suite, &split)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let one = in_pool(1, library_snapshot)?;
    let four = in_pool(4, library_snapshot)?;
    ensure(one == four, || "library results differ between 1 and 4 threads".into())?;
    let commands: [&[&str]; 3] = [
        &[
            "example", "gain", "--a", "0.1", "--b", "0.15", "--c", "0.15", "--rounds", "2", "--seed", "9",
        ],
        &["check", "lemma1", "--count", "100", "--seed", "9"],
        &[
            "simulate", "sw", "--pmf", "PMF", "--n", "8,16", "--rate", "0.8", "--trials", "300", "--seed", "9",
        ],
    ];
    let pmf_path = std::env::temp_dir().join(format!("cit-acceptance-{}.json", std::process::id()));
    std::fs::write(
        &pmf_path,
        r#"{"x":["0","1"],"y":["0","1"],"p":[[0.45,0.05],[0.05,0.45]]}"#,
    )
    .map_err(|e| e.to_string())?;
    let pmf_arg = pmf_path.to_string_lossy().into_owned();
    for args in commands {
        let args: Vec<&str> = args
            .iter()
            .map(|&a| if a == "PMF" { pmf_arg.as_str() } else { a })
            .collect();
        let mut outs = Vec::new();
        for threads in ["1", "4"] {
            let mut full = vec!["--threads", threads];
            full.extend(&args);
            let (ok, text) = cit(&full);
            ensure(ok, || format!("{full:?} failed: {text}"))?;
            outs.push(text);
        }
        ensure(outs[0] == outs[1], || {
            format!("cit {args:?} differs between 1 and 4 threads")
        })?;
    }
    let _ = std::fs::remove_file(&pmf_path);
    Ok(format!(
        "library and cli identical at 1 and 4 threads ({:.1?})",
        start.elapsed()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("bss interaction does not help", bss_interaction),
        ("interaction helps on the ternary example", interaction_helps),
        ("wyner bracket on bss", wyner_bracket),
        ("exact identity suites", identity_suites),
        ("redundant-symbol invariance", split_invariance),
        ("structure exactness", structure_exactness),
        ("simulator sanity", simulator_sanity),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
