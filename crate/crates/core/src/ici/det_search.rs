//! Exhaustive search over deterministic chains.
//!
//! Round tables are enumerated as restricted-growth strings over the
//! `(speaker symbol, prefix)` points that carry mass, so chains differing only
//! by a relabeling of some round's outputs are visited once. Unreachable table
//! entries are fixed to 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{chain_objective, check_sizes, default_sizes, speaker, Chain, ChainResult, DeterministicChain};
use crate::error::{Error, Result};
use crate::prob::{JointPmf, Side, IDENTITY_TOL};

/// Default per-round cap on top of the cardinality bound.
pub const DEFAULT_CAP: usize = 4;
/// Default ceiling on the enumeration size `Π cap^{table length}`.
pub const DEFAULT_BUDGET: f64 = 1e8;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DetSearchConfig {
    pub rounds: usize,
    pub initiator: Side,
    /// Per-round output alphabet sizes; defaults to `min(bound, 4)`.
    pub caps: Option<Vec<usize>>,
    pub budget: f64,
}

impl DetSearchConfig {
    pub fn new(rounds: usize, initiator: Side) -> Self {
        Self {
            rounds,
            initiator,
            caps: None,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_caps(mut self, caps: Vec<usize>) -> Self {
        self.caps = Some(caps);
        self
    }

    pub fn resolved_caps(&self, pmf: &JointPmf) -> Vec<usize> {
        self.caps
            .clone()
            .unwrap_or_else(|| default_sizes(pmf, self.initiator, self.rounds, DEFAULT_CAP))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetSearchResult {
    pub best: ChainResult,
    pub caps: Vec<usize>,
    /// Upper bound `Π cap^{table length}` on the function space.
    pub space_size: f64,
    /// Chains actually evaluated after canonical pruning.
    pub enumerated: u64,
    pub feasible: u64,
}

/// `Π_t cap_t^{|speaker alphabet| · Π_{j<t} cap_j}`.
pub fn space_size(pmf: &JointPmf, initiator: Side, caps: &[usize]) -> f64 {
    let mut log = 0.0;
    let mut prefix = 1.0;
    for (t, &c) in caps.iter().enumerate() {
        log += pmf.size(speaker(initiator, t)) as f64 * prefix * (c as f64).ln();
        prefix *= c as f64;
    }
    log.exp()
}

/// Shrinks the largest cap (latest round first) until the space fits `budget`.
pub fn fit_caps(pmf: &JointPmf, initiator: Side, mut caps: Vec<usize>, budget: f64) -> Vec<usize> {
    while space_size(pmf, initiator, &caps) > budget {
        let max = *caps.iter().max().unwrap();
        if max <= 1 {
            break;
        }
        let i = caps.iter().rposition(|&c| c == max).unwrap();
        caps[i] -= 1;
    }
    caps
}

struct Searcher<'a> {
    pmf: &'a JointPmf,
    initiator: Side,
    caps: Vec<usize>,
    prefix_counts: Vec<usize>,
    /// Live cells `(x, y, mass)`.
    cells: Vec<(usize, usize, f64)>,
    h_xy: f64,
}

#[derive(Debug, Clone)]
struct Best {
    objective: f64,
    functions: Vec<Vec<usize>>,
}

#[derive(Debug, Default)]
struct Tally {
    best: Option<Best>,
    enumerated: u64,
    feasible: u64,
}

impl Tally {
    fn offer(&mut self, objective: f64, residual: f64, functions: &[Vec<usize>]) {
        self.enumerated += 1;
        if residual > IDENTITY_TOL {
            return;
        }
        self.feasible += 1;
        if self.best.as_ref().is_none_or(|b| objective < b.objective - 1e-12) {
            self.best = Some(Best {
                objective,
                functions: functions.to_vec(),
            });
        }
    }

    fn merge(&mut self, other: Tally) {
        self.enumerated += other.enumerated;
        self.feasible += other.feasible;
        if let Some(b) = other.best {
            if self.best.as_ref().is_none_or(|s| b.objective < s.objective - 1e-12) {
                self.best = Some(b);
            }
        }
    }
}

/// Next restricted-growth string with values below `cap`, in lexicographic order.
fn next_rg(v: &mut [usize], cap: usize) -> bool {
    for i in (1..v.len()).rev() {
        let max_prev = v[..i].iter().copied().max().unwrap_or(0);
        if v[i] + 1 < cap && v[i] <= max_prev {
            v[i] += 1;
            v[i + 1..].iter_mut().for_each(|x| *x = 0);
            return true;
        }
    }
    false
}

impl<'a> Searcher<'a> {
    fn new(pmf: &'a JointPmf, initiator: Side, caps: Vec<usize>) -> Self {
        let mut prefix_counts = Vec::with_capacity(caps.len());
        let mut acc = 1;
        for &c in &caps {
            prefix_counts.push(acc);
            acc *= c;
        }
        let cells = (0..pmf.nx())
            .flat_map(|x| (0..pmf.ny()).map(move |y| (x, y)))
            .map(|(x, y)| (x, y, pmf.get(x, y)))
            .filter(|c| c.2 > 0.0)
            .collect();
        Self {
            pmf,
            initiator,
            caps,
            prefix_counts,
            cells,
            h_xy: pmf.entropy_xy(),
        }
    }

    fn symbol(&self, t: usize, cell: &(usize, usize, f64)) -> usize {
        match speaker(self.initiator, t) {
            Side::X => cell.0,
            Side::Y => cell.1,
        }
    }

    /// Sorted distinct table indices reached by the live cells.
    fn domain(&self, t: usize, prefixes: &[usize]) -> Vec<usize> {
        let mut d: Vec<usize> = self
            .cells
            .iter()
            .zip(prefixes)
            .map(|(c, &p)| self.symbol(t, c) * self.prefix_counts[t] + p)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Every canonical table for round `t`, in lexicographic order.
    fn tables(&self, t: usize, prefixes: &[usize]) -> Vec<Vec<usize>> {
        let domain = self.domain(t, prefixes);
        let len = self.pmf.size(speaker(self.initiator, t)) * self.prefix_counts[t];
        let mut rg = vec![0; domain.len()];
        let mut out = Vec::new();
        loop {
            let mut table = vec![0; len];
            for (&d, &v) in domain.iter().zip(&rg) {
                table[d] = v;
            }
            out.push(table);
            if !next_rg(&mut rg, self.caps[t]) {
                break;
            }
        }
        out
    }

    fn advance(&self, t: usize, table: &[usize], prefixes: &[usize]) -> Vec<usize> {
        self.cells
            .iter()
            .zip(prefixes)
            .map(|(c, &p)| p * self.caps[t] + table[self.symbol(t, c) * self.prefix_counts[t] + p])
            .collect()
    }

    /// H(W) and I(X ∧ Y | W) for W the final prefix of each cell.
    fn score(&self, atoms: &[usize]) -> (f64, f64) {
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.sort_unstable_by_key(|&i| atoms[i]);
        let plogp = |v: f64| if v > 0.0 { v * v.log2() } else { 0.0 };
        let (mut s_w, mut s_xw, mut s_yw) = (0.0, 0.0, 0.0);
        let mut i = 0;
        let nx = self.pmf.nx();
        let ny = self.pmf.ny();
        let mut px = vec![0.0; nx];
        let mut py = vec![0.0; ny];
        while i < order.len() {
            let w = atoms[order[i]];
            let mut j = i;
            let mut pw = 0.0;
            px.iter_mut().for_each(|v| *v = 0.0);
            py.iter_mut().for_each(|v| *v = 0.0);
            while j < order.len() && atoms[order[j]] == w {
                let (x, y, m) = self.cells[order[j]];
                pw += m;
                px[x] += m;
                py[y] += m;
                j += 1;
            }
            s_w += plogp(pw);
            s_xw += px.iter().map(|&v| plogp(v)).sum::<f64>();
            s_yw += py.iter().map(|&v| plogp(v)).sum::<f64>();
            i = j;
        }
        let h_w = -s_w;
        // H(X,Y,W) = H(X,Y) for a deterministic W.
        let residual = -s_xw - s_yw - self.h_xy - h_w;
        (h_w, residual.max(0.0))
    }

    fn dfs<F>(&self, t: usize, prefixes: &[usize], functions: &mut Vec<Vec<usize>>, tally: &mut Tally, visit: &mut F)
    where
        F: FnMut(&[Vec<usize>], f64, f64),
    {
        if t == self.caps.len() {
            let (objective, residual) = self.score(prefixes);
            visit(functions, objective, residual);
            tally.offer(objective, residual, functions);
            return;
        }
        for table in self.tables(t, prefixes) {
            let next = self.advance(t, &table, prefixes);
            functions.push(table);
            self.dfs(t + 1, &next, functions, tally, visit);
            functions.pop();
        }
    }

    fn chain(&self, functions: Vec<Vec<usize>>) -> DeterministicChain {
        DeterministicChain {
            initiator: self.initiator,
            sizes: self.caps.clone(),
            functions,
        }
    }
}

fn prepare(pmf: &JointPmf, cfg: &DetSearchConfig) -> Result<(Vec<usize>, f64)> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let caps = cfg.resolved_caps(pmf);
    if caps.len() != cfg.rounds {
        return Err(Error::InvalidConfig(format!(
            "{} caps given for {} rounds",
            caps.len(),
            cfg.rounds
        )));
    }
    check_sizes(pmf, cfg.initiator, &caps)?;
    let size = space_size(pmf, cfg.initiator, &caps);
    if size > cfg.budget {
        return Err(Error::BudgetExceeded {
            count: size,
            budget: cfg.budget,
        });
    }
    Ok((caps, size))
}

/// Minimum-objective feasible deterministic chain within the caps.
pub fn det_chain_search(pmf: &JointPmf, cfg: &DetSearchConfig) -> Result<DetSearchResult> {
    let (caps, size) = prepare(pmf, cfg)?;
    let searcher = Searcher::new(pmf, cfg.initiator, caps.clone());
    let start = vec![0; searcher.cells.len()];
    let first = searcher.tables(0, &start);
    let tallies: Vec<Tally> = first
        .into_par_iter()
        .map(|table| {
            let mut tally = Tally::default();
            let next = searcher.advance(0, &table, &start);
            let mut functions = vec![table];
            searcher.dfs(1, &next, &mut functions, &mut tally, &mut |_, _, _| {});
            tally
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total.merge(t);
    }
    let best = total.best.ok_or(Error::NoFeasibleChain)?;
    let chain = searcher.chain(best.functions);
    let result = chain_objective(pmf, &Chain::Deterministic(chain))?;
    Ok(DetSearchResult {
        best: result,
        caps,
        space_size: size,
        enumerated: total.enumerated,
        feasible: total.feasible,
    })
}

/// Visits every canonical chain in enumeration order with `(chain, objective, residual)`.
pub fn det_chain_visit<F>(pmf: &JointPmf, cfg: &DetSearchConfig, mut visit: F) -> Result<()>
where
    F: FnMut(&DeterministicChain, f64, f64),
{
    let (caps, _) = prepare(pmf, cfg)?;
    let searcher = Searcher::new(pmf, cfg.initiator, caps);
    let start = vec![0; searcher.cells.len()];
    let mut tally = Tally::default();
    let mut wrapped = |f: &[Vec<usize>], o: f64, r: f64| {
        let chain = searcher.chain(f.to_vec());
        visit(&chain, o, r);
    };
    searcher.dfs(0, &start, &mut Vec::new(), &mut tally, &mut wrapped);
    Ok(())
}
