//! Penalized exponentiated-gradient descent over products of conditional
//! simplices.
//!
//! An auxiliary variable `W = (U_1, ..., U_r)` is generated factor by factor:
//! `U_t` is drawn from a kernel conditioned on one parent (X, Y or the pair)
//! and on every earlier factor. The objective is
//! `I(X,Y ∧ W) + λ · I(X ∧ Y | W)` for a schedule of increasing `λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{JointPmf, TENSOR_CELL_BUDGET};

/// Residual (bits) at or below which a continuous point counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-4;

/// What a factor's kernel is conditioned on besides the earlier factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parent {
    X,
    Y,
    XY,
}

/// Kernel tables, one per factor, laid out `[slice][value]` where
/// `slice = parent_symbol * prefix_count + prefix`.
pub type Params = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PenaltyConfig {
    pub schedule: Vec<f64>,
    pub max_iter: usize,
    /// Relative improvement below which a stage stops early.
    pub tol: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            schedule: vec![1.0, 10.0, 100.0, 1000.0],
            max_iter: 5000,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactorModel<'a> {
    pmf: &'a JointPmf,
    parents: Vec<Parent>,
    sizes: Vec<usize>,
    prefix_counts: Vec<usize>,
    w_count: usize,
}

/// Objective and residual at one point, with the joint law that produced them.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub residual: f64,
    q: Vec<f64>,
    qw: Vec<f64>,
    qxw: Vec<f64>,
    qyw: Vec<f64>,
}

impl Evaluation {
    pub fn penalized(&self, lambda: f64) -> f64 {
        self.objective + lambda * self.residual
    }
}

fn plogp_sum(v: &[f64]) -> f64 {
    v.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum()
}

impl<'a> FactorModel<'a> {
    pub fn new(pmf: &'a JointPmf, parents: Vec<Parent>, sizes: Vec<usize>) -> Result<Self> {
        if parents.is_empty() || parents.len() != sizes.len() {
            return Err(Error::InvalidConfig(
                "factor parents and sizes must be nonempty and aligned".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig("factor sizes must be positive".into()));
        }
        let mut prefix_counts = Vec::with_capacity(sizes.len());
        let mut acc = 1.0f64;
        for &s in &sizes {
            prefix_counts.push(acc as usize);
            acc *= s as f64;
        }
        let cells = acc * (pmf.nx() * pmf.ny()) as f64;
        if cells > TENSOR_CELL_BUDGET as f64 {
            return Err(Error::SizeBudgetExceeded {
                what: "auxiliary joint law",
                required: cells,
                budget: TENSOR_CELL_BUDGET as f64,
            });
        }
        Ok(Self {
            pmf,
            parents,
            sizes,
            prefix_counts,
            w_count: acc as usize,
        })
    }

    pub fn pmf(&self) -> &JointPmf {
        self.pmf
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parents(&self) -> &[Parent] {
        &self.parents
    }

    pub fn w_count(&self) -> usize {
        self.w_count
    }

    pub fn prefix_count(&self, t: usize) -> usize {
        self.prefix_counts[t]
    }

    pub fn parent_card(&self, t: usize) -> usize {
        match self.parents[t] {
            Parent::X => self.pmf.nx(),
            Parent::Y => self.pmf.ny(),
            Parent::XY => self.pmf.nx() * self.pmf.ny(),
        }
    }

    #[inline]
    pub fn parent_symbol(&self, t: usize, x: usize, y: usize) -> usize {
        match self.parents[t] {
            Parent::X => x,
            Parent::Y => y,
            Parent::XY => x * self.pmf.ny() + y,
        }
    }

    pub fn slices(&self, t: usize) -> usize {
        self.parent_card(t) * self.prefix_counts[t]
    }

    pub fn table_len(&self, t: usize) -> usize {
        self.slices(t) * self.sizes[t]
    }

    /// Digit of factor `t` in the joint index `w` (first factor most significant).
    #[inline]
    pub fn digit(&self, w: usize, t: usize) -> usize {
        let below: usize = self.sizes[t + 1..].iter().product();
        (w / below) % self.sizes[t]
    }

    /// Index of `(u_1, ..., u_{t-1})` inside `w`.
    #[inline]
    pub fn prefix(&self, w: usize, t: usize) -> usize {
        let below: usize = self.sizes[t..].iter().product();
        w / below
    }

    pub fn validate(&self, params: &Params) -> Result<()> {
        if params.len() != self.sizes.len() {
            return Err(Error::KernelInvalid(format!(
                "expected {} kernel tables, got {}",
                self.sizes.len(),
                params.len()
            )));
        }
        for (t, table) in params.iter().enumerate() {
            if table.len() != self.table_len(t) {
                return Err(Error::KernelInvalid(format!(
                    "kernel {t} has {} entries, expected {}",
                    table.len(),
                    self.table_len(t)
                )));
            }
            for (slice, row) in table.chunks(self.sizes[t]).enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::KernelInvalid(format!(
                        "kernel {t} slice {slice} is not a distribution (sum {sum})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Joint law q(x, y, w), laid out `[(x * ny + y) * W + w]`.
    pub fn joint(&self, params: &Params) -> Vec<f64> {
        let (nx, ny, wn) = (self.pmf.nx(), self.pmf.ny(), self.w_count);
        let mut q = vec![0.0; nx * ny * wn];
        let mut cur = Vec::with_capacity(wn);
        let mut next = Vec::with_capacity(wn);
        for x in 0..nx {
            for y in 0..ny {
                let pxy = self.pmf.get(x, y);
                if pxy == 0.0 {
                    continue;
                }
                cur.clear();
                cur.push(pxy);
                for (t, table) in params.iter().enumerate() {
                    let s = self.sizes[t];
                    let base = self.parent_symbol(t, x, y) * self.prefix_counts[t];
                    next.clear();
                    for (pre, &m) in cur.iter().enumerate() {
                        let row = &table[(base + pre) * s..(base + pre + 1) * s];
                        next.extend(row.iter().map(|k| m * k));
                    }
                    std::mem::swap(&mut cur, &mut next);
                }
                q[(x * ny + y) * wn..(x * ny + y + 1) * wn].copy_from_slice(&cur);
            }
        }
        q
    }

    pub fn evaluate(&self, params: &Params) -> Evaluation {
        let q = self.joint(params);
        let (nx, ny, wn) = (self.pmf.nx(), self.pmf.ny(), self.w_count);
        let mut qw = vec![0.0; wn];
        let mut qxw = vec![0.0; nx * wn];
        let mut qyw = vec![0.0; ny * wn];
        for x in 0..nx {
            for y in 0..ny {
                let block = &q[(x * ny + y) * wn..(x * ny + y + 1) * wn];
                for (w, &v) in block.iter().enumerate() {
                    qw[w] += v;
                    qxw[x * wn + w] += v;
                    qyw[y * wn + w] += v;
                }
            }
        }
        let s_xyw = plogp_sum(&q);
        let s_w = plogp_sum(&qw);
        let s_xw = plogp_sum(&qxw);
        let s_yw = plogp_sum(&qyw);
        let s_xy = plogp_sum(self.pmf.cells());
        // H(A) = -sum p log p.
        let h_xy = -s_xy;
        let h_w = -s_w;
        let h_xyw = -s_xyw;
        let objective = h_xy + h_w - h_xyw;
        let residual = -s_xw - s_yw + s_xyw + s_w;
        Evaluation {
            objective,
            residual,
            q,
            qw,
            qxw,
            qyw,
        }
    }

    /// Conditional expectation of the pointwise gradient given each kernel
    /// entry; `None` where the entry carries no mass.
    fn gradient(&self, eval: &Evaluation, lambda: f64) -> Vec<Vec<Option<f64>>> {
        let (nx, ny, wn) = (self.pmf.nx(), self.pmf.ny(), self.w_count);
        let mut acc: Vec<Vec<f64>> = (0..self.sizes.len()).map(|t| vec![0.0; self.table_len(t)]).collect();
        let mut mass = acc.clone();
        for x in 0..nx {
            for y in 0..ny {
                let off = (x * ny + y) * wn;
                for w in 0..wn {
                    let v = eval.q[off + w];
                    if v <= 0.0 {
                        continue;
                    }
                    let g = -(1.0 - lambda) * eval.qw[w].log2() + (1.0 + lambda) * v.log2()
                        - lambda * eval.qxw[x * wn + w].log2()
                        - lambda * eval.qyw[y * wn + w].log2();
                    for t in 0..self.sizes.len() {
                        let slice = self.parent_symbol(t, x, y) * self.prefix_counts[t] + self.prefix(w, t);
                        let idx = slice * self.sizes[t] + self.digit(w, t);
                        acc[t][idx] += g * v;
                        mass[t][idx] += v;
                    }
                }
            }
        }
        acc.into_iter()
            .zip(mass)
            .map(|(a, m)| a.into_iter().zip(m).map(|(a, m)| (m > 0.0).then(|| a / m)).collect())
            .collect()
    }

    fn step(&self, params: &Params, grad: &[Vec<Option<f64>>], eta: f64) -> Params {
        params
            .iter()
            .enumerate()
            .map(|(t, table)| {
                let s = self.sizes[t];
                let mut out = table.clone();
                for (row, g) in out.chunks_mut(s).zip(grad[t].chunks(s)) {
                    let live: f64 = row
                        .iter()
                        .zip(g)
                        .filter(|(k, g)| **k > 0.0 && g.is_some())
                        .map(|(k, _)| *k)
                        .sum();
                    if live <= 0.0 {
                        continue;
                    }
                    let mean: f64 = row.iter().zip(g).filter_map(|(k, g)| g.map(|g| k * g)).sum::<f64>() / live;
                    for (k, g) in row.iter_mut().zip(g) {
                        if let (true, Some(g)) = (*k > 0.0, g) {
                            *k *= (-eta * (g - mean)).clamp(-50.0, 50.0).exp();
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|k| *k /= sum);
                }
                out
            })
            .collect()
    }

    /// Uniform-at-random point: every slice drawn from Dirichlet(1).
    pub fn random_params(&self, rng: &mut impl Rng) -> Params {
        (0..self.sizes.len())
            .map(|t| {
                let s = self.sizes[t];
                let mut table = Vec::with_capacity(self.table_len(t));
                for _ in 0..self.slices(t) {
                    let draws: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                    let sum: f64 = draws.iter().sum();
                    table.extend(draws.iter().map(|d| d / sum));
                }
                table
            })
            .collect()
    }

    /// 0/1 kernels from lookup tables `[slice] -> value`.
    pub fn one_hot(&self, functions: &[Vec<usize>]) -> Params {
        functions
            .iter()
            .enumerate()
            .map(|(t, f)| {
                let s = self.sizes[t];
                let mut table = vec![0.0; self.table_len(t)];
                for (slice, &v) in f.iter().enumerate() {
                    table[slice * s + v] = 1.0;
                }
                table
            })
            .collect()
    }

    /// Runs the penalty schedule from `start`. Each accepted step strictly
    /// lowers the penalized objective of its stage.
    pub fn descend(&self, start: Params, cfg: &PenaltyConfig, trace: bool) -> Descent {
        let mut params = start;
        let mut eval = self.evaluate(&params);
        let mut iterations = 0;
        let mut traces = Vec::new();
        for &lambda in &cfg.schedule {
            let mut stage = Vec::new();
            let mut current = eval.penalized(lambda);
            if trace {
                stage.push(current);
            }
            let mut eta = 1.0;
            for _ in 0..cfg.max_iter {
                let grad = self.gradient(&eval, lambda);
                let mut accepted = None;
                for _ in 0..60 {
                    let cand = self.step(&params, &grad, eta);
                    let ce = self.evaluate(&cand);
                    let value = ce.penalized(lambda);
                    if value < current {
                        accepted = Some((cand, ce, value));
                        break;
                    }
                    eta *= 0.5;
                    if eta < 1e-14 {
                        break;
                    }
                }
                let Some((cand, ce, value)) = accepted else {
                    break;
                };
                let improvement = current - value;
                params = cand;
                eval = ce;
                current = value;
                iterations += 1;
                if trace {
                    stage.push(current);
                }
                eta = (eta * 1.5).min(1e4);
                if improvement <= cfg.tol * (1.0 + current.abs()) {
                    break;
                }
            }
            if trace {
                traces.push(stage);
            }
        }
        Descent {
            objective: eval.objective.max(0.0),
            residual: eval.residual.max(0.0),
            params,
            iterations,
            traces,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub params: Params,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Penalized objective after each accepted step, one list per stage.
    pub traces: Vec<Vec<f64>>,
}

/// One starting point of a multi-start run.
#[derive(Debug, Clone)]
pub struct Start {
    pub label: String,
    pub params: Params,
}

/// A point considered for the final answer.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub label: String,
    pub objective: f64,
    pub residual: f64,
    pub feasible: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub params: Params,
}

/// Seeds are evaluated as-is and after descent; random starts only after
/// descent. Candidates come back in a fixed order regardless of scheduling.
pub fn multi_start(
    model: &FactorModel<'_>,
    seeds: Vec<Start>,
    random_restarts: usize,
    seed: u64,
    cfg: &PenaltyConfig,
) -> Vec<Candidate> {
    let mut starts: Vec<(Start, bool)> = seeds.into_iter().map(|s| (s, true)).collect();
    for i in 0..random_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        starts.push((
            Start {
                label: format!("random:{i}"),
                params: model.random_params(&mut rng),
            },
            false,
        ));
    }
    starts
        .into_par_iter()
        .map(|(start, keep_raw)| {
            let mut out = Vec::with_capacity(2);
            if keep_raw {
                let e = model.evaluate(&start.params);
                out.push(Candidate {
                    label: format!("{}:raw", start.label),
                    objective: e.objective.max(0.0),
                    residual: e.residual.max(0.0),
                    feasible: e.residual <= FEASIBILITY_TOL,
                    iterations: 0,
                    params: start.params.clone(),
                });
            }
            let d = model.descend(start.params, cfg, false);
            out.push(Candidate {
                label: start.label,
                objective: d.objective,
                residual: d.residual,
                feasible: d.residual <= FEASIBILITY_TOL,
                iterations: d.iterations,
                params: d.params,
            });
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Feasible candidate with the lowest objective; ties go to the earlier one.
pub fn select_best(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if !c.feasible {
            continue;
        }
        if best.is_none_or(|b| c.objective < candidates[b].objective) {
            best = Some(i);
        }
    }
    best
}
