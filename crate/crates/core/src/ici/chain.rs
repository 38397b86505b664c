use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{FactorModel, Params, Parent, FEASIBILITY_TOL};
use crate::prob::{FiniteAlphabet, JointPmf, Side, TensorPmf, IDENTITY_TOL};
use crate::wyner::AuxKernel;

/// Which terminal speaks in round `t` (0-based).
pub fn speaker(initiator: Side, t: usize) -> Side {
    if t.is_multiple_of(2) {
        initiator
    } else {
        initiator.other()
    }
}

pub(crate) fn parent_of(side: Side) -> Parent {
    match side {
        Side::X => Parent::X,
        Side::Y => Parent::Y,
    }
}

pub(crate) fn parents(initiator: Side, rounds: usize) -> Vec<Parent> {
    (0..rounds).map(|t| parent_of(speaker(initiator, t))).collect()
}

/// Cardinality ceiling for round `t` given the sizes of earlier rounds:
/// `|speaker alphabet| · Π_{j<t} |U_j| + 1`.
pub fn cardinality_bound(pmf: &JointPmf, initiator: Side, t: usize, earlier: &[usize]) -> usize {
    let prod: usize = earlier[..t].iter().product();
    pmf.size(speaker(initiator, t)) * prod + 1
}

/// Per-round sizes `min(bound, cap)` built round by round.
pub fn default_sizes(pmf: &JointPmf, initiator: Side, rounds: usize, cap: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let b = cardinality_bound(pmf, initiator, t, &sizes);
        sizes.push(b.min(cap));
    }
    sizes
}

pub(crate) fn check_sizes(pmf: &JointPmf, initiator: Side, sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidConfig("a chain needs at least one round".into()));
    }
    for t in 0..sizes.len() {
        let bound = cardinality_bound(pmf, initiator, t, sizes);
        if sizes[t] == 0 || sizes[t] > bound {
            return Err(Error::InvalidConfig(format!(
                "round {} size {} outside 1..={bound}",
                t + 1,
                sizes[t]
            )));
        }
    }
    Ok(())
}

/// Randomized chain: round `t` draws `U_t` from `P(U_t | speaker, U^{t-1})`.
///
/// `kernels[t]` is laid out `[speaker_symbol * prefix_count + prefix][u_t]`,
/// with the prefix `(u_1, ..., u_{t-1})` in mixed radix, `u_1` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryChain {
    pub initiator: Side,
    pub sizes: Vec<usize>,
    pub kernels: Params,
}

/// Chain of lookup tables: round `t` maps `(speaker symbol, u^{t-1})` to `u_t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicChain {
    pub initiator: Side,
    pub sizes: Vec<usize>,
    pub functions: Vec<Vec<usize>>,
}

pub(crate) fn prefix_counts(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut acc = 1;
    for &s in sizes {
        out.push(acc);
        acc *= s;
    }
    out
}

impl AuxiliaryChain {
    pub fn rounds(&self) -> usize {
        self.sizes.len()
    }

    pub fn model<'a>(&self, pmf: &'a JointPmf) -> Result<FactorModel<'a>> {
        FactorModel::new(pmf, parents(self.initiator, self.rounds()), self.sizes.clone())
    }

    pub fn validate(&self, pmf: &JointPmf) -> Result<()> {
        check_sizes(pmf, self.initiator, &self.sizes)?;
        self.model(pmf)?.validate(&self.kernels)
    }

    /// Every slice drawn from Dirichlet(1).
    pub fn random(pmf: &JointPmf, initiator: Side, sizes: Vec<usize>, rng: &mut impl Rng) -> Result<Self> {
        let model = FactorModel::new(pmf, parents(initiator, sizes.len()), sizes.clone())?;
        Ok(Self {
            initiator,
            kernels: model.random_params(rng),
            sizes,
        })
    }

    /// W = U^r as a kernel on (X, Y), restricted to atoms that occur.
    pub fn to_aux_kernel(&self, pmf: &JointPmf) -> Result<AuxKernel> {
        let model = self.model(pmf)?;
        let q = model.joint(&self.kernels);
        let wn = model.w_count();
        let mut k = vec![0.0; q.len()];
        for (c, &m) in pmf.cells().iter().enumerate() {
            if m > 0.0 {
                for w in 0..wn {
                    k[c * wn + w] = q[c * wn + w] / m;
                }
            } else {
                k[c * wn] = 1.0;
            }
        }
        Ok(AuxKernel::new(pmf.nx(), pmf.ny(), wn, k)?.compact(pmf))
    }
}

impl DeterministicChain {
    pub fn rounds(&self) -> usize {
        self.sizes.len()
    }

    fn table_len(&self, pmf: &JointPmf, t: usize) -> usize {
        pmf.size(speaker(self.initiator, t)) * prefix_counts(&self.sizes)[t]
    }

    pub fn validate(&self, pmf: &JointPmf) -> Result<()> {
        check_sizes(pmf, self.initiator, &self.sizes)?;
        if self.functions.len() != self.sizes.len() {
            return Err(Error::InvalidConfig("one lookup table per round is required".into()));
        }
        for (t, f) in self.functions.iter().enumerate() {
            if f.len() != self.table_len(pmf, t) {
                return Err(Error::InvalidConfig(format!(
                    "round {} table has {} entries, expected {}",
                    t + 1,
                    f.len(),
                    self.table_len(pmf, t)
                )));
            }
            if let Some(v) = f.iter().find(|&&v| v >= self.sizes[t]) {
                return Err(Error::InvalidConfig(format!(
                    "round {} emits {v}, alphabet size is {}",
                    t + 1,
                    self.sizes[t]
                )));
            }
        }
        Ok(())
    }

    /// Atom `u^r` reached from `(x, y)`, as digits.
    pub fn atom(&self, x: usize, y: usize) -> Vec<usize> {
        let pcs = prefix_counts(&self.sizes);
        let mut prefix = 0;
        let mut out = Vec::with_capacity(self.rounds());
        for (t, f) in self.functions.iter().enumerate() {
            let s = match speaker(self.initiator, t) {
                Side::X => x,
                Side::Y => y,
            };
            let u = f[s * pcs[t] + prefix];
            out.push(u);
            prefix = prefix * self.sizes[t] + u;
        }
        out
    }

    pub fn to_auxiliary(&self, pmf: &JointPmf) -> Result<AuxiliaryChain> {
        self.embed(pmf, &self.sizes)
    }

    /// 0/1 kernels over possibly larger alphabets; prefixes that the chain
    /// never produces map to value 0.
    pub fn embed(&self, pmf: &JointPmf, sizes: &[usize]) -> Result<AuxiliaryChain> {
        if sizes.len() != self.sizes.len() || sizes.iter().zip(&self.sizes).any(|(n, o)| n < o) {
            return Err(Error::InvalidConfig(format!(
                "cannot embed chain with sizes {:?} into {sizes:?}",
                self.sizes
            )));
        }
        let old_pc = prefix_counts(&self.sizes);
        let new_pc = prefix_counts(sizes);
        let kernels = (0..self.rounds())
            .map(|t| {
                let card = pmf.size(speaker(self.initiator, t));
                let mut table = vec![0.0; card * new_pc[t] * sizes[t]];
                for s in 0..card {
                    for pre in 0..new_pc[t] {
                        // Decode the prefix in the new radix, re-encode in the old.
                        let mut rest = pre;
                        let mut digits = vec![0; t];
                        for j in (0..t).rev() {
                            digits[j] = rest % sizes[j];
                            rest /= sizes[j];
                        }
                        let value = if digits.iter().zip(&self.sizes).all(|(d, s)| d < s) {
                            let old = digits.iter().zip(&self.sizes).fold(0, |acc, (d, s)| acc * s + d);
                            self.functions[t][s * old_pc[t] + old]
                        } else {
                            0
                        };
                        table[(s * new_pc[t] + pre) * sizes[t] + value] = 1.0;
                    }
                }
                table
            })
            .collect();
        Ok(AuxiliaryChain {
            initiator: self.initiator,
            sizes: sizes.to_vec(),
            kernels,
        })
    }

    /// Relabels each round's outputs by first appearance over the reachable
    /// `(speaker symbol, prefix)` points in table order, zeroing unreachable
    /// entries. Two chains with the same canonical form have the same atoms up
    /// to relabeling.
    pub fn canonicalize(&self, pmf: &JointPmf) -> Self {
        let pcs = prefix_counts(&self.sizes);
        let cells: Vec<(usize, usize)> = (0..pmf.nx())
            .flat_map(|x| (0..pmf.ny()).map(move |y| (x, y)))
            .filter(|&(x, y)| pmf.get(x, y) > 0.0)
            .collect();
        // Prefix of every live cell in old and new labels.
        let mut old_prefix = vec![0usize; cells.len()];
        let mut new_prefix = vec![0usize; cells.len()];
        let mut functions = Vec::with_capacity(self.rounds());
        for t in 0..self.rounds() {
            let side = speaker(self.initiator, t);
            let sym = |&(x, y): &(usize, usize)| match side {
                Side::X => x,
                Side::Y => y,
            };
            let mut points: Vec<(usize, usize)> = cells
                .iter()
                .zip(old_prefix.iter().zip(&new_prefix))
                .map(|(c, (&op, &np))| (sym(c) * pcs[t] + np, sym(c) * pcs[t] + op))
                .collect();
            points.sort_unstable();
            points.dedup();
            let mut relabel: Vec<Option<usize>> = vec![None; self.sizes[t]];
            let mut next = 0;
            let mut table = vec![0; pmf.size(side) * pcs[t]];
            for &(new_idx, old_idx) in &points {
                let old_value = self.functions[t][old_idx];
                let v = *relabel[old_value].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                });
                table[new_idx] = v;
            }
            for (i, c) in cells.iter().enumerate() {
                let old_value = self.functions[t][sym(c) * pcs[t] + old_prefix[i]];
                old_prefix[i] = old_prefix[i] * self.sizes[t] + old_value;
                new_prefix[i] = new_prefix[i] * self.sizes[t] + relabel[old_value].unwrap();
            }
            functions.push(table);
        }
        Self {
            initiator: self.initiator,
            sizes: self.sizes.clone(),
            functions,
        }
    }
}

/// A chain of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Chain {
    Auxiliary(AuxiliaryChain),
    Deterministic(DeterministicChain),
}

impl Chain {
    pub fn initiator(&self) -> Side {
        match self {
            Chain::Auxiliary(c) => c.initiator,
            Chain::Deterministic(c) => c.initiator,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        match self {
            Chain::Auxiliary(c) => &c.sizes,
            Chain::Deterministic(c) => &c.sizes,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Chain::Deterministic(_))
    }

    pub fn to_auxiliary(&self, pmf: &JointPmf) -> Result<AuxiliaryChain> {
        match self {
            Chain::Auxiliary(c) => Ok(c.clone()),
            Chain::Deterministic(c) => c.to_auxiliary(pmf),
        }
    }

    pub fn validate(&self, pmf: &JointPmf) -> Result<()> {
        match self {
            Chain::Auxiliary(c) => c.validate(pmf),
            Chain::Deterministic(c) => c.validate(pmf),
        }
    }
}

/// JSON form: nested `[speaker symbol][prefix]` arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChainFile {
    Auxiliary {
        initiator: Side,
        sizes: Vec<usize>,
        kernels: Vec<Vec<Vec<Vec<f64>>>>,
    },
    Deterministic {
        initiator: Side,
        sizes: Vec<usize>,
        functions: Vec<Vec<Vec<usize>>>,
    },
}

impl From<&Chain> for ChainFile {
    fn from(c: &Chain) -> Self {
        match c {
            Chain::Auxiliary(a) => {
                let pcs = prefix_counts(&a.sizes);
                ChainFile::Auxiliary {
                    initiator: a.initiator,
                    sizes: a.sizes.clone(),
                    kernels: a
                        .kernels
                        .iter()
                        .enumerate()
                        .map(|(t, k)| {
                            k.chunks(pcs[t] * a.sizes[t])
                                .map(|per_sym| per_sym.chunks(a.sizes[t]).map(|r| r.to_vec()).collect())
                                .collect()
                        })
                        .collect(),
                }
            }
            Chain::Deterministic(d) => {
                let pcs = prefix_counts(&d.sizes);
                ChainFile::Deterministic {
                    initiator: d.initiator,
                    sizes: d.sizes.clone(),
                    functions: d
                        .functions
                        .iter()
                        .enumerate()
                        .map(|(t, f)| f.chunks(pcs[t]).map(|r| r.to_vec()).collect())
                        .collect(),
                }
            }
        }
    }
}

impl From<ChainFile> for Chain {
    fn from(f: ChainFile) -> Self {
        match f {
            ChainFile::Auxiliary {
                initiator,
                sizes,
                kernels,
            } => Chain::Auxiliary(AuxiliaryChain {
                initiator,
                sizes,
                kernels: kernels
                    .into_iter()
                    .map(|k| k.into_iter().flatten().flatten().collect())
                    .collect(),
            }),
            ChainFile::Deterministic {
                initiator,
                sizes,
                functions,
            } => Chain::Deterministic(DeterministicChain {
                initiator,
                sizes,
                functions: functions
                    .into_iter()
                    .map(|f| f.into_iter().flatten().collect())
                    .collect(),
            }),
        }
    }
}

impl Serialize for Chain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChainFile::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        ChainFile::deserialize(deserializer).map(Chain::from)
    }
}

/// Objective, residual and per-round decomposition of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct ChainResult {
    /// I(X,Y ∧ U^r).
    pub objective: f64,
    /// I(X ∧ Y | U^r).
    pub residual: f64,
    /// `I(speaker ∧ U_t | listener, U^{t-1})` for every round.
    pub per_round_terms: Vec<f64>,
    pub feasible: bool,
    pub chain: Chain,
}

impl ChainResult {
    /// `objective − I(X∧Y) + residual − Σ terms`; zero up to rounding.
    pub fn identity_gap(&self, mi: f64) -> f64 {
        self.objective - mi + self.residual - self.per_round_terms.iter().sum::<f64>()
    }
}

/// Builds the joint law of (X, Y, U_1, ..., U_r) round by round and reads off
/// every quantity through generic entropy evaluations.
pub fn chain_objective(pmf: &JointPmf, chain: &Chain) -> Result<ChainResult> {
    chain.validate(pmf)?;
    let aux = chain.to_auxiliary(pmf)?;
    let pcs = prefix_counts(&aux.sizes);
    let mut t_pmf = TensorPmf::from_joint(pmf);
    let names: Vec<String> = (1..=aux.rounds()).map(|k| format!("U{k}")).collect();
    for t in 0..aux.rounds() {
        let side = speaker(aux.initiator, t);
        let size = aux.sizes[t];
        let table = &aux.kernels[t];
        let sizes = &aux.sizes;
        t_pmf = t_pmf.extend_with(&names[t], FiniteAlphabet::indexed("u", size), |idx, row| {
            let s = match side {
                Side::X => idx[0],
                Side::Y => idx[1],
            };
            let prefix = idx[2..].iter().zip(sizes).fold(0, |acc, (d, s)| acc * s + d);
            let off = (s * pcs[t] + prefix) * size;
            row.copy_from_slice(&table[off..off + size]);
        })?;
    }
    let us: Vec<&str> = names.iter().map(String::as_str).collect();
    let objective = t_pmf.mutual_information(&["X", "Y"], &us)?;
    let residual = t_pmf.conditional_mutual_information(&["X"], &["Y"], &us)?;
    let mut per_round_terms = Vec::with_capacity(us.len());
    for t in 0..us.len() {
        let (talker, listener) = match speaker(aux.initiator, t) {
            Side::X => ("X", "Y"),
            Side::Y => ("Y", "X"),
        };
        let mut given = vec![listener];
        given.extend_from_slice(&us[..t]);
        per_round_terms.push(t_pmf.conditional_mutual_information(&[talker], &[us[t]], &given)?);
    }
    let threshold = if chain.is_deterministic() {
        IDENTITY_TOL
    } else {
        FEASIBILITY_TOL
    };
    Ok(ChainResult {
        objective,
        residual,
        per_round_terms,
        feasible: residual <= threshold,
        chain: chain.clone(),
    })
}

/// r-round chain whose round `round` copies `g` of its speaker and whose other
/// rounds are constant.
pub fn labeling_chain(
    pmf: &JointPmf,
    initiator: Side,
    rounds: usize,
    round: usize,
    classes: &[usize],
) -> DeterministicChain {
    let k = classes.iter().copied().max().map_or(1, |m| m + 1);
    let sizes: Vec<usize> = (0..rounds).map(|t| if t == round { k } else { 1 }).collect();
    let pcs = prefix_counts(&sizes);
    let functions = (0..rounds)
        .map(|t| {
            let card = pmf.size(speaker(initiator, t));
            let mut f = vec![0; card * pcs[t]];
            if t == round {
                for s in 0..card {
                    for p in 0..pcs[t] {
                        f[s * pcs[t] + p] = classes[s];
                    }
                }
            }
            f
        })
        .collect();
    DeterministicChain {
        initiator,
        sizes,
        functions,
    }
}
