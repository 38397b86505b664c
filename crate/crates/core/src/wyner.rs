//! Upper bounds on Wyner's common information
//! `CI_W = min I(X,Y ∧ W)` over `X −◦− W −◦− Y`, `|W| ≤ |X||Y|`.
//!
//! The program is nonconvex. [`wyner_minimize`] returns the best feasible
//! point found from a fixed set of seeds plus seeded random restarts, which is
//! an upper bound on the true value.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optim::{multi_start, select_best, Candidate, FactorModel, Parent, PenaltyConfig, Start, FEASIBILITY_TOL};
use crate::prob::{JointPmf, Side};
use crate::structure::{minimal_sufficient_statistic, Labeling};

/// Conditional table P(W = w | X = x, Y = y).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxKernel {
    nx: usize,
    ny: usize,
    w_size: usize,
    k: Vec<f64>,
}

impl AuxKernel {
    /// `rows[x * ny + y]` is the distribution of W given (x, y).
    pub fn new(nx: usize, ny: usize, w_size: usize, k: Vec<f64>) -> Result<Self> {
        if k.len() != nx * ny * w_size || w_size == 0 {
            return Err(Error::KernelInvalid(format!(
                "kernel has {} entries, expected {}",
                k.len(),
                nx * ny * w_size
            )));
        }
        for (i, row) in k.chunks(w_size).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::KernelInvalid(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { nx, ny, w_size, k })
    }

    /// W = (X, Y).
    pub fn identity(pmf: &JointPmf) -> Self {
        let (nx, ny) = (pmf.nx(), pmf.ny());
        Self::deterministic(nx, ny, nx * ny, |x, y| x * ny + y)
    }

    pub fn constant(pmf: &JointPmf, w_size: usize) -> Self {
        Self::deterministic(pmf.nx(), pmf.ny(), w_size, |_, _| 0)
    }

    /// W = labeling applied to one side.
    pub fn from_labeling(pmf: &JointPmf, side: Side, labeling: &Labeling) -> Self {
        Self::deterministic(pmf.nx(), pmf.ny(), labeling.num_classes(), |x, y| match side {
            Side::X => labeling.class(x),
            Side::Y => labeling.class(y),
        })
    }

    pub fn deterministic(nx: usize, ny: usize, w_size: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let mut k = vec![0.0; nx * ny * w_size];
        for x in 0..nx {
            for y in 0..ny {
                k[(x * ny + y) * w_size + f(x, y)] = 1.0;
            }
        }
        Self { nx, ny, w_size, k }
    }

    /// Drops W values that never occur under `pmf` and relabels the rest.
    pub fn compact(&self, pmf: &JointPmf) -> Self {
        let used: Vec<usize> = (0..self.w_size)
            .filter(|&w| (0..self.nx * self.ny).any(|c| pmf.cells()[c] > 0.0 && self.k[c * self.w_size + w] > 0.0))
            .collect();
        let w_size = used.len().max(1);
        let mut k = vec![0.0; self.nx * self.ny * w_size];
        for c in 0..self.nx * self.ny {
            if pmf.cells()[c] > 0.0 {
                for (j, &w) in used.iter().enumerate() {
                    k[c * w_size + j] = self.k[c * self.w_size + w];
                }
            } else {
                k[c * w_size] = 1.0;
            }
        }
        Self {
            nx: self.nx,
            ny: self.ny,
            w_size,
            k,
        }
    }

    /// Embeds into a larger W alphabet; `None` when it does not fit.
    pub fn padded(&self, w_size: usize) -> Option<Self> {
        if self.w_size > w_size {
            return None;
        }
        let mut k = vec![0.0; self.nx * self.ny * w_size];
        for (c, row) in self.k.chunks(self.w_size).enumerate() {
            k[c * w_size..c * w_size + self.w_size].copy_from_slice(row);
        }
        Some(Self {
            nx: self.nx,
            ny: self.ny,
            w_size,
            k,
        })
    }

    /// Kernel on a finer X alphabet with `class_of[x]` naming the X symbol
    /// of `self` that `x` refines.
    pub fn lift_x(&self, class_of: &[usize]) -> Self {
        let mut k = Vec::with_capacity(class_of.len() * self.ny * self.w_size);
        for &c in class_of {
            for y in 0..self.ny {
                let off = (c * self.ny + y) * self.w_size;
                k.extend_from_slice(&self.k[off..off + self.w_size]);
            }
        }
        Self {
            nx: class_of.len(),
            ny: self.ny,
            w_size: self.w_size,
            k,
        }
    }

    /// Kernel on the merged X alphabet: the law of W given (class, y) under
    /// `fine` and `self`. Under merging neither the objective nor the
    /// residual can grow.
    pub fn merge_x(&self, fine: &JointPmf, class_of: &[usize], classes: usize) -> Result<Self> {
        self.check_shape(fine)?;
        if class_of.len() != self.nx || class_of.iter().any(|&c| c >= classes) {
            return Err(Error::InvalidConfig("class map does not match the kernel".into()));
        }
        let mut k = vec![0.0; classes * self.ny * self.w_size];
        let mut mass = vec![0.0; classes * self.ny];
        for (x, &c) in class_of.iter().enumerate() {
            for y in 0..self.ny {
                let p = fine.get(x, y);
                mass[c * self.ny + y] += p;
                for w in 0..self.w_size {
                    k[(c * self.ny + y) * self.w_size + w] += p * self.get(x, y, w);
                }
            }
        }
        for (cell, &m) in mass.iter().enumerate() {
            let row = &mut k[cell * self.w_size..(cell + 1) * self.w_size];
            if m > 0.0 {
                row.iter_mut().for_each(|v| *v /= m);
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row.fill(0.0);
                row[0] = 1.0;
            }
        }
        Self::new(classes, self.ny, self.w_size, k)
    }

    pub fn w_size(&self) -> usize {
        self.w_size
    }

    pub fn get(&self, x: usize, y: usize, w: usize) -> f64 {
        self.k[(x * self.ny + y) * self.w_size + w]
    }

    pub fn table(&self) -> &[f64] {
        &self.k
    }

    fn check_shape(&self, pmf: &JointPmf) -> Result<()> {
        if self.nx != pmf.nx() || self.ny != pmf.ny() {
            return Err(Error::KernelInvalid(format!(
                "kernel is for a {}x{} source, pmf is {}x{}",
                self.nx,
                self.ny,
                pmf.nx(),
                pmf.ny()
            )));
        }
        Ok(())
    }
}

impl Serialize for AuxKernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let nested: Vec<Vec<&[f64]>> = self
            .k
            .chunks(self.w_size * self.ny)
            .map(|row| row.chunks(self.w_size).collect())
            .collect();
        let mut st = serializer.serialize_struct("AuxKernel", 2)?;
        st.serialize_field("w_size", &self.w_size)?;
        st.serialize_field("kernel", &nested)?;
        st.end()
    }
}

/// Returns `(I(X,Y ∧ W), I(X ∧ Y | W))` for the given kernel.
pub fn wyner_objective(pmf: &JointPmf, kernel: &AuxKernel) -> Result<(f64, f64)> {
    kernel.check_shape(pmf)?;
    let model = FactorModel::new(pmf, vec![Parent::XY], vec![kernel.w_size])?;
    let e = model.evaluate(&vec![kernel.k.clone()]);
    Ok((e.objective.max(0.0), e.residual.max(0.0)))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WynerConfig {
    /// Size of the W alphabet; defaults to |X||Y|.
    pub w_size: Option<usize>,
    /// Number of Dirichlet(1) random starts in addition to the fixed seeds.
    pub restarts: usize,
    pub penalty: PenaltyConfig,
    pub seed: u64,
}

impl Default for WynerConfig {
    fn default() -> Self {
        Self {
            w_size: None,
            restarts: 32,
            penalty: PenaltyConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WynerResult {
    /// Best feasible I(X,Y ∧ W); an upper bound on CI_W.
    pub value: f64,
    /// I(X ∧ Y | W) at the reported point.
    pub residual: f64,
    pub feasible: bool,
    pub kernel: AuxKernel,
    pub best_start: String,
    pub restarts_used: usize,
    pub iterations: usize,
    pub candidates: Vec<Candidate>,
    pub config: WynerConfig,
}

/// Minimizes `I(X,Y ∧ W) + λ I(X ∧ Y | W)` along the penalty schedule.
///
/// Fixed seeds: W = (X, Y), constant W, W = g1*(X), W = g2*(Y), then
/// `extra_seeds` (compacted and padded to the W alphabet, skipped if too large).
pub fn wyner_minimize(pmf: &JointPmf, cfg: &WynerConfig, extra_seeds: &[AuxKernel]) -> Result<WynerResult> {
    let cap = pmf.nx() * pmf.ny();
    let w_size = cfg.w_size.unwrap_or(cap);
    if w_size == 0 || w_size > cap {
        return Err(Error::InvalidConfig(format!("w_size {w_size} must lie in 1..={cap}")));
    }
    let model = FactorModel::new(pmf, vec![Parent::XY], vec![w_size])?;

    let g1 = minimal_sufficient_statistic(pmf, Side::X)?;
    let g2 = minimal_sufficient_statistic(pmf, Side::Y)?;
    let mut seeds: Vec<(String, AuxKernel)> = vec![
        ("identity".into(), AuxKernel::identity(pmf)),
        ("constant".into(), AuxKernel::constant(pmf, 1)),
        ("g1*".into(), AuxKernel::from_labeling(pmf, Side::X, &g1)),
        ("g2*".into(), AuxKernel::from_labeling(pmf, Side::Y, &g2)),
    ];
    for (i, s) in extra_seeds.iter().enumerate() {
        s.check_shape(pmf)?;
        seeds.push((format!("supplied:{i}"), s.compact(pmf)));
    }
    let starts: Vec<Start> = seeds
        .into_iter()
        .filter_map(|(label, k)| {
            k.padded(w_size).map(|k| Start {
                label,
                params: vec![k.k],
            })
        })
        .collect();
    let n_starts = starts.len() + cfg.restarts;

    let candidates = multi_start(&model, starts, cfg.restarts, cfg.seed, &cfg.penalty);
    let best = select_best(&candidates).ok_or(Error::NoFeasiblePoint {
        threshold: FEASIBILITY_TOL,
    })?;
    let c = &candidates[best];
    Ok(WynerResult {
        value: c.objective,
        residual: c.residual,
        feasible: c.feasible,
        kernel: AuxKernel::new(pmf.nx(), pmf.ny(), w_size, c.params[0].clone())?,
        best_start: c.label.clone(),
        restarts_used: n_starts,
        iterations: candidates.iter().map(|c| c.iterations).sum(),
        candidates,
        config: cfg.clone(),
    })
}

/// Objective of the explicit binary auxiliary for BSS(δ): W uniform on {0,1},
/// X and Y independent BSC(a0) outputs of W with `2 a0 (1 − a0) = δ`.
pub fn bss_binary_auxiliary_bound(delta: f64) -> Result<f64> {
    use crate::prob::binary_entropy as h;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let a0 = (1.0 - (1.0 - 2.0 * delta).sqrt()) / 2.0;
    Ok(1.0 + h(delta) - 2.0 * h(a0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{bss, gain_example};
    use approx::assert_abs_diff_eq;

    fn small_cfg() -> WynerConfig {
        WynerConfig {
            restarts: 4,
            penalty: PenaltyConfig {
                max_iter: 1000,
                ..PenaltyConfig::default()
            },
            ..WynerConfig::default()
        }
    }

    #[test]
    fn objective_examples() {
        let p = bss(0.25).unwrap();
        let (o, r) = wyner_objective(&p, &AuxKernel::identity(&p)).unwrap();
        assert_abs_diff_eq!(o, p.entropy_xy(), epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        let (o, r) = wyner_objective(&p, &AuxKernel::constant(&p, 3)).unwrap();
        assert_abs_diff_eq!(o, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r, p.mutual_information(), epsilon = 1e-12);

        let g = gain_example(0.1, 0.15, 0.15).unwrap();
        let g1 = minimal_sufficient_statistic(&g, Side::X).unwrap();
        let (o, r) = wyner_objective(&g, &AuxKernel::from_labeling(&g, Side::X, &g1)).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o, g.entropy_x(), epsilon = 1e-12);
    }

    #[test]
    fn explicit_binary_auxiliary_matches_its_formula() {
        // Build the construction's joint law directly and evaluate it.
        let delta = 0.25;
        let a0 = (1.0 - (1.0f64 - 2.0 * delta).sqrt()) / 2.0;
        let p = bss(delta).unwrap();
        let mut k = vec![0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                let joint: Vec<f64> = (0..2)
                    .map(|w| {
                        let fx = if x == w { 1.0 - a0 } else { a0 };
                        let fy = if y == w { 1.0 - a0 } else { a0 };
                        0.5 * fx * fy
                    })
                    .collect();
                let s: f64 = joint.iter().sum();
                assert_abs_diff_eq!(s, p.get(x, y), epsilon = 1e-12);
                for w in 0..2 {
                    k[(x * 2 + y) * 2 + w] = joint[w] / s;
                }
            }
        }
        let kernel = AuxKernel::new(2, 2, 2, k).unwrap();
        let (o, r) = wyner_objective(&p, &kernel).unwrap();
        assert!(r < 1e-12);
        assert_abs_diff_eq!(o, bss_binary_auxiliary_bound(delta).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(o, 0.609526, epsilon = 1e-6);
    }

    #[test]
    fn copy_source_has_value_one() {
        let p = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let r = wyner_minimize(&p, &small_cfg(), &[]).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn independent_source_has_value_zero() {
        let p = JointPmf::from_rows(&[vec![0.12, 0.28], vec![0.18, 0.42]]).unwrap();
        let r = wyner_minimize(&p, &small_cfg(), &[]).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn rejects_oversized_alphabet() {
        let p = bss(0.25).unwrap();
        let cfg = WynerConfig {
            w_size: Some(5),
            ..small_cfg()
        };
        assert!(matches!(wyner_minimize(&p, &cfg, &[]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn supplied_seed_bounds_the_result() {
        let p = gain_example(0.1, 0.15, 0.15).unwrap();
        // The two-round chain's atoms as a W kernel.
        let f1 = [1usize, 1, 0];
        let kernel = AuxKernel::deterministic(3, 3, 4, |x, y| {
            let u1 = f1[x];
            let u2 = if u1 == 0 {
                0
            } else if y == 0 {
                1
            } else {
                2
            };
            if u1 == 0 {
                0
            } else {
                u2
            }
        })
        .compact(&p);
        let (seed_value, seed_residual) = wyner_objective(&p, &kernel).unwrap();
        assert!(seed_residual < 1e-12);
        let r = wyner_minimize(&p, &small_cfg(), &[kernel]).unwrap();
        assert!(r.value <= seed_value + 1e-9);
        assert!(r.value >= p.mutual_information() - 1e-6);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = bss(0.3).unwrap();
        let a = wyner_minimize(&p, &small_cfg(), &[]).unwrap();
        let b = wyner_minimize(&p, &small_cfg(), &[]).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
