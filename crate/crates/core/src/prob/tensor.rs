use super::alphabet::FiniteAlphabet;
use super::pmf::JointPmf;
use crate::error::{Error, Result};

/// Largest dense tensor (in cells) any operation will materialize.
pub const TENSOR_CELL_BUDGET: usize = 1 << 22;

const KERNEL_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub alphabet: FiniteAlphabet,
}

impl Axis {
    pub fn new(name: &str, alphabet: FiniteAlphabet) -> Self {
        Self {
            name: name.to_string(),
            alphabet,
        }
    }
}

/// Dense joint pmf over two or more named axes, row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPmf {
    axes: Vec<Axis>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    p: Vec<f64>,
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

fn check_budget(what: &'static str, cells: f64) -> Result<()> {
    if cells > TENSOR_CELL_BUDGET as f64 {
        return Err(Error::SizeBudgetExceeded {
            what,
            required: cells,
            budget: TENSOR_CELL_BUDGET as f64,
        });
    }
    Ok(())
}

impl TensorPmf {
    pub fn new(axes: Vec<Axis>, mut p: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptySubset);
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::OverlappingAxes(a.name.clone()));
            }
        }
        let dims: Vec<usize> = axes.iter().map(|a| a.alphabet.len()).collect();
        let cells: f64 = dims.iter().map(|&d| d as f64).product();
        check_budget("tensor", cells)?;
        if p.len() != cells as usize {
            return Err(Error::KernelInvalid(format!(
                "tensor has {} cells, axes imply {cells}",
                p.len()
            )));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NegativeMass {
                row: i,
                col: 0,
                value: p[i],
            });
        }
        let sum: f64 = p.iter().sum();
        if sum == 0.0 {
            return Err(Error::EmptyMatrix);
        }
        if (sum - 1.0).abs() > super::pmf::INPUT_NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        p.iter_mut().for_each(|v| *v /= sum);
        let strides = strides_for(&dims);
        Ok(Self { axes, dims, strides, p })
    }

    /// Tensor over axes `X`, `Y`.
    pub fn from_joint(pmf: &JointPmf) -> Self {
        let axes = vec![
            Axis {
                name: "X".into(),
                alphabet: pmf.alphabet_x().clone(),
            },
            Axis {
                name: "Y".into(),
                alphabet: pmf.alphabet_y().clone(),
            },
        ];
        let dims = vec![pmf.nx(), pmf.ny()];
        Self {
            strides: strides_for(&dims),
            axes,
            dims,
            p: pmf.cells().to_vec(),
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    pub fn arity(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        for n in names {
            let i = self.axis_index(n)?;
            if idx.contains(&i) {
                return Err(Error::OverlappingAxes(n.to_string()));
            }
            idx.push(i);
        }
        Ok(idx)
    }

    /// Multi-index of a flat cell index.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (k, &s) in self.strides.iter().enumerate() {
            out[k] = flat / s;
            flat %= s;
        }
    }

    /// Marginal over the given axis positions, row-major in the given order.
    pub fn marginal_by_index(&self, axes: &[usize]) -> Vec<f64> {
        let sub_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let sub_strides = strides_for(&sub_dims);
        let size: usize = sub_dims.iter().product();
        let mut out = vec![0.0; size.max(1)];
        let mut idx = vec![0; self.arity()];
        for (flat, &v) in self.p.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.unravel(flat, &mut idx);
            let m: usize = axes.iter().zip(&sub_strides).map(|(&a, &s)| idx[a] * s).sum();
            out[m] += v;
        }
        out
    }

    pub fn marginal(&self, names: &[&str]) -> Result<Vec<f64>> {
        let idx = self.resolve(names)?;
        Ok(self.marginal_by_index(&idx))
    }

    /// Entropy (bits) of the marginal on `names`.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        if names.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(super::info::entropy_bits(&self.marginal(names)?))
    }

    /// Entropy of the marginal on `names`; the empty set has entropy 0.
    fn entropy_or_zero(&self, names: &[&str]) -> Result<f64> {
        if names.is_empty() {
            Ok(0.0)
        } else {
            self.entropy(names)
        }
    }

    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::EmptySubset);
        }
        disjoint(target, given)?;
        let joint: Vec<&str> = target.iter().chain(given).copied().collect();
        let h = self.entropy(&joint)? - self.entropy_or_zero(given)?;
        Ok(h.max(0.0))
    }

    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    /// I(A ∧ B | C) = H(A,C) + H(B,C) − H(A,B,C) − H(C), clamped at zero.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySubset);
        }
        disjoint(a, b)?;
        disjoint(a, given)?;
        disjoint(b, given)?;
        let ac: Vec<&str> = a.iter().chain(given).copied().collect();
        let bc: Vec<&str> = b.iter().chain(given).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(given).copied().collect();
        let v = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy_or_zero(given)?;
        Ok(v.max(0.0))
    }

    /// Appends an axis drawn from a conditional kernel given the existing axes.
    ///
    /// `kernel(index, row)` fills `row` with P(new | index). Rows of zero-mass
    /// cells are not validated.
    pub fn extend_with<F>(&self, name: &str, alphabet: FiniteAlphabet, mut kernel: F) -> Result<Self>
    where
        F: FnMut(&[usize], &mut [f64]),
    {
        if self.axes.iter().any(|a| a.name == name) {
            return Err(Error::OverlappingAxes(name.to_string()));
        }
        let k = alphabet.len();
        check_budget("tensor", self.p.len() as f64 * k as f64)?;
        let mut p = vec![0.0; self.p.len() * k];
        let mut idx = vec![0; self.arity()];
        let mut row = vec![0.0; k];
        for (flat, &v) in self.p.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.unravel(flat, &mut idx);
            row.iter_mut().for_each(|r| *r = 0.0);
            kernel(&idx, &mut row);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > KERNEL_ROW_TOL {
                return Err(Error::KernelInvalid(format!(
                    "row for {idx:?} of axis `{name}` sums to {sum}"
                )));
            }
            for (j, r) in row.iter().enumerate() {
                p[flat * k + j] = v * r;
            }
        }
        let mut axes = self.axes.clone();
        axes.push(Axis {
            name: name.to_string(),
            alphabet,
        });
        let mut dims = self.dims.clone();
        dims.push(k);
        Ok(Self {
            strides: strides_for(&dims),
            axes,
            dims,
            p,
        })
    }

    /// Appends an axis that is a deterministic function of the existing axes.
    pub fn extend_fn<F>(&self, name: &str, alphabet: FiniteAlphabet, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> usize,
    {
        self.extend_with(name, alphabet, |idx, row| row[f(idx)] = 1.0)
    }
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|n| b.contains(n)) {
        Some(n) => Err(Error::OverlappingAxes(n.to_string())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy(rows: &[Vec<f64>]) -> TensorPmf {
        TensorPmf::from_joint(&JointPmf::from_rows(rows).unwrap())
    }

    #[test]
    fn marginals_follow_axis_order() {
        let t = xy(&[vec![0.1, 0.2], vec![0.3, 0.4]]);
        let mx = t.marginal(&["X"]).unwrap();
        assert!((mx[0] - 0.3).abs() < 1e-15 && (mx[1] - 0.7).abs() < 1e-15);
        let yx = t.marginal(&["Y", "X"]).unwrap();
        assert_eq!(yx.len(), 4);
        assert!((yx[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn errors_on_unknown_and_overlapping_axes() {
        let t = xy(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert_eq!(t.entropy(&["Z"]).unwrap_err(), Error::UnknownAxis("Z".into()));
        assert!(matches!(
            t.conditional_entropy(&["X"], &["X"]),
            Err(Error::OverlappingAxes(_))
        ));
        assert_eq!(t.entropy(&[]).unwrap_err(), Error::EmptySubset);
    }

    #[test]
    fn copy_axis_via_extend_fn() {
        let t = xy(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        let t = t.extend_fn("U", FiniteAlphabet::indexed("u", 2), |i| i[0]).unwrap();
        assert!(t.conditional_entropy(&["U"], &["X"]).unwrap() < 1e-12);
        assert!((t.entropy(&["U"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extend_rejects_bad_kernel_rows() {
        let t = xy(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let err = t
            .extend_with("U", FiniteAlphabet::indexed("u", 2), |_, row| row[0] = 0.7)
            .unwrap_err();
        assert!(matches!(err, Error::KernelInvalid(_)));
    }
}
