use serde::{Deserialize, Serialize};

use super::alphabet::FiniteAlphabet;
use crate::error::{Error, Result};

/// Inputs whose total mass is within this distance of 1 are renormalized.
pub const INPUT_NORMALIZATION_TOL: f64 = 1e-6;

/// Which of the two sources an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::X => write!(f, "X"),
            Side::Y => write!(f, "Y"),
        }
    }
}

/// On-disk representation: row index is x, column index is y.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfFile {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub p: Vec<Vec<f64>>,
}

/// Validated joint pmf of two finite sources.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    alphabet_x: FiniteAlphabet,
    alphabet_y: FiniteAlphabet,
    p: Vec<f64>,
}

impl JointPmf {
    /// Validates a raw matrix; renormalizes when the mass is within 1e-6 of one.
    pub fn validate(raw: &[Vec<f64>], labels_x: Option<Vec<String>>, labels_y: Option<Vec<String>>) -> Result<Self> {
        let rows = raw.len();
        if rows == 0 || raw[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = raw[0].len();
        let mut p = Vec::with_capacity(rows * cols);
        for (i, row) in raw.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::NotRectangular {
                    row: i,
                    expected: cols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeMass {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                p.push(v);
            }
        }
        let sum: f64 = p.iter().sum();
        if sum == 0.0 {
            return Err(Error::EmptyMatrix);
        }
        if (sum - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        p.iter_mut().for_each(|v| *v /= sum);

        let alphabet_x = match labels_x {
            Some(l) => FiniteAlphabet::new(l)?,
            None => FiniteAlphabet::indexed("x", rows),
        };
        let alphabet_y = match labels_y {
            Some(l) => FiniteAlphabet::new(l)?,
            None => FiniteAlphabet::indexed("y", cols),
        };
        if alphabet_x.len() != rows || alphabet_y.len() != cols {
            return Err(Error::InvalidAlphabet(format!(
                "labels ({}, {}) do not match matrix shape ({rows}, {cols})",
                alphabet_x.len(),
                alphabet_y.len()
            )));
        }
        Ok(Self {
            alphabet_x,
            alphabet_y,
            p,
        })
    }

    /// Matrix with default labels `x0..`, `y0..`.
    pub fn from_rows(raw: &[Vec<f64>]) -> Result<Self> {
        Self::validate(raw, None, None)
    }

    pub fn from_file(file: &PmfFile) -> Result<Self> {
        Self::validate(&file.p, Some(file.x.clone()), Some(file.y.clone()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PmfFile = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("pmf JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> PmfFile {
        PmfFile {
            x: self.alphabet_x.symbols().to_vec(),
            y: self.alphabet_y.symbols().to_vec(),
            p: self.rows(),
        }
    }

    pub fn alphabet_x(&self) -> &FiniteAlphabet {
        &self.alphabet_x
    }

    pub fn alphabet_y(&self) -> &FiniteAlphabet {
        &self.alphabet_y
    }

    pub fn alphabet(&self, side: Side) -> &FiniteAlphabet {
        match side {
            Side::X => &self.alphabet_x,
            Side::Y => &self.alphabet_y,
        }
    }

    pub fn nx(&self) -> usize {
        self.alphabet_x.len()
    }

    pub fn ny(&self) -> usize {
        self.alphabet_y.len()
    }

    pub fn size(&self, side: Side) -> usize {
        self.alphabet(side).len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny() + y]
    }

    /// Row-major cell masses.
    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.ny()).map(|r| r.to_vec()).collect()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.p.chunks(self.ny()).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.ny()];
        for row in self.p.chunks(self.ny()) {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m
    }

    pub fn marginal(&self, side: Side) -> Vec<f64> {
        match side {
            Side::X => self.marginal_x(),
            Side::Y => self.marginal_y(),
        }
    }

    /// Mass of cell `(a, b)` where `a` indexes `side` and `b` the other side.
    #[inline]
    pub fn get_oriented(&self, side: Side, a: usize, b: usize) -> f64 {
        match side {
            Side::X => self.get(a, b),
            Side::Y => self.get(b, a),
        }
    }

    /// The pmf of (Y, X).
    pub fn transposed(&self) -> JointPmf {
        let mut p = Vec::with_capacity(self.p.len());
        for y in 0..self.ny() {
            for x in 0..self.nx() {
                p.push(self.get(x, y));
            }
        }
        JointPmf {
            alphabet_x: self.alphabet_y.clone(),
            alphabet_y: self.alphabet_x.clone(),
            p,
        }
    }

    /// Indices of x symbols with zero marginal mass.
    pub fn zero_rows(&self) -> Vec<usize> {
        zero_indices(&self.marginal_x())
    }

    /// Indices of y symbols with zero marginal mass.
    pub fn zero_cols(&self) -> Vec<usize> {
        zero_indices(&self.marginal_y())
    }
}

impl JointPmf {
    pub fn entropy_x(&self) -> f64 {
        super::info::entropy_bits(&self.marginal_x())
    }

    pub fn entropy_y(&self) -> f64 {
        super::info::entropy_bits(&self.marginal_y())
    }

    pub fn entropy_xy(&self) -> f64 {
        super::info::entropy_bits(&self.p)
    }

    /// I(X ∧ Y) in bits, clamped at zero.
    pub fn mutual_information(&self) -> f64 {
        (self.entropy_x() + self.entropy_y() - self.entropy_xy()).max(0.0)
    }
}

fn zero_indices(m: &[f64]) -> Vec<usize> {
    m.iter()
        .enumerate()
        .filter(|(_, &v)| v == 0.0)
        .map(|(i, _)| i)
        .collect()
}
