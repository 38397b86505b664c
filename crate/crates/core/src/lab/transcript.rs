use super::protocol::{pow_checked, Protocol};
use crate::error::{Error, Result};
use crate::prob::{Axis, FiniteAlphabet, JointPmf, TensorPmf, TENSOR_CELL_BUDGET};

/// Digits of a mixed-radix block, first coordinate most significant.
pub fn block_digits(mut index: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for d in out.iter_mut().rev() {
        *d = index % base;
        index /= base;
    }
    out
}

/// Probability of every `(x^n, y^n)` pair, laid out `[x_block * y_blocks + y_block]`.
pub fn block_law(pmf: &JointPmf, n: usize) -> Result<Vec<f64>> {
    let (nx, ny) = (pmf.nx(), pmf.ny());
    let xb = pow_checked(nx, n);
    let yb = pow_checked(ny, n);
    let states = xb.zip(yb).and_then(|(a, b)| a.checked_mul(b));
    let states = match states {
        Some(s) if s <= TENSOR_CELL_BUDGET => s,
        _ => {
            return Err(Error::SizeBudgetExceeded {
                what: "block pairs",
                required: (nx as f64).powi(n as i32) * (ny as f64).powi(n as i32),
                budget: TENSOR_CELL_BUDGET as f64,
            })
        }
    };
    let yb = yb.unwrap_or(1);
    let mut law = vec![0.0; states];
    for (i, p) in law.iter_mut().enumerate() {
        let xs = block_digits(i / yb, nx, n);
        let ys = block_digits(i % yb, ny, n);
        *p = xs.iter().zip(&ys).map(|(&x, &y)| pmf.get(x, y)).product();
    }
    Ok(law)
}

/// Exact law of `(X^n, Y^n, F)` with axes `Xn`, `Yn`, `F`.
#[derive(Debug, Clone)]
pub struct TranscriptLaw {
    pub tensor: TensorPmf,
}

pub fn transcript_law(pmf: &JointPmf, protocol: &Protocol) -> Result<TranscriptLaw> {
    protocol.validate()?;
    if protocol.x_size != pmf.nx() || protocol.y_size != pmf.ny() {
        return Err(Error::InvalidConfig("protocol alphabets do not match the pmf".into()));
    }
    let law = block_law(pmf, protocol.n)?;
    let (xb, yb) = (protocol.x_blocks(), protocol.y_blocks());
    let base = TensorPmf::new(
        vec![
            Axis::new("Xn", FiniteAlphabet::indexed("x", xb)),
            Axis::new("Yn", FiniteAlphabet::indexed("y", yb)),
        ],
        law,
    )?;
    let tensor = base.extend_fn("F", FiniteAlphabet::indexed("f", protocol.transcript_count()), |idx| {
        protocol.transcript(idx[0], idx[1])
    })?;
    Ok(TranscriptLaw { tensor })
}
