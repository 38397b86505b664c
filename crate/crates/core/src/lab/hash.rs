//! Linear hashing over GF(2) on integers of at most 128 bits.

use rand::Rng;

/// Bits needed to hold every index below `count`.
pub fn bits_for(count: f64) -> usize {
    if count <= 1.0 {
        0
    } else {
        count.log2().ceil() as usize
    }
}

/// `y = H v` with one `u128` row mask per output bit; output bit `i` is bit `i` of `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearHash {
    pub rows: Vec<u128>,
    pub width: usize,
}

fn mask(width: usize) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// Rank over GF(2).
pub fn rank(rows: &[u128]) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

impl LinearHash {
    /// Uniform rows on `width` bits.
    pub fn random(rng: &mut impl Rng, out_bits: usize, width: usize) -> Self {
        let rows = (0..out_bits).map(|_| rng.random::<u128>() & mask(width)).collect();
        Self { rows, width }
    }

    /// Uniform rows conditioned on rank `min(out_bits, width)`, so the map is
    /// onto when `out_bits ≤ width` and one-to-one when `out_bits ≥ width`.
    pub fn random_full_rank(rng: &mut impl Rng, out_bits: usize, width: usize) -> Self {
        assert!(width <= 128 && out_bits <= 128);
        loop {
            let h = Self::random(rng, out_bits, width);
            if rank(&h.rows) == out_bits.min(width) {
                return h;
            }
        }
    }

    pub fn out_bits(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: u128) -> u128 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, r)| acc | ((((r & v).count_ones() & 1) as u128) << i))
    }

    /// All `v` with `H v = s` as a particular solution plus a null-space basis,
    /// or `None` when `s` is not in the range.
    pub fn coset(&self, s: u128) -> Option<(u128, Vec<u128>)> {
        // Gauss-Jordan on the augmented rows (row mask, syndrome bit).
        let mut rows: Vec<(u128, bool)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, &r)| (r, (s >> i) & 1 == 1))
            .collect();
        let mut pivots: Vec<usize> = Vec::new();
        let mut next = 0;
        for col in 0..self.width {
            let bit = 1u128 << col;
            let Some(p) = (next..rows.len()).find(|&i| rows[i].0 & bit != 0) else {
                continue;
            };
            rows.swap(next, p);
            let pivot = rows[next];
            for (i, r) in rows.iter_mut().enumerate() {
                if i != next && r.0 & bit != 0 {
                    r.0 ^= pivot.0;
                    r.1 ^= pivot.1;
                }
            }
            pivots.push(col);
            next += 1;
        }
        if rows[next..].iter().any(|r| r.1) {
            return None;
        }
        let mut particular = 0u128;
        for (i, &col) in pivots.iter().enumerate() {
            if rows[i].1 {
                particular |= 1u128 << col;
            }
        }
        let mut basis = Vec::new();
        for free in (0..self.width).filter(|c| !pivots.contains(c)) {
            let mut v = 1u128 << free;
            for (i, &col) in pivots.iter().enumerate() {
                if rows[i].0 >> free & 1 == 1 {
                    v |= 1u128 << col;
                }
            }
            basis.push(v);
        }
        Some((particular, basis))
    }
}

/// Mixed-radix encoding, first symbol most significant.
pub fn encode(seq: &[usize], base: usize) -> u128 {
    seq.iter().fold(0u128, |acc, &s| acc * base as u128 + s as u128)
}

/// Inverse of [`encode`]; `None` if `v ≥ base^n`.
pub fn decode(mut v: u128, base: usize, n: usize) -> Option<Vec<usize>> {
    let mut out = vec![0; n];
    for d in out.iter_mut().rev() {
        *d = (v % base as u128) as usize;
        v /= base as u128;
    }
    (v == 0).then_some(out)
}
