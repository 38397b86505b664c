//! Maximum-likelihood decoding within a hash bin.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::hash::{decode, encode, LinearHash};

/// Most candidates either decoding strategy will examine.
pub const DECODER_BUDGET: usize = 1 << 22;

const TIE_TOL: f64 = 1e-9;

/// Per-position log-likelihoods `log_p[i][a]`; `-inf` marks impossible symbols.
pub type LogLikelihood = Vec<Vec<f64>>;

struct Node {
    score: f64,
    ranks: Vec<u8>,
    last: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.ranks.cmp(&self.ranks))
    }
}

fn better(score: f64, code: u128, best: &Option<(f64, u128)>) -> bool {
    match best {
        None => true,
        Some((s, c)) => score > s + TIE_TOL || (score >= s - TIE_TOL && code < *c),
    }
}

/// Walks the bin `{v : H v = s}` directly; cost `2^(width − rank)`.
fn by_coset(hash: &LinearHash, syndrome: u128, base: usize, log_p: &LogLikelihood) -> Option<Vec<usize>> {
    let n = log_p.len();
    let (mut v, basis) = hash.coset(syndrome)?;
    let mut best: Option<(f64, u128)> = None;
    let total = 1u64 << basis.len();
    for m in 0..total {
        if m > 0 {
            v ^= basis[m.trailing_zeros() as usize];
        }
        let Some(seq) = decode(v, base, n) else {
            continue;
        };
        let score: f64 = seq.iter().enumerate().map(|(i, &a)| log_p[i][a]).sum();
        if score.is_finite() && better(score, v, &best) {
            best = Some((score, v));
        }
    }
    best.and_then(|(_, v)| decode(v, base, n))
}

/// Visits sequences in decreasing likelihood and stops at the first bin
/// member (plus any exact ties).
fn by_likelihood(hash: &LinearHash, syndrome: u128, base: usize, log_p: &LogLikelihood) -> Option<Vec<usize>> {
    let order: Vec<Vec<usize>> = log_p
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).filter(|&a| row[a].is_finite()).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx
        })
        .collect();
    if order.iter().any(Vec::is_empty) {
        return None;
    }
    let seq_of =
        |ranks: &[u8]| -> Vec<usize> { ranks.iter().enumerate().map(|(i, &r)| order[i][r as usize]).collect() };
    let n = log_p.len();
    let root = vec![0u8; n];
    let score0: f64 = (0..n).map(|i| log_p[i][order[i][0]]).sum();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        score: score0,
        ranks: root,
        last: 0,
    });
    let mut best: Option<(f64, u128)> = None;
    let mut pops = 0;
    while let Some(node) = heap.pop() {
        if let Some((s, _)) = best {
            if node.score < s - TIE_TOL {
                break;
            }
        }
        pops += 1;
        if pops > DECODER_BUDGET {
            break;
        }
        let seq = seq_of(&node.ranks);
        let code = encode(&seq, base);
        if hash.apply(code) == syndrome && better(node.score, code, &best) {
            best = Some((node.score, code));
        }
        // Each rank vector has a unique parent: decrement its last nonzero entry.
        for j in node.last..n {
            let r = node.ranks[j] as usize;
            if r + 1 < order[j].len() {
                let mut ranks = node.ranks.clone();
                ranks[j] += 1;
                let score = node.score - log_p[j][order[j][r]] + log_p[j][order[j][r + 1]];
                heap.push(Node { score, ranks, last: j });
            }
        }
    }
    best.and_then(|(_, v)| decode(v, base, n))
}

/// ML sequence among those hashing to `syndrome`; ties go to the smallest
/// encoding. `None` when the bin holds no possible sequence or the search
/// budget runs out.
pub fn ml_in_bin(hash: &LinearHash, syndrome: u128, base: usize, log_p: &LogLikelihood) -> Option<Vec<usize>> {
    let free = hash.width.saturating_sub(hash.out_bits());
    let coset_cost = 2f64.powi(free as i32);
    let support: f64 = log_p
        .iter()
        .map(|row| row.iter().filter(|v| v.is_finite()).count() as f64)
        .product();
    let search_cost = support.min(2f64.powi(hash.out_bits() as i32));
    if coset_cost <= search_cost && coset_cost <= DECODER_BUDGET as f64 {
        by_coset(hash, syndrome, base, log_p)
    } else {
        by_likelihood(hash, syndrome, base, log_p)
    }
}
