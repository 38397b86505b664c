use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ici::speaker;
use crate::prob::Side;

/// Deterministic r-round interactive communication on blocks of length `n`.
///
/// Round `i` maps (own block, earlier messages) to a message in
/// `0..message_sizes[i]`. `tables[i]` is indexed
/// `own_block * prior_count + prior`, where blocks and transcripts are mixed
/// radix integers with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Protocol {
    pub n: usize,
    pub initiator: Side,
    pub x_size: usize,
    pub y_size: usize,
    pub message_sizes: Vec<usize>,
    pub tables: Vec<Vec<usize>>,
}

pub(crate) fn pow_checked(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

impl Protocol {
    pub fn new(
        n: usize,
        initiator: Side,
        x_size: usize,
        y_size: usize,
        message_sizes: Vec<usize>,
        tables: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let p = Self {
            n,
            initiator,
            x_size,
            y_size,
            message_sizes,
            tables,
        };
        p.validate()?;
        Ok(p)
    }

    /// Every round sends the same message regardless of its inputs.
    pub fn constant(n: usize, rounds: usize, initiator: Side, x_size: usize, y_size: usize) -> Result<Self> {
        let sizes = vec![1; rounds];
        let mut p = Self {
            n,
            initiator,
            x_size,
            y_size,
            message_sizes: sizes,
            tables: vec![],
        };
        p.tables = (0..rounds).map(|i| vec![0; p.table_len(i)]).collect();
        p.validate()?;
        Ok(p)
    }

    /// One round in which the initiator sends its whole block.
    pub fn reveal(n: usize, initiator: Side, x_size: usize, y_size: usize) -> Result<Self> {
        let own = pow_checked(if initiator == Side::X { x_size } else { y_size }, n)
            .ok_or_else(|| Error::InvalidConfig("block alphabet overflows".into()))?;
        Self::new(n, initiator, x_size, y_size, vec![own], vec![(0..own).collect()])
    }

    pub fn rounds(&self) -> usize {
        self.message_sizes.len()
    }

    fn block_count(&self, side: Side) -> usize {
        let a = match side {
            Side::X => self.x_size,
            Side::Y => self.y_size,
        };
        pow_checked(a, self.n).unwrap_or(usize::MAX)
    }

    pub fn x_blocks(&self) -> usize {
        self.block_count(Side::X)
    }

    pub fn y_blocks(&self) -> usize {
        self.block_count(Side::Y)
    }

    pub fn prior_count(&self, round: usize) -> usize {
        self.message_sizes[..round].iter().product()
    }

    pub fn transcript_count(&self) -> usize {
        self.message_sizes.iter().product()
    }

    pub fn table_len(&self, round: usize) -> usize {
        self.block_count(speaker(self.initiator, round)) * self.prior_count(round)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.x_size == 0 || self.y_size == 0 {
            return Err(Error::InvalidConfig(
                "blocklength and alphabets must be nonempty".into(),
            ));
        }
        if self.message_sizes.is_empty() || self.message_sizes.contains(&0) {
            return Err(Error::InvalidConfig("every round needs a nonempty message set".into()));
        }
        let budget = 1usize << 22;
        if self.x_blocks() > budget || self.y_blocks() > budget || self.transcript_count() > budget {
            return Err(Error::SizeBudgetExceeded {
                what: "protocol tables",
                required: (self.x_blocks().max(self.y_blocks())) as f64,
                budget: budget as f64,
            });
        }
        if self.tables.len() != self.rounds() {
            return Err(Error::InvalidConfig("one table per round is required".into()));
        }
        for (i, t) in self.tables.iter().enumerate() {
            if t.len() != self.table_len(i) {
                return Err(Error::InvalidConfig(format!(
                    "round {} table has {} entries, expected {}",
                    i + 1,
                    t.len(),
                    self.table_len(i)
                )));
            }
            if t.iter().any(|&m| m >= self.message_sizes[i]) {
                return Err(Error::InvalidConfig(format!(
                    "round {} emits an out-of-range message",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Transcript as a mixed-radix index over the message sets.
    pub fn transcript(&self, x_block: usize, y_block: usize) -> usize {
        let mut prior = 0;
        for (i, table) in self.tables.iter().enumerate() {
            let own = match speaker(self.initiator, i) {
                Side::X => x_block,
                Side::Y => y_block,
            };
            let m = table[own * self.prior_count(i) + prior];
            prior = prior * self.message_sizes[i] + m;
        }
        prior
    }
}

/// Uniformly random tables, reproducible per seed.
pub fn random_protocol(
    seed: u64,
    n: usize,
    rounds: usize,
    message_sizes: &[usize],
    x_size: usize,
    y_size: usize,
    initiator: Side,
) -> Result<Protocol> {
    if message_sizes.len() != rounds {
        return Err(Error::InvalidConfig(format!(
            "{} message sizes given for {rounds} rounds",
            message_sizes.len()
        )));
    }
    let mut p = Protocol {
        n,
        initiator,
        x_size,
        y_size,
        message_sizes: message_sizes.to_vec(),
        tables: vec![],
    };
    p.tables = vec![vec![]; rounds];
    if message_sizes.contains(&0) {
        return Err(Error::InvalidConfig("every round needs a nonempty message set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..rounds {
        let len = p.table_len(i);
        if len > 1 << 22 {
            return Err(Error::SizeBudgetExceeded {
                what: "protocol tables",
                required: len as f64,
                budget: (1u64 << 22) as f64,
            });
        }
        p.tables[i] = (0..len).map(|_| rng.random_range(0..message_sizes[i])).collect();
    }
    p.validate()?;
    Ok(p)
}
