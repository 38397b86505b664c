use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of distinct symbol labels. The position of a label is its index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FiniteAlphabet {
    symbols: Vec<String>,
}

impl FiniteAlphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must have at least one symbol".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Self { symbols })
    }

    /// Alphabet `{prefix}0, {prefix}1, ...` of the given size.
    pub fn indexed(prefix: &str, size: usize) -> Self {
        assert!(size > 0, "alphabet size must be positive");
        Self {
            symbols: (0..size).map(|i| format!("{prefix}{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

impl TryFrom<Vec<String>> for FiniteAlphabet {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Self::new(symbols)
    }
}

impl From<FiniteAlphabet> for Vec<String> {
    fn from(a: FiniteAlphabet) -> Self {
        a.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(FiniteAlphabet::new(vec![]).is_err());
        assert!(FiniteAlphabet::new(vec!["a".into(), "a".into()]).is_err());
        let a = FiniteAlphabet::new(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(a.index_of("b"), Some(1));
        assert_eq!(a.index_of("c"), None);
    }
}
