use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::jacobi::Branch;

/// What follows the explicit prefix of a [`SignSequence`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail {
    /// The block repeats forever.
    Periodic(Vec<Branch>),
    /// The sequence ends with the prefix.
    Truncated,
}

/// An itinerary: which branch of the shift is taken at each step.
///
/// Written as a string of `+`/`-` with an optional parenthesised periodic
/// block, so `"+-(+)"` is `+, -, +, +, +, ...` and `"(+-)"` alternates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignSequence {
    prefix: Vec<Branch>,
    tail: Tail,
}

impl SignSequence {
    pub fn new(prefix: Vec<Branch>, tail: Tail) -> Result<Self> {
        let empty_block = matches!(&tail, Tail::Periodic(b) if b.is_empty());
        if empty_block {
            return Err(Error::InvalidInput("periodic block must be nonempty".into()));
        }
        if prefix.is_empty() && tail == Tail::Truncated {
            return Err(Error::InvalidInput("sign sequence is empty".into()));
        }
        Ok(SignSequence { prefix, tail })
    }

    pub fn constant(b: Branch) -> Self {
        SignSequence { prefix: Vec::new(), tail: Tail::Periodic(vec![b]) }
    }

    pub fn periodic(block: Vec<Branch>) -> Result<Self> {
        Self::new(Vec::new(), Tail::Periodic(block))
    }

    pub fn finite(prefix: Vec<Branch>) -> Result<Self> {
        Self::new(prefix, Tail::Truncated)
    }

    pub fn prefix(&self) -> &[Branch] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Number of symbols, or `None` for infinite sequences.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match self.tail {
            Tail::Truncated => Some(self.prefix.len()),
            Tail::Periodic(_) => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.tail, Tail::Periodic(_))
    }

    pub fn get(&self, k: usize) -> Option<Branch> {
        if let Some(b) = self.prefix.get(k) {
            return Some(*b);
        }
        match &self.tail {
            Tail::Periodic(block) => Some(block[(k - self.prefix.len()) % block.len()]),
            Tail::Truncated => None,
        }
    }

    /// The first `len` symbols.
    pub fn take(&self, len: usize) -> Result<Vec<Branch>> {
        (0..len).map(|k| self.get(k).ok_or(Error::DepthInsufficient { needed: k })).collect()
    }

    /// The left shift `s'_k = s_{k+1}`.
    pub fn shifted(&self) -> Result<Self> {
        if !self.prefix.is_empty() {
            return Self::new(self.prefix[1..].to_vec(), self.tail.clone());
        }
        match &self.tail {
            Tail::Periodic(block) => {
                let mut rotated = block[1..].to_vec();
                rotated.push(block[0]);
                Ok(SignSequence { prefix: Vec::new(), tail: Tail::Periodic(rotated) })
            }
            Tail::Truncated => Err(Error::DepthInsufficient { needed: 1 }),
        }
    }

    /// `3^-k` where `k` is the first index at which the sequences disagree,
    /// looking at most `horizon` symbols ahead (identical up to there gives 0).
    pub fn distance(&self, other: &Self, horizon: usize) -> f64 {
        for k in 0..horizon {
            match (self.get(k), other.get(k)) {
                (Some(a), Some(b)) if a == b => continue,
                (None, None) => return 0.0,
                _ => return 3f64.powi(-(k as i32)),
            }
        }
        0.0
    }
}

fn symbols(s: &str) -> Result<Vec<Branch>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '+' => Ok(Branch::Plus),
            '-' => Ok(Branch::Minus),
            other => Err(Error::InvalidInput(format!("unexpected sign symbol {other:?}"))),
        })
        .collect()
}

impl FromStr for SignSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .filter(|c| *c == s.len() - 1 && *c > open)
                    .ok_or_else(|| Error::InvalidInput(format!("unbalanced periodic block in {s:?}")))?;
                Self::new(symbols(&s[..open])?, Tail::Periodic(symbols(&s[open + 1..close])?))
            }
            None => Self::finite(symbols(s)?),
        }
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.prefix {
            write!(f, "{}", b.symbol())?;
        }
        if let Tail::Periodic(block) = &self.tail {
            f.write_str("(")?;
            for b in block {
                write!(f, "{}", b.symbol())?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}
