//! Total Boolean functions stored as explicit truth tables.
//!
//! Bit convention used throughout the crate: bit `j` of a point index encodes
//! variable `x_{j+1}`; index 0 is the all-zeros input.

use std::fmt;
use std::str::FromStr;

use crate::caps::Caps;
use crate::error::{parse_err, QcError, Result};
use crate::problem::QueryProblem;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    arity: usize,
    outputs: Vec<bool>,
}

impl TruthTable {
    pub fn new(arity: usize, outputs: Vec<bool>) -> Result<Self> {
        if arity == 0 {
            return Err(QcError::InvalidTable("arity must be at least 1".into()));
        }
        Caps::check("truth table arity", arity, Caps::current().table)?;
        if outputs.len() != 1 << arity {
            return Err(QcError::InvalidTable(format!(
                "expected {} outputs for arity {arity}, got {}",
                1usize << arity,
                outputs.len()
            )));
        }
        Ok(TruthTable { arity, outputs })
    }

    pub fn from_fn(arity: usize, f: impl Fn(u64) -> bool) -> Result<Self> {
        if arity == 0 || arity > Caps::current().table {
            return TruthTable::new(arity, Vec::new());
        }
        TruthTable::new(arity, (0..1u64 << arity).map(f).collect())
    }

    /// The dictator function on one bit.
    pub fn identity() -> Self {
        TruthTable {
            arity: 1,
            outputs: vec![false, true],
        }
    }

    pub fn constant(arity: usize, value: bool) -> Result<Self> {
        TruthTable::from_fn(arity, |_| value)
    }

    pub fn and(arity: usize) -> Result<Self> {
        let all = (1u64 << arity) - 1;
        TruthTable::from_fn(arity, |x| x == all)
    }

    pub fn or(arity: usize) -> Result<Self> {
        TruthTable::from_fn(arity, |x| x != 0)
    }

    pub fn xor(arity: usize) -> Result<Self> {
        TruthTable::from_fn(arity, |x| x.count_ones() % 2 == 1)
    }

    pub fn majority(arity: usize) -> Result<Self> {
        TruthTable::from_fn(arity, |x| 2 * x.count_ones() as usize > arity)
    }

    /// Function number `code` on `arity` bits: output at index `x` is bit `x` of `code`.
    pub fn from_code(arity: usize, code: u64) -> Result<Self> {
        if arity > 6 {
            return Err(QcError::InvalidTable(format!(
                "function codes cover arity <= 6, got {arity}"
            )));
        }
        TruthTable::from_fn(arity, |x| (code >> x) & 1 == 1)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn outputs(&self) -> &[bool] {
        &self.outputs
    }

    pub fn eval(&self, x: u64) -> Result<bool> {
        self.outputs
            .get(x as usize)
            .copied()
            .filter(|_| x < (1u64 << self.arity))
            .ok_or(QcError::PointOutOfRange {
                point: x,
                arity: self.arity,
            })
    }

    /// Unchecked evaluation for callers that already range-checked `x`.
    #[inline]
    pub fn get(&self, x: u64) -> bool {
        self.outputs[x as usize]
    }

    pub fn is_constant(&self) -> bool {
        self.outputs.iter().all(|&b| b == self.outputs[0])
    }
}

impl QueryProblem for TruthTable {
    fn arity(&self) -> usize {
        self.arity
    }

    fn alphabet_size(&self) -> usize {
        2
    }

    #[inline]
    fn accepted_mask(&self, x: u64) -> u64 {
        1 << (self.outputs[x as usize] as u64)
    }
}

/// File format: `arity=<m>` on the first line, then `2^m` characters of `0`/`1`
/// in index order.
impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "arity={}", self.arity)?;
        let bits: String = self
            .outputs
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        writeln!(f, "{bits}")
    }
}

impl FromStr for TruthTable {
    type Err = QcError;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty truth table file"))?;
        let arity: usize = header
            .strip_prefix("arity=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected `arity=<m>`"))?;
        let (ln, body) = lines
            .next()
            .ok_or_else(|| parse_err(ln + 1, "missing output line"))?;
        let outputs = body
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(parse_err(ln, format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some((extra, _)) = lines.next() {
            return Err(parse_err(extra, "trailing content after output line"));
        }
        TruthTable::new(arity, outputs).map_err(|e| parse_err(ln, e.to_string()))
    }
}
