//! Total relations `f ⊆ {0,1}^n × R` with `R = {0, ..., |R|-1}`.

use std::fmt;
use std::str::FromStr;

use crate::caps::Caps;
use crate::error::{parse_err, QcError, Result};
use crate::problem::QueryProblem;
use crate::truth_table::TruthTable;

/// Labels are stored as bit masks, so the alphabet is limited to 64 symbols.
pub const MAX_ALPHABET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    alphabet: usize,
    accepted: Vec<u64>,
}

impl Relation {
    /// Builds a relation from one accepted-label mask per input.
    ///
    /// Every mask must be nonempty and only use labels below `alphabet`.
    pub fn from_masks(arity: usize, alphabet: usize, accepted: Vec<u64>) -> Result<Self> {
        if arity == 0 {
            return Err(QcError::InvalidRelation("arity must be at least 1".into()));
        }
        Caps::check("relation arity", arity, Caps::current().table)?;
        if alphabet == 0 || alphabet > MAX_ALPHABET {
            return Err(QcError::InvalidRelation(format!(
                "alphabet size {alphabet} outside 1..={MAX_ALPHABET}"
            )));
        }
        if accepted.len() != 1 << arity {
            return Err(QcError::InvalidRelation(format!(
                "expected {} accepted sets, got {}",
                1usize << arity,
                accepted.len()
            )));
        }
        let allowed = if alphabet == 64 {
            u64::MAX
        } else {
            (1u64 << alphabet) - 1
        };
        for (x, &mask) in accepted.iter().enumerate() {
            if mask == 0 {
                return Err(QcError::InvalidRelation(format!(
                    "input {} has an empty accepted set",
                    bitstring(x as u64, arity)
                )));
            }
            if mask & !allowed != 0 {
                return Err(QcError::InvalidRelation(format!(
                    "input {} accepts a label outside the alphabet",
                    bitstring(x as u64, arity)
                )));
            }
        }
        Ok(Relation {
            arity,
            alphabet,
            accepted,
        })
    }

    pub fn from_fn(arity: usize, alphabet: usize, f: impl Fn(u64) -> u64) -> Result<Self> {
        if arity == 0 || arity > Caps::current().table {
            return Relation::from_masks(arity, alphabet, Vec::new());
        }
        Relation::from_masks(arity, alphabet, (0..1u64 << arity).map(f).collect())
    }

    /// The graph of a Boolean function as a relation over labels {0, 1}.
    pub fn from_function(g: &TruthTable) -> Self {
        Relation {
            arity: g.arity(),
            alphabet: 2,
            accepted: g.outputs().iter().map(|&b| 1u64 << (b as u64)).collect(),
        }
    }

    /// The relation that accepts every label on every input.
    pub fn full(arity: usize, alphabet: usize) -> Result<Self> {
        let all = if alphabet >= 64 {
            u64::MAX
        } else {
            (1u64 << alphabet) - 1
        };
        Relation::from_fn(arity, alphabet, |_| all)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn masks(&self) -> &[u64] {
        &self.accepted
    }

    pub fn accepted(&self, x: u64) -> Result<Vec<usize>> {
        let mask = *self
            .accepted
            .get(x as usize)
            .ok_or(QcError::PointOutOfRange {
                point: x,
                arity: self.arity,
            })?;
        Ok((0..self.alphabet).filter(|r| (mask >> r) & 1 == 1).collect())
    }
}

impl QueryProblem for Relation {
    fn arity(&self) -> usize {
        self.arity
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet
    }

    #[inline]
    fn accepted_mask(&self, x: u64) -> u64 {
        self.accepted[x as usize]
    }
}

/// Renders `x` as `x_1 x_2 ... x_k` (leftmost character is variable 1).
pub fn bitstring(x: u64, arity: usize) -> String {
    (0..arity)
        .map(|j| if (x >> j) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Inverse of [`bitstring`].
pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    s.chars().enumerate().try_fold(0u64, |acc, (j, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | (1 << j)),
        _ => None,
    })
}

/// File format: `arity=<n> alphabet=<|R|>` followed by one line per input,
/// `<bitstring>: r1,r2,...`, where the bitstring lists `x_1` first.
impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "arity={} alphabet={}", self.arity, self.alphabet)?;
        for (x, &mask) in self.accepted.iter().enumerate() {
            let labels: Vec<String> = (0..self.alphabet)
                .filter(|r| (mask >> r) & 1 == 1)
                .map(|r| r.to_string())
                .collect();
            writeln!(f, "{}: {}", bitstring(x as u64, self.arity), labels.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for Relation {
    type Err = QcError;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty relation file"))?;
        let mut arity = None;
        let mut alphabet = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("arity", v)) => arity = v.parse::<usize>().ok(),
                Some(("alphabet", v)) => alphabet = v.parse::<usize>().ok(),
                _ => return Err(parse_err(ln, format!("unexpected header field {field:?}"))),
            }
        }
        let (arity, alphabet) = match (arity, alphabet) {
            (Some(a), Some(r)) => (a, r),
            _ => return Err(parse_err(ln, "expected `arity=<n> alphabet=<|R|>`")),
        };
        if arity == 0 || arity > Caps::current().table {
            return Err(parse_err(ln, format!("unsupported arity {arity}")));
        }
        if alphabet == 0 || alphabet > MAX_ALPHABET {
            return Err(parse_err(ln, format!("unsupported alphabet size {alphabet}")));
        }
        let mut accepted = vec![0u64; 1 << arity];
        let mut seen = vec![false; 1 << arity];
        let mut last = ln;
        for (ln, line) in lines {
            last = ln;
            let (bits, labels) = line
                .split_once(':')
                .ok_or_else(|| parse_err(ln, "expected `<bitstring>: r1,r2,...`"))?;
            let bits = bits.trim();
            if bits.len() != arity {
                return Err(parse_err(ln, format!("bitstring {bits:?} has wrong length")));
            }
            let x = parse_bitstring(bits)
                .ok_or_else(|| parse_err(ln, format!("bad bitstring {bits:?}")))?;
            if seen[x as usize] {
                return Err(parse_err(ln, format!("duplicate input {bits}")));
            }
            seen[x as usize] = true;
            for label in labels.split(',').map(str::trim).filter(|l| !l.is_empty()) {
                let r: usize = label
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad label {label:?}")))?;
                if r >= alphabet {
                    return Err(parse_err(ln, format!("label {r} outside alphabet")));
                }
                accepted[x as usize] |= 1 << r;
            }
            if accepted[x as usize] == 0 {
                return Err(parse_err(ln, "empty accepted set (relations must be total)"));
            }
        }
        if let Some(x) = seen.iter().position(|&s| !s) {
            return Err(parse_err(
                last,
                format!("missing line for input {}", bitstring(x as u64, arity)),
            ));
        }
        Relation::from_masks(arity, alphabet, accepted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_graph() {
        let g = TruthTable::and(2).unwrap();
        let rel = Relation::from_function(&g);
        assert!(rel.accepts(0b11, 1) && !rel.accepts(0b11, 0));
        assert_eq!(rel.accepted(0b01).unwrap(), vec![0]);
    }

    #[test]
    fn totality_enforced() {
        assert!(Relation::from_masks(1, 2, vec![1, 0]).is_err());
        assert!(Relation::from_masks(1, 2, vec![1, 4]).is_err());
        assert!(Relation::from_masks(1, 3, vec![1, 4]).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let rel = Relation::from_fn(2, 3, |x| if x == 0 { 0b101 } else { 1 << (x % 3) }).unwrap();
        let text = rel.to_string();
        assert!(text.starts_with("arity=2 alphabet=3\n00: 0,2\n10: 1\n"));
        assert_eq!(text.parse::<Relation>().unwrap(), rel);
    }

    #[test]
    fn parse_errors() {
        let err = "arity=1 alphabet=2\n0: 0\n1:\n".parse::<Relation>().unwrap_err();
        assert!(matches!(err, QcError::Parse { line: 3, .. }), "{err}");
        let err = "arity=1 alphabet=2\n0: 0\n".parse::<Relation>().unwrap_err();
        assert!(matches!(err, QcError::Parse { .. }));
        let err = "arity=1 alphabet=2\n0: 5\n1: 0\n".parse::<Relation>().unwrap_err();
        assert!(matches!(err, QcError::Parse { line: 2, .. }));
    }

    #[test]
    fn bitstrings() {
        assert_eq!(bitstring(0b0011, 4), "1100");
        assert_eq!(parse_bitstring("1101"), Some(0b1011));
        assert_eq!(parse_bitstring("12"), None);
    }
}
