//! Subcubes of `{0,1}^k`: sets of points consistent with a partial assignment.

use std::fmt;

use crate::error::{QcError, Result};

pub const MAX_SUBCUBE_ARITY: usize = 63;

/// A partial assignment over `arity` variables. Bit `j` of `mask` marks
/// variable `x_{j+1}` as fixed, to bit `j` of `values`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subcube {
    arity: usize,
    mask: u64,
    values: u64,
}

impl Subcube {
    pub fn full(arity: usize) -> Self {
        assert!(arity <= MAX_SUBCUBE_ARITY, "subcube arity {arity} too large");
        Subcube {
            arity,
            mask: 0,
            values: 0,
        }
    }

    /// Builds the subcube fixing each `(var, bit)` pair (0-based variables).
    pub fn from_assignment(arity: usize, fixed: &[(usize, bool)]) -> Result<Self> {
        fixed
            .iter()
            .try_fold(Subcube::full(arity), |c, &(v, b)| c.fix(v, b))
    }

    /// The single-point subcube `{x}`.
    pub fn point(arity: usize, x: u64) -> Self {
        let mask = low_mask(arity);
        Subcube {
            arity,
            mask,
            values: x & mask,
        }
    }

    /// Fixes one more variable. Fixing an already fixed variable is an error,
    /// since decision-tree paths never repeat a query.
    pub fn fix(self, var: usize, bit: bool) -> Result<Self> {
        if var >= self.arity {
            return Err(QcError::InvalidParameter(format!(
                "variable {} out of range for arity {}",
                var + 1,
                self.arity
            )));
        }
        if self.mask >> var & 1 == 1 {
            return Err(QcError::InvalidParameter(format!(
                "variable {} is already fixed",
                var + 1
            )));
        }
        Ok(Subcube {
            arity: self.arity,
            mask: self.mask | 1 << var,
            values: self.values | (bit as u64) << var,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn values(&self) -> u64 {
        self.values
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        (var < self.arity && self.mask >> var & 1 == 1).then(|| self.values >> var & 1 == 1)
    }

    pub fn codim(&self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        x & self.mask == self.values
    }

    /// True when `self ⊆ other`, i.e. `self` fixes everything `other` fixes, identically.
    pub fn refines(&self, other: &Subcube) -> bool {
        self.arity == other.arity
            && self.mask & other.mask == other.mask
            && self.values & other.mask == other.values
    }

    pub fn fixed_vars(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        (0..self.arity)
            .filter(|&j| self.mask >> j & 1 == 1)
            .map(|j| (j, self.values >> j & 1 == 1))
    }

    pub fn free_vars(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arity).filter(|&j| self.mask >> j & 1 == 0)
    }

    /// All points of the subcube in increasing index order.
    pub fn points(&self) -> impl Iterator<Item = u64> {
        let free = !self.mask & low_mask(self.arity);
        let values = self.values;
        // enumerate submasks of `free` in increasing order
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == free {
                None
            } else {
                Some(((cur | !free).wrapping_add(1)) & free)
            };
            Some(values | cur)
        })
    }

    /// Base-3 index: digit `j` is 0 or 1 when `x_{j+1}` is fixed to that bit, 2 when free.
    pub fn ternary_index(&self) -> usize {
        let mut idx = 0usize;
        for j in (0..self.arity).rev() {
            let digit = if self.mask >> j & 1 == 1 {
                (self.values >> j & 1) as usize
            } else {
                2
            };
            idx = idx * 3 + digit;
        }
        idx
    }

    pub fn from_ternary_index(arity: usize, mut idx: usize) -> Self {
        let mut c = Subcube::full(arity);
        for j in 0..arity {
            match idx % 3 {
                0 => c.mask |= 1 << j,
                1 => {
                    c.mask |= 1 << j;
                    c.values |= 1 << j;
                }
                _ => {}
            }
            idx /= 3;
        }
        c
    }

    /// Every subcube of `{0,1}^arity`, in ternary index order.
    pub fn all(arity: usize) -> impl Iterator<Item = Subcube> {
        (0..3usize.pow(arity as u32)).map(move |i| Subcube::from_ternary_index(arity, i))
    }
}

/// Renders with `*` for free variables, `x_1` first: e.g. `1*0`.
impl fmt::Display for Subcube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.arity)
            .map(|j| match self.get(j) {
                Some(true) => '1',
                Some(false) => '0',
                None => '*',
            })
            .collect();
        f.write_str(&s)
    }
}

pub(crate) fn low_mask(arity: usize) -> u64 {
    if arity >= 64 {
        u64::MAX
    } else {
        (1u64 << arity) - 1
    }
}
