//! Size caps. Exceeding a cap is an upfront error rather than an allocation failure.
//!
//! Defaults can be changed with `QCLAB_CAP_OVERRIDE`, a comma separated list of
//! `key=value` pairs with keys `table`, `dp`, `structured` and `flat`, e.g.
//! `QCLAB_CAP_OVERRIDE=dp=14,flat=14`.

use std::sync::OnceLock;

use crate::error::{QcError, Result};

pub const CAP_ENV_VAR: &str = "QCLAB_CAP_OVERRIDE";

/// Largest arity any flat table may have, whatever the override says.
const HARD_FLAT_LIMIT: usize = 26;
/// Subcubes are bit masks over `u64`.
const HARD_STRUCTURED_LIMIT: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum arity of a truth table, relation or flat distribution.
    pub table: usize,
    /// Maximum arity for the exact subcube dynamic program (table size 3^k).
    pub dp: usize,
    /// Maximum total arity `n*m` of structured (product/mixture) objects.
    pub structured: usize,
    /// Maximum arity for flat-vector oracle expansions.
    pub flat: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            table: 16,
            dp: 12,
            structured: 20,
            flat: 12,
        }
    }
}

impl Caps {
    pub fn parse_override(spec: &str) -> Result<Caps> {
        let mut caps = Caps::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                QcError::InvalidParameter(format!("cap override item {item:?} is not key=value"))
            })?;
            let value: usize = value.trim().parse().map_err(|_| {
                QcError::InvalidParameter(format!("cap override value in {item:?}"))
            })?;
            let (slot, limit) = match key.trim() {
                "table" => (&mut caps.table, HARD_FLAT_LIMIT),
                "dp" => (&mut caps.dp, HARD_FLAT_LIMIT),
                "structured" => (&mut caps.structured, HARD_STRUCTURED_LIMIT),
                "flat" => (&mut caps.flat, HARD_FLAT_LIMIT),
                other => {
                    return Err(QcError::InvalidParameter(format!("unknown cap {other:?}")))
                }
            };
            if value > limit {
                return Err(QcError::InvalidParameter(format!(
                    "cap {key} = {value} is above the hard limit {limit}"
                )));
            }
            *slot = value;
        }
        Ok(caps)
    }

    /// Process-wide caps, read once from the environment.
    pub fn current() -> &'static Caps {
        static CAPS: OnceLock<Caps> = OnceLock::new();
        CAPS.get_or_init(|| match std::env::var(CAP_ENV_VAR) {
            Ok(spec) => Caps::parse_override(&spec).unwrap_or_else(|e| {
                eprintln!("ignoring {CAP_ENV_VAR}: {e}");
                Caps::default()
            }),
            Err(_) => Caps::default(),
        })
    }

    pub(crate) fn check(what: &'static str, value: usize, cap: usize) -> Result<()> {
        if value > cap {
            Err(QcError::CapExceeded { what, value, cap })
        } else {
            Ok(())
        }
    }
}
