//! Line-delimited report records. Verdict-bearing values are exact rationals
//! written as `p/q` strings; floats appear only in informational fields.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::complexity::{DpResult, GameResult};
use crate::rational::{fmt_rational, Rational};
use crate::relation::bitstring;
use crate::simulate::{
    LilsnipReport, RbiasReport, SimileafReport, SuccessChainReport, UnbiasReport,
};
use crate::sweep::SweepSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Informational record without a pass/fail meaning.
    Info,
}

impl From<bool> for Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub claim: String,
    pub params: BTreeMap<String, String>,
    pub values: BTreeMap<String, Value>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// A value in a record: exact text, an integer, a flag, or an informational float.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Text(String),
    Int(u64),
    Flag(bool),
    Float(f64),
    List(Vec<Value>),
}

impl From<&Rational> for Value {
    fn from(r: &Rational) -> Self {
        Value::Text(fmt_rational(r))
    }
}

impl From<Rational> for Value {
    fn from(r: Rational) -> Self {
        Value::from(&r)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Flag(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Value::Text("none".into()))
    }
}

impl<T: Into<Value> + Clone> From<&[T]> for Value {
    fn from(v: &[T]) -> Self {
        Value::List(v.iter().cloned().map(Into::into).collect())
    }
}

impl Record {
    pub fn new(claim: impl Into<String>) -> Self {
        Record {
            claim: claim.into(),
            params: BTreeMap::new(),
            values: BTreeMap::new(),
            verdict: Verdict::Info,
            witness: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn value(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    pub fn verdict(mut self, v: impl Into<Verdict>) -> Self {
        self.verdict = v.into();
        self
    }

    pub fn witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

impl DpResult {
    pub fn to_record(&self, depth: usize) -> Record {
        Record::new("best_success")
            .param("depth", depth)
            .value("success", &self.success)
            .witness(self.witness.to_string())
    }
}

impl GameResult {
    pub fn to_record(&self) -> Record {
        let brackets: Vec<Value> = self
            .brackets
            .iter()
            .map(|b| {
                Value::Text(format!(
                    "d={} [{}, {}] {:?} after {}",
                    b.depth,
                    fmt_rational(&b.lower),
                    fmt_rational(&b.upper),
                    b.outcome,
                    b.iterations
                ))
            })
            .collect();
        Record::new("rand_complexity")
            .value("depth", self.depth)
            .value("lower_value", &self.lower_value)
            .value("upper_value", &self.upper_value)
            .value("iterations", self.iterations)
            .value("exact_upper", self.exact_upper)
            .value("converged", self.converged)
            .value("hard_dist", Value::List(self.hard_dist.probs().iter().map(Value::from).collect()))
            .value("brackets", Value::List(brackets))
            .verdict(self.converged)
            .witness(self.best_tree.to_string())
    }
}

impl UnbiasReport {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new("unbias")
            .param("delta", fmt_rational(&self.delta))
            .value("subcubes_checked", self.subcubes_checked)
            .value("violations", self.violations.len())
            .value("min_ratio", self.min_ratio.clone())
            .value("max_ratio", self.max_ratio.clone())
            .verdict(self.passed());
        if let Some(v) = self.violations.first() {
            r = r.witness(format!("C={} b={} part={:?}", v.subcube, v.b as u8, v.part));
        }
        r
    }
}

impl RbiasReport {
    pub fn to_record(&self) -> Record {
        Record::new("rbias")
            .param("epsilon", fmt_rational(&self.epsilon))
            .value("delta", &self.delta)
            .value("sqrt_delta", self.sqrt_delta.clone())
            .value("inner_complexity", self.inner_complexity)
            .value("part_a", &self.part_a)
            .value("part_b0", &self.part_b[0])
            .value("part_b1", &self.part_b[1])
            .value("pass_a", self.pass_a)
            .value("pass_b", self.pass_b.iter().all(|&p| p))
            .verdict(self.passed())
    }
}

impl SimileafReport {
    pub fn to_record(&self, n: usize) -> Record {
        let mut r = Record::new("simileaf")
            .param("z", bitstring(self.z, n))
            .param("theta", fmt_rational(&self.theta))
            .value("lower_factor", &self.lower_factor)
            .value("upper_factor", &self.upper_factor)
            .value("upper_direction", "reconstructed")
            .value("leaves_checked", self.leaves_checked)
            .value("snipped_leaves", self.snipped_leaves)
            .value("lower_violations", self.lower_violations.len())
            .value("upper_violations", self.upper_violations.len())
            .value("min_ratio", self.min_ratio.clone())
            .value("max_ratio", self.max_ratio.clone())
            .value("fixed_constants_hold", self.fixed_constants_hold)
            .verdict(self.passed());
        if let Some(l) = self.lower_violations.iter().chain(&self.upper_violations).next() {
            r = r.witness(format!("leaf {l}"));
        }
        r
    }
}

impl LilsnipReport {
    pub fn to_record(&self, n: usize) -> Record {
        Record::new("lilsnip")
            .param("z", bitstring(self.z, n))
            .value("delta0", &self.delta0)
            .value("per_copy", Value::List(self.per_copy.iter().map(Value::from).collect()))
            .value("aggregate", &self.aggregate)
            .value("aggregate_pass", self.aggregate_pass)
            .value("fixed_bound_pass", self.fixed_bound_pass)
            .verdict(self.passed())
    }
}

impl SuccessChainReport {
    pub fn to_record(&self) -> Record {
        Record::new("success_chain")
            .value("success_b", &self.success_b)
            .value("success_aprime", &self.success_aprime)
            .value("snipped_mass", &self.snipped_mass)
            .value("lower_bound", &self.lower_bound)
            .value("holds", self.holds)
            .value("worst_z_queries", self.worst_z_queries)
            .value("expected_z_queries", &self.expected_z_queries)
            .value("z_query_budget", self.z_query_budget)
            .value("budget_ok", self.budget_ok)
            .value("at_least_five_ninths", self.at_least_five_ninths)
            .verdict(self.holds && self.budget_ok)
    }
}

impl SweepSummary {
    pub fn to_record(&self) -> Record {
        let mut r = Record::new(format!("{}_sweep", self.claim))
            .value("fixtures", self.fixtures)
            .value("skipped", self.skipped)
            .value("checks", self.checks)
            .value("violations", self.violations.len())
            .verdict(self.passed());
        if let Some(v) = self.violations.first() {
            r = r.witness(v.clone());
        }
        r
    }
}
