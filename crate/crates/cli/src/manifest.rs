//! Self-contained instance manifests (JSON). Every object is stored in its own
//! text format so a manifest can be rebuilt without the original files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qclab_core::{
    fmt_rational, ComposedInstance, Dist, InstanceParams, Relation, TruthTable, ZeroMassPolicy,
};
use serde::{Deserialize, Serialize};

use crate::input;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub game_depth: usize,
    pub certified_depth: usize,
    pub lower_value: String,
    pub upper_value: String,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub n: usize,
    pub m: usize,
    pub f: String,
    pub g: String,
    pub mu: String,
    pub lambda: String,
    /// `given` or `hard_distribution`.
    pub mu_source: String,
    pub epsilon: String,
    pub theta: String,
    pub delta0: String,
    pub inner_complexity: usize,
    pub policy: ZeroMassPolicy,
    pub default_parameters: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl Manifest {
    pub fn of(inst: &ComposedInstance, mu_source: &str, certificate: Option<Certificate>) -> Self {
        Manifest {
            format: FORMAT_VERSION,
            n: inst.n(),
            m: inst.m(),
            f: inst.f().to_string(),
            g: inst.g().to_string(),
            mu: inst.mu().to_string(),
            lambda: inst.lambda().to_string(),
            mu_source: mu_source.to_string(),
            epsilon: fmt_rational(inst.epsilon()),
            theta: fmt_rational(inst.theta()),
            delta0: fmt_rational(&inst.delta0()),
            inner_complexity: inst.inner_complexity(),
            policy: inst.policy(),
            default_parameters: inst.at_default_parameters(),
            certificate,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.format != FORMAT_VERSION {
            bail!("manifest format {} is not supported", m.format);
        }
        Ok(m)
    }

    /// Rebuilds the instance and checks the stored derived values.
    pub fn instance(&self, policy: Option<ZeroMassPolicy>) -> Result<ComposedInstance> {
        let f: Relation = self.f.parse().context("manifest field f")?;
        let g: TruthTable = self.g.parse().context("manifest field g")?;
        let mu: Dist = self.mu.parse().context("manifest field mu")?;
        let lambda: Dist = self.lambda.parse().context("manifest field lambda")?;
        let params = InstanceParams {
            epsilon: Some(input::rational(&self.epsilon)?),
            theta: Some(input::rational(&self.theta)?),
            policy: policy.unwrap_or(self.policy),
        };
        let inst = ComposedInstance::new(f, g, mu, lambda, params)?;
        if inst.inner_complexity() != self.inner_complexity || inst.n() != self.n || inst.m() != self.m {
            bail!(
                "manifest is inconsistent: stored inner complexity {} but recomputed {}",
                self.inner_complexity,
                inst.inner_complexity()
            );
        }
        Ok(inst)
    }
}
