//! Composed relations `f∘g^n`, the input distributions `γ^z` and `γ`, the XOR
//! stack `g_t^⊕`, and the composed instance tying them to `μ` and `D^μ_ε(g)`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::complexity::dist_complexity;
use crate::dist::Dist;
use crate::dtree::BlockStructure;
use crate::error::{QcError, Result};
use crate::rational::{exact_sqrt, fmt_rational, one, ratio, Rational};
use crate::relation::Relation;
use crate::split::AnySplit;
use crate::subcube::Subcube;
use crate::truth_table::TruthTable;

/// `(g(x^{(1)}), …, g(x^{(n)}))` packed with bit `i` for copy `i`.
pub fn inner_values(g: &TruthTable, blocks: &BlockStructure, x: u64) -> u64 {
    (0..blocks.blocks).fold(0u64, |acc, i| acc | (g.get(blocks.extract(x, i)) as u64) << i)
}

/// `f∘g^n` for a function `g`: `(x, r)` is accepted iff `(g(x^{(1)}),…,g(x^{(n)}), r) ∈ f`.
pub fn compose_relation(f: &Relation, g: &TruthTable, n: usize) -> Result<Relation> {
    if f.arity() != n {
        return Err(QcError::ArityMismatch {
            expected: n,
            found: f.arity(),
        });
    }
    let blocks = BlockStructure::new(n, g.arity())?;
    Caps::check("composed relation arity", blocks.arity(), Caps::current().table)?;
    let masks = f.masks();
    Relation::from_fn(blocks.arity(), f.alphabet(), |x| {
        masks[inner_values(g, &blocks, x) as usize]
    })
}

/// Product distribution over `n·m` bits, one factor per copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDist {
    blocks: BlockStructure,
    factors: Vec<Dist>,
}

impl ProductDist {
    pub fn new(factors: Vec<Dist>) -> Result<Self> {
        let width = factors
            .first()
            .map(Dist::arity)
            .ok_or_else(|| QcError::InvalidParameter("product of zero factors".into()))?;
        for d in &factors {
            d.check_arity(width)?;
        }
        let blocks = BlockStructure::new(factors.len(), width)?;
        Caps::check("structured arity", blocks.arity(), Caps::current().structured)?;
        Ok(ProductDist { blocks, factors })
    }

    pub fn blocks(&self) -> BlockStructure {
        self.blocks
    }

    pub fn arity(&self) -> usize {
        self.blocks.arity()
    }

    pub fn factors(&self) -> &[Dist] {
        &self.factors
    }

    pub fn prob(&self, x: u64) -> Rational {
        let mut p = one();
        for (i, d) in self.factors.iter().enumerate() {
            p *= d.prob(self.blocks.extract(x, i));
            if p.is_zero() {
                break;
            }
        }
        p
    }

    /// Probability of a subcube of the flat cube, as a product over copies.
    pub fn subcube_prob(&self, c: &Subcube) -> Result<Rational> {
        if c.arity() != self.arity() {
            return Err(QcError::ArityMismatch {
                expected: self.arity(),
                found: c.arity(),
            });
        }
        let mut p = one();
        for (i, part) in split_subcube(&self.blocks, c).iter().enumerate() {
            p *= self.factors[i].subcube_prob(part)?;
        }
        Ok(p)
    }

    /// Flat `2^{nm}` vector; bounded by the flat cap.
    pub fn expand(&self) -> Result<Dist> {
        Caps::check("flat expansion arity", self.arity(), Caps::current().flat)?;
        let probs = (0..1u64 << self.arity()).map(|x| self.prob(x)).collect();
        Dist::new(self.arity(), probs)
    }
}

/// Splits a subcube of the `n·m` cube into its `n` copy subcubes.
pub fn split_subcube(blocks: &BlockStructure, c: &Subcube) -> Vec<Subcube> {
    let mut parts = vec![Subcube::full(blocks.width); blocks.blocks];
    for (var, bit) in c.fixed_vars() {
        let (i, j) = blocks.locate(var);
        parts[i] = parts[i].fix(j, bit).expect("each flat variable is fixed once");
    }
    parts
}

/// `γ^z`: copy `i` drawn from `μ_{z_i}`.
pub fn gamma_z(mu: &Dist, g: &TruthTable, n: usize, z: u64) -> Result<ProductDist> {
    if n == 0 || n > 63 || z >> n != 0 {
        return Err(QcError::PointOutOfRange { point: z, arity: n });
    }
    let mu0 = mu.restrict(g, false)?;
    let mu1 = mu.restrict(g, true)?;
    let factors = (0..n)
        .map(|i| if z >> i & 1 == 1 { mu1.clone() } else { mu0.clone() })
        .collect();
    ProductDist::new(factors)
}

/// `γ = Σ_z λ(z)·γ^z`, kept as the two restricted distributions and `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamma {
    lambda: Dist,
    restricted: [Dist; 2],
    blocks: BlockStructure,
}

pub fn gamma(lambda: &Dist, mu: &Dist, g: &TruthTable) -> Result<Gamma> {
    let blocks = BlockStructure::new(lambda.arity(), g.arity())?;
    Caps::check("structured arity", blocks.arity(), Caps::current().structured)?;
    mu.check_arity(g.arity())?;
    Ok(Gamma {
        restricted: [mu.restrict(g, false)?, mu.restrict(g, true)?],
        lambda: lambda.clone(),
        blocks,
    })
}

impl Gamma {
    pub fn lambda(&self) -> &Dist {
        &self.lambda
    }

    pub fn blocks(&self) -> BlockStructure {
        self.blocks
    }

    pub fn arity(&self) -> usize {
        self.blocks.arity()
    }

    pub fn component(&self, z: u64) -> Result<ProductDist> {
        if z >> self.blocks.blocks != 0 {
            return Err(QcError::PointOutOfRange {
                point: z,
                arity: self.blocks.blocks,
            });
        }
        ProductDist::new(
            (0..self.blocks.blocks)
                .map(|i| self.restricted[(z >> i & 1) as usize].clone())
                .collect(),
        )
    }

    pub fn prob(&self, x: u64) -> Rational {
        // γ^z(x) vanishes unless z = g^n(x); summing over z keeps this generic
        let mut total = Rational::zero();
        for z in self.lambda.support() {
            let mut p = self.lambda.prob(z).clone();
            for i in 0..self.blocks.blocks {
                p *= self.restricted[(z >> i & 1) as usize].prob(self.blocks.extract(x, i));
                if p.is_zero() {
                    break;
                }
            }
            total += p;
        }
        total
    }

    pub fn expand(&self) -> Result<Dist> {
        Caps::check("flat expansion arity", self.arity(), Caps::current().flat)?;
        let probs = (0..1u64 << self.arity()).map(|x| self.prob(x)).collect();
        Dist::new(self.arity(), probs)
    }
}

/// `g_t^⊕(x) = ⊕_i g(x^{(i)})` over `t` disjoint blocks.
pub fn xor_stack(g: &TruthTable, t: usize) -> Result<TruthTable> {
    let blocks = BlockStructure::new(t, g.arity())?;
    Caps::check("xor stack arity", blocks.arity(), Caps::current().table)?;
    TruthTable::from_fn(blocks.arity(), |x| inner_values(g, &blocks, x).count_ones() % 2 == 1)
}

/// What the simulation does when it must condition `μ_{z_i}` on an event of
/// probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMassPolicy {
    /// Fail with `ZeroConditioningMass`.
    #[default]
    Strict,
    /// Keep sampling copy `i` from the `μ`-conditional.
    FallbackToMu,
}

/// Optional overrides for instance construction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceParams {
    /// Defaults to `1/2 − 1/n⁴`.
    pub epsilon: Option<Rational>,
    /// Snip threshold. Defaults to `2·sqrt(1/2 − ε)` when that is rational.
    pub theta: Option<Rational>,
    pub policy: ZeroMassPolicy,
}

/// `f`, `g`, the inner hard distribution `μ`, the outer distribution `λ` and
/// the derived `ε`, `θ` and `c = D^μ_ε(g)`.
#[derive(Debug, Clone)]
pub struct ComposedInstance {
    f: Relation,
    g: TruthTable,
    mu: Dist,
    lambda: Dist,
    blocks: BlockStructure,
    epsilon: Rational,
    theta: Rational,
    inner_complexity: usize,
    policy: ZeroMassPolicy,
    split: AnySplit,
}

/// `1/2 − 1/n⁴`.
pub fn default_epsilon(n: usize) -> Result<Rational> {
    let n4 = (n as i64).checked_pow(4).filter(|&v| v > 2).ok_or_else(|| {
        QcError::InvalidParameter(format!("default ε needs n ≥ 2, got n = {n}"))
    })?;
    Ok(ratio(1, 2) - ratio(1, n4))
}

/// `2·sqrt(1/2 − ε)` when the root is rational.
pub fn default_theta(epsilon: &Rational) -> Result<Rational> {
    let delta0 = ratio(1, 2) - epsilon;
    exact_sqrt(&delta0).map(|r| r * ratio(2, 1)).ok_or_else(|| {
        QcError::InvalidParameter(format!(
            "1/2 − ε = {} is not a rational square; pass θ explicitly",
            fmt_rational(&delta0)
        ))
    })
}

impl ComposedInstance {
    pub fn new(
        f: Relation,
        g: TruthTable,
        mu: Dist,
        lambda: Dist,
        params: InstanceParams,
    ) -> Result<Self> {
        let n = f.arity();
        let m = g.arity();
        if lambda.arity() != n {
            return Err(QcError::ArityMismatch {
                expected: n,
                found: lambda.arity(),
            });
        }
        mu.check_arity(m)?;
        let blocks = BlockStructure::new(n, m)?;
        Caps::check("structured arity", blocks.arity(), Caps::current().structured)?;
        let epsilon = match params.epsilon {
            Some(e) => e,
            None => default_epsilon(n)?,
        };
        if epsilon.is_negative() || epsilon >= ratio(1, 2) {
            return Err(QcError::InvalidParameter(format!(
                "ε = {} must lie in [0, 1/2)",
                fmt_rational(&epsilon)
            )));
        }
        let theta = match params.theta {
            Some(t) if t.is_negative() => {
                return Err(QcError::InvalidParameter("θ must be nonnegative".into()))
            }
            Some(t) => t,
            None => default_theta(&epsilon)?,
        };
        for b in [false, true] {
            if mu.mass_where(|x| g.get(x) == b).is_zero() {
                return Err(QcError::ZeroConditioningMass(format!(
                    "Pr_mu[g = {}] = 0, so mu_{} is undefined",
                    b as u8, b as u8
                )));
            }
        }
        let inner_complexity = dist_complexity(&g, &mu, &epsilon)?;
        if inner_complexity == 0 {
            return Err(QcError::InnerComplexityZero);
        }
        let split = AnySplit::new(&g, &mu)?;
        Ok(ComposedInstance {
            f,
            g,
            mu,
            lambda,
            blocks,
            epsilon,
            theta,
            inner_complexity,
            policy: params.policy,
            split,
        })
    }

    pub fn f(&self) -> &Relation {
        &self.f
    }

    pub fn g(&self) -> &TruthTable {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.blocks.blocks
    }

    pub fn m(&self) -> usize {
        self.blocks.width
    }

    pub fn mu(&self) -> &Dist {
        &self.mu
    }

    pub fn lambda(&self) -> &Dist {
        &self.lambda
    }

    pub fn blocks(&self) -> BlockStructure {
        self.blocks
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    /// `δ₀ = 1/2 − ε`.
    pub fn delta0(&self) -> Rational {
        ratio(1, 2) - &self.epsilon
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    /// `c = D^μ_ε(g)`.
    pub fn inner_complexity(&self) -> usize {
        self.inner_complexity
    }

    pub fn policy(&self) -> ZeroMassPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: ZeroMassPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub(crate) fn split(&self) -> &AnySplit {
        &self.split
    }

    /// True when `ε = 1/2 − 1/n⁴` and `θ = 2/n²`.
    pub fn at_default_parameters(&self) -> bool {
        let n = self.n() as i64;
        n >= 2
            && self.epsilon == ratio(1, 2) - ratio(1, n.pow(4))
            && self.theta == ratio(2, n * n)
    }

    pub fn composed_relation(&self) -> Result<Relation> {
        compose_relation(&self.f, &self.g, self.n())
    }

    pub fn gamma(&self) -> Result<Gamma> {
        gamma(&self.lambda, &self.mu, &self.g)
    }

    pub fn gamma_z(&self, z: u64) -> Result<ProductDist> {
        gamma_z(&self.mu, &self.g, self.n(), z)
    }
}
