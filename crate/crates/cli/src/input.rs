//! Input arguments: a file path, or a short inline form.
//!
//! Functions: `and:<m>`, `or:<m>`, `xor:<m>`, `maj:<m>`, `id`, `const0:<m>`,
//! `const1:<m>`, `code:<m>:<integer>`. Distributions: `uniform`, `point:<bits>`,
//! `weights:<w0>,<w1>,...`. Anything else is read as a file.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use qclab_core::relation::parse_bitstring;
use qclab_core::{parse_rational, parse_tree, DecisionTree, Dist, Rational, Relation, TruthTable};

fn read(path: &str, what: &str) -> Result<String> {
    fs::read_to_string(Path::new(path)).with_context(|| format!("reading {what} file {path}"))
}

fn arity_of(spec: &str, rest: &str) -> Result<usize> {
    rest.parse()
        .map_err(|_| anyhow!("bad arity in {spec:?}"))
}

fn builtin_function(spec: &str) -> Result<Option<TruthTable>> {
    if spec == "id" || spec == "identity" {
        return Ok(Some(TruthTable::identity()));
    }
    let Some((name, rest)) = spec.split_once(':') else {
        return Ok(None);
    };
    let table = match name {
        "and" => TruthTable::and(arity_of(spec, rest)?)?,
        "or" => TruthTable::or(arity_of(spec, rest)?)?,
        "xor" => TruthTable::xor(arity_of(spec, rest)?)?,
        "maj" => TruthTable::majority(arity_of(spec, rest)?)?,
        "const0" => TruthTable::constant(arity_of(spec, rest)?, false)?,
        "const1" => TruthTable::constant(arity_of(spec, rest)?, true)?,
        "code" => {
            let (m, code) = rest
                .split_once(':')
                .ok_or_else(|| anyhow!("expected code:<m>:<integer>, got {spec:?}"))?;
            let code = code.parse().map_err(|_| anyhow!("bad code in {spec:?}"))?;
            TruthTable::from_code(arity_of(spec, m)?, code)?
        }
        _ => return Ok(None),
    };
    Ok(Some(table))
}

pub fn function(spec: &str) -> Result<TruthTable> {
    match builtin_function(spec)? {
        Some(t) => Ok(t),
        None => read(spec, "truth table")?
            .parse()
            .with_context(|| format!("parsing truth table {spec}")),
    }
}

/// A relation file, or any function form (read as its graph).
pub fn relation(spec: &str) -> Result<Relation> {
    if let Some(t) = builtin_function(spec)? {
        return Ok(Relation::from_function(&t));
    }
    let text = read(spec, "relation")?;
    if text.lines().any(|l| l.trim_start().starts_with("arity=") && l.contains("alphabet=")) {
        text.parse().with_context(|| format!("parsing relation {spec}"))
    } else {
        let t: TruthTable = text.parse().with_context(|| format!("parsing relation {spec}"))?;
        Ok(Relation::from_function(&t))
    }
}

pub fn dist(spec: &str, arity: usize) -> Result<Dist> {
    let d = if spec == "uniform" {
        Dist::uniform(arity)?
    } else if let Some(bits) = spec.strip_prefix("point:") {
        if bits.len() != arity {
            bail!("point {bits:?} does not have {arity} bits");
        }
        let x = parse_bitstring(bits).ok_or_else(|| anyhow!("bad bitstring {bits:?}"))?;
        Dist::point_mass(arity, x)?
    } else if let Some(ws) = spec.strip_prefix("weights:") {
        let w = ws
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| anyhow!("bad weight {s:?}")))
            .collect::<Result<Vec<_>>>()?;
        Dist::from_weights(arity, &w)?
    } else {
        read(spec, "distribution")?
            .parse()
            .with_context(|| format!("parsing distribution {spec}"))?
    };
    if d.arity() != arity {
        bail!("distribution {spec} has arity {}, expected {arity}", d.arity());
    }
    Ok(d)
}

pub fn tree(spec: &str, arity: usize) -> Result<DecisionTree> {
    parse_tree(&read(spec, "tree")?, Some(arity)).with_context(|| format!("parsing tree {spec}"))
}

pub fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| anyhow!("{s:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins() {
        assert_eq!(function("and:2").unwrap(), TruthTable::and(2).unwrap());
        assert_eq!(function("id").unwrap(), TruthTable::identity());
        assert_eq!(function("code:2:6").unwrap(), TruthTable::xor(2).unwrap());
        assert!(function("nope:2").is_err());
        assert_eq!(dist("weights:1,3", 1).unwrap().prob(1), &qclab_core::ratio(3, 4));
        assert!(dist("point:01", 2).unwrap().prob(0b10) == &qclab_core::ratio(1, 1));
        assert!(dist("uniform", 2).is_ok());
    }
}
