use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qclab_core::relation::{bitstring, parse_bitstring};
use qclab_core::simulate::{
    exact_q, leaf_reports, success_chain, verify_lilsnip, verify_simileaf, Simulator,
};
use qclab_core::sweep::{
    all_functions, fullbias_sweep, grid_weights, random_functions, rbias_sweep,
    sample_grid_weights, unbias_sweep, SweepSummary,
};
use qclab_core::{
    fmt_rational, hard_distribution, rand_complexity, ratio,
    ComposedInstance, DecisionTree, InstanceParams, QcError, QueryProblem, Rational, Record,
    Relation, TruthTable, Verdict,
};

use crate::manifest::{Certificate, Manifest};
use crate::{
    input, Claim, DceArgs, GameArgs, InstanceArgs, OptionalInstance, ProblemArgs, Report, RqcArgs,
    SimulateArgs, VerifyArgs, XorStackArgs,
};

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

enum Problem {
    Function(TruthTable),
    Relation(Relation),
}

impl Problem {
    fn load(p: &ProblemArgs) -> Result<(Problem, String)> {
        match (&p.g, &p.f) {
            (Some(g), _) => Ok((Problem::Function(input::function(g)?), g.clone())),
            (_, Some(f)) => Ok((Problem::Relation(input::relation(f)?), f.clone())),
            _ => bail!("one of --g or --f is required"),
        }
    }

    fn as_dyn(&self) -> &dyn QueryProblem {
        match self {
            Problem::Function(t) => t,
            Problem::Relation(r) => r,
        }
    }
}

fn game_params(g: &GameArgs) -> Result<Rational> {
    input::rational(&g.tol)
}

pub fn dce(a: &DceArgs, report: &mut Report) -> Result<()> {
    let (problem, name) = Problem::load(&a.problem)?;
    let h = problem.as_dyn();
    let mu = input::dist(&a.mu, h.arity())?;
    let eps = input::rational(&a.eps)?;
    let res = qclab_core::complexity::dist_complexity_witness(h, &mu, &eps)?;
    if let Some(path) = &a.witness {
        write_file(path, &res.result.witness.to_file_string())?;
    }
    report.emit(
        Record::new("dce")
            .param("problem", name)
            .param("mu", &a.mu)
            .param("epsilon", fmt_rational(&eps))
            .value("depth", res.depth)
            .value("success", &res.result.success)
            .verdict(Verdict::Info)
            .witness(res.result.witness.to_string()),
    )
}

pub fn rqc(a: &RqcArgs, report: &mut Report) -> Result<()> {
    let (problem, name) = Problem::load(&a.problem)?;
    let h = problem.as_dyn();
    let eps = input::rational(&a.eps)?;
    let tol = game_params(&a.game)?;
    let game = match rand_complexity(h, &eps, &tol, a.game.max_iter) {
        Ok(g) => g,
        Err(QcError::IterationLimit(partial)) => {
            report.emit(partial.to_record().param("problem", name).param("epsilon", fmt_rational(&eps)))?;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let certified = qclab_core::dist_complexity(h, &game.hard_dist, &eps)?;
    if let Some(path) = &a.witness {
        write_file(path, &game.hard_dist.to_string())?;
    }
    let depth = game.depth;
    report.emit(
        game.to_record()
            .param("problem", name.clone())
            .param("epsilon", fmt_rational(&eps))
            .param("tol", fmt_rational(&tol)),
    )?;
    report.emit(
        Record::new("certificate")
            .param("problem", name)
            .param("epsilon", fmt_rational(&eps))
            .value("game_depth", depth)
            .value("certified_depth", certified)
            .verdict(certified >= depth),
    )
}

/// Instance flags in one place, whichever subcommand supplied them.
struct InstanceSpec<'a> {
    f: Option<&'a str>,
    g: Option<&'a str>,
    n: Option<usize>,
    m: Option<usize>,
    mu: Option<&'a str>,
    lambda: &'a str,
    eps: Option<&'a str>,
    theta: Option<&'a str>,
    tol: &'a str,
    max_iter: usize,
    policy: Option<qclab_core::ZeroMassPolicy>,
    manifest: Option<&'a Path>,
}

impl<'a> InstanceSpec<'a> {
    fn from_args(a: &'a InstanceArgs) -> Self {
        InstanceSpec {
            f: a.f.as_deref(),
            g: a.g.as_deref(),
            n: a.n,
            m: a.m,
            mu: a.mu.as_deref(),
            lambda: &a.lambda,
            eps: a.eps.as_deref(),
            theta: a.theta.as_deref(),
            tol: &a.game.tol,
            max_iter: a.game.max_iter,
            policy: a.policy.map(Into::into),
            manifest: a.instance.as_deref(),
        }
    }

    fn from_optional(a: &'a OptionalInstance) -> Option<Self> {
        if a.instance.is_none() && a.f.is_none() && a.g.is_none() {
            return None;
        }
        Some(InstanceSpec {
            f: a.f.as_deref(),
            g: a.g.as_deref(),
            n: None,
            m: None,
            mu: a.mu.as_deref(),
            lambda: a.lambda.as_deref().unwrap_or("uniform"),
            eps: a.eps.as_deref(),
            theta: a.theta.as_deref(),
            tol: "1/100",
            max_iter: 100_000,
            policy: a.policy.map(Into::into),
            manifest: a.instance.as_deref(),
        })
    }

    fn build(&self) -> Result<(ComposedInstance, Manifest)> {
        if let Some(path) = self.manifest {
            let m = Manifest::load(path)?;
            let inst = m.instance(self.policy)?;
            return Ok((inst, m));
        }
        let (Some(f), Some(g)) = (self.f, self.g) else {
            bail!("an instance needs --f and --g, or --instance");
        };
        let f = input::relation(f)?;
        let g = input::function(g)?;
        if let Some(n) = self.n.filter(|&n| n != f.arity()) {
            bail!("--n {n} does not match the arity {} of f", f.arity());
        }
        if let Some(m) = self.m.filter(|&m| m != g.arity()) {
            bail!("--m {m} does not match the arity {} of g", g.arity());
        }
        let n = f.arity();
        let epsilon = match self.eps {
            Some(e) => input::rational(e)?,
            None => qclab_core::compose::default_epsilon(n)?,
        };
        let theta = self.theta.map(input::rational).transpose()?;
        let lambda = input::dist(self.lambda, n)?;
        let (mu, source, certificate) = match self.mu {
            Some(spec) => (input::dist(spec, g.arity())?, "given", None),
            None => {
                let tol = input::rational(self.tol)?;
                let hard = hard_distribution(&g, &epsilon, &tol, self.max_iter)?;
                let cert = Certificate {
                    game_depth: hard.game.depth,
                    certified_depth: hard.certified_depth,
                    lower_value: fmt_rational(&hard.game.lower_value),
                    upper_value: fmt_rational(&hard.game.upper_value),
                    iterations: hard.game.iterations,
                    converged: hard.game.converged,
                };
                (hard.dist, "hard_distribution", Some(cert))
            }
        };
        let params = InstanceParams {
            epsilon: Some(epsilon),
            theta,
            policy: self.policy.unwrap_or_default(),
        };
        let inst = ComposedInstance::new(f, g, mu, lambda, params)?;
        let manifest = Manifest::of(&inst, source, certificate);
        Ok((inst, manifest))
    }
}

pub fn build_instance(a: &InstanceArgs, report: &mut Report) -> Result<()> {
    let (_, manifest) = InstanceSpec::from_args(a).build()?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    report.write_raw(&text)
}

fn parse_z(bits: &str, n: usize) -> Result<u64> {
    if bits.len() != n {
        bail!("z = {bits:?} must have {n} bits");
    }
    parse_bitstring(bits).with_context(|| format!("bad bitstring {bits:?}"))
}

/// Largest leaf deviation in standard deviations, and whether all are within 4.
fn sigma_check(q: &[Rational], counts: &[u64], samples: u64) -> (f64, bool) {
    let n = samples as f64;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (p, &k) in q.iter().zip(counts) {
        let p = qclab_core::rational::to_f64(p);
        let sigma = (n * p * (1.0 - p)).sqrt();
        let dev = (k as f64 - n * p).abs();
        if dev > 4.0 * sigma {
            ok = false;
        }
        if sigma > 0.0 {
            worst = worst.max(dev / sigma);
        } else if dev > 0.0 {
            worst = f64::INFINITY;
        }
    }
    (worst, ok)
}

pub fn simulate(a: &SimulateArgs, report: &mut Report) -> Result<()> {
    let (inst, _) = InstanceSpec::from_args(&a.instance).build()?;
    let tree = input::tree(&a.tree, inst.blocks().arity())?;
    let n = inst.n();
    let zs: Vec<u64> = match &a.z {
        Some(bits) => vec![parse_z(bits, n)?],
        None => (0..1u64 << n).collect(),
    };
    let budget = tree.depth() / inst.inner_complexity();
    for z in zs {
        let q = exact_q(&inst, &tree, z)?;
        let counts = Simulator::new(&inst, &tree, z)?.leaf_counts(a.seed ^ z, a.samples)?;
        let (worst_sigma, within) = sigma_check(&q, &counts.counts, counts.samples);
        let freq: Vec<f64> = counts
            .counts
            .iter()
            .map(|&k| k as f64 / counts.samples.max(1) as f64)
            .collect();
        report.emit(
            Record::new("simulate")
                .param("z", bitstring(z, n))
                .param("seed", a.seed)
                .param("samples", a.samples)
                .value("exact_q", q.as_slice())
                .value("frequency", freq.as_slice())
                .value("worst_sigma", worst_sigma)
                .value("max_z_queries", counts.max_z_queries)
                .value("mean_z_queries", counts.total_z_queries as f64 / counts.samples.max(1) as f64)
                .value("z_query_budget", budget)
                .verdict(within && counts.max_z_queries <= budget),
        )?;
        for leaf in leaf_reports(&inst, &tree, z)? {
            let flags: Vec<bool> = leaf.snip_flags.clone();
            report.emit(
                Record::new("leaf")
                    .param("z", bitstring(z, n))
                    .param("leaf", leaf.leaf_id)
                    .value("label", leaf.label)
                    .value("p", &leaf.p)
                    .value("q", &leaf.q)
                    .value("snip", leaf.snip)
                    .value("snip_flags", flags.as_slice())
                    .value("z_queries", leaf.z_queries),
            )?;
        }
    }
    report.emit(success_chain(&inst, &tree)?.to_record())
}

fn rationals(list: &[String], default: &[(i64, i64)]) -> Result<Vec<Rational>> {
    if list.is_empty() {
        Ok(default.iter().map(|&(p, q)| ratio(p, q)).collect())
    } else {
        list.iter().map(|s| input::rational(s)).collect()
    }
}

fn sweep_records(
    a: &VerifyArgs,
    report: &mut Report,
    run: impl Fn(&[TruthTable], &[Vec<u64>]) -> SweepSummary,
) -> Result<()> {
    for m in 1..=a.m {
        let (functions, weights, sampled) = if m <= 3 {
            (all_functions(m), grid_weights(m, a.max_denom), false)
        } else {
            (
                random_functions(m, a.functions, a.seed ^ m as u64)?,
                sample_grid_weights(m, a.max_denom, a.samples, a.seed ^ (m as u64) << 32),
                true,
            )
        };
        let summary = run(&functions, &weights);
        report.emit(
            summary
                .to_record()
                .param("m", m)
                .param("max_denom", a.max_denom)
                .param("sampled", sampled),
        )?;
    }
    Ok(())
}

fn instance_checks(a: &VerifyArgs, claim: Claim, report: &mut Report) -> Result<()> {
    let spec = InstanceSpec::from_optional(&a.instance);
    let (spec, tree) = match (spec, &a.tree) {
        (Some(s), Some(t)) => (s, t),
        _ if a.claim == Claim::All => return Ok(()),
        _ => bail!("{claim:?} needs an instance (--instance or --f/--g) and --tree"),
    };
    let (inst, _) = spec.build()?;
    let tree: DecisionTree = input::tree(tree, inst.blocks().arity())?;
    for z in 0..1u64 << inst.n() {
        if matches!(claim, Claim::Simileaf | Claim::All) {
            let r = verify_simileaf(&inst, &tree, z, inst.theta())?;
            report.emit(r.to_record(inst.n()))?;
        }
        if matches!(claim, Claim::Lilsnip | Claim::All) {
            let r = verify_lilsnip(&inst, &tree, z)?;
            report.emit(r.to_record(inst.n()))?;
        }
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs, report: &mut Report) -> Result<()> {
    let all = a.claim == Claim::All;
    if all || a.claim == Claim::Unbias {
        let deltas = rationals(&a.delta, &[(1, 8), (1, 4), (1, 2)])?;
        sweep_records(a, report, |f, w| unbias_sweep(f, w, &deltas))?;
    }
    if all || a.claim == Claim::Rbias {
        let eps = rationals(&a.sweep_eps, &[(1, 4), (7, 16)])?;
        sweep_records(a, report, |f, w| rbias_sweep(f, w, &eps, a.depth))?;
    }
    if all || a.claim == Claim::Fullbias {
        let eps = rationals(&a.sweep_eps, &[(1, 4), (1, 3), (5, 12), (7, 16)])?;
        sweep_records(a, report, |f, w| fullbias_sweep(f, w, &eps))?;
    }
    match a.claim {
        Claim::Simileaf | Claim::Lilsnip | Claim::All => instance_checks(a, a.claim, report),
        _ => Ok(()),
    }
}

pub fn xor_stack(a: &XorStackArgs, report: &mut Report) -> Result<()> {
    let g = input::function(&a.g)?;
    let eps = input::rational(&a.eps)?;
    let tol = game_params(&a.game)?;
    let mut depths = Vec::new();
    for t in 1..=a.t {
        let s = qclab_core::xor_stack(&g, t)?;
        let rec = match rand_complexity(&s, &eps, &tol, a.game.max_iter) {
            Ok(game) => {
                depths.push(game.depth);
                game.to_record()
            }
            Err(QcError::IterationLimit(partial)) => partial.to_record(),
            Err(e) => return Err(e.into()),
        };
        report.emit(rec.param("g", &a.g).param("t", t).param("arity", s.arity()))?;
        if t == a.t {
            if let Some(path) = &a.witness {
                write_file(path, &s.to_string())?;
            }
        }
    }
    let monotone = depths.windows(2).all(|w| w[0] <= w[1]);
    report.emit(
        Record::new("xor_stack_monotone")
            .param("g", &a.g)
            .param("epsilon", fmt_rational(&eps))
            .value("depths", depths.as_slice())
            .verdict(monotone && depths.len() == a.t),
    )
}
