//! Subcommand arguments and their handlers.
//!
//! Each argument struct doubles as the command-line definition and as the
//! typed view of a [`RunConfig`]'s parameter map, so the same validation
//! applies to flags and to saved configs.

use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ncconc::bounds::{self, MomentProfile, SelectorParams, TailBound};
use ncconc::csfourier::{self, AmplitudeLaw, BasisPursuitParams, DftSystem};
use ncconc::ensembles::{self, EnsembleConfig, EnsembleSpec, LowerBoundVariant};
use ncconc::ldp::{self, LegendreSearch, ScalarLaw};
use ncconc::{rng, Error};

use crate::config::{from_params, parse_kebab, to_params, Grid, Params, RunConfig, RunReport, ARTIFACT_VERSION, SCHEMA_VERSION};
use crate::error::CliError;
use crate::fit::fit_constant;

const DEFAULT_C: f64 = 2.0;

fn default_c() -> f64 {
    DEFAULT_C
}
fn confidence_999() -> f64 {
    0.999
}
fn confidence_99() -> f64 {
    0.99
}
fn one() -> usize {
    1
}
fn eight() -> usize {
    8
}
fn unit_law() -> AmplitudeLaw {
    AmplitudeLaw::Unit
}

/// Every subcommand routed by [`dispatch`].
pub const SUBCOMMANDS: [&str; 11] = [
    "bounds eval",
    "mc tail",
    "mc rosenthal",
    "mc dominance",
    "mc experiment",
    "opt selector",
    "opt gaussian",
    "cs rip",
    "cs recover",
    "cs tail",
    "ldp eval",
];

/// Subcommands that draw random numbers and therefore need an explicit seed.
pub fn is_randomized(subcommand: &str) -> bool {
    subcommand.starts_with("mc ") || matches!(subcommand, "cs rip" | "cs recover" | "cs tail")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Bennett,
    Bernstein,
    Prohorov,
    Rosenthal,
    CsMoment,
    CsTail,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsEvalArgs {
    #[arg(long, value_enum)]
    pub kind: BoundKind,
    /// Variance proxy.
    #[arg(long = "S")]
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// Uniform norm bound.
    #[arg(long = "R")]
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Population size of the selector sum.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Expected number of selected indices.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Norm bound of the selector summands.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Trace of the identity in the selector tail bound.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    #[arg(long = "C")]
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c_const: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McTailArgs {
    /// Built-in ensemble name, e.g. `rademacher-d4-n8`.
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = confidence_999())]
    #[serde(default = "confidence_999")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McRosenthalArgs {
    #[arg(long)]
    pub spec: String,
    /// One or more moment orders, comma separated.
    #[arg(long)]
    pub p: Grid,
    #[arg(long)]
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDominanceArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub trials: usize,
    /// Explicit thresholds; defaults to an even grid sized to the ensemble.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Grid>,
    #[arg(long, default_value_t = eight())]
    #[serde(default = "eight")]
    pub points: usize,
    #[arg(long, default_value_t = confidence_999())]
    #[serde(default = "confidence_999")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McExperimentArgs {
    /// Path to an experiment file (ensemble, grids, trials, seed, confidence).
    #[arg(long)]
    pub config: String,
}

/// Contents of an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: EnsembleConfig,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub p_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "confidence_999")]
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptSelectorArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c_const: f64,
    #[arg(long, value_parser = parse_kebab::<LowerBoundVariant>)]
    pub variant: LowerBoundVariant,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptGaussianArgs {
    #[arg(long)]
    pub p: Grid,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsRipArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub s: usize,
    /// Expected number of selected rows.
    #[arg(long)]
    pub k: f64,
    /// Independent row draws.
    #[arg(long, default_value_t = one())]
    #[serde(default = "one")]
    pub trials: usize,
    /// Enumerate every support (the default when no sample size is given).
    #[arg(long, conflicts_with = "supports")]
    #[serde(default)]
    pub exact: bool,
    /// Estimate from this many random supports instead of enumerating.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supports: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsRecoverArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub s: usize,
    /// One or more expected row counts, comma separated.
    #[arg(long)]
    pub k: Grid,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, value_parser = parse_kebab::<AmplitudeLaw>, default_value = "unit")]
    #[serde(default = "unit_law")]
    pub law: AmplitudeLaw,
    #[arg(long, default_value_t = confidence_99())]
    #[serde(default = "confidence_99")]
    pub confidence: f64,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsTailArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: f64,
    #[arg(long)]
    pub s: usize,
    /// Deviation levels, comma separated.
    #[arg(long)]
    pub teps: Grid,
    #[arg(long)]
    pub trials: usize,
    /// Support indices; defaults to `0..s`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Grid>,
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    #[serde(rename = "C", default = "default_c")]
    pub c_const: f64,
    #[arg(long, default_value_t = confidence_999())]
    #[serde(default = "confidence_999")]
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LdpQuantity {
    Mgf,
    Logmgf,
    Rate,
    Upper,
    /// `(λ, Λ(λ), Λ*(λ))` over the `lam` grid.
    Curve,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpEvalArgs {
    /// `gauss`, `semicircle`, `semicircle:<a>:<r>` or `mixture:<theta>`.
    #[arg(long)]
    pub law: String,
    #[arg(long, value_enum)]
    pub what: LdpQuantity,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Grid>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lam: Option<Grid>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lam_lo: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lam_hi: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
}

/// Result of a handler before it is wrapped into a report.
struct Outcome {
    params: Params,
    records: Vec<Value>,
    pass: bool,
    summary: Option<Value>,
}

impl Outcome {
    fn completed<A: Serialize>(args: &A, records: Vec<Value>) -> Result<Self, CliError> {
        Ok(Self { params: to_params(args)?, records, pass: true, summary: None })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn with_field(mut v: Value, key: &str, extra: Value) -> Value {
    if let Value::Object(m) = &mut v {
        m.insert(key.into(), extra);
    }
    v
}

fn require(v: Option<f64>, key: &str, kind: BoundKind) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{key} is required for kind {}", kind_name(kind))))
}

fn kind_name(kind: BoundKind) -> String {
    to_value(&kind).as_str().unwrap_or_default().to_string()
}

fn bounds_eval(params: &Params) -> Result<Outcome, CliError> {
    let a: BoundsEvalArgs = from_params(params)?;
    let inputs: &[&str] = match a.kind {
        BoundKind::Bennett | BoundKind::Bernstein | BoundKind::Prohorov => &["S", "R", "t"],
        BoundKind::Rosenthal => &["S", "R", "p"],
        BoundKind::CsMoment => &["m", "k", "r", "p", "C"],
        BoundKind::CsTail => &["t", "eps", "C", "trace"],
    };
    if let Some(extra) = to_params(&a)?.keys().find(|k| k.as_str() != "kind" && !inputs.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("parameter {extra} is not used by kind {}", kind_name(a.kind))));
    }
    let value = match a.kind {
        BoundKind::Bennett | BoundKind::Bernstein | BoundKind::Prohorov => {
            let prof = MomentProfile::new(require(a.variance, "S", a.kind)?, require(a.bound, "R", a.kind)?, 1)?;
            let t = require(a.t, "t", a.kind)?;
            let which = match a.kind {
                BoundKind::Bennett => TailBound::Bennett,
                BoundKind::Bernstein => TailBound::Bernstein,
                _ => TailBound::Prohorov,
            };
            which.eval(&prof, t)?
        }
        BoundKind::Rosenthal => {
            let prof = MomentProfile::new(require(a.variance, "S", a.kind)?, require(a.bound, "R", a.kind)?, 1)?;
            bounds::rosenthal_bound(&prof, require(a.p, "p", a.kind)?)?
        }
        BoundKind::CsMoment => {
            let m = a.m.ok_or_else(|| CliError::Usage("--m is required for kind cs-moment".into()))?;
            let c = a.c_const.unwrap_or(DEFAULT_C);
            let sel = SelectorParams::new(m, require(a.k, "k", a.kind)?, require(a.r, "r", a.kind)?, c)?;
            bounds::cs_moment_bound(&sel, require(a.p, "p", a.kind)?)?
        }
        BoundKind::CsTail => {
            let c = a.c_const.unwrap_or(DEFAULT_C);
            let trace = a.trace.unwrap_or(1.0);
            bounds::cs_tail_bound(require(a.t, "t", a.kind)?, require(a.eps, "eps", a.kind)?, c, trace)?
        }
    };
    // resolve defaults so the echoed config reproduces the value
    let mut resolved = a.clone();
    if inputs.contains(&"C") {
        resolved.c_const = Some(a.c_const.unwrap_or(DEFAULT_C));
    }
    if inputs.contains(&"trace") {
        resolved.trace = Some(a.trace.unwrap_or(1.0));
    }
    let params = to_params(&resolved)?;
    let input_map: serde_json::Map<String, Value> = params
        .iter()
        .filter(|(k, _)| k.as_str() != "kind")
        .map(|(k, v)| (k.clone(), to_value(v)))
        .collect();
    let record = json!({ "kind": kind_name(a.kind), "inputs": input_map, "value": value });
    Ok(Outcome { params, records: vec![record], pass: true, summary: None })
}

fn spec_by_name(name: &str) -> Result<EnsembleSpec, CliError> {
    Ok(EnsembleSpec::from_name(name)?)
}

fn mc_tail(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: McTailArgs = from_params(params)?;
    let spec = spec_by_name(&a.spec)?;
    let est = ensembles::estimate_tail(&spec, a.t, a.trials, seed, a.confidence)?;
    let record = with_field(to_value(&est), "spec", json!(a.spec));
    Outcome::completed(&a, vec![record])
}

fn rosenthal_records(spec: &EnsembleSpec, label: &Value, ps: &[f64], trials: usize, seed: u64) -> Result<Vec<Value>, CliError> {
    let prof = ensembles::profile_of(spec)?;
    ps.iter()
        .map(|&p| {
            let est = ensembles::estimate_pnorm(spec, p, trials, seed)?;
            let bound = bounds::rosenthal_bound(&prof, p)?;
            Ok(json!({
                "spec": label,
                "p": p,
                "estimate": est.value,
                "stderr": est.stderr,
                "bound": bound,
                "trials": trials,
                "seed": seed,
                "pass": est.value <= bound,
            }))
        })
        .collect()
}

fn mc_rosenthal(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: McRosenthalArgs = from_params(params)?;
    let spec = spec_by_name(&a.spec)?;
    let records = rosenthal_records(&spec, &json!(a.spec), &a.p.0, a.trials, seed)?;
    let pass = records.iter().all(|r| r["pass"] == json!(true));
    Ok(Outcome { params: to_params(&a)?, records, pass, summary: None })
}

fn dominance_records(report: &ensembles::DominanceReport, label: &Value) -> Vec<Value> {
    report
        .records
        .iter()
        .map(|r| with_field(with_field(to_value(r), "spec", label.clone()), "check", json!("dominance")))
        .collect()
}

fn mc_dominance(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: McDominanceArgs = from_params(params)?;
    let spec = spec_by_name(&a.spec)?;
    let mut resolved = a.clone();
    let grid = match &a.t_grid {
        Some(g) => g.0.clone(),
        None => ensembles::default_t_grid(&spec, a.points)?,
    };
    resolved.t_grid = Some(Grid(grid.clone()));
    let report = ensembles::verify_dominance(&spec, &grid, a.trials, seed, a.confidence)?;
    Ok(Outcome {
        params: to_params(&resolved)?,
        records: dominance_records(&report, &json!(a.spec)),
        pass: report.pass,
        summary: Some(json!({ "profile": report.profile })),
    })
}

/// Runs an experiment file; its seed must agree with the run seed.
fn mc_experiment(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: McExperimentArgs = from_params(params)?;
    let text = std::fs::read_to_string(&a.config)?;
    let exp: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("experiment file {}: {e}", a.config)))?;
    if exp.seed != seed {
        return Err(CliError::Usage(format!("run seed {seed} differs from experiment seed {}", exp.seed)));
    }
    if exp.t_grid.is_empty() && exp.p_list.is_empty() {
        return Err(CliError::Usage("experiment needs a t_grid or a p_list".into()));
    }
    let spec = exp.spec.build()?;
    let label = to_value(&exp.spec);
    let mut records = Vec::new();
    let mut pass = true;
    let mut profile = to_value(&ensembles::profile_of(&spec)?);
    if !exp.t_grid.is_empty() {
        let report = ensembles::verify_dominance(&spec, &exp.t_grid, exp.trials, exp.seed, exp.confidence)?;
        pass &= report.pass;
        profile = to_value(&report.profile);
        records.extend(dominance_records(&report, &label));
    }
    if !exp.p_list.is_empty() {
        let ros = rosenthal_records(&spec, &label, &exp.p_list, exp.trials, exp.seed)?;
        pass &= ros.iter().all(|r| r["pass"] == json!(true));
        records.extend(ros.into_iter().map(|r| with_field(r, "check", json!("rosenthal"))));
    }
    Ok(Outcome { params: to_params(&a)?, records, pass, summary: Some(json!({ "profile": profile, "experiment": exp })) })
}

fn opt_selector(params: &Params) -> Result<Outcome, CliError> {
    let a: OptSelectorArgs = from_params(params)?;
    let lb = ensembles::lower_bound_f(a.p, a.c_const, a.variant)?;
    let pass = lb.chain_holds();
    let record = with_field(to_value(&lb), "chain_holds", json!(pass));
    Ok(Outcome { params: to_params(&a)?, records: vec![record], pass, summary: None })
}

fn opt_gaussian(params: &Params) -> Result<Outcome, CliError> {
    let a: OptGaussianArgs = from_params(params)?;
    let records = a
        .p
        .0
        .iter()
        .map(|&p| {
            let v = ensembles::gaussian_pnorm_exact(p)?;
            Ok(json!({ "p": p, "value": v, "ratio_to_sqrt_p": v / p.sqrt() }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Outcome::completed(&a, records)
}

fn cs_rip(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: CsRipArgs = from_params(params)?;
    if a.exact && a.supports.is_some() {
        return Err(CliError::Usage("--exact and --supports are exclusive".into()));
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    let dft = DftSystem::new(a.n)?;
    let records = (0..a.trials as u64)
        .map(|i| {
            // one stream per trial: rows first, then any sampled supports
            let mut stream = rng::trial_stream(seed, i);
            let draw = csfourier::draw_selectors(a.n, a.k, &mut stream)?;
            let rip = match a.supports {
                Some(m) => csfourier::rip_constant_sampled(&dft, &draw, a.s, m, &mut stream)?,
                None => csfourier::rip_constant_exact(&dft, &draw, a.s)?,
            };
            Ok(json!({ "trial": i, "rows": draw.len(), "rip": rip }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut resolved = a.clone();
    resolved.exact = a.supports.is_none();
    Outcome::completed(&resolved, records)
}

fn cs_recover(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: CsRecoverArgs = from_params(params)?;
    let defaults = BasisPursuitParams::default();
    let bp = BasisPursuitParams {
        rho: a.rho.unwrap_or(defaults.rho),
        max_iter: a.max_iter.unwrap_or(defaults.max_iter),
        tol_primal: a.tol.unwrap_or(defaults.tol_primal),
        tol_dual: a.tol.unwrap_or(defaults.tol_dual),
    };
    let records = a
        .k
        .0
        .iter()
        .map(|&k| {
            let summary = csfourier::recovery_experiment(a.n, a.s, k, a.trials, seed, a.law, &bp, a.confidence)?;
            Ok(to_value(&summary))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let resolved = CsRecoverArgs { rho: Some(bp.rho), max_iter: Some(bp.max_iter), tol: Some(bp.tol_primal), ..a };
    Outcome::completed(&resolved, records)
}

fn cs_tail(params: &Params, seed: u64) -> Result<Outcome, CliError> {
    let a: CsTailArgs = from_params(params)?;
    let support = match &a.support {
        Some(g) => g.indices()?,
        None => (0..a.s).collect(),
    };
    let curve = csfourier::invertibility_tail_curve(
        a.n,
        a.k,
        a.s,
        &support,
        &a.teps.0,
        a.trials,
        seed,
        a.c_const,
        a.confidence,
    )?;
    let summary = match fit_constant(&curve, a.s) {
        Ok(fit) => json!({ "fit": fit }),
        Err(e) => json!({ "fit_error": e.to_string() }),
    };
    let mut resolved = a.clone();
    resolved.support = Some(Grid(support.iter().map(|&i| i as f64).collect()));
    let mut out = Outcome::completed(&resolved, curve.iter().map(to_value).collect())?;
    out.summary = Some(summary);
    Ok(out)
}

/// Parses `gauss`, `semicircle[:a:r]` and `mixture:<theta>`.
pub fn parse_law(s: &str) -> Result<ScalarLaw, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {p:?} in law {s:?}")));
    let law = match parts.as_slice() {
        ["gauss"] => ScalarLaw::GaussianStd,
        ["semicircle"] => ScalarLaw::Semicircle { a: 0.0, r: 2.0 },
        ["semicircle", a, r] => ScalarLaw::Semicircle { a: num(a)?, r: num(r)? },
        ["mixture", theta] => ScalarLaw::Mixture { theta: num(theta)? },
        _ => return Err(CliError::Usage(format!("unknown law {s:?}"))),
    };
    law.validate()?;
    Ok(law)
}

fn ldp_eval(params: &Params) -> Result<Outcome, CliError> {
    let a: LdpEvalArgs = from_params(params)?;
    let law = parse_law(&a.law)?;
    let d = LegendreSearch::default();
    let search = LegendreSearch {
        lam_lo: a.lam_lo.unwrap_or(d.lam_lo),
        lam_hi: a.lam_hi.unwrap_or(d.lam_hi),
        grid_n: a.grid_n.unwrap_or(d.grid_n),
        ..d
    };
    let needs_lam = matches!(a.what, LdpQuantity::Mgf | LdpQuantity::Logmgf | LdpQuantity::Curve);
    let grid = match (needs_lam, &a.lam, &a.x) {
        (true, Some(g), None) => &g.0,
        (false, None, Some(g)) => &g.0,
        (true, ..) => return Err(CliError::Usage("this quantity takes --lam (and not --x)".into())),
        (false, ..) => return Err(CliError::Usage("this quantity takes --x (and not --lam)".into())),
    };
    let logmgf = |l: f64| law.log_mgf(l).unwrap_or(f64::NAN);
    let records = grid
        .iter()
        .map(|&v| {
            Ok(match a.what {
                LdpQuantity::Mgf => json!({ "lambda": v, "value": law.log_mgf(v)?.exp() }),
                LdpQuantity::Logmgf => json!({ "lambda": v, "value": law.log_mgf(v)? }),
                LdpQuantity::Rate => {
                    let r = ldp::rate_function(&law, v, &search)?;
                    json!({ "x": v, "value": r.value, "argmax_lambda": r.argmax_lambda })
                }
                LdpQuantity::Upper => {
                    let s = LegendreSearch { centered: law.is_centered(), ..search };
                    json!({ "t": v, "value": ldp::ldp_upper_bound(logmgf, v, &s)? })
                }
                LdpQuantity::Curve => json!({
                    "lambda": v,
                    "log_mgf": law.log_mgf(v)?,
                    "rate": ldp::rate_function(&law, v, &search)?.value,
                }),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let resolved = LdpEvalArgs {
        lam_lo: Some(search.lam_lo),
        lam_hi: Some(search.lam_hi),
        grid_n: Some(search.grid_n),
        ..a
    };
    Outcome::completed(&resolved, records)
}

/// Routes a config to its handler and wraps the result into a report.
pub fn dispatch(config: &RunConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let (p, seed) = (&config.params, config.seed);
    let out = match config.subcommand.as_str() {
        "bounds eval" => bounds_eval(p)?,
        "mc tail" => mc_tail(p, seed)?,
        "mc rosenthal" => mc_rosenthal(p, seed)?,
        "mc dominance" => mc_dominance(p, seed)?,
        "mc experiment" => mc_experiment(p, seed)?,
        "opt selector" => opt_selector(p)?,
        "opt gaussian" => opt_gaussian(p)?,
        "cs rip" => cs_rip(p, seed)?,
        "cs recover" => cs_recover(p, seed)?,
        "cs tail" => cs_tail(p, seed)?,
        "ldp eval" => ldp_eval(p)?,
        other => return Err(CliError::Usage(format!("unknown subcommand {other:?}"))),
    };
    if out.records.is_empty() {
        return Err(CliError::Usage("run produced no records (empty grid?)".into()));
    }
    Ok(RunReport {
        schema_version: SCHEMA_VERSION.into(),
        artifact_version: ARTIFACT_VERSION.into(),
        config: RunConfig { params: out.params, ..config.clone() },
        records: out.records,
        pass: out.pass,
        summary: out.summary,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}
