use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ncconc_cli::commands::*;
use ncconc_cli::config::to_params;
use ncconc_cli::output::{emit, render};
use ncconc_cli::{configure_threads, dispatch, is_randomized, CliError, ErrorReport, Format, Params, RunConfig};

/// Noncommutative concentration bounds: evaluation, Monte Carlo checks,
/// compressed sensing and large-deviation calculators.
#[derive(Parser)]
#[command(name = "ncconc", version)]
struct Cli {
    /// Seed for every random draw (required by Monte Carlo and sampling subcommands).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; `-` writes to standard output.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand)]
enum Group {
    /// Closed-form bounds.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Monte Carlo estimates and verification against the bounds.
    #[command(subcommand)]
    Mc(McCmd),
    /// Optimality oracles.
    #[command(subcommand)]
    Opt(OptCmd),
    /// Partial-Fourier compressed sensing.
    #[command(subcommand)]
    Cs(CsCmd),
    /// Large-deviation calculators.
    #[command(subcommand)]
    Ldp(LdpCmd),
    /// Replays a saved run config (JSON).
    Run { config: PathBuf },
}

#[derive(Subcommand)]
enum BoundsCmd {
    Eval(BoundsEvalArgs),
}

#[derive(Subcommand)]
enum McCmd {
    Tail(McTailArgs),
    Rosenthal(McRosenthalArgs),
    Dominance(McDominanceArgs),
    Experiment(McExperimentArgs),
}

#[derive(Subcommand)]
enum OptCmd {
    Selector(OptSelectorArgs),
    Gaussian(OptGaussianArgs),
}

#[derive(Subcommand)]
enum CsCmd {
    Rip(CsRipArgs),
    Recover(CsRecoverArgs),
    Tail(CsTailArgs),
}

#[derive(Subcommand)]
enum LdpCmd {
    Eval(LdpEvalArgs),
}

fn named<A: Serialize>(name: &str, args: &A) -> Result<(String, Params), CliError> {
    Ok((name.to_string(), to_params(args)?))
}

fn experiment_seed(path: &str) -> Result<u64, CliError> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    v.get("seed").and_then(|s| s.as_u64()).ok_or_else(|| CliError::Usage(format!("{path}: missing seed")))
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    let (subcommand, params) = match &cli.group {
        Group::Run { config } => {
            let text = std::fs::read_to_string(config)?;
            return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())));
        }
        Group::Bounds(BoundsCmd::Eval(a)) => named("bounds eval", a)?,
        Group::Mc(McCmd::Tail(a)) => named("mc tail", a)?,
        Group::Mc(McCmd::Rosenthal(a)) => named("mc rosenthal", a)?,
        Group::Mc(McCmd::Dominance(a)) => named("mc dominance", a)?,
        Group::Mc(McCmd::Experiment(a)) => named("mc experiment", a)?,
        Group::Opt(OptCmd::Selector(a)) => named("opt selector", a)?,
        Group::Opt(OptCmd::Gaussian(a)) => named("opt gaussian", a)?,
        Group::Cs(CsCmd::Rip(a)) => named("cs rip", a)?,
        Group::Cs(CsCmd::Recover(a)) => named("cs recover", a)?,
        Group::Cs(CsCmd::Tail(a)) => named("cs tail", a)?,
        Group::Ldp(LdpCmd::Eval(a)) => named("ldp eval", a)?,
    };
    let seed = match (cli.seed, &cli.group) {
        (Some(s), _) => s,
        (None, Group::Mc(McCmd::Experiment(a))) => experiment_seed(&a.config)?,
        (None, _) if is_randomized(&subcommand) => {
            return Err(CliError::Usage(format!("{subcommand} draws random numbers; pass --seed")))
        }
        (None, _) => 0,
    };
    Ok(RunConfig { subcommand, params, seed, out_path: cli.out, format: cli.format })
}

fn fail(config: Option<RunConfig>, err: CliError) -> ExitCode {
    eprintln!("ncconc: {err}");
    if let Some(cfg) = config {
        let report = ErrorReport::new(cfg, &err);
        if let Ok(text) = serde_json::to_string_pretty(&report) {
            println!("{text}");
        }
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(None, e);
    }
    let config = match build_config(cli) {
        Ok(c) => c,
        Err(e) => return fail(None, e),
    };
    let report = match dispatch(&config) {
        Ok(r) => r,
        Err(e) => return fail(Some(config), e),
    };
    let written = render(&report).and_then(|text| emit(&config.out_path, &text));
    if let Err(e) = written {
        return fail(Some(config), e);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("ncconc: verification failed");
        ExitCode::from(1)
    }
}
