use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use tesseract_core::circuit::Basis;
use tesseract_core::experiments::{self, build_plan_with, has_basis_setting, ExperimentPlan, PlanOptions, PLAN_NAMES};
use tesseract_core::gadgets::W4Flavor;
use tesseract_core::noise::NoiseParams;
use tesseract_core::stats::{emit_report, ReportFormat, TrialStats, DEFAULT_LEVEL};
use tesseract_core::verifier::{self, gadget_plans, verify_plans, GADGET_NAMES};

#[derive(Parser)]
#[command(name = "tesseract", version, about = "Simulate and verify tesseract-code experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    #[value(name = "X", alias = "x")]
    X,
    #[value(name = "Z", alias = "z")]
    Z,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::X => Basis::X,
            BasisArg::Z => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    OneFlag,
    TwoFlag,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run of an experiment plan.
    Run(RunArgs),
    /// Exhaustive fault injection on a gadget or plan.
    Verify {
        target: String,
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Sample this many fault pairs instead of enumerating them.
        #[arg(long)]
        sampled_pairs: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a plan or gadget harness in the circuit text format.
    ExportCircuit {
        target: String,
        #[arg(long, value_enum)]
        basis: Option<BasisArg>,
        #[arg(long, value_enum, default_value = "one-flag")]
        flavor: FlavorArg,
        #[arg(long, default_value_t = 5)]
        rounds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write record roles, value labels and predicates as JSON here.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Write stabilizers, logical representatives and automorphisms as JSON.
    ExportCode {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List plan and gadget names.
    List,
}

#[derive(Args)]
struct RunArgs {
    plan: String,
    #[arg(long, default_value_t = 20_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurement setting; both settings when omitted.
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    /// Noise parameter JSON file (defaults to the bundled H2 set).
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Inline override, `name=value`, applied after `--noise`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    /// Multiply every error probability.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, value_enum, default_value = "one-flag")]
    flavor: FlavorArg,
    /// Teleportation rounds for rep-ec and teleport plans.
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail if the rejected fraction of any setting exceeds this.
    #[arg(long)]
    max_reject_rate: Option<f64>,
    /// Print the decode trace of one shot instead of running.
    #[arg(long, value_name = "SHOT")]
    trace: Option<u64>,
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn load_params(noise: Option<&PathBuf>, overrides: &[String], scale: Option<f64>) -> Result<NoiseParams> {
    let text = match noise {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => tesseract_core::noise::H2_DEFAULTS_JSON.to_string(),
    };
    let mut value: Value = serde_json::from_str(&text).context("noise file is not JSON")?;
    let obj = value.as_object_mut().context("noise file must be a JSON object")?;
    for o in overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override {o:?} is not NAME=VALUE"))?;
        let v: Value = serde_json::from_str(v.trim()).with_context(|| format!("bad value in {o:?}"))?;
        obj.insert(k.trim().to_string(), v);
    }
    let mut params = NoiseParams::from_json(&value.to_string())?;
    if let Some(f) = scale {
        params = params.scaled(f);
        params.validate()?;
    }
    Ok(params)
}

fn options(flavor: FlavorArg, rounds: usize) -> PlanOptions {
    let flavor = match flavor {
        FlavorArg::OneFlag => W4Flavor::OneFlag,
        FlavorArg::TwoFlag => W4Flavor::TwoFlag,
    };
    PlanOptions { flavor, rounds }
}

fn settings(name: &str, basis: Option<BasisArg>) -> Vec<Option<Basis>> {
    match basis {
        Some(b) => vec![Some(b.into())],
        None if has_basis_setting(name) => vec![Some(Basis::X), Some(Basis::Z)],
        None => vec![None],
    }
}

fn plans_for(name: &str, basis: Option<BasisArg>, opts: PlanOptions) -> Result<Vec<ExperimentPlan>> {
    settings(name, basis).into_iter().map(|b| Ok(build_plan_with(name, b, opts)?)).collect()
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let RunArgs { plan, shots, seed, basis, noise, overrides, scale, flavor, rounds, format, out, max_reject_rate, trace } = args;
    let params = load_params(noise.as_ref(), &overrides, scale)?;
    let opts = options(flavor, rounds);
    if shots == 0 {
        bail!("--shots must be at least 1");
    }
    let plans = plans_for(&plan, basis, opts)?;
    if let Some(shot) = trace {
        let mut traces = Vec::new();
        for p in &plans {
            let (outcome, st) = experiments::trace_shot(p, seed, shot, &params)?;
            traces.push(serde_json::json!({
                "experiment": p.name,
                "basis": p.basis,
                "shot": shot,
                "outcome": outcome,
                "values": p.program.value_labels.iter().zip(&st.values).map(|(l, v)| (l.clone(), *v)).collect::<Vec<_>>(),
                "trace": st.trace.unwrap_or_default(),
            }));
        }
        write_out(out.as_ref(), &serde_json::to_string_pretty(&traces)?)?;
        return Ok(true);
    }
    let mut stats: Vec<TrialStats> = Vec::new();
    for p in &plans {
        stats.push(experiments::run(p, shots, seed, &params)?);
    }
    let rows: Vec<_> = stats.iter().map(|s| s.row(DEFAULT_LEVEL)).collect();
    let format = match format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Table => ReportFormat::Table,
    };
    write_out(out.as_ref(), &emit_report(&rows, format)?)?;
    let mut ok = true;
    if let Some(budget) = max_reject_rate {
        for s in &stats {
            let rejected = 1.0 - s.acceptance_rate();
            if rejected > budget {
                let basis = s.basis.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
                eprintln!("{} {basis}: rejected fraction {rejected:.4} exceeds {budget}", s.experiment);
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn cmd_verify(target: String, order: usize, sampled_pairs: Option<u64>, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    let plans = if GADGET_NAMES.contains(&target.as_str()) {
        gadget_plans(&target)?
    } else if PLAN_NAMES.contains(&target.as_str()) {
        plans_for(&target, None, PlanOptions::default())?
    } else {
        bail!("unknown gadget or plan {target:?}; see `tesseract list`");
    };
    let tally = match (order, sampled_pairs) {
        (2, Some(n)) => verifier::sample_plans(&target, &plans, n, seed)?,
        (_, Some(_)) => bail!("--sampled-pairs only applies to --order 2"),
        _ => verify_plans(&target, &plans, order)?,
    };
    write_out(out.as_ref(), &serde_json::to_string_pretty(&tally)?)?;
    let ok = verifier::passes(&tally);
    eprintln!("{target} order {order}: {}", if ok { "pass" } else { "FAIL" });
    Ok(ok)
}

fn cmd_export(
    target: String,
    basis: Option<BasisArg>,
    opts: PlanOptions,
    out: Option<PathBuf>,
    sidecar: Option<PathBuf>,
) -> Result<()> {
    let plan = if PLAN_NAMES.contains(&target.as_str()) {
        let b = match basis {
            Some(b) => Some(b.into()),
            None if has_basis_setting(&target) => Some(Basis::X),
            None => None,
        };
        build_plan_with(&target, b, opts)?
    } else if GADGET_NAMES.contains(&target.as_str()) {
        let plans = gadget_plans(&target)?;
        let want = basis.map(Basis::from).unwrap_or(Basis::X);
        plans.into_iter().find(|p| p.basis == Some(want)).context("no harness for that basis")?
    } else {
        bail!("unknown gadget or plan {target:?}; see `tesseract list`");
    };
    write_out(out.as_ref(), &plan.circuit().to_text())?;
    if let Some(path) = sidecar {
        let side = serde_json::json!({
            "name": plan.name,
            "basis": plan.basis,
            "records": plan.program.records,
            "values": plan.program.value_labels,
            "predicates": plan.predicates,
            "decode_steps": plan.program.steps,
        });
        fs::write(&path, serde_json::to_string_pretty(&side)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { target, order, sampled_pairs, seed, out } => cmd_verify(target, order, sampled_pairs, seed, out),
        Command::ExportCircuit { target, basis, flavor, rounds, out, sidecar } => {
            cmd_export(target, basis, options(flavor, rounds), out, sidecar).map(|_| true)
        }
        Command::ExportCode { out } => serde_json::to_string_pretty(&tesseract_core::code::describe())
            .map_err(Into::into)
            .and_then(|s| write_out(out.as_ref(), &s))
            .map(|_| true),
        Command::List => {
            println!("plans:   {}", PLAN_NAMES.join(" "));
            println!("gadgets: {}", GADGET_NAMES.join(" "));
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
