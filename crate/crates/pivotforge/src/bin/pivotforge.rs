//! Batch front end: generate instances, run experiments, audit traces,
//! check the policy-iteration/simplex lockstep, and decompose selector
//! sequences.
//!
//! Exit codes are a stable contract: 0 success, 1 usage error, 2
//! construction or precondition error, 3 audit failure, 4 iteration cap
//! exceeded.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pivotforge::audit::{default_audits, run_audits, summarize, AuditReport};
use pivotforge::gen::decompose::{decompose, Certificate};
use pivotforge::harness::{
    csv_row, generate, load_instance, rule_from_spec, HarnessError, Instance, CSV_HEADER,
};
use pivotforge::reduce::lockstep_check;
use pivotforge::trace::{RunTrace, DEFAULT_CAP};

#[derive(Parser)]
#[command(
    name = "pivotforge",
    version,
    about = "strategy improvement, policy iteration and exact simplex under pluggable pivot rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file for a family.
    Generate(GenerateArgs),
    /// Run one experiment (or a batch config) and emit a summary.
    Run(RunArgs),
    /// Re-check audits against a previously written trace file.
    Audit(AuditArgs),
    /// Differentially run policy iteration against the simplex method.
    Lockstep(LockstepArgs),
    /// Decompose a selector output sequence as clustered or dispersed.
    Decompose(DecomposeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Family name: parity-counter, parity-adversarial, parity-controlled,
    /// parity-delayed, parity-filler, mdp-counter, mdp-copied, mdp-delta,
    /// mdp-gamma.
    #[arg(long)]
    family: String,
    /// Family parameters as a JSON object.
    #[arg(long, default_value = "{}")]
    params: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file written by `generate`.
    #[arg(long, conflicts_with = "config")]
    instance: Option<PathBuf>,
    /// Rule specification in the mini-language.
    #[arg(long)]
    rule: Option<String>,
    /// Batch config: a JSON array of experiment specs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Iteration cap (defaults to 2^40).
    #[arg(long)]
    cap: Option<u64>,
    /// Comma-separated audit names, or "auto" for the family defaults.
    #[arg(long, default_value = "auto")]
    audits: String,
    /// Where to write the JSON trace.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary format on stdout.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Record full exact valuations per trace row (ranks only by default).
    #[arg(long)]
    valuations: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Comma-separated audit names, or "auto".
    #[arg(long, default_value = "auto")]
    audits: String,
}

#[derive(Args)]
struct LockstepArgs {
    /// MDP instance file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    rule: String,
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Comma-separated sequence over 1..=m.
    #[arg(long)]
    seq: String,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    l: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_USAGE: u8 = 1;
const EXIT_CONSTRUCTION: u8 = 2;
const EXIT_AUDIT: u8 = 3;
const EXIT_CAP: u8 = 4;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes; the rest is usage
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let code = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Lockstep(args) => cmd_lockstep(args),
        Command::Decompose(args) => cmd_decompose(args),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Spec(_) | HarnessError::Io(_) | HarnessError::Json(_) => EXIT_USAGE,
        _ => EXIT_CONSTRUCTION,
    }
}

fn parse_json(s: &str, what: &str) -> Result<Value, HarnessError> {
    serde_json::from_str(s).map_err(|e| HarnessError::Spec(format!("bad {what} JSON: {e}")))
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, HarnessError> {
    let params = parse_json(&args.params, "params")?;
    let inst = generate(&args.family, &params)?;
    fs::write(&args.out, serde_json::to_string_pretty(&inst.to_doc())?)?;
    println!(
        "{} -> {} ({} {})",
        args.family,
        args.out.display(),
        inst.size(),
        match inst {
            Instance::Parity(_) => "player-0 edges",
            Instance::Mdp(_) => "actions",
        }
    );
    Ok(ExitCode::SUCCESS)
}

struct ExperimentOutcome {
    row: String,
    capped: bool,
    audits_failed: bool,
}

fn run_one(
    inst: &Instance,
    params: &Value,
    rule_spec: &Value,
    cap: u64,
    audits: &str,
    out: Option<&PathBuf>,
    valuations: bool,
) -> Result<ExperimentOutcome, HarnessError> {
    let rule = rule_from_spec(rule_spec)?;
    let audit_names: Vec<String> = match audits {
        "auto" => default_audits(inst.meta()),
        "" | "none" => Vec::new(),
        list => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    let record_tiers = audit_names.iter().any(|a| a == "agreement");
    let trace =
        pivotforge::harness::run_instance_with(inst, &rule, cap, record_tiers, valuations)?;
    let reports = run_audits(&trace, &audit_names);
    if let Some(path) = out {
        fs::write(path, serde_json::to_string(&trace)?)?;
    }
    Ok(ExperimentOutcome {
        row: csv_row(inst, params, &rule, &trace, &summarize(&reports)),
        capped: !trace.reached_optimum(),
        audits_failed: reports.iter().any(|r| !r.passed),
    })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, HarnessError> {
    let cap = args.cap.unwrap_or(DEFAULT_CAP);
    let mut outcomes = Vec::new();
    if let Some(config) = &args.config {
        let specs: Value = serde_json::from_str(&fs::read_to_string(config)?)?;
        let specs = specs
            .as_array()
            .ok_or_else(|| HarnessError::Spec("config must be a JSON array".into()))?;
        for spec in specs {
            let inst = if let Some(path) = spec.pointer("/instance").and_then(|v| v.as_str()) {
                let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
                load_instance(&doc)?
            } else {
                let family = spec
                    .pointer("/family")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| HarnessError::Spec("spec needs instance or family".into()))?;
                let params = spec.pointer("/params").cloned().unwrap_or_else(|| json!({}));
                generate(family, &params)?
            };
            let rule_spec = spec
                .pointer("/rule")
                .cloned()
                .ok_or_else(|| HarnessError::Spec("spec needs a rule".into()))?;
            let cap = spec.pointer("/cap").and_then(|v| v.as_u64()).unwrap_or(cap);
            let audits = spec
                .pointer("/audits")
                .and_then(|v| v.as_str())
                .unwrap_or(&args.audits)
                .to_string();
            let out = spec
                .pointer("/out")
                .and_then(|v| v.as_str())
                .map(PathBuf::from);
            let params = spec.pointer("/params").cloned().unwrap_or_else(|| json!({}));
            outcomes.push(run_one(&inst, &params, &rule_spec, cap, &audits, out.as_ref(), args.valuations)?);
        }
    } else {
        let instance = args
            .instance
            .as_ref()
            .ok_or_else(|| HarnessError::Spec("run needs --instance or --config".into()))?;
        let rule_spec = parse_json(
            args.rule
                .as_deref()
                .ok_or_else(|| HarnessError::Spec("run needs --rule".into()))?,
            "rule",
        )?;
        let doc: Value = serde_json::from_str(&fs::read_to_string(instance)?)?;
        let inst = load_instance(&doc)?;
        let params = json!({"instance": instance.display().to_string()});
        outcomes.push(run_one(&inst, &params, &rule_spec, cap, &args.audits, args.out.as_ref(), args.valuations)?);
    }

    match args.format.as_str() {
        "csv" => {
            println!("{CSV_HEADER}");
            for o in &outcomes {
                println!("{}", o.row);
            }
        }
        "json" => {
            let rows: Vec<&str> = outcomes.iter().map(|o| o.row.as_str()).collect();
            println!("{}", serde_json::to_string_pretty(&json!({ "rows": rows }))?);
        }
        other => return Err(HarnessError::Spec(format!("unknown format {other}"))),
    }
    if outcomes.iter().any(|o| o.capped) {
        return Ok(ExitCode::from(EXIT_CAP));
    }
    if outcomes.iter().any(|o| o.audits_failed) {
        return Ok(ExitCode::from(EXIT_AUDIT));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode, HarnessError> {
    let trace: RunTrace = serde_json::from_str(&fs::read_to_string(&args.trace)?)?;
    let names: Vec<String> = match args.audits.as_str() {
        "auto" => trace
            .instance_meta
            .as_ref()
            .and_then(|d| d.pointer("/metadata"))
            .map(default_audits)
            .unwrap_or_default(),
        list => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    if names.is_empty() {
        return Err(HarnessError::Spec("no audits to run".into()));
    }
    let reports: Vec<AuditReport> = run_audits(&trace, &names);
    for r in &reports {
        let state = if r.passed { "pass" } else { "fail" };
        let at = r
            .first_failure
            .map(|i| format!(" at iteration {i}"))
            .unwrap_or_default();
        println!("{}: {state}{at} ({})", r.name, r.detail);
    }
    if reports.iter().any(|r| !r.passed) {
        Ok(ExitCode::from(EXIT_AUDIT))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_lockstep(args: LockstepArgs) -> Result<ExitCode, HarnessError> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(&args.instance)?)?;
    let inst = load_instance(&doc)?;
    let Instance::Mdp(mi) = inst else {
        return Err(HarnessError::Spec("lockstep needs an MDP instance".into()));
    };
    let rule = rule_from_spec(&parse_json(&args.rule, "rule")?)?;
    let report = lockstep_check(&mi.mdp, &rule, &mi.initial, args.cap.unwrap_or(DEFAULT_CAP))
        .map_err(|e| HarnessError::Spec(format!("lockstep failed to run: {e}")))?;
    let rendered = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &args.out {
        fs::write(out, &rendered)?;
    }
    println!("{rendered}");
    if report.holds {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_AUDIT))
    }
}

fn cmd_decompose(args: DecomposeArgs) -> Result<ExitCode, HarnessError> {
    let seq: Vec<u64> = args
        .seq
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| HarnessError::Spec(format!("bad sequence entry {s}")))
        })
        .collect::<Result<_, _>>()?;
    let cert = decompose(&seq, args.m, args.l).map_err(HarnessError::Gen)?;
    let case = match &cert {
        Certificate::Clustered(_) => "clustered",
        Certificate::Dispersed(_) => "dispersed",
    };
    let doc = json!({"case": case, "certificate": cert, "seq": seq, "m": args.m, "l": args.l});
    let rendered = serde_json::to_string_pretty(&doc)?;
    if let Some(out) = &args.out {
        fs::write(out, &rendered)?;
    }
    println!("{rendered}");
    Ok(ExitCode::SUCCESS)
}
