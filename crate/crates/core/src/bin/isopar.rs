//! `isopar`: build Clifford systems, classify focal submanifolds, dump witnesses.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use isopar::classify::{
    case_witness, default_cases, render, run_table, to_json, CaseSpec, ReportFormat, RunConfig,
};
use isopar::{build_clifford_system, verify_clifford_system, CliffordFamily, Error};

#[derive(Parser, Debug)]
#[command(name = "isopar", version, about = "Curvature classification of isoparametric focal submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a Clifford system and check its relations.
    VerifyClifford {
        #[arg(short, long)]
        m: usize,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value = "standard")]
        family: CliffordFamily,
        #[arg(long, default_value_t = isopar::clifford::DEFAULT_VERIFY_TOL)]
        tol: f64,
    },
    /// Run the verdict table.
    Classify(ClassifyArgs),
    /// Print the hard-coded witness of one case.
    Witness {
        #[arg(long)]
        case: CaseSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// `otfkm:M1:4:2[:family]` or `homog:<id>`; repeatable.
    #[arg(long = "case")]
    cases: Vec<CaseSpec>,
    /// Every case of the default table (the default when no `--case` is given).
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random points per case.
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    directions: usize,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    witness_tol: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

fn classify(args: ClassifyArgs) -> Result<ExitCode, Error> {
    let cases = if args.all || args.cases.is_empty() {
        let mut c = default_cases();
        c.extend(args.cases.iter().copied().filter(|s| !c.contains(s)).collect::<Vec<_>>());
        c
    } else {
        args.cases
    };
    let cfg = RunConfig {
        seed: args.seed,
        points: args.samples,
        directions: args.directions,
        pairs: args.pairs,
        tol: args.tol,
        witness_tol: args.witness_tol,
        threads: args.threads,
        ..RunConfig::default()
    };
    info!("classifying {} cases", cases.len());
    let table = run_table(&cases, &cfg)?;
    let text = render(&table, args.format)?;
    match &args.out {
        Some(path) => std::fs::write(path, &text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => println!("{text}"),
    }
    if let Some((case, e)) = table.errors().first() {
        error!("{case}: {e}");
        return Ok(ExitCode::from(1));
    }
    let mismatches = table.mismatches();
    for r in &mismatches {
        eprintln!(
            "mismatch {}: A {} B {} parallel {} Einstein {} (expected {:?})",
            r.case, r.is_a, r.is_b, r.is_ricci_parallel, r.is_einstein, r.expected
        );
    }
    for v in table.consistency_violations() {
        eprintln!("{v}");
    }
    Ok(if table.all_match() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::VerifyClifford { m, k, family, tol } => {
            let sys = build_clifford_system(m, k, family)?;
            let v = verify_clifford_system(&sys, tol);
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "m": m, "k": k, "l": sys.l, "family": family, "verification": v,
                }))?
            );
            Ok(if v.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Classify(args) => classify(args),
        Command::Witness { case, seed } => {
            let cfg = RunConfig {
                seed,
                ..RunConfig::default()
            };
            match case_witness(&case, &cfg)? {
                Some(w) => println!("{}", to_json(&w)?),
                None => println!("null"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors count as execution errors; 2 is reserved for verdict mismatches
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
