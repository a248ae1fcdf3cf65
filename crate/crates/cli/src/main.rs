use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use cypher_equiv::decide::DecideConfig;
use cypher_equiv::oracle::OracleConfig;
use cypher_equiv::pairfile::PairFile;
use cypher_equiv_cli::{cmd_check, cmd_mutate, cmd_oracle, CheckOptions, CliError};

#[derive(Parser)]
#[command(name = "cypher-equiv", version, about = "Prove or refute equivalence of Cypher query pairs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide every pair of a pair file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Directory for emitted SMT scripts.
        #[arg(long)]
        dump_smt: Option<PathBuf>,
        /// Directory for witness graphs of refuted pairs.
        #[arg(long)]
        witness_dir: Option<PathBuf>,
        /// Print normalization traces to stderr.
        #[arg(long)]
        verbose_normalize: bool,
        /// Worker threads; defaults to the number of processors.
        #[arg(long)]
        workers: Option<usize>,
        /// Write line-delimited JSON records here ("-" for stdout).
        #[arg(long)]
        records: Option<String>,
    },
    /// Turn equivalent pairs into oracle-verified non-equivalent ones.
    Mutate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Output pair file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare two queries on enumerated graphs.
    Oracle {
        q1: String,
        q2: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Solver command line; the script is passed on stdin.
    #[arg(long, default_value = "z3 -in -smt2")]
    solver: String,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Oracle bound as max nodes,max relationships.
    #[arg(long, default_value = "3,3", value_parser = parse_bound)]
    oracle_bound: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_bound(s: &str) -> Result<(usize, usize), String> {
    let (n, r) = s.split_once(',').ok_or("expected n,r")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(n)?, p(r)?))
}

impl Common {
    fn oracle(&self) -> OracleConfig {
        OracleConfig {
            max_nodes: self.oracle_bound.0,
            max_rels: self.oracle_bound.1,
            seed: self.seed,
            ..OracleConfig::default()
        }
    }

    fn decide(&self) -> DecideConfig {
        DecideConfig {
            solver: self.solver.split_whitespace().map(String::from).collect(),
            timeout: Duration::from_millis(self.timeout_ms),
            oracle: self.oracle(),
            ..DecideConfig::default()
        }
    }
}

fn read_pairs(path: &PathBuf) -> Result<PairFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(PairFile::parse(&text)?)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Check { file, common, dump_smt, witness_dir, verbose_normalize, workers, records } => {
            let pairs = read_pairs(&file)?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let opts = CheckOptions { decide: common.decide(), workers, dump_smt, witness_dir, verbose_normalize };
            let report = cmd_check(&pairs, &opts)?;
            print!("{}", report.table());
            match records.as_deref() {
                Some("-") => print!("{}", report.records()),
                Some(p) => fs::write(p, report.records()).map_err(|e| CliError::io(p.as_ref(), e))?,
                None => {}
            }
            Ok(report.exit_code() as u8)
        }
        Cmd::Mutate { file, common, output } => {
            let pairs = read_pairs(&file)?;
            let report = cmd_mutate(&pairs, common.seed, &common.decide());
            for (id, why) in &report.skipped {
                eprintln!("skipped {id}: {why}");
            }
            let text = report.file.to_string();
            match output {
                Some(p) => fs::write(&p, text).map_err(|e| CliError::io(&p, e))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Cmd::Oracle { q1, q2, common } => match cmd_oracle(&q1, &q2, &common.oracle()) {
            Ok(r) => {
                print!("{}", r.text);
                Ok(if r.counterexample { 2 } else { 0 })
            }
            Err(e) => {
                eprintln!("error: {e}");
                Ok(2)
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
