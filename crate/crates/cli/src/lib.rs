//! Commands behind the `cypher-equiv` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use cypher_equiv::decide::{decide, DecideConfig, DecideError, Outcome, Verdict};
use cypher_equiv::frontend::parse_checked;
use cypher_equiv::mutate::{mutate_pairs, MutateReport};
use cypher_equiv::normalize::normalize;
use cypher_equiv::oracle::{differential_check, DiffOutcome};
use cypher_equiv::pairfile::{Expect, PairFile};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Verdict contradicts the expectation.
    HardFailure,
    /// Unknown on a pair expected equivalent.
    SoftMiss,
}

#[derive(Debug, Clone)]
pub struct PairResult {
    pub id: String,
    pub expect: Expect,
    pub verdict: Verdict,
    pub status: Status,
    pub witness_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub equivalent: usize,
    pub not_equivalent: usize,
    pub unknown: usize,
    pub hard_failures: usize,
    pub soft_misses: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p90_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub per_pair: Vec<PairResult>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub decide: DecideConfig,
    pub workers: usize,
    /// Write each pair's SMT scripts here.
    pub dump_smt: Option<PathBuf>,
    /// Write witness graphs of NotEquivalent verdicts here.
    pub witness_dir: Option<PathBuf>,
    /// Print normalization traces to stderr.
    pub verbose_normalize: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    PairFile(#[from] cypher_equiv::pairfile::PairFileError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io { path: path.display().to_string(), source }
    }
}

pub fn status_of(expect: Expect, outcome: Outcome) -> Status {
    match (expect, outcome) {
        (Expect::NonEquivalent, Outcome::Equivalent) | (Expect::Equivalent, Outcome::NotEquivalent) => {
            Status::HardFailure
        }
        (Expect::Equivalent, Outcome::Unknown) => Status::SoftMiss,
        _ => Status::Ok,
    }
}

/// Decide every pair on a pool of `opts.workers` threads.
pub fn cmd_check(pairs: &PairFile, opts: &CheckOptions) -> Result<RunReport, CliError> {
    let mut cfg = opts.decide.clone();
    cfg.keep_scripts |= opts.dump_smt.is_some();
    for d in [&opts.dump_smt, &opts.witness_dir].into_iter().flatten() {
        fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }
    let n = pairs.entries.len();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Verdict, DecideError>>>> = Mutex::new(vec![None; n]);
    let workers = opts.workers.max(1).min(n.max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(e) = pairs.entries.get(i) else { break };
                if opts.verbose_normalize {
                    eprint!("{}", normalize_trace(&e.id, &e.q1, &e.q2));
                }
                let v = decide(&e.q1, &e.q2, &cfg);
                slots.lock().unwrap()[i] = Some(v);
            });
        }
    });
    let mut per_pair = Vec::with_capacity(n);
    for (e, slot) in pairs.entries.iter().zip(slots.into_inner().unwrap()) {
        let verdict = slot.expect("every pair decided")?;
        if let Some(d) = &opts.dump_smt {
            for (k, s) in verdict.scripts.iter().enumerate() {
                let p = d.join(format!("{}.{k}.smt2", file_stem(&e.id)));
                fs::write(&p, s).map_err(|err| CliError::io(&p, err))?;
            }
        }
        let mut witness_path = None;
        if let (Some(d), Some(w)) = (&opts.witness_dir, &verdict.witness) {
            let p = d.join(format!("{}.graph", file_stem(&e.id)));
            fs::write(&p, w.graph.to_string()).map_err(|err| CliError::io(&p, err))?;
            witness_path = Some(p);
        }
        let status = status_of(e.expect, verdict.outcome);
        per_pair.push(PairResult { id: e.id.clone(), expect: e.expect, verdict, status, witness_path });
    }
    let summary = summarize(&per_pair);
    Ok(RunReport { per_pair, summary })
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn normalize_trace(id: &str, q1: &str, q2: &str) -> String {
    let mut out = String::new();
    for (k, q) in [q1, q2].iter().enumerate() {
        match parse_checked(q).map(|a| normalize(&a)) {
            Ok(Ok(n)) => {
                for t in &n.trace {
                    let _ = writeln!(out, "{id} q{}: {t}", k + 1);
                }
                let _ = writeln!(out, "{id} q{}: {}", k + 1, cypher_equiv::frontend::print(&n.ast));
            }
            Ok(Err(e)) => {
                let _ = writeln!(out, "{id} q{}: {e}", k + 1);
            }
            Err(e) => {
                let _ = writeln!(out, "{id} q{}: {e}", k + 1);
            }
        }
    }
    out
}

fn summarize(rs: &[PairResult]) -> Summary {
    let mut s = Summary::default();
    for r in rs {
        match r.verdict.outcome {
            Outcome::Equivalent => s.equivalent += 1,
            Outcome::NotEquivalent => s.not_equivalent += 1,
            Outcome::Unknown => s.unknown += 1,
        }
        match r.status {
            Status::HardFailure => s.hard_failures += 1,
            Status::SoftMiss => s.soft_misses += 1,
            Status::Ok => {}
        }
    }
    let mut lat: Vec<f64> = rs.iter().map(|r| r.verdict.latency_ms as f64).collect();
    if !lat.is_empty() {
        lat.sort_by(f64::total_cmp);
        s.mean_ms = lat.iter().sum::<f64>() / lat.len() as f64;
        s.median_ms = percentile(&lat, 0.5);
        s.p90_ms = percentile(&lat, 0.9);
    }
    s
}

/// Nearest-rank percentile of sorted data; the median averages the two
/// middle values.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if p == 0.5 && n.is_multiple_of(2) {
        return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    }
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

impl RunReport {
    pub fn table(&self) -> String {
        let w = self.per_pair.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
        let mut out = String::new();
        let _ = writeln!(out, "{:<w$}  {:<13}  {:<13}  {:>8}  note", "id", "expected", "verdict", "ms");
        for r in &self.per_pair {
            let mark = match r.status {
                Status::Ok => "",
                Status::HardFailure => "FAIL ",
                Status::SoftMiss => "miss ",
            };
            let _ = writeln!(
                out,
                "{:<w$}  {:<13}  {:<13}  {:>8}  {mark}{}",
                r.id,
                r.expect.name(),
                r.verdict.outcome.to_string(),
                r.verdict.latency_ms,
                r.verdict.reason.as_deref().unwrap_or("")
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "\n{} pairs: {} equivalent, {} not equivalent, {} unknown; {} hard failures, {} soft misses",
            self.per_pair.len(),
            s.equivalent,
            s.not_equivalent,
            s.unknown,
            s.hard_failures,
            s.soft_misses
        );
        let _ = writeln!(out, "latency ms: mean {:.1}, median {:.1}, p90 {:.1}", s.mean_ms, s.median_ms, s.p90_ms);
        out
    }

    /// One JSON object per line, one line per pair.
    pub fn records(&self) -> String {
        let mut out = String::new();
        for r in &self.per_pair {
            let v = json!({
                "id": r.id,
                "outcome": r.verdict.outcome.to_string(),
                "latencyMs": r.verdict.latency_ms,
                "expected": r.expect.name(),
                "reason": r.verdict.reason,
                "segments": r.verdict.segments,
                "witnessPath": r.witness_path.as_ref().map(|p| p.display().to_string()),
            });
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.hard_failures > 0 {
            2
        } else {
            0
        }
    }
}

pub fn cmd_mutate(pairs: &PairFile, seed: u64, cfg: &DecideConfig) -> MutateReport {
    mutate_pairs(pairs, seed, cfg)
}

pub struct OracleReport {
    pub text: String,
    pub counterexample: bool,
}

pub fn cmd_oracle(q1: &str, q2: &str, cfg: &cypher_equiv::oracle::OracleConfig) -> Result<OracleReport, String> {
    let a = parse_checked(q1).map_err(|e| format!("q1: {e}"))?;
    let b = parse_checked(q2).map_err(|e| format!("q2: {e}"))?;
    match differential_check(&a, &b, cfg).map_err(|e| e.to_string())? {
        DiffOutcome::AgreesUpToBound { graphs } => {
            Ok(OracleReport { text: format!("AgreesUpToBound ({graphs} graphs)\n"), counterexample: false })
        }
        DiffOutcome::Counterexample { graph, left, right } => Ok(OracleReport {
            text: format!("Counterexample\n{graph}-- q1 rows\n{left}-- q2 rows\n{right}"),
            counterexample: true,
        }),
    }
}
