//! External SMT solver process.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat,
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("solver unavailable: {0}")]
pub struct SolverUnavailable(pub String);

/// Run `argv` with `script` on stdin; the first token of stdout decides.
/// The process is killed once `timeout` passes.
pub fn run_solver(argv: &[String], script: &str, timeout: Duration) -> Result<SolverAnswer, SolverUnavailable> {
    let (prog, args) = argv.split_first().ok_or_else(|| SolverUnavailable("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SolverUnavailable(format!("{prog}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let text = script.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(text.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(st)) => break Some(st),
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(SolverUnavailable(e.to_string())),
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    if status.is_none() {
        return Ok(SolverAnswer::Unknown(format!("solver timeout after {} ms", timeout.as_millis())));
    }
    Ok(match out.split_whitespace().next() {
        Some("sat") => SolverAnswer::Sat,
        Some("unsat") => SolverAnswer::Unsat,
        Some("unknown") => SolverAnswer::Unknown("solver answered unknown".into()),
        _ => {
            let first = out.lines().next().unwrap_or("").trim();
            SolverAnswer::Unknown(format!("unexpected solver output: {first}"))
        }
    })
}
