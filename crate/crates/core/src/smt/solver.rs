//! External solver process driver.
//!
//! Each check spawns one solver process, feeds the script on standard input
//! and talks to it interactively: `(check-sat)`, then `get-value` queries
//! when the answer is `sat`. A reader thread forwards stdout so that the
//! deadline can be enforced with a channel timeout; on expiry the process is
//! killed and the verdict is `Unknown("timeout")`.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::lower::LoweredScript;
use super::model::{counter_model, CounterModel, Model};
use super::sexp::{parse_prefix, Sexp, SexpError};

pub const SOLVER_ENV: &str = "RELVC_SOLVER";
pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverVerdict {
    Valid,
    Invalid(CounterModel),
    Unknown(String),
}

impl SolverVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, SolverVerdict::Valid)
    }

    pub fn status(&self) -> &'static str {
        match self {
            SolverVerdict::Valid => "valid",
            SolverVerdict::Invalid(_) => "invalid",
            SolverVerdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver command is empty")]
    EmptyCommand,
    #[error("solver `{0}` not found")]
    NotFound(String),
    #[error("could not start solver `{cmd}`: {msg}")]
    Spawn { cmd: String, msg: String },
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver exited with status {code:?}: {stderr}")]
    NonZeroExit { code: Option<i32>, stderr: String },
}

/// How to invoke the solver: a program followed by its arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverConfig {
    /// Splits a command line on whitespace.
    pub fn from_command(cmd: &str) -> Result<Self, SolverError> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or(SolverError::EmptyCommand)?;
        Ok(SolverConfig {
            program,
            args: parts.collect(),
        })
    }

    /// The explicit command if given, else `$RELVC_SOLVER`, else Z3.
    pub fn resolve(explicit: Option<&str>) -> Result<Self, SolverError> {
        match explicit {
            Some(c) => Self::from_command(c),
            None => match std::env::var(SOLVER_ENV) {
                Ok(c) if !c.trim().is_empty() => Self::from_command(&c),
                _ => Self::from_command(DEFAULT_SOLVER),
            },
        }
    }

    pub fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::from_command(DEFAULT_SOLVER).expect("default command is non-empty")
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    buf: String,
    deadline: Instant,
    cmd: String,
}

enum Reply {
    Expr(Sexp),
    Timeout,
}

impl Session {
    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        // A write failure means the solver died; the exit status is more
        // informative, so it is reported when the reply is read.
        let _ = self.stdin.write_all(text.as_bytes());
        let _ = self.stdin.flush();
        Ok(())
    }

    fn read(&mut self) -> Result<Reply, SolverError> {
        loop {
            match parse_prefix(&self.buf) {
                Ok((e, used)) => {
                    self.buf.drain(..used);
                    if let Some(items) = e.as_list() {
                        if items.first().and_then(Sexp::as_atom) == Some("error") {
                            return Err(SolverError::Protocol(e.to_string()));
                        }
                    }
                    return Ok(Reply::Expr(e));
                }
                Err(SexpError::Incomplete) => {}
                Err(e) => return Err(SolverError::Protocol(e.to_string())),
            }
            let left = self.deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    self.buf.push_str(&line);
                    self.buf.push('\n');
                }
                Err(RecvTimeoutError::Timeout) => return Ok(Reply::Timeout),
                Err(RecvTimeoutError::Disconnected) => return Err(self.exit_error()),
            }
        }
    }

    fn exit_error(&mut self) -> SolverError {
        let status = self.child.wait();
        let mut stderr = String::new();
        if let Some(mut e) = self.child.stderr.take() {
            let _ = e.read_to_string(&mut stderr);
        }
        match status {
            Ok(s) if !s.success() => SolverError::NonZeroExit {
                code: s.code(),
                stderr: stderr.trim().to_string(),
            },
            _ => SolverError::Protocol(format!(
                "`{}` closed its output before answering{}",
                self.cmd,
                if stderr.is_empty() { String::new() } else { format!(": {}", stderr.trim()) }
            )),
        }
    }

    fn finish(mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn spawn(cfg: &SolverConfig, deadline: Instant) -> Result<Session, SolverError> {
    let mut child = Command::new(&cfg.program)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => SolverError::NotFound(cfg.program.clone()),
            _ => SolverError::Spawn {
                cmd: cfg.command_line(),
                msg: e.to_string(),
            },
        })?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    Ok(Session {
        child,
        stdin,
        lines: rx,
        buf: String::new(),
        deadline,
        cmd: cfg.command_line(),
    })
}

/// Discharges one lowered goal.
pub fn check(script: &LoweredScript, cfg: &SolverConfig, timeout: Duration) -> Result<SolverVerdict, SolverError> {
    let deadline = Instant::now() + timeout;
    let mut session = spawn(cfg, deadline)?;
    if timeout.is_zero() {
        session.kill();
        return Ok(SolverVerdict::Unknown("timeout".into()));
    }
    session.send("(set-option :print-success false)\n")?;
    session.send(&script.body())?;
    session.send("(check-sat)\n")?;
    let answer = match session.read() {
        Ok(Reply::Expr(e)) => e,
        Ok(Reply::Timeout) => {
            session.kill();
            return Ok(SolverVerdict::Unknown("timeout".into()));
        }
        Err(e) => {
            session.kill();
            return Err(e);
        }
    };
    let verdict = match answer.as_atom() {
        Some("unsat") => SolverVerdict::Valid,
        Some("sat") => match read_model(&mut session, script) {
            Ok(Some(m)) => SolverVerdict::Invalid(m),
            Ok(None) => {
                session.kill();
                return Ok(SolverVerdict::Unknown("timeout".into()));
            }
            Err(e) => {
                session.kill();
                return Err(e);
            }
        },
        Some("unknown") => {
            session.send("(get-info :reason-unknown)\n")?;
            let reason = match session.read() {
                Ok(Reply::Expr(e)) => reason_text(&e),
                _ => "unknown".to_string(),
            };
            SolverVerdict::Unknown(reason)
        }
        Some("timeout") => SolverVerdict::Unknown("timeout".into()),
        _ => {
            session.kill();
            return Err(SolverError::Protocol(format!("unexpected answer `{answer}`")));
        }
    };
    session.finish();
    Ok(verdict)
}

fn reason_text(e: &Sexp) -> String {
    let text = match e.as_list() {
        Some([_, r]) => r.to_string(),
        _ => e.to_string(),
    };
    let text = text.trim_matches('"').trim().to_string();
    if text.is_empty() {
        "unknown".into()
    } else {
        text
    }
}

// Ok(None) on timeout.
fn read_model(session: &mut Session, script: &LoweredScript) -> Result<Option<CounterModel>, SolverError> {
    let mut model = Model::new();
    let consts: Vec<Sexp> = script
        .states
        .iter()
        .chain(&script.ints)
        .map(|g| Sexp::sym(&g.symbol))
        .collect();
    for query in [consts, script.call_instances.clone()] {
        if query.is_empty() {
            continue;
        }
        session.send(&format!("{}\n", Sexp::app("get-value", [Sexp::List(query)])))?;
        match session.read()? {
            Reply::Expr(e) => model
                .absorb(&e)
                .map_err(|err| SolverError::Protocol(err.to_string()))?,
            Reply::Timeout => return Ok(None),
        }
    }
    Ok(Some(counter_model(script, &model)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_parsing() {
        let c = SolverConfig::from_command("  cvc5 --lang smt2 --incremental ").unwrap();
        assert_eq!(c.program, "cvc5");
        assert_eq!(c.args, ["--lang", "smt2", "--incremental"]);
        assert_eq!(SolverConfig::from_command(" "), Err(SolverError::EmptyCommand));
        assert_eq!(SolverConfig::resolve(Some("z3 -in")).unwrap().command_line(), "z3 -in");
    }

    #[test]
    fn reasons() {
        let e = parse_prefix("(:reason-unknown \"incomplete quantifiers\")").unwrap().0;
        assert_eq!(reason_text(&e), "incomplete quantifiers");
        let e = parse_prefix("(:reason-unknown \"\")").unwrap().0;
        assert_eq!(reason_text(&e), "unknown");
    }
}
