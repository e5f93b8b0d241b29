//! `relvc`: checks annotated programs and their relational properties.
//!
//! Exit codes: 0 when every goal is valid (or every oracle check holds),
//! 1 when some goal is invalid or unknown, 2 on parse errors, unknown labels
//! and bad arguments, 3 when the solver could not be run. Code 3 wins over 1.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rayon::prelude::*;

use relvc_core::ast::{Com, MemState};
use relvc_core::interp::{exec, Outcome};
use relvc_core::oracle::{check_hoare, check_rel, Bounds};
use relvc_core::parser::{parse, parse_com, GoalSetError, ProgramFile};
use relvc_core::smt::{check, lower, SolverConfig, SolverError};
use relvc_core::vcgen::Goal;

use report::{GoalResult, OracleResult, Status};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

/// Largest number of initial states the oracle will enumerate per run.
const ORACLE_LIMIT: u64 = 1_000_000;

#[derive(Parser)]
#[command(name = "relvc", version, about = "Modular verification of functional and relational properties")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check procedure contracts and single-run properties.
    Check {
        file: PathBuf,
        /// Only this single-run property (procedure contracts are always checked).
        #[arg(long)]
        property: Option<String>,
        #[command(flatten)]
        solve: SolveOpts,
    },
    /// Check relational properties modularly, using relational contracts.
    Rcheck {
        file: PathBuf,
        #[arg(long)]
        property: Option<String>,
        #[command(flatten)]
        solve: SolveOpts,
    },
    /// Run a procedure or a command on a concrete state.
    Run {
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "command", required_unless_present = "command")]
        proc: Option<String>,
        /// Command text, e.g. "x1 := 2; x2 := x1 + 1".
        #[arg(long)]
        command: Option<String>,
        /// Initial state, e.g. x1=1,x2=3; unlisted locations are 0.
        #[arg(long, default_value = "")]
        state: String,
        #[arg(long, default_value_t = 10_000)]
        fuel: u64,
    },
    /// Print the verification conditions.
    DumpVc {
        file: PathBuf,
        #[arg(long)]
        property: Option<String>,
        #[arg(long, value_enum, default_value_t = DumpFormat::Debug)]
        format: DumpFormat,
    },
    /// Check properties by exhaustive enumeration of small states.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        property: Option<String>,
        /// Locations x0..x{N-1} are enumerated.
        #[arg(long, default_value_t = 4)]
        max_addr: u64,
        #[arg(long, default_value_t = 3)]
        max_val: u64,
        #[arg(long, default_value_t = 64)]
        fuel: u64,
        #[arg(long, value_enum, default_value_t = OutFormat::Text)]
        format: OutFormat,
    },
}

#[derive(Args)]
struct SolveOpts {
    /// Solver command line; defaults to $RELVC_SOLVER, then "z3 -in -smt2".
    #[arg(long)]
    solver: Option<String>,
    /// Per-goal timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,
    /// Goals discharged in parallel; defaults to the number of processors.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// Write each goal's SMT-LIB script here.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpFormat {
    Smtlib,
    Debug,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Check { file, property, solve } => {
            with_file(&file, |f| f.hoare_goals(property.as_deref())).map(|goals| discharge_all(goals, &solve))
        }
        Cmd::Rcheck { file, property, solve } => {
            with_file(&file, |f| f.rel_goals(property.as_deref())).map(|goals| discharge_all(goals, &solve))
        }
        Cmd::Run {
            file,
            proc,
            command,
            state,
            fuel,
        } => run(file.as_deref(), proc, command, &state, fuel),
        Cmd::DumpVc { file, property, format } => {
            with_file(&file, |f| all_goals(f, property.as_deref())).map(|goals| dump(&goals, format))
        }
        Cmd::Oracle {
            file,
            property,
            max_addr,
            max_val,
            fuel,
            format,
        } => oracle(
            &file,
            property.as_deref(),
            Bounds {
                max_addr,
                max_val,
                fuel,
            },
            format,
        ),
    };
    ExitCode::from(code.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        EXIT_INPUT
    }))
}

fn load(path: &Path) -> Result<ProgramFile, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&src).map_err(|e| format!("{}:{e}", path.display()))
}

fn with_file<T>(path: &Path, f: impl FnOnce(&ProgramFile) -> Result<T, GoalSetError>) -> Result<T, String> {
    let file = load(path)?;
    f(&file).map_err(|e| e.to_string())
}

/// Hoare goals for single-run properties, relational goals for the others.
fn all_goals(f: &ProgramFile, label: Option<&str>) -> Result<Vec<Goal>, GoalSetError> {
    match label {
        Some(l) => match f.property(l) {
            Some(p) if p.commands.len() == 1 => f.hoare_goals(Some(l)),
            Some(_) => f.rel_goals(Some(l)),
            None => Err(GoalSetError::UnknownProperty(l.to_string())),
        },
        None => {
            let mut goals = f.hoare_goals(None)?;
            for p in f.properties.iter().filter(|p| p.commands.len() > 1) {
                goals.extend(f.rel_goals(Some(&p.label))?);
            }
            Ok(goals)
        }
    }
}

fn dump(goals: &[Goal], format: DumpFormat) -> u8 {
    for g in goals {
        match format {
            DumpFormat::Smtlib => println!("{}", lower(g).to_smtlib()),
            DumpFormat::Debug => {
                println!("goal {}", g.label);
                for h in &g.hypotheses {
                    println!("  hyp    {h}");
                }
                println!("  concl  {}", g.conclusion);
                println!();
            }
        }
    }
    EXIT_OK
}

fn file_name(label: &str) -> String {
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect();
    format!("{safe}.smt2")
}

fn discharge_all(goals: Vec<Goal>, opts: &SolveOpts) -> u8 {
    let cfg = match SolverConfig::resolve(opts.solver.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    if !opts.timeout.is_finite() || opts.timeout < 0.0 {
        eprintln!("error: timeout must be a non-negative number of seconds");
        return EXIT_INPUT;
    }
    let timeout = Duration::from_secs_f64(opts.timeout);
    if let Some(dir) = &opts.dump_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: {}: {e}", dir.display());
            return EXIT_INPUT;
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut results: Vec<(GoalResult, Option<SolverError>)> = pool.install(|| {
        goals
            .par_iter()
            .map(|g| {
                let script = lower(g);
                if let Some(dir) = &opts.dump_dir {
                    let path = dir.join(file_name(&g.label));
                    if let Err(e) = std::fs::write(&path, script.to_smtlib()) {
                        eprintln!("warning: {}: {e}", path.display());
                    }
                }
                let start = Instant::now();
                let verdict = check(&script, &cfg, timeout);
                let elapsed = start.elapsed();
                match verdict {
                    Ok(v) => (GoalResult::from_verdict(&g.label, &v, elapsed), None),
                    Err(e) => (GoalResult::from_error(&g.label, &e, elapsed), Some(e)),
                }
            })
            .collect()
    });
    results.sort_by(|a, b| a.0.goal.cmp(&b.0.goal));
    let infra = results.iter().any(|(_, e)| e.is_some());
    let rows: Vec<GoalResult> = results.into_iter().map(|(r, _)| r).collect();
    match opts.format {
        OutFormat::Text => report::print_text(&rows),
        OutFormat::Json => report::print_json(&rows),
    }
    exit_code(rows.iter().map(|r| r.status), infra)
}

/// Total function of the verdict multiset.
fn exit_code(statuses: impl Iterator<Item = Status>, infra_error: bool) -> u8 {
    if infra_error {
        return EXIT_SOLVER;
    }
    let mut code = EXIT_OK;
    for s in statuses {
        if s != Status::Valid {
            code = EXIT_FAILED;
        }
    }
    code
}

/// The state and the locations it names, including ones bound to 0.
fn parse_state(text: &str) -> Result<(MemState, Vec<BigUint>), String> {
    let mut s = MemState::new();
    let mut named = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (loc, val) = part
            .split_once('=')
            .ok_or_else(|| format!("bad state binding `{part}`, expected xN=V"))?;
        let addr = relvc_core::ast::addr_of(loc.trim()).map_err(|e| e.to_string())?;
        let val: BigUint = val.trim().parse().map_err(|_| format!("bad value in `{part}`"))?;
        s.store(addr.into(), val);
        named.push(addr.into());
    }
    Ok((s, named))
}

fn run(file: Option<&Path>, proc: Option<String>, command: Option<String>, state: &str, fuel: u64) -> Result<u8, String> {
    let program = match file {
        Some(p) => load(p)?,
        None => ProgramFile::default(),
    };
    let procs = program.proc_env();
    let c = match (proc, command) {
        (Some(y), _) => {
            if !procs.contains(&y) {
                return Err(format!("unknown procedure `{y}`"));
            }
            Com::Call(y)
        }
        (None, Some(text)) => parse_com(&text).map_err(|e| format!("command:{e}"))?,
        (None, None) => return Err("one of --proc or --command is required".into()),
    };
    let (init, named) = parse_state(state)?;
    match exec(&c, &init, &procs, fuel) {
        Ok(Outcome::Final(s)) => {
            // Show every location that was given or is now non-zero.
            let mut addrs: Vec<&BigUint> = named.iter().chain(s.bindings().map(|(a, _)| a)).collect();
            addrs.sort();
            addrs.dedup();
            let cells: Vec<String> = addrs.iter().map(|a| format!("x{a}={}", s.get(a))).collect();
            println!("{}", if cells.is_empty() { "(all zero)".to_string() } else { cells.join(" ") });
            Ok(EXIT_OK)
        }
        Ok(Outcome::OutOfFuel) => {
            println!("out of fuel after {fuel} steps");
            Ok(EXIT_FAILED)
        }
        Err(e) => Err(format!("unknown procedure `{}`", e.0)),
    }
}

fn oracle(path: &Path, label: Option<&str>, bounds: Bounds, format: OutFormat) -> Result<u8, String> {
    match bounds.state_count() {
        Some(n) if n <= ORACLE_LIMIT => {}
        _ => {
            return Err(format!(
                "(max_val+1)^max_addr exceeds {ORACLE_LIMIT}; lower --max-val or --max-addr"
            ))
        }
    }
    let file = load(path)?;
    let props: Vec<_> = match label {
        Some(l) => vec![file.property(l).ok_or_else(|| format!("unknown property `{l}`"))?],
        None => file.properties.iter().collect(),
    };
    let procs = file.proc_env();
    let mut rows = Vec::new();
    // Procedure contracts are checked as triples around a call.
    if label.is_none() {
        for d in &file.procs {
            if d.pre.is_none() && d.post.is_none() {
                continue;
            }
            let pre = d.pre.clone().unwrap_or_else(relvc_core::assertions::Assertion::tt);
            let post = d.post.clone().unwrap_or_else(relvc_core::assertions::Assertion::tt);
            let start = Instant::now();
            let r = check_hoare(&pre, &Com::Call(d.name.clone()), &post, &procs, &bounds).map_err(|e| e.to_string())?;
            rows.push(OracleResult::new(format!("proc.{}", d.name), &r, start.elapsed()));
        }
        for r in &file.rel_contracts {
            let cs: Vec<Com> = r.procs.iter().map(|y| Com::Call(y.clone())).collect();
            let start = Instant::now();
            let rep = check_rel(&r.pre, &cs, &r.post, &procs, &bounds).map_err(|e| e.to_string())?;
            rows.push(OracleResult::new(format!("rel.{}", r.procs.join(",")), &rep, start.elapsed()));
        }
    }
    for p in props {
        let start = Instant::now();
        let rep = if p.commands.len() == 1 {
            check_hoare(&p.pre, &p.commands[0], &p.post, &procs, &bounds)
        } else {
            check_rel(&p.pre, &p.commands, &p.post, &procs, &bounds)
        }
        .map_err(|e| e.to_string())?;
        rows.push(OracleResult::new(p.label.clone(), &rep, start.elapsed()));
    }
    match format {
        OutFormat::Text => report::print_oracle_text(&rows),
        OutFormat::Json => report::print_oracle_json(&rows),
    }
    Ok(if rows.iter().all(|r| r.holds) { EXIT_OK } else { EXIT_FAILED })
}
