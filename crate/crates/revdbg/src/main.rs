use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use revdbg::{run_forward, serve_tcp, Service, Session, Settings};
use revdbg_core::causality::{decode_derivation, decode_log, encode_derivation, encode_log, fifo_warnings};
use revdbg_core::controller::{ControlledState, Outcome, DEFAULT_FUEL};
use revdbg_core::reversible::to_reversible;
use revdbg_core::syntax::{parse_program, Pid};
use revdbg_core::system::{run_trace, Policy, Scheduler, StdSystem, Trace, TraceError, DEFAULT_MAX_STEPS};

#[derive(Parser)]
#[command(name = "revdbg", version, about = "Causal-consistent reversible debugger for an Erlang subset")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Program {
    /// Source file
    file: PathBuf,
    /// Entry point, e.g. `main` or `fact(5)`
    #[arg(short, long, default_value = "main")]
    entry: String,
}

#[derive(clap::Args)]
struct Sched {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `roundrobin` or `random`
    #[arg(long, default_value = "roundrobin")]
    policy: Policy,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program and print its output and the value of the first process
    Run {
        #[command(flatten)]
        prog: Program,
        #[command(flatten)]
        sched: Sched,
    },
    /// Run a program and write its log
    Trace {
        #[command(flatten)]
        prog: Program,
        #[command(flatten)]
        sched: Sched,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the full derivation
        #[arg(long)]
        derivation: Option<PathBuf>,
    },
    /// Replay a program according to a log
    Replay {
        #[command(flatten)]
        prog: Program,
        #[arg(short, long)]
        log: PathBuf,
    },
    /// Interactive debugging session
    Debug {
        #[command(flatten)]
        prog: Program,
        #[arg(short, long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Check a log or derivation file
    Lint { file: PathBuf },
    /// Serve the JSON protocol on a local TCP port or on stdio
    Serve {
        #[arg(long, default_value = "127.0.0.1:7077")]
        addr: String,
        #[arg(long)]
        stdio: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(prog: &Program) -> Result<StdSystem> {
    let src = read(&prog.file)?;
    let program = parse_program(&src).with_context(|| format!("parsing {}", prog.file.display()))?;
    Ok(StdSystem::init(Arc::new(program), &prog.entry)?)
}

fn traced(prog: &Program, sched: &Sched) -> Result<Trace> {
    let sys = load(prog)?;
    match run_trace(sys, &mut Scheduler::new(sched.policy, sched.seed), sched.max_steps) {
        Ok(t) => Ok(t),
        Err(TraceError::StepLimitExceeded { limit, .. }) => bail!("no termination within {limit} steps"),
    }
}

fn report(sys: &StdSystem) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(sys.transcript.as_bytes())?;
    let unfinished: Vec<String> = sys
        .procs
        .keys()
        .filter_map(|&p| {
            let st = sys.status(p)?;
            sys.procs[&p].config.result().is_none().then(|| format!("{p} {}", st.name()))
        })
        .collect();
    if let Some(v) = sys.procs.get(&Pid(0)).and_then(|p| p.config.result()) {
        writeln!(out, "{v}")?;
    }
    if !unfinished.is_empty() {
        bail!("not all processes terminated: {}", unfinished.join(", "));
    }
    Ok(())
}

fn lint(path: &Path) -> Result<()> {
    let text = read(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let is_derivation = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .is_some_and(|v| v.get("origin").is_some());
    if is_derivation {
        let d = decode_derivation(&text)?;
        for w in fifo_warnings(&d) {
            println!("warning: {w}");
        }
        println!("ok: derivation of {} steps", d.len());
    } else {
        let w = decode_log(&text)?;
        println!("ok: log of {} events over {} processes", w.total(), w.pids().count());
    }
    Ok(())
}

fn debug(prog: &Program, log: Option<&Path>, seed: u64, fuel: usize) -> Result<()> {
    let src = read(&prog.file)?;
    let log = log.map(read).transpose()?;
    let settings = Settings {
        seed,
        fuel,
        ..Settings::default()
    };
    let mut session = Session::create(1, &src, &prog.entry, log.as_deref(), settings)?;
    let interactive = io::stdin().is_terminal();
    let mut out = io::stdout().lock();
    write!(out, "{}", session.snapshot().render())?;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next().transpose()? else { break };
        let line = line.trim();
        match line.split_whitespace().collect::<Vec<_>>().as_slice() {
            [] => continue,
            ["quit" | "exit"] => break,
            ["help"] => writeln!(out, "{HELP}")?,
            ["show"] => write!(out, "{}", session.snapshot().render())?,
            ["inspect", p, i] => {
                let shown = p
                    .parse::<Pid>()
                    .map_err(|e| anyhow::anyhow!("{e}"))
                    .and_then(|p| Ok((p, i.parse::<usize>()?)))
                    .and_then(|(p, i)| Ok(session.inspect(p, i)?));
                match shown {
                    Ok(d) => writeln!(out, "{}", serde_json::to_string_pretty(&d)?)?,
                    Err(e) => writeln!(out, "error: {e}")?,
                }
            }
            _ => match session.apply_line(line) {
                Ok(view) => write!(out, "{}", view.render())?,
                Err(e) => writeln!(out, "error: {e}")?,
            },
        }
    }
    Ok(())
}

const HELP: &str = "\
requests:  step P [N] | back P [N] | replay-send P L | replay-rec P L | replay-spawn P P2
           roll-send P L | roll-rec P L | roll-spawn P P2 | roll-var P X | roll-creation P
session:   trace [SEED] | replay | restart [--log] | run [N] | undo | redo
other:     show | inspect P I | help | quit
`undo` and `redo` restore whole snapshots and ignore causality; use back/roll-* to reverse steps.";

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { prog, sched } => report(&traced(&prog, &sched)?.system),
        Cmd::Trace {
            prog,
            sched,
            output,
            derivation,
        } => {
            let t = traced(&prog, &sched)?;
            let log = t.log();
            fs::write(&output, encode_log(&log)).with_context(|| format!("writing {}", output.display()))?;
            if let Some(d) = derivation {
                fs::write(&d, encode_derivation(&t.derivation)).with_context(|| format!("writing {}", d.display()))?;
            }
            eprintln!("{} steps, {} log events", t.derivation.len(), log.total());
            report(&t.system)
        }
        Cmd::Replay { prog, log } => {
            let w = decode_log(&read(&log)?)?;
            let mut cs = ControlledState::new(to_reversible(load(&prog)?, Some(w))?);
            let outcome = run_forward(&mut cs, DEFAULT_MAX_STEPS);
            if outcome != Outcome::Done {
                bail!("replay stopped: {outcome}");
            }
            if !cs.system.replay_complete() {
                bail!("replay stopped with {} log events left", cs.system.log.total());
            }
            let mut sys = cs.system.erase();
            sys.transcript = sys.procs.values().map(|p| p.output.as_str()).collect();
            report(&sys)
        }
        Cmd::Debug { prog, log, seed, fuel } => debug(&prog, log.as_deref(), seed, fuel),
        Cmd::Lint { file } => lint(&file),
        Cmd::Serve { addr, stdio } => {
            if stdio {
                Service::new().serve_stream(io::stdin().lock(), io::stdout().lock())?;
                return Ok(());
            }
            serve_tcp(addr.as_str(), |a| eprintln!("listening on {a}"))?;
            Ok(())
        }
    }
}
