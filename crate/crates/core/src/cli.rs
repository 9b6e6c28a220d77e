//! The `lola` command.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::analyze;
use crate::ast::TypedSpec;
use crate::engine::{oracle_evaluate, Engine, EngineError, EngineOptions, Stats};
use crate::frontend::DEFAULT_MAX_DEPTH;
use crate::io::{read_event_line, write_row};
use crate::stdlib::library;
use crate::{bundle_sources, compile, LoadError, Source};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ZERO_CYCLE: i32 = 2;
pub const EXIT_POSITIVE_CYCLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lola",
    version,
    about = "Stream runtime verification for Lola specifications"
)]
pub struct Cli {
    /// Template library: a file path, or a shipped bundle
    /// (ltl_past, mtl, mtltl, utils, experiments, all). Repeatable.
    #[arg(long = "lib", global = true, value_name = "PATH|BUNDLE")]
    pub libs: Vec<String>,
    /// Template expansion budget per output stream.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the dependency graph, memory bounds and evaluation order.
    Analyze {
        spec: PathBuf,
        /// Print the dependency graph in DOT format instead.
        #[arg(long)]
        dot: bool,
    },
    /// Print the flat stream equations with all templates instantiated.
    Expand { spec: PathBuf },
    /// Monitor a trace online, emitting rows as soon as they resolve.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        io: IoArgs,
        /// Only evaluate applications once all arguments are known.
        #[arg(long)]
        no_simplify: bool,
        /// Print run counters to standard error at the end.
        #[arg(long)]
        stats: bool,
    },
    /// Evaluate a whole trace with the reference evaluator.
    OracleRun {
        spec: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Monitor a trace and write run counters as JSON.
    Bench {
        spec: PathBuf,
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        no_simplify: bool,
        /// Where to write the counters; `-` for standard output.
        #[arg(long, value_name = "FILE")]
        stats_json: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// JSON Lines trace; standard input if absent or `-`.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Where to write rows; standard output if absent or `-`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::new(EXIT_ERROR, e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::ZeroCycle(_) => EXIT_ZERO_CYCLE,
            EngineError::NotEfficientlyMonitorable { .. } => EXIT_POSITIVE_CYCLE,
            _ => EXIT_ERROR,
        };
        Failure::new(code, e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_ERROR, e)
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Standard input and output are only used when no file is given.
pub fn main_with(
    args: impl IntoIterator<Item = OsString>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = stdout.flush();
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    let stdin = io::stdin();
    let mut stdin = stdin.lock();
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    main_with(std::env::args_os(), &mut stdin, &mut stdout, &mut stderr)
}

fn execute(
    cli: &Cli,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    match &cli.command {
        Command::Analyze { spec, dot } => {
            let spec = load(cli, spec)?;
            let a = match analyze(&spec) {
                Ok(a) => a,
                Err(e) => return Err(Failure::new(EXIT_ZERO_CYCLE, e)),
            };
            if *dot {
                write!(stdout, "{}", a.graph.to_dot())?;
            } else {
                writeln!(stdout, "{a}")?;
            }
            stdout.flush()?;
            Ok(if a.efficiently_monitorable {
                EXIT_OK
            } else {
                EXIT_POSITIVE_CYCLE
            })
        }
        Command::Expand { spec } => {
            let spec = load(cli, spec)?;
            write!(stdout, "{}", spec.spec())?;
            stdout.flush()?;
            Ok(EXIT_OK)
        }
        Command::Run {
            spec,
            io,
            no_simplify,
            stats,
        } => {
            let spec = load(cli, spec)?;
            let s = monitor(spec, io, !no_simplify, stdin, stdout)?;
            if *stats {
                writeln!(stderr, "{}", stats_json(&s))?;
            }
            Ok(EXIT_OK)
        }
        Command::OracleRun { spec, io } => {
            let spec = load(cli, spec)?;
            let mut input = open_input(io.input.as_deref(), stdin)?;
            let mut trace = Vec::new();
            for_each_event(&spec, &mut *input, |ev| {
                trace.push(ev);
                Ok(())
            })?;
            let rows = oracle_evaluate(&spec, &trace)?;
            let mut out = open_output(io.output.as_deref(), stdout)?;
            for row in &rows {
                write_row(&mut out, row)?;
            }
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Bench {
            spec,
            io,
            no_simplify,
            stats_json: path,
        } => {
            let spec = load(cli, spec)?;
            let mut sink = io::sink();
            let s = if io.output.is_some() {
                monitor(spec, io, !no_simplify, stdin, stdout)?
            } else {
                monitor_into(spec, io, !no_simplify, stdin, &mut sink)?
            };
            let text = stats_json(&s);
            if path.as_os_str() == "-" {
                writeln!(stdout, "{text}")?;
                stdout.flush()?;
            } else {
                std::fs::write(path, format!("{text}\n")).map_err(|e| io_failure(path, e))?;
            }
            Ok(EXIT_OK)
        }
    }
}

pub fn stats_json(s: &Stats) -> serde_json::Value {
    serde_json::json!({
        "events": s.events,
        "rows": s.rows,
        "max_retained": s.max_retained,
        "max_lookahead": s.max_lookahead,
    })
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(EXIT_ERROR, format!("{}: {e}", path.display()))
}

fn read_source(path: &Path) -> Result<Source, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(Source::new(path.display().to_string(), text))
}

fn load(cli: &Cli, path: &Path) -> Result<TypedSpec, Failure> {
    let mut libs = Vec::new();
    for lib in &cli.libs {
        let p = Path::new(lib);
        if p.is_file() || (library(lib).is_none() && lib != "all") {
            libs.push(read_source(p)?);
        } else {
            // Bundles pull in their dependencies; skip ones already loaded.
            for s in bundle_sources([lib.as_str()])? {
                if !libs.contains(&s) {
                    libs.push(s);
                }
            }
        }
    }
    Ok(compile(&read_source(path)?, &libs, cli.max_depth)?)
}

fn open_input<'a>(
    path: Option<&Path>,
    stdin: &'a mut dyn BufRead,
) -> Result<Box<dyn BufRead + 'a>, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufReader::new(
            File::open(p).map_err(|e| io_failure(p, e))?,
        ))),
        _ => Ok(Box::new(stdin)),
    }
}

fn open_output<'a>(
    path: Option<&Path>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        ))),
        _ => Ok(Box::new(stdout)),
    }
}

fn for_each_event(
    spec: &TypedSpec,
    input: &mut dyn BufRead,
    mut f: impl FnMut(Vec<crate::value::Value>) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        line_no += 1;
        let event =
            read_event_line(&line, line_no, spec).map_err(|e| Failure::new(EXIT_ERROR, e))?;
        if let Some(event) = event {
            f(event)?;
        }
    }
}

fn monitor(
    spec: TypedSpec,
    io: &IoArgs,
    simplify: bool,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
) -> Result<Stats, Failure> {
    let mut out = open_output(io.output.as_deref(), stdout)?;
    monitor_into(spec, io, simplify, stdin, &mut out)
}

fn monitor_into(
    spec: TypedSpec,
    io: &IoArgs,
    simplify: bool,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<Stats, Failure> {
    let mut engine = Engine::new(spec.clone(), EngineOptions { simplify })?;
    let mut input = open_input(io.input.as_deref(), stdin)?;
    for_each_event(&spec, &mut *input, |ev| {
        let rows = engine.push_values(ev)?;
        for row in &rows {
            write_row(&mut *out, row)?;
        }
        if !rows.is_empty() {
            out.flush()?;
        }
        Ok(())
    })?;
    for row in &engine.finish()? {
        write_row(&mut *out, row)?;
    }
    out.flush()?;
    Ok(engine.stats())
}
