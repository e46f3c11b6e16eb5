//! Command-line front end.
//!
//! `check` parses a workspace of `.obj` files, runs the compatibility check
//! on every system and a compliance check for every `system x: y`
//! declaration, and renders the findings. `simulate` runs the seeded random
//! scheduler; `lts` exports the synchronous product as DOT.
//!
//! Exit codes: 0 = no findings (informational ones do not count), 1 =
//! findings were reported, 2 = usage or I/O failure.

use crate::compat::{check_compatibility, simulate, ExploreOptions, Explorer};
use crate::composition::{compose, ComposeError, CompositeSpec};
use crate::diag::{sort_diagnostics, Diagnostic, Severity};
use crate::dot::product_dot;
use crate::refine::check_compliance;
use crate::render::{render_human, render_json};
use crate::source::SourceMap;
use crate::syntax::{parse, resolve, SystemDecl};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "objcheck",
    about = "Compatibility and compliance checker for systems of communicating objects",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Bounds {
    /// Per-channel FIFO queue bound.
    #[arg(long, default_value_t = 2)]
    queue_bound: usize,
    /// Maximum number of explored configurations.
    #[arg(long, default_value_t = 100_000)]
    max_configs: usize,
    /// Maximum behaviour invocations without an intervening action.
    #[arg(long, default_value_t = 1000)]
    invoke_depth: usize,
}

impl Bounds {
    fn options(&self) -> ExploreOptions {
        ExploreOptions {
            queue_bound: self.queue_bound,
            max_configs: self.max_configs,
            invoke_depth: self.invoke_depth,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every system for compatibility and every declared abstraction
    /// for compliance.
    Check {
        /// Workspace files (`.obj`).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Restrict checking to these root systems (repeatable).
        #[arg(long = "system")]
        systems: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Run one pseudorandom execution of a system.
    Simulate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// System to simulate.
        #[arg(long)]
        system: String,
        /// Scheduler seed; a fixed seed gives a fixed trace.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of steps.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Export the reachable synchronous product of a system as DOT.
    Lts {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// System to compose.
        #[arg(long)]
        system: String,
        /// Output path; stdout when omitted.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[command(flatten)]
        bounds: Bounds,
    },
}

fn use_color() -> bool {
    match std::env::var("OBJCHECK_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stdout().is_terminal(),
    }
}

struct Workspace {
    sources: SourceMap,
    decls: Vec<SystemDecl>,
}

enum Loaded {
    Ok(Workspace),
    /// Parse or validation diagnostics, with the sources for rendering.
    Diags(SourceMap, Vec<Diagnostic>),
    /// I/O failure message.
    Io(String),
}

fn load(files: &[PathBuf]) -> Loaded {
    let mut sources = SourceMap::new();
    let mut decls = Vec::new();
    let mut diags = Vec::new();
    for path in files {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return Loaded::Io(format!("cannot read {}: {e}", path.display())),
        };
        let id = sources.add(path.display().to_string(), text);
        let text = sources.file(id).text.clone();
        match parse(&text, id) {
            Ok(ds) => decls.extend(ds),
            Err(ds) => diags.extend(ds),
        }
    }
    if diags.is_empty() {
        Loaded::Ok(Workspace { sources, decls })
    } else {
        sort_diagnostics(&mut diags);
        Loaded::Diags(sources, diags)
    }
}

fn exit_code(diags: &[Diagnostic]) -> i32 {
    if diags.iter().any(|d| d.severity != Severity::Info) {
        1
    } else {
        0
    }
}

fn emit(
    out: &mut dyn Write,
    diags: &[Diagnostic],
    sources: &SourceMap,
    systems_checked: usize,
    format: Format,
) -> i32 {
    match format {
        Format::Human => {
            let _ = write!(out, "{}", render_human(diags, sources, systems_checked, use_color()));
        }
        Format::Json => {
            let _ = writeln!(out, "{}", render_json(diags, sources));
        }
    }
    exit_code(diags)
}

/// Entry point shared by the binary and tests. Returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            }
        }
    };
    match cli.command {
        Command::Check { files, systems, format, bounds } => {
            check_command(&files, &systems, format, &bounds, out, err)
        }
        Command::Simulate { files, system, seed, steps, bounds } => {
            simulate_command(&files, &system, seed, steps, &bounds, out, err)
        }
        Command::Lts { files, system, dot, bounds } => {
            lts_command(&files, &system, dot.as_deref(), &bounds, out, err)
        }
    }
}

fn check_command(
    files: &[PathBuf],
    systems: &[String],
    format: Format,
    bounds: &Bounds,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let ws = match load(files) {
        Loaded::Io(msg) => {
            let _ = writeln!(err, "objcheck: {msg}");
            return 2;
        }
        Loaded::Diags(sources, diags) => {
            return emit(out, &diags, &sources, 0, format);
        }
        Loaded::Ok(ws) => ws,
    };
    let roots: Vec<&SystemDecl> = if systems.is_empty() {
        ws.decls.iter().collect()
    } else {
        let mut roots = Vec::new();
        for name in systems {
            match ws.decls.iter().find(|d| &d.name == name) {
                Some(d) => roots.push(d),
                None => {
                    let _ = writeln!(err, "objcheck: unknown system `{name}`");
                    return 2;
                }
            }
        }
        roots
    };
    let opts = bounds.options();
    let mut diags = Vec::new();
    for root in &roots {
        match resolve(&ws.decls, &root.name) {
            Err(ds) => diags.extend(ds),
            Ok(sys) => {
                diags.extend(check_compatibility(&sys, &opts));
                if let Some(parent) = &sys.parent {
                    diags.extend(check_compliance(&sys, parent, &opts));
                }
            }
        }
    }
    sort_diagnostics(&mut diags);
    diags.dedup();
    emit(out, &diags, &ws.sources, roots.len(), format)
}

fn simulate_command(
    files: &[PathBuf],
    system: &str,
    seed: u64,
    steps: usize,
    bounds: &Bounds,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let ws = match load(files) {
        Loaded::Io(msg) => {
            let _ = writeln!(err, "objcheck: {msg}");
            return 2;
        }
        Loaded::Diags(sources, diags) => {
            return emit(out, &diags, &sources, 0, Format::Human);
        }
        Loaded::Ok(ws) => ws,
    };
    if !ws.decls.iter().any(|d| d.name == system) {
        let _ = writeln!(err, "objcheck: unknown system `{system}`");
        return 2;
    }
    let opts = bounds.options();
    let sys = match resolve(&ws.decls, system) {
        Ok(s) => s,
        Err(diags) => return emit(out, &diags, &ws.sources, 0, Format::Human),
    };
    let trace = match simulate(&sys, seed, steps, &opts) {
        Ok(t) => t,
        Err(d) => return emit(out, &[d], &ws.sources, 0, Format::Human),
    };
    let _ = writeln!(out, "trace (system {system}, seed {seed}, {} step(s)):", trace.steps.len());
    for (i, step) in trace.steps.iter().enumerate() {
        let file = ws.sources.name(step.span.file);
        let _ = writeln!(
            out,
            "  {}. {step}  [{file}:{}:{}]",
            i + 1,
            step.span.start.line,
            step.span.start.col
        );
    }
    let _ = writeln!(out, "final configuration:");
    let explorer = Explorer::new(&sys, &opts);
    for (name, auto) in explorer.automata() {
        let local = &trace.final_config.locals[name];
        if auto.is_terminated(local) {
            let _ = writeln!(out, "  {name}: terminated");
        } else if let Some(span) = auto.point_span(local) {
            let file = ws.sources.name(span.file);
            let _ = writeln!(out, "  {name}: at {file}:{}:{}", span.start.line, span.start.col);
        }
    }
    for (ch, queue) in &trace.final_config.queues {
        let labels: Vec<&str> = queue.iter().map(|m| m.label.as_str()).collect();
        let _ = writeln!(
            out,
            "  queue {}\u{2192}{}: [{}]",
            ch.sender,
            ch.receiver,
            labels.join(", ")
        );
    }
    0
}

fn lts_command(
    files: &[PathBuf],
    system: &str,
    dot_path: Option<&Path>,
    bounds: &Bounds,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let ws = match load(files) {
        Loaded::Io(msg) => {
            let _ = writeln!(err, "objcheck: {msg}");
            return 2;
        }
        Loaded::Diags(sources, diags) => {
            return emit(out, &diags, &sources, 0, Format::Human);
        }
        Loaded::Ok(ws) => ws,
    };
    if !ws.decls.iter().any(|d| d.name == system) {
        let _ = writeln!(err, "objcheck: unknown system `{system}`");
        return 2;
    }
    let opts = bounds.options();
    let sys = match resolve(&ws.decls, system) {
        Ok(s) => s,
        Err(diags) => return emit(out, &diags, &ws.sources, 0, Format::Human),
    };
    let spec = CompositeSpec::from_system(&sys, opts.invoke_depth);
    let product = match compose(&spec, opts.max_configs) {
        Ok(p) => p,
        Err(ComposeError::StateLimit(n)) => {
            let _ = writeln!(err, "objcheck: composite state limit of {n} exceeded");
            return 1;
        }
        Err(ComposeError::Automata(e)) => {
            let _ = writeln!(err, "objcheck: {e}");
            return 1;
        }
    };
    let dot = product_dot(&product);
    match dot_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, dot) {
                let _ = writeln!(err, "objcheck: cannot write {}: {e}", path.display());
                return 2;
            }
            let _ = writeln!(
                out,
                "wrote {} ({} states)",
                path.display(),
                product.states.len()
            );
        }
        None => {
            let _ = write!(out, "{dot}");
        }
    }
    0
}
