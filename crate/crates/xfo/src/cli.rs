//! The `xfo` command line. [`run`] takes the arguments and output streams
//! explicitly and returns the exit status, so it can be driven in-process.
//!
//! Exit status: 0 success, 1 validation errors, 2 usage errors, 3 runtime
//! failures during simulation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use xfo_core::microworld::{load_scenario, RunStatus};
use xfo_core::{Layer, TicView, Tier2Policy, World};

use crate::diag::{self, Diagnostic};
use crate::loader::{load_model, load_scenario_doc};
use crate::parser::{parse_model, parse_scenario};
use crate::render::{render_snapshot, render_timeline, TimelineOptions};
use crate::trace_file::{TraceError, TraceFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "xfo",
    version,
    about = "Validate, simulate and render xfo models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a model file.
    Check {
        model: PathBuf,
        /// Reject links no declaration covers (the default).
        #[arg(long, conflicts_with = "warn_tier2")]
        strict_tier2: bool,
        /// Report uncovered links as warnings instead of errors.
        #[arg(long)]
        warn_tier2: bool,
    },
    /// Run a scenario and write its trace.
    Run {
        model: PathBuf,
        scenario: PathBuf,
        /// Stop at this tick instead of the horizon.
        #[arg(long)]
        until: Option<u64>,
        /// Where to write the trace JSON.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        warn_tier2: bool,
    },
    /// Render a trace as an SVG timeline, or a snapshot with `--at`.
    Timeline {
        trace: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Draw the state at this tick instead of the timeline.
        #[arg(long)]
        at: Option<u64>,
        /// Draw only these entities (repeatable).
        #[arg(long = "entity")]
        entities: Vec<String>,
    },
    /// Describe an entity: layer, ancestry and relationships.
    Explain { model: PathBuf, name: String },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Prints to `out`/`err`, ignoring broken pipes.
macro_rules! say {
    ($w:expr, $($arg:tt)*) => {{
        let _ = writeln!($w, $($arg)*);
    }};
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Command::Check {
            model, warn_tier2, ..
        } => cmd_check(&mut io, &model, policy(warn_tier2)),
        Command::Run {
            model,
            scenario,
            until,
            trace,
            warn_tier2,
        } => cmd_run(
            &mut io,
            &model,
            &scenario,
            until,
            &trace,
            policy(warn_tier2),
        ),
        Command::Timeline {
            trace,
            output,
            at,
            entities,
        } => cmd_timeline(&mut io, &trace, &output, at, entities),
        Command::Explain { model, name } => cmd_explain(&mut io, &model, &name),
    }
}

fn policy(warn: bool) -> Tier2Policy {
    if warn {
        Tier2Policy::Warn
    } else {
        Tier2Policy::Strict
    }
}

fn read(io: &mut Io, path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        say!(io.err, "error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn print_diags(io: &mut Io, diags: &mut [Diagnostic]) {
    diag::sort(diags);
    for d in diags.iter() {
        say!(io.out, "{d}");
    }
}

/// Parses and loads a model, printing its diagnostics. Fails with the exit
/// status when any is an error.
fn load(io: &mut Io, path: &Path, policy: Tier2Policy) -> Result<World, i32> {
    let text = read(io, path)?;
    let file = path.display().to_string();
    let (doc, mut diags) = parse_model(&text, &file);
    if diag::has_errors(&diags) {
        print_diags(io, &mut diags);
        return Err(EXIT_VALIDATION);
    }
    let (world, more) = load_model(&doc, policy);
    diags.extend(more);
    print_diags(io, &mut diags);
    if diag::has_errors(&diags) {
        Err(EXIT_VALIDATION)
    } else {
        Ok(world)
    }
}

fn cmd_check(io: &mut Io, path: &Path, policy: Tier2Policy) -> i32 {
    let world = match load(io, path, policy) {
        Ok(w) => w,
        Err(code) => {
            if code == EXIT_VALIDATION {
                say!(io.out, "{}: check failed", path.display());
            }
            return code;
        }
    };
    let count = |layer| world.registry().iter().filter(|d| d.layer == layer).count();
    say!(
        io.out,
        "{}: model {} ok: {} universals, {} particulars, {} relation kinds, {} declarations, {} transitionals, {} frames, {} workflows, {} rules",
        path.display(),
        world.name(),
        count(Layer::U),
        count(Layer::P),
        world.kinds().len(),
        world.declarations().len(),
        world.transitionals().count(),
        world.frames().count(),
        world.workflows().count(),
        world.rules().len()
    );
    EXIT_OK
}

fn cmd_run(
    io: &mut Io,
    model: &Path,
    scenario: &Path,
    until: Option<u64>,
    trace_path: &Path,
    policy: Tier2Policy,
) -> i32 {
    let world = match load(io, model, policy) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let text = match read(io, scenario) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let file = scenario.display().to_string();
    let (doc, mut diags) = parse_scenario(&text, &file);
    if diag::has_errors(&diags) {
        print_diags(io, &mut diags);
        return EXIT_VALIDATION;
    }
    let spec = match load_scenario_doc(&doc, &world, &file) {
        Ok((spec, warnings)) => {
            diags.extend(warnings);
            print_diags(io, &mut diags);
            spec
        }
        Err(more) => {
            diags.extend(more);
            print_diags(io, &mut diags);
            return EXIT_VALIDATION;
        }
    };
    let horizon = spec.horizon;
    let until = until.unwrap_or(horizon);
    if until > horizon {
        say!(
            io.err,
            "error: --until {until} exceeds the scenario horizon {horizon}"
        );
        return EXIT_USAGE;
    }
    let mut sim = match load_scenario(world, spec) {
        Ok(sim) => sim,
        Err(e) => {
            say!(io.err, "error[{}]: {e}", e.code());
            return EXIT_RUNTIME;
        }
    };
    if let Err(e) = sim.run_until(until) {
        say!(io.err, "error[{}]: {e}", e.code());
        return EXIT_RUNTIME;
    }

    let trace = TraceFile::from_simulation(&sim);
    say!(
        io.out,
        "scenario {} (model {}): ran to tick {until} of {horizon}, {} events",
        trace.scenario,
        trace.model,
        trace.events.len()
    );
    for r in sim.runs() {
        let last = r.last_completed.as_deref().unwrap_or("-");
        say!(
            io.out,
            "run {} {} [{}]: {}, last completed step: {last}",
            r.id,
            r.name(),
            r.workflow,
            r.status
        );
        if r.status == RunStatus::Broken {
            say!(
                io.out,
                "warning: run {} broke: {}",
                r.name(),
                r.broken_reason.as_deref().unwrap_or("unknown reason")
            );
        }
    }
    for w in sim.world().warnings() {
        say!(
            io.out,
            "warning[{}]: tick {}: {}",
            w.failure.code(),
            w.at,
            w.failure
        );
    }
    for f in sim.faults() {
        say!(io.out, "fault: tick {}: {}", f.at, f.message);
    }
    if let Err(e) = std::fs::write(trace_path, trace.to_json()) {
        say!(io.err, "error: cannot write {}: {e}", trace_path.display());
        return EXIT_USAGE;
    }
    if sim.faults().is_empty() {
        EXIT_OK
    } else {
        EXIT_RUNTIME
    }
}

fn cmd_timeline(
    io: &mut Io,
    trace_path: &Path,
    output: &Path,
    at: Option<u64>,
    entities: Vec<String>,
) -> i32 {
    let text = match read(io, trace_path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let trace = match TraceFile::from_json(&text) {
        Ok(t) => t,
        Err(e) => {
            say!(io.err, "error: {}: {e}", trace_path.display());
            return EXIT_VALIDATION;
        }
    };
    let rendered = match at {
        Some(at) => render_snapshot(&trace, at),
        None => render_timeline(&trace, &TimelineOptions { entities }),
    };
    let svg = match rendered {
        Ok(svg) => svg,
        Err(e @ TraceError::TickOutOfRange { .. }) => {
            say!(io.err, "error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            say!(io.err, "error: {}: {e}", trace_path.display());
            return EXIT_VALIDATION;
        }
    };
    if let Err(e) = std::fs::write(output, &svg) {
        say!(io.err, "error: cannot write {}: {e}", output.display());
        return EXIT_USAGE;
    }
    let what = match at {
        Some(at) => format!(
            "snapshot at tick {at}, {} groups",
            svg.matches("class=\"group\"").count()
        ),
        None => format!("timeline, {} bands", svg.matches("class=\"band\"").count()),
    };
    say!(io.out, "{} / {}: {what}", trace.model, trace.scenario);
    EXIT_OK
}

fn cmd_explain(io: &mut Io, path: &Path, name: &str) -> i32 {
    let world = match load(io, path, Tier2Policy::Strict) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let reg = world.registry();
    let Some(def) = reg.get(name) else {
        say!(io.err, "error: unknown entity `{name}`");
        return EXIT_VALIDATION;
    };
    let layer = match def.layer {
        Layer::B => "B (upper ontology)",
        Layer::U => "U (universal)",
        Layer::P => "P (particular)",
    };
    say!(io.out, "{name}: {layer}");
    if let Some(doc) = &def.doc {
        say!(io.out, "  doc: {doc}");
    }
    let chain: Vec<&str> = reg
        .ancestors(name)
        .map(|a| a.map(|d| d.name()).collect())
        .unwrap_or_default();
    say!(io.out, "  chain: {}", chain.join(" -> "));
    match world.tic_of(name, None) {
        Ok(tic) => {
            let TicView::Declarations(decls) = tic.view else {
                unreachable!("no tick given");
            };
            if decls.is_empty() {
                say!(io.out, "  tic: no declarations");
            } else {
                say!(io.out, "  tic:");
                for (dir, d) in decls {
                    say!(
                        io.out,
                        "    {:<3} {} {} {}",
                        dir.to_string(),
                        d.from,
                        d.kind,
                        d.to
                    );
                }
            }
        }
        Err(_) => say!(io.out, "  tic: not an Independent Continuant"),
    }
    if def.layer != Layer::P {
        let instances: Vec<&str> = reg
            .iter()
            .filter(|d| d.parent.as_ref().is_some_and(|p| p.as_str() == name))
            .map(|d| d.name())
            .collect();
        if !instances.is_empty() {
            say!(io.out, "  children: {}", instances.join(", "));
        }
    }
    EXIT_OK
}
