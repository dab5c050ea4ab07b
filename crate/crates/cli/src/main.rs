//! `gkappa`: lint, compile and simulate generic Kappa models.
//!
//! Exit status: 0 on success, 1 on model errors, 2 on I/O or usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gkappa::compile::{emit_json, emit_text, resolve_model, CompileOptions, ResolveOptions, ResolvedModel};
use gkappa::engine::{run_sweep, simulate, SimConfig};
use gkappa::hierarchy::{lint_report, Hierarchy};
use gkappa::{parse_model, Diagnostics, Span};

#[derive(Parser)]
#[command(name = "gkappa", version, about = "Generic Kappa: agent hierarchies, rule compilation and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its agent hierarchy.
    Lint(Common),
    /// Compile generic rules down to the concrete fringe.
    Compile {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the stochastic simulation and write observables as CSV.
    Simulate(SimArgs),
}

#[derive(Args)]
struct Common {
    /// Model file.
    input: PathBuf,
    /// Concrete fringe, replacing the model's `%concrete:` line.
    #[arg(long, value_delimiter = ',')]
    fringe: Option<Vec<String>>,
    /// Drop rules that only have instances below the fringe, with a warning.
    #[arg(long)]
    drop_below_fringe: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    end_time: f64,
    #[arg(long)]
    max_events: Option<u64>,
    /// Sampling interval (default: end time / 100).
    #[arg(long)]
    sample: Option<f64>,
    /// Parameter sweep, `name=v1,v2,...`. Requires `-o`.
    #[arg(long)]
    sweep: Option<String>,
    /// Runs per sweep value; replicate k uses RNG stream k.
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    /// Sweep threads (default: available parallelism).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Start of the averaging window for the sweep summary's `_mean`
    /// columns (default: half the end time).
    #[arg(long)]
    mean_from: Option<f64>,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    emit: Emit,
    /// Output file; for sweeps, the summary CSV, with per-value files next
    /// to it.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Event log CSV (`time,rule,molecularity`).
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
    Csv,
}

enum Failure {
    Model,
    Io(String),
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Lint(c) => cmd_lint(&c),
        Command::Compile { common, emit, output } => cmd_compile(&common, emit, output.as_deref()),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Model) => ExitCode::from(1),
        Err(Failure::Io(msg)) | Err(Failure::Usage(msg)) => {
            eprintln!("gkappa: {msg}");
            ExitCode::from(2)
        }
    }
}

fn report(file: &str, diags: &Diagnostics) {
    for d in diags.iter() {
        eprintln!("{}", d.render(file));
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn load(c: &Common) -> Result<ResolvedModel, Failure> {
    let file = c.input.display().to_string();
    let text = read(&c.input)?;
    let ast = parse_model(&text).map_err(|d| {
        report(&file, &d);
        Failure::Model
    })?;
    let opts = ResolveOptions {
        fringe: c.fringe.clone(),
        compile: CompileOptions { drop_below_fringe: c.drop_below_fringe },
    };
    let model = resolve_model(&ast, &opts).map_err(|d| {
        report(&file, &d);
        Failure::Model
    })?;
    report(&file, &model.warnings);
    Ok(model)
}

fn cmd_lint(c: &Common) -> Outcome {
    let file = c.input.display().to_string();
    let text = read(&c.input)?;
    let ast = parse_model(&text).map_err(|d| {
        report(&file, &d);
        Failure::Model
    })?;
    let h = Hierarchy::from_ast(&ast).map_err(|d| {
        report(&file, &d);
        Failure::Model
    })?;
    let span = ast.fringe.as_ref().map(|f| f.span).unwrap_or(Span::default());
    let declared = c.fringe.as_deref().or(ast.fringe.as_ref().map(|f| f.agents.as_slice()));
    let (fringe, diags) = h.validate_fringe(declared, span);
    if diags.has_errors() {
        report(&file, &diags);
        return Err(Failure::Model);
    }
    // Full resolution surfaces rule, init and observable diagnostics.
    load(c)?;
    write_out(None, &lint_report(&h, &fringe))
}

fn cmd_compile(c: &Common, emit: Emit, output: Option<&Path>) -> Outcome {
    let text = match emit {
        Emit::Text => emit_text(&load(c)?),
        Emit::Json => emit_json(&load(c)?),
        Emit::Csv => return Err(Failure::Usage("compile emits text or json".into())),
    };
    write_out(output, &text)
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>), Failure> {
    let bad = || Failure::Usage(format!("bad sweep `{spec}`; expected name=v1,v2,..."));
    let (name, values) = spec.split_once('=').ok_or_else(bad)?;
    let values: Vec<f64> = values.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if name.is_empty() || values.is_empty() {
        return Err(bad());
    }
    Ok((name.to_string(), values))
}

/// `out/summary.csv` with value 2.5 of `k` gives `out/summary.k=2.5.csv`.
fn per_value_path(summary: &Path, param: &str, value: f64) -> PathBuf {
    let stem = summary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    summary.with_file_name(format!("{stem}.{param}={value}.csv"))
}

fn cmd_simulate(a: &SimArgs) -> Outcome {
    if a.emit != Emit::Csv {
        return Err(Failure::Usage("simulate emits csv".into()));
    }
    let sweep = a.sweep.as_deref().map(parse_sweep).transpose()?;
    if sweep.is_some() && a.output.is_none() {
        return Err(Failure::Usage("--sweep needs -o for the summary and per-value files".into()));
    }
    if sweep.is_some() && a.events.is_some() {
        return Err(Failure::Usage("--events is not available with --sweep".into()));
    }
    let model = load(&a.common)?;
    let file = a.common.input.display().to_string();
    let cfg = SimConfig {
        seed: a.seed,
        stream: 0,
        end_time: a.end_time,
        max_events: a.max_events,
        sample_interval: a.sample,
        record_events: a.events.is_some(),
    };
    let sim_error = |e: gkappa::engine::SimError| {
        eprintln!("{file}: error: {e}");
        Failure::Model
    };
    match sweep {
        None => {
            let traj = simulate(&model, &cfg).map_err(sim_error)?;
            if let Some(p) = &a.events {
                write_out(Some(p), &traj.events_csv())?;
            }
            write_out(a.output.as_deref(), &traj.to_csv())
        }
        Some((param, values)) => {
            let mean_from = a.mean_from.unwrap_or(a.end_time / 2.0);
            let res = run_sweep(&model, &param, &values, &cfg, a.replicates, a.jobs, mean_from).map_err(sim_error)?;
            let summary = a.output.as_deref().unwrap();
            for p in &res.points {
                write_out(Some(&per_value_path(summary, &param, p.value)), &p.mean_csv())?;
            }
            write_out(Some(summary), &res.summary_csv())
        }
    }
}
