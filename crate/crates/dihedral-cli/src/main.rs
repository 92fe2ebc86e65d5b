//! d4: batch front end for the dihedral collision-manifold toolkit.

mod plot;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dihedral::central_configs::{cc_report, enumerate_ccs, CcKind};
use dihedral::connections::{
    alpha_star_report, classify_connections, connection_graph, parse_node, trace_branch, Branch, Side, Stability,
    StopRule, TraceOptions, TracerKind,
};
use dihedral::estimates::{table_csv, table_markdown, BoundReport, BoundSet};
use dihedral::flows::output::fmt_sig;
use dihedral::flows::{kepler_transit_angle, kepler_transit_numeric, Drift, IntegratorConfig};
use dihedral::potentials::{Homogeneity, Section};
use dihedral::Error;

const EXIT_NUMERIC: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "d4", version, about = "Collision-manifold dynamics of the dihedral four-body problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Central configurations, restpoint velocities and characteristic exponents.
    Cc {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace one branch of a restpoint manifold on a section.
    Trace(TraceArgs),
    /// Classify all section connections at one exponent.
    Connections {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate the critical exponents by bisection on the first-arm velocity.
    AlphaStar {
        #[arg(long, default_value = "planar")]
        section: SectionArg,
        #[arg(long, value_parser = parse_pair, default_value = "1.0,1.46136")]
        bracket0: (f64, f64),
        #[arg(long, value_parser = parse_pair, default_value = "1.46136,1.7")]
        bracket: (f64, f64),
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the appendix bound chains and compare with the printed constants.
    VerifyAppendix {
        #[arg(long, default_value = "all")]
        set: String,
        #[arg(long, value_enum, default_value = "md")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transit angle of the constant-potential projected flow.
    KeplerCheck {
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Render a section CSV as an SVG phase portrait.
    Plot {
        input: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        #[arg(long, default_value = "planar")]
        section: SectionArg,
        /// Exponent used to place the restpoint markers.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
}

#[derive(Args, Clone, Copy)]
struct TolArgs {
    #[arg(long, default_value_t = 1e-11)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-13)]
    abs_tol: f64,
    #[arg(long, value_enum, default_value = "exact")]
    drift: DriftArg,
    #[arg(long, value_enum, default_value = "projected", alias = "chart")]
    tracer: TracerArg,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    section: SectionArg,
    /// Restpoint label with sign, e.g. p11- or e11-.
    #[arg(long)]
    from: String,
    #[arg(long, value_enum)]
    side: SideArg,
    /// Trace the stable branch instead of the unstable one.
    #[arg(long)]
    stable: bool,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Stop after this many arm crossings.
    #[arg(long)]
    arms: Option<usize>,
    #[command(flatten)]
    tol: TolArgs,
    /// Trajectory CSV path; the outcome JSON goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TraceFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SectionArg {
    Planar,
    Tetra,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
enum DriftArg {
    Exact,
    Frozen,
}

#[derive(Clone, Copy, ValueEnum)]
enum TracerArg {
    Projected,
    Sigma,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Md,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Csv,
    Json,
    Svg,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a >= b {
        return Err(format!("empty bracket {a},{b}"));
    }
    Ok((a, b))
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Exponent(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

type CliResult<T> = Result<T, Failure>;

fn section_of(s: SectionArg) -> CliResult<Section> {
    match s {
        SectionArg::Planar => Ok(Section::Planar),
        SectionArg::Tetra => Ok(Section::Tetra),
        SectionArg::Full => Err(Failure::Usage("branches are traced on the planar or tetra section".into())),
    }
}

fn trace_options(t: &TolArgs) -> CliResult<TraceOptions> {
    let cfg = IntegratorConfig::with_tol(t.rel_tol, t.abs_tol);
    cfg.validate()?;
    Ok(TraceOptions {
        drift: match t.drift {
            DriftArg::Exact => Drift::Exact,
            DriftArg::Frozen => Drift::Frozen,
        },
        tracer: match t.tracer {
            TracerArg::Projected => TracerKind::Projected,
            TracerArg::Sigma => TracerKind::Sigma,
        },
        cfg,
        ..TraceOptions::default()
    })
}

/// Round every float to 12 significant digits so that output is stable.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            fmt_sig(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json<T: Serialize>(x: &T) -> CliResult<String> {
    let v = serde_json::to_value(x).map_err(|e| Failure::Numeric(e.to_string()))?;
    serde_json::to_string_pretty(&round_json(v)).map_err(|e| Failure::Numeric(e.to_string()))
}

fn emit(text: &str, out: &Option<PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut o = std::io::stdout().lock();
            let r = o.write_all(text.as_bytes()).and_then(|_| if text.ends_with('\n') { Ok(()) } else { o.write_all(b"\n") });
            match r {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn cmd_cc(alpha: f64, out: &Option<PathBuf>) -> CliResult<()> {
    let h = Homogeneity::new(alpha)?;
    let ccs = enumerate_ccs(h)?;
    let rect = ccs.iter().filter(|c| c.kind == CcKind::Planar).count();
    let report = json!({
        "alpha": alpha,
        "count": ccs.len(),
        "rectangular": rect,
        "tetrahedral": ccs.len() - rect,
        "configurations": ccs,
        "restpoints": cc_report(h)?,
    });
    emit(&to_json(&report)?, out)
}

fn cmd_trace(a: &TraceArgs) -> CliResult<()> {
    let h = Homogeneity::new(a.alpha)?;
    let section = section_of(a.section)?;
    let (cc, positive) = parse_node(&a.from)?;
    let side = match a.side {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
    };
    let mut branch = Branch::unstable(section, &cc, positive, side);
    if a.stable {
        branch.stability = Stability::Stable;
    }
    let opts = TraceOptions {
        eps: a.eps,
        record: true,
        stop: a.arms.map(StopRule::ArmCrossings).unwrap_or(StopRule::Outcome),
        ..trace_options(&a.tol)?
    };
    let res = trace_branch(h, &branch, &opts)?;
    let summary = json!({
        "branch": branch.name(),
        "alpha": a.alpha,
        "eps": a.eps,
        "drift": opts.drift,
        "outcome": res.outcome,
        "arm_v": res.arm_v(),
        "zero_v": res.zero_v_angles(),
        "log": res.log,
        "samples": res.trajectory.samples.len(),
    });
    let mut csv = Vec::new();
    res.trajectory.write_csv(&mut csv)?;
    let csv = String::from_utf8_lossy(&csv).into_owned();
    match a.format {
        TraceFormat::Csv => {
            match &a.out {
                Some(p) => fs::write(p, &csv)?,
                None => emit(&csv, &None)?,
            }
            if a.out.is_some() {
                emit(&to_json(&summary)?, &None)?;
            }
        }
        TraceFormat::Json => emit(&to_json(&summary)?, &a.out)?,
        TraceFormat::Svg => {
            let rows = dihedral::flows::output::read_section_csv(&csv).map_err(Failure::Numeric)?;
            emit(&plot::portrait(&rows, section, h)?, &a.out)?;
        }
    }
    Ok(())
}

fn cmd_connections(alpha: f64, tol: &TolArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let h = Homogeneity::new(alpha)?;
    let c = classify_connections(h, &trace_options(tol)?, &[])?;
    let g = connection_graph(&c);
    emit(&to_json(&json!({ "classification": c, "graph": g }))?, out)
}

fn bound_reports(set: &str) -> CliResult<Vec<BoundReport>> {
    if set == "all" {
        let mut all = Vec::new();
        for s in BoundSet::ALL {
            all.extend(s.compute()?);
        }
        return Ok(all);
    }
    Ok(set.parse::<BoundSet>()?.compute()?)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Cc { alpha, out } => cmd_cc(alpha, &out),
        Command::Trace(a) => cmd_trace(&a),
        Command::Connections { alpha, tol, out } => cmd_connections(alpha, &tol, &out),
        Command::AlphaStar { section, bracket0, bracket, grid, tol, out } => {
            let r = alpha_star_report(section_of(section)?, bracket0, bracket, &trace_options(&tol)?, grid)?;
            emit(&to_json(&r)?, &out)
        }
        Command::VerifyAppendix { set, format, out } => {
            let reports = bound_reports(&set)?;
            let text = match format {
                TableFormat::Md => table_markdown(&reports),
                TableFormat::Csv => table_csv(&reports),
                TableFormat::Json => to_json(&reports)?,
            };
            emit(&text, &out)
        }
        Command::KeplerCheck { beta, tol } => {
            let exact = kepler_transit_angle(beta)?;
            let cfg = IntegratorConfig::with_tol(tol.rel_tol, tol.abs_tol);
            let numeric = kepler_transit_numeric(beta, 1.0, &cfg)?;
            let r = json!({ "beta": beta, "transit": numeric, "exact": exact, "error": (numeric - exact).abs() });
            emit(&to_json(&r)?, &None)
        }
        Command::Plot { input, out, section, alpha } => {
            let text = fs::read_to_string(&input)?;
            let rows = dihedral::flows::output::read_section_csv(&text).map_err(Failure::Usage)?;
            let svg = plot::portrait(&rows, section_of(section)?, Homogeneity::new(alpha)?)?;
            emit(&svg, &Some(out))
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("D4_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("d4: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("d4: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
