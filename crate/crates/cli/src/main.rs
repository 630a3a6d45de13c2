mod report;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Format;
use spec::{ExperimentSpec, Kind};

#[derive(Parser)]
#[command(name = "adelic", version, about = "Adelic bundles, Okounkov bodies and arithmetic volumes on the projective line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Largest level n used by estimates.
    #[arg(long, global = true)]
    nmax: Option<u64>,
    /// Dimension cap for lattice searches.
    #[arg(long, global = true)]
    cap: Option<usize>,
    /// Absolute tolerance for float checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Comma-separated rationals, e.g. 1/2,1/4,1/8.
    #[arg(long, global = true)]
    schedule: Option<String>,
    /// Seed for randomized spot checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Output directory; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the CSV table to this file.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Record wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// HN filtration or successive minima of an adelic bundle.
    Bundle {
        #[arg(value_enum)]
        op: BundleOp,
    },
    /// Degrees of the graded bundles of a series.
    Series,
    /// Concave transform and vol_I from the valuation filtration.
    Okounkov {
        #[arg(value_enum)]
        op: OkounkovOp,
    },
    /// Volume estimates with drift brackets.
    Volumes {
        #[arg(value_enum)]
        op: VolumeOp,
    },
    /// Continuity of the volumes along a perturbation schedule.
    Experiment {
        #[arg(value_enum)]
        op: ExperimentOp,
    },
    /// Split a positive-degree divisor into ample parts.
    Decompose {
        /// Spec file or bare divisor list.
        #[arg(long)]
        divisor: Option<PathBuf>,
    },
    /// Continuity over a trivially valued base.
    Trivial,
    /// Dispatch on the spec's `kind`.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum BundleOp {
    Hn,
    Minima,
}

#[derive(Clone, Copy, ValueEnum)]
enum OkounkovOp {
    Transform,
}

#[derive(Clone, Copy, ValueEnum)]
enum VolumeOp {
    Chi,
    Vol,
    #[value(name = "volI")]
    VolI,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentOp {
    Continuity,
}

fn load_spec(common: &Common, divisor: Option<&PathBuf>) -> Result<ExperimentSpec> {
    if let Some(path) = divisor {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if text.trim_start().starts_with('[') {
            let d: serde_json::Value = serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("schema error at `divisor`: {e}"))?;
            return ExperimentSpec::parse(&serde_json::json!({"kind": "decompose", "divisor": d}).to_string());
        }
        return ExperimentSpec::parse(&text);
    }
    let path = common.spec.as_ref().context("--spec is required")?;
    ExperimentSpec::load(path)
}

fn execute(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    let (expect, op, divisor) = match &cli.command {
        Command::Bundle { op } => (Some(Kind::Bundle), Some(if matches!(op, BundleOp::Hn) { "hn" } else { "minima" }), None),
        Command::Series => (Some(Kind::Series), None, None),
        Command::Okounkov { op: OkounkovOp::Transform } => (Some(Kind::Okounkov), None, None),
        Command::Volumes { op } => {
            let name = match op {
                VolumeOp::Chi => "chi",
                VolumeOp::Vol => "vol",
                VolumeOp::VolI => "volI",
            };
            (Some(Kind::Volumes), Some(name), None)
        }
        Command::Experiment { op: ExperimentOp::Continuity } => (Some(Kind::Continuity), None, None),
        Command::Decompose { divisor } => (Some(Kind::Decompose), None, divisor.as_ref()),
        Command::Trivial => (Some(Kind::TrivialMode), None, None),
        Command::Run => (None, None, None),
    };
    let mut spec = load_spec(c, divisor)?;
    if let Some(k) = expect {
        if spec.kind != k {
            bail!("schema error at `kind`: expected {}, found {}", k.name(), spec.kind.name());
        }
    }
    spec.n_max = c.nmax.or(spec.n_max);
    spec.cap = c.cap.or(spec.cap);
    spec.tol = c.tol.or(spec.tol);
    spec.seed = c.seed.or(spec.seed);
    if let Some(s) = &c.schedule {
        spec.schedule = Some(spec::parse_schedule(s));
    }

    let start = Instant::now();
    let mut report = run::run(&spec, op)?;
    if c.timing {
        report.wall_time_ms = Some(start.elapsed().as_millis());
    }
    report.emit(c.format, c.out.as_deref())?;
    if let Some(path) = &c.csv {
        std::fs::write(path, report.render(Format::Csv)?).with_context(|| format!("writing {}", path.display()))?;
    }
    for chk in report.checks.iter().filter(|k| !k.pass) {
        eprintln!("FAIL {}{}", chk.name, chk.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default());
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
