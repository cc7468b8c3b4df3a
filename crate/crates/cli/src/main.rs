use clap::{Args, Parser, Subcommand, ValueEnum};
use momentlab_cli::commands::{execute, CliError};
use momentlab_cli::config::Config;
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "momentlab", version, about = "Experiments on maximal averages over moment curves")]
struct Cli {
    /// Configuration file of `key = value` lines (lowest precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for the result table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the worker pool (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Tangency invariants of two curves given as x1,...,xd@r.
    Tangency(PairArgs),
    /// Intersection points of two curves.
    Intersect(PairArgs),
    /// Tube volume ladder.
    TubeVolume(VolumeArgs),
    /// Intersection volume ladder of two tubes.
    IntersectionVolume(VolumeArgs),
    /// L¹ mass of the union example over a δ ladder.
    ExampleMass(FieldArgs),
    /// Maximal surface of a field.
    Maximal(FieldArgs),
    /// Box-counting dimension of a field support.
    Dimension(FieldArgs),
    /// Decay of the localized multiplier along a ray.
    MultiplierDecay(MultiplierArgs),
    /// Sampled symbol-class and curve conditions.
    SymbolCheck(MultiplierArgs),
    /// Bernstein ratio for band-limited fields on the torus.
    Bernstein(BernsteinArgs),
    /// Run the acceptance criteria and print one line per criterion.
    Acceptance(AcceptanceArgs),
    /// Run the command named by the `command` key of a spec file.
    Run(RunArgs),
    /// Fit the frozen constants on the calibration seed.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Serialize)]
struct PairArgs {
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// derived or flipped
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Args, Serialize)]
struct VolumeArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Comma list, dyadic entries like 2^-5 allowed.
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    /// Offset of the second curve in units of δ.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<String>,
}

#[derive(Args, Serialize)]
struct FieldArgs {
    /// s' of the union example.
    #[arg(long)]
    s_prime: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    deltas: Option<String>,
    /// Binary field file to read instead of the union example.
    #[arg(long)]
    field: Option<String>,
    /// Save the generated field (single δ only).
    #[arg(long)]
    field_out: Option<String>,
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    n_tail: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Serialize)]
struct MultiplierArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    radii: Option<String>,
    /// Dyadic levels for the symbol check.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Serialize)]
struct BernsteinArgs {
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Args, Serialize)]
struct AcceptanceArgs {
    /// quick or full
    #[arg(long)]
    budget: Option<String>,
    /// Comma list of criterion ids.
    #[arg(long)]
    only: Option<String>,
    /// Directory for report.json and per-criterion CSV files.
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Args, Serialize)]
struct RunArgs {
    /// Spec file with a `command` key and that command's settings.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args, Serialize)]
struct CalibrateArgs {
    /// Write the calibration TOML here.
    #[arg(long)]
    calibration_out: Option<String>,
}

fn flags<T: Serialize>(args: &T) -> Config {
    let mut c = Config::new();
    if let serde_json::Value::Object(map) = serde_json::to_value(args).expect("flags serialize") {
        for (k, v) in map {
            match v {
                serde_json::Value::Null => {}
                serde_json::Value::String(s) => c.set(&k, &s),
                other => c.set(&k, &other.to_string()),
            }
        }
    }
    c
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    });
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (name, args) = match &cli.command {
        Command::Tangency(a) => ("tangency", flags(a)),
        Command::Intersect(a) => ("intersect", flags(a)),
        Command::TubeVolume(a) => ("tube-volume", flags(a)),
        Command::IntersectionVolume(a) => ("intersection-volume", flags(a)),
        Command::ExampleMass(a) => ("example-mass", flags(a)),
        Command::Maximal(a) => ("maximal", flags(a)),
        Command::Dimension(a) => ("dimension", flags(a)),
        Command::MultiplierDecay(a) => ("multiplier-decay", flags(a)),
        Command::SymbolCheck(a) => ("symbol-check", flags(a)),
        Command::Bernstein(a) => ("bernstein", flags(a)),
        Command::Acceptance(a) => ("acceptance", flags(a)),
        Command::Run(_) => ("run", Config::new()),
        Command::Calibrate(a) => ("calibrate", flags(a)),
    };
    let mut cfg = match (&cli.command, &cli.config) {
        (Command::Run(r), _) => Config::load(&r.spec)?,
        (_, Some(p)) => Config::load(p)?,
        _ => Config::new(),
    };
    if let (Command::Run(_), Some(p)) = (&cli.command, &cli.config) {
        let mut base = Config::load(p)?;
        base.merge(&cfg);
        cfg = base;
    }
    cfg.merge(&Config::from_env(std::env::vars()));
    cfg.merge(&args);
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string());
    }
    if let Some(w) = cli.workers.or(Some(cfg.usize_or("workers", 0)?).filter(|&w| w > 0)) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }

    eprintln!("# command: {name}");
    for line in cfg.render().lines() {
        eprintln!("#   {line}");
    }
    eprintln!("# config hash: {}", cfg.content_hash());
    let start = Instant::now();
    let out = execute(name, &cfg)?;
    for n in &out.notes {
        eprintln!("{n}");
    }
    let body = match cli.format {
        Format::Csv => out.csv.clone(),
        Format::Json => serde_json::to_string_pretty(&out.json).expect("json output") + "\n",
    };
    match &cli.out {
        Some(p) => std::fs::write(p, body)?,
        None => print!("{body}"),
    }
    eprintln!("# wall time: {:.2} s", start.elapsed().as_secs_f64());
    Ok(match out.pass {
        Some(false) => 1,
        _ => 0,
    })
}
