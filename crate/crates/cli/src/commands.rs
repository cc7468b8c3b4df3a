//! Subcommand implementations. Each one reads its settings from a layered
//! [`Config`] and returns an [`Output`] that `main` prints as CSV or JSON.

use crate::acceptance::{self, Budget, SuiteOptions, CRITERIA};
use crate::calibrate;
use crate::config::{Config, ConfigError};
use momentlab::field::{read_field, write_field};
use momentlab::maximal::{MaximalConfig, MaximalSurface, ParamGrid};
use momentlab::multiplier::{bernstein_report, build_cutoffs, cone_decay_profile, default_kappa, verify_symbol_conditions};
use momentlab::scaling::{box_count_dimension, fit_exponent, run_ladder, Abscissa, LadderResult, LadderRow};
use momentlab::tangency::{is_tangent_with, pair_invariants_with, SignConvention};
use momentlab::{
    analytic_intersection_bound, curve_intersections, intersection_volume, perturbed_tangency_volume, tube_volume,
    MomentCurve, Point,
};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration: exit code 2.
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    /// Numerical failure: exit code 1.
    #[error(transparent)]
    Compute(#[from] momentlab::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced. `pass` is `Some(false)` for checks that fail.
#[derive(Debug, Clone)]
pub struct Output {
    pub csv: String,
    pub json: Value,
    pub pass: Option<bool>,
    /// Extra human-readable lines for stderr.
    pub notes: Vec<String>,
}

impl Output {
    fn new(csv: String, json: Value) -> Self {
        Output {
            csv,
            json,
            pass: None,
            notes: vec![],
        }
    }
}

pub const COMMANDS: [&str; 13] = [
    "tangency",
    "intersect",
    "tube-volume",
    "intersection-volume",
    "example-mass",
    "maximal",
    "dimension",
    "multiplier-decay",
    "symbol-check",
    "bernstein",
    "acceptance",
    "calibrate",
    "run",
];

/// Dispatch by name; `run` reads the command name from the `command` key.
pub fn execute(command: &str, cfg: &Config) -> CliResult<Output> {
    match command {
        "tangency" => tangency(cfg),
        "intersect" => intersect(cfg),
        "tube-volume" => tube_volume_cmd(cfg),
        "intersection-volume" => intersection_volume_cmd(cfg),
        "example-mass" => example_mass(cfg),
        "maximal" => maximal(cfg),
        "dimension" => dimension(cfg),
        "multiplier-decay" => multiplier_decay(cfg),
        "symbol-check" => symbol_check(cfg),
        "bernstein" => bernstein(cfg),
        "acceptance" => acceptance_cmd(cfg),
        "calibrate" => calibrate_cmd(cfg),
        "run" => {
            let inner = cfg.require("command")?.to_string();
            if inner == "run" || !COMMANDS.contains(&inner.as_str()) {
                return Err(CliError::Usage(format!("spec names unknown command `{inner}`")));
            }
            execute(&inner, cfg)
        }
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

/// Curves are written `x1,…,xd@r`.
pub fn parse_curve(text: &str) -> CliResult<MomentCurve> {
    let bad = || CliError::Usage(format!("curve `{text}` is not of the form x1,...,xd@r"));
    let (xs, r) = text.split_once('@').ok_or_else(bad)?;
    let coords = xs
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    let r: f64 = r.trim().parse().map_err(|_| bad())?;
    Ok(MomentCurve::new(Point { coords }, r)?)
}

fn curve_key(cfg: &Config, key: &str) -> CliResult<MomentCurve> {
    parse_curve(cfg.require(key)?)
}

fn convention(cfg: &Config) -> CliResult<SignConvention> {
    match cfg.str_or("convention", "derived") {
        "derived" => Ok(SignConvention::Derived),
        "flipped" => Ok(SignConvention::Flipped),
        v => Err(CliError::Usage(format!("convention `{v}` is not derived or flipped"))),
    }
}

fn deltas(cfg: &Config, default: &[f64]) -> CliResult<Vec<f64>> {
    if cfg.contains("delta") && !cfg.contains("deltas") {
        return Ok(vec![cfg.f64_or("delta", 0.0)?]);
    }
    Ok(cfg.list_or("deltas", default)?)
}

fn dyadic(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 2f64.powi(-k)).collect()
}

fn fitted(l: &LadderResult) -> Output {
    let mut out = Output::new(l.to_csv(), json!({ "ladder": l }));
    if let Ok(f) = fit_exponent(l) {
        out.notes.push(format!("slope {:.4} (r² {:.6})", f.slope, f.r_squared));
        out.json["fit"] = json!(f);
    }
    out
}

fn tangency(cfg: &Config) -> CliResult<Output> {
    let (c1, c2) = (curve_key(cfg, "c1")?, curve_key(cfg, "c2")?);
    let conv = convention(cfg)?;
    let tol = cfg.f64_or("tol", 1e-6)?;
    let inv = pair_invariants_with(&c1, &c2, conv)?;
    let hit = is_tangent_with(&c1, &c2, tol, conv)?;
    let mut csv = String::from("quantity,value\n");
    for (i, d) in inv.deltas.iter().enumerate() {
        writeln!(csv, "delta_{},{d}", i + 2).unwrap();
    }
    writeln!(csv, "delta_bar,{}\ndbar,{}\ntangent,{}", inv.delta_bar, inv.dbar, hit.is_some()).unwrap();
    if let Some((t, _)) = &hit {
        writeln!(csv, "t,{t}").unwrap();
    }
    Ok(Output::new(
        csv,
        json!({ "invariants": inv, "tangent": hit.is_some(), "t": hit.as_ref().map(|h| h.0),
                "point": hit.map(|h| h.1.coords) }),
    ))
}

fn intersect(cfg: &Config) -> CliResult<Output> {
    let (c1, c2) = (curve_key(cfg, "c1")?, curve_key(cfg, "c2")?);
    let rep = curve_intersections(&c1, &c2, cfg.f64_or("tol", 1e-9)?)?;
    let mut csv = String::from("index,t1,t2,coords\n");
    for (i, p) in rep.points.iter().enumerate() {
        writeln!(csv, "{i},{},{},\"{:?}\"", p.0, p.1, p.2.coords).unwrap();
    }
    let pts: Vec<&Vec<f64>> = rep.points.iter().map(|p| &p.2.coords).collect();
    Ok(Output::new(csv, json!({ "count": rep.count, "points": pts })))
}

fn tube_volume_cmd(cfg: &Config) -> CliResult<Output> {
    let c = match cfg.get("curve") {
        Some(t) => parse_curve(t)?,
        None => MomentCurve::standard(cfg.usize_or("d", 3)?, 1.0)?,
    };
    let n = cfg.u64_or("samples", 1_000_000)?;
    let seed = cfg.u64_or("seed", 1)?;
    let l = run_ladder("tube-volume", seed, Abscissa::Delta, &deltas(cfg, &dyadic(3..=8))?, |d| {
        tube_volume(&c, d, n, seed).map(|v| (v.value, v.stderr))
    })?;
    Ok(fitted(&l))
}

fn intersection_volume_cmd(cfg: &Config) -> CliResult<Output> {
    let (c1, c2) = (curve_key(cfg, "c1")?, curve_key(cfg, "c2")?);
    let n = cfg.u64_or("samples", 1_000_000)?;
    let seed = cfg.u64_or("seed", 1)?;
    let offset = cfg.list_or("offset", &[])?;
    let inv = momentlab::pair_invariants(&c1, &c2)?;
    let ds = deltas(cfg, &dyadic(3..=8))?;
    let l = run_ladder("intersection-volume", seed, Abscissa::Delta, &ds, |d| {
        let v = if offset.is_empty() {
            intersection_volume(&c1, &c2, d, n, seed)?
        } else {
            let o: Vec<f64> = offset.iter().map(|x| x * d).collect();
            perturbed_tangency_volume(&c1, &c2, &o, d, n, seed)?
        };
        Ok((v.value, v.stderr))
    })?;
    let mut out = fitted(&l);
    out.json["bounds"] = json!(ds.iter().map(|&d| analytic_intersection_bound(&inv, d)).collect::<Vec<_>>());
    Ok(out)
}

fn example_mass(cfg: &Config) -> CliResult<Output> {
    let s_prime = cfg.usize_or("s_prime", 1)?;
    let ds = deltas(cfg, &dyadic(5..=8))?;
    let seed = cfg.u64_or("seed", 1)?;
    let save = cfg.get("field_out").map(PathBuf::from);
    let rows = ds
        .iter()
        .map(|&d| {
            let f = acceptance::union_field(s_prime, d)?;
            if let (Some(p), true) = (&save, ds.len() == 1) {
                write_field(&f, p)?;
            }
            Ok(LadderRow {
                delta: d,
                value: f.lp_norm(1.0)?,
                stderr: 0.0,
            })
        })
        .collect::<momentlab::Result<Vec<_>>>()?;
    let l = LadderResult::new(&format!("example-mass-s{s_prime}"), seed, Abscissa::Delta, rows)?;
    Ok(fitted(&l))
}

fn field_source(cfg: &Config) -> CliResult<(momentlab::field::ScalarField, f64)> {
    let delta = cfg.f64_or("delta", 2f64.powi(-6))?;
    if let Some(p) = cfg.get("field") {
        return Ok((read_field(Path::new(p))?, delta));
    }
    let s_prime = cfg.usize_or("s_prime", 1)?;
    Ok((acceptance::union_field(s_prime, delta)?, delta))
}

fn maximal(cfg: &Config) -> CliResult<Output> {
    let (f, delta) = field_source(cfg)?;
    let d = f.dim();
    let s = cfg.usize_or("s", d + 1 - cfg.usize_or("s_prime", 1)?)?;
    if s == 0 || s > d {
        return Err(CliError::Usage(format!("s = {s} must lie in 1..={d}")));
    }
    let params = ParamGrid::cells(d - s, cfg.usize_or("n_tail", 4)?, cfg.usize_or("n_r", 8)?, (0.5, 2.0))?;
    let mc = MaximalConfig::new(d, s, delta, params)?;
    let surface = MaximalSurface::compute(&f, &mc)?;
    let p = cfg.f64_or("p", 2.0)?;
    let norm = momentlab::maximal::maximal_lp_norm(&surface, p)?;
    let mut out = Output::new(surface.to_csv(), json!({ "lp_norm": norm, "p": p, "csv": surface.to_csv() }));
    out.notes.push(format!("L^{p} norm of the maximal surface: {norm:.6e}"));
    Ok(out)
}

fn dimension(cfg: &Config) -> CliResult<Output> {
    let (f, _) = field_source(cfg)?;
    let h = f.grid.max_spacing();
    let default: Vec<f64> = {
        let k = (2.0 * h).log2().round() as i32;
        (0..4).map(|i| 2f64.powi(k + 3 - i)).collect()
    };
    let b = box_count_dimension(&f, &cfg.list_or("scales", &default)?)?;
    let mut csv = String::from("scale,count\n");
    for (e, n) in b.scales.iter().zip(&b.counts) {
        writeln!(csv, "{e},{n}").unwrap();
    }
    let mut out = Output::new(csv, json!(b));
    out.notes.push(format!("box-counting dimension {:.4}", b.fitted_dimension));
    Ok(out)
}

fn multiplier_decay(cfg: &Config) -> CliResult<Output> {
    let d = cfg.usize_or("d", 3)?;
    let cut = build_cutoffs(d, cfg.f64_or("kappa", default_kappa(d))?)?;
    let (h0, _) = acceptance::cone_rays(&cut);
    let dir = cfg.list_or("direction", &h0)?;
    let radii = cfg.list_or("radii", &(4..=10).map(|k| 2f64.powi(k)).collect::<Vec<_>>())?;
    let p = cone_decay_profile(&dir, cfg.f64_or("r", 0.5)?, &radii, &cut)?;
    let mut out = fitted(&p);
    if let Ok((f, kept)) = acceptance::censored_fit(&p) {
        out.notes.push(format!("slope over {kept} rows above {:e}: {:.4}", acceptance::DECAY_FLOOR, f.slope));
    }
    Ok(out)
}

fn symbol_check(cfg: &Config) -> CliResult<Output> {
    let d = cfg.usize_or("d", 3)?;
    let cut = build_cutoffs(d, default_kappa(d))?;
    let b = cfg.f64_or("b", momentlab::calibration::calibration().symbol_b)?;
    let ks = cfg.list_or("k", &[4.0, 5.0, 6.0, 7.0, 8.0])?;
    let reports: Vec<_> = ks.iter().map(|&k| verify_symbol_conditions(d, b, k as i32, &cut)).collect();
    let mut csv = String::from("k,deriv_max,b_required,vol_deviation,aa_max,passes\n");
    for r in &reports {
        writeln!(csv, "{},{},{},{},{},{}", r.k, r.deriv_max, r.b_required, r.vol_deviation, r.aa_max, r.passes).unwrap();
    }
    let mut out = Output::new(csv, json!(reports));
    out.pass = Some(reports.iter().all(|r| r.passes));
    Ok(out)
}

fn bernstein(cfg: &Config) -> CliResult<Output> {
    let r = bernstein_report(
        cfg.usize_or("s", 1)?,
        cfg.f64_or("radius", 16.0)?,
        cfg.f64_or("p", 2.0)?,
        cfg.u64_or("trials", 100)?,
        cfg.u64_or("seed", 1)?,
    )?;
    let csv = format!(
        "s,radius,p,trials,grid,worst_ratio\n{},{},{},{},{},{}\n",
        r.s, r.radius, r.p, r.trials, r.grid, r.worst_ratio
    );
    Ok(Output::new(csv, json!(r)))
}

fn acceptance_cmd(cfg: &Config) -> CliResult<Output> {
    let budget: Budget = cfg.str_or("budget", "full").parse().map_err(CliError::Usage)?;
    let mut opts = SuiteOptions::new(cfg.u64_or("seed", 1)?, budget);
    opts.convention = convention(cfg)?;
    let ids: Vec<u32> = match cfg.get("only") {
        Some(list) => list
            .split(',')
            .map(|v| v.trim().parse::<u32>().ok().filter(|i| CRITERIA.contains(i)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::Usage(format!("`{list}` is not a list of criterion ids 1..15")))?,
        None => CRITERIA.to_vec(),
    };
    let report = acceptance::run_suite(&opts, &ids, |r| eprintln!("{}", r.line()));
    if let Some(dir) = cfg.get("out_dir") {
        report.write(Path::new(dir))?;
    }
    let mut out = Output::new(report.table(), serde_json::from_str(&report.to_json()).expect("valid json"));
    out.pass = Some(report.all_pass);
    Ok(out)
}

fn calibrate_cmd(cfg: &Config) -> CliResult<Output> {
    let seed = cfg.u64_or("seed", momentlab::calibration::calibration().seed)?;
    let (cal, csv) = calibrate::calibrate(seed)?;
    let text = momentlab::calibration::render(&cal);
    if let Some(p) = cfg.get("calibration_out") {
        std::fs::write(p, &text)?;
    }
    let mut out = Output::new(csv, json!(cal));
    out.notes.push(text);
    Ok(out)
}
