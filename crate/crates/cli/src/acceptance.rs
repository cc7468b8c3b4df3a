//! The acceptance suite: one function per criterion, each returning named
//! checks. Reports carry no timings so that reruns are byte-identical.

use crate::oracle::brute_force_tangency;
use crate::pairs;
use momentlab::calibration::Calibration;
use momentlab::field::{
    box_field, focusing_bounds, focusing_field, segment_field, union_set_bounds, union_set_field, Grid, ScalarField,
    UnionConfig, SCALE_RANGE,
};
use momentlab::maximal::{maximal_value, smooth_average, tube_average, MaximalConfig, ParamGrid};
use momentlab::multiplier::{
    bernstein_report, build_cutoffs, cone_decay_profile, default_kappa, partition_defect, phase_derivative_check,
    verify_symbol_conditions, CutoffSet,
};
use momentlab::rng::CounterRng;
use momentlab::scaling::{box_count_dimension, fit_exponent, fit_line, Abscissa, LadderResult, LadderRow, ScalingFit};
use momentlab::tangency::{is_tangent_with, pair_invariants_with, SignConvention};
use momentlab::{
    analytic_intersection_bound, curve_intersections, intersection_volume, perturbed_tangency_volume, tube_volume,
    MomentCurve, Result,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

/// Criteria evaluated by `run_suite`; 15 is the rerun comparison.
pub const CRITERIA: [u32; 15] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

/// Decay values at or below this are indistinguishable from quadrature
/// rounding and are left out of slope fits.
pub const DECAY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Quick,
    Full,
}

impl Budget {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Budget::Full => full,
            Budget::Quick => quick,
        }
    }
}

impl std::str::FromStr for Budget {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Budget::Quick),
            "full" => Ok(Budget::Full),
            _ => Err(format!("unknown budget `{s}` (quick or full)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub budget: Budget,
    pub convention: SignConvention,
    pub calibration: Calibration,
}

impl SuiteOptions {
    pub fn new(seed: u64, budget: Budget) -> Self {
        SuiteOptions {
            seed,
            budget,
            convention: SignConvention::Derived,
            calibration: momentlab::calibration::calibration().clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Absent for wall-clock checks, which are not reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub target: String,
    pub pass: bool,
}

impl Check {
    fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            target: format!("{target} ± {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            target: format!("≤ {}", fmt_limit(limit)),
            pass: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value: Some(value),
            target: format!("≥ {}", fmt_limit(limit)),
            pass: value >= limit,
        }
    }

    fn runtime(name: &str, elapsed: Duration, limit_s: f64) -> Self {
        Check {
            name: name.into(),
            value: None,
            target: format!("≤ {limit_s} s"),
            pass: elapsed.as_secs_f64() <= limit_s,
        }
    }

    fn failed(message: String) -> Self {
        Check {
            name: "error".into(),
            value: None,
            target: message,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// (file name, contents) written next to the report.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    fn new(id: u32, name: &str) -> Self {
        CriterionResult {
            id,
            name: name.into(),
            pass: false,
            checks: vec![],
            artifacts: vec![],
            elapsed: Duration::ZERO,
        }
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn artifact(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.into(), contents));
    }

    /// One line per criterion: `[ 7] name: PASS (check value vs target; …)`.
    pub fn line(&self) -> String {
        let details: Vec<String> = self
            .checks
            .iter()
            .map(|c| match c.value {
                Some(v) => format!("{} {} vs {}{}", c.name, fmt_value(v), c.target, if c.pass { "" } else { " FAIL" }),
                None => format!("{} {}{}", c.name, c.target, if c.pass { "" } else { " FAIL" }),
            })
            .collect();
        format!(
            "[{:>2}] {}: {} ({}) [{:.1} s]",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            details.join("; "),
            self.elapsed.as_secs_f64()
        )
    }
}

fn fmt_limit(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn fmt_value(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub budget: Budget,
    pub convention: String,
    pub calibration: Calibration,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            writeln!(s, "{}", c.line()).unwrap();
        }
        let passed = self.criteria.iter().filter(|c| c.pass).count();
        writeln!(s, "{passed}/{} criteria pass", self.criteria.len()).unwrap();
        s
    }

    /// Every file the report produces, in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![("report.json".to_string(), self.to_json())];
        for c in &self.criteria {
            out.extend(c.artifacts.iter().cloned());
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in self.files() {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    fn finish(&mut self) {
        self.all_pass = self.criteria.iter().all(|c| c.pass);
    }
}

pub fn criterion_name(id: u32) -> &'static str {
    match id {
        1 => "tube-volume-scaling",
        2 => "tangent-intersection-scaling",
        3 => "transversal-intersection-scaling",
        4 => "bound-dominance",
        5 => "tangency-oracle-equivalence",
        6 => "at-most-two-intersections",
        7 => "sharp-example-lower-bound",
        8 => "example-mass-scaling",
        9 => "focusing-example",
        10 => "dimension-proxy",
        11 => "multiplier-cone-contrast",
        12 => "symbol-and-curve-conditions",
        13 => "smooth-domination",
        14 => "bernstein-property",
        15 => "determinism",
        _ => "unknown",
    }
}

/// Run one of criteria 1–14.
pub fn run_criterion(id: u32, opts: &SuiteOptions) -> CriterionResult {
    let start = Instant::now();
    let mut res = CriterionResult::new(id, criterion_name(id));
    let outcome = match id {
        1 => c01_tube_volume(opts, &mut res),
        2 => c02_tangent_intersection(opts, &mut res),
        3 => c03_transversal(opts, &mut res),
        4 => c04_bound_dominance(opts, &mut res),
        5 => c05_tangency_oracle(opts, &mut res),
        6 => c06_two_intersections(opts, &mut res),
        7 => c07_sharp_lower_bound(opts, &mut res),
        8 => c08_example_mass(opts, &mut res),
        9 => c09_focusing(opts, &mut res),
        10 => c10_dimension(opts, &mut res),
        11 => c11_cone_contrast(opts, &mut res),
        12 => c12_symbol(opts, &mut res),
        13 => c13_smooth_domination(opts, &mut res),
        14 => c14_bernstein(opts, &mut res),
        _ => Err(momentlab::Error::InvalidConfiguration(format!("no criterion {id}"))),
    };
    if let Err(e) = outcome {
        res.check(Check::failed(e.to_string()));
    }
    res.elapsed = start.elapsed();
    res.pass = !res.checks.is_empty() && res.checks.iter().all(|c| c.pass);
    res
}

/// Run the selected criteria. Criterion 15 reruns the others and compares
/// every output byte.
pub fn run_suite(opts: &SuiteOptions, ids: &[u32], mut progress: impl FnMut(&CriterionResult)) -> SuiteReport {
    let mut report = SuiteReport {
        seed: opts.seed,
        budget: opts.budget,
        convention: format!("{:?}", opts.convention).to_lowercase(),
        calibration: opts.calibration.clone(),
        criteria: vec![],
        all_pass: false,
    };
    for &id in ids.iter().filter(|&&i| i != 15) {
        let r = run_criterion(id, opts);
        progress(&r);
        report.criteria.push(r);
    }
    if ids.contains(&15) {
        let r = determinism(opts, &report);
        progress(&r);
        report.criteria.push(r);
    }
    report.finish();
    report
}

/// Rerun every criterion of `first` and compare the produced files.
pub fn determinism(opts: &SuiteOptions, first: &SuiteReport) -> CriterionResult {
    let start = Instant::now();
    let mut res = CriterionResult::new(15, criterion_name(15));
    let ids: Vec<u32> = first.criteria.iter().map(|c| c.id).collect();
    let mut again = SuiteReport {
        criteria: ids.iter().map(|&id| run_criterion(id, opts)).collect(),
        ..first.clone()
    };
    again.finish();
    let mut reference = first.clone();
    reference.finish();
    let (a, b) = (reference.files(), again.files());
    let differing = a.len().abs_diff(b.len())
        + a.iter().zip(&b).filter(|(x, y)| x.0 != y.0 || x.1.as_bytes() != y.1.as_bytes()).count();
    res.check(Check {
        name: "files compared".into(),
        value: Some(a.len() as f64),
        target: "> 0".into(),
        pass: !a.is_empty(),
    });
    res.check(Check::at_most("differing files", differing as f64, 0.0));
    res.elapsed = start.elapsed();
    res.pass = res.checks.iter().all(|c| c.pass);
    res
}

fn dyadic(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 2f64.powi(-k)).collect()
}

fn ladder(id: &str, seed: u64, abscissa: Abscissa, rows: Vec<LadderRow>) -> Result<(LadderResult, ScalingFit)> {
    let l = LadderResult::new(id, seed, abscissa, rows)?;
    let f = fit_exponent(&l)?;
    Ok((l, f))
}

fn row(delta: f64, value: f64, stderr: f64) -> LadderRow {
    LadderRow { delta, value, stderr }
}

fn fit_csv(l: &LadderResult, f: &ScalingFit) -> String {
    format!(
        "{}# slope={} intercept={} r_squared={} slope_stderr={}\n",
        l.to_csv(),
        f.slope,
        f.intercept,
        f.r_squared,
        f.slope_stderr
    )
}

fn c01_tube_volume(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let start = Instant::now();
    let n = o.budget.pick(1_000_000, 100_000);
    let c = MomentCurve::standard(3, 1.0)?;
    let rows = dyadic(3..=8)
        .into_iter()
        .map(|d| tube_volume(&c, d, n, o.seed).map(|v| row(d, v.value, v.stderr)))
        .collect::<Result<Vec<_>>>()?;
    let (l, f) = ladder("tube-volume", o.seed, Abscissa::Delta, rows)?;
    res.check(Check::within("slope", f.slope, 2.0, 0.1));
    res.check(Check::at_least("r_squared", f.r_squared, 0.999));
    res.check(Check::runtime("runtime", start.elapsed(), 120.0));
    res.artifact("c01_tube_volume.csv", fit_csv(&l, &f));
    Ok(())
}

fn c02_tangent_intersection(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let start = Instant::now();
    let n = o.budget.pick(10_000_000, 1_000_000);
    let c1 = MomentCurve::standard(3, 1.0)?;
    let c2 = MomentCurve::standard(3, 1.5)?;
    let deltas = dyadic(3..=8);
    let exact = deltas
        .iter()
        .map(|&d| intersection_volume(&c1, &c2, d, n, o.seed).map(|v| row(d, v.value, v.stderr)))
        .collect::<Result<Vec<_>>>()?;
    let (l, f) = ladder("tangent-intersection", o.seed, Abscissa::Delta, exact)?;
    res.check(Check::within("exact slope", f.slope, 2.5, 0.15));
    res.artifact("c02_tangent_intersection.csv", fit_csv(&l, &f));
    let moved = deltas
        .iter()
        .map(|&d| {
            perturbed_tangency_volume(&c1, &c2, &[d / 4000.0, 0.0, 0.0], d, n, o.seed).map(|v| row(d, v.value, v.stderr))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l, f) = ladder("perturbed-tangent-intersection", o.seed, Abscissa::Delta, moved)?;
    res.check(Check::within("perturbed slope", f.slope, 2.5, 0.2));
    res.check(Check::runtime("runtime", start.elapsed(), 900.0));
    res.artifact("c02_perturbed_intersection.csv", fit_csv(&l, &f));
    Ok(())
}

fn c03_transversal(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let n = o.budget.pick(10_000_000, 1_000_000);
    let mut s = CounterRng::new("transversal-pair", o.seed).stream(0);
    let (c1, c2, inv) = pairs::transversal_pair(&mut s, 3, 0.3);
    res.check(Check::at_least("delta_bar", inv.delta_bar, 0.3));
    res.check(Check::at_least("dbar", inv.dbar, 0.3));
    let rows = dyadic(4..=8)
        .into_iter()
        .map(|d| intersection_volume(&c1, &c2, d, n, o.seed).map(|v| row(d, v.value, v.stderr)))
        .collect::<Result<Vec<_>>>()?;
    let (l, f) = ladder("transversal-intersection", o.seed, Abscissa::Delta, rows)?;
    res.check(Check::within("slope", f.slope, 3.0, 0.2));
    res.artifact(
        "c03_transversal_intersection.csv",
        format!(
            "# c1={:?}@{} c2={:?}@{}\n{}",
            c1.center.coords,
            c1.scale,
            c2.center.coords,
            c2.scale,
            fit_csv(&l, &f)
        ),
    );
    Ok(())
}

/// The seeded intersecting pairs of the dominance experiment: generic
/// crossings, exact tangencies and crossings with nearly parallel tangents.
pub fn dominance_pairs(seed: u64, count: u64) -> Result<Vec<(MomentCurve, MomentCurve)>> {
    let rng = CounterRng::new("dominance-pairs", seed);
    (0..count)
        .map(|i| {
            let mut s = rng.stream(i);
            Ok(match i % 4 {
                0 | 1 => pairs::intersecting_pair(&mut s, 3),
                2 => {
                    let (a, b, _) = pairs::tangent_pair(&mut s, 3)?;
                    (a, b)
                }
                _ => {
                    let c1 = pairs::random_curve(&mut s, 3, 0.25, (0.5, 2.0));
                    let t = s.range(-0.8, 0.8);
                    let eta = 10f64.powf(s.range(-4.0, -1.0)) * if s.uniform() < 0.5 { -1.0 } else { 1.0 };
                    let r2 = c1.scale * s.range(0.6, 0.9);
                    (c1.clone(), pairs::through_point(&c1, t, (t + eta).clamp(-0.95, 0.95), r2))
                }
            })
        })
        .collect()
}

/// (δ, value, stderr, bound) for every pair and δ.
pub fn dominance_samples(seed: u64, count: u64, n: u64) -> Result<Vec<(usize, f64, f64, f64, f64)>> {
    let pairs = dominance_pairs(seed, count)?;
    let deltas = dyadic(4..=8).into_iter().step_by(2).collect::<Vec<_>>();
    let jobs: Vec<(usize, f64)> = (0..pairs.len()).flat_map(|i| deltas.iter().map(move |&d| (i, d))).collect();
    jobs.iter()
        .map(|&(i, d)| {
            let (c1, c2) = &pairs[i];
            let v = intersection_volume(c1, c2, d, n, seed.wrapping_add(i as u64))?;
            let inv = momentlab::pair_invariants(c1, c2)?;
            let b = analytic_intersection_bound(&inv, d).bound_value;
            Ok((i, d, v.value, v.stderr, b))
        })
        .collect()
}

fn c04_bound_dominance(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let n = o.budget.pick(200_000, 20_000);
    let samples = dominance_samples(o.seed, 100, n)?;
    let c = o.calibration.bound_constant;
    let within = samples.iter().filter(|s| s.2 <= c * s.4 + 3.0 * s.3).count();
    let worst = samples.iter().map(|s| s.2 / s.4).fold(0.0, f64::max);
    res.check(Check::at_least("fraction within 3 stderr", within as f64 / samples.len() as f64, 0.99));
    res.check(Check {
        name: "worst value/bound".into(),
        value: Some(worst),
        target: format!("reported (C = {c:.4})"),
        pass: true,
    });
    let mut csv = String::from("pair,delta,value,stderr,bound\n");
    for s in &samples {
        writeln!(csv, "{},{},{},{},{}", s.0, s.1, s.2, s.3, s.4).unwrap();
    }
    res.artifact("c04_bound_dominance.csv", csv);
    Ok(())
}

fn c05_tangency_oracle(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let grid = o.budget.pick(2000, 400);
    let (n_random, n_tangent) = (500u64, 50u64);
    let rng = CounterRng::new("tangency-oracle", o.seed);
    let mut cases = Vec::new();
    for i in 0..n_random {
        let mut s = rng.stream(i);
        let c1 = pairs::random_curve(&mut s, 3, 0.5, (0.5, 2.0));
        let c2 = pairs::random_curve(&mut s, 3, 0.5, (0.5, 2.0));
        cases.push((c1, c2, None));
    }
    for i in 0..n_tangent {
        let mut s = rng.derive("constructed").stream(i);
        let (a, b, solved) = pairs::tangent_pair(&mut s, 3)?;
        cases.push((a, b, Some(solved)));
    }
    let unit = MomentCurve::standard(3, 1.0)?;
    let verdicts: Vec<(bool, bool, f64)> = cases
        .par_iter()
        .map(|(a, b, solved)| {
            let fast = is_tangent_with(a, b, 1e-6, o.convention)?.is_some();
            let slow = brute_force_tangency(a, b, grid, 1e-6).tangent;
            let resid = match solved {
                Some(c) => pair_invariants_with(c, &unit, o.convention)?.max_delta(),
                None => 0.0,
            };
            Ok((fast, slow, resid))
        })
        .collect::<Result<Vec<_>>>()?;
    let agree = verdicts.iter().filter(|v| v.0 == v.1).count();
    let oracle_tangent = verdicts.iter().filter(|v| v.1).count();
    let worst_resid = verdicts.iter().map(|v| v.2).fold(0.0, f64::max);
    res.check(Check::at_least("agreement", agree as f64 / verdicts.len() as f64, 1.0));
    res.check(Check::at_least("oracle tangent count", oracle_tangent as f64, n_tangent as f64));
    res.check(Check::at_most("solver max delta_i", worst_resid, 1e-10));
    let mut csv = String::from("case,is_tangent,oracle\n");
    for (i, v) in verdicts.iter().enumerate() {
        writeln!(csv, "{i},{},{}", v.0, v.1).unwrap();
    }
    res.artifact("c05_tangency_oracle.csv", csv);
    Ok(())
}

fn c06_two_intersections(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let n = o.budget.pick(10_000u64, 1_000);
    let rng = CounterRng::new("intersection-count", o.seed);
    let counts: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = rng.stream(i);
            let (a, b) = match i % 3 {
                0 => (
                    pairs::random_curve(&mut s, 3, 0.5, (0.5, 2.0)),
                    pairs::random_curve(&mut s, 3, 0.5, (0.5, 2.0)),
                ),
                1 => pairs::intersecting_pair(&mut s, 3),
                _ => match pairs::tangent_pair(&mut s, 3) {
                    Ok((a, b, _)) => (a, b),
                    Err(_) => return None,
                },
            };
            curve_intersections(&a, &b, 1e-9).ok().map(|r| r.count)
        })
        .collect();
    let violations = counts.iter().filter(|c| c.map_or(true, |k| k > 2)).count();
    let mut hist = [0u64; 3];
    for k in counts.iter().flatten() {
        if *k <= 2 {
            hist[*k] += 1;
        }
    }
    res.check(Check::at_most("violations", violations as f64, 0.0));
    res.check(Check {
        name: "pairs with 1 or 2 points".into(),
        value: Some((hist[1] + hist[2]) as f64),
        target: "> 0".into(),
        pass: hist[1] + hist[2] > 0,
    });
    res.artifact(
        "c06_intersection_counts.csv",
        format!("count,pairs\n0,{}\n1,{}\n2,{}\n", hist[0], hist[1], hist[2]),
    );
    Ok(())
}

/// Indicator of E^{s'}_δ on a grid of spacing δ/2 around its support.
pub fn union_field(s_prime: usize, delta: f64) -> Result<ScalarField> {
    let cfg = UnionConfig::default();
    let (lo, hi) = union_set_bounds(s_prime, 3, delta, &cfg)?;
    let g = Grid::with_spacing(lo, hi, delta / 2.0)?;
    union_set_field(s_prime, delta, &g, &cfg)
}

fn c07_sharp_lower_bound(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let delta = 2f64.powi(-6);
    let n_r = o.budget.pick(24, 8);
    let mut csv = String::new();
    for s in [3usize, 2] {
        let s_prime = 4 - s;
        let f = union_field(s_prime, delta)?;
        let params = ParamGrid::cells(s_prime - 1, o.budget.pick(8, 3), n_r, SCALE_RANGE)?;
        let cfg = MaximalConfig::new(3, s, delta, params)?;
        let values = cfg
            .params
            .samples
            .par_iter()
            .map(|p| maximal_value(&f, p, &cfg))
            .collect::<Result<Vec<_>>>()?;
        let good = values.iter().filter(|&&v| v >= 0.8).count() as f64 / values.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        res.check(Check::at_least(&format!("s={s} fraction >= 0.8"), good, 0.95));
        res.check(Check {
            name: format!("s={s} min"),
            value: Some(min),
            target: "reported".into(),
            pass: true,
        });
        for (p, v) in cfg.params.samples.iter().zip(&values) {
            writeln!(csv, "{s},{:?},{},{}", p.x_tail, p.r, v).unwrap();
        }
    }
    res.artifact("c07_maximal_union.csv", format!("s,x_tail,r,value\n{csv}"));
    Ok(())
}

fn c08_example_mass(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let ks = o.budget.pick(5..=8, 4..=6);
    for (s_prime, target, tol) in [(1usize, 1.0, 0.2), (2, 0.0, 0.2), (3, 0.0, 0.1)] {
        let s = 4 - s_prime;
        let rows = dyadic(ks.clone())
            .into_iter()
            .map(|d| Ok(row(d, union_field(s_prime, d)?.lp_norm(1.0)?, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let (l, f) = ladder(&format!("example-mass-s{s}"), o.seed, Abscissa::Delta, rows)?;
        res.check(Check::within(&format!("s={s} slope"), f.slope, target, tol));
        res.artifact(&format!("c08_example_mass_s{s}.csv"), fit_csv(&l, &f));
    }
    Ok(())
}

fn c09_focusing(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let c_f = 10.0;
    let ks = o.budget.pick(8..=13, 8..=11);
    let rs: Vec<f64> = (0..5).map(|i| 1.25 + 0.125 * i as f64).collect();
    let mut mass = Vec::new();
    let mut sup = Vec::new();
    for delta in dyadic(ks) {
        let (lo, hi) = focusing_bounds(delta, 3, c_f)?;
        let g = Grid::with_spacing(lo, hi, delta / 2.0)?;
        let f = focusing_field(delta, 3, c_f, &g)?;
        mass.push(row(delta, f.lp_norm(1.0)?, 0.0));
        let mut cfg = MaximalConfig::new(3, 1, delta, ParamGrid::fixed(vec![0.0, 0.0], &rs))?;
        cfg.search_lo = vec![-1.0 / 16.0];
        cfg.search_hi = vec![1.0 / 16.0];
        let best = cfg
            .params
            .samples
            .par_iter()
            .map(|p| maximal_value(&f, p, &cfg))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        sup.push(row(delta, best, 0.0));
    }
    let (l, f) = ladder("focusing-mass", o.seed, Abscissa::Delta, mass)?;
    res.check(Check::within("mass slope", f.slope, 2.5, 0.15));
    res.artifact("c09_focusing_mass.csv", fit_csv(&l, &f));
    let (l, f) = ladder("focusing-maximal", o.seed, Abscissa::Delta, sup)?;
    res.check(Check::within("sup slope", f.slope, 0.5, 0.1));
    res.artifact("c09_focusing_maximal.csv", fit_csv(&l, &f));
    Ok(())
}

/// The four finest dyadic scales allowed on a grid: ε ≥ 2·spacing.
fn finest_scales(spacing: f64) -> Vec<f64> {
    let k = (2.0 * spacing).log2().round() as i32;
    (0..4).map(|i| 2f64.powi(k + 3 - i)).collect()
}

fn c10_dimension(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let delta = 2f64.powi(-7);
    let mut csv = String::from("set,scale,count\n");
    let mut record = |name: &str, f: &ScalarField, target: f64, tol: f64, res: &mut CriterionResult| -> Result<()> {
        let b = box_count_dimension(f, &finest_scales(f.grid.max_spacing()))?;
        for (e, n) in b.scales.iter().zip(&b.counts) {
            writeln!(csv, "{name},{e},{n}").unwrap();
        }
        res.check(Check::within(name, b.fitted_dimension, target, tol));
        Ok(())
    };
    for (s_prime, target) in [(1usize, 2.0), (2, 2.9)] {
        let f = union_field(s_prime, delta)?;
        record(&format!("s'={s_prime} dimension"), &f, target, 0.25, res)?;
    }
    let h = o.budget.pick(1.0 / 128.0, 1.0 / 64.0);
    let g = Grid::cube(3, 1.0, h)?;
    // Half the voxel diagonal: the thinnest tube whose voxels leave no gaps.
    let seg = segment_field(&[-0.9, -0.3, 0.1], &[0.8, 0.5, -0.2], 0.5 * 3f64.sqrt() * h, &g)?;
    record("segment dimension", &seg, 1.0, 0.15, res)?;
    let cube = box_field(&[-0.5; 3], &[0.5; 3], &g)?;
    record("cube dimension", &cube, 3.0, 0.1, res)?;
    res.artifact("c10_box_counts.csv", csv);
    Ok(())
}

/// High0 ray on the cone boundary ξ₁ = 2κ|ξ̃| and the pure high1 ray.
pub fn cone_rays(cut: &CutoffSet) -> (Vec<f64>, Vec<f64>) {
    let mut h0 = vec![0.0; cut.d];
    h0[0] = 2.0 * cut.kappa;
    h0[cut.d - 1] = -1.0;
    let mut h1 = vec![0.0; cut.d];
    h1[cut.d - 1] = 1.0;
    (h0, h1)
}

/// Slope over the rows above the decay floor, with the number of rows kept.
pub fn censored_fit(l: &LadderResult) -> Result<(ScalingFit, usize)> {
    let rows: Vec<LadderRow> = l.rows.iter().filter(|r| r.value > DECAY_FLOOR).cloned().collect();
    let kept = rows.len();
    let c = LadderResult::new(&l.experiment_id, l.seed, l.abscissa, rows)?;
    Ok((fit_exponent(&c)?, kept))
}

fn c11_cone_contrast(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let cut = build_cutoffs(3, default_kappa(3))?;
    let radii = (4..=10).map(|k| 2f64.powi(k)).collect::<Vec<_>>();
    let (h0, h1) = cone_rays(&cut);
    let r = 0.5;
    let p0 = cone_decay_profile(&h0, r, &radii, &cut)?;
    let (f0, kept) = censored_fit(&p0)?;
    res.check(Check::at_most("high0 slope", f0.slope, -4.0));
    res.check(Check::at_least("high0 rows above floor", kept as f64, 4.0));
    let p1 = cone_decay_profile(&h1, r, &radii, &cut)?;
    let f1 = fit_exponent(&p1)?;
    res.check(Check::at_least("high1 slope", f1.slope, -1.0));
    res.artifact("c11_decay_high0.csv", fit_csv(&p0, &f0));
    res.artifact("c11_decay_high1.csv", fit_csv(&p1, &f1));
    let defect = partition_defect(&cut, o.budget.pick(100_000, 10_000), o.seed);
    res.check(Check::at_most("partition defect", defect, f64::EPSILON));
    let phase = phase_derivative_check(&cut, o.budget.pick(1_000_000, 100_000), o.seed);
    res.check(Check::at_most("phase violations", phase.violations as f64, 0.0));
    res.check(Check {
        name: "phase min ratio".into(),
        value: Some(phase.min_ratio),
        target: "reported".into(),
        pass: true,
    });
    Ok(())
}

fn c12_symbol(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let cut = build_cutoffs(3, default_kappa(3))?;
    let b = o.calibration.symbol_b;
    let reports: Vec<_> = (4..=9).map(|k| verify_symbol_conditions(3, b, k, &cut)).collect();
    let vol_dev = reports.iter().map(|r| r.vol_deviation).fold(0.0, f64::max);
    res.check(Check::at_most("volume deviation from 12", vol_dev, 1e-9));
    res.check(Check::at_most("(aa) max |γ^(j)|", reports[0].aa_max, b));
    res.check(Check::at_most("(aa) vs (3d+1)(2d)^4", reports[0].aa_max, 12960.0));
    let mut csv = String::from("k,deriv_max,u_factor,r_factor,xi_factor,passes\n");
    for r in &reports[..5] {
        res.check(Check::at_most(&format!("k={} deriv_max", r.k), r.deriv_max, b));
        writeln!(csv, "{},{},{},{},{},{}", r.k, r.deriv_max, r.u_factor, r.r_factor, r.xi_factor, r.passes).unwrap();
    }
    let worst_step = reports
        .windows(2)
        .map(|w| (w[0].deriv_max / w[1].deriv_max).max(w[1].deriv_max / w[0].deriv_max))
        .fold(1.0, f64::max);
    res.check(Check::at_most("level-to-level ratio", worst_step, 2.0));
    res.artifact("c12_symbol.csv", csv);
    Ok(())
}

/// The random field of index `i` on the domination grid.
pub fn domination_field(g: &Grid, i: u64, seed: u64, delta: f64) -> Result<ScalarField> {
    let mut s = CounterRng::new("domination-field", seed).stream(i);
    let n = g.voxel_count() as usize;
    match i % 4 {
        0 => ScalarField::dense(g.clone(), (0..n).map(|_| s.uniform()).collect()),
        1 => ScalarField::dense(
            g.clone(),
            (0..n).map(|_| if s.uniform() < 0.05 { -(1.0 - s.uniform()).ln() } else { 0.0 }).collect(),
        ),
        2 => {
            let c = domination_curve(&mut s);
            momentlab::field::tube_indicator_field(&c, delta, g)
        }
        _ => {
            let p: Vec<f64> = (0..3).map(|_| s.range(-0.8, 0.8)).collect();
            let w = s.range(0.1, 0.5);
            ScalarField::from_fn(g.clone(), |y| {
                let r2: f64 = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (w * w)).exp()
            })
        }
    }
}

fn domination_curve(s: &mut momentlab::rng::Stream) -> MomentCurve {
    pairs::random_curve(s, 3, 0.1, (0.5, 1.0))
}

/// Grid of the domination experiment: it contains every δ-tube of the
/// sampled curves.
pub fn domination_grid(delta: f64) -> Result<Grid> {
    Grid::with_spacing(vec![-1.25, -0.25, -1.25], vec![1.25, 1.25, 1.25], delta / 2.0)
}

/// max over fields and curves of tube_average / smooth_average, and the
/// per-pair ratios.
pub fn domination_ratios(seed: u64, fields: u64, curves: u64, cut: &CutoffSet) -> Result<Vec<f64>> {
    let delta = 0.125;
    let g = domination_grid(delta)?;
    let out: Vec<Vec<f64>> = (0..fields)
        .into_par_iter()
        .map(|i| {
            let f = domination_field(&g, i, seed, delta)?;
            let rng = CounterRng::new("domination-curve", seed).derive(&i.to_string());
            (0..curves)
                .map(|j| {
                    let c = domination_curve(&mut rng.stream(j));
                    let a = tube_average(&f, &c, delta)?;
                    let b = smooth_average(&f, &c.center.coords, c.scale, delta, cut)?;
                    Ok(if a == 0.0 { 0.0 } else { a / b })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

fn c13_smooth_domination(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let cut = build_cutoffs(3, default_kappa(3))?;
    let (nf, nc) = o.budget.pick((100, 20), (20, 10));
    let ratios = domination_ratios(o.seed, nf, nc, &cut)?;
    let c_dom = o.calibration.smooth_domination;
    let violations = ratios.iter().filter(|&&q| !(q <= c_dom)).count();
    res.check(Check::at_most("violations", violations as f64, 0.0));
    res.check(Check {
        name: "worst ratio".into(),
        value: Some(ratios.iter().cloned().fold(0.0, f64::max)),
        target: format!("reported (C_dom = {c_dom:.4})"),
        pass: true,
    });
    Ok(())
}

/// Worst Bernstein ratio per (s, p, R).
pub fn bernstein_table(seed: u64, trials: u64) -> Result<Vec<(usize, f64, f64, f64)>> {
    let mut out = Vec::new();
    for s in [1usize, 2] {
        for p in [2.0, 4.0] {
            for r in [8.0, 16.0, 32.0] {
                out.push((s, p, r, bernstein_report(s, r, p, trials, seed)?.worst_ratio));
            }
        }
    }
    Ok(out)
}

fn c14_bernstein(o: &SuiteOptions, res: &mut CriterionResult) -> Result<()> {
    let table = bernstein_table(o.seed, o.budget.pick(100, 20))?;
    let worst = table.iter().map(|t| t.3).fold(0.0, f64::max);
    res.check(Check::at_most("worst ratio", worst, o.calibration.bernstein));
    let mut csv = String::from("s,p,R,worst_ratio\n");
    for chunk in table.chunks(3) {
        let x: Vec<f64> = chunk.iter().map(|t| t.2.ln()).collect();
        let y: Vec<f64> = chunk.iter().map(|t| t.3.ln()).collect();
        let f = fit_line(&x, &y, &[1.0; 3])?;
        res.check(Check::within(&format!("s={} p={} R-slope", chunk[0].0, chunk[0].1), f.slope, 0.0, 0.1));
        for t in chunk {
            writeln!(csv, "{},{},{},{}", t.0, t.1, t.2, t.3).unwrap();
        }
    }
    res.artifact("c14_bernstein.csv", csv);
    Ok(())
}
