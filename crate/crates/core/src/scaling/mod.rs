//! Ladders of measurements, log-log exponent fits and box counting.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;
use std::fmt::Write as _;

/// What the first ladder column measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Abscissa {
    /// Tube thickness; rows run from large to small δ.
    Delta,
    /// Frequency magnitude; rows run from small to large R.
    Frequency,
}

impl Abscissa {
    pub fn label(self) -> &'static str {
        match self {
            Abscissa::Delta => "delta",
            Abscissa::Frequency => "frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderRow {
    pub delta: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderResult {
    pub experiment_id: String,
    pub seed: u64,
    pub abscissa: Abscissa,
    pub rows: Vec<LadderRow>,
}

impl LadderResult {
    pub fn new(experiment_id: &str, seed: u64, abscissa: Abscissa, rows: Vec<LadderRow>) -> Result<Self> {
        let l = LadderResult {
            experiment_id: experiment_id.to_string(),
            seed,
            abscissa,
            rows,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            let ordered = match self.abscissa {
                Abscissa::Delta => w[1].delta < w[0].delta,
                Abscissa::Frequency => w[1].delta > w[0].delta,
            };
            if !ordered {
                return Err(Error::InvalidInput(format!("{} column out of order", self.abscissa.label())));
            }
        }
        if self.rows.iter().any(|r| !(r.value >= 0.0) || !(r.stderr >= 0.0)) {
            return Err(Error::InvalidInput("ladder values must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},value,stderr\n", self.abscissa.label());
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.delta, r.value, r.stderr).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
}

/// Weighted least squares line through (x, y).
pub fn fit_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<ScalingFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return Err(Error::FitDomain(format!("{n} points")));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::FitDomain("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    // Normalized weights so the residual scale sets the error.
    let slope_stderr = if n > 2 { (sse / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}

/// Fit log value against log abscissa. Rows at abscissa 0 are skipped; the
/// weights are 1/σ² with σ the relative standard error, unless some row has
/// no error estimate.
pub fn fit_exponent(ladder: &LadderResult) -> Result<ScalingFit> {
    let rows: Vec<&LadderRow> = ladder.rows.iter().filter(|r| r.delta > 0.0).collect();
    if rows.len() < 4 {
        return Err(Error::FitDomain(format!("{} usable rows, need 4", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| !(r.value > 0.0)) {
        return Err(Error::FitDomain(format!("nonpositive value {} at {}", r.value, r.delta)));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.value.ln()).collect();
    let w: Vec<f64> = if rows.iter().all(|r| r.stderr > 0.0) {
        rows.iter().map(|r| (r.value / r.stderr).powi(2)).collect()
    } else {
        vec![1.0; rows.len()]
    };
    fit_line(&x, &y, &w)
}

/// Evaluate a measurement at each abscissa. Failed points are dropped; more
/// than 20% failures fails the ladder.
pub fn run_ladder<F>(id: &str, seed: u64, abscissa: Abscissa, points: &[f64], measure: F) -> Result<LadderResult>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    if points.is_empty() {
        return Err(Error::InvalidConfiguration("empty ladder".into()));
    }
    let results: Vec<Result<(f64, f64)>> = points.par_iter().map(|&p| measure(p)).collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (&p, r) in points.iter().zip(results) {
        match r {
            Ok((value, stderr)) => rows.push(LadderRow { delta: p, value, stderr }),
            Err(_) => failed += 1,
        }
    }
    if failed * 5 > points.len() {
        return Err(Error::LadderFailed {
            failed,
            total: points.len(),
        });
    }
    LadderResult::new(id, seed, abscissa, rows)
}

/// Exponent targets for given (s, d, p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub s: usize,
    pub s_prime: usize,
    pub d: usize,
    pub p: f64,
    pub tube_volume: f64,
    pub tangent_intersection: f64,
    pub transversal_intersection: f64,
    pub field_mass: f64,
    /// Exponent α in the maximal estimate, without the ε loss.
    pub alpha: f64,
    pub focusing_maximal: f64,
    pub focusing_mass: f64,
    pub dimension: f64,
    /// Threshold p_d above which the estimate is sharp.
    pub p_threshold: f64,
    /// The constant does not depend on ε.
    pub absolute_constant: bool,
    /// p ≥ 2s and p ≥ 3.
    pub focusing_range: bool,
}

pub fn predicted_exponents(s: usize, d: usize, p: f64) -> Result<Prediction> {
    if d < 2 || s < 1 || s > d || !(p >= 1.0) {
        return Err(Error::InvalidConfiguration(format!("s = {s}, d = {d}, p = {p}")));
    }
    let s_prime = d + 1 - s;
    let df = d as f64;
    Ok(Prediction {
        s,
        s_prime,
        d,
        p,
        tube_volume: df - 1.0,
        tangent_intersection: df - 0.5,
        transversal_intersection: df,
        field_mass: if s >= 2 { s as f64 - 2.0 } else { 0.0 },
        alpha: if s >= 2 { (s as f64 - 2.0) / p } else { 0.0 },
        focusing_maximal: 0.5,
        focusing_mass: df - 0.5,
        dimension: ((s_prime + 1).min(d)) as f64,
        p_threshold: if s == d { 3.0 } else { 4.0 * df - 2.0 },
        absolute_constant: s == 1,
        focusing_range: p >= 2.0 * s as f64 && p >= 3.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountResult {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub fitted_dimension: f64,
}

/// Count ε-boxes (aligned at the origin) holding a positive voxel center,
/// and fit log N against log(1/ε).
pub fn box_count_dimension(f: &ScalarField, scales: &[f64]) -> Result<BoxCountResult> {
    let g = &f.grid;
    let d = g.dim();
    if scales.len() < 4 {
        return Err(Error::InvalidConfiguration("need at least 4 scales".into()));
    }
    let extent = (0..d).map(|i| g.hi[i] - g.lo[i]).fold(0.0, f64::max);
    let floor = 2.0 * g.max_spacing() * (1.0 - 1e-12);
    if let Some(e) = scales.iter().find(|&&e| !(e >= floor && e <= extent / 4.0)) {
        return Err(Error::InvalidConfiguration(format!(
            "scale {e} outside [{floor}, {}]",
            extent / 4.0
        )));
    }
    if d > 8 {
        return Err(Error::InvalidDimension(d));
    }
    let counts: Vec<u64> = scales
        .par_iter()
        .map(|&eps| count_boxes(f, eps))
        .collect::<Result<Vec<_>>>()?;
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::EmptySet);
    }
    let x: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let y: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = fit_line(&x, &y, &vec![1.0; x.len()])?;
    Ok(BoxCountResult {
        scales: scales.to_vec(),
        counts,
        fitted_dimension: fit.slope,
    })
}

fn count_boxes(f: &ScalarField, eps: f64) -> Result<u64> {
    let g = &f.grid;
    let d = g.dim();
    let lead_shape = &g.shape[..d - 1];
    // Box index per voxel along each axis, offset to be nonnegative.
    let index: Vec<Vec<u16>> = (0..d)
        .map(|axis| {
            let base = (g.lo[axis] / eps).floor();
            (0..g.shape[axis])
                .map(|i| ((g.center(axis, i) / eps).floor() - base) as u16)
                .collect()
        })
        .collect();
    if index.iter().any(|v| v.last().copied().unwrap_or(0) == u16::MAX) {
        return Err(Error::InvalidConfiguration(format!("scale {eps} too fine for box indexing")));
    }
    let mut boxes: HashSet<u128> = HashSet::new();
    let mut lead = vec![0usize; d - 1];
    f.for_each_run(|row, a, b, v| {
        if v <= 0.0 {
            return;
        }
        let mut rem = row;
        for k in (0..d - 1).rev() {
            lead[k] = rem % lead_shape[k];
            rem /= lead_shape[k];
        }
        let mut key: u128 = 0;
        for k in 0..d - 1 {
            key = (key << 16) | index[k][lead[k]] as u128;
        }
        let last = &index[d - 1];
        let (first, end) = (last[a], last[b - 1]);
        for j in first..=end {
            boxes.insert((key << 16) | j as u128);
        }
    });
    Ok(boxes.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{box_field, segment_field, Grid};

    fn ladder(values: &[(f64, f64)]) -> LadderResult {
        let rows = values
            .iter()
            .map(|&(delta, value)| LadderRow {
                delta,
                value,
                stderr: 0.0,
            })
            .collect();
        LadderResult::new("t", 1, Abscissa::Delta, rows).unwrap()
    }

    #[test]
    fn exact_power_laws() {
        let l = ladder(&(3..9).map(|k| (2f64.powi(-k), 2f64.powi(-2 * k))).collect::<Vec<_>>());
        let fit = fit_exponent(&l).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let c = ladder(&(3..9).map(|k| (2f64.powi(-k), 0.7)).collect::<Vec<_>>());
        assert!(fit_exponent(&c).unwrap().slope.abs() < 1e-12);
        let bad = ladder(&[(0.5, 1.0), (0.25, 0.0), (0.125, 1.0), (0.0625, 1.0)]);
        assert!(matches!(fit_exponent(&bad), Err(Error::FitDomain(_))));
    }

    #[test]
    fn noisy_fit_within_two_stderr() {
        let mut rng = crate::rng::CounterRng::new("fit-noise", 1).stream(0);
        let mut hits = 0;
        for _ in 0..200 {
            let rows: Vec<LadderRow> = (3..24)
                .map(|k| {
                    let d = 2f64.powi(-k);
                    LadderRow {
                        delta: d,
                        value: d.powf(1.5) * (1.0 + 0.01 * rng.normal()),
                        stderr: 0.0,
                    }
                })
                .collect();
            let fit = fit_exponent(&LadderResult::new("n", 1, Abscissa::Delta, rows).unwrap()).unwrap();
            if (fit.slope - 1.5).abs() <= 2.0 * fit.slope_stderr {
                hits += 1;
            }
        }
        // Student t with 19 degrees of freedom puts about 94% within 2 stderr.
        assert!(hits >= 175, "{hits}");
    }

    #[test]
    fn ladder_ordering_and_failures() {
        let rows = vec![
            LadderRow {
                delta: 0.25,
                value: 1.0,
                stderr: 0.0,
            },
            LadderRow {
                delta: 0.5,
                value: 1.0,
                stderr: 0.0,
            },
        ];
        assert!(LadderResult::new("x", 0, Abscissa::Delta, rows.clone()).is_err());
        assert!(LadderResult::new("x", 0, Abscissa::Frequency, rows).is_ok());
        assert!(matches!(
            run_ladder("x", 0, Abscissa::Delta, &[], |_| Ok((1.0, 0.0))),
            Err(Error::InvalidConfiguration(_))
        ));
        let pts = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        let r = run_ladder("x", 0, Abscissa::Delta, &pts, |d| {
            if d == 0.25 {
                Err(Error::EmptySet)
            } else {
                Ok((d, 0.0))
            }
        })
        .unwrap();
        assert_eq!(r.rows.len(), 4);
        let f = run_ladder("x", 0, Abscissa::Delta, &pts, |d| {
            if d < 0.2 {
                Err(Error::EmptySet)
            } else {
                Ok((d, 0.0))
            }
        });
        assert!(matches!(f, Err(Error::LadderFailed { failed: 3, total: 5 })));
        assert_eq!(r.to_csv().lines().next(), Some("delta,value,stderr"));
    }

    #[test]
    fn predictions() {
        let p = predicted_exponents(3, 3, 3.0).unwrap();
        assert!((p.alpha - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.p_threshold, 3.0);
        let p = predicted_exponents(2, 3, 10.0).unwrap();
        assert_eq!((p.field_mass, p.dimension, p.p_threshold), (0.0, 3.0, 10.0));
        let p = predicted_exponents(1, 3, 4.0).unwrap();
        assert!(p.absolute_constant && p.alpha == 0.0 && p.dimension == 3.0);
        assert!(predicted_exponents(4, 3, 2.0).is_err());
    }

    #[test]
    fn box_counting_controls() {
        let g = Grid::cube(3, 1.0, 1.0 / 128.0).unwrap();
        let seg = segment_field(&[-0.9, -0.3, 0.1], &[0.8, 0.5, -0.2], 1.0 / 128.0, &g).unwrap();
        let scales: Vec<f64> = (2..7).map(|k| 2f64.powi(-k)).collect();
        let r = box_count_dimension(&seg, &scales).unwrap();
        assert!((r.fitted_dimension - 1.0).abs() < 0.15, "{r:?}");
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
        let cube = box_field(&[-0.5; 3], &[0.5; 3], &g).unwrap();
        let r = box_count_dimension(&cube, &scales).unwrap();
        assert!((r.fitted_dimension - 3.0).abs() < 0.1, "{r:?}");
        assert!(matches!(
            box_count_dimension(&ScalarField::zeros(g.clone()), &scales),
            Err(Error::EmptySet)
        ));
        assert!(box_count_dimension(&cube, &[1.0 / 256.0, 0.1, 0.2, 0.3]).is_err());
    }
}
