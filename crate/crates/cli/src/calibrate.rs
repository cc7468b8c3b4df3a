//! Fit the frozen constants on the calibration seed set. Each constant is the
//! extreme observed value times a fixed margin.

use crate::acceptance::{bernstein_table, domination_ratios, dominance_samples};
use crate::pairs::random_curve;
use momentlab::calibration::Calibration;
use momentlab::field::{tube_indicator_field, Grid};
use momentlab::maximal::tube_average;
use momentlab::multiplier::{build_cutoffs, default_kappa, verify_symbol_conditions};
use momentlab::rng::CounterRng;
use momentlab::tube::neighborhood_bounds;
use momentlab::{tube_volume, MomentCurve, Point, Result};
use rayon::prelude::*;
use std::fmt::Write as _;

pub const UPPER_MARGIN: f64 = 1.5;
pub const LOWER_MARGIN: f64 = 0.8;

/// min and max of L³(H_δ)/δ² over random curves with scale in [1/2, 2].
pub fn tube_ratios(seed: u64, curves: u64, n: u64) -> Result<(f64, f64)> {
    let rng = CounterRng::new("calibrate-tube", seed);
    let ratios = (0..curves)
        .into_par_iter()
        .map(|i| {
            let c = random_curve(&mut rng.stream(i), 3, 0.5, (0.5, 2.0));
            (3..=8)
                .map(|k| {
                    let d = 2f64.powi(-k);
                    Ok(tube_volume(&c, d, n, seed.wrapping_add(i))?.value / (d * d))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<f64> = ratios.into_iter().flatten().collect();
    Ok((all.iter().cloned().fold(f64::INFINITY, f64::min), all.iter().cloned().fold(0.0, f64::max)))
}

/// Largest two-sided ratio of tube averages of the indicator of H_{2δ}(c)
/// between c and a curve whose parameters moved by at most δ.
pub fn neighborhood_factor(seed: u64, trials: u64) -> Result<f64> {
    let rng = CounterRng::new("calibrate-neighborhood", seed);
    let worst = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut s = rng.stream(i);
            let delta = if i % 2 == 0 { 1.0 / 16.0 } else { 1.0 / 32.0 };
            let c = random_curve(&mut s, 3, 0.25, (0.5, 2.0));
            let (lo, hi) = neighborhood_bounds(&c, 5.0 * delta);
            let g = Grid::with_spacing(lo, hi, delta / 2.0)?;
            let f = tube_indicator_field(&c, 2.0 * delta, &g)?;
            let moved = perturb(&c, delta, &mut s)?;
            let a = tube_average(&f, &c, delta)?;
            let b = tube_average(&f, &moved, delta)?;
            Ok((a / b).max(b / a))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(1.0, f64::max))
}

/// Move (x, r) by a random vector of length at most δ.
pub fn perturb(c: &MomentCurve, delta: f64, s: &mut momentlab::rng::Stream) -> Result<MomentCurve> {
    let d = c.dim();
    let v: Vec<f64> = (0..=d).map(|_| s.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let len = delta * s.uniform();
    let coords = c.center.coords.iter().zip(&v).map(|(x, e)| x + len * e / norm).collect();
    MomentCurve::new(Point { coords }, c.scale + len * v[d] / norm)
}

/// Calibrated constants and a CSV of the raw extremes.
pub fn calibrate(seed: u64) -> Result<(Calibration, String)> {
    let mut csv = String::from("constant,observed,frozen\n");
    let mut put = |name: &str, observed: f64, frozen: f64| {
        writeln!(csv, "{name},{observed},{frozen}").unwrap();
        frozen
    };

    let dom = dominance_samples(seed, 100, 200_000)?;
    let worst_bound = dom.iter().map(|s| s.2 / s.4).fold(0.0, f64::max);
    let bound_constant = put("bound_constant", worst_bound, UPPER_MARGIN * worst_bound);

    let (lo, hi) = tube_ratios(seed, 20, 200_000)?;
    let tube_lower = put("tube_lower", lo, LOWER_MARGIN * lo);
    let tube_upper = put("tube_upper", hi, UPPER_MARGIN * hi);

    let cut = build_cutoffs(3, default_kappa(3))?;
    let ratios = domination_ratios(seed, 100, 20, &cut)?;
    let worst_dom = ratios.iter().cloned().fold(0.0, f64::max);
    let smooth_domination = put("smooth_domination", worst_dom, UPPER_MARGIN * worst_dom);

    let worst_bern = bernstein_table(seed, 100)?.iter().map(|t| t.3).fold(0.0, f64::max);
    let bernstein = put("bernstein", worst_bern, UPPER_MARGIN * worst_bern);

    let worst_symbol = (4..=9)
        .map(|k| verify_symbol_conditions(3, f64::INFINITY, k, &cut).deriv_max)
        .fold(0.0, f64::max);
    let symbol_b = put("symbol_b", worst_symbol, 2.0 * worst_symbol);

    let worst_nb = neighborhood_factor(seed, 40)?;
    let neighborhood = put("neighborhood", worst_nb, UPPER_MARGIN * worst_nb);

    Ok((
        Calibration {
            seed,
            bound_constant,
            tube_lower,
            tube_upper,
            smooth_domination,
            bernstein,
            symbol_b,
            neighborhood,
        },
        csv,
    ))
}
