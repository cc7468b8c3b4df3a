//! Volumes of δ-neighborhoods and of their intersections, and the analytic bound.

use crate::calibration::calibration;
use crate::curve::{within_offset, MomentCurve};
use crate::error::{Error, Result};
use crate::rng::{CounterRng, Stream};
use crate::tangency::{is_tangent, PairInvariants, COINCIDENCE_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MIN_SAMPLES: u64 = 10_000;
const CHUNK: u64 = 1 << 14;
/// Minimum parameter distance for the perturbed-tangency experiment.
pub const MIN_DBAR_TANGENT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    MonteCarloBox,
    TubeParametrized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub hits: u64,
    pub method: VolumeMethod,
}

impl VolumeEstimate {
    fn from_hits(hits: u64, n: u64, region: f64, method: VolumeMethod) -> Self {
        let p = hits as f64 / n as f64;
        let (value, stderr) = if hits == 0 {
            (0.0, 3.0 / n as f64 * region)
        } else {
            (p * region, region * (p * (1.0 - p) / n as f64).sqrt())
        };
        VolumeEstimate {
            value,
            stderr,
            n_samples: n,
            hits,
            method,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Tangent,
    Transversal,
    NearCoincident,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub bound_value: f64,
    pub constant_calibrated: f64,
    pub regime: Regime,
}

/// Volume of the unit ball in R^k.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// max over |v| ≤ u of |γ̃'(v)|, the derivative of the tail coordinates.
fn tail_slope(u: f64, d: usize) -> f64 {
    (2..=d)
        .map(|i| {
            let g = i as f64 * u.abs().powi(i as i32 - 1);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Cross-section radius factor C with H_δ(c) ⊂ { c₁(u) + (0, s̃) : |u| ≤ 1 + δ/r, |s̃| ≤ Cδ }.
pub fn covering_constant(c: &MomentCurve, delta: f64) -> f64 {
    let u = 1.0 + delta / c.scale;
    (1.0 + tail_slope(u, c.dim()).powi(2)).sqrt() * (1.0 + 1e-9)
}

/// Sampling region y = x + (r u, rγ̃(u) + s̃), |u| ≤ U, |s̃| ≤ ρ, of volume r·2U·|B^{d−1}(ρ)|.
#[derive(Debug, Clone)]
pub struct TubeRegion {
    pub curve: MomentCurve,
    pub u_max: f64,
    pub radius: f64,
    pub volume: f64,
}

impl TubeRegion {
    pub fn new(c: &MomentCurve, delta: f64) -> Self {
        let d = c.dim();
        let u_max = 1.0 + delta / c.scale;
        let radius = covering_constant(c, delta) * delta;
        let volume = c.scale * 2.0 * u_max * unit_ball_volume(d - 1) * radius.powi(d as i32 - 1);
        TubeRegion {
            curve: c.clone(),
            u_max,
            radius,
            volume,
        }
    }

    /// Draws in normalized coordinates so nearby radii reuse the same numbers.
    #[inline]
    pub fn sample(&self, s: &mut Stream, out: &mut [f64]) {
        let d = out.len();
        let u = self.u_max * s.range(-1.0, 1.0);
        let mut w = [0.0f64; 16];
        unit_ball_point(s, &mut w[..d - 1]);
        let r = self.curve.scale;
        let x = &self.curve.center.coords;
        let mut up = u;
        out[0] = x[0] + r * u;
        for i in 1..d {
            up *= u;
            out[i] = x[i] + r * up + self.radius * w[i - 1];
        }
    }
}

/// Uniform point in the unit ball of dimension out.len().
#[inline]
pub fn unit_ball_point(s: &mut Stream, out: &mut [f64]) {
    match out.len() {
        0 => {}
        1 => out[0] = s.range(-1.0, 1.0),
        2 => {
            let rad = s.uniform().sqrt();
            let th = 2.0 * std::f64::consts::PI * s.uniform();
            out[0] = rad * th.cos();
            out[1] = rad * th.sin();
        }
        k => {
            let mut n2 = 0.0;
            for o in out.iter_mut() {
                *o = s.normal();
                n2 += *o * *o;
            }
            let rad = s.uniform().powf(1.0 / k as f64) / n2.sqrt().max(1e-300);
            for o in out.iter_mut() {
                *o *= rad;
            }
        }
    }
}

/// Axis-aligned box containing H_ρ(c).
pub fn neighborhood_bounds(c: &MomentCurve, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let d = c.dim();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        let (a, b) = if i % 2 == 0 { (-1.0, 1.0) } else { (0.0, 1.0) };
        lo[i] = c.center.coords[i] + c.scale * a - rho;
        hi[i] = c.center.coords[i] + c.scale * b + rho;
    }
    (lo, hi)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.25 {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

fn check_samples(n: u64) -> Result<()> {
    if n >= MIN_SAMPLES {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!("need at least {MIN_SAMPLES} samples, got {n}")))
    }
}

/// Count indices in 0..n for which `hit` holds; chunked so any worker split gives the same total.
fn count_hits<F>(n: u64, hit: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let start = k * CHUNK;
            let end = (start + CHUNK).min(n);
            (start..end).filter(|&i| hit(i)).count() as u64
        })
        .sum()
}

#[inline]
fn member(y: &[f64], c: &MomentCurve, rho: f64) -> bool {
    let mut a = [0.0f64; 16];
    for i in 0..y.len() {
        a[i] = y[i] - c.center.coords[i];
    }
    within_offset(&a[..y.len()], c.scale, rho)
}

pub fn tube_volume(c: &MomentCurve, delta: f64, n: u64, seed: u64) -> Result<VolumeEstimate> {
    tube_volume_with(c, delta, n, seed, VolumeMethod::TubeParametrized)
}

pub fn tube_volume_with(c: &MomentCurve, delta: f64, n: u64, seed: u64, method: VolumeMethod) -> Result<VolumeEstimate> {
    check_delta(delta)?;
    check_samples(n)?;
    let d = c.dim();
    let rng = CounterRng::new("tube-volume", seed);
    match method {
        VolumeMethod::TubeParametrized => {
            let region = TubeRegion::new(c, delta);
            let hits = count_hits(n, |i| {
                let mut y = [0.0f64; 16];
                region.sample(&mut rng.stream(i), &mut y[..d]);
                member(&y[..d], c, delta)
            });
            Ok(VolumeEstimate::from_hits(hits, n, region.volume, method))
        }
        VolumeMethod::MonteCarloBox => {
            let (lo, hi) = neighborhood_bounds(c, delta);
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let hits = count_hits(n, |i| {
                let mut s = rng.stream(i);
                let mut y = [0.0f64; 16];
                for k in 0..d {
                    y[k] = s.range(lo[k], hi[k]);
                }
                member(&y[..d], c, delta)
            });
            Ok(VolumeEstimate::from_hits(hits, n, vol, method))
        }
    }
}

fn check_pair(c1: &MomentCurve, c2: &MomentCurve) -> Result<()> {
    if c1.dim() != c2.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if c1.params().iter().zip(c2.params()).all(|(a, b)| (a - b).abs() < COINCIDENCE_TOL) {
        return Err(Error::DegeneratePair);
    }
    Ok(())
}

/// L^d(H_δ(c1) ∩ H_δ(c2)) by sampling the tube parametrization of c1.
pub fn intersection_volume(c1: &MomentCurve, c2: &MomentCurve, delta: f64, n: u64, seed: u64) -> Result<VolumeEstimate> {
    check_delta(delta)?;
    check_samples(n)?;
    check_pair(c1, c2)?;
    Ok(intersection_estimate(c1, c2, delta, n, seed))
}

fn intersection_estimate(c1: &MomentCurve, c2: &MomentCurve, delta: f64, n: u64, seed: u64) -> VolumeEstimate {
    let d = c1.dim();
    let rng = CounterRng::new("intersection-volume", seed);
    let region = TubeRegion::new(c1, delta);
    let (lo, hi) = neighborhood_bounds(c2, delta);
    let hits = count_hits(n, |i| {
        let mut y = [0.0f64; 16];
        region.sample(&mut rng.stream(i), &mut y[..d]);
        let y = &y[..d];
        if y.iter().zip(lo.iter().zip(&hi)).any(|(v, (a, b))| v < a || v > b) {
            return false;
        }
        member(y, c2, delta) && member(y, c1, delta)
    });
    VolumeEstimate::from_hits(hits, n, region.volume, VolumeMethod::TubeParametrized)
}

/// Intersection volume after translating c1 by `offset`, for an exactly tangent pair.
pub fn perturbed_tangency_volume(
    c1: &MomentCurve,
    c2: &MomentCurve,
    offset: &[f64],
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    check_delta(delta)?;
    check_samples(n)?;
    check_pair(c1, c2)?;
    let d = c1.dim();
    if offset.len() != d {
        return Err(Error::InvalidConfiguration("offset dimension mismatch".into()));
    }
    let norm = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cap = delta / (1000.0 * d as f64);
    if norm > cap {
        return Err(Error::InvalidConfiguration(format!(
            "perturbation {norm:e} exceeds delta/(1000 d) = {cap:e}"
        )));
    }
    let inv = crate::tangency::pair_invariants(c1, c2)?;
    if is_tangent(c1, c2, 1e-9)?.is_none() || inv.dbar < MIN_DBAR_TANGENT {
        return Err(Error::InvalidConfiguration(
            "pair must be exactly tangent with parameter distance of order one".into(),
        ));
    }
    let center: Vec<f64> = c1.center.coords.iter().zip(offset).map(|(a, b)| a + b).collect();
    let moved = MomentCurve::from_parts(&center, c1.scale)?;
    Ok(intersection_estimate(&moved, c2, delta, n, seed))
}

/// δ^d / √((δ + Δ̄)(δ + d̄)) with the regime tag.
pub fn analytic_intersection_bound(inv: &PairInvariants, delta: f64) -> BoundEvaluation {
    let d = inv.deltas.len() as i32 + 1;
    let bound_value = delta.powi(d) / ((delta + inv.delta_bar) * (delta + inv.dbar)).sqrt();
    let regime = if inv.dbar <= delta {
        Regime::NearCoincident
    } else if inv.delta_bar <= delta {
        Regime::Tangent
    } else {
        Regime::Transversal
    };
    BoundEvaluation {
        bound_value,
        constant_calibrated: calibration().bound_constant,
        regime,
    }
}
