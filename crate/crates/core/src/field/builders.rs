//! Constructors for the test fields of the sharpness experiments.

use super::raster::{mono_range, rasterize, MomentPiece, PieceSet, PredicateSet};
use super::{Grid, ScalarField};
use crate::curve::MomentCurve;
use crate::error::{Error, Result};

/// Half-width of the translation interval I₁.
pub const TAIL_HALF_WIDTH: f64 = 0.25;
/// Range of dilations I₂.
pub const SCALE_RANGE: (f64, f64) = (0.5, 2.0);

/// Net and tube sizes for the union sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionConfig {
    /// Net step on the dilation interval, in units of δ.
    pub step_factor: f64,
    /// Tube radius around each net member, in units of δ.
    pub inflation: f64,
}

impl Default for UnionConfig {
    fn default() -> Self {
        UnionConfig {
            step_factor: 0.5,
            inflation: 1.0,
        }
    }
}

impl UnionConfig {
    /// Net step δ and tube radius 10dδ.
    pub fn coarse(d: usize) -> Self {
        UnionConfig {
            step_factor: 1.0,
            inflation: 10.0 * d as f64,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    Ok(())
}

/// Indicator of the δ-neighborhood of a curve.
pub fn tube_indicator_field(c: &MomentCurve, delta: f64, grid: &Grid) -> Result<ScalarField> {
    check_delta(delta)?;
    if c.dim() != grid.dim() {
        return Err(Error::InvalidInput("curve and grid dimensions differ".into()));
    }
    grid.check_resolution(delta)?;
    let set = PieceSet {
        pieces: vec![MomentPiece::tube(&c.center.coords, c.scale, delta)],
        clip: None,
    };
    Ok(rasterize(grid, &set))
}

fn union_pieces(s_prime: usize, d: usize, delta: f64, cfg: &UnionConfig) -> Result<PieceSet> {
    check_delta(delta)?;
    if s_prime < 1 || s_prime > d {
        return Err(Error::OutOfRange {
            name: "s_prime",
            value: s_prime as f64,
            range: format!("[1, {d}]"),
        });
    }
    if !(cfg.step_factor > 0.0 && cfg.inflation > 0.0) {
        return Err(Error::InvalidConfiguration(format!("{cfg:?}")));
    }
    let s = d + 1 - s_prime;
    let mut slack = vec![0.0; d];
    for a in &mut slack[s..] {
        *a = TAIL_HALF_WIDTH;
    }
    let (r0, r1) = SCALE_RANGE;
    let n = ((r1 - r0) / (cfg.step_factor * delta)).ceil() as usize + 1;
    let pieces = (0..n)
        .map(|j| MomentPiece {
            center: vec![0.0; d],
            scale: r0 + (r1 - r0) * j as f64 / (n - 1) as f64,
            slack: slack.clone(),
            radius: cfg.inflation * delta,
        })
        .collect();
    Ok(PieceSet { pieces, clip: None })
}

/// Bounding box of the union set, padded by one δ.
pub fn union_set_bounds(s_prime: usize, d: usize, delta: f64, cfg: &UnionConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = union_pieces(s_prime, d, delta, cfg)?.bounds();
    Ok((lo.iter().map(|v| v - delta).collect(), hi.iter().map(|v| v + delta).collect()))
}

/// Indicator of the union of tubes H((0, x̲), r) over x̲ ∈ I₁^{s'−1} and a net
/// of r ∈ I₂. The translations x̲ occupy the last s'−1 coordinates.
pub fn union_set_field(s_prime: usize, delta: f64, grid: &Grid, cfg: &UnionConfig) -> Result<ScalarField> {
    let set = union_pieces(s_prime, grid.dim(), delta, cfg)?;
    grid.check_resolution(delta)?;
    Ok(rasterize(grid, &set))
}

/// Indicator of H_δ(0, 1) ∩ B(0, c_f·√δ).
pub fn focusing_field(delta: f64, d: usize, c_f: f64, grid: &Grid) -> Result<ScalarField> {
    check_delta(delta)?;
    if grid.dim() != d {
        return Err(Error::InvalidInput("grid dimension differs from d".into()));
    }
    if !(c_f > 0.0) {
        return Err(Error::InvalidConfiguration(format!("focusing constant {c_f}")));
    }
    grid.check_resolution(delta)?;
    let set = PieceSet {
        pieces: vec![MomentPiece::tube(&vec![0.0; d], 1.0, delta)],
        clip: Some((vec![0.0; d], c_f * delta.sqrt())),
    };
    Ok(rasterize(grid, &set))
}

/// Bounding box of the focusing set, padded by one δ. Points of the curve
/// inside the ball have |t| ≤ c_f·√δ + δ since |γ(t)| ≥ |t|.
pub fn focusing_bounds(delta: f64, d: usize, c_f: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_delta(delta)?;
    let rad = c_f * delta.sqrt();
    let t = (rad + delta).min(1.0);
    Ok((0..d)
        .map(|i| {
            let (a, b) = mono_range(i + 1, -t, t);
            ((a - delta).max(-rad) - delta, (b + delta).min(rad) + delta)
        })
        .unzip())
}

/// Indicator of the ρ-neighborhood of the segment [a, b].
pub fn segment_field(a: &[f64], b: &[f64], rho: f64, grid: &Grid) -> Result<ScalarField> {
    check_delta(rho)?;
    let d = grid.dim();
    if a.len() != d || b.len() != d {
        return Err(Error::InvalidInput("segment endpoints must match grid dimension".into()));
    }
    let ab: Vec<f64> = (0..d).map(|i| b[i] - a[i]).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let set = PredicateSet {
        lo: (0..d).map(|i| a[i].min(b[i]) - rho).collect(),
        hi: (0..d).map(|i| a[i].max(b[i]) + rho).collect(),
        pred: |y: &[f64]| {
            let t = if len2 > 0.0 {
                ((0..d).map(|i| (y[i] - a[i]) * ab[i]).sum::<f64>() / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (0..d).map(|i| (y[i] - a[i] - t * ab[i]).powi(2)).sum::<f64>() <= rho * rho
        },
    };
    Ok(rasterize(grid, &set))
}

/// Indicator of the axis-aligned box [lo, hi].
pub fn box_field(lo: &[f64], hi: &[f64], grid: &Grid) -> Result<ScalarField> {
    if lo.len() != grid.dim() || hi.len() != grid.dim() {
        return Err(Error::InvalidInput("box must match grid dimension".into()));
    }
    let set = PredicateSet {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        pred: |_: &[f64]| true,
    };
    Ok(rasterize(grid, &set))
}
