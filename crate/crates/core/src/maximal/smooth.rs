//! The smoothed averaging operator
//! χ₁(r)·∬ f(x + rγ(u) + (0, t̃)) ψ_δ(t̃) χ₀(u) dt̃ du
//! for piecewise constant f.
//!
//! For fixed u the first coordinate picks one slab of voxels and the t̃
//! integral over a voxel factors into differences of the ψ₁ distribution
//! function. The u integral is split at slab boundaries so each piece is
//! smooth, then done by Gauss-Legendre.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::multiplier::{chi0, chi1, CutoffSet};
use crate::quadrature::gauss_legendre;

const ORDER: usize = 4;

pub fn smooth_average(f: &ScalarField, x: &[f64], r: f64, delta: f64, cut: &CutoffSet) -> Result<f64> {
    let d = f.dim();
    if x.len() != d || cut.d != d {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidDelta(delta));
    }
    f.grid.check_resolution(delta)?;
    let c1 = chi1(r);
    if c1 == 0.0 {
        return Ok(0.0);
    }
    let g = &f.grid;
    let h0 = g.spacing[0];
    let u_lo = ((g.lo[0] - x[0]) / r).max(-2.0);
    let u_hi = ((g.hi[0] - x[0]) / r).min(2.0);
    if u_lo >= u_hi {
        return Ok(0.0);
    }
    let (nodes, weights) = gauss_legendre(ORDER);
    let reach = cut.psi.extent * delta;
    let i_first = (((x[0] + r * u_lo - g.lo[0]) / h0).floor().max(0.0)) as usize;
    let i_last = ((((x[0] + r * u_hi - g.lo[0]) / h0).ceil() as usize).min(g.shape[0])).max(i_first);
    let mut wbuf: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut first = vec![0usize; d];
    let mut total = 0.0;
    for i0 in i_first..i_last {
        let ua = ((g.lo[0] + i0 as f64 * h0 - x[0]) / r).max(u_lo);
        let ub = ((g.lo[0] + (i0 + 1) as f64 * h0 - x[0]) / r).min(u_hi);
        if ua >= ub {
            continue;
        }
        // Sub-panels so the cross-section moves by at most one voxel per panel.
        let umax = ua.abs().max(ub.abs());
        let mut sub = 1usize;
        for m in 1..d {
            let speed = (m + 1) as f64 * umax.powi(m as i32) * r;
            sub = sub.max((speed * (ub - ua) / g.spacing[m]).ceil() as usize);
        }
        let w = (ub - ua) / sub as f64;
        for p in 0..sub {
            let a = ua + p as f64 * w;
            for (t, wt) in nodes.iter().zip(&weights) {
                let u = a + 0.5 * w * (t + 1.0);
                let c0 = chi0(u);
                if c0 == 0.0 {
                    continue;
                }
                let v = cross_section(f, i0, x, r, u, delta, reach, cut, &mut wbuf, &mut first);
                total += 0.5 * w * wt * c0 * v;
            }
        }
    }
    Ok(c1 * total)
}

/// Σ over the voxels of slab i0 of f times the ψ_δ mass of the voxel's
/// cross-section, centered at x̃ + rγ̃(u).
#[allow(clippy::too_many_arguments)]
fn cross_section(
    f: &ScalarField,
    i0: usize,
    x: &[f64],
    r: f64,
    u: f64,
    delta: f64,
    reach: f64,
    cut: &CutoffSet,
    wbuf: &mut [Vec<f64>],
    first: &mut [usize],
) -> f64 {
    let g = &f.grid;
    let d = g.dim();
    for m in 1..d {
        let c = x[m] + r * u.powi(m as i32 + 1);
        let h = g.spacing[m];
        let j0 = ((c - reach - g.lo[m]) / h).floor().max(0.0) as usize;
        let j1 = (((c + reach - g.lo[m]) / h).ceil().max(0.0) as usize).min(g.shape[m]);
        wbuf[m].clear();
        if j0 >= j1 {
            return 0.0;
        }
        first[m] = j0;
        let mut prev = cut.psi.cdf((g.lo[m] + j0 as f64 * h - c) / delta);
        for j in j0..j1 {
            let next = cut.psi.cdf((g.lo[m] + (j + 1) as f64 * h - c) / delta);
            wbuf[m].push(next - prev);
            prev = next;
        }
    }
    // Odometer over the middle axes.
    let mut idx: Vec<usize> = (1..d - 1).map(|m| first[m]).collect();
    let mut sum = 0.0;
    loop {
        let mut row = i0;
        let mut wt = 1.0;
        for (k, m) in (1..d - 1).enumerate() {
            row = row * g.shape[m] + idx[k];
            wt *= wbuf[m][idx[k] - first[m]];
        }
        if wt != 0.0 {
            sum += wt * f.row_dot(row, first[d - 1], &wbuf[d - 1]);
        }
        let mut k = idx.len();
        loop {
            if k == 0 {
                return sum;
            }
            k -= 1;
            let m = k + 1;
            idx[k] += 1;
            if idx[k] < first[m] + wbuf[m].len() {
                break;
            }
            idx[k] = first[m];
        }
    }
}

/// Value for f ≡ 1 on all of R^d: χ₁(r)·‖χ₀‖₁·(∫ψ₁)^{d−1} over the tabulated range.
pub fn smooth_average_constant(r: f64, cut: &CutoffSet) -> f64 {
    chi1(r) * cut.chi0_mass() * cut.psi.mass().powi(cut.d as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::multiplier::{build_cutoffs, default_kappa};
    use crate::quadrature::composite;

    #[test]
    fn constant_field_matches_factor_integrals() {
        let cut = build_cutoffs(2, default_kappa(2)).unwrap();
        let delta = 1.0 / 32.0;
        let reach = cut.psi.extent * delta;
        let g = Grid::with_spacing(vec![-2.5, -reach - 0.2], vec![2.5, 4.6 + reach + 0.2], delta / 2.0).unwrap();
        let f = ScalarField::constant(g, 1.0).unwrap();
        let r = 1.1;
        let v = smooth_average(&f, &[0.1, 0.0], r, delta, &cut).unwrap();
        // Oracle: separate 1-D quadratures of ψ₁ and χ₀.
        let psi_mass = composite(-cut.psi.extent, cut.psi.extent, 400, 8, |t| cut.psi.eval(t));
        let chi_mass = composite(-2.0, 2.0, 200, 8, chi0);
        let oracle = chi_mass * psi_mass;
        assert!((v / oracle - 1.0).abs() < 1e-4, "{v} vs {oracle}");
        assert!((smooth_average_constant(r, &cut) / oracle - 1.0).abs() < 1e-4);
        assert_eq!(smooth_average(&f, &[0.1, 0.0], 0.1, delta, &cut).unwrap(), 0.0);
    }
}
