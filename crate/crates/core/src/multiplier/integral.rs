//! The oscillatory factor of the multiplier and the frequency decomposition.

use super::cutoffs::{chi0, chi1, norm, CutoffSet};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rng::CounterRng;
use crate::scaling::{Abscissa, LadderResult, LadderRow};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const ORDER: usize = 8;
/// Relative change allowed when the panel count doubles.
pub const DOUBLING_TOL: f64 = 1e-6;
/// Absolute floor of the doubling test, near the rounding level of ‖χ₀‖₁.
pub const ROUNDING_FLOOR: f64 = 1e-13;

fn panel_sum(xi: &[f64], r: f64, panels: usize, nodes: &[f64], weights: &[f64]) -> Complex64 {
    let h = 4.0 / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = -2.0 + p as f64 * h;
        let mut part = Complex64::new(0.0, 0.0);
        for (t, w) in nodes.iter().zip(weights) {
            let u = a + 0.5 * h * (t + 1.0);
            let c = chi0(u);
            if c == 0.0 {
                continue;
            }
            // ξ·γ(u) by Horner.
            let mut phase = 0.0;
            for &x in xi.iter().rev() {
                phase = (phase + x) * u;
            }
            let arg = -2.0 * PI * r * phase;
            part += Complex64::new(arg.cos(), arg.sin()) * (w * c);
        }
        acc += part * (0.5 * h);
    }
    acc
}

/// ∫ e^{−2πi r ξ·γ(u)} χ₀(u) du by panel Gauss-Legendre, checked against
/// twice the panel count.
pub fn oscillatory_integral(xi: &[f64], r: f64, cut: &CutoffSet) -> Result<Complex64> {
    if xi.len() != cut.d {
        return Err(Error::InvalidInput("frequency dimension differs from cutoffs".into()));
    }
    if !(r > 0.25 && r < 3.0) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            range: "(1/4, 3)".into(),
        });
    }
    let (nodes, weights) = gauss_legendre(ORDER);
    // Eight panels per unit of the largest phase speed r·|ξ·γ'(u)| on [−2, 2].
    let speed: f64 = xi.iter().enumerate().map(|(i, x)| (i + 1) as f64 * 2f64.powi(i as i32) * x.abs()).sum();
    let panels = 32usize.max((8.0 * r * speed).ceil() as usize);
    let coarse = panel_sum(xi, r, panels, &nodes, &weights);
    let fine = panel_sum(xi, r, 2 * panels, &nodes, &weights);
    let change = (fine - coarse).norm();
    if change > DOUBLING_TOL * fine.norm() + ROUNDING_FLOOR {
        return Err(Error::Quadrature(change / fine.norm().max(f64::MIN_POSITIVE)));
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionWeights {
    pub w_low: f64,
    pub w_h0: f64,
    pub w_h1: f64,
}

/// Low, ξ₁-dominant and ξ̃-dominant parts of the unit.
pub fn decomposition_weights(xi: &[f64], cut: &CutoffSet) -> DecompositionWeights {
    let a = cut.low(xi);
    let phi = cut.cone(xi);
    let high = 1.0 - a;
    let w_h0 = high * (1.0 - phi);
    DecompositionWeights {
        w_low: a,
        w_h0,
        w_h1: high - w_h0,
    }
}

/// m_{δ,r}(ξ) = χ₁(r)·ψ̂(δξ̃)·∫ e^{−2πi r ξ·γ(u)} χ₀(u) du.
pub fn multiplier_value(xi: &[f64], r: f64, delta: f64, cut: &CutoffSet) -> Result<Complex64> {
    let c1 = chi1(r);
    if c1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eta: Vec<f64> = xi[1..].iter().map(|v| delta * v).collect();
    let ph = cut.psi_hat(&eta);
    if ph == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(oscillatory_integral(xi, r, cut)? * (c1 * ph))
}

/// |χ₁(r)·I(R·ω)| along a ray ω, with ψ̂ replaced by 1.
pub fn cone_decay_profile(direction: &[f64], r: f64, radii: &[f64], cut: &CutoffSet) -> Result<LadderResult> {
    let n = norm(direction);
    if !(n > 0.0) {
        return Err(Error::InvalidInput("direction must be nonzero".into()));
    }
    let rows = radii
        .iter()
        .map(|&big| {
            let xi: Vec<f64> = direction.iter().map(|v| big * v / n).collect();
            Ok(LadderRow {
                delta: big,
                value: chi1(r) * oscillatory_integral(&xi, r, cut)?.norm(),
                stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LadderResult::new("cone-decay", 0, Abscissa::Frequency, rows)
}

/// Largest |w_low + w_h0 + w_h1 − 1| over random frequencies.
pub fn partition_defect(cut: &CutoffSet, samples: u64, seed: u64) -> f64 {
    let rng = CounterRng::new("partition-of-unity", seed);
    let mut worst: f64 = 0.0;
    let mut xi = vec![0.0; cut.d];
    for i in 0..samples {
        let mut s = rng.stream(i);
        let scale = 2f64.powf(s.range(-4.0, 12.0));
        for v in xi.iter_mut() {
            *v = scale * s.normal();
        }
        if i % 7 == 0 {
            // Land near the cone boundary as well.
            let t = norm(&xi[1..]);
            xi[0] = cut.kappa * t * s.range(0.8, 2.2);
        }
        let w = decomposition_weights(&xi, cut);
        worst = worst.max((w.w_low + w.w_h0 + w.w_h1 - 1.0).abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseReport {
    pub samples: u64,
    pub violations: u64,
    /// min of |∂_u(ξ·γ(u))| / (|ξ₁|/2) over the samples.
    pub min_ratio: f64,
}

/// Sample u ∈ [−3/2, 3/2] and ξ with |ξ₁| ≥ κ|ξ̃| and test
/// |ξ₁ + Σ_{i≥2} i u^{i−1} ξ_i| ≥ |ξ₁|/2.
pub fn phase_derivative_check(cut: &CutoffSet, samples: u64, seed: u64) -> PhaseReport {
    let rng = CounterRng::new("phase-derivative", seed);
    let d = cut.d;
    let mut xi = vec![0.0; d];
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..samples {
        let mut s = rng.stream(i);
        let u = s.range(-1.5, 1.5);
        for v in xi[1..].iter_mut() {
            *v = s.normal();
        }
        let t = norm(&xi[1..]);
        let sign = if s.uniform() < 0.5 { -1.0 } else { 1.0 };
        // Half the samples sit on the cone boundary.
        let stretch = if i % 2 == 0 { 1.0 } else { 1.0 + 10.0 * s.uniform() };
        xi[0] = sign * cut.kappa * t * stretch;
        let mut deriv = xi[0];
        let mut pow = 1.0;
        for (k, &x) in xi.iter().enumerate().skip(1) {
            pow *= u;
            deriv += (k + 1) as f64 * pow * x;
        }
        let ratio = deriv.abs() / (0.5 * xi[0].abs());
        min_ratio = min_ratio.min(ratio);
        if ratio < 1.0 {
            violations += 1;
        }
    }
    PhaseReport {
        samples,
        violations,
        min_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{build_cutoffs, default_kappa};
    use crate::quadrature::composite;

    fn cut3() -> CutoffSet {
        build_cutoffs(3, default_kappa(3)).unwrap()
    }

    #[test]
    fn zero_frequency_and_symmetry() {
        let cut = cut3();
        let i0 = oscillatory_integral(&[0.0; 3], 1.0, &cut).unwrap();
        let oracle = composite(-2.0, 2.0, 100, 8, chi0);
        assert!((i0.re - oracle).abs() < 1e-12 && i0.im.abs() < 1e-15);
        // Odd phase and even χ₀ give a real integral.
        let v = oscillatory_integral(&[3.7, 0.0, -11.0], 1.3, &cut).unwrap();
        assert!(v.im.abs() < 1e-10 * v.norm().max(1e-3), "{v}");
        assert!(oscillatory_integral(&[1.0, 0.0, 0.0], 0.2, &cut).is_err());
    }

    #[test]
    fn weights_examples() {
        let cut = cut3();
        let w = decomposition_weights(&[0.3, 0.3, 0.2], &cut);
        assert_eq!((w.w_low, w.w_h0, w.w_h1), (1.0, 0.0, 0.0));
        let w = decomposition_weights(&[10.0 * cut.kappa * 5.0, 3.0, 4.0], &cut);
        assert_eq!((w.w_low, w.w_h0, w.w_h1), (0.0, 1.0, 0.0));
        let w = decomposition_weights(&[0.0, 6.0, 8.0], &cut);
        assert_eq!((w.w_low, w.w_h0, w.w_h1), (0.0, 0.0, 1.0));
        assert!(partition_defect(&cut, 10_000, 3) <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn multiplier_examples() {
        let cut = cut3();
        let m0 = multiplier_value(&[0.0; 3], 1.0, 0.1, &cut).unwrap();
        let expect = cut.psi.full_mass().powi(2) * cut.chi0_mass();
        assert!((m0.re / expect - 1.0).abs() < 1e-6);
        let far = cut.psi.lambda / 0.1 * 1.5;
        assert_eq!(multiplier_value(&[1.0, far, 0.0], 1.0, 0.1, &cut).unwrap().norm(), 0.0);
        assert_eq!(multiplier_value(&[1.0, 1.0, 0.0], 0.2, 0.1, &cut).unwrap().norm(), 0.0);
    }

    #[test]
    fn phase_bound_holds() {
        let rep = phase_derivative_check(&cut3(), 100_000, 1);
        assert_eq!(rep.violations, 0);
        assert!(rep.min_ratio >= 1.0);
    }
}
