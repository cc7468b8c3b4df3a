//! Seeded curve pairs for the geometry criteria.

use momentlab::curve::gamma_derivative;
use momentlab::rng::Stream;
use momentlab::{pair_invariants, solve_tangent_curve, MomentCurve, PairInvariants, Result};

/// H(x, r) with x in [−a, a]^d and r in [r0, r1].
pub fn random_curve(s: &mut Stream, d: usize, a: f64, r: (f64, f64)) -> MomentCurve {
    let x: Vec<f64> = (0..d).map(|_| s.range(-a, a)).collect();
    MomentCurve::from_parts(&x, s.range(r.0, r.1)).expect("valid random curve")
}

/// A second curve through c1(t1) at its own parameter t2.
pub fn through_point(c1: &MomentCurve, t1: f64, t2: f64, r2: f64) -> MomentCurve {
    let p = c1.eval(t1);
    let x: Vec<f64> = p
        .coords
        .iter()
        .enumerate()
        .map(|(i, v)| v - r2 * t2.powi(i as i32 + 1))
        .collect();
    MomentCurve::from_parts(&x, r2).expect("valid curve")
}

/// A pair meeting at interior parameters.
pub fn intersecting_pair(s: &mut Stream, d: usize) -> (MomentCurve, MomentCurve) {
    let c1 = random_curve(s, d, 0.25, (0.5, 2.0));
    let (t1, t2) = (s.range(-0.8, 0.8), s.range(-0.8, 0.8));
    let c2 = through_point(&c1, t1, t2, s.range(0.5, 2.0));
    (c1, c2)
}

/// An intersecting pair with Δ̄ ≥ `floor` and d̄ ≥ `floor`, by rejection.
pub fn transversal_pair(s: &mut Stream, d: usize, floor: f64) -> (MomentCurve, MomentCurve, PairInvariants) {
    loop {
        let (c1, c2) = intersecting_pair(s, d);
        let inv = pair_invariants(&c1, &c2).expect("same dimension");
        if inv.delta_bar >= floor && inv.dbar >= floor {
            return (c1, c2, inv);
        }
    }
}

/// Exactly tangent pair from the tangent-curve solver, moved by a common
/// translation and dilation. Returns the solver output as well.
pub fn tangent_pair(s: &mut Stream, d: usize) -> Result<(MomentCurve, MomentCurve, MomentCurve)> {
    let r = loop {
        let r = s.range(0.5, 2.0);
        if (r - 1.0).abs() > 0.1 {
            break r;
        }
    };
    let t: f64 = s.range(-0.9, 0.9);
    let x_last = (1.0 - r) * t.powi(d as i32);
    let solved = solve_tangent_curve(x_last, r, d)?;
    let lambda = s.range(0.5, 1.5);
    let v: Vec<f64> = (0..d).map(|_| s.range(-0.25, 0.25)).collect();
    let map = |c: &MomentCurve| {
        let x: Vec<f64> = c.center.coords.iter().zip(&v).map(|(a, b)| lambda * a + b).collect();
        MomentCurve::from_parts(&x, lambda * c.scale)
    };
    let unit = MomentCurve::standard(d, 1.0)?;
    Ok((map(&solved)?, map(&unit)?, solved))
}

/// Tangent pair moved apart by `eps` in a random direction of parameter space.
pub fn near_tangent_pair(s: &mut Stream, d: usize, eps: f64) -> Result<(MomentCurve, MomentCurve)> {
    let (c1, c2, _) = tangent_pair(s, d)?;
    let dir: Vec<f64> = (0..=d).map(|_| s.normal()).collect();
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut p = c1.params();
    for (a, b) in p.iter_mut().zip(&dir) {
        *a += eps * b / n;
    }
    Ok((MomentCurve::from_parts(&p[..d], p[d])?, c2))
}

/// Unit tangent of c at t.
pub fn unit_tangent(c: &MomentCurve, t: f64) -> Vec<f64> {
    let g = gamma_derivative(t, c.dim(), 1);
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    g.iter().map(|v| v / n).collect()
}
