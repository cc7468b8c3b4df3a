//! Tangency discriminants of curve pairs and the tangent-curve solver.

use crate::curve::{MomentCurve, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameter vectors closer than this are treated as the same curve.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInvariants {
    /// Δ_2, …, Δ_d.
    pub deltas: Vec<f64>,
    pub dbar: f64,
    pub delta_bar: f64,
    pub t_candidate: Option<f64>,
}

impl PairInvariants {
    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().cloned().fold(0.0, f64::max)
    }
}

/// Which power appears in Δ_i. `Derived` is the one consistent with the
/// intersection system; `Flipped` uses the opposite base and exists so the
/// acceptance harness can show the oracle catches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Derived,
    Flipped,
}

pub fn pair_invariants(c1: &MomentCurve, c2: &MomentCurve) -> Result<PairInvariants> {
    pair_invariants_with(c1, c2, SignConvention::Derived)
}

pub fn pair_invariants_with(c1: &MomentCurve, c2: &MomentCurve, conv: SignConvention) -> Result<PairInvariants> {
    if c1.dim() != c2.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            c1.dim(),
            c2.dim()
        )));
    }
    let x = &c1.center.coords;
    let xp = &c2.center.coords;
    let (r, rp) = (c1.scale, c2.scale);
    let dx1 = x[0] - xp[0];
    let base = match conv {
        SignConvention::Derived => rp - r,
        SignConvention::Flipped => r - rp,
    };
    let deltas = (2..=c1.dim())
        .map(|i| ((x[i - 1] - xp[i - 1]) * base.powi(i as i32 - 1) - dx1.powi(i as i32)).abs())
        .collect::<Vec<_>>();
    let dbar = dx1.abs() + (x[1] - xp[1]).abs() + (r - rp).abs();
    let delta_bar = if dbar > 0.0 { deltas[0] / dbar } else { 0.0 };
    let t_candidate = if r != rp { Some(dx1 / (rp - r)) } else { None };
    Ok(PairInvariants {
        deltas,
        dbar,
        delta_bar,
        t_candidate,
    })
}

fn coincide(c1: &MomentCurve, c2: &MomentCurve) -> bool {
    c1.params()
        .iter()
        .zip(c2.params())
        .all(|(a, b)| (a - b).abs() < COINCIDENCE_TOL)
}

/// Tangency parameter and point when the discriminants vanish within tolerance.
pub fn is_tangent(c1: &MomentCurve, c2: &MomentCurve, tol: f64) -> Result<Option<(f64, Point)>> {
    is_tangent_with(c1, c2, tol, SignConvention::Derived)
}

pub fn is_tangent_with(
    c1: &MomentCurve,
    c2: &MomentCurve,
    tol: f64,
    conv: SignConvention,
) -> Result<Option<(f64, Point)>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if c1.dim() == c2.dim() && coincide(c1, c2) {
        return Err(Error::DegeneratePair);
    }
    let inv = pair_invariants_with(c1, c2, conv)?;
    let Some(t) = inv.t_candidate else {
        return Ok(None);
    };
    if !(-1.0..=1.0).contains(&t) {
        return Ok(None);
    }
    if inv.deltas.iter().all(|&di| di <= tol * (1.0 + inv.dbar)) {
        Ok(Some((t, c1.eval(t))))
    } else {
        Ok(None)
    }
}

/// The curve H((x₁,…,x_{d−1}, x_last), r) tangent to H(0, 1).
///
/// With x_i = (1 − r)·t^i the two curves meet at parameter t with parallel
/// tangents; t is the real d-th root of x_last/(1 − r) (nonnegative root for even d).
pub fn solve_tangent_curve(x_last: f64, r: f64, d: usize) -> Result<MomentCurve> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(x_last.is_finite() && r.is_finite() && r > 0.0) {
        return Err(Error::InvalidInput(format!("x_last = {x_last}, r = {r}")));
    }
    if r == 1.0 {
        return Err(Error::Degenerate("r = 1 gives a translate of the unit curve".into()));
    }
    let q = x_last / (1.0 - r);
    let t = if d % 2 == 1 {
        q.signum() * q.abs().powf(1.0 / d as f64)
    } else if q >= 0.0 {
        q.powf(1.0 / d as f64)
    } else {
        return Err(Error::NoAdmissibleTangent(f64::NAN));
    };
    if t.abs() > 1.0 {
        return Err(Error::NoAdmissibleTangent(t));
    }
    let mut coords: Vec<f64> = (1..d).map(|i| (1.0 - r) * t.powi(i as i32)).collect();
    coords.push(x_last);
    let c = MomentCurve::new(Point { coords }, r)?;
    let unit = MomentCurve::standard(d, 1.0)?;
    match is_tangent(&c, &unit, 1e-9)? {
        Some(_) => Ok(c),
        None => Err(Error::InternalInconsistency(format!(
            "solved curve not tangent to the unit curve (t = {t})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_pair() -> (MomentCurve, MomentCurve) {
        (
            MomentCurve::from_parts(&[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], 0.875).unwrap(),
            MomentCurve::standard(3, 1.0).unwrap(),
        )
    }

    #[test]
    fn concentric_pair() {
        let inv = pair_invariants(&MomentCurve::standard(3, 1.0).unwrap(), &MomentCurve::standard(3, 1.5).unwrap())
            .unwrap();
        assert_eq!(inv.deltas, vec![0.0, 0.0]);
        assert_eq!(inv.dbar, 0.5);
        assert_eq!(inv.delta_bar, 0.0);
        assert_eq!(inv.t_candidate, Some(0.0));
    }

    #[test]
    fn worked_pair_invariants() {
        let (c1, c2) = worked_pair();
        let inv = pair_invariants(&c1, &c2).unwrap();
        assert!(inv.max_delta() < 1e-15);
        assert!((inv.dbar - 7.0 / 32.0).abs() < 1e-15);
        assert_eq!(inv.delta_bar, 0.0);
        assert!((inv.t_candidate.unwrap() - 0.5).abs() < 1e-15);
        let (t, p) = is_tangent(&c1, &c2, 1e-9).unwrap().unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(p.dist(&Point { coords: vec![0.5, 0.25, 0.125] }) < 1e-15);
    }

    #[test]
    fn flipped_convention_misses_worked_pair() {
        let (c1, c2) = worked_pair();
        assert!(is_tangent_with(&c1, &c2, 1e-6, SignConvention::Flipped).unwrap().is_none());
    }

    #[test]
    fn equal_scales_never_tangent() {
        let c1 = MomentCurve::from_parts(&[0.1, 0.0, 0.0], 1.0).unwrap();
        let c2 = MomentCurve::standard(3, 1.0).unwrap();
        assert!(pair_invariants(&c1, &c2).unwrap().t_candidate.is_none());
        assert!(is_tangent(&c1, &c2, 1e-6).unwrap().is_none());
    }

    #[test]
    fn concentric_tangent_at_origin() {
        let (t, p) = is_tangent(&MomentCurve::standard(3, 1.0).unwrap(), &MomentCurve::standard(3, 1.5).unwrap(), 1e-9)
            .unwrap()
            .unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(p.coords, vec![0.0; 3]);
    }

    #[test]
    fn degenerate_and_mismatch() {
        let c = MomentCurve::standard(3, 1.0).unwrap();
        assert_eq!(is_tangent(&c, &c, 1e-6), Err(Error::DegeneratePair));
        let c4 = MomentCurve::standard(4, 1.0).unwrap();
        assert!(pair_invariants(&c, &c4).is_err());
    }

    #[test]
    fn swap_symmetry() {
        let c1 = MomentCurve::from_parts(&[0.1, -0.2, 0.3], 0.7).unwrap();
        let c2 = MomentCurve::from_parts(&[-0.05, 0.1, 0.2], 1.3).unwrap();
        let a = pair_invariants(&c1, &c2).unwrap();
        let b = pair_invariants(&c2, &c1).unwrap();
        for (x, y) in a.deltas.iter().zip(&b.deltas) {
            assert!((x - y).abs() <= 1e-15 * (1.0 + x.abs()));
        }
        assert_eq!(a.dbar, b.dbar);
        assert!((a.t_candidate.unwrap() - b.t_candidate.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn solver_examples() {
        let c = solve_tangent_curve(1.0 / 64.0, 0.875, 3).unwrap();
        let want = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        for (a, b) in c.center.coords.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = solve_tangent_curve(0.0, 1.5, 3).unwrap();
        assert_eq!(c.center.coords, vec![0.0, 0.0, 0.0]);
        match solve_tangent_curve(1.0, 0.99, 3) {
            Err(Error::NoAdmissibleTangent(t)) => assert!((t - 100f64.cbrt()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(matches!(solve_tangent_curve(0.1, 1.0, 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn solver_even_dimension() {
        let c = solve_tangent_curve(0.01, 0.5, 4).unwrap();
        let unit = MomentCurve::standard(4, 1.0).unwrap();
        assert!(pair_invariants(&c, &unit).unwrap().max_delta() < 1e-12);
        assert!(matches!(solve_tangent_curve(-0.01, 0.5, 4), Err(Error::NoAdmissibleTangent(_))));
    }
}
