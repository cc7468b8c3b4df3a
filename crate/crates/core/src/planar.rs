//! Planar projection π₂ of moment curves onto parabolas, and intersection counting.

use crate::curve::{MomentCurve, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The arc Y = x₂ + (X − x₁)²/r over X ∈ [x₁ − r, x₁ + r].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarParabola {
    pub vertex: [f64; 2],
    pub scale: f64,
}

impl PlanarParabola {
    pub fn unit() -> Self {
        PlanarParabola {
            vertex: [0.0, 0.0],
            scale: 1.0,
        }
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        [self.vertex[0] + self.scale * t, self.vertex[1] + self.scale * t * t]
    }
}

pub fn project_to_parabola(c: &MomentCurve) -> PlanarParabola {
    PlanarParabola {
        vertex: [c.center.coords[0], c.center.coords[1]],
        scale: c.scale,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    /// (t on c1, t' on c2, common point).
    pub points: Vec<(f64, f64, Point)>,
    pub count: usize,
}

const DOUBLE_ROOT_TOL: f64 = 1e-12;
const RANGE_SLACK: f64 = 1e-12;

/// Real roots of a t² + b t + c with near-double roots collapsed.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-15 * scale {
        if b.abs() <= 1e-15 * scale {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    let size = b * b + (4.0 * a * c).abs();
    if disc.abs() <= DOUBLE_ROOT_TOL * size {
        return vec![-b / (2.0 * a)];
    }
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    let mut r = vec![q / a, c / q];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r
}

/// Coefficients (a, b, c) of the difference quadratic in the parameter t of p1.
fn difference_quadratic(p1: &PlanarParabola, p2: &PlanarParabola) -> (f64, f64, f64) {
    let d1 = p1.vertex[0] - p2.vertex[0];
    let d2 = p1.vertex[1] - p2.vertex[1];
    let (r1, r2) = (p1.scale, p2.scale);
    (r1 - r1 * r1 / r2, -2.0 * d1 * r1 / r2, d2 - d1 * d1 / r2)
}

/// Parameters t ∈ [−1, 1] of p1 at which p1 meets the arc p2.
///
/// For p1 the unit parabola and p2 = (x₁, x₂, r) the quadratic is
/// h(t) = (1 − 1/r)t² + (2x₁/r)t − (x₂ + x₁²/r). Coincident parabolas have no
/// isolated roots and return an empty list.
pub fn planar_intersections(p1: &PlanarParabola, p2: &PlanarParabola) -> Vec<f64> {
    let (a, b, c) = difference_quadratic(p1, p2);
    quadratic_roots(a, b, c)
        .into_iter()
        .filter(|t| t.abs() <= 1.0 + RANGE_SLACK)
        .filter(|t| {
            let tp = (p1.vertex[0] - p2.vertex[0] + p1.scale * t) / p2.scale;
            tp.abs() <= 1.0 + RANGE_SLACK
        })
        .map(|t| t.clamp(-1.0, 1.0))
        .collect()
}

pub fn curve_intersections(c1: &MomentCurve, c2: &MomentCurve, tol: f64) -> Result<IntersectionReport> {
    if c1.dim() != c2.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let (p1, p2) = (project_to_parabola(c1), project_to_parabola(c2));
    let mut points = Vec::new();
    for t in planar_intersections(&p1, &p2) {
        let tp = ((c1.center.coords[0] - c2.center.coords[0] + c1.scale * t) / c2.scale).clamp(-1.0, 1.0);
        let a = c1.eval(t);
        let b = c2.eval(tp);
        let err = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        if err <= tol {
            points.push((t, tp, a));
        }
    }
    if points.len() > 2 {
        return Err(Error::InternalInconsistency(format!(
            "{} verified intersections",
            points.len()
        )));
    }
    Ok(IntersectionReport {
        count: points.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn par(x1: f64, x2: f64, r: f64) -> PlanarParabola {
        PlanarParabola {
            vertex: [x1, x2],
            scale: r,
        }
    }

    #[test]
    fn projection_examples() {
        let c = MomentCurve::from_parts(&[1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(project_to_parabola(&c), par(1.0, 2.0, 2.0));
        assert_eq!(project_to_parabola(&MomentCurve::standard(3, 1.0).unwrap()), PlanarParabola::unit());
    }

    #[test]
    fn root_examples() {
        let r = planar_intersections(&PlanarParabola::unit(), &par(0.0, 0.1, 2.0));
        assert_eq!(r.len(), 2);
        assert!((r[0] + 0.2f64.sqrt()).abs() < 1e-14 && (r[1] - 0.2f64.sqrt()).abs() < 1e-14);
        assert!(planar_intersections(&PlanarParabola::unit(), &par(0.0, 0.05, 1.0)).is_empty());
        assert_eq!(planar_intersections(&PlanarParabola::unit(), &par(0.0, 0.0, 1.5)), vec![0.0]);
        assert!(planar_intersections(&PlanarParabola::unit(), &PlanarParabola::unit()).is_empty());
    }

    #[test]
    fn normalized_form_matches() {
        // p1 unit, p2 = (x1, x2, r): roots of (1 − 1/r)t² + (2x1/r)t − (x2 + x1²/r).
        let (x1, x2, r) = (0.2, 0.1, 1.7);
        let roots = planar_intersections(&PlanarParabola::unit(), &par(x1, x2, r));
        assert!(!roots.is_empty());
        for t in roots {
            let h = (1.0 - 1.0 / r) * t * t + 2.0 * x1 / r * t - (x2 + x1 * x1 / r);
            assert!(h.abs() < 1e-13);
        }
    }

    #[test]
    fn intersection_examples() {
        let unit = MomentCurve::standard(3, 1.0).unwrap();
        let rep = curve_intersections(&unit, &MomentCurve::standard(3, 1.5).unwrap(), 1e-9).unwrap();
        assert_eq!(rep.count, 1);
        assert_eq!(rep.points[0].2.coords, vec![0.0; 3]);
        let shifted = MomentCurve::from_parts(&[0.1, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(curve_intersections(&shifted, &unit, 1e-9).unwrap().count, 0);
        let c = MomentCurve::from_parts(&[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], 0.875).unwrap();
        let rep = curve_intersections(&c, &unit, 1e-9).unwrap();
        assert_eq!(rep.count, 1);
        assert!(rep.points[0].2.dist(&Point { coords: vec![0.5, 0.25, 0.125] }) < 1e-12);
    }
}
