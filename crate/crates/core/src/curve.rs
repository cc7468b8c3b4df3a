//! Moment curves, their affine images and point-to-curve distance.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        Ok(Point { coords })
    }

    pub fn origin(d: usize) -> Self {
        Point { coords: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point { coords }
    }
}

/// Range of the curve parameter accepted by [`curve_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRange {
    /// t in [-1, 1].
    Standard,
    /// t in [-1.5, 1.5], used by tube parametrizations.
    Extended,
}

impl ParamRange {
    pub fn bound(self) -> f64 {
        match self {
            ParamRange::Standard => 1.0,
            ParamRange::Extended => 1.5,
        }
    }
}

/// The curve H(x, r) = { x + r·γ(t) : t in [-1, 1] }.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub center: Point,
    pub scale: f64,
}

impl MomentCurve {
    pub fn new(center: Point, scale: f64) -> Result<Self> {
        if center.dim() < 2 {
            return Err(Error::InvalidDimension(center.dim()));
        }
        if !center.is_finite() {
            return Err(Error::InvalidInput("non-finite center".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::OutOfRange {
                name: "scale",
                value: scale,
                range: "(0, inf)".into(),
            });
        }
        Ok(MomentCurve { center, scale })
    }

    /// H(0, r) in R^d.
    pub fn standard(d: usize, scale: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        MomentCurve::new(Point::origin(d), scale)
    }

    pub fn from_parts(center: &[f64], scale: f64) -> Result<Self> {
        MomentCurve::new(Point { coords: center.to_vec() }, scale)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// x + r·γ(t) without range checks.
    pub fn eval(&self, t: f64) -> Point {
        let mut p = self.center.coords.clone();
        let mut tp = 1.0;
        for c in p.iter_mut() {
            tp *= t;
            *c += self.scale * tp;
        }
        Point { coords: p }
    }

    /// Parameter vector (x, r) used for coincidence checks.
    pub fn params(&self) -> Vec<f64> {
        let mut v = self.center.coords.clone();
        v.push(self.scale);
        v
    }
}

/// γ(t) = (t, t², …, t^d).
pub fn gamma_point(t: f64, d: usize) -> Result<Point> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut coords = Vec::with_capacity(d);
    let mut tp = 1.0;
    for _ in 0..d {
        tp *= t;
        coords.push(tp);
    }
    Ok(Point { coords })
}

/// j-th derivative of γ at u.
pub fn gamma_derivative(u: f64, d: usize, j: usize) -> Vec<f64> {
    (1..=d)
        .map(|i| {
            if j > i {
                0.0
            } else {
                let falling: f64 = ((i - j + 1)..=i).map(|k| k as f64).product();
                falling * u.powi((i - j) as i32)
            }
        })
        .collect()
}

pub fn curve_point(c: &MomentCurve, t: f64, range: ParamRange) -> Result<Point> {
    let b = range.bound();
    if !(t.is_finite() && t.abs() <= b) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: format!("[-{b}, {b}]"),
        });
    }
    Ok(c.eval(t))
}

/// Squared distance g(t) = Σ (a_i − r t^i)² and its first two derivatives.
#[inline]
fn g_derivs(a: &[f64], r: f64, t: f64) -> (f64, f64, f64) {
    let mut g = 0.0;
    let mut g1 = 0.0;
    let mut g2 = 0.0;
    let mut tpm2 = 0.0; // t^{i-2}
    let mut tpm1 = 1.0; // t^{i-1}
    for (k, &ai) in a.iter().enumerate() {
        let i = (k + 1) as f64;
        let tp = tpm1 * t;
        let e = ai - r * tp;
        let de = r * i * tpm1;
        g += e * e;
        g1 -= 2.0 * e * de;
        g2 += 2.0 * (de * de - e * r * i * (i - 1.0) * tpm2);
        tpm2 = tpm1;
        tpm1 = tp;
    }
    (g, g1, g2)
}

#[inline]
fn g_only(a: &[f64], r: f64, t: f64) -> f64 {
    let mut g = 0.0;
    let mut tp = 1.0;
    for &ai in a {
        tp *= t;
        let e = ai - r * tp;
        g += e * e;
    }
    g
}

#[inline]
fn g_prime(a: &[f64], r: f64, t: f64) -> f64 {
    let mut g1 = 0.0;
    let mut tpm1 = 1.0;
    for (k, &ai) in a.iter().enumerate() {
        let tp = tpm1 * t;
        g1 -= 2.0 * (ai - r * tp) * r * (k + 1) as f64 * tpm1;
        tpm1 = tp;
    }
    g1
}

/// Safeguarded Newton for a root of g' bracketed by lo (g' < 0) and hi (g' > 0).
fn refine_min(a: &[f64], r: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (_, g1, g2) = g_derivs(a, r, t);
        if g1 < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = if g2 > 0.0 { t - g1 / g2 } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - t).abs();
        t = next;
        if step < tol || hi - lo < tol {
            break;
        }
    }
    t
}

/// Minimum of g over [lo, hi] using `nodes` Chebyshev samples plus the endpoints.
pub(crate) fn min_on_window(a: &[f64], r: f64, lo: f64, hi: f64, nodes: usize, tol: f64) -> (f64, f64) {
    let mut ts = Vec::with_capacity(nodes + 2);
    ts.push(lo);
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    for k in (0..nodes).rev() {
        let th = std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
        ts.push(c + h * th.cos());
    }
    ts.push(hi);
    let mut best = (lo, g_only(a, r, lo));
    let mut prev_t = lo;
    let mut prev_d = g_prime(a, r, lo);
    for &t in &ts[1..] {
        let d1 = g_prime(a, r, t);
        let gv = g_only(a, r, t);
        if gv < best.1 {
            best = (t, gv);
        }
        if prev_d < 0.0 && d1 > 0.0 {
            let tm = refine_min(a, r, prev_t, t, tol);
            let gm = g_only(a, r, tm);
            if gm < best.1 {
                best = (tm, gm);
            }
        }
        prev_t = t;
        prev_d = d1;
    }
    best
}

/// Closest point parameter and distance from p to H(x, r) over t in [-1, 1].
pub fn distance_to_curve(p: &Point, c: &MomentCurve, tol: f64) -> Result<(f64, f64)> {
    if !p.is_finite() {
        return Err(Error::InvalidInput("non-finite point".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if p.dim() != c.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let a: Vec<f64> = p.coords.iter().zip(&c.center.coords).map(|(y, x)| y - x).collect();
    let (t, g) = min_on_window(&a, c.scale, -1.0, 1.0, 8 * c.dim(), tol);
    Ok((t, g.max(0.0).sqrt()))
}

/// Membership test y ∈ H_ρ(x, r) given a = y − x.
///
/// The first coordinate confines t to a window of width 2ρ/r, where g is
/// minimized by a few nodes and refinement.
#[inline]
pub fn within_offset(a: &[f64], r: f64, rho: f64) -> bool {
    let rho2 = rho * rho;
    let lo = ((a[0] - rho) / r).max(-1.0);
    let hi = ((a[0] + rho) / r).min(1.0);
    if lo > hi {
        return false;
    }
    let t0 = (a[0] / r).clamp(lo, hi);
    if g_only(a, r, t0) <= rho2 {
        return true;
    }
    let nodes = 3 + ((hi - lo) * 4.0 * a.len() as f64) as usize;
    min_on_window(a, r, lo, hi, nodes, 1e-12 * (1.0 + rho)).1 <= rho2
}

/// y ∈ H_ρ(c).
pub fn in_neighborhood(y: &[f64], c: &MomentCurve, rho: f64) -> bool {
    let mut a = [0.0f64; 16];
    let d = y.len();
    debug_assert!(d <= 16);
    for i in 0..d {
        a[i] = y[i] - c.center.coords[i];
    }
    within_offset(&a[..d], c.scale, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_point(0.0, 3).unwrap().coords, vec![0.0, 0.0, 0.0]);
        assert_eq!(gamma_point(1.0, 3).unwrap().coords, vec![1.0, 1.0, 1.0]);
        assert_eq!(gamma_point(-0.5, 3).unwrap().coords, vec![-0.5, 0.25, -0.125]);
        assert_eq!(gamma_point(0.3, 1), Err(Error::InvalidDimension(1)));
    }

    #[test]
    fn curve_point_examples() {
        let c = MomentCurve::from_parts(&[1.0, 0.0, 0.0], 2.0).unwrap();
        assert_eq!(curve_point(&c, 1.0, ParamRange::Standard).unwrap().coords, vec![3.0, 2.0, 2.0]);
        let c = MomentCurve::standard(3, 1.0).unwrap();
        assert_eq!(curve_point(&c, 0.5, ParamRange::Standard).unwrap().coords, vec![0.5, 0.25, 0.125]);
        let c = MomentCurve::from_parts(&[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], 0.875).unwrap();
        assert_eq!(curve_point(&c, 0.5, ParamRange::Standard).unwrap().coords, vec![0.5, 0.25, 0.125]);
        assert!(curve_point(&c, 1.2, ParamRange::Standard).is_err());
        assert!(curve_point(&c, 1.2, ParamRange::Extended).is_ok());
        assert!(curve_point(&c, 1.6, ParamRange::Extended).is_err());
    }

    #[test]
    fn derivative_table() {
        assert_eq!(gamma_derivative(2.0, 3, 1), vec![1.0, 4.0, 12.0]);
        assert_eq!(gamma_derivative(2.0, 3, 2), vec![0.0, 2.0, 12.0]);
        assert_eq!(gamma_derivative(2.0, 3, 3), vec![0.0, 0.0, 6.0]);
        assert_eq!(gamma_derivative(2.0, 3, 4), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn constructor_rejects_bad_scale() {
        assert!(MomentCurve::from_parts(&[0.0, 0.0], 0.0).is_err());
        assert!(MomentCurve::from_parts(&[0.0, 0.0], f64::NAN).is_err());
        assert!(MomentCurve::from_parts(&[0.0], 1.0).is_err());
        assert!(MomentCurve::standard(1, 1.0).is_err());
    }

    #[test]
    fn distance_on_curve_is_zero() {
        let c = MomentCurve::standard(3, 1.0).unwrap();
        let (t, d) = distance_to_curve(&Point::origin(3), &c, 1e-10).unwrap();
        assert!(t.abs() < 1e-9 && d < 1e-12);
    }

    #[test]
    fn distance_rejects_non_finite() {
        let c = MomentCurve::standard(3, 1.0).unwrap();
        let p = Point { coords: vec![f64::NAN, 0.0, 0.0] };
        assert!(distance_to_curve(&p, &c, 1e-10).is_err());
    }

    #[test]
    fn window_membership_matches_full_search() {
        let c = MomentCurve::from_parts(&[0.1, -0.2, 0.05], 0.8).unwrap();
        let mut s = crate::rng::CounterRng::new("window", 3).stream(0);
        for _ in 0..20_000 {
            let y: Vec<f64> = (0..3).map(|_| s.range(-1.2, 1.2)).collect();
            let rho = s.range(0.001, 0.2);
            let (_, d) = distance_to_curve(&Point { coords: y.clone() }, &c, 1e-12).unwrap();
            if (d - rho).abs() > 1e-9 {
                assert_eq!(in_neighborhood(&y, &c, rho), d <= rho, "y={y:?} rho={rho} d={d}");
            }
        }
    }
}
