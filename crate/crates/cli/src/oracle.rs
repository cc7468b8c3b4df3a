//! Brute-force tangency test: grid scan of |c1(t) − c2(t')| followed by a
//! nested one-dimensional refinement of the closest approaches.

use crate::pairs::unit_tangent;
use momentlab::{distance_to_curve, MomentCurve};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleVerdict {
    pub tangent: bool,
    pub t: f64,
    pub t_other: f64,
    pub dist: f64,
    /// Sine of the angle between the tangent lines at the refined pair.
    pub sine: f64,
}

/// Half-width, in grid steps, of the refinement bracket.
const BRACKET: usize = 16;

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let m = 0.5 * (a + b);
    [a, m, b].into_iter().min_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap()
}

/// Scan an n×n grid over [−1, 1]², refine every sufficiently close local
/// minimum, and call the pair tangent when some refined pair has distance
/// and tangent-line sine both ≤ tol.
pub fn brute_force_tangency(c1: &MomentCurve, c2: &MomentCurve, n: usize, tol: f64) -> OracleVerdict {
    let d = c1.dim();
    let ts: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let p1: Vec<Vec<f64>> = ts.iter().map(|&t| c1.eval(t).coords).collect();
    let p2: Vec<f64> = ts.iter().flat_map(|&t| c2.eval(t).coords).collect();
    let row_min: Vec<f64> = p1
        .iter()
        .map(|a| {
            p2.chunks_exact(d)
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let step = 2.0 / (n - 1) as f64;
    // Grid points lie within ~|c'|·step of the continuum minimum.
    let thr = (4.0 * (c1.scale + c2.scale) * d as f64 * step).powi(2);
    let global = (0..n).min_by(|&i, &j| row_min[i].total_cmp(&row_min[j])).unwrap();
    let mut cands: Vec<usize> = (0..n)
        .filter(|&i| {
            row_min[i] <= thr
                && (i == 0 || row_min[i] <= row_min[i - 1])
                && (i + 1 == n || row_min[i] <= row_min[i + 1])
        })
        .collect();
    if !cands.contains(&global) {
        cands.push(global);
    }
    let dist_at = |t: f64| distance_to_curve(&c1.eval(t), c2, 1e-13).map(|v| v.1).unwrap_or(f64::INFINITY);
    let mut best: Option<OracleVerdict> = None;
    for i in cands {
        // Near a tangency the row minima are flat to within the t' grid error,
        // so the grid minimum can sit several steps from the true one.
        let a = ts[i.saturating_sub(BRACKET)];
        let b = ts[(i + BRACKET).min(n - 1)];
        let t = golden_min(dist_at, a, b, 1e-12);
        let (tp, dist) = distance_to_curve(&c1.eval(t), c2, 1e-13).expect("finite point");
        let u = unit_tangent(c1, t);
        let v = unit_tangent(c2, tp);
        let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        let sine = u.iter().zip(&v).map(|(x, y)| (x - dot * y).powi(2)).sum::<f64>().sqrt();
        let verdict = OracleVerdict {
            tangent: dist <= tol && sine <= tol,
            t,
            t_other: tp,
            dist,
            sine,
        };
        best = match best {
            Some(b) if b.tangent || (!verdict.tangent && b.dist <= verdict.dist) => Some(b),
            _ => Some(verdict),
        };
    }
    best.expect("at least one candidate")
}
