//! Bernstein ratio ‖F‖_∞ / (R^{s/p}‖F‖_p) for random band-limited fields on
//! the unit torus.

use super::cutoffs::plateau;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

/// Outcome of one batch of trials.
#[derive(Debug, Clone, Serialize)]
pub struct BernsteinReport {
    pub s: usize,
    pub radius: f64,
    pub p: f64,
    pub trials: u64,
    pub grid: usize,
    pub worst_ratio: f64,
    /// Worst ratio among the random-phase trials alone.
    pub worst_random: f64,
}

/// Field values on an N^s grid from a coefficient array indexed like the grid
/// (negative frequencies wrap).
fn synthesize(coeffs: &mut [Complex64], n: usize, s: usize, planner: &mut FftPlanner<f64>) {
    let fft = planner.plan_fft_inverse(n);
    match s {
        1 => fft.process(coeffs),
        2 => {
            fft.process(coeffs);
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = coeffs[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    coeffs[i * n + j] = col[i];
                }
            }
        }
        _ => unreachable!(),
    }
}

fn ratio(values: &[Complex64], radius: f64, s: usize, p: f64) -> f64 {
    let sup = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mean = values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / values.len() as f64;
    let lp = mean.powf(1.0 / p);
    if lp == 0.0 {
        return 0.0;
    }
    sup / (radius.powf(s as f64 / p) * lp)
}

/// Worst ratio over `trials` fields with spectrum in |k| ≤ R. Even trials use
/// random phases; odd trials use a wave packet centered at a random point,
/// which is the near-extremal case.
pub fn bernstein_check(s: usize, radius: f64, p: f64, trials: u64, seed: u64) -> Result<f64> {
    Ok(bernstein_report(s, radius, p, trials, seed)?.worst_ratio)
}

pub fn bernstein_report(s: usize, radius: f64, p: f64, trials: u64, seed: u64) -> Result<BernsteinReport> {
    if !(1..=2).contains(&s) {
        return Err(Error::InvalidInput(format!("torus dimension {s} not in {{1, 2}}")));
    }
    if !(p >= 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: "[1, ∞)".into(),
        });
    }
    if !(radius >= 1.0) || radius > 256.0 {
        return Err(Error::OutOfRange {
            name: "R",
            value: radius,
            range: "[1, 256]".into(),
        });
    }
    let n = ((8.0 * radius).ceil() as usize).next_power_of_two();
    let kmax = radius.floor() as i64;
    let freqs: Vec<i64> = (-kmax..=kmax).collect();
    let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
    let rng = CounterRng::new("bernstein", seed).derive(&format!("s{s}-R{radius}-p{p}"));
    let mut planner = FftPlanner::new();
    let mut worst: f64 = 0.0;
    let mut worst_random: f64 = 0.0;
    let size = n.pow(s as u32);
    for t in 0..trials {
        let mut st = rng.stream(t);
        let packet = t % 2 == 1;
        let x0: Vec<f64> = (0..s).map(|_| st.uniform()).collect();
        let eta = 0.25 * st.uniform();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); size];
        let mut put = |ks: &[i64], st: &mut crate::rng::Stream| {
            let norm = ks.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
            if norm > radius {
                return;
            }
            let c = if packet {
                let w = plateau(norm / radius, 0.5, 1.0);
                let phase: f64 = ks.iter().zip(&x0).map(|(&k, &x)| k as f64 * x).sum();
                let g = Complex64::new(st.normal(), st.normal());
                Complex64::from_polar(w, -2.0 * PI * phase) * (1.0 + eta * g)
            } else {
                Complex64::from_polar(st.range(0.0, 1.0), 2.0 * PI * st.uniform())
            };
            let idx = ks.iter().fold(0, |acc, &k| acc * n + wrap(k));
            coeffs[idx] = c;
        };
        if s == 1 {
            for &k in &freqs {
                put(&[k], &mut st);
            }
        } else {
            for &a in &freqs {
                for &b in &freqs {
                    put(&[a, b], &mut st);
                }
            }
        }
        synthesize(&mut coeffs, n, s, &mut planner);
        let q = ratio(&coeffs, radius, s, p);
        worst = worst.max(q);
        if !packet {
            worst_random = worst_random.max(q);
        }
    }
    Ok(BernsteinReport {
        s,
        radius,
        p,
        trials,
        grid: n,
        worst_ratio: worst,
        worst_random,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_single_mode_fields() {
        let n = 64;
        let mut planner = FftPlanner::new();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = Complex64::new(2.0, 0.0);
        synthesize(&mut c, n, 1, &mut planner);
        assert!((ratio(&c, 8.0, 1, 2.0) - 8f64.powf(-0.5)).abs() < 1e-12);

        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        m[8 * n + 3] = Complex64::new(1.0, 0.0);
        synthesize(&mut m, n, 2, &mut planner);
        assert!(m.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(ratio(&m, 8.0, 2, 4.0) <= 1.0);
    }

    #[test]
    fn worst_ratio_is_bounded_in_radius() {
        let r: Vec<f64> = [8.0, 16.0, 32.0].iter().map(|&big| bernstein_check(1, big, 2.0, 20, 1).unwrap()).collect();
        assert!(r.iter().all(|&v| v > 0.1 && v < 10.0), "{r:?}");
        assert!(r[2] / r[0] < 1.3 && r[0] / r[2] < 1.3, "{r:?}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bernstein_check(3, 8.0, 2.0, 1, 0).is_err());
        assert!(bernstein_check(1, 8.0, 0.5, 1, 0).is_err());
    }
}
