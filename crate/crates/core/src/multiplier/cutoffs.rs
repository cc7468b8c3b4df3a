//! Smooth cutoffs and the Fourier-compact bump ψ.

use crate::curve::MomentCurve;
use crate::quadrature::composite;
use crate::tube::covering_constant;
use serde::Serialize;

fn e(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for x ≤ 0, 1 for x ≥ 1.
pub fn ramp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let (a, b) = (e(x), e(1.0 - x));
        a / (a + b)
    }
}

/// Even bump equal to 1 on |x| ≤ inner and 0 on |x| ≥ outer.
pub fn plateau(x: f64, inner: f64, outer: f64) -> f64 {
    ramp((outer - x.abs()) / (outer - inner))
}

/// χ₀: support [−2, 2], equal to 1 on [−3/2, 3/2].
pub fn chi0(u: f64) -> f64 {
    plateau(u, 1.5, 2.0)
}

/// χ₁: support [1/4, 3], equal to 1 on [1/2, 2].
pub fn chi1(r: f64) -> f64 {
    ramp((r - 0.25) / 0.25) * ramp(3.0 - r)
}

/// Radial cutoff a(ξ): 1 on |ξ| ≤ 1, 0 on |ξ| ≥ 2.
pub fn radial(norm: f64) -> f64 {
    plateau(norm, 1.0, 2.0)
}

/// Generating bump of ψ, supported in [−1/2, 1/2].
pub fn seed_bump(x: f64) -> f64 {
    let y = 2.0 * x;
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

/// Inverse transform of the seed bump (real and even).
fn seed_transform(x: f64) -> f64 {
    let panels = 16 + (x.abs() * 2.0) as usize;
    2.0 * composite(0.0, 0.5, panels, 8, |t| seed_bump(t) * (2.0 * std::f64::consts::PI * x * t).cos())
}

/// Autoconvolution of the seed bump, supported in [−1, 1].
fn seed_autoconvolution(eta: f64) -> f64 {
    if eta.abs() >= 1.0 {
        return 0.0;
    }
    let (a, b) = ((eta - 0.5).max(-0.5), (eta + 0.5).min(0.5));
    composite(a, b, 32, 8, |y| seed_bump(y) * seed_bump(eta - y))
}

/// One-dimensional factor ψ₁(x) = A·φ(λx)², tabulated in space and frequency.
#[derive(Debug, Clone, Serialize)]
pub struct Psi1 {
    pub amplitude: f64,
    pub lambda: f64,
    /// ψ₁ ≥ 1 on [−radius, radius].
    pub radius: f64,
    /// Tabulation range [−extent, extent]; the mass outside is below `tail`.
    pub extent: f64,
    pub tail: f64,
    step: f64,
    values: Vec<f64>,
    cdf: Vec<f64>,
    spec_step: f64,
    spectrum: Vec<f64>,
}

impl Psi1 {
    /// Build with ψ₁ ≥ 1 on [−radius, radius] and truncation mass `tail`.
    pub fn new(radius: f64, tail: f64) -> Self {
        let phi0 = seed_transform(0.0);
        // Half-power point of φ², found by bisection on the decreasing part.
        let target = phi0 / 2f64.sqrt();
        let (mut a, mut b) = (0.0, 1.0);
        while seed_transform(b) > target {
            b *= 2.0;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if seed_transform(m) > target {
                a = m;
            } else {
                b = m;
            }
        }
        let lambda = a / radius;
        let amplitude = 2.0 / (phi0 * phi0);
        // Tabulate on a generous range, then cut where the tail is small.
        let big = 80.0 / lambda;
        let n = 1 << 14;
        let step = 2.0 * big / n as f64;
        let grid: Vec<f64> = (0..=n)
            .map(|i| {
                let v = seed_transform(lambda * (-big + i as f64 * step));
                amplitude * v * v
            })
            .collect();
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            cdf[i] = cdf[i - 1] + 0.5 * step * (grid[i - 1] + grid[i]);
        }
        let total = cdf[n];
        let mut half = 1;
        while half < n / 2 && 2.0 * cdf[n / 2 - half] > tail * total {
            half += 1;
        }
        let lo = n / 2 - half;
        let values = grid[lo..=n / 2 + half].to_vec();
        let base = cdf[lo];
        let cdf: Vec<f64> = cdf[lo..=n / 2 + half].iter().map(|c| c - base).collect();
        let spec_n = 4096;
        let spec_step = 2.0 * lambda / spec_n as f64;
        let spectrum = (0..=spec_n)
            .map(|i| amplitude / lambda * seed_autoconvolution((-lambda + i as f64 * spec_step) / lambda))
            .collect();
        Psi1 {
            amplitude,
            lambda,
            radius,
            extent: half as f64 * step,
            tail,
            step,
            values,
            cdf,
            spec_step,
            spectrum,
        }
    }

    /// ψ₁(x) from the closed form.
    pub fn eval(&self, x: f64) -> f64 {
        let v = seed_transform(self.lambda * x);
        self.amplitude * v * v
    }

    /// ∫_{−extent}^{x} ψ₁, by interpolation in the table.
    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x + self.extent) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = self.cdf.len() - 1;
        if pos >= last as f64 {
            return self.cdf[last];
        }
        let i = pos as usize;
        let f = pos - i as f64;
        // Exact integral of the linear interpolant of ψ₁ over the partial cell.
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        self.cdf[i] + self.step * (v0 * f + 0.5 * (v1 - v0) * f * f)
    }

    /// ∫ψ₁ over the truncated range.
    pub fn mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// ψ̂₁(η), zero for |η| ≥ λ.
    pub fn spectrum(&self, eta: f64) -> f64 {
        let pos = (eta + self.lambda) / self.spec_step;
        let last = self.spectrum.len() - 1;
        if pos <= 0.0 || pos >= last as f64 {
            return 0.0;
        }
        let i = pos as usize;
        let f = pos - i as f64;
        self.spectrum[i] * (1.0 - f) + self.spectrum[i + 1] * f
    }

    /// ψ̂₁(0) = ∫_R ψ₁.
    pub fn full_mass(&self) -> f64 {
        self.amplitude / self.lambda * seed_autoconvolution(0.0)
    }

    /// Tabulated samples (x, ψ₁(x)).
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (-self.extent + i as f64 * self.step, v))
    }
}

/// The cutoffs of the smoothed operator and the frequency decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffSet {
    pub d: usize,
    pub kappa: f64,
    pub psi: Psi1,
}

/// Cross-section radius that ψ must dominate: the covering constant at
/// δ/r = 1/4, the largest ratio used with the smoothed operator.
pub fn default_psi_radius(d: usize) -> f64 {
    let c = MomentCurve::standard(d, 1.0).expect("d ≥ 2");
    covering_constant(&c, 0.25)
}

/// Default cone constant 4d·1.5^{d−1}.
pub fn default_kappa(d: usize) -> f64 {
    4.0 * d as f64 * 1.5f64.powi(d as i32 - 1)
}

impl CutoffSet {
    pub fn chi0(&self, u: f64) -> f64 {
        chi0(u)
    }

    pub fn chi1(&self, r: f64) -> f64 {
        chi1(r)
    }

    /// a_d(ξ).
    pub fn low(&self, xi: &[f64]) -> f64 {
        radial(norm(xi))
    }

    /// Cone cutoff a₁(ξ₁/(κ|ξ̃|)): 1 where |ξ₁| ≤ κ|ξ̃|, 0 where |ξ₁| ≥ 2κ|ξ̃|.
    pub fn cone(&self, xi: &[f64]) -> f64 {
        let t = norm(&xi[1..]);
        if t == 0.0 {
            return if xi[0] == 0.0 { 1.0 } else { 0.0 };
        }
        plateau(xi[0] / (self.kappa * t), 1.0, 2.0)
    }

    /// Littlewood-Paley piece φ_k(ξ̃) = β(2^{−k}|ξ̃|) − β(2^{1−k}|ξ̃|).
    pub fn annulus(&self, k: i32, tail: &[f64]) -> f64 {
        let n = norm(tail);
        radial(n * 2f64.powi(-k)) - radial(n * 2f64.powi(1 - k))
    }

    /// ψ(x̃) = Π ψ₁(x̃_i).
    pub fn psi(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.psi.eval(v)).product()
    }

    /// ψ̂(η̃) = Π ψ̂₁(η̃_i).
    pub fn psi_hat(&self, eta: &[f64]) -> f64 {
        eta.iter().map(|&v| self.psi.spectrum(v)).product()
    }

    /// ‖χ₀‖₁.
    pub fn chi0_mass(&self) -> f64 {
        composite(-2.0, 2.0, 64, 8, chi0)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cutoffs for dimension d with cone constant κ and ψ₁ ≥ 1 on B(0, C) for
/// the default covering radius C.
pub fn build_cutoffs(d: usize, kappa: f64) -> crate::error::Result<CutoffSet> {
    use crate::error::Error;
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(kappa >= 4.0) {
        return Err(Error::OutOfRange {
            name: "kappa",
            value: kappa,
            range: "[4, ∞)".into(),
        });
    }
    Ok(CutoffSet {
        d,
        kappa,
        psi: Psi1::new(default_psi_radius(d), 1e-6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_supports() {
        for (x, v) in [(0.0, 1.0), (1.5, 1.0), (-1.5, 1.0), (2.0, 0.0), (-2.5, 0.0)] {
            assert_eq!(chi0(x), v);
        }
        for (x, v) in [(0.25, 0.0), (0.5, 1.0), (2.0, 1.0), (3.0, 0.0), (0.1, 0.0)] {
            assert_eq!(chi1(x), v);
        }
        assert!(chi0(1.75) > 0.0 && chi0(1.75) < 1.0);
        assert!((ramp(0.3) + ramp(0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_properties() {
        let c = build_cutoffs(3, default_kappa(3)).unwrap();
        let p = &c.psi;
        assert!(p.eval(0.0) >= 1.0);
        assert!(p.eval(p.radius) >= 1.0 - 1e-9 && p.eval(-p.radius) >= 1.0 - 1e-9);
        assert!(p.samples().all(|(_, v)| v >= 0.0));
        // Truncated mass agrees with ψ̂₁(0).
        assert!((p.mass() / p.full_mass() - 1.0).abs() < 2e-6);
        assert!((p.spectrum(0.0) - p.full_mass()).abs() < 1e-6 * p.full_mass());
        assert_eq!(p.spectrum(p.lambda * 1.01), 0.0);
        assert!((p.cdf(0.0) - 0.5 * p.mass()).abs() < 1e-9 * p.mass());
    }
}
