//! Frozen constants for the two-sided and dominance checks.
//!
//! Fitted once by `momentlab calibrate` on a dedicated seed set and checked in
//! as `data/calibration.toml`; tests read them and never refit.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Seed set used for fitting.
    pub seed: u64,
    /// C in MC volume ≤ C·δ^d/√((δ+Δ̄)(δ+d̄)).
    pub bound_constant: f64,
    /// c, C in c·δ^{d−1} ≤ L^d(H_δ) ≤ C·δ^{d−1} for scales in [1/2, 2], d = 3.
    pub tube_lower: f64,
    pub tube_upper: f64,
    /// C_dom in tube_average ≤ C_dom·smooth_average.
    pub smooth_domination: f64,
    /// Worst Bernstein ratio.
    pub bernstein: f64,
    /// B for the sampled symbol-decay condition.
    pub symbol_b: f64,
    /// Factor bounding tube averages under parameter moves of size δ.
    pub neighborhood: f64,
}

pub const CALIBRATION_TOML: &str = include_str!("../data/calibration.toml");

pub fn calibration() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| parse(CALIBRATION_TOML).expect("checked-in calibration file parses"))
}

pub fn parse(text: &str) -> Result<Calibration, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn render(c: &Calibration) -> String {
    toml::to_string(c).expect("calibration serializes")
}
