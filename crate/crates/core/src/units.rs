//! Physical constants and frequency conversions.
//!
//! Every frequency inside the crate is an angular frequency in rad/s and every
//! time is in seconds. Conversions from "2π × GHz" style values happen only
//! when a config file is parsed.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reduced Planck constant (J s), CODATA 2018 exact.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K), CODATA 2018 exact.
pub const K_B: f64 = 1.380_649e-23;

pub fn ghz(value: f64) -> f64 {
    2.0 * PI * value * 1e9
}

pub fn mhz(value: f64) -> f64 {
    2.0 * PI * value * 1e6
}

pub fn khz(value: f64) -> f64 {
    2.0 * PI * value * 1e3
}

/// A config value for an angular frequency: either a bare number in rad/s or
/// a table such as `{ ghz = 9.0 }` meaning 2π × 9 GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngularFrequency {
    RadPerSecond(f64),
    Cyclic(CyclicFrequency),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicFrequency {
    #[serde(default)]
    pub ghz: f64,
    #[serde(default)]
    pub mhz: f64,
    #[serde(default)]
    pub khz: f64,
    #[serde(default)]
    pub hz: f64,
}

impl AngularFrequency {
    pub fn rad_per_s(self) -> f64 {
        match self {
            AngularFrequency::RadPerSecond(w) => w,
            AngularFrequency::Cyclic(c) => ghz(c.ghz) + mhz(c.mhz) + khz(c.khz) + 2.0 * PI * c.hz,
        }
    }
}

impl From<f64> for AngularFrequency {
    fn from(w: f64) -> Self {
        AngularFrequency::RadPerSecond(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct Probe {
        w: AngularFrequency,
    }

    #[test]
    fn parses_both_forms() {
        let a: Probe = toml::from_str("w = 12.5").unwrap();
        assert_eq!(a.w.rad_per_s(), 12.5);
        let b: Probe = toml::from_str("w = { ghz = 10.0 }").unwrap();
        assert!((b.w.rad_per_s() - 2.0 * PI * 1e10).abs() < 1e-3);
        let c: Probe = toml::from_str("w = { khz = 20 }").unwrap();
        assert!((c.w.rad_per_s() - 2.0 * PI * 2e4).abs() < 1e-9);
    }
}
