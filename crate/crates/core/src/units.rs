//! Natural-unit conversions (ħ = c = 1, Heaviside-Lorentz, energies in eV).
//!
//! Derived from CODATA 2018 values: ħ = 6.582119569e-16 eV s,
//! c = 299792458 m/s, α = 7.2973525693e-3.

use serde::Serialize;

/// 1 tesla in eV², `c² ħ / e / sqrt(4πα)`.
pub const TESLA_IN_EV2: f64 = 195.352_771;

/// 1 meter in eV⁻¹, `1 / (ħ c)`.
pub const METER_IN_INV_EV: f64 = 5.067_730_72e6;

/// 1 GeV⁻¹ in eV⁻¹.
pub const INV_GEV_IN_INV_EV: f64 = 1e-9;

pub fn tesla_to_ev2(b: f64) -> f64 {
    b * TESLA_IN_EV2
}

pub fn meters_to_inv_ev(l: f64) -> f64 {
    l * METER_IN_INV_EV
}

pub fn inv_gev_to_inv_ev(g: f64) -> f64 {
    g * INV_GEV_IN_INV_EV
}

/// Constant table recorded in every result file.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct UnitProvenance {
    pub tesla_in_ev2: f64,
    pub meter_in_inv_ev: f64,
    pub inv_gev_in_inv_ev: f64,
    pub source: &'static str,
}

impl Default for UnitProvenance {
    fn default() -> Self {
        UnitProvenance {
            tesla_in_ev2: TESLA_IN_EV2,
            meter_in_inv_ev: METER_IN_INV_EV,
            inv_gev_in_inv_ev: INV_GEV_IN_INV_EV,
            source: "CODATA 2018 (hbar, c, e exact; alpha = 7.2973525693e-3), \
                     natural Heaviside-Lorentz units",
        }
    }
}
