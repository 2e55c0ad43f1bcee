//! dBm/watt conversions and thermal noise.

use crate::error::{Error, Result};

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Noise power in watts for a receiver of the given bandwidth:
/// `-174 + 10 log10(B)` dBm.
pub fn noise_power(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth must be positive and finite, got {bandwidth_hz}"
        )));
    }
    Ok(dbm_to_watts(
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10(),
    ))
}
