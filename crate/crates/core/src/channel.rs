//! Linear lossy fiber channel in shot-noise units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard single-mode fiber loss at 1550 nm.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Vacuum quadrature variance; every variance in this crate is a multiple of it.
pub const SHOT_NOISE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Link length in km; `None` when built directly from a transmittance.
    pub distance_km: Option<f64>,
    pub attenuation_db_per_km: f64,
    pub transmittance: f64,
    /// Excess noise referred to the channel input, SNU.
    pub excess_noise: f64,
}

impl ChannelParams {
    /// Fiber of `distance_km` at 0.2 dB/km.
    pub fn from_distance(distance_km: f64, excess_noise: f64) -> Result<Self> {
        Self::with_attenuation(distance_km, DEFAULT_ATTENUATION_DB_PER_KM, excess_noise)
    }

    pub fn with_attenuation(distance_km: f64, attenuation_db_per_km: f64, excess_noise: f64) -> Result<Self> {
        let transmittance = transmittance_from_distance(distance_km, attenuation_db_per_km)?;
        check_noise(excess_noise)?;
        Ok(Self {
            distance_km: Some(distance_km),
            attenuation_db_per_km,
            transmittance,
            excess_noise,
        })
    }

    pub fn from_transmittance(transmittance: f64, excess_noise: f64) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::ParameterDomain(format!("transmittance {transmittance}")));
        }
        check_noise(excess_noise)?;
        Ok(Self {
            distance_km: None,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            transmittance,
            excess_noise,
        })
    }

    /// Same link with a different excess noise.
    pub fn with_excess_noise(&self, excess_noise: f64) -> Result<Self> {
        check_noise(excess_noise)?;
        Ok(Self { excess_noise, ..*self })
    }

    /// Variance of Bob's homodyne outcome conditioned on Alice's symbol.
    pub fn output_noise_variance(&self) -> f64 {
        output_noise_variance(self.transmittance, self.excess_noise)
    }

    /// Second moment `1 - T + xi T` of the added noise modes.
    pub fn noise_mode_variance(&self) -> f64 {
        SHOT_NOISE - self.transmittance + self.excess_noise * self.transmittance
    }

    /// Mean photon number per symbol at Bob's input, `T (nbar + xi/2)`.
    pub fn received_photons(&self, mean_photons: f64) -> f64 {
        self.transmittance * (mean_photons + self.excess_noise / 2.0)
    }
}

fn check_noise(xi: f64) -> Result<()> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::ParameterDomain(format!("excess noise {xi}")));
    }
    Ok(())
}

/// `T = 10^(-eta d / 10)`.
pub fn transmittance_from_distance(distance_km: f64, attenuation_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) || !distance_km.is_finite() {
        return Err(Error::ParameterDomain(format!("distance {distance_km} km")));
    }
    if !(attenuation_db_per_km > 0.0) || !attenuation_db_per_km.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "attenuation {attenuation_db_per_km} dB/km"
        )));
    }
    Ok(10f64.powf(-attenuation_db_per_km * distance_km / 10.0))
}

/// `sigma_xi^2 = 1 + T xi`.
pub fn output_noise_variance(transmittance: f64, excess_noise: f64) -> f64 {
    SHOT_NOISE * (1.0 + transmittance * excess_noise)
}
