//! Gaussian-extremal bound on Eve's Holevo information for homodyne reverse reconciliation.
//!
//! The covariance matrix is kept in standard form
//! `Γ = [[V I, Z σz], [Z σz, W I]]`, so every quantity has a closed form.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Symplectic eigenvalues may undershoot 1 by this much before the state is rejected.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// `g` takes `(ν - 1) / 2`, so it inherits half the eigenvalue slack.
const G_NEGATIVE_TOL: f64 = 0.5 * PHYSICALITY_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCovariance {
    /// Alice's quadrature variance `V`.
    pub alice: f64,
    /// Bob's quadrature variance `W`.
    pub bob: f64,
    /// Cross term `Z`.
    pub correlation: f64,
}

impl TwoModeCovariance {
    pub fn new(alice: f64, bob: f64, correlation: f64) -> Result<Self> {
        let cov = Self {
            alice,
            bob,
            correlation,
        };
        if !(alice >= 1.0 - PHYSICALITY_TOL && bob >= 1.0 - PHYSICALITY_TOL && alice * bob > correlation * correlation)
        {
            return Err(Error::Physicality(format!(
                "covariance V={alice}, W={bob}, Z={correlation} is not positive"
            )));
        }
        let (_, d2) = symplectic_eigenvalues(&cov)?;
        if d2 < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Physicality(format!(
                "symplectic eigenvalue {d2} < 1 for V={alice}, W={bob}, Z={correlation}"
            )));
        }
        Ok(cov)
    }

    /// `det Γ = (VW - Z²)²`.
    pub fn determinant(&self) -> f64 {
        let s = self.alice * self.bob - self.correlation * self.correlation;
        s * s
    }

    /// The full 4×4 matrix in `(q_A, p_A, q_B, p_B)` order.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let (v, w, z) = (self.alice, self.bob, self.correlation);
        [[v, 0.0, z, 0.0], [0.0, v, 0.0, -z], [z, 0.0, w, 0.0], [0.0, -z, 0.0, w]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolevoBreakdown {
    pub d1: f64,
    pub d2: f64,
    /// Symplectic eigenvalue of Alice's mode after Bob's homodyne measurement.
    pub nu3: f64,
    pub s_ab: f64,
    pub s_a_given_b: f64,
    pub chi_be: f64,
}

/// Covariance of the state shared after the channel, given Alice's side `Z_AA'`.
///
/// `V = 1 + 2 nbar`, `W = T V + 1 - T + T xi`, `Z = sqrt(T) Z_AA'`.
pub fn assemble_covariance(mean_photons: f64, z_aa: f64, channel: &ChannelParams) -> Result<TwoModeCovariance> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::ParameterDomain(format!("mean photon number {mean_photons}")));
    }
    let t = channel.transmittance;
    let v = 1.0 + 2.0 * mean_photons;
    let w = t * v + channel.noise_mode_variance();
    TwoModeCovariance::new(v, w, t.sqrt() * z_aa)
}

/// `(d1, d2)` with `d1 >= d2`, from the invariants `Δ = V² + W² - 2Z²` and `det Γ`.
pub fn symplectic_eigenvalues(cov: &TwoModeCovariance) -> Result<(f64, f64)> {
    let (v, w, z) = (cov.alice, cov.bob, cov.correlation);
    if ![v, w, z].iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite covariance {cov:?}")));
    }
    let i1 = v * v;
    let i2 = w * w;
    let i3 = -z * z;
    let i4 = cov.determinant();
    let delta = i1 + i2 + 2.0 * i3;
    let disc = delta * delta - 4.0 * i4;
    if disc < -1e-9 * delta * delta.max(1.0) {
        return Err(Error::Numerical(format!("negative discriminant {disc:e} for {cov:?}")));
    }
    let d1_sq = 0.5 * (delta + disc.max(0.0).sqrt());
    if !(d1_sq > 0.0) {
        return Err(Error::Numerical(format!("degenerate covariance {cov:?}")));
    }
    let d1 = d1_sq.sqrt();
    // d1 d2 = sqrt(det Γ); avoids cancellation in (Δ - sqrt(disc)) / 2.
    let d2 = i4.sqrt() / d1;
    Ok((d1, d2))
}

/// `g(x) = (x+1) log2(x+1) - x log2 x`, with `g(0) = 0`.
pub fn g_function(x: f64) -> Result<f64> {
    if x < -G_NEGATIVE_TOL || x.is_nan() {
        return Err(Error::ParameterDomain(format!("g({x})")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// `sqrt(det(γ_A - γ_C (γ_B + γ_M)^-1 γ_Cᵀ))` in the homodyne limit `λ → 0`.
///
/// The conditional matrix becomes `diag(V - Z²/W, V)`.
pub fn conditional_eigenvalue_homodyne(cov: &TwoModeCovariance) -> Result<f64> {
    let (v, w, z) = (cov.alice, cov.bob, cov.correlation);
    if !(w > 0.0) {
        return Err(Error::Physicality(format!("Bob variance {w}")));
    }
    let reduced = v - z * z / w;
    if reduced < -PHYSICALITY_TOL {
        return Err(Error::Physicality(format!("conditional variance {reduced} < 0")));
    }
    Ok((v * reduced.max(0.0)).sqrt())
}

/// `χ_BE = S(AB) - S(A|B)` of the Gaussian state with covariance `cov`.
pub fn holevo_information(cov: &TwoModeCovariance) -> Result<HolevoBreakdown> {
    let (d1, d2) = symplectic_eigenvalues(cov)?;
    let nu3 = conditional_eigenvalue_homodyne(cov)?;
    for (name, d) in [("d1", d1), ("d2", d2), ("nu3", nu3)] {
        if d < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Physicality(format!("{name} = {d} < 1")));
        }
    }
    let s_ab = g_function((d1 - 1.0) / 2.0)? + g_function((d2 - 1.0) / 2.0)?;
    let s_a_given_b = g_function((nu3 - 1.0) / 2.0)?;
    let mut chi_be = s_ab - s_a_given_b;
    if (-PHYSICALITY_TOL..0.0).contains(&chi_be) {
        chi_be = 0.0;
    }
    Ok(HolevoBreakdown {
        d1,
        d2,
        nu3,
        s_ab,
        s_a_given_b,
        chi_be,
    })
}
