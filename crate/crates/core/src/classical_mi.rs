//! Mutual information between Alice's quadrature symbol and Bob's homodyne outcome.
//!
//! Bob measures one quadrature, so the channel seen by the classical layer is
//! the scalar AWGN channel `x_B = 2 sqrt(T) x_A + n`, `n ~ N(0, 1 + T xi)`.
//! Rates are per measured quadrature; no factor of two is applied.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::constellation::PamAlphabet;
use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

pub const MIN_NODES: usize = 32;
pub const DEFAULT_NODES: usize = 128;
/// Doubling stops with an error past this order.
pub const MAX_NODES: usize = 4096;
/// Largest change (bits) tolerated between successive doublings.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub node_count: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            node_count: DEFAULT_NODES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MiRequest<'a> {
    pub pam: &'a PamAlphabet,
    pub channel: &'a ChannelParams,
    pub rule: QuadratureRule,
}

/// Discrete-input AWGN mutual information in bits per channel use.
///
/// Starts at the configured node count and doubles until two successive
/// orders agree within [`CONVERGENCE_TOL`].
pub fn mi_discrete_awgn(req: &MiRequest<'_>) -> Result<f64> {
    if req.rule.node_count < MIN_NODES {
        return Err(Error::ParameterDomain(format!(
            "quadrature node count {} < {MIN_NODES}",
            req.rule.node_count
        )));
    }
    let setup = Setup::new(req.pam, req.channel);
    let mut nodes = req.rule.node_count;
    let mut prev = setup.evaluate(nodes)?;
    loop {
        let next_nodes = nodes * 2;
        if next_nodes > MAX_NODES {
            let change = (setup.evaluate(nodes)? - setup.evaluate(nodes / 2)?).abs();
            return Err(Error::QuadratureNotConverged { nodes, change });
        }
        let next = setup.evaluate(next_nodes)?;
        if (next - prev).abs() < CONVERGENCE_TOL {
            return Ok(next.max(0.0));
        }
        prev = next;
        nodes = next_nodes;
    }
}

/// Same integral at one fixed order, without the doubling loop.
pub fn mi_discrete_awgn_fixed(pam: &PamAlphabet, channel: &ChannelParams, nodes: usize) -> Result<f64> {
    Setup::new(pam, channel).evaluate(nodes)
}

/// Gaussian-modulation (GG02) counterpart: `½ log2(1 + 2 T nbar / (1 + T xi))`.
pub fn mi_gaussian_awgn(mean_photons: f64, channel: &ChannelParams) -> Result<f64> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::ParameterDomain(format!("mean photon number {mean_photons}")));
    }
    let snr = 2.0 * channel.transmittance * mean_photons / channel.output_noise_variance();
    Ok(0.5 * snr.ln_1p() / LN_2)
}

struct Setup {
    means: Vec<f64>,
    log_probs: Vec<f64>,
    probs: Vec<f64>,
    /// `sigma * sqrt(2)`, the scale of the Hermite substitution.
    scale: f64,
}

impl Setup {
    fn new(pam: &PamAlphabet, channel: &ChannelParams) -> Self {
        let gain = 2.0 * channel.transmittance.sqrt();
        let means = pam.points().iter().map(|x| gain * x).collect();
        let probs = pam.probabilities().to_vec();
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        let scale = (2.0 * channel.output_noise_variance()).sqrt();
        Self {
            means,
            log_probs,
            probs,
            scale,
        }
    }

    /// `Σ_a p_a E[log p(x_B|a) / p(x_B)]` in bits, with `x_B = mu_a + sigma sqrt(2) t`.
    ///
    /// After the substitution the log-ratio is
    /// `-ln Σ_b p_b exp(-u_ab^2 - 2 u_ab t)`, `u_ab = (mu_a - mu_b) / (sigma sqrt(2))`.
    fn evaluate(&self, nodes: usize) -> Result<f64> {
        let rule = gauss_hermite(nodes)?;
        let n = self.means.len();
        let mut total = 0.0;
        let mut exps = vec![0.0; n];
        let mut u = vec![0.0; n];
        // p is symmetric, so symbol a and its mirror contribute equally.
        for a in 0..n.div_ceil(2) {
            if self.probs[a] == 0.0 {
                continue;
            }
            for (ub, mb) in u.iter_mut().zip(&self.means) {
                *ub = (self.means[a] - mb) / self.scale;
            }
            let mut acc = 0.0;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let mut max = f64::NEG_INFINITY;
                for b in 0..n {
                    let e = self.log_probs[b] - u[b] * u[b] - 2.0 * u[b] * t;
                    exps[b] = e;
                    max = max.max(e);
                }
                let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
                acc -= w * (max + sum.ln());
            }
            let mult = if 2 * a + 1 == n { 1.0 } else { 2.0 };
            total += mult * self.probs[a] * acc;
        }
        Ok(total / PI.sqrt() / LN_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_constellation, Shaping};
    use approx::assert_relative_eq;

    fn ideal() -> ChannelParams {
        ChannelParams::from_transmittance(1.0, 0.0).unwrap()
    }

    fn mi(pam: &PamAlphabet, ch: &ChannelParams) -> f64 {
        mi_discrete_awgn(&MiRequest {
            pam,
            channel: ch,
            rule: QuadratureRule::default(),
        })
        .unwrap()
    }

    #[test]
    fn zero_spacing_carries_nothing() {
        let pam = PamAlphabet::new(0.0, vec![0.25; 4]).unwrap();
        assert_eq!(mi(&pam, &ideal()), 0.0);
    }

    #[test]
    fn noiseless_binary_saturates() {
        let pam = PamAlphabet::new(20.0, vec![0.5; 2]).unwrap();
        assert_relative_eq!(mi(&pam, &ideal()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn binary_unit_photon_reference() {
        // Independent numerical evaluation of the same integral, 200-node rule.
        let pam = PamAlphabet::new(2f64.sqrt(), vec![0.5; 2]).unwrap();
        assert!((mi(&pam, &ideal()) - 0.721451590790385).abs() < 1e-9);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let pam = PamAlphabet::new(1.0, vec![0.5; 2]).unwrap();
        let ch = ideal();
        let req = MiRequest {
            pam: &pam,
            channel: &ch,
            rule: QuadratureRule { node_count: 16 },
        };
        assert!(mi_discrete_awgn(&req).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let ch = ChannelParams::from_transmittance(0.3, 0.05).unwrap();
        assert_eq!(mi_gaussian_awgn(0.0, &ch).unwrap(), 0.0);
        assert_relative_eq!(mi_gaussian_awgn(1.5, &ideal()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bounded_by_entropy_and_capacity() {
        let ch = ChannelParams::from_distance(20.0, 0.02).unwrap();
        for order in [4, 16, 64] {
            for nu in [0.0, 0.2, 1.0] {
                for nbar in [0.1, 1.0, 10.0, 100.0] {
                    let c = build_constellation(order, Shaping::MaxwellBoltzmann { nu }, nbar).unwrap();
                    let v = mi(c.pam(), &ch);
                    assert!(v >= 0.0);
                    assert!(v <= c.pam().entropy_bits() + 1e-12);
                    assert!(v <= mi_gaussian_awgn(nbar, &ch).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn monotone_in_power_and_noise() {
        let ch = ChannelParams::from_distance(50.0, 0.0).unwrap();
        for order in [4, 16, 64] {
            let mut last = 0.0;
            for nbar in [0.01, 0.05, 0.2, 1.0, 3.0, 10.0, 50.0] {
                let c = build_constellation(order, Shaping::MaxwellBoltzmann { nu: 0.1 }, nbar).unwrap();
                let v = mi(c.pam(), &ch);
                assert!(v >= last - 1e-12, "M={order} nbar={nbar}");
                last = v;
            }
            let c = build_constellation(order, Shaping::Uniform, 2.0).unwrap();
            let mut last = f64::INFINITY;
            for xi in [0.0, 0.01, 0.05, 0.1, 0.3] {
                let v = mi(c.pam(), &ch.with_excess_noise(xi).unwrap());
                assert!(v <= last + 1e-12);
                last = v;
            }
        }
    }

    #[test]
    fn node_doubling_is_stable() {
        let ch = ChannelParams::from_distance(100.0, 0.0).unwrap();
        for order in [4, 16, 64] {
            let c = build_constellation(order, Shaping::MaxwellBoltzmann { nu: 0.3 }, 2.0).unwrap();
            let a = mi_discrete_awgn_fixed(c.pam(), &ch, 128).unwrap();
            let b = mi_discrete_awgn_fixed(c.pam(), &ch, 256).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }
}
