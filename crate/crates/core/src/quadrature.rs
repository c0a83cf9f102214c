//! Gauss–Hermite rules for `∫ exp(-t^2) f(t) dt`.
//!
//! Nodes come from Newton iteration on the orthonormal Hermite recurrence,
//! which stays in floating-point range for thousands of nodes. Rules are
//! cached per order since the MI integrator requests the same few orders
//! over and over.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ w_i f(t_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(t, w)| w * f(*t)).sum()
    }
}

/// Cached rule of the given order.
pub fn gauss_hermite(order: usize) -> Result<Arc<GaussHermite>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(compute_rule(order)?);
    cache.lock().unwrap().insert(order, rule.clone());
    Ok(rule)
}

fn compute_rule(n: usize) -> Result<GaussHermite> {
    if n == 0 {
        return Err(Error::ParameterDomain("zero-point quadrature".into()));
    }
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    const RESCALE: f64 = 1e100;
    let nf = n as f64;
    let half = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0f64;
    let s = 2.0 * nf + 1.0;
    let airy_count = (nf.cbrt() as usize).max(1);
    for i in 0..half {
        // Initial guesses for the largest roots, then extrapolation from the previous two.
        z = match i {
            // Edge roots of large orders: Airy-zero asymptotics. Plain
            // extrapolation skips roots there once n is in the hundreds.
            _ if n >= 64 && i < airy_count => {
                let t = 3.0 * PI / 8.0 * (4.0 * (i + 1) as f64 - 1.0);
                let airy = t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 / (t * t));
                s.sqrt() - 2f64.powf(-1.0 / 3.0) * s.powf(-1.0 / 6.0) * airy
            }
            0 => s.sqrt() - 1.85575 * s.powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        // Natural log of the factor divided out of the recurrence; the
        // unweighted polynomials overflow near the outer roots of large orders.
        let mut log_scale = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            log_scale = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                if p1.abs() > RESCALE {
                    p1 /= RESCALE;
                    p2 /= RESCALE;
                    log_scale += RESCALE.ln();
                }
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Gauss-Hermite root {i} of order {n} did not converge"
            )));
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 * (-2.0 * log_scale).exp() / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    // Ascending order.
    nodes.reverse();
    weights.reverse();
    Ok(GaussHermite { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn moments_are_exact() {
        for n in [1usize, 2, 5, 32, 63, 64, 100, 128, 1024, 4096] {
            let r = gauss_hermite(n).unwrap();
            assert_eq!(r.order(), n);
            assert_relative_eq!(r.integrate(|_| 1.0), SQRT_PI, max_relative = 1e-13);
            if n >= 2 {
                assert_relative_eq!(r.integrate(|t| t * t), SQRT_PI / 2.0, max_relative = 1e-12);
            }
            if n >= 3 {
                assert_relative_eq!(r.integrate(|t| t.powi(4)), 0.75 * SQRT_PI, max_relative = 1e-12);
            }
            assert!(r.integrate(|t| t).abs() < 1e-13);
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let r = gauss_hermite(64).unwrap();
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..64 {
            assert_eq!(r.nodes[i], -r.nodes[63 - i]);
        }
    }

    #[test]
    fn gaussian_expectation_of_cosine() {
        // E[cos(X)] for X ~ N(0, 1) is exp(-1/2).
        let r = gauss_hermite(128).unwrap();
        let v = r.integrate(|t| (std::f64::consts::SQRT_2 * t).cos()) / SQRT_PI;
        assert_relative_eq!(v, (-0.5f64).exp(), max_relative = 1e-13);
    }
}
