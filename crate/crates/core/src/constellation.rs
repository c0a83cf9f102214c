//! Square QAM constellations built as the self-product of a symmetric PAM.
//!
//! Shaping is parametrized by the spacing-normalized exponent `nu = beta * delta^2`,
//! so the Maxwell–Boltzmann weights live on the integer-offset grid
//! `n = -(N-1)/2, ..., (N-1)/2` and the spacing follows in closed form from the
//! mean-photon-number constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability-sum tolerance for a valid alphabet.
const PROB_SUM_TOL: f64 = 1e-12;

/// Input shaping of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shaping {
    Uniform,
    MaxwellBoltzmann { nu: f64 },
}

impl Shaping {
    /// Spacing-normalized MB exponent; zero for uniform signaling.
    pub fn nu(&self) -> f64 {
        match *self {
            Shaping::Uniform => 0.0,
            Shaping::MaxwellBoltzmann { nu } => nu,
        }
    }
}

/// One quadrature of the QAM: `N` equally spaced symmetric levels and their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PamAlphabet {
    spacing: f64,
    points: Vec<f64>,
    probabilities: Vec<f64>,
}

impl PamAlphabet {
    /// Builds an alphabet from its spacing and per-level probabilities.
    ///
    /// The level count is `probabilities.len()` and must be a power of two.
    pub fn new(spacing: f64, probabilities: Vec<f64>) -> Result<Self> {
        let levels = probabilities.len();
        if levels == 0 || !levels.is_power_of_two() {
            return Err(Error::InvalidConstellation(format!(
                "level count {levels} is not a power of two"
            )));
        }
        if !(spacing >= 0.0) || !spacing.is_finite() {
            return Err(Error::ParameterDomain(format!("spacing {spacing}")));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidConstellation("negative or NaN probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidConstellation(format!("probabilities sum to {total}")));
        }
        for i in 0..levels / 2 {
            let (a, b) = (probabilities[i], probabilities[levels - 1 - i]);
            if (a - b).abs() > PROB_SUM_TOL * a.max(b).max(1.0) {
                return Err(Error::InvalidConstellation(format!(
                    "asymmetric probabilities at level {i}: {a} vs {b}"
                )));
            }
        }
        let points = normalized_grid(levels).into_iter().map(|n| n * spacing).collect();
        Ok(Self {
            spacing,
            points,
            probabilities,
        })
    }

    pub fn levels(&self) -> usize {
        self.points.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `E[x^2]` of one quadrature.
    pub fn second_moment(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probabilities)
            .map(|(x, p)| p * x * x)
            .sum()
    }

    /// Shannon entropy of the level distribution, in bits.
    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.probabilities)
    }
}

/// A square `M = N^2` QAM with product probabilities `p(x) p(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pam: PamAlphabet,
    shaping: Shaping,
    mean_photons: f64,
}

impl Constellation {
    /// Wraps an alphabet; the photon number is computed, not trusted.
    pub fn from_pam(pam: PamAlphabet, shaping: Shaping) -> Self {
        let mean_photons = 2.0 * pam.second_moment();
        Self {
            pam,
            shaping,
            mean_photons,
        }
    }

    pub fn pam(&self) -> &PamAlphabet {
        &self.pam
    }

    pub fn shaping(&self) -> Shaping {
        self.shaping
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn cardinality(&self) -> usize {
        self.pam.levels() * self.pam.levels()
    }

    /// Largest `|alpha|^2` among symbols whose probability exceeds `min_weight`.
    pub fn max_energy_above(&self, min_weight: f64) -> f64 {
        let pam = &self.pam;
        let mut best = 0.0f64;
        for (x, px) in pam.points().iter().zip(pam.probabilities()) {
            for (y, py) in pam.points().iter().zip(pam.probabilities()) {
                if px * py > min_weight {
                    best = best.max(x * x + y * y);
                }
            }
        }
        best
    }
}

/// The integer-offset grid `-(N-1)/2, ..., (N-1)/2`.
pub fn normalized_grid(levels: usize) -> Vec<f64> {
    let half = (levels as f64 - 1.0) / 2.0;
    (0..levels).map(|i| i as f64 - half).collect()
}

/// Maxwell–Boltzmann weights `exp(-nu n^2)` on a normalized grid.
pub fn mb_weights(normalized_points: &[f64], nu: f64) -> Result<Vec<f64>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::ParameterDomain(format!("shaping nu = {nu}")));
    }
    if normalized_points.is_empty() {
        return Err(Error::InvalidConstellation("empty grid".into()));
    }
    // Shift by the innermost energy so the largest weight is exp(0).
    let inner = normalized_points.iter().map(|n| n * n).fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = normalized_points
        .iter()
        .map(|n| (-nu * (n * n - inner)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Spacing that gives the QAM built from two copies of this PAM mean photon number `mean_photons`.
pub fn solve_spacing(levels: usize, probabilities: &[f64], mean_photons: f64) -> Result<f64> {
    if probabilities.len() != levels {
        return Err(Error::InvalidConstellation(format!(
            "{} probabilities for {levels} levels",
            probabilities.len()
        )));
    }
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::ParameterDomain(format!("mean photon number {mean_photons}")));
    }
    let moment: f64 = normalized_grid(levels)
        .iter()
        .zip(probabilities)
        .map(|(n, p)| p * n * n)
        .sum();
    if !(moment > 0.0) {
        return Err(Error::InvalidConstellation(
            "zero second moment on the normalized grid".into(),
        ));
    }
    Ok((mean_photons / 2.0 / moment).sqrt())
}

/// `E[x^2] + E[y^2]` of the product QAM.
pub fn mean_photon_number(c: &Constellation) -> f64 {
    2.0 * c.pam().second_moment()
}

/// Builds an `M`-QAM with the requested shaping and mean photon number.
pub fn build_constellation(order: usize, shaping: Shaping, mean_photons: f64) -> Result<Constellation> {
    let levels = qam_levels(order)?;
    let probabilities = match shaping {
        Shaping::Uniform => vec![1.0 / levels as f64; levels],
        Shaping::MaxwellBoltzmann { nu } => mb_weights(&normalized_grid(levels), nu)?,
    };
    let spacing = solve_spacing(levels, &probabilities, mean_photons)?;
    let pam = PamAlphabet::new(spacing, probabilities)?;
    Ok(Constellation::from_pam(pam, shaping))
}

/// `sqrt(M)` for a square QAM whose side is a power of two (at least 2).
pub fn qam_levels(order: usize) -> Result<usize> {
    let side = (order as f64).sqrt().round() as usize;
    if side < 2 || side * side != order || !side.is_power_of_two() {
        return Err(Error::InvalidConstellation(format!(
            "M = {order} is not the square of a power of two"
        )));
    }
    Ok(side)
}

pub(crate) fn entropy_bits(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn binary_weights_are_always_even() {
        for nu in [0.0, 0.3, 7.0, 20.0] {
            let p = mb_weights(&normalized_grid(2), nu).unwrap();
            assert_eq!(p, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn zero_nu_is_uniform() {
        let p = mb_weights(&normalized_grid(4), 0.0).unwrap();
        for v in p {
            assert_relative_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn four_level_weights_at_unit_nu() {
        let p = mb_weights(&[-1.5, -0.5, 0.5, 1.5], 1.0).unwrap();
        let want = [0.0596, 0.4404, 0.4404, 0.0596];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn negative_nu_rejected() {
        assert!(matches!(
            mb_weights(&normalized_grid(4), -0.1),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn spacing_closed_forms() {
        assert_relative_eq!(
            solve_spacing(2, &[0.5, 0.5], 1.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(solve_spacing(2, &[0.5, 0.5], 0.5).unwrap(), 1.0, epsilon = 1e-15);
        let p = mb_weights(&normalized_grid(4), 1.0).unwrap();
        let delta = solve_spacing(4, &p, 2.0).unwrap();
        assert!((delta - 1.4310).abs() < 1e-3, "{delta}");
    }

    #[test]
    fn single_level_has_no_spacing() {
        assert!(solve_spacing(1, &[1.0], 1.0).is_err());
    }

    #[test]
    fn photon_number_examples() {
        let c = Constellation::from_pam(PamAlphabet::new(2f64.sqrt(), vec![0.5; 2]).unwrap(), Shaping::Uniform);
        assert_relative_eq!(mean_photon_number(&c), 1.0, epsilon = 1e-15);
        let c = Constellation::from_pam(PamAlphabet::new(1.0, vec![0.125; 8]).unwrap(), Shaping::Uniform);
        assert_relative_eq!(mean_photon_number(&c), 10.5, epsilon = 1e-14);
        let c = Constellation::from_pam(PamAlphabet::new(0.0, vec![0.125; 8]).unwrap(), Shaping::Uniform);
        assert_eq!(mean_photon_number(&c), 0.0);
    }

    #[test]
    fn qpsk_build() {
        let c = build_constellation(4, Shaping::Uniform, 1.0).unwrap();
        assert_eq!(c.pam().levels(), 2);
        assert_eq!(c.cardinality(), 4);
        assert_relative_eq!(c.pam().spacing(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(c.pam().probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_nu_matches_uniform_build() {
        let a = build_constellation(16, Shaping::Uniform, 3.7).unwrap();
        let b = build_constellation(16, Shaping::MaxwellBoltzmann { nu: 0.0 }, 3.7).unwrap();
        assert_eq!(a.pam(), b.pam());
    }

    #[test]
    fn shaped_64qam_hits_target() {
        let c = build_constellation(64, Shaping::MaxwellBoltzmann { nu: 0.5 }, 5.0).unwrap();
        assert_relative_eq!(mean_photon_number(&c), 5.0, max_relative = 1e-10);
    }

    #[test]
    fn bad_orders_rejected() {
        for m in [0, 1, 2, 8, 9, 36, 100, 144] {
            assert!(build_constellation(m, Shaping::Uniform, 1.0).is_err(), "M = {m}");
        }
        for m in [4, 16, 64, 256, 1024] {
            assert!(build_constellation(m, Shaping::Uniform, 1.0).is_ok(), "M = {m}");
        }
    }

    #[test]
    fn asymmetric_probabilities_rejected() {
        assert!(PamAlphabet::new(1.0, vec![0.2, 0.3, 0.3, 0.2]).is_ok());
        assert!(PamAlphabet::new(1.0, vec![0.1, 0.4, 0.3, 0.2]).is_err());
    }

    #[test]
    fn large_nu_collapses_to_qpsk() {
        let p = mb_weights(&normalized_grid(8), 20.0).unwrap();
        let outer: f64 = p[..3].iter().chain(&p[5..]).sum();
        assert!(outer < 1e-17, "{outer}");
    }

    proptest! {
        #[test]
        fn build_round_trips_photon_number(
            k in 1u32..6,
            nu in 0.0f64..20.0,
            nbar in 1e-3f64..400.0,
        ) {
            let order = 1usize << (2 * k);
            let c = build_constellation(order, Shaping::MaxwellBoltzmann { nu }, nbar).unwrap();
            prop_assert!((mean_photon_number(&c) - nbar).abs() <= 1e-10 * nbar);
            let pam = c.pam();
            let n = pam.levels();
            for i in 0..n {
                prop_assert_eq!(pam.points()[i], -pam.points()[n - 1 - i]);
            }
        }

        #[test]
        fn shaping_is_monotone(k in 1u32..4, nu in 0.0f64..5.0, step in 1e-3f64..5.0) {
            let n = 2usize << k;
            let grid = normalized_grid(n);
            let lo = mb_weights(&grid, nu).unwrap();
            let hi = mb_weights(&grid, nu + step).unwrap();
            prop_assert!(hi[0] < lo[0]);
            prop_assert!(hi[n / 2] > lo[n / 2]);
            prop_assert!(entropy_bits(&hi) <= entropy_bits(&lo) + 1e-12);
        }
    }
}
