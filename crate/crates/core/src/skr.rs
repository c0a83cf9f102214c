//! Devetak–Winter key rate with shaping and launch-power optimization.
//!
//! The rate per channel use is `SKR = ζ I_AB - χ_BE`. Negative rates are
//! reported as they are so that boundary searches see the sign.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::classical_mi::{mi_discrete_awgn, mi_gaussian_awgn, MiRequest, QuadratureRule};
use crate::constellation::{build_constellation, Shaping};
use crate::error::{Error, Result};
use crate::fock::{constellation_correlation, DEFAULT_TRACE_TOLERANCE};
use crate::holevo::{assemble_covariance, holevo_information, HolevoBreakdown, TwoModeCovariance};
use crate::optimize::{bisect_boundary, geometric_grid, grid_then_golden, Maximum};

pub const DEFAULT_RECONCILIATION_EFFICIENCY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QamShaping {
    Uniform,
    /// Maxwell–Boltzmann shaping with the shape parameter optimized per point.
    Pas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modulation {
    /// Gaussian modulation, the continuous-alphabet benchmark.
    Gg02,
    Qam {
        order: usize,
        shaping: QamShaping,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub modulation: Modulation,
    pub reconciliation_efficiency: f64,
}

impl ProtocolSpec {
    pub fn gg02() -> Self {
        Self::with_modulation(Modulation::Gg02)
    }

    pub fn uniform(order: usize) -> Self {
        Self::with_modulation(Modulation::Qam {
            order,
            shaping: QamShaping::Uniform,
        })
    }

    pub fn pas(order: usize) -> Self {
        Self::with_modulation(Modulation::Qam {
            order,
            shaping: QamShaping::Pas,
        })
    }

    fn with_modulation(modulation: Modulation) -> Self {
        Self {
            modulation,
            reconciliation_efficiency: DEFAULT_RECONCILIATION_EFFICIENCY,
        }
    }

    pub fn with_efficiency(self, zeta: f64) -> Result<Self> {
        let spec = Self {
            reconciliation_efficiency: zeta,
            ..self
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.reconciliation_efficiency;
        if !(z > 0.0 && z <= 1.0) {
            return Err(Error::ParameterDomain(format!("reconciliation efficiency {z}")));
        }
        if let Modulation::Qam { order, .. } = self.modulation {
            crate::constellation::qam_levels(order)?;
        }
        Ok(())
    }

    pub fn is_pas(&self) -> bool {
        matches!(
            self.modulation,
            Modulation::Qam {
                shaping: QamShaping::Pas,
                ..
            }
        )
    }

    /// Short name used in tables: `GG02`, `4QAM`, `U-16QAM`, `PAS-64QAM`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.modulation {
            Modulation::Gg02 => write!(f, "GG02"),
            Modulation::Qam {
                order: 4,
                shaping: QamShaping::Uniform,
            } => write!(f, "4QAM"),
            Modulation::Qam {
                order,
                shaping: QamShaping::Uniform,
            } => write!(f, "U-{order}QAM"),
            Modulation::Qam {
                order,
                shaping: QamShaping::Pas,
            } => write!(f, "PAS-{order}QAM"),
        }
    }
}

/// Accepts the table labels case-insensitively; a bare `MQAM` means uniform.
impl FromStr for ProtocolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "gg02" {
            return Ok(Self::gg02());
        }
        let (shaping, rest) = if let Some(r) = lower.strip_prefix("pas-") {
            (QamShaping::Pas, r)
        } else if let Some(r) = lower.strip_prefix("u-") {
            (QamShaping::Uniform, r)
        } else {
            (QamShaping::Uniform, lower.as_str())
        };
        let order: usize = rest
            .strip_suffix("qam")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::ParameterDomain(format!("unknown protocol '{s}'")))?;
        let spec = Self::with_modulation(Modulation::Qam { order, shaping });
        spec.validate()?;
        Ok(spec)
    }
}

/// Search brackets and tolerances for the nested optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub nu_max: f64,
    /// Smallest nonzero ν on the coarse grid; ν = 0 is always probed too.
    pub nu_grid_min: f64,
    pub nu_grid_points: usize,
    pub nu_tolerance: f64,
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub nbar_grid_points: usize,
    /// Relative tolerance on n̄ for both the peak search and the corridor edges.
    pub nbar_rel_tolerance: f64,
    pub xi_max: f64,
    pub xi_tolerance: f64,
    pub cutoff_tolerance: f64,
    pub quadrature_nodes: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            nu_max: 20.0,
            nu_grid_min: 0.01,
            nu_grid_points: 16,
            nu_tolerance: 1e-4,
            nbar_min: 1e-3,
            nbar_max: 400.0,
            nbar_grid_points: 60,
            nbar_rel_tolerance: 1e-3,
            xi_max: 0.5,
            xi_tolerance: 1e-4,
            cutoff_tolerance: DEFAULT_TRACE_TOLERANCE,
            quadrature_nodes: crate::classical_mi::DEFAULT_NODES,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nu_max > self.nu_grid_min
            && self.nu_grid_min > 0.0
            && self.nu_grid_points >= 2
            && self.nu_tolerance > 0.0
            && self.nbar_min > 0.0
            && self.nbar_max > self.nbar_min
            && self.nbar_grid_points >= 2
            && self.nbar_rel_tolerance > 0.0
            && self.xi_max > 0.0
            && self.xi_tolerance > 0.0
            && self.cutoff_tolerance > 0.0
            && self.quadrature_nodes >= crate::classical_mi::MIN_NODES;
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterDomain(format!("optimizer config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkrReport {
    pub protocol: ProtocolSpec,
    pub channel: ChannelParams,
    pub mean_photons: f64,
    /// Shape parameter; `Some` only for PAS.
    pub nu: Option<f64>,
    /// PAM spacing Δ; `None` for Gaussian modulation.
    pub spacing: Option<f64>,
    pub mutual_information: f64,
    pub holevo: f64,
    pub skr: f64,
    pub cutoff: Option<usize>,
    pub covariance: TwoModeCovariance,
    pub breakdown: HolevoBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCorridor {
    pub nbar_min: f64,
    pub nbar_max: f64,
    /// The lower edge was not found inside the search bracket.
    pub min_at_bound: bool,
    pub max_at_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub protocol: ProtocolSpec,
    pub distance_km: Option<f64>,
    pub excess_noise: f64,
    pub skr_max: f64,
    pub nbar_opt: f64,
    pub nu_opt: Option<f64>,
    /// Positive-rate interval of n̄; absent when `skr_max <= 0`.
    pub corridor: Option<PowerCorridor>,
    pub at_optimum: SkrReport,
}

/// `Z = 2 sqrt(nbar (nbar + 1))`, the two-mode squeezed vacuum with `V = 1 + 2 nbar`.
pub fn gg02_correlation(mean_photons: f64) -> Result<f64> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(Error::ParameterDomain(format!("mean photon number {mean_photons}")));
    }
    Ok(2.0 * (mean_photons * (mean_photons + 1.0)).sqrt())
}

/// Power sweep result before the corridor search.
struct PowerScan {
    best: Maximum<SkrReport>,
    samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct SkrEngine {
    config: OptimizerConfig,
}

impl SkrEngine {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Key rate at a fixed operating point. `nu` must be given exactly for PAS.
    pub fn compute_skr(
        &self,
        p: &ProtocolSpec,
        channel: &ChannelParams,
        nbar: f64,
        nu: Option<f64>,
    ) -> Result<SkrReport> {
        p.validate()?;
        if !(nbar > 0.0) || !nbar.is_finite() {
            return Err(Error::ParameterDomain(format!("mean photon number {nbar}")));
        }
        match (p.modulation, nu) {
            (Modulation::Gg02, None) => {
                let mi = mi_gaussian_awgn(nbar, channel)?;
                let cov = assemble_covariance(nbar, gg02_correlation(nbar)?, channel)?;
                self.finish(p, channel, nbar, None, None, mi, None, cov)
            }
            (Modulation::Qam { order, shaping }, nu) => {
                let shape = match (shaping, nu) {
                    (QamShaping::Uniform, None) => Shaping::Uniform,
                    (QamShaping::Pas, Some(nu)) if (0.0..=f64::MAX).contains(&nu) => Shaping::MaxwellBoltzmann { nu },
                    _ => return Err(Error::ParameterDomain(format!("shape parameter {nu:?} for {p}"))),
                };
                let c = build_constellation(order, shape, nbar)?;
                let mi = mi_discrete_awgn(&MiRequest {
                    pam: c.pam(),
                    channel,
                    rule: QuadratureRule {
                        node_count: self.config.quadrature_nodes,
                    },
                })?;
                let (z, cutoff) = constellation_correlation(&c, self.config.cutoff_tolerance)?;
                let cov = assemble_covariance(nbar, z, channel)?;
                self.finish(
                    p,
                    channel,
                    nbar,
                    nu,
                    Some(c.pam().spacing()),
                    mi,
                    Some(cutoff.dimension),
                    cov,
                )
            }
            (Modulation::Gg02, Some(_)) => Err(Error::ParameterDomain("GG02 takes no shape parameter".into())),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        p: &ProtocolSpec,
        channel: &ChannelParams,
        nbar: f64,
        nu: Option<f64>,
        spacing: Option<f64>,
        mi: f64,
        cutoff: Option<usize>,
        cov: TwoModeCovariance,
    ) -> Result<SkrReport> {
        let breakdown = holevo_information(&cov)?;
        Ok(SkrReport {
            protocol: *p,
            channel: *channel,
            mean_photons: nbar,
            nu,
            spacing,
            mutual_information: mi,
            holevo: breakdown.chi_be,
            skr: p.reconciliation_efficiency * mi - breakdown.chi_be,
            cutoff,
            covariance: cov,
            breakdown,
        })
    }

    /// Best shape parameter for a PAS protocol at fixed n̄.
    ///
    /// 4QAM has one point per half-axis, so every ν gives the same state and
    /// the search is skipped.
    pub fn optimize_shaping(&self, p: &ProtocolSpec, channel: &ChannelParams, nbar: f64) -> Result<(f64, SkrReport)> {
        let Modulation::Qam {
            order,
            shaping: QamShaping::Pas,
        } = p.modulation
        else {
            return Err(Error::ParameterDomain(format!("{p} has no shape parameter")));
        };
        if order == 4 {
            return Ok((0.0, self.compute_skr(p, channel, nbar, Some(0.0))?));
        }
        let cfg = &self.config;
        let mut grid = vec![0.0];
        grid.extend(geometric_grid(cfg.nu_grid_min, cfg.nu_max, cfg.nu_grid_points)?);
        let (best, _) = grid_then_golden(&grid, cfg.nu_tolerance, |nu| {
            let r = self.compute_skr(p, channel, nbar, Some(nu))?;
            Ok((r.skr, r))
        })?;
        Ok((best.x, best.payload))
    }

    /// Rate at n̄ with the shape parameter optimized if the protocol has one.
    pub fn best_at_power(&self, p: &ProtocolSpec, channel: &ChannelParams, nbar: f64) -> Result<SkrReport> {
        if p.is_pas() {
            Ok(self.optimize_shaping(p, channel, nbar)?.1)
        } else {
            self.compute_skr(p, channel, nbar, None)
        }
    }

    fn scan_power(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<PowerScan> {
        let cfg = &self.config;
        let grid: Vec<f64> = geometric_grid(cfg.nbar_min, cfg.nbar_max, cfg.nbar_grid_points)?
            .iter()
            .map(|x| x.ln())
            .collect();
        let (best, samples) = grid_then_golden(&grid, cfg.nbar_rel_tolerance.ln_1p(), |ln_nbar| {
            let r = self.best_at_power(p, channel, ln_nbar.exp())?;
            Ok((r.skr, r))
        })?;
        Ok(PowerScan { best, samples })
    }

    /// Peak rate over the launch power without the corridor search.
    pub fn peak_power(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<OptimumRecord> {
        let scan = self.scan_power(p, channel)?;
        Ok(record(p, channel, scan.best.payload, None))
    }

    /// Peak rate over the launch power, with the positive-rate corridor when the peak is positive.
    pub fn optimize_power(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<OptimumRecord> {
        let scan = self.scan_power(p, channel)?;
        let corridor = if scan.best.value > 0.0 {
            Some(self.corridor(p, channel, &scan)?)
        } else {
            None
        };
        Ok(record(p, channel, scan.best.payload, corridor))
    }

    /// Edges of the positive-rate corridor around the power optimum; `None` if the peak is not positive.
    pub fn power_range(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<Option<PowerCorridor>> {
        Ok(self.optimize_power(p, channel)?.corridor)
    }

    fn corridor(&self, p: &ProtocolSpec, channel: &ChannelParams, scan: &PowerScan) -> Result<PowerCorridor> {
        let ln_opt = scan.best.x;
        let tol = self.config.nbar_rel_tolerance.ln_1p();
        let rate = |ln_nbar: f64| self.best_at_power(p, channel, ln_nbar.exp()).map(|r| r.skr);

        // Walk outward from the optimum to the first non-positive grid sample.
        let below: Vec<&(f64, f64)> = scan.samples.iter().filter(|(x, _)| *x < ln_opt).rev().collect();
        let above: Vec<&(f64, f64)> = scan.samples.iter().filter(|(x, _)| *x > ln_opt).collect();
        let edge = |side: &[&(f64, f64)], bound: f64| -> Result<(f64, bool)> {
            let mut inside = ln_opt;
            for &&(x, v) in side {
                if v > 0.0 {
                    inside = x;
                } else {
                    let (hit, _) = bisect_boundary(inside, x, tol, rate)?;
                    return Ok((hit.exp(), false));
                }
            }
            Ok((bound, true))
        };
        let (nbar_min, min_at_bound) = edge(&below, self.config.nbar_min)?;
        let (nbar_max, max_at_bound) = edge(&above, self.config.nbar_max)?;
        Ok(PowerCorridor {
            nbar_min,
            nbar_max,
            min_at_bound,
            max_at_bound,
        })
    }

    /// `SKR_max(p) / SKR_max(GG02)` on the same channel and reconciliation efficiency.
    pub fn efficiency_r(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<f64> {
        let gg = ProtocolSpec {
            modulation: Modulation::Gg02,
            ..*p
        };
        let reference = self.peak_power(&gg, channel)?.skr_max;
        let own = if p.modulation == Modulation::Gg02 {
            reference
        } else {
            self.peak_power(p, channel)?.skr_max
        };
        efficiency_ratio(own, reference)
    }

    /// Largest excess noise with a positive optimized rate; the channel's own ξ is ignored.
    pub fn max_tolerable_noise(&self, p: &ProtocolSpec, channel: &ChannelParams) -> Result<f64> {
        let peak = |xi: f64| -> Result<f64> { Ok(self.peak_power(p, &channel.with_excess_noise(xi)?)?.skr_max) };
        if peak(0.0)? <= 0.0 {
            return Ok(0.0);
        }
        let top = self.config.xi_max;
        if peak(top)? > 0.0 {
            return Ok(top);
        }
        let (feasible, _) = bisect_boundary(0.0, top, self.config.xi_tolerance, peak)?;
        Ok(feasible)
    }
}

/// Ratio of two peak rates, rejecting a non-positive reference.
pub fn efficiency_ratio(skr_max: f64, gg02_skr_max: f64) -> Result<f64> {
    if !(gg02_skr_max > 0.0) {
        return Err(Error::UndefinedRatio(gg02_skr_max));
    }
    Ok(skr_max / gg02_skr_max)
}

fn record(
    p: &ProtocolSpec,
    channel: &ChannelParams,
    best: SkrReport,
    corridor: Option<PowerCorridor>,
) -> OptimumRecord {
    OptimumRecord {
        protocol: *p,
        distance_km: channel.distance_km,
        excess_noise: channel.excess_noise,
        skr_max: best.skr,
        nbar_opt: best.mean_photons,
        nu_opt: best.nu,
        corridor,
        at_optimum: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{correlation_z, thermal_state};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn engine() -> SkrEngine {
        SkrEngine::default()
    }

    fn ideal() -> ChannelParams {
        ChannelParams::from_transmittance(1.0, 0.0).unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for (s, label) in [
            ("gg02", "GG02"),
            ("4qam", "4QAM"),
            ("U-16QAM", "U-16QAM"),
            ("pas-64qam", "PAS-64QAM"),
            ("PAS-4QAM", "PAS-4QAM"),
        ] {
            let p: ProtocolSpec = s.parse().unwrap();
            assert_eq!(p.label(), label);
            assert_eq!(label.parse::<ProtocolSpec>().unwrap(), p);
        }
        assert!("8qam".parse::<ProtocolSpec>().is_err());
        assert!("qpsk".parse::<ProtocolSpec>().is_err());
        assert!(ProtocolSpec::gg02().with_efficiency(1.2).is_err());
        assert!(ProtocolSpec::gg02().with_efficiency(0.0).is_err());
    }

    #[test]
    fn gg02_identity_channel() {
        let r = engine()
            .compute_skr(&ProtocolSpec::gg02(), &ideal(), 1.5, None)
            .unwrap();
        assert_relative_eq!(r.mutual_information, 1.0, epsilon = 1e-14);
        assert!(r.holevo.abs() < 1e-9);
        assert!((r.skr - 0.95).abs() < 1e-9);
    }

    #[test]
    fn gg02_correlation_examples() {
        assert_eq!(gg02_correlation(0.0).unwrap(), 0.0);
        assert_relative_eq!(gg02_correlation(1.0).unwrap(), 8f64.sqrt(), epsilon = 1e-15);
        let thermal = correlation_z(&thermal_state(1.0, 200).unwrap()).unwrap();
        assert!((thermal - gg02_correlation(1.0).unwrap()).abs() < 1e-6);
        assert!(gg02_correlation(-1.0).is_err());
    }

    #[test]
    fn faint_qpsk_rate_vanishes() {
        let ch = ChannelParams::from_distance(30.0, 0.0).unwrap();
        let r = engine()
            .compute_skr(&ProtocolSpec::uniform(4), &ch, 1e-7, None)
            .unwrap();
        assert!(r.skr.abs() < 1e-6);
    }

    #[test]
    fn faint_limit_with_excess_noise() {
        // With the signal gone Eve still purifies the channel noise: χ → g(T ξ / 2).
        let ch = ChannelParams::from_distance(30.0, 0.02).unwrap();
        let r = engine()
            .compute_skr(&ProtocolSpec::uniform(4), &ch, 1e-9, None)
            .unwrap();
        let floor = crate::holevo::g_function(ch.transmittance * ch.excess_noise / 2.0).unwrap();
        assert!((r.skr + floor).abs() < 1e-6);
    }

    #[test]
    fn shape_parameter_contract() {
        let e = engine();
        let ch = ideal();
        assert!(e.compute_skr(&ProtocolSpec::pas(16), &ch, 1.0, None).is_err());
        assert!(e.compute_skr(&ProtocolSpec::uniform(16), &ch, 1.0, Some(0.1)).is_err());
        assert!(e.compute_skr(&ProtocolSpec::gg02(), &ch, 1.0, Some(0.1)).is_err());
        assert!(e.compute_skr(&ProtocolSpec::gg02(), &ch, 0.0, None).is_err());
        assert!(e.optimize_shaping(&ProtocolSpec::uniform(16), &ch, 1.0).is_err());
    }

    #[test]
    fn report_identity() {
        let ch = ChannelParams::from_distance(60.0, 0.01).unwrap();
        let r = engine()
            .compute_skr(&ProtocolSpec::pas(16), &ch, 2.0, Some(0.2))
            .unwrap();
        assert!((r.skr - (0.95 * r.mutual_information - r.holevo)).abs() < 1e-12);
        assert!(r.cutoff.is_some() && r.spacing.is_some());
    }

    #[test]
    fn qpsk_shaping_is_flat() {
        let e = engine();
        let ch = ChannelParams::from_distance(50.0, 0.0).unwrap();
        let p = ProtocolSpec::pas(4);
        let base = e.compute_skr(&p, &ch, 0.4, Some(0.0)).unwrap().skr;
        for nu in [0.01, 0.5, 3.0, 20.0] {
            assert!((e.compute_skr(&p, &ch, 0.4, Some(nu)).unwrap().skr - base).abs() < 1e-12);
        }
        assert_eq!(e.optimize_shaping(&p, &ch, 0.4).unwrap().0, 0.0);
    }

    #[test]
    fn faint_16qam_prefers_strong_shaping() {
        let ch = ChannelParams::from_distance(50.0, 0.0).unwrap();
        let (nu, _) = engine().optimize_shaping(&ProtocolSpec::pas(16), &ch, 1e-3).unwrap();
        assert!(nu > 1.0, "nu = {nu}");
    }

    #[test]
    fn shaping_beats_uniform_at_100km() {
        let e = engine();
        let ch = ChannelParams::from_distance(100.0, 0.0).unwrap();
        let opt = e.peak_power(&ProtocolSpec::pas(64), &ch).unwrap();
        let flat = e
            .compute_skr(&ProtocolSpec::pas(64), &ch, opt.nbar_opt, Some(0.0))
            .unwrap();
        assert!(opt.skr_max > flat.skr);
    }

    #[test]
    fn gg02_ratio_is_one() {
        let ch = ChannelParams::from_distance(80.0, 0.01).unwrap();
        assert_eq!(engine().efficiency_r(&ProtocolSpec::gg02(), &ch).unwrap(), 1.0);
    }

    #[test]
    fn undefined_ratio() {
        assert!(matches!(efficiency_ratio(0.1, 0.0), Err(Error::UndefinedRatio(_))));
        let ch = ChannelParams::from_distance(50.0, 0.4).unwrap();
        assert!(matches!(
            engine().efficiency_r(&ProtocolSpec::uniform(4), &ch),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn gg02_corridor_brackets_optimum() {
        let e = engine();
        let ch = ChannelParams::from_distance(100.0, 0.01).unwrap();
        let rec = e.optimize_power(&ProtocolSpec::gg02(), &ch).unwrap();
        let c = rec.corridor.unwrap();
        assert!(c.nbar_min <= rec.nbar_opt && rec.nbar_opt <= c.nbar_max);
        assert!(!c.min_at_bound && !c.max_at_bound);
        let rate = |n: f64| e.compute_skr(&ProtocolSpec::gg02(), &ch, n, None).unwrap().skr;
        assert!(rate(c.nbar_min) > 0.0 && rate(c.nbar_min * 0.99) <= 0.0);
        assert!(rate(c.nbar_max) > 0.0 && rate(c.nbar_max * 1.01) <= 0.0);
    }

    #[test]
    fn corridor_narrows_near_range_limit() {
        let e = engine();
        let p = ProtocolSpec::gg02();
        let width = |d: f64| {
            let c = e
                .power_range(&p, &ChannelParams::from_distance(d, 0.03).unwrap())
                .unwrap()
                .unwrap();
            (c.nbar_max / c.nbar_min).ln()
        };
        assert!(width(150.0) < width(50.0));
        assert!(e
            .power_range(&p, &ChannelParams::from_distance(400.0, 0.03).unwrap())
            .unwrap()
            .is_none());
    }

    #[test]
    fn no_corridor_when_infeasible() {
        let ch = ChannelParams::from_distance(50.0, 0.4).unwrap();
        let rec = engine().optimize_power(&ProtocolSpec::uniform(4), &ch).unwrap();
        assert!(rec.skr_max <= 0.0);
        assert!(rec.corridor.is_none());
    }

    #[test]
    fn noise_tolerance_zero_when_infeasible() {
        // Pure loss alone never closes the key, so force infeasibility through the power bracket.
        let cfg = OptimizerConfig {
            nbar_min: 100.0,
            nbar_grid_points: 4,
            ..Default::default()
        };
        let e = SkrEngine::new(cfg).unwrap();
        let ch = ChannelParams::from_distance(100.0, 0.0).unwrap();
        assert!(e.peak_power(&ProtocolSpec::uniform(4), &ch).unwrap().skr_max < 0.0);
        assert_eq!(e.max_tolerable_noise(&ProtocolSpec::uniform(4), &ch).unwrap(), 0.0);
    }

    #[test]
    fn noise_tolerance_is_feasible_edge() {
        let e = engine();
        let p = ProtocolSpec::gg02();
        let ch = ChannelParams::from_distance(100.0, 0.0).unwrap();
        let xi = e.max_tolerable_noise(&p, &ch).unwrap();
        assert!(xi > 0.0 && xi < 0.5);
        assert!(e.peak_power(&p, &ch.with_excess_noise(xi).unwrap()).unwrap().skr_max > 0.0);
        let beyond = ch.with_excess_noise(xi + 2e-4).unwrap();
        assert!(e.peak_power(&p, &beyond).unwrap().skr_max <= 0.0);
    }

    #[test]
    fn config_rejects_bad_brackets() {
        let bad = OptimizerConfig {
            nbar_max: 1e-4,
            ..Default::default()
        };
        assert!(SkrEngine::new(bad).is_err());
        let bad = OptimizerConfig {
            quadrature_nodes: 8,
            ..Default::default()
        };
        assert!(SkrEngine::new(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rate_decreases_with_noise(
            d in 1.0f64..150.0,
            nbar in 0.05f64..20.0,
            nu in 0.0f64..2.0,
            order in prop::sample::select(vec![4usize, 16, 64]),
        ) {
            let e = engine();
            let p = ProtocolSpec::pas(order);
            let mut last = f64::INFINITY;
            for xi in [0.0, 0.01, 0.03, 0.1] {
                let ch = ChannelParams::from_distance(d, xi).unwrap();
                let s = e.compute_skr(&p, &ch, nbar, Some(nu)).unwrap().skr;
                prop_assert!(s <= last + 1e-12);
                last = s;
            }
        }

        #[test]
        fn gg02_bounds_discrete_rates(
            d in 1.0f64..150.0,
            xi in 0.0f64..0.05,
            nbar in 0.05f64..20.0,
            nu in 0.0f64..2.0,
        ) {
            let e = engine();
            let ch = ChannelParams::from_distance(d, xi).unwrap();
            let gg = e.compute_skr(&ProtocolSpec::gg02(), &ch, nbar, None).unwrap();
            let q = e.compute_skr(&ProtocolSpec::pas(16), &ch, nbar, Some(nu)).unwrap();
            prop_assert!(q.mutual_information <= gg.mutual_information + 1e-12);
            prop_assert!(q.covariance.correlation <= gg.covariance.correlation + 1e-9);
        }
    }
}
