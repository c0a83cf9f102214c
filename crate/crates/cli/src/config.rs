//! Sweep configuration: TOML file contents, grid syntax and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cvqkd_core::skr::DEFAULT_RECONCILIATION_EFFICIENCY;
use cvqkd_core::{OptimizerConfig, ProtocolSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Rate versus launch power at fixed distance.
    SkrCurve,
    /// Peak rate, optimal power, corridor and R versus distance.
    #[default]
    DistanceSweep,
    /// Largest tolerable excess noise versus distance.
    NoiseTolerance,
    /// Positive-rate power corridor versus distance.
    PowerRange,
    /// Side-by-side with an externally computed baseline curve.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

/// Either explicit points or `count` points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
        scale: Scale,
    },
}

impl Grid {
    pub fn points(&self) -> CliResult<Vec<f64>> {
        let pts = match self {
            Grid::List(v) => v.clone(),
            Grid::Range {
                start,
                stop,
                count,
                scale,
            } => {
                let (a, b, n) = (*start, *stop, *count);
                if n == 0 || !a.is_finite() || !b.is_finite() {
                    return Err(CliError::usage(format!("bad grid {self}")));
                }
                if n == 1 {
                    vec![a]
                } else {
                    match scale {
                        Scale::Linear => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                        Scale::Log => {
                            if !(a > 0.0 && b > 0.0) {
                                return Err(CliError::usage(format!("log grid needs positive ends: {self}")));
                            }
                            cvqkd_core::optimize::geometric_grid(a.min(b), a.max(b), n)
                                .map_err(|e| CliError::usage(e.to_string()))?
                        }
                    }
                }
            }
        };
        if pts.is_empty() {
            return Err(CliError::usage("empty grid"));
        }
        if let Some(bad) = pts.iter().find(|x| !x.is_finite()) {
            return Err(CliError::usage(format!("non-finite grid point {bad}")));
        }
        Ok(pts)
    }
}

/// `start:stop:count:log|lin`, or a comma-separated list.
impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let num = |t: &str| -> CliResult<f64> {
            t.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad number '{t}' in grid '{s}'")))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 4 {
                return Err(CliError::usage(format!("grid '{s}' is not start:stop:count:scale")));
            }
            let count = parts[2]
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad count in grid '{s}'")))?;
            let scale = match parts[3].trim() {
                "log" => Scale::Log,
                "lin" | "linear" => Scale::Linear,
                other => return Err(CliError::usage(format!("unknown grid scale '{other}'"))),
            };
            Ok(Grid::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                count,
                scale,
            })
        } else {
            Ok(Grid::List(s.split(',').map(num).collect::<CliResult<_>>()?))
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", items.join(","))
            }
            Grid::Range {
                start,
                stop,
                count,
                scale,
            } => {
                let s = match scale {
                    Scale::Linear => "lin",
                    Scale::Log => "log",
                };
                write!(f, "{start}:{stop}:{count}:{s}")
            }
        }
    }
}

/// A protocol written by its table label (`pas-64qam`, `GG02`, ...).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolName(pub ProtocolSpec);

impl Serialize for ProtocolName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.label())
    }
}

impl<'de> Deserialize<'de> for ProtocolName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(ProtocolName).map_err(serde::de::Error::custom)
    }
}

impl FromStr for ProtocolName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        s.parse()
            .map(ProtocolName)
            .map_err(|e: cvqkd_core::Error| CliError::usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// What the baseline file's `value` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineQuantity {
    SkrMax,
    #[default]
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub command: Command,
    pub protocols: Vec<ProtocolName>,
    pub distances: Grid,
    pub xi: Vec<f64>,
    pub reconciliation_efficiency: f64,
    /// Launch powers for `skr-curve`.
    pub nbar_grid: Grid,
    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PathBuf>,
    pub baseline_quantity: BaselineQuantity,
    pub optimizer: OptimizerConfig,
}

pub fn default_protocols() -> Vec<ProtocolName> {
    ["gg02", "4qam", "u-16qam", "u-64qam", "pas-16qam", "pas-64qam"]
        .iter()
        .map(|s| s.parse().expect("built-in protocol label"))
        .collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            command: Command::default(),
            protocols: default_protocols(),
            distances: Grid::Range {
                start: 0.5,
                stop: 300.0,
                count: 60,
                scale: Scale::Log,
            },
            xi: vec![0.0, 0.01, 0.03, 0.05],
            reconciliation_efficiency: DEFAULT_RECONCILIATION_EFFICIENCY,
            nbar_grid: Grid::Range {
                start: 1e-3,
                stop: 400.0,
                count: 60,
                scale: Scale::Log,
            },
            format: OutputFormat::Csv,
            output: None,
            baseline: None,
            baseline_quantity: BaselineQuantity::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::usage(format!("config serialization: {e}")))
    }

    /// Protocols with the configured reconciliation efficiency applied.
    pub fn protocol_specs(&self) -> CliResult<Vec<ProtocolSpec>> {
        self.protocols
            .iter()
            .map(|p| {
                p.0.with_efficiency(self.reconciliation_efficiency)
                    .map_err(|e| CliError::usage(e.to_string()))
            })
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.protocols.is_empty() {
            return Err(CliError::usage("no protocols given"));
        }
        self.protocol_specs()?;
        let d = self.distances.points()?;
        if let Some(bad) = d.iter().find(|x| **x < 0.0) {
            return Err(CliError::usage(format!("negative distance {bad} km")));
        }
        if self.xi.is_empty() {
            return Err(CliError::usage("empty excess-noise list"));
        }
        if let Some(bad) = self.xi.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(CliError::usage(format!("bad excess noise {bad}")));
        }
        if self.command == Command::SkrCurve {
            if let Some(bad) = self.nbar_grid.points()?.iter().find(|x| **x <= 0.0) {
                return Err(CliError::usage(format!("non-positive launch power {bad}")));
            }
        }
        if self.command == Command::Compare && self.baseline.is_none() {
            return Err(CliError::usage("compare needs a baseline file"));
        }
        self.optimizer.validate().map_err(|e| CliError::usage(e.to_string()))
    }
}
