//! Sweep execution. Grid points fan out to a worker pool; rows come back in
//! grid order regardless of completion order.

use std::collections::HashMap;
use std::io::Write;

use cvqkd_core::{ChannelParams, Modulation, OptimumRecord, ProtocolSpec, SkrEngine};
use rayon::prelude::*;

use crate::baseline::Baseline;
use crate::config::{BaselineQuantity, Command, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

pub const SKR_CURVE_HEADER: &[&str] = &[
    "protocol",
    "d_km",
    "xi_snu",
    "nbar",
    "nu_opt",
    "delta",
    "I_AB_bits",
    "chi_BE_bits",
    "SKR_bits",
];
pub const DISTANCE_SWEEP_HEADER: &[&str] = &[
    "protocol", "d_km", "xi_snu", "SKR_max", "nbar_opt", "nu_opt", "nbar_min", "nbar_max", "R",
];
pub const NOISE_TOLERANCE_HEADER: &[&str] = &["protocol", "d_km", "xi_max"];
pub const POWER_RANGE_HEADER: &[&str] = &[
    "protocol",
    "d_km",
    "xi_snu",
    "SKR_max",
    "nbar_opt",
    "nbar_min",
    "nbar_max",
    "min_at_bound",
    "max_at_bound",
];
pub const COMPARE_HEADER: &[&str] = &["protocol", "d_km", "xi_snu", "SKR_max", "R", "baseline", "ratio"];

/// Environment variable capping the worker pool.
pub const WORKERS_ENV: &str = "SKR_WORKERS";

/// Runs the sweep and writes the table to the configured output (stdout if none).
pub fn execute(config: &SweepConfig) -> CliResult<()> {
    let table = run(config)?;
    let text = table.render(config.format);
    match &config.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                context: "writing stdout".into(),
                source,
            }),
    }
}

pub fn run(config: &SweepConfig) -> CliResult<Table> {
    config.validate()?;
    let engine = SkrEngine::new(config.optimizer.clone()).map_err(|e| CliError::usage(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    let sweep = Sweep {
        engine,
        protocols: config.protocol_specs()?,
        distances: config.distances.points()?,
        xi: config.xi.clone(),
    };
    pool.install(|| match config.command {
        Command::SkrCurve => sweep.skr_curve(&config.nbar_grid.points()?),
        Command::DistanceSweep => sweep.distance_sweep(),
        Command::NoiseTolerance => sweep.noise_tolerance(),
        Command::PowerRange => sweep.power_range(),
        Command::Compare => {
            let path = config.baseline.as_ref().expect("validated");
            sweep.compare(&Baseline::load(path)?, config.baseline_quantity)
        }
    })
}

fn worker_count() -> CliResult<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::usage(format!("{WORKERS_ENV}={v} is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A protocol at one `(d, ξ)` grid point.
type Point = (ProtocolSpec, f64, f64);

struct Sweep {
    engine: SkrEngine,
    protocols: Vec<ProtocolSpec>,
    distances: Vec<f64>,
    xi: Vec<f64>,
}

fn context(p: &ProtocolSpec, d: f64, xi: Option<f64>) -> String {
    match xi {
        Some(xi) => format!("{p} at d={d} km, xi={xi}"),
        None => format!("{p} at d={d} km"),
    }
}

/// Maps `f` over `tasks` on the current pool, keeping task order. The first
/// failing task in grid order determines the error.
fn par_map<T: Sync, R: Send>(tasks: &[T], f: impl Fn(&T) -> CliResult<R> + Sync + Send) -> CliResult<Vec<R>> {
    tasks.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn channel(d: f64, xi: f64, ctx: &str) -> CliResult<ChannelParams> {
    ChannelParams::from_distance(d, xi).map_err(|e| CliError::usage(format!("{ctx}: {e}")))
}

impl Sweep {
    fn numerical(ctx: String) -> impl FnOnce(cvqkd_core::Error) -> CliError {
        move |source| CliError::Numerical { context: ctx, source }
    }

    fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for p in &self.protocols {
            for &d in &self.distances {
                for &xi in &self.xi {
                    out.push((*p, d, xi));
                }
            }
        }
        out
    }

    fn skr_curve(&self, nbar_grid: &[f64]) -> CliResult<Table> {
        let tasks: Vec<(ProtocolSpec, f64, f64, f64)> = self
            .points()
            .into_iter()
            .flat_map(|(p, d, xi)| nbar_grid.iter().map(move |&n| (p, d, xi, n)))
            .collect();
        let reports = par_map(&tasks, |(p, d, xi, nbar)| {
            let ctx = format!("{}, nbar={nbar}", context(p, *d, Some(*xi)));
            let ch = channel(*d, *xi, &ctx)?;
            self.engine.best_at_power(p, &ch, *nbar).map_err(Self::numerical(ctx))
        })?;
        let mut t = Table::new(SKR_CURVE_HEADER);
        for ((p, d, xi, nbar), r) in tasks.iter().zip(reports) {
            t.push(vec![
                p.label().into(),
                (*d).into(),
                (*xi).into(),
                (*nbar).into(),
                r.nu.into(),
                r.spacing.into(),
                r.mutual_information.into(),
                r.holevo.into(),
                r.skr.into(),
            ]);
        }
        Ok(t)
    }

    fn optima(&self, with_corridor: bool) -> CliResult<Vec<(Point, OptimumRecord)>> {
        let tasks = self.points();
        let recs = par_map(&tasks, |(p, d, xi)| {
            let ctx = context(p, *d, Some(*xi));
            let ch = channel(*d, *xi, &ctx)?;
            let r = if with_corridor {
                self.engine.optimize_power(p, &ch)
            } else {
                self.engine.peak_power(p, &ch)
            };
            r.map_err(Self::numerical(ctx))
        })?;
        Ok(tasks.into_iter().zip(recs).collect())
    }

    /// GG02 peak rates keyed by grid coordinates, computed only if not already present.
    fn gg02_reference(&self, rows: &[(Point, OptimumRecord)]) -> CliResult<HashMap<(u64, u64), f64>> {
        let mut refs: HashMap<(u64, u64), f64> = rows
            .iter()
            .filter(|((p, _, _), _)| p.modulation == Modulation::Gg02)
            .map(|((_, d, xi), r)| ((d.to_bits(), xi.to_bits()), r.skr_max))
            .collect();
        if refs.is_empty() {
            let zeta = self.protocols[0].reconciliation_efficiency;
            let gg = ProtocolSpec::gg02()
                .with_efficiency(zeta)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let sub = Sweep {
                engine: self.engine.clone(),
                protocols: vec![gg],
                distances: self.distances.clone(),
                xi: self.xi.clone(),
            };
            for ((_, d, xi), r) in sub.optima(false)? {
                refs.insert((d.to_bits(), xi.to_bits()), r.skr_max);
            }
        }
        Ok(refs)
    }

    fn distance_sweep(&self) -> CliResult<Table> {
        let rows = self.optima(true)?;
        let has_gg02 = self.protocols.iter().any(|p| p.modulation == Modulation::Gg02);
        let refs = if has_gg02 {
            self.gg02_reference(&rows)?
        } else {
            HashMap::new()
        };
        let mut t = Table::new(DISTANCE_SWEEP_HEADER);
        for ((p, d, xi), r) in &rows {
            let ratio = refs
                .get(&(d.to_bits(), xi.to_bits()))
                .filter(|g| **g > 0.0)
                .map(|g| r.skr_max / g);
            t.push(vec![
                p.label().into(),
                (*d).into(),
                (*xi).into(),
                r.skr_max.into(),
                r.nbar_opt.into(),
                r.nu_opt.into(),
                r.corridor.map(|c| c.nbar_min).into(),
                r.corridor.map(|c| c.nbar_max).into(),
                ratio.into(),
            ]);
        }
        Ok(t)
    }

    fn power_range(&self) -> CliResult<Table> {
        let mut t = Table::new(POWER_RANGE_HEADER);
        for ((p, d, xi), r) in self.optima(true)? {
            let c = r.corridor;
            t.push(vec![
                p.label().into(),
                d.into(),
                xi.into(),
                r.skr_max.into(),
                r.nbar_opt.into(),
                c.map(|c| c.nbar_min).into(),
                c.map(|c| c.nbar_max).into(),
                c.map_or(Cell::Null, |c| c.min_at_bound.into()),
                c.map_or(Cell::Null, |c| c.max_at_bound.into()),
            ]);
        }
        Ok(t)
    }

    fn noise_tolerance(&self) -> CliResult<Table> {
        let tasks: Vec<(ProtocolSpec, f64)> = self
            .protocols
            .iter()
            .flat_map(|p| self.distances.iter().map(move |&d| (*p, d)))
            .collect();
        let xi_max = par_map(&tasks, |(p, d)| {
            let ctx = context(p, *d, None);
            let ch = channel(*d, 0.0, &ctx)?;
            self.engine.max_tolerable_noise(p, &ch).map_err(Self::numerical(ctx))
        })?;
        let mut t = Table::new(NOISE_TOLERANCE_HEADER);
        for ((p, d), x) in tasks.iter().zip(xi_max) {
            t.push(vec![p.label().into(), (*d).into(), x.into()]);
        }
        Ok(t)
    }

    fn compare(&self, baseline: &Baseline, quantity: BaselineQuantity) -> CliResult<Table> {
        let rows = self.optima(false)?;
        let refs = self.gg02_reference(&rows)?;
        let mut t = Table::new(COMPARE_HEADER);
        for ((p, d, xi), r) in &rows {
            let ratio_r = refs
                .get(&(d.to_bits(), xi.to_bits()))
                .filter(|g| **g > 0.0)
                .map(|g| r.skr_max / g);
            let ours = match quantity {
                BaselineQuantity::SkrMax => Some(r.skr_max),
                BaselineQuantity::R => ratio_r,
            };
            let base = baseline.at(*d);
            let ratio = match (ours, base) {
                (Some(o), Some(b)) if b != 0.0 => Some(o / b),
                _ => None,
            };
            t.push(vec![
                p.label().into(),
                (*d).into(),
                (*xi).into(),
                r.skr_max.into(),
                ratio_r.into(),
                base.into(),
                ratio.into(),
            ]);
        }
        Ok(t)
    }
}
