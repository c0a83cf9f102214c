use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd_cli::{
    execute, BaselineQuantity, CliError, CliResult, Command, Grid, OutputFormat, ProtocolName, SweepConfig,
};

/// Asymptotic secret key rates for QAM and Gaussian-modulated CV-QKD.
#[derive(Parser, Debug)]
#[command(name = "cvqkd", version, about)]
struct Cli {
    /// TOML sweep configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Key rate versus launch power.
    SkrCurve {
        #[command(flatten)]
        common: Common,
        /// Launch powers, e.g. `1e-3:400:60:log` or `0.1,1,10`.
        #[arg(long, value_name = "GRID")]
        nbar_grid: Option<Grid>,
    },
    /// Peak key rate, optimal power, corridor and R versus distance.
    DistanceSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Largest tolerable excess noise versus distance.
    NoiseTolerance {
        #[command(flatten)]
        common: Common,
    },
    /// Launch-power interval with a positive key rate.
    PowerRange {
        #[command(flatten)]
        common: Common,
    },
    /// Join results with an external `d_km,value` baseline curve.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        baseline: Option<PathBuf>,
        /// What the baseline's `value` column holds.
        #[arg(long, value_enum)]
        quantity: Option<BaselineQuantity>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Protocols (`gg02`, `4qam`, `u-16qam`, `pas-64qam`, ...); repeatable or comma-separated.
    #[arg(long = "protocol", value_delimiter = ',', value_name = "NAME")]
    protocols: Vec<ProtocolName>,
    /// Distances in km: a list `40,100,200` or a grid `0.5:300:60:log`.
    #[arg(long, value_name = "GRID")]
    distance: Option<Grid>,
    /// Excess noise values in SNU, comma-separated.
    #[arg(long, value_delimiter = ',', value_name = "XI")]
    xi: Vec<f64>,
    /// Reconciliation efficiency.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format; defaults to JSON for `.json` outputs and CSV otherwise.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long)]
    nbar_min: Option<f64>,
    #[arg(long)]
    nbar_max: Option<f64>,
    #[arg(long)]
    nu_max: Option<f64>,
    /// Print the resolved configuration as TOML instead of running.
    #[arg(long)]
    dump_config: bool,
}

fn resolve(cli: Cli) -> CliResult<(SweepConfig, bool)> {
    let mut cfg = match &cli.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    let (command, common) = match cli.command {
        Sub::SkrCurve { common, nbar_grid } => {
            if let Some(g) = nbar_grid {
                cfg.nbar_grid = g;
            }
            (Command::SkrCurve, common)
        }
        Sub::DistanceSweep { common } => (Command::DistanceSweep, common),
        Sub::NoiseTolerance { common } => (Command::NoiseTolerance, common),
        Sub::PowerRange { common } => (Command::PowerRange, common),
        Sub::Compare {
            common,
            baseline,
            quantity,
        } => {
            if baseline.is_some() {
                cfg.baseline = baseline;
            }
            if let Some(q) = quantity {
                cfg.baseline_quantity = q;
            }
            (Command::Compare, common)
        }
    };
    cfg.command = command;
    if !common.protocols.is_empty() {
        cfg.protocols = common.protocols;
    }
    if let Some(d) = common.distance {
        cfg.distances = d;
    }
    if !common.xi.is_empty() {
        cfg.xi = common.xi;
    }
    if let Some(z) = common.zeta {
        cfg.reconciliation_efficiency = z;
    }
    if let Some(out) = common.out {
        if common.format.is_none() && out.extension().is_some_and(|e| e == "json") {
            cfg.format = OutputFormat::Json;
        }
        cfg.output = Some(out);
    }
    if let Some(f) = common.format {
        cfg.format = f;
    }
    if let Some(x) = common.nbar_min {
        cfg.optimizer.nbar_min = x;
    }
    if let Some(x) = common.nbar_max {
        cfg.optimizer.nbar_max = x;
    }
    if let Some(x) = common.nu_max {
        cfg.optimizer.nu_max = x;
    }
    cfg.validate()?;
    Ok((cfg, common.dump_config))
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let outcome = resolve(cli).and_then(|(cfg, dump)| {
        if dump {
            print!("{}", cfg.to_toml()?);
            Ok(())
        } else {
            execute(&cfg)
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
