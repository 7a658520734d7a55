use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use udn_core::geometry::ActivityMode;
use udn_core::montecarlo::RateMetric;
use udn_cli::{load_config, preset_defaults, run_experiment, CliError, ExperimentSpec, Preset};

/// Mean-field power control experiments for ultra-dense downlinks.
#[derive(Parser)]
#[command(name = "udn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulated versus mean-field average rate over BS/user density ratios.
    Fig1(Overrides),
    /// EE over time for the proposed, fixed and full-search policies.
    Fig2(Overrides),
    /// Maximised stationary EE over antennas and BS density.
    Fig3(Overrides),
    /// Oracle checks of the analytical building blocks.
    Validate(Overrides),
    /// Run a JSON experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_activity)]
    activity_mode: Option<ActivityMode>,
    #[arg(long, value_parser = parse_metric)]
    rate_metric: Option<RateMetric>,
}

fn parse_activity(s: &str) -> Result<ActivityMode, String> {
    match s {
        "voronoi" => Ok(ActivityMode::Voronoi),
        "thinning" => Ok(ActivityMode::Thinning),
        _ => Err(format!("expected voronoi or thinning, got {s}")),
    }
}

fn parse_metric(s: &str) -> Result<RateMetric, String> {
    match s {
        "log" => Ok(RateMetric::Log),
        "literal" => Ok(RateMetric::Literal),
        _ => Err(format!("expected log or literal, got {s}")),
    }
}

impl Overrides {
    fn apply(&self, mut spec: ExperimentSpec) -> ExperimentSpec {
        if let Some(seed) = self.seed {
            spec.sim.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            spec.sim.trials = trials;
        }
        if let Some(out) = &self.out {
            spec.output_path = out.clone();
        }
        if let Some(mode) = self.activity_mode {
            spec.sim.activity_mode = mode;
        }
        if let Some(metric) = self.rate_metric {
            spec.sim.rate_metric = metric;
        }
        spec
    }
}

fn resolve(command: Command) -> Result<ExperimentSpec, CliError> {
    let (base, overrides) = match command {
        Command::Fig1(o) => (preset_defaults(Preset::Fig1), o),
        Command::Fig2(o) => (preset_defaults(Preset::Fig2), o),
        Command::Fig3(o) => (preset_defaults(Preset::Fig3), o),
        Command::Validate(o) => (preset_defaults(Preset::Validate), o),
        Command::Run { config, overrides } => (Some(load_config(&config)?), overrides),
    };
    Ok(overrides.apply(base.expect("figure presets have defaults")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command).and_then(|spec| run_experiment(&spec));
    match result {
        Ok(summary) => {
            for line in &summary.details {
                println!("{line}");
            }
            println!("{}", summary.headline);
            println!("wrote {}", summary.csv_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("udn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
