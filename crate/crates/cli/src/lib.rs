//! Experiment presets, JSON configuration and CSV export for the `udn` binary.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use udn_core::channel::FadingParams;
use udn_core::ee::FixedPointOptions;
use udn_core::geometry::ActivityMode;
use udn_core::meanfield::{NetworkConfig, RadiusRegime};
use udn_core::montecarlo::{RateMetric, SimConfig};

mod experiments;
mod validate;

pub use experiments::{run_experiment, RunSummary};
pub use validate::{validation_suite, ValidationRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<udn_core::Error> for CliError {
    fn from(e: udn_core::Error) -> Self {
        if e.is_no_convergence() {
            CliError::Solver(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Validate,
    Custom,
}

/// What an experiment computes. Presets imply it; custom configs name it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Simulated versus mean-field average rate over density ratios.
    RateSweep,
    /// EE trajectories of the three power policies.
    Trajectory,
    /// Maximised stationary EE over antennas and BS density.
    EeSweep,
    /// Oracle checks of the analytical building blocks.
    Validate,
}

impl Preset {
    fn task(self) -> Option<Task> {
        match self {
            Preset::Fig1 => Some(Task::RateSweep),
            Preset::Fig2 => Some(Task::Trajectory),
            Preset::Fig3 => Some(Task::EeSweep),
            Preset::Validate => Some(Task::Validate),
            Preset::Custom => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Validate => "validate",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `lambda_b / lambda_u` values of the rate sweep.
    pub density_ratios: Vec<f64>,
    pub n_list: Vec<u32>,
    pub lambda_b_list: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            density_ratios: [2.0, 2.5, 3.0, 3.5, 4.0].iter().map(|e| 10f64.powf(*e)).collect(),
            n_list: vec![1, 4, 16, 64],
            lambda_b_list: vec![1.0, 3.0, 10.0, 30.0, 100.0],
        }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub task: Task,
    pub network: NetworkConfig,
    pub fading: FadingParams,
    pub sim: SimConfig,
    pub fixed_point: FixedPointOptions,
    pub sweep: SweepSpec,
    pub output_path: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    lambda_b: Option<f64>,
    lambda_u: Option<f64>,
    n_antennas: Option<u32>,
    alpha: Option<f64>,
    reception_radius: Option<f64>,
    regime: Option<RadiusRegime>,
    noise: Option<f64>,
    p_max: Option<f64>,
    p_c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFading {
    mu: Option<[f64; 2]>,
    eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    trials: Option<usize>,
    master_seed: Option<u64>,
    dt: Option<f64>,
    horizon: Option<f64>,
    activity_mode: Option<ActivityMode>,
    rate_metric: Option<RateMetric>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixedPoint {
    tol: Option<f64>,
    max_iter: Option<usize>,
    coupling: Option<udn_core::ee::Coupling>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    density_ratios: Option<Vec<f64>>,
    n_list: Option<Vec<u32>>,
    lambda_b_list: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    preset: Preset,
    task: Option<Task>,
    #[serde(default)]
    network: RawNetwork,
    #[serde(default)]
    fading: RawFading,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    fixed_point: RawFixedPoint,
    #[serde(default)]
    sweep: RawSweep,
    output_path: Option<PathBuf>,
}

/// Caption values of the three figures plus the gaps filled in for them.
pub fn preset_defaults(preset: Preset) -> Option<ExperimentSpec> {
    let fading = FadingParams { mu: [1.0, 1.0], eta: 1.0 };
    let fig2_network = NetworkConfig {
        lambda_b: 10.0,
        lambda_u: 1.0,
        n_antennas: 1,
        alpha: 4.0,
        reception_radius: 10.0,
        regime: RadiusRegime::Finite,
        noise: 0.001,
        p_max: 1.0,
        p_c: 1.0,
    };
    let base = ExperimentSpec {
        preset,
        task: preset.task()?,
        network: fig2_network,
        fading,
        sim: SimConfig::default(),
        fixed_point: FixedPointOptions::default(),
        sweep: SweepSpec::default(),
        output_path: PathBuf::from(format!("{}.csv", preset.name())),
    };
    Some(match preset {
        Preset::Fig1 => ExperimentSpec {
            network: NetworkConfig {
                lambda_b: 0.1,
                lambda_u: 0.001,
                n_antennas: 10,
                alpha: 4.0,
                // R -> inf, simulated on the window that keeps 99.9% of the interference
                reception_radius: 500f64.sqrt(),
                regime: RadiusRegime::Asymptotic,
                noise: 0.001,
                p_max: 1.0,
                p_c: 1.0,
            },
            ..base
        },
        Preset::Fig2 => ExperimentSpec {
            sim: SimConfig {
                trials: 1000,
                ..SimConfig::default()
            },
            ..base
        },
        Preset::Fig3 => ExperimentSpec {
            network: NetworkConfig {
                lambda_b: 1.0,
                ..fig2_network
            },
            ..base
        },
        Preset::Validate => base,
        Preset::Custom => unreachable!("custom has no task"),
    })
}

/// Parses a JSON config; omitted fields come from the preset.
pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec, CliError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let spec = match preset_defaults(raw.preset) {
        Some(defaults) => merge(defaults, raw),
        None => custom(raw)?,
    };
    validate_spec(&spec)?;
    Ok(spec)
}

fn merge(d: ExperimentSpec, raw: RawSpec) -> ExperimentSpec {
    let n = raw.network;
    let f = raw.fading;
    let s = raw.sim;
    let fp = raw.fixed_point;
    let sw = raw.sweep;
    ExperimentSpec {
        preset: d.preset,
        task: raw.task.unwrap_or(d.task),
        network: NetworkConfig {
            lambda_b: n.lambda_b.unwrap_or(d.network.lambda_b),
            lambda_u: n.lambda_u.unwrap_or(d.network.lambda_u),
            n_antennas: n.n_antennas.unwrap_or(d.network.n_antennas),
            alpha: n.alpha.unwrap_or(d.network.alpha),
            reception_radius: n.reception_radius.unwrap_or(d.network.reception_radius),
            regime: n.regime.unwrap_or(d.network.regime),
            noise: n.noise.unwrap_or(d.network.noise),
            p_max: n.p_max.unwrap_or(d.network.p_max),
            p_c: n.p_c.unwrap_or(d.network.p_c),
        },
        fading: FadingParams {
            mu: f.mu.unwrap_or(d.fading.mu),
            eta: f.eta.unwrap_or(d.fading.eta),
        },
        sim: SimConfig {
            trials: s.trials.unwrap_or(d.sim.trials),
            master_seed: s.master_seed.unwrap_or(d.sim.master_seed),
            dt: s.dt.unwrap_or(d.sim.dt),
            horizon: s.horizon.unwrap_or(d.sim.horizon),
            activity_mode: s.activity_mode.unwrap_or(d.sim.activity_mode),
            rate_metric: s.rate_metric.unwrap_or(d.sim.rate_metric),
        },
        fixed_point: FixedPointOptions {
            tol: fp.tol.unwrap_or(d.fixed_point.tol),
            max_iter: fp.max_iter.unwrap_or(d.fixed_point.max_iter),
            coupling: fp.coupling.unwrap_or(d.fixed_point.coupling),
        },
        sweep: SweepSpec {
            density_ratios: sw.density_ratios.unwrap_or(d.sweep.density_ratios),
            n_list: sw.n_list.unwrap_or(d.sweep.n_list),
            lambda_b_list: sw.lambda_b_list.unwrap_or(d.sweep.lambda_b_list),
        },
        output_path: raw.output_path.unwrap_or(d.output_path),
    }
}

fn custom(raw: RawSpec) -> Result<ExperimentSpec, CliError> {
    let mut missing = Vec::new();
    macro_rules! need {
        ($opt:expr, $name:literal) => {
            match $opt {
                Some(v) => v,
                None => {
                    missing.push($name);
                    Default::default()
                }
            }
        };
    }
    let n = &raw.network;
    let network = NetworkConfig {
        lambda_b: need!(n.lambda_b, "network.lambda_b"),
        lambda_u: need!(n.lambda_u, "network.lambda_u"),
        n_antennas: need!(n.n_antennas, "network.n_antennas"),
        alpha: need!(n.alpha, "network.alpha"),
        reception_radius: need!(n.reception_radius, "network.reception_radius"),
        regime: n.regime.unwrap_or_default(),
        noise: need!(n.noise, "network.noise"),
        p_max: need!(n.p_max, "network.p_max"),
        p_c: need!(n.p_c, "network.p_c"),
    };
    let fading = FadingParams {
        mu: need!(raw.fading.mu, "fading.mu"),
        eta: need!(raw.fading.eta, "fading.eta"),
    };
    let s = &raw.sim;
    let defaults = SimConfig::default();
    let sim = SimConfig {
        trials: need!(s.trials, "sim.trials"),
        master_seed: need!(s.master_seed, "sim.master_seed"),
        dt: s.dt.unwrap_or(defaults.dt),
        horizon: s.horizon.unwrap_or(defaults.horizon),
        activity_mode: s.activity_mode.unwrap_or_default(),
        rate_metric: s.rate_metric.unwrap_or_default(),
    };
    let task: Option<Task> = raw.task;
    if task.is_none() {
        missing.push("task");
    }
    let output_path = need!(raw.output_path.clone(), "output_path");
    if !missing.is_empty() {
        return Err(CliError::Config(format!(
            "custom config is missing required fields: {}",
            missing.join(", ")
        )));
    }
    let sweep_defaults = SweepSpec::default();
    let fp_defaults = FixedPointOptions::default();
    Ok(ExperimentSpec {
        preset: Preset::Custom,
        task: task.expect("checked above"),
        network,
        fading,
        sim,
        fixed_point: FixedPointOptions {
            tol: raw.fixed_point.tol.unwrap_or(fp_defaults.tol),
            max_iter: raw.fixed_point.max_iter.unwrap_or(fp_defaults.max_iter),
            coupling: raw.fixed_point.coupling.unwrap_or(fp_defaults.coupling),
        },
        sweep: SweepSpec {
            density_ratios: raw.sweep.density_ratios.unwrap_or(sweep_defaults.density_ratios),
            n_list: raw.sweep.n_list.unwrap_or(sweep_defaults.n_list),
            lambda_b_list: raw.sweep.lambda_b_list.unwrap_or(sweep_defaults.lambda_b_list),
        },
        output_path,
    })
}

pub fn validate_spec(spec: &ExperimentSpec) -> Result<(), CliError> {
    spec.network.validate()?;
    spec.fading.validate()?;
    spec.sim.validate()?;
    let sw = &spec.sweep;
    if sw.density_ratios.is_empty() || sw.n_list.is_empty() || sw.lambda_b_list.is_empty() {
        return Err(CliError::Config("sweep lists must be non-empty".into()));
    }
    if sw.density_ratios.iter().chain(&sw.lambda_b_list).any(|v| !(*v > 0.0)) {
        return Err(CliError::Config("sweep densities must be > 0".into()));
    }
    if sw.n_list.contains(&0) {
        return Err(CliError::Config("sweep n_list: N >= 1".into()));
    }
    if !(spec.fixed_point.tol >= 0.0) || spec.fixed_point.max_iter == 0 {
        return Err(CliError::Config("fixed_point: tol >= 0 and max_iter >= 1".into()));
    }
    Ok(())
}

impl ExperimentSpec {
    /// Every field spelled out; [`parse_config`] reads it back unchanged.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    /// Path of the effective-config dump written next to the CSV.
    pub fn config_dump_path(&self) -> PathBuf {
        let mut name = self
            .output_path
            .file_stem()
            .map(|s| s.to_os_string())
            .unwrap_or_else(|| "output".into());
        name.push(".config.json");
        self.output_path.with_file_name(name)
    }
}

/// CSV with a leading `#` comment recording seed and version.
pub(crate) fn render_csv(spec: &ExperimentSpec, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut comment = String::new();
    let _ = writeln!(
        comment,
        "# udn {VERSION} preset={} seed={} trials={}",
        spec.preset.name(),
        spec.sim.master_seed,
        spec.sim.trials
    );
    out.extend_from_slice(comment.as_bytes());
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}
