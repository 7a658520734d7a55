use std::path::PathBuf;

use udn_core::montecarlo::{mf_rate_sweep, simulate_trajectory, stationary_ee_sweep, PolicySet, TRANSIENT_CUTOFF};

use crate::validate::validation_suite;
use crate::{render_csv, validate_spec, write_atomic, CliError, ExperimentSpec, Task};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// One-line headline metric.
    pub headline: String,
    /// Extra lines for the terminal, e.g. the validation table.
    pub details: Vec<String>,
    pub csv_path: PathBuf,
    pub config_path: PathBuf,
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    headline: String,
    details: Vec<String>,
    /// Reported after the CSV is on disk.
    deferred: Option<CliError>,
}

/// Runs the experiment, writes its CSV and the effective config atomically,
/// and returns the headline.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary, CliError> {
    validate_spec(spec)?;
    let table = match spec.task {
        Task::RateSweep => rate_sweep(spec)?,
        Task::Trajectory => trajectory(spec)?,
        Task::EeSweep => ee_sweep(spec)?,
        Task::Validate => validate(spec)?,
    };
    let bytes = render_csv(spec, &table.header, &table.rows)?;
    write_atomic(&spec.output_path, &bytes)?;
    let config_path = spec.config_dump_path();
    write_atomic(&config_path, spec.to_json().as_bytes())?;
    if let Some(err) = table.deferred {
        return Err(err);
    }
    Ok(RunSummary {
        headline: table.headline,
        details: table.details,
        csv_path: spec.output_path.clone(),
        config_path,
    })
}

fn rate_sweep(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let points = mf_rate_sweep(
        &spec.network,
        &spec.sim,
        &spec.fading,
        spec.network.p_max,
        &spec.sweep.density_ratios,
    )?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                num(p.ratio),
                num(p.lambda_b),
                num(p.simulated.mean),
                num(p.simulated.std_error),
                p.simulated.trials_used.to_string(),
                p.simulated.outages.to_string(),
                num(p.analytical),
                num(p.accuracy),
            ]
        })
        .collect();
    let worst = points
        .iter()
        .min_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .expect("non-empty sweep");
    Ok(Table {
        header: vec![
            "density_ratio",
            "lambda_b",
            "rate_simulated",
            "std_error",
            "trials_used",
            "outages",
            "rate_mean_field",
            "accuracy",
        ],
        rows,
        headline: format!(
            "simulated/mean-field rate: min {:.4} at lambda_b/lambda_u = {:.4e}",
            worst.accuracy, worst.ratio
        ),
        details: Vec::new(),
        deferred: None,
    })
}

fn trajectory(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let policies = PolicySet {
        fixed_point: spec.fixed_point,
        ..PolicySet::for_config(&spec.network)
    };
    let r = simulate_trajectory(&spec.network, &spec.sim, &spec.fading, &policies)?;
    let rows = (0..r.times.len())
        .map(|k| {
            vec![
                num(r.times[k]),
                num(r.ee_proposed[k]),
                num(r.ee_fixed[k]),
                num(r.ee_full_search[k]),
                num(r.power_trace[k]),
            ]
        })
        .collect();
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    Ok(Table {
        header: vec!["t", "ee_proposed", "ee_fixed", "ee_full_search", "p_star"],
        rows,
        headline: format!(
            "EE proposed/fixed = {}, proposed/full-search = {} (t >= {TRANSIENT_CUTOFF})",
            fmt(r.proposed_over_fixed()),
            fmt(r.proposed_over_full_search())
        ),
        details: Vec::new(),
        deferred: None,
    })
}

fn ee_sweep(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let cells = stationary_ee_sweep(
        &spec.network,
        &spec.fading,
        &spec.sweep.n_list,
        &spec.sweep.lambda_b_list,
        &spec.fixed_point,
    )?;
    let mut failures = 0;
    let rows = cells
        .iter()
        .map(|c| match &c.result {
            Ok(r) => vec![
                c.n_antennas.to_string(),
                num(c.lambda_b),
                num(r.power),
                num(r.ee_value),
                r.iterations.to_string(),
                r.clamped.to_string(),
                String::new(),
            ],
            Err(e) => {
                failures += 1;
                vec![
                    c.n_antennas.to_string(),
                    num(c.lambda_b),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]
            }
        })
        .collect();
    let deferred = cells.iter().find_map(|c| c.result.as_ref().err()).map(|e| CliError::from(e.clone()));
    Ok(Table {
        header: vec!["n_antennas", "lambda_b", "p_star", "ee", "iterations", "clamped", "error"],
        rows,
        headline: format!("{} cells solved, {failures} failed", cells.len() - failures),
        details: Vec::new(),
        deferred,
    })
}

fn validate(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let checks = validation_suite(spec)?;
    let passed = checks.iter().filter(|c| c.pass).count();
    let details = checks
        .iter()
        .map(|c| {
            format!(
                "{:<4} {:<28} value {:<14.8e} reference {:<14.8e} tolerance {:.2e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.reference,
                c.tolerance
            )
        })
        .collect();
    let rows = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                num(c.value),
                num(c.reference),
                num(c.tolerance),
                c.pass.to_string(),
            ]
        })
        .collect();
    Ok(Table {
        header: vec!["check", "value", "reference", "tolerance", "pass"],
        rows,
        headline: format!("{passed}/{} checks passed", checks.len()),
        details,
        deferred: None,
    })
}
