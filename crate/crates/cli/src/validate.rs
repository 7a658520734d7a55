use std::f64::consts::PI;

use udn_core::channel::{fading_log_moment, fpk_residual_check, FpkGrid, MarginalMode, RicianMarginal};
use udn_core::ee::{ee_closed_form, ee_gumbel_mean, lambert_w0, EEParams, FadingInput};
use udn_core::geometry::{coverage_probability, ActivityMode};
use udn_core::meanfield::{campbell_pathloss_sum, mf_interference, NetworkConfig, RadiusRegime};
use udn_core::meanfield::TxPolicy;
use udn_core::montecarlo::{estimate_average_rate, validate_active_probability, SimConfig};
use udn_core::quadrature::{integrate_to_infinity, QuadOptions};
use udn_core::EULER_GAMMA;

use crate::{CliError, ExperimentSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub name: &'static str,
    pub value: f64,
    pub reference: f64,
    /// Allowed `|value - reference|`.
    pub tolerance: f64,
    pub pass: bool,
}

fn row(name: &'static str, value: f64, reference: f64, tolerance: f64) -> ValidationRow {
    ValidationRow {
        name,
        value,
        reference,
        tolerance,
        pass: (value - reference).abs() <= tolerance,
    }
}

/// Oracle checks of geometry, channel, mean-field and EE building blocks.
/// Monte-Carlo checks use the spec's seed and trial count.
pub fn validation_suite(spec: &ExperimentSpec) -> Result<Vec<ValidationRow>, CliError> {
    let mut rows = Vec::new();
    let net = spec.network;

    rows.push(row("lambert_w0(1)", lambert_w0(1.0)?, 0.567_143_290_4, 5e-11));

    let rayleigh = RicianMarginal::new(0.0, 1.0)?;
    rows.push(row(
        "rayleigh_log_moment",
        fading_log_moment(&rayleigh)?,
        (2f64.ln() - EULER_GAMMA) / 2.0,
        1e-8,
    ));

    let coarse = fpk_residual_check(&spec.fading, MarginalMode::Sde, &FpkGrid { t: 1.0, h: 0.02, span_sd: 4.0 })?;
    let fine = fpk_residual_check(&spec.fading, MarginalMode::Sde, &FpkGrid { t: 1.0, h: 0.01, span_sd: 4.0 })?;
    rows.push(row("fpk_refinement_ratio", coarse / fine, 4.0, 0.5));

    let example = NetworkConfig {
        lambda_b: 10.0,
        lambda_u: 1.0,
        n_antennas: 1,
        alpha: 4.0,
        reception_radius: 10.0,
        regime: RadiusRegime::Finite,
        ..net
    };
    rows.push(row(
        "mf_interference_example",
        mf_interference(&example, 0.5, 4.0)?.value,
        PI * PI * 1.495 * 2.0,
        1e-9,
    ));

    let plane = NetworkConfig {
        lambda_u: 1.0,
        regime: RadiusRegime::Asymptotic,
        ..example
    };
    let radial = integrate_to_infinity(
        |r| 2.0 * PI * r * if r <= 1.0 { 1.0 } else { r.powf(-plane.alpha) },
        0.0,
        QuadOptions::default(),
    )
    .value;
    rows.push(row("campbell_pathloss_sum", campbell_pathloss_sum(&plane), radial, 1e-6));

    let params = EEParams::at_time(&net, &spec.fading, f64::INFINITY, net.p_max / 2.0)?;
    let stationary = RicianMarginal::stationary(&spec.fading);
    let p = net.p_max / 2.0;
    rows.push(row(
        "gumbel_vs_closed_form",
        ee_gumbel_mean(p, &params, FadingInput::Marginal(&stationary))?,
        ee_closed_form(p, &params)?,
        1e-9,
    ));

    let sim = SimConfig {
        activity_mode: ActivityMode::Voronoi,
        ..spec.sim
    };
    let dense = NetworkConfig {
        lambda_b: 10.0 * net.lambda_u,
        ..net
    };
    let act = validate_active_probability(&dense, &sim)?;
    rows.push(row("active_probability", act.empirical, act.analytical, 0.01 * act.analytical));

    let sparse = NetworkConfig {
        lambda_b: 0.05,
        reception_radius: 2.0,
        regime: RadiusRegime::Finite,
        ..net
    };
    let est = estimate_average_rate(&sparse, &sim, &spec.fading, &TxPolicy::Constant(net.p_max))?;
    let q = 1.0 - coverage_probability(&sparse.density());
    let n = sim.trials as f64;
    rows.push(row(
        "outage_vs_coverage",
        est.outages as f64 / n,
        q,
        3.0 * (q * (1.0 - q) / n).sqrt(),
    ));
    Ok(rows)
}
