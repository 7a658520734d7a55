//! Energy efficiency under mean-field interference, its EE-optimal power and
//! the two baseline policies.

mod lambert;

pub use lambert::lambert_w0;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{expect_over_rice, fading_log_moment, fading_marginal, fading_second_moment};
use crate::channel::{FadingParams, MarginalMode, RicianMarginal};
use crate::error::{Error, Result};
use crate::meanfield::{mf_interference, normalized_noise, MFInterference, NetworkConfig};
use crate::quadrature::{integrate, integrate_to_infinity, QuadOptions};
use crate::EULER_GAMMA;

/// `c1 = 2 E[log|g|] + alpha (gamma + log pi) / 2`.
pub fn compute_c1(alpha: f64, e_log_g: f64) -> f64 {
    2.0 * e_log_g + alpha * (EULER_GAMMA + PI.ln()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEParams {
    pub cfg: NetworkConfig,
    pub c1: f64,
    /// `E|g|^2`, used by the interference term.
    pub e_g2: f64,
    pub i_hat: MFInterference,
    /// Normalised noise `sigma'^2`.
    pub noise_norm: f64,
    pub t: f64,
}

impl EEParams {
    /// Builds the parameters from a fading law for `|g|` at time `t`.
    pub fn new(cfg: &NetworkConfig, fading: &RicianMarginal, p_hat: f64, t: f64) -> Result<Self> {
        cfg.validate()?;
        let c1 = compute_c1(cfg.alpha, fading_log_moment(fading)?);
        let e_g2 = fading_second_moment(fading);
        Ok(Self {
            cfg: *cfg,
            c1,
            e_g2,
            i_hat: mf_interference(cfg, p_hat, e_g2)?,
            noise_norm: normalized_noise(cfg)?,
            t,
        })
    }

    /// Parameters at time `t` using the paper-mode marginal started from `g(0) = 0`.
    /// `t = inf` gives the stationary law.
    pub fn at_time(cfg: &NetworkConfig, fading: &FadingParams, t: f64, p_hat: f64) -> Result<Self> {
        let marginal = fading_marginal(t, fading, MarginalMode::Paper)?;
        Self::new(cfg, &marginal, p_hat, t)
    }

    pub fn with_p_hat(&self, p_hat: f64) -> Self {
        Self {
            i_hat: self.i_hat.with_p_hat(p_hat),
            ..*self
        }
    }

    /// `sigma'^2 + I`.
    pub fn denominator(&self) -> f64 {
        self.noise_norm + self.i_hat.value
    }

    fn check_power(&self, p: f64) -> Result<()> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::param("P", "transmit power must be finite and > 0"));
        }
        if !(self.denominator() > 0.0) {
            return Err(Error::param("sigma'^2 + I", "denominator must be > 0"));
        }
        Ok(())
    }
}

/// `EE(P) = [c1 + log(P / (sigma'^2 + I))] / (P_c + P)`.
pub fn ee_closed_form(p: f64, params: &EEParams) -> Result<f64> {
    params.check_power(p)?;
    Ok((params.c1 + (p / params.denominator()).ln()) / (params.cfg.p_c + p))
}

/// Gumbel law of the EE at fixed fading: `P(EE > v) = 1 - exp(-pi [c0 e^{-v (P + P_c)}]^{2/alpha})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    /// `[2 (P + P_c) / alpha]^-1`
    pub beta: f64,
    /// `beta log(pi c0^{2/alpha})`
    pub mu_g: f64,
}

impl GumbelParams {
    /// `c0 = P |g|^2 / (sigma'^2 + I)`.
    pub fn new(p: f64, p_c: f64, alpha: f64, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(Error::param("c0", "must be > 0"));
        }
        let beta = alpha / (2.0 * (p + p_c));
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::param("beta", "P + P_c must be > 0"));
        }
        Ok(Self {
            beta,
            mu_g: beta * (PI.ln() + 2.0 / alpha * c0.ln()),
        })
    }

    pub fn cdf(&self, v: f64) -> f64 {
        (-(-(v - self.mu_g) / self.beta).exp()).exp()
    }

    pub fn ccdf(&self, v: f64) -> f64 {
        -(-(-(v - self.mu_g) / self.beta).exp()).exp_m1()
    }

    pub fn mean(&self) -> f64 {
        self.mu_g + self.beta * EULER_GAMMA
    }

    /// Mean by integrating the tails numerically, `int_0^inf ccdf - int_-inf^0 cdf`.
    pub fn mean_by_quadrature(&self) -> f64 {
        let opts = QuadOptions::default();
        let upper = |a: f64, b: f64| integrate(|v| self.ccdf(v), a, b, opts).value;
        let lower = |a: f64, b: f64| integrate(|v| self.cdf(v), a, b, opts).value;
        // split at the mode so the bulk sits on a finite interval
        let m = self.mu_g;
        let pos = if m > 0.0 {
            upper(0.0, m) + integrate_to_infinity(|v| self.ccdf(v), m, opts).value
        } else {
            integrate_to_infinity(|v| self.ccdf(v), 0.0, opts).value
        };
        let neg = if m < 0.0 {
            lower(m, 0.0) + integrate_to_infinity(|u| self.cdf(m - u), 0.0, opts).value
        } else {
            integrate_to_infinity(|u| self.cdf(-u), 0.0, opts).value
        };
        pos - neg
    }
}

/// Source of the serving-link fading magnitude `|g|` for the Gumbel average.
#[derive(Debug, Clone, Copy)]
pub enum FadingInput<'a> {
    /// Samples of `|g|`.
    Samples(&'a [f64]),
    /// Averaged by quadrature over the density.
    Marginal(&'a RicianMarginal),
}

/// `E_g[mu_G + beta gamma]` with `c0 = P |g|^2 / (sigma'^2 + I)`.
pub fn ee_gumbel_mean(p: f64, params: &EEParams, fading: FadingInput<'_>) -> Result<f64> {
    params.check_power(p)?;
    let d = params.denominator();
    let (p_c, alpha) = (params.cfg.p_c, params.cfg.alpha);
    let at = |g: f64| -> f64 {
        match GumbelParams::new(p, p_c, alpha, p * g * g / d) {
            Ok(gp) => gp.mean(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    match fading {
        FadingInput::Samples(samples) => {
            if samples.is_empty() {
                return Err(Error::InsufficientData("no fading samples".into()));
            }
            Ok(samples.iter().map(|&g| at(g)).sum::<f64>() / samples.len() as f64)
        }
        FadingInput::Marginal(m) => expect_over_rice(m, at),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EEResult {
    pub power: f64,
    pub ee_value: f64,
    pub iterations: usize,
    /// `|P_{k+1} - P_k|` per iteration.
    pub residual_trace: Vec<f64>,
    pub clamped: bool,
    pub damped: bool,
    /// Mean-field interference at the returned power.
    pub i_hat: MFInterference,
}

/// How the interference responds to the iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// All BSs use the same power, so `P_hat` follows `P`.
    #[default]
    Homogeneous,
    /// `I` stays at `p_hat_init`.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub coupling: Coupling,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50,
            coupling: Coupling::Homogeneous,
        }
    }
}

const OSCILLATION_TRIGGER: usize = 5;
const RELAXATION: f64 = 0.5;

/// `min(P_c / W(P_c e^{c1 - 1} / (sigma'^2 + I)), p_max)` at the interference in `params`.
pub fn optimal_power(params: &EEParams) -> Result<(f64, bool)> {
    let d = params.denominator();
    let arg = params.cfg.p_c * (params.c1 - 1.0).exp() / d;
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::param("W argument", format!("must be finite and > 0, got {arg}")));
    }
    let p = params.cfg.p_c / lambert_w0(arg)?;
    if p >= params.cfg.p_max {
        Ok((params.cfg.p_max, true))
    } else {
        Ok((p, false))
    }
}

pub(crate) struct Iteration {
    pub x: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub damped: bool,
}

/// Plain iteration of `map` that switches to relaxation once the step has
/// changed sign `OSCILLATION_TRIGGER` times in a row.
pub(crate) fn iterate_map(
    mut map: impl FnMut(f64) -> Result<f64>,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Iteration> {
    let mut x = x0;
    let mut trace = Vec::new();
    let mut damped = false;
    let mut sign_flips = 0;
    let mut last_step = 0.0f64;
    for k in 1..=max_iter {
        let fx = map(x)?;
        let next = if damped { x + RELAXATION * (fx - x) } else { fx };
        let step = next - x;
        trace.push(step.abs());
        x = next;
        if step.abs() < tol {
            return Ok(Iteration {
                x,
                iterations: k,
                trace,
                damped,
            });
        }
        if step * last_step < 0.0 {
            sign_flips += 1;
        } else {
            sign_flips = 0;
        }
        last_step = step;
        if !damped && sign_flips >= OSCILLATION_TRIGGER {
            damped = true;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_residual: trace.last().copied().unwrap_or(f64::NAN),
        residual_trace: trace,
    })
}

/// EE-optimal power with the interference tied to the power through `opts.coupling`.
///
/// Homogeneous coupling iterates `P_{k+1} = min(P_c / W(P_c e^{c1-1} / (sigma'^2 + I(P_k))), p_max)`
/// until the step drops below `opts.tol`.
pub fn optimal_power_fixed_point(
    params: &EEParams,
    p_init: f64,
    p_hat_init: f64,
    opts: &FixedPointOptions,
) -> Result<EEResult> {
    let p_max = params.cfg.p_max;
    for (name, v) in [("p_init", p_init), ("p_hat_init", p_hat_init)] {
        if !(v > 0.0 && v <= p_max) {
            return Err(Error::param(name, "must lie in (0, p_max]"));
        }
    }
    match opts.coupling {
        Coupling::Frozen => {
            let frozen = params.with_p_hat(p_hat_init);
            let (power, clamped) = optimal_power(&frozen)?;
            Ok(EEResult {
                power,
                ee_value: ee_closed_form(power, &frozen)?,
                iterations: 0,
                residual_trace: vec![(power - p_init).abs()],
                clamped,
                damped: false,
                i_hat: frozen.i_hat,
            })
        }
        Coupling::Homogeneous => {
            // the first step is taken from p_hat_init, later ones from the iterate
            let mut first = true;
            let it = iterate_map(
                |p| {
                    let p_hat = if first { p_hat_init } else { p };
                    first = false;
                    Ok(optimal_power(&params.with_p_hat(p_hat))?.0)
                },
                p_init,
                opts.tol,
                opts.max_iter,
            )?;
            let at = params.with_p_hat(it.x);
            let power = it.x.min(p_max);
            Ok(EEResult {
                power,
                ee_value: ee_closed_form(power, &at)?,
                iterations: it.iterations,
                residual_trace: it.trace,
                clamped: optimal_power(&at)?.1,
                damped: it.damped,
                i_hat: at.i_hat,
            })
        }
    }
}

/// EE at the fixed power `P_max / 2`.
pub fn baseline_fixed_power(params: &EEParams) -> Result<f64> {
    ee_closed_form(params.cfg.p_max / 2.0, params)
}

pub const DEFAULT_SEARCH_GRID: usize = 1000;

/// Logarithmic grid of `n` powers on `[1e-4 p_max, p_max]`.
pub fn search_grid(p_max: f64, n: usize) -> Vec<f64> {
    let lo = 1e-4 * p_max;
    let ratio = (p_max / lo).ln();
    (0..n)
        .map(|k| {
            if k + 1 == n {
                p_max
            } else {
                lo * (ratio * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Grid argmax of [`ee_closed_form`] with the interference held at `params.i_hat`.
/// Ties go to the smaller power.
pub fn baseline_full_search(params: &EEParams, grid_size: usize) -> Result<(f64, f64)> {
    if grid_size < 2 {
        return Err(Error::param("grid_size", "must be >= 2"));
    }
    let grid = search_grid(params.cfg.p_max, grid_size);
    let values = grid
        .par_iter()
        .map(|&p| ee_closed_form(p, params))
        .collect::<Result<Vec<f64>>>()?;
    let best = values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| (k, v))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((grid[best.0], best.1))
}
