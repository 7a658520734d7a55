//! Brute-force trial engine: typical-user SINR snapshots, rate and
//! interference estimates, EE trajectories under the three power policies
//! and the stationary EE sweep.
//!
//! Trial `i` always draws from the ChaCha stream `i` of the master seed, and
//! per-trial results are reduced in trial order, so every estimate is
//! bit-identical whatever the size of the rayon pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bounded_path_loss, evolve_fading, fading_marginal, fading_second_moment, interference_truncation_radius,
    FadingParams, FadingState, MarginalMode, RicianMarginal,
};
use crate::ee::{
    baseline_full_search, compute_c1, ee_closed_form, optimal_power_fixed_point, EEParams, EEResult,
    FixedPointOptions, DEFAULT_SEARCH_GRID,
};
use crate::error::{Error, Result};
use crate::geometry::{
    active_probability, compute_active_flags, sample_ppp, ActivityMode, DensityConfig, NetworkSnapshot, Point2D,
};
use crate::meanfield::{mf_interference, mf_rate, NetworkConfig, RadiusRegime, TxPolicy};

/// Per-trial quantity averaged by [`estimate_average_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMetric {
    /// `log(1 + SINR)`
    #[default]
    Log,
    /// `1 + SINR`
    Literal,
}

impl RateMetric {
    pub fn apply(&self, sinr: f64) -> f64 {
        match self {
            RateMetric::Log => sinr.ln_1p(),
            RateMetric::Literal => 1.0 + sinr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub activity_mode: ActivityMode,
    #[serde(default)]
    pub rate_metric: RateMetric,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            master_seed: 1,
            dt: 0.05,
            horizon: 20.0,
            activity_mode: ActivityMode::Voronoi,
            rate_metric: RateMetric::Log,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "trials >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "dt > 0"));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::param("horizon", "horizon >= dt"));
        }
        Ok(())
    }
}

/// Random stream of trial `index`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn run_trials<T, F>(sim: &SimConfig, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    (0..sim.trials as u64)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(sim.master_seed, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub std_error: f64,
    pub trials_used: usize,
    /// Trials dropped because no BS was in the window.
    pub outages: usize,
}

impl EstimateWithCI {
    /// Sample mean and standard error, summed in slice order.
    pub fn from_samples(samples: &[f64], outages: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("every trial was an outage".into()));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error: (var / n).sqrt(),
            trials_used: samples.len(),
            outages,
        })
    }
}

/// Simulation window: `R` for a finite ball, otherwise wide enough that the
/// truncated interference tail is below 0.1%.
pub fn window_radius(cfg: &NetworkConfig) -> Result<f64> {
    match cfg.regime {
        RadiusRegime::Finite => Ok(cfg.reception_radius),
        RadiusRegime::Asymptotic => {
            Ok(interference_truncation_radius(cfg.alpha, 1e-3)?.max(cfg.reception_radius))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    /// `None` when the window holds no BS.
    pub sinr: Option<f64>,
    pub signal: f64,
    pub interference: f64,
    /// `interference / (N lambda_b^(alpha/2))`, the scale of the mean-field term.
    pub interference_norm: f64,
    pub interferers: usize,
}

/// One typical-user SINR draw.
///
/// Every link fades independently with the sde-mode marginal at `fading_time`
/// (`inf` for the stationary law). The serving link gets gain `N`; each active
/// interferer hits the user's beam with probability `1/sqrt(N)`, then also with gain `N`.
pub fn simulate_snapshot_sinr<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    tx: &TxPolicy,
    fading_time: f64,
    rng: &mut R,
) -> Result<SinrSample> {
    let marginal = fading_marginal(fading_time, fading, MarginalMode::Sde)?;
    let density = DensityConfig {
        radius: window_radius(cfg)?,
        ..cfg.density()
    };
    let snap = NetworkSnapshot::sample(&density, sim.activity_mode, rng)?;
    Ok(snapshot_sinr(cfg, &snap, &marginal, tx, rng))
}

fn snapshot_sinr<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    snap: &NetworkSnapshot,
    marginal: &RicianMarginal,
    tx: &TxPolicy,
    rng: &mut R,
) -> SinrSample {
    let antenna = cfg.antenna();
    let gain = antenna.main_gain();
    let hit = antenna.hit_probability();
    let signal = snap
        .serving_distance()
        .map(|r0| tx.sample(rng) * bounded_path_loss(r0, cfg.alpha) * marginal.sample_power(rng) * gain);
    let mut interference = 0.0;
    let mut interferers = 0;
    for (_, z) in snap.interferers() {
        interferers += 1;
        // draw every mark so the stream layout does not depend on the hit
        let hits = rng.random::<f64>() < hit;
        let p = tx.sample(rng);
        let g2 = marginal.sample_power(rng);
        if hits {
            interference += p * bounded_path_loss(z.norm(), cfg.alpha) * g2 * gain;
        }
    }
    let norm = gain * cfg.density_scale();
    SinrSample {
        sinr: signal.map(|s| s / (cfg.noise + interference)),
        signal: signal.unwrap_or(0.0),
        interference,
        interference_norm: interference / norm,
        interferers,
    }
}

/// Mean of the configured rate metric over non-outage trials at stationary fading.
pub fn estimate_average_rate(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    tx: &TxPolicy,
) -> Result<EstimateWithCI> {
    cfg.validate()?;
    sim.validate()?;
    if sim.trials < 100 {
        return Err(Error::param("trials", "rate estimates need trials >= 100"));
    }
    let draws = run_trials(sim, |rng| simulate_snapshot_sinr(cfg, sim, fading, tx, f64::INFINITY, rng));
    let mut samples = Vec::with_capacity(draws.len());
    let mut outages = 0;
    for d in draws {
        match d?.sinr {
            Some(s) => samples.push(sim.rate_metric.apply(s)),
            None => outages += 1,
        }
    }
    EstimateWithCI::from_samples(&samples, outages)
}

/// Monte-Carlo mean of the normalised interference at `fading_time`, over all trials.
pub fn estimate_interference(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    tx: &TxPolicy,
    fading_time: f64,
) -> Result<EstimateWithCI> {
    cfg.validate()?;
    sim.validate()?;
    let draws = run_trials(sim, |rng| simulate_snapshot_sinr(cfg, sim, fading, tx, fading_time, rng));
    let samples = draws
        .into_iter()
        .map(|d| d.map(|s| s.interference_norm))
        .collect::<Result<Vec<f64>>>()?;
    EstimateWithCI::from_samples(&samples, 0)
}

/// Brute-force EE: Monte-Carlo `log(1 + SINR) / (P_c + P)` with every BS at power `p`.
pub fn simulate_ee(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    p: f64,
    fading_time: f64,
) -> Result<EstimateWithCI> {
    let log_sim = SimConfig {
        rate_metric: RateMetric::Log,
        ..*sim
    };
    let tx = TxPolicy::Constant(p);
    let draws = run_trials(&log_sim, |rng| simulate_snapshot_sinr(cfg, &log_sim, fading, &tx, fading_time, rng));
    let mut samples = Vec::with_capacity(draws.len());
    let mut outages = 0;
    for d in draws {
        match d?.sinr {
            Some(s) => samples.push(s.ln_1p() / (cfg.p_c + p)),
            None => outages += 1,
        }
    }
    EstimateWithCI::from_samples(&samples, outages)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub ratio: f64,
    pub lambda_b: f64,
    pub simulated: EstimateWithCI,
    pub analytical: f64,
    /// `simulated.mean / analytical`
    pub accuracy: f64,
}

/// Simulated versus mean-field average rate over BS/user density ratios at
/// constant power `p` and stationary fading.
pub fn mf_rate_sweep(
    cfg_base: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    p: f64,
    ratios: &[f64],
) -> Result<Vec<RatePoint>> {
    let stationary = RicianMarginal::stationary(fading);
    let eg2 = fading_second_moment(&stationary);
    ratios
        .iter()
        .map(|&ratio| {
            let cfg = NetworkConfig {
                lambda_b: ratio * cfg_base.lambda_u,
                ..*cfg_base
            };
            let simulated = estimate_average_rate(&cfg, sim, fading, &TxPolicy::Constant(p))?;
            let i_hat = mf_interference(&cfg, p, eg2)?;
            let analytical = mf_rate(&cfg, &i_hat, &stationary, p)?;
            Ok(RatePoint {
                ratio,
                lambda_b: cfg.lambda_b,
                simulated,
                analytical,
                accuracy: simulated.mean / analytical,
            })
        })
        .collect()
}

/// Powers and solver settings for [`simulate_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub p_init: f64,
    pub p_hat_init: f64,
    pub fixed_point: FixedPointOptions,
    pub grid_size: usize,
    /// Trials of the brute-force EE at the proposed power per step; 0 disables it.
    pub brute_force_trials: usize,
}

impl PolicySet {
    pub fn for_config(cfg: &NetworkConfig) -> Self {
        Self {
            p_init: cfg.p_max / 2.0,
            p_hat_init: cfg.p_max / 2.0,
            fixed_point: FixedPointOptions::default(),
            grid_size: DEFAULT_SEARCH_GRID,
            brute_force_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    pub ee_proposed: Vec<f64>,
    pub ee_fixed: Vec<f64>,
    pub ee_full_search: Vec<f64>,
    /// Proposed power `P*(t)`.
    pub power_trace: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Brute-force EE at the proposed power, when enabled.
    pub ee_simulated: Option<Vec<EstimateWithCI>>,
}

/// Fading transient excluded from time averages.
pub const TRANSIENT_CUTOFF: f64 = 5.0;

impl TrajectoryResult {
    /// Time average of `series` over `t >= from`.
    pub fn time_average(&self, series: &[f64], from: f64) -> Option<f64> {
        let kept: Vec<f64> = self
            .times
            .iter()
            .zip(series)
            .filter(|(t, _)| **t >= from)
            .map(|(_, v)| *v)
            .collect();
        (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
    }

    /// Post-transient `mean(ee_proposed) / mean(ee_fixed)`.
    pub fn proposed_over_fixed(&self) -> Option<f64> {
        Some(
            self.time_average(&self.ee_proposed, TRANSIENT_CUTOFF)?
                / self.time_average(&self.ee_fixed, TRANSIENT_CUTOFF)?,
        )
    }

    /// Post-transient `mean(ee_proposed) / mean(ee_full_search)`.
    pub fn proposed_over_full_search(&self) -> Option<f64> {
        Some(
            self.time_average(&self.ee_proposed, TRANSIENT_CUTOFF)?
                / self.time_average(&self.ee_full_search, TRANSIENT_CUTOFF)?,
        )
    }
}

/// Mean of `log|g(t_k)|` over `sim.trials` exact OU paths from `g(0) = 0`,
/// at `t_k = k dt`, `k = 1..=steps`.
pub fn mean_log_fading_path(sim: &SimConfig, fading: &FadingParams, steps: usize) -> Result<Vec<f64>> {
    fading.validate()?;
    let paths = run_trials(sim, |rng| -> Result<Vec<f64>> {
        let mut state = FadingState::zero();
        (0..steps)
            .map(|_| {
                state = evolve_fading(&state, sim.dt, fading, rng)?;
                Ok(state.magnitude().ln())
            })
            .collect()
    });
    let mut sums = vec![0.0; steps];
    for path in paths {
        for (s, v) in sums.iter_mut().zip(path?) {
            *s += v;
        }
    }
    let n = sim.trials as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// EE over time under the proposed, fixed `P_max/2` and full-search policies.
///
/// The proposed power re-solves the fixed point at every step from the
/// paper-mode fading moments, warm-started at the previous solution. All
/// three policies are then scored by the closed form with the rate constant
/// taken from the simulated fading paths and the interference of the
/// proposed solution.
pub fn simulate_trajectory(
    cfg: &NetworkConfig,
    sim: &SimConfig,
    fading: &FadingParams,
    policies: &PolicySet,
) -> Result<TrajectoryResult> {
    cfg.validate()?;
    sim.validate()?;
    let steps = (sim.horizon / sim.dt).round() as usize;
    let mean_log = mean_log_fading_path(sim, fading, steps)?;
    let mut out = TrajectoryResult {
        times: Vec::with_capacity(steps),
        ee_proposed: Vec::with_capacity(steps),
        ee_fixed: Vec::with_capacity(steps),
        ee_full_search: Vec::with_capacity(steps),
        power_trace: Vec::with_capacity(steps),
        iterations: Vec::with_capacity(steps),
        ee_simulated: (policies.brute_force_trials > 0).then(Vec::new),
    };
    let (mut p_prev, mut p_hat_prev) = (policies.p_init, policies.p_hat_init);
    for (k, log_g) in mean_log.iter().enumerate() {
        let t = (k + 1) as f64 * sim.dt;
        let at_t = |e: Error| Error::AtTime { t, source: Box::new(e) };
        let model = EEParams::at_time(cfg, fading, t, p_hat_prev).map_err(at_t)?;
        let fp: EEResult =
            optimal_power_fixed_point(&model, p_prev, p_hat_prev, &policies.fixed_point).map_err(at_t)?;
        let eval = EEParams {
            c1: compute_c1(cfg.alpha, *log_g),
            ..model.with_p_hat(fp.power)
        };
        out.times.push(t);
        out.ee_proposed.push(ee_closed_form(fp.power, &eval).map_err(at_t)?);
        out.ee_fixed.push(ee_closed_form(cfg.p_max / 2.0, &eval).map_err(at_t)?);
        out.ee_full_search
            .push(baseline_full_search(&eval, policies.grid_size).map_err(at_t)?.1);
        out.power_trace.push(fp.power);
        out.iterations.push(fp.iterations);
        if let Some(sims) = out.ee_simulated.as_mut() {
            let bf = SimConfig {
                trials: policies.brute_force_trials,
                master_seed: sim.master_seed.wrapping_add(k as u64 + 1),
                ..*sim
            };
            sims.push(simulate_ee(cfg, &bf, fading, fp.power, t).map_err(at_t)?);
        }
        p_prev = fp.power;
        p_hat_prev = fp.power;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n_antennas: u32,
    pub lambda_b: f64,
    pub result: std::result::Result<EEResult, Error>,
}

/// Maximised stationary EE over the `n_list x lambda_b_list` grid, row-major
/// in `n_list`. A failing cell keeps its error and the sweep goes on.
pub fn stationary_ee_sweep(
    cfg_base: &NetworkConfig,
    fading: &FadingParams,
    n_list: &[u32],
    lambda_b_list: &[f64],
    opts: &FixedPointOptions,
) -> Result<Vec<SweepCell>> {
    if n_list.is_empty() || lambda_b_list.is_empty() {
        return Err(Error::param("sweep", "lists must be non-empty"));
    }
    let cells = n_list
        .iter()
        .flat_map(|&n| lambda_b_list.iter().map(move |&lb| (n, lb)))
        .map(|(n_antennas, lambda_b)| {
            let cfg = NetworkConfig {
                n_antennas,
                lambda_b,
                ..*cfg_base
            };
            let half = cfg.p_max / 2.0;
            let result = EEParams::at_time(&cfg, fading, f64::INFINITY, half)
                .and_then(|params| optimal_power_fixed_point(&params, half, half, opts));
            SweepCell {
                n_antennas,
                lambda_b,
                result,
            }
        })
        .collect();
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityCheck {
    pub empirical: f64,
    pub analytical: f64,
    pub relative_gap: f64,
    pub bs_counted: usize,
}

/// Empirical active fraction of BSs against the gamma-approximated `p_a`.
///
/// Users and BSs are drawn on the disk of radius `R`; only BSs within
/// `R - 3/sqrt(lambda_b)` are counted so cells cut by the window edge do not
/// bias the fraction. No user is pinned at the origin.
pub fn validate_active_probability(cfg: &NetworkConfig, sim: &SimConfig) -> Result<ActivityCheck> {
    cfg.validate()?;
    sim.validate()?;
    if sim.activity_mode != ActivityMode::Voronoi {
        return Err(Error::param("activity_mode", "active-probability check needs voronoi activity"));
    }
    let analytical = active_probability(cfg.lambda_b, cfg.lambda_u)?;
    let radius = cfg.reception_radius;
    let inner = radius - 3.0 / cfg.lambda_b.sqrt();
    if !(inner > 0.0) {
        return Err(Error::param("reception_radius", "window too small for the edge margin"));
    }
    let counts = run_trials(sim, |rng| -> Result<(usize, usize)> {
        let bs = sample_ppp(cfg.lambda_b, radius, rng)?;
        let users = sample_ppp(cfg.lambda_u, radius, rng)?;
        let active = compute_active_flags(&bs, &users);
        let mut total = 0;
        let mut on = 0;
        for (p, a) in bs.iter().zip(&active) {
            if p.distance(&Point2D::ORIGIN) <= inner {
                total += 1;
                on += usize::from(*a);
            }
        }
        Ok((total, on))
    });
    let (mut total, mut on) = (0usize, 0usize);
    for c in counts {
        let (t, o) = c?;
        total += t;
        on += o;
    }
    let empirical = if total == 0 { 0.0 } else { on as f64 / total as f64 };
    let relative_gap = if analytical == 0.0 {
        empirical.abs()
    } else {
        (empirical - analytical).abs() / analytical
    };
    Ok(ActivityCheck {
        empirical,
        analytical,
        relative_gap,
        bs_counted: total,
    })
}
