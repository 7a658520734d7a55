//! Mean-field interference in closed form, normalised noise, the ultra-dense
//! regime diagnostics and the empirical measure of interferer states.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{bounded_path_loss, fading_log_moment, AntennaModel, RicianMarginal};
use crate::ee::compute_c1;
use crate::error::{Error, Result};
use crate::geometry::{DensityConfig, NetworkSnapshot};

/// Whether the reception ball is finite or stands in for the whole plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusRegime {
    #[default]
    Finite,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub n_antennas: u32,
    pub alpha: f64,
    /// Reception radius `R`. In the asymptotic regime this is the finite
    /// window that stands in for the plane.
    pub reception_radius: f64,
    #[serde(default)]
    pub regime: RadiusRegime,
    pub noise: f64,
    pub p_max: f64,
    pub p_c: f64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", "alpha > 2"));
        }
        if !finite_nonneg(self.lambda_b) {
            return Err(Error::param("lambda_b", "lambda_b >= 0"));
        }
        if !finite_nonneg(self.lambda_u) {
            return Err(Error::param("lambda_u", "lambda_u >= 0"));
        }
        if self.n_antennas == 0 {
            return Err(Error::param("n_antennas", "N >= 1"));
        }
        if !(self.reception_radius > 0.0 && self.reception_radius.is_finite()) {
            return Err(Error::param("reception_radius", "R > 0"));
        }
        if !finite_nonneg(self.noise) {
            return Err(Error::param("noise", "noise >= 0"));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::param("p_max", "p_max > 0"));
        }
        if !(self.p_c > 0.0 && self.p_c.is_finite()) {
            return Err(Error::param("p_c", "p_c > 0"));
        }
        Ok(())
    }

    pub fn antenna(&self) -> AntennaModel {
        AntennaModel {
            n_antennas: self.n_antennas.max(1),
        }
    }

    pub fn density(&self) -> DensityConfig {
        DensityConfig {
            lambda_b: self.lambda_b,
            lambda_u: self.lambda_u,
            radius: self.reception_radius,
        }
    }

    /// `lambda_b^(alpha/2)`, the BS-density normalisation of the received power.
    pub(crate) fn density_scale(&self) -> f64 {
        self.lambda_b.powf(self.alpha / 2.0)
    }

    /// `1 + (1 - R^(2-alpha)) / (alpha - 2)`, or `1 + 1/(alpha - 2)` in the asymptotic regime.
    pub fn tail_factor(&self) -> f64 {
        let tail = match self.regime {
            RadiusRegime::Finite => 1.0 - self.reception_radius.powf(2.0 - self.alpha),
            RadiusRegime::Asymptotic => 1.0,
        };
        1.0 + tail / (self.alpha - 2.0)
    }
}

/// Normalised mean-field interference together with the power it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MFInterference {
    pub value: f64,
    pub branch: RadiusRegime,
    pub p_hat: f64,
    /// `value / p_hat`; lets the fixed point move `p_hat` without the config.
    pub per_unit_power: f64,
}

impl MFInterference {
    pub fn with_p_hat(&self, p_hat: f64) -> Self {
        Self {
            value: self.per_unit_power * p_hat,
            p_hat,
            ..*self
        }
    }
}

/// `sigma^2 / (N lambda_b^(alpha/2))`.
pub fn normalized_noise(cfg: &NetworkConfig) -> Result<f64> {
    if !(cfg.lambda_b > 0.0) {
        return Err(Error::param("lambda_b", "normalisation needs lambda_b > 0"));
    }
    if cfg.n_antennas == 0 {
        return Err(Error::param("n_antennas", "N >= 1"));
    }
    Ok(cfg.noise / (cfg.n_antennas as f64 * cfg.density_scale()))
}

/// Closed-form mean-field interference
/// `(lambda_u pi R)^2 / (sqrt(N) lambda_b^(alpha/2)) * tail * p_hat * E|g|^2`,
/// with the tail factor picked by `cfg.regime`.
pub fn mf_interference(cfg: &NetworkConfig, p_hat: f64, eg2: f64) -> Result<MFInterference> {
    if !(cfg.lambda_b > 0.0) {
        return Err(Error::param("lambda_b", "mean-field interference needs lambda_b > 0"));
    }
    if !(p_hat >= 0.0 && p_hat.is_finite()) {
        return Err(Error::param("p_hat", "must be finite and >= 0"));
    }
    if !(eg2 >= 0.0 && eg2.is_finite()) {
        return Err(Error::param("eg2", "must be finite and >= 0"));
    }
    let lpr = cfg.lambda_u * PI * cfg.reception_radius;
    let per_unit_power =
        lpr * lpr / ((cfg.n_antennas as f64).sqrt() * cfg.density_scale()) * cfg.tail_factor() * eg2;
    Ok(MFInterference {
        value: per_unit_power * p_hat,
        branch: cfg.regime,
        p_hat,
        per_unit_power,
    })
}

/// Mean path-loss term of the mean-field derivation, `lambda_u pi * tail`,
/// exactly as it enters [`mf_interference`].
pub fn mean_pathloss_to_typical(cfg: &NetworkConfig) -> f64 {
    cfg.lambda_u * PI * cfg.tail_factor()
}

/// Campbell's theorem for a PPP of intensity `lambda_u` on the reception ball:
/// `E sum min(1, |x|^-alpha) = lambda_u pi (1 + 2 (1 - R^(2-alpha)) / (alpha - 2))`
/// for `R >= 1`, and `lambda_u pi R^2` below.
///
/// Differs from [`mean_pathloss_to_typical`] by a factor 2 in the tail term; this
/// is the value Monte-Carlo path-loss sums converge to.
pub fn campbell_pathloss_sum(cfg: &NetworkConfig) -> f64 {
    let r = cfg.reception_radius;
    let integral = if r <= 1.0 {
        r * r
    } else {
        let tail = match cfg.regime {
            RadiusRegime::Finite => 1.0 - r.powf(2.0 - cfg.alpha),
            RadiusRegime::Asymptotic => 1.0,
        };
        1.0 + 2.0 * tail / (cfg.alpha - 2.0)
    };
    cfg.lambda_u * PI * integral
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UDNDiagnostics {
    /// `N lambda_b^alpha / (lambda_u R)^4`
    pub ratio_a0: f64,
    /// `N lambda_b^alpha / lambda_u^4`
    pub ratio_a2: f64,
    pub a0_satisfied: bool,
}

pub const DEFAULT_A0_THRESHOLD: f64 = 100.0;

pub fn udn_condition_check(cfg: &NetworkConfig, threshold: f64) -> UDNDiagnostics {
    let numerator = cfg.n_antennas as f64 * cfg.lambda_b.powf(cfg.alpha);
    let ratio_a0 = numerator / (cfg.lambda_u * cfg.reception_radius).powi(4);
    let ratio_a2 = numerator / cfg.lambda_u.powi(4);
    UDNDiagnostics {
        ratio_a0,
        ratio_a2,
        a0_satisfied: ratio_a0 >= threshold,
    }
}

/// Mean spectral rate under mean-field interference in the high-SINR regime,
/// `c1 + log(P / (sigma'^2 + I))`, with `c1` from the serving-link fading law.
pub fn mf_rate(
    cfg: &NetworkConfig,
    i_hat: &MFInterference,
    fading: &RicianMarginal,
    tx_power: f64,
) -> Result<f64> {
    let c1 = compute_c1(cfg.alpha, fading_log_moment(fading)?);
    mf_rate_from_c1(c1, cfg, i_hat, tx_power)
}

pub fn mf_rate_from_c1(c1: f64, cfg: &NetworkConfig, i_hat: &MFInterference, tx_power: f64) -> Result<f64> {
    let denom = normalized_noise(cfg)? + i_hat.value;
    if !(denom > 0.0) {
        return Err(Error::param("sigma'^2 + I", "denominator must be > 0"));
    }
    if !(tx_power > 0.0) {
        return Err(Error::param("tx_power", "must be > 0"));
    }
    Ok(c1 + (tx_power / denom).ln())
}

/// `(m + M)^2 / (4 m M)` over the sample extremes.
pub fn kantorovich_gap(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if samples.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::param("samples", "all samples must be finite and > 0"));
    }
    let (m, big_m) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    Ok((m + big_m).powi(2) / (4.0 * m * big_m))
}

/// Transmit power of each interferer, drawn from its own state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TxPolicy {
    Constant(f64),
    Uniform { low: f64, high: f64 },
}

impl TxPolicy {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TxPolicy::Constant(p) => p,
            TxPolicy::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TxPolicy::Constant(p) => p,
            TxPolicy::Uniform { low, high } => 0.5 * (low + high),
        }
    }
}

/// Law of the interferer-to-user fading power `|g|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingMarks {
    Deterministic(f64),
    Rice(RicianMarginal),
}

impl FadingMarks {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingMarks::Deterministic(v) => *v,
            FadingMarks::Rice(m) => m.sample_power(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Bin edges in `log10(P |h|^2)`; one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        Self {
            edges: (0..=bins).map(|k| lo + k as f64 * width).collect(),
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    fn add(&mut self, v: f64) {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        if !(v >= lo) {
            self.underflow += 1;
        } else if v >= hi {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let k = ((v - lo) / (hi - lo) * bins as f64) as usize;
            self.counts[k.min(bins - 1)] += 1;
        }
    }
}

/// Empirical measure of interferer states `P_i |h_i0|^2` pooled over snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    /// `(1/|Phi|) sum P_i |h_i0|^2`
    pub mean: f64,
    pub std_error: f64,
    pub interferers: usize,
    pub snapshots_used: usize,
    pub mean_power: f64,
    pub mean_fading_power: f64,
    pub mean_path_loss: f64,
    pub histogram: Histogram,
}

impl EmpiricalMeasure {
    /// Product of the marginal sample means; equals `mean` when the three
    /// marks are independent and the population is large.
    pub fn factorized_mean(&self) -> f64 {
        self.mean_power * self.mean_fading_power * self.mean_path_loss
    }
}

/// Builds the empirical measure of interferer states across `snapshots`.
/// Interferers are the active BSs other than the serving one; each draws its
/// power from `policy` and its cross-link fading from `marks`.
pub fn empirical_mf_measure<R: Rng + ?Sized>(
    snapshots: &[NetworkSnapshot],
    alpha: f64,
    marks: &FadingMarks,
    policy: &TxPolicy,
    rng: &mut R,
) -> Result<EmpiricalMeasure> {
    let mut histogram = Histogram::new(-10.0, 2.0, 24);
    let (mut n, mut sum, mut sum_sq) = (0usize, 0.0, 0.0);
    let (mut sum_p, mut sum_g, mut sum_l) = (0.0, 0.0, 0.0);
    let mut snapshots_used = 0;
    for snap in snapshots {
        let before = n;
        for (_, z) in snap.interferers() {
            let p = policy.sample(rng);
            let g2 = marks.sample(rng);
            let l = bounded_path_loss(z.norm(), alpha);
            let state = p * l * g2;
            n += 1;
            sum += state;
            sum_sq += state * state;
            sum_p += p;
            sum_g += g2;
            sum_l += l;
            histogram.add(state.log10());
        }
        if n > before {
            snapshots_used += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData("no active interferer in any snapshot".into()));
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EmpiricalMeasure {
        mean,
        std_error: (var / nf).sqrt(),
        interferers: n,
        snapshots_used,
        mean_power: sum_p / nf,
        mean_fading_power: sum_g / nf,
        mean_path_loss: sum_l / nf,
        histogram,
    })
}
