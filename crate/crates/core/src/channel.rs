//! Bounded path loss, the sectorised antenna model and Ornstein-Uhlenbeck
//! fading with its Rician time marginals.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::bessel_i0e;

/// `min(1, d^-alpha)`.
pub fn path_loss(distance: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "path-loss exponent must exceed 2"));
    }
    if !(distance >= 0.0) {
        return Err(Error::param("distance", "must be >= 0"));
    }
    Ok(bounded_path_loss(distance, alpha))
}

#[inline]
pub(crate) fn bounded_path_loss(distance: f64, alpha: f64) -> f64 {
    if distance <= 1.0 {
        1.0
    } else {
        distance.powf(-alpha)
    }
}

/// Radius beyond which the plane-wide mean of `min(1, r^-alpha)` loses less
/// than the fraction `tol` of its total `pi alpha / (alpha - 2)`.
pub fn interference_truncation_radius(alpha: f64, tol: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::param("alpha", "path-loss exponent must exceed 2"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::param("tol", "must lie in (0, 1)"));
    }
    // tail fraction past W >= 1 is 2 W^(2-alpha) / alpha
    Ok((alpha * tol / 2.0).powf(-1.0 / (alpha - 2.0)).max(1.0))
}

/// Sectorised uniform linear array: main-lobe gain `N`, beam width `2 pi / sqrt(N)`,
/// no side lobes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AntennaModel {
    pub n_antennas: u32,
}

impl AntennaModel {
    pub fn new(n_antennas: u32) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::param("n_antennas", "must be >= 1"));
        }
        Ok(Self { n_antennas })
    }

    pub fn main_gain(&self) -> f64 {
        self.n_antennas as f64
    }

    pub fn beam_width(&self) -> f64 {
        2.0 * PI / (self.n_antennas as f64).sqrt()
    }

    /// Chance that a randomly placed interferer's main lobe covers the user.
    pub fn hit_probability(&self) -> f64 {
        self.beam_width() / (2.0 * PI)
    }

    /// Mean directional gain of an interferer, `main_gain * hit_probability`.
    pub fn mean_interference_factor(&self) -> f64 {
        self.main_gain() * self.hit_probability()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    /// Drift target `(mu_x, mu_y)`.
    pub mu: [f64; 2],
    /// Volatility.
    pub eta: f64,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.iter().all(|m| *m >= 0.0 && m.is_finite()) {
            return Err(Error::param("mu", "components must be finite and >= 0"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn mu_norm(&self) -> f64 {
        self.mu[0].hypot(self.mu[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FadingState {
    pub g: [f64; 2],
    pub t: f64,
}

impl FadingState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn magnitude(&self) -> f64 {
        self.g[0].hypot(self.g[1])
    }

    pub fn power(&self) -> f64 {
        self.g[0] * self.g[0] + self.g[1] * self.g[1]
    }
}

/// One exact Ornstein-Uhlenbeck transition of `dg = (mu - g)/2 dt + eta dW`,
/// with an independent Wiener process per component.
pub fn evolve_fading<R: Rng + ?Sized>(
    state: &FadingState,
    dt: f64,
    params: &FadingParams,
    rng: &mut R,
) -> Result<FadingState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be finite and > 0"));
    }
    let decay = (-0.5 * dt).exp();
    let sd = params.eta * (-(-dt).exp_m1()).sqrt();
    let mut g = [0.0; 2];
    for (k, gk) in g.iter_mut().enumerate() {
        let xi: f64 = rng.sample(StandardNormal);
        *gk = params.mu[k] + (state.g[k] - params.mu[k]) * decay + sd * xi;
    }
    Ok(FadingState { g, t: state.t + dt })
}

/// Which scale law the Rician marginal of `|g(t)|` follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMode {
    /// Scale `eta (1 - e^-t)`, as used by the closed-form EE expressions.
    #[default]
    Paper,
    /// Scale `eta sqrt(1 - e^-t)`, the exact law of the OU transition.
    Sde,
}

/// `Rice(nu, s)`: law of `|(X, Y)|` with `X, Y` Gaussian of common std `s`
/// and mean vector of norm `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianMarginal {
    pub nu: f64,
    pub s: f64,
}

impl RicianMarginal {
    pub fn new(nu: f64, s: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite() && s >= 0.0 && s.is_finite()) {
            return Err(Error::param("rice", "nu and s must be finite and >= 0"));
        }
        Ok(Self { nu, s })
    }

    /// Long-run law `Rice(|mu|, eta)`; both modes agree here.
    pub fn stationary(params: &FadingParams) -> Self {
        Self {
            nu: params.mu_norm(),
            s: params.eta,
        }
    }

    pub fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        let s2 = self.s * self.s;
        let z = r * self.nu / s2;
        (r / s2) * (-(r - self.nu).powi(2) / (2.0 * s2)).exp() * bessel_i0e(z)
    }

    /// Draws `|g|^2`.
    pub fn sample_power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let x = self.nu + self.s * a;
        let y = self.s * b;
        x * x + y * y
    }
}

/// Law of `|g(t)|` started from `g(0) = 0`. `t = inf` gives the stationary law.
pub fn fading_marginal(t: f64, params: &FadingParams, mode: MarginalMode) -> Result<RicianMarginal> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be >= 0"));
    }
    let settle = -(-t).exp_m1();
    let nu = params.mu_norm() * -(-0.5 * t).exp_m1();
    let s = match mode {
        MarginalMode::Paper => params.eta * settle,
        MarginalMode::Sde => params.eta * settle.sqrt(),
    };
    RicianMarginal::new(nu, s)
}

/// `E|g|^2 = nu^2 + 2 s^2`.
pub fn fading_second_moment(marginal: &RicianMarginal) -> f64 {
    marginal.nu * marginal.nu + 2.0 * marginal.s * marginal.s
}

/// `E[log |g|]` under `Rice(nu, s)` by adaptive quadrature over the density.
pub fn fading_log_moment(marginal: &RicianMarginal) -> Result<f64> {
    expect_over_rice(marginal, f64::ln)
}

/// `E[h(|g|)]` under `Rice(nu, s)`; `h` must be integrable against the density.
pub(crate) fn expect_over_rice(marginal: &RicianMarginal, h: impl Fn(f64) -> f64) -> Result<f64> {
    let RicianMarginal { nu, s } = *marginal;
    if nu == 0.0 && s == 0.0 {
        return Err(Error::Degenerate("|g| is almost surely zero"));
    }
    if s == 0.0 {
        return Ok(h(nu));
    }
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_subdivisions: 4000,
    };
    let integrand = |r: f64| {
        if r <= 0.0 {
            0.0
        } else {
            h(r) * marginal.pdf(r)
        }
    };
    // the density is negligible (< e^-450) more than 30 s away from nu
    let lo = (nu - 30.0 * s).max(0.0);
    let hi = nu + 30.0 * s;
    let mut total = 0.0;
    let mut knots = vec![lo];
    if nu > lo {
        knots.push(nu);
    }
    knots.push(hi);
    for w in knots.windows(2) {
        total += integrate(integrand, w[0], w[1], opts).value;
    }
    Ok(total)
}

/// Grid for the Fokker-Planck residual: spatial/temporal step `h`, and the
/// half-width of the evaluation window in standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpkGrid {
    pub t: f64,
    pub h: f64,
    pub span_sd: f64,
}

/// Sup-norm of the central-difference residual of
/// `df/dt = 1/2 d/du[(u - mu) f] + eta^2/2 d2f/du2`
/// evaluated on the per-component Gaussian marginal of `g(t)` from `g(0) = 0`.
///
/// The sde-mode marginal solves the equation, so its residual is the O(h^2)
/// truncation error. The paper-mode marginal does not, and its residual
/// stays bounded away from zero.
pub fn fpk_residual_check(params: &FadingParams, mode: MarginalMode, grid: &FpkGrid) -> Result<f64> {
    params.validate()?;
    if !(params.eta > 0.0) {
        return Err(Error::param("eta", "residual needs a non-degenerate density"));
    }
    if !(grid.h > 0.0 && grid.span_sd > 0.0) {
        return Err(Error::param("grid", "h and span must be > 0"));
    }
    if !(grid.t > grid.h) {
        return Err(Error::param("grid.t", "must exceed the step h"));
    }
    let eta2 = params.eta * params.eta;
    let mut worst: f64 = 0.0;
    for &mu in &params.mu {
        let density = |u: f64, t: f64| {
            let settle = -(-t).exp_m1();
            let mean = mu * -(-0.5 * t).exp_m1();
            let sd = match mode {
                MarginalMode::Paper => params.eta * settle,
                MarginalMode::Sde => params.eta * settle.sqrt(),
            };
            let z = (u - mean) / sd;
            (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
        };
        let settle = -(-grid.t).exp_m1();
        let mean = mu * -(-0.5 * grid.t).exp_m1();
        let sd = match mode {
            MarginalMode::Paper => params.eta * settle,
            MarginalMode::Sde => params.eta * settle.sqrt(),
        };
        let h = grid.h;
        let steps = (2.0 * grid.span_sd * sd / h).ceil() as usize;
        let start = mean - grid.span_sd * sd;
        for j in 0..=steps {
            let u = start + j as f64 * h;
            let t = grid.t;
            let f0 = density(u, t);
            let fp = density(u + h, t);
            let fm = density(u - h, t);
            let dt = (density(u, t + h) - density(u, t - h)) / (2.0 * h);
            let drift = ((u + h - mu) * fp - (u - h - mu) * fm) / (4.0 * h);
            let diffusion = 0.5 * eta2 * (fp - 2.0 * f0 + fm) / (h * h);
            worst = worst.max((dt - drift - diffusion).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EULER_GAMMA;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_examples() {
        assert_eq!(path_loss(0.5, 4.0).unwrap(), 1.0);
        assert_eq!(path_loss(1.0, 4.0).unwrap(), 1.0);
        assert_eq!(path_loss(2.0, 4.0).unwrap(), 0.0625);
        assert!(path_loss(2.0, 2.0).is_err());
        assert!(path_loss(-1.0, 3.0).is_err());
    }

    #[test]
    fn path_loss_monotone_and_continuous() {
        let mut prev = 1.0;
        for k in 0..1000 {
            let d = k as f64 * 0.01;
            let l = path_loss(d, 3.5).unwrap();
            assert!(l <= prev && l > 0.0);
            prev = l;
        }
        let just_above = path_loss(1.0 + 1e-12, 3.5).unwrap();
        assert!((just_above - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_radius_meets_tolerance() {
        for alpha in [2.5, 3.0, 4.0, 5.0] {
            let w = interference_truncation_radius(alpha, 1e-3).unwrap();
            let tail = 2.0 * PI * w.powf(2.0 - alpha) / (alpha - 2.0);
            let total = PI * alpha / (alpha - 2.0);
            assert!((tail / total - 1e-3).abs() < 1e-12, "alpha {alpha}");
        }
        let w4 = interference_truncation_radius(4.0, 1e-3).unwrap();
        assert!((w4 - 500f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn antenna_bookkeeping() {
        for n in [1u32, 4, 16, 100] {
            let a = AntennaModel::new(n).unwrap();
            let root = (n as f64).sqrt();
            assert!((a.mean_interference_factor() - root).abs() < 1e-12);
            assert!((a.hit_probability() - 1.0 / root).abs() < 1e-15);
            assert!(a.beam_width() > 0.0 && a.beam_width() <= 2.0 * PI + 1e-15);
        }
        assert!(AntennaModel::new(0).is_err());
    }

    #[test]
    fn deterministic_fading_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = FadingParams { mu: [1.0, 0.5], eta: 0.0 };
        let mut at_mu = FadingState { g: params.mu, t: 0.0 };
        let mut from_zero = FadingState::zero();
        for _ in 0..40 {
            at_mu = evolve_fading(&at_mu, 0.1, &params, &mut rng).unwrap();
            from_zero = evolve_fading(&from_zero, 0.1, &params, &mut rng).unwrap();
        }
        assert!((at_mu.g[0] - 1.0).abs() < 1e-14 && (at_mu.g[1] - 0.5).abs() < 1e-14);
        let t = from_zero.t;
        assert!((t - 4.0).abs() < 1e-12);
        for k in 0..2 {
            let exact = params.mu[k] * (1.0 - (-t / 2.0).exp());
            assert!((from_zero.g[k] - exact).abs() < 1e-13);
        }
        assert!(evolve_fading(&at_mu, 0.0, &params, &mut rng).is_err());
    }

    #[test]
    fn marginal_examples() {
        let p = FadingParams { mu: [1.0, 1.0], eta: 1.0 };
        for mode in [MarginalMode::Paper, MarginalMode::Sde] {
            let m0 = fading_marginal(0.0, &p, mode).unwrap();
            assert_eq!((m0.nu, m0.s), (0.0, 0.0));
        }
        let inf = fading_marginal(f64::INFINITY, &p, MarginalMode::Paper).unwrap();
        assert!((inf.nu - 2f64.sqrt()).abs() < 1e-15 && inf.s == 1.0);
        let sde = fading_marginal(1.0, &p, MarginalMode::Sde).unwrap();
        assert!((sde.s - (1.0 - (-1f64).exp()).sqrt()).abs() < 1e-15);
        assert!((sde.s - 0.7951).abs() < 1e-4);
        assert!(fading_marginal(-1.0, &p, MarginalMode::Sde).is_err());
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(fading_second_moment(&RicianMarginal { nu: 0.0, s: 0.0 }), 0.0);
        let st = RicianMarginal::stationary(&FadingParams { mu: [1.0, 1.0], eta: 1.0 });
        assert!((fading_second_moment(&st) - 4.0).abs() < 1e-12);
        assert_eq!(fading_second_moment(&RicianMarginal { nu: 0.0, s: 1.0 }), 2.0);
    }

    #[test]
    fn density_integrates_to_one() {
        for (nu, s) in [(0.0, 1.0), (2f64.sqrt(), 1.0), (50.0, 0.3), (0.01, 4.0)] {
            let m = RicianMarginal { nu, s };
            let mass = expect_over_rice(&m, |_| 1.0).unwrap();
            assert!((mass - 1.0).abs() < 1e-12, "({nu}, {s}) -> {mass}");
        }
    }

    #[test]
    fn rayleigh_log_moment() {
        let v = fading_log_moment(&RicianMarginal { nu: 0.0, s: 1.0 }).unwrap();
        let exact = (2f64.ln() - EULER_GAMMA) / 2.0;
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
        assert!((v - 0.05797).abs() < 1e-5);
    }

    #[test]
    fn log_moment_concentrates() {
        let v = fading_log_moment(&RicianMarginal { nu: 100.0, s: 1.0 }).unwrap();
        assert!((v / 100f64.ln() - 1.0).abs() < 0.01);
        assert_eq!(fading_log_moment(&RicianMarginal { nu: 3.0, s: 0.0 }).unwrap(), 3f64.ln());
        assert!(matches!(
            fading_log_moment(&RicianMarginal { nu: 0.0, s: 0.0 }),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fpk_residual_behaviour() {
        let p = FadingParams { mu: [1.0, 1.0], eta: 1.0 };
        let residual = |t, mode, h| {
            fpk_residual_check(&p, mode, &FpkGrid { t, h, span_sd: 6.0 }).unwrap()
        };
        // stationary solution: residual is pure truncation error
        let s1 = residual(f64::INFINITY, MarginalMode::Sde, 0.02);
        let s2 = residual(f64::INFINITY, MarginalMode::Sde, 0.01);
        assert!(s2 < s1 && s2 < 1e-4);
        let r1 = residual(1.0, MarginalMode::Sde, 0.02);
        let r2 = residual(1.0, MarginalMode::Sde, 0.01);
        assert!((r1 / r2 - 4.0).abs() < 0.2, "ratio {}", r1 / r2);
        let q1 = residual(1.0, MarginalMode::Paper, 0.02);
        let q2 = residual(1.0, MarginalMode::Paper, 0.01);
        assert!(q2 > 0.05 && (q1 / q2 - 1.0).abs() < 0.05, "{q1} {q2}");
    }
}
