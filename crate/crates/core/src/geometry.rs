//! Poisson deployments on a disk, nearest-BS association and BS activity.
//!
//! The typical user sits at the origin. All point sets live on the disk of
//! radius `window_radius` about it, which is exactly the reception ball when
//! the radius is finite.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_sq(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub radius: f64,
}

impl DensityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_b >= 0.0 && self.lambda_b.is_finite()) {
            return Err(Error::param("lambda_b", "must be finite and >= 0"));
        }
        if !(self.lambda_u >= 0.0 && self.lambda_u.is_finite()) {
            return Err(Error::param("lambda_u", "must be finite and >= 0"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::param("radius", "must be > 0"));
        }
        Ok(())
    }
}

/// How dormant base stations are decided inside a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityMode {
    /// A BS is active iff some user's nearest BS is it.
    #[default]
    Voronoi,
    /// Independent Bernoulli(p_a) per BS; the serving BS is always active.
    Thinning,
}

/// Samples a homogeneous PPP of the given intensity on the disk of `radius`
/// centred at the origin.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Result<Vec<Point2D>> {
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::param("density", "must be finite and >= 0"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", "must be finite and > 0"));
    }
    let mean = density * PI * radius * radius;
    let count = poisson_count(mean, rng);
    Ok((0..count).map(|_| uniform_in_disk(radius, rng)).collect())
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(mean).expect("positive finite mean");
    let n: f64 = poisson.sample(rng);
    n as usize
}

pub(crate) fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point2D {
    let r = radius * rng.random::<f64>().sqrt();
    let (s, c) = (2.0 * PI * rng.random::<f64>()).sin_cos();
    Point2D::new(r * c, r * s)
}

/// Index and distance of the BS nearest to `target`; ties go to the lowest index.
pub fn nearest_bs(target: &Point2D, bs_points: &[Point2D]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in bs_points.iter().enumerate() {
        let d = target.distance_sq(p);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, d)| (i, d.sqrt())).ok_or(Error::NoBaseStation)
}

/// Uniform bucket grid for repeated nearest-neighbour queries.
///
/// Returns exactly what [`nearest_bs`] returns, tie-break included.
pub struct BsIndex<'a> {
    points: &'a [Point2D],
    origin: Point2D,
    cell: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

impl<'a> BsIndex<'a> {
    pub fn new(points: &'a [Point2D]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
        }
        let width = (max_x - min_x).max(1e-12);
        let height = (max_y - min_y).max(1e-12);
        // about two points per bucket
        let n = points.len().max(1) as f64;
        let cell = ((width * height * 2.0) / n)
            .sqrt()
            .max(width.max(height) / n)
            .max(1e-9);
        let nx = ((width / cell).floor() as i64 + 1).max(1);
        let ny = ((height / cell).floor() as i64 + 1).max(1);
        let mut buckets = vec![Vec::new(); (nx * ny) as usize];
        let origin = Point2D::new(min_x, min_y);
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - min_x) / cell) as i64).min(nx - 1);
            let cy = (((p.y - min_y) / cell) as i64).min(ny - 1);
            buckets[(cy * nx + cx) as usize].push(i as u32);
        }
        Self {
            points,
            origin,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    pub fn nearest(&self, target: &Point2D) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::NoBaseStation);
        }
        let qx = ((target.x - self.origin.x) / self.cell).floor() as i64;
        let qy = ((target.y - self.origin.y) / self.cell).floor() as i64;
        let outside = |q: i64, n: i64| if q < 0 { -q } else if q >= n { q - n + 1 } else { 0 };
        let k_start = outside(qx, self.nx).max(outside(qy, self.ny));
        let k_end = [qx, qx - (self.nx - 1), qy, qy - (self.ny - 1)]
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or(0);
        let mut best: Option<(usize, f64)> = None;
        let visit = |cx: i64, cy: i64, best: &mut Option<(usize, f64)>| {
            for &i in &self.buckets[(cy * self.nx + cx) as usize] {
                let i = i as usize;
                let d = target.distance_sq(&self.points[i]);
                let better = match *best {
                    None => true,
                    Some((bi, bd)) => d < bd || (d == bd && i < bi),
                };
                if better {
                    *best = Some((i, d));
                }
            }
        };
        for k in k_start..=k_end {
            let (x_lo, x_hi) = ((qx - k).max(0), (qx + k).min(self.nx - 1));
            for cy in (qy - k).max(0)..=(qy + k).min(self.ny - 1) {
                if cy == qy - k || cy == qy + k {
                    for cx in x_lo..=x_hi {
                        visit(cx, cy, &mut best);
                    }
                } else {
                    for cx in [qx - k, qx + k] {
                        if cx >= 0 && cx < self.nx {
                            visit(cx, cy, &mut best);
                        }
                    }
                }
            }
            // unvisited cells lie farther than k cells from the query
            if let Some((_, bd)) = best {
                if bd.sqrt() < k as f64 * self.cell {
                    break;
                }
            }
        }
        best.map(|(i, d)| (i, d.sqrt())).ok_or(Error::NoBaseStation)
    }
}

/// `flags[i]` is true iff at least one user associates with BS `i`.
pub fn compute_active_flags(bs_points: &[Point2D], user_points: &[Point2D]) -> Vec<bool> {
    let mut flags = vec![false; bs_points.len()];
    if bs_points.is_empty() {
        return flags;
    }
    let index = BsIndex::new(bs_points);
    for u in user_points {
        if let Ok((i, _)) = index.nearest(u) {
            flags[i] = true;
        }
    }
    flags
}

/// Probability that at least one BS lies in the reception ball:
/// `1 - exp(-pi lambda_b R^2)`.
pub fn coverage_probability(cfg: &DensityConfig) -> f64 {
    -(-PI * cfg.lambda_b * cfg.radius * cfg.radius).exp_m1()
}

/// Gamma-approximated probability that a Voronoi cell holds at least one user,
/// `1 - (1 + lambda_u / (3.5 lambda_b))^-3.5`.
pub fn active_probability(lambda_b: f64, lambda_u: f64) -> Result<f64> {
    if !(lambda_b > 0.0 && lambda_b.is_finite()) {
        return Err(Error::param("lambda_b", "must be > 0"));
    }
    if !(lambda_u >= 0.0 && lambda_u.is_finite()) {
        return Err(Error::param("lambda_u", "must be finite and >= 0"));
    }
    Ok(-(-3.5 * (lambda_u / (3.5 * lambda_b)).ln_1p()).exp_m1())
}

/// One spatial realisation around the typical user at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSnapshot {
    pub bs_points: Vec<Point2D>,
    /// `user_points[0]` is always the typical user at the origin.
    pub user_points: Vec<Point2D>,
    pub active: Vec<bool>,
    pub serving_index: Option<usize>,
    pub window_radius: f64,
}

impl NetworkSnapshot {
    pub fn sample<R: Rng + ?Sized>(cfg: &DensityConfig, mode: ActivityMode, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let bs_points = sample_ppp(cfg.lambda_b, cfg.radius, rng)?;
        let serving_index = nearest_bs(&Point2D::ORIGIN, &bs_points).ok().map(|(i, _)| i);
        let mut user_points = vec![Point2D::ORIGIN];
        let active = match mode {
            ActivityMode::Voronoi => {
                user_points.extend(sample_ppp(cfg.lambda_u, cfg.radius, rng)?);
                compute_active_flags(&bs_points, &user_points)
            }
            ActivityMode::Thinning => {
                if bs_points.is_empty() {
                    Vec::new()
                } else {
                    let p_a = active_probability(cfg.lambda_b, cfg.lambda_u)?;
                    (0..bs_points.len())
                        .map(|i| Some(i) == serving_index || rng.random::<f64>() < p_a)
                        .collect()
                }
            }
        };
        Ok(Self {
            bs_points,
            user_points,
            active,
            serving_index,
            window_radius: cfg.radius,
        })
    }

    /// Distance from the typical user to its serving BS.
    pub fn serving_distance(&self) -> Option<f64> {
        self.serving_index.map(|i| self.bs_points[i].norm())
    }

    /// Active BSs other than the serving one.
    pub fn interferers(&self) -> impl Iterator<Item = (usize, &Point2D)> + '_ {
        self.bs_points
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.active[*i] && Some(*i) != self.serving_index)
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}
