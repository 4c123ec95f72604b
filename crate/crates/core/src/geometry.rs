//! Point-cloud metric utilities: the smoothed norm, median fill distance,
//! neighborhood radius selection and ball-counting density checks.
//!
//! Everything here is brute force over all pairs; the clouds this crate
//! targets hold a few thousand points at most.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{dist2, PointCloud};
use crate::error::{Error, Result};

/// First and last multiplier tried by [`neighborhood_radius`], and the grid step.
pub const RADIUS_GRID_START: f64 = 1.0;
pub const RADIUS_GRID_END: f64 = 50.0;
const RADIUS_GRID_STEPS: usize = 490;

/// `sqrt(|x|² + eps)`, the smooth stand-in for the Euclidean norm.
pub fn h_eps_norm(x: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be positive and finite"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vector"));
    }
    Ok(h_eps_from_sq(x.iter().map(|v| v * v).sum(), eps))
}

#[inline]
pub(crate) fn h_eps_from_sq(r2: f64, eps: f64) -> f64 {
    (r2 + eps).sqrt()
}

/// Median with the even-count convention used throughout: the mean of the
/// two middle order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Distance from every point to its nearest other point.
pub fn nearest_neighbor_distances(points: &PointCloud) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points.point(i);
            let mut best = f64::INFINITY;
            for j in 0..n {
                if j != i {
                    best = best.min(dist2(pi, points.point(j)));
                }
            }
            best.sqrt()
        })
        .collect())
}

/// Median over points of the nearest-neighbor distance.
pub fn fill_distance(points: &PointCloud) -> Result<f64> {
    let nn = nearest_neighbor_distances(points)?;
    let h0 = median(&nn).unwrap_or(0.0);
    if h0 <= 0.0 {
        return Err(Error::Degenerate(
            "fill distance is zero; duplicated points dominate the cloud".into(),
        ));
    }
    Ok(h0)
}

fn radius_grid() -> impl Iterator<Item = f64> {
    (0..=RADIUS_GRID_STEPS).map(|k| (10 + k) as f64 / 10.0)
}

fn kth_smallest(mut d: Vec<f64>, k: usize) -> f64 {
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Smallest grid multiplier `c` such that the closed ball of radius
/// `c·fill_distance(reference)` around every query holds at least `nu`
/// reference points. Returns `(c, c·h0)`.
pub fn neighborhood_radius(
    reference: &PointCloud,
    queries: &PointCloud,
    nu: usize,
) -> Result<(f64, f64)> {
    if nu == 0 {
        return Err(Error::invalid("nu must be at least 1"));
    }
    if queries.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: queries.dim(),
        });
    }
    let h0 = fill_distance(reference)?;
    if nu > reference.len() {
        return Err(Error::RadiusNotFound {
            nu,
            max_multiplier: RADIUS_GRID_END,
            worst_query: 0,
            found: reference.len(),
        });
    }

    // Distance to the nu-th closest reference point, per query.
    let kth: Vec<f64> = (0..queries.len())
        .into_par_iter()
        .map(|i| {
            let q = queries.point(i);
            let d = reference.iter().map(|p| dist2(q, p).sqrt()).collect();
            kth_smallest(d, nu)
        })
        .collect();
    let (worst, needed) = kth
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });

    match radius_grid().find(|c| needed <= c * h0) {
        Some(c) => Ok((c, c * h0)),
        None => {
            let limit = RADIUS_GRID_END * h0;
            let q = queries.point(worst);
            let found = reference
                .iter()
                .filter(|p| dist2(q, p).sqrt() <= limit)
                .count();
            Err(Error::RadiusNotFound {
                nu,
                max_multiplier: RADIUS_GRID_END,
                worst_query: worst,
                found,
            })
        }
    }
}

/// Gaussian support widths for attraction (`h1`) and repulsion (`h2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SupportSizes {
    /// Fill distance of the reference cloud.
    pub h0: f64,
    pub h0_hat: f64,
    pub c1: f64,
    pub h1: f64,
    pub h2: f64,
    /// `floor(J / I)`.
    pub nu: usize,
    /// Fill distance of the query cloud, from which `h2` is built.
    pub q_fill: f64,
}

/// `2√2`: four standard deviations of `exp(-r²/h²)` in units of `h`.
pub const SUPPORT_SCALE: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Support sizes for a reference cloud `p` and a query cloud `q`.
///
/// `h1` comes from the radius that covers `floor(J/I)` reference points
/// around each query; `h2` applies the same construction to the query
/// cloud against itself with one point per ball.
pub fn support_sizes(p: &PointCloud, q: &PointCloud) -> Result<SupportSizes> {
    if q.len() < 2 || p.len() < q.len() {
        return Err(Error::invalid(format!(
            "support sizes need J >= I >= 2 (J = {}, I = {})",
            p.len(),
            q.len()
        )));
    }
    let nu = p.len() / q.len();
    let h0 = fill_distance(p)?;
    let (c1, h0_hat) = neighborhood_radius(p, q, nu)?;
    let (_, q_hat) = neighborhood_radius(q, q, 1)?;
    let q_fill = fill_distance(q)?;
    Ok(SupportSizes {
        h0,
        h0_hat,
        c1,
        h1: SUPPORT_SCALE * h0_hat,
        h2: SUPPORT_SCALE * q_hat,
        nu,
        q_fill,
    })
}

/// `h2` alone: `2√2` times the (self-covering) fill radius of `q`.
pub fn repulsion_support(q: &PointCloud) -> Result<f64> {
    let (_, q_hat) = neighborhood_radius(q, q, 1)?;
    Ok(SUPPORT_SCALE * q_hat)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRhoParams {
    pub h: f64,
    pub rho: f64,
    pub k_max: u32,
}

impl HRhoParams {
    pub fn new(h: f64, rho: f64, k_max: u32) -> Result<Self> {
        if !(h > 0.0 && rho > 0.0 && k_max >= 1) {
            return Err(Error::invalid("h-rho parameters need h > 0, rho > 0, kMax >= 1"));
        }
        Ok(Self { h, rho, k_max })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HRhoViolation {
    pub probe: usize,
    pub k: u32,
    pub count: usize,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HRhoReport {
    pub holds: bool,
    /// First failing (probe, k) pair in probe-major order.
    pub violation: Option<HRhoViolation>,
}

/// Checks `#(P ∩ B̄(y, k·h)) ≤ ρ·kⁿ` for every probe `y` and `k = 1..=kMax`,
/// with `n` the ambient dimension.
pub fn check_h_rho(points: &PointCloud, params: &HRhoParams, probes: &[Vec<f64>]) -> HRhoReport {
    let n = points.dim() as i32;
    for (pi, y) in probes.iter().enumerate() {
        let dists: Vec<f64> = points.iter().map(|p| dist2(y, p).sqrt()).collect();
        for k in 1..=params.k_max {
            let radius = f64::from(k) * params.h;
            let count = dists.iter().filter(|&&d| d <= radius).count();
            let bound = params.rho * f64::from(k).powi(n);
            if count as f64 > bound {
                return HRhoReport {
                    holds: false,
                    violation: Some(HRhoViolation {
                        probe: pi,
                        k,
                        count,
                        bound,
                    }),
                };
            }
        }
    }
    HRhoReport {
        holds: true,
        violation: None,
    }
}

/// Index of the reference point closest to `z`; ties go to the lowest index.
pub fn nearest_reference(z: &[f64], reference: &PointCloud) -> Result<usize> {
    if z.len() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: z.len(),
        });
    }
    let mut best = (0, f64::INFINITY);
    for (i, r) in reference.iter().enumerate() {
        let d = dist2(z, r);
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}
