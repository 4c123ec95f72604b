use std::borrow::Cow;

use rayon::prelude::*;

use super::{AttractionForm, MlopConfig, RepulsionProfile};
use crate::cloud::{dist2, norm2, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::h_eps_from_sq;
use crate::sketch::{build_sketch, default_sketch_dim, SketchOperator};

/// Pairs of `Q` closer than this fraction of `h2` count as coincident.
pub(crate) const COINCIDENCE_RATIO: f64 = 1e-12;

/// Attraction coefficient `α` for a pair at squared distance `r2`, chosen so
/// that `(q − p)·α = ∇_q [ |q − p|_{H_ε} · exp(-|q − p|²/h1²) ]`.
#[inline]
pub(crate) fn attraction_from_sq(r2: f64, eps: f64, h1: f64) -> (f64, f64) {
    let inv_h1_sq = 1.0 / (h1 * h1);
    let w = (-r2 * inv_h1_sq).exp();
    let hn = h_eps_from_sq(r2, eps);
    let alpha = w / hn * (1.0 - 2.0 * inv_h1_sq * hn * hn);
    (alpha, hn * w)
}

/// `w / |q − p|_{H_ε}`: the attraction coefficient with the Gaussian weight
/// held fixed, as in a Weiszfeld step.
#[inline]
pub(crate) fn frozen_attraction_from_sq(r2: f64, eps: f64, h1: f64) -> (f64, f64) {
    let w = (-r2 / (h1 * h1)).exp();
    let hn = h_eps_from_sq(r2, eps);
    (w / hn, hn * w)
}

/// Repulsion coefficient `β` at distance `r > 0`, chosen so that
/// `(q − q')·β = −∇_q [ η(|q − q'|) · exp(-|q − q'|²/h2²) ]`.
/// Returns `(β, η·ŵ)`.
#[inline]
pub(crate) fn repulsion_from_r(r: f64, h2: f64, eta: RepulsionProfile) -> (f64, f64) {
    let w_hat = (-(r * r) / (h2 * h2)).exp();
    let e = eta.eta(r);
    let beta = w_hat / r * (eta.slope(r) + 2.0 * e * r / (h2 * h2));
    (beta, e * w_hat)
}

pub fn attraction_coeff(q: &[f64], p: &[f64], eps: f64, h1: f64) -> f64 {
    attraction_from_sq(dist2(q, p), eps, h1).0
}

/// Fails for coincident points, where `η` is unbounded.
pub fn repulsion_coeff(q: &[f64], q_other: &[f64], h2: f64, eta: RepulsionProfile) -> Result<f64> {
    let r = dist2(q, q_other).sqrt();
    if r <= 0.0 {
        return Err(Error::CoincidentPoints(0, 1));
    }
    Ok(repulsion_from_r(r, h2, eta).0)
}

/// The reference cloud together with everything needed to evaluate the
/// cost and its per-point gradient terms for any candidate `Q`.
pub struct MlopProblem<'a> {
    p: &'a PointCloud,
    eps: f64,
    h1: f64,
    h2: f64,
    eta: RepulsionProfile,
    attraction: AttractionForm,
    sketch: Option<SketchOperator>,
    p_reduced: Option<PointCloud>,
}

impl<'a> MlopProblem<'a> {
    pub fn new(p: &'a PointCloud, cfg: &MlopConfig) -> Result<Self> {
        cfg.validate()?;
        let (h1, h2) = cfg.supports()?;
        let sketch = if cfg.use_sketch {
            let m = cfg.sketch_dim.unwrap_or_else(|| default_sketch_dim(p.dim()));
            Some(build_sketch(p, m, cfg.seed)?)
        } else {
            None
        };
        let p_reduced = sketch.as_ref().map(|s| s.project_cloud(p)).transpose()?;
        Ok(Self {
            p,
            eps: cfg.eps,
            h1,
            h2,
            eta: cfg.eta,
            attraction: cfg.attraction,
            sketch,
            p_reduced,
        })
    }

    pub fn reference(&self) -> &PointCloud {
        self.p
    }

    pub fn sketch(&self) -> Option<&SketchOperator> {
        self.sketch.as_ref()
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    /// `Q` in the space where norms are measured.
    pub(crate) fn reduce<'q>(&self, q: &'q PointCloud) -> Result<Cow<'q, PointCloud>> {
        match &self.sketch {
            Some(s) => Ok(Cow::Owned(s.project_cloud(q)?)),
            None => Ok(Cow::Borrowed(q)),
        }
    }

    /// Squared distance between two points of `Q`, measured like every other
    /// norm in the cost.
    pub(crate) fn pair_dist2(&self, reduced_q: &PointCloud, a: usize, b: usize) -> f64 {
        dist2(reduced_q.point(a), reduced_q.point(b))
    }

    pub fn terms(&self, q: &PointCloud) -> Result<Terms> {
        if q.dim() != self.p.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.p.dim(),
                got: q.dim(),
            });
        }
        let n = q.dim();
        let q_red = self.reduce(q)?;
        let p_red = self.p_reduced.as_ref().unwrap_or(self.p);
        let min_r = COINCIDENCE_RATIO * self.h2;

        let per_point: Vec<Result<(Vec<f64>, Vec<f64>, f64, f64)>> = (0..q.len())
            .into_par_iter()
            .map(|i| {
                let qi = q.point(i);
                let qi_red = q_red.point(i);
                let mut attraction = vec![0.0; n];
                let mut e1 = 0.0;
                for (j, pj) in self.p.iter().enumerate() {
                    let r2 = dist2(qi_red, p_red.point(j));
                    let (alpha, energy) = match self.attraction {
                        AttractionForm::Exact => attraction_from_sq(r2, self.eps, self.h1),
                        AttractionForm::FrozenWeights => {
                            frozen_attraction_from_sq(r2, self.eps, self.h1)
                        }
                    };
                    e1 += energy;
                    for ((a, x), y) in attraction.iter_mut().zip(qi).zip(pj) {
                        *a += (x - y) * alpha;
                    }
                }
                let mut repulsion = vec![0.0; n];
                let mut e2 = 0.0;
                for k in 0..q.len() {
                    if k == i {
                        continue;
                    }
                    let r = dist2(qi_red, q_red.point(k)).sqrt();
                    if r < min_r || r == 0.0 {
                        return Err(Error::CoincidentPoints(i.min(k), i.max(k)));
                    }
                    let (beta, energy) = repulsion_from_r(r, self.h2, self.eta);
                    e2 += energy;
                    for ((a, x), y) in repulsion.iter_mut().zip(qi).zip(q.point(k)) {
                        *a += (x - y) * beta;
                    }
                }
                Ok((attraction, repulsion, e1, e2))
            })
            .collect();

        let mut terms = Terms {
            dim: n,
            attraction: Vec::with_capacity(q.len() * n),
            repulsion: Vec::with_capacity(q.len() * n),
            e1: Vec::with_capacity(q.len()),
            e2: Vec::with_capacity(q.len()),
        };
        for item in per_point {
            let (a, r, e1, e2) = item?;
            terms.attraction.extend_from_slice(&a);
            terms.repulsion.extend_from_slice(&r);
            terms.e1.push(e1);
            terms.e2.push(e2);
        }
        Ok(terms)
    }
}

/// Per-point sums that make up the cost and its gradient, independent of
/// the balance factors.
#[derive(Clone, Debug)]
pub struct Terms {
    dim: usize,
    /// `Σ_j (q_i − p_j) α_j^i`, row-major `I × n`.
    attraction: Vec<f64>,
    /// `Σ_k (q_i − q_k) β_k^i`, row-major `I × n`.
    repulsion: Vec<f64>,
    /// `Σ_j |q_i − p_j|_{H_ε} w_ij`.
    e1: Vec<f64>,
    /// `Σ_k η(|q_i − q_k|) ŵ_ik`.
    e2: Vec<f64>,
}

impl Terms {
    pub fn len(&self) -> usize {
        self.e1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e1.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn attraction(&self, i: usize) -> &[f64] {
        &self.attraction[i * self.dim..(i + 1) * self.dim]
    }

    pub fn repulsion(&self, i: usize) -> &[f64] {
        &self.repulsion[i * self.dim..(i + 1) * self.dim]
    }

    pub fn attraction_energy(&self, i: usize) -> f64 {
        self.e1[i]
    }

    pub fn repulsion_energy(&self, i: usize) -> f64 {
        self.e2[i]
    }

    /// Balance factors `λ_i = |attraction_i| / |repulsion_i|`, so that both
    /// terms of the gradient start with equal magnitude. A point with no
    /// repulsion (isolated in `Q`) gets `λ = 0`.
    pub fn balance(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let num = norm2(self.attraction(i)).sqrt();
                let den = norm2(self.repulsion(i)).sqrt();
                if den > 0.0 && den.is_finite() {
                    num / den
                } else {
                    log::warn!("point {i} has no repulsion neighbours; balance factor set to 0");
                    0.0
                }
            })
            .collect()
    }

    /// `∇G(q_i) = attraction_i − λ_i · repulsion_i`, flattened `I × n`.
    pub fn gradient(&self, lambdas: &[f64]) -> Vec<f64> {
        debug_assert_eq!(lambdas.len(), self.len());
        let mut g = Vec::with_capacity(self.attraction.len());
        for (i, &lambda) in lambdas.iter().enumerate() {
            g.extend(
                self.attraction(i)
                    .iter()
                    .zip(self.repulsion(i))
                    .map(|(a, r)| a - lambda * r),
            );
        }
        g
    }

    /// `G(Q) = Σ_i e1_i + λ_i e2_i`.
    pub fn cost(&self, lambdas: &[f64]) -> f64 {
        self.e1
            .iter()
            .zip(&self.e2)
            .zip(lambdas)
            .map(|((e1, e2), l)| e1 + l * e2)
            .sum()
    }

    /// The summand of `G` that belongs to point `i`.
    pub fn point_cost(&self, i: usize, lambda: f64) -> f64 {
        self.e1[i] + lambda * self.e2[i]
    }
}

fn check_lambdas(lambdas: &[f64], q: &PointCloud) -> Result<()> {
    if lambdas.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: lambdas.len(),
        });
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("balance factors"));
    }
    Ok(())
}

pub fn cost(p: &PointCloud, q: &PointCloud, lambdas: &[f64], cfg: &MlopConfig) -> Result<f64> {
    check_lambdas(lambdas, q)?;
    Ok(MlopProblem::new(p, cfg)?.terms(q)?.cost(lambdas))
}

pub fn balance_lambda(p: &PointCloud, q: &PointCloud, cfg: &MlopConfig) -> Result<Vec<f64>> {
    Ok(MlopProblem::new(p, cfg)?.terms(q)?.balance())
}

pub fn gradient(
    p: &PointCloud,
    q: &PointCloud,
    lambdas: &[f64],
    cfg: &MlopConfig,
) -> Result<Vec<Vec<f64>>> {
    check_lambdas(lambdas, q)?;
    let g = MlopProblem::new(p, cfg)?.terms(q)?.gradient(lambdas);
    Ok(g.chunks_exact(q.dim()).map(<[f64]>::to_vec).collect())
}
