use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::terms::{MlopProblem, COINCIDENCE_RATIO};
use super::{LambdaSchedule, MlopConfig, MlopState};
use crate::cloud::{dot, norm2, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Gaussian};

/// Coordinates beyond this multiple of the input diameter abort the run.
const DIVERGENCE_FACTOR: f64 = 1e6;
/// Size of the nudge applied to a coincident pair, as a fraction of `h2`.
const SEPARATION_NUDGE: f64 = 1e-9;

/// Barzilai–Borwein step `⟨Δq, ΔG⟩ / ⟨ΔG, ΔG⟩`; `None` when `ΔG = 0`.
pub fn bb_step(dq: &[f64], dg: &[f64]) -> Option<f64> {
    let den = norm2(dg);
    if den > 0.0 {
        Some(dot(dq, dg) / den)
    } else {
        None
    }
}

/// Indices of `size` distinct points of a cloud of `available` points,
/// drawn uniformly without replacement.
pub fn init_q_indices(available: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size == 0 || size > available {
        return Err(Error::invalid(format!(
            "cannot draw {size} initial points from {available}"
        )));
    }
    let mut rng = seeded(seed);
    Ok(sample(&mut rng, available, size).into_vec())
}

/// `Q⁽⁰⁾`: `size` points of `p` drawn without replacement.
pub fn init_q(p: &PointCloud, size: usize, seed: u64) -> Result<PointCloud> {
    p.select(&init_q_indices(p.len(), size, seed)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRow {
    pub iter: usize,
    pub max_grad_norm: f64,
    pub mean_displacement: f64,
    pub cost_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct MlopRun {
    pub q: PointCloud,
    pub lambdas: Vec<f64>,
    /// Row 0 describes `Q⁽⁰⁾`; row `k` the iterate after step `k`.
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    /// True when the gradient tolerance stopped the run early.
    pub converged: bool,
}

fn max_point_norm(grad: &[f64], dim: usize) -> f64 {
    grad.chunks_exact(dim)
        .map(|g| norm2(g).sqrt())
        .fold(0.0, f64::max)
}

/// Moves apart any pair of points that (nearly) coincide in the metric of
/// `problem`, along a seeded random direction.
fn separate_coincident(problem: &MlopProblem<'_>, q: &mut PointCloud, noise: &mut Gaussian) -> Result<()> {
    let min_r2 = (COINCIDENCE_RATIO * problem.h2()).powi(2);
    let nudge = SEPARATION_NUDGE * problem.h2();
    for _ in 0..8 {
        let reduced = problem.reduce(q)?.into_owned();
        let mut moved = false;
        for a in 0..q.len() {
            for b in (a + 1)..q.len() {
                if problem.pair_dist2(&reduced, a, b) < min_r2 {
                    let mut dir: Vec<f64> = (0..q.dim()).map(|_| noise.sample()).collect();
                    let len = norm2(&dir).sqrt();
                    dir.iter_mut().for_each(|d| *d *= nudge / len);
                    for (x, d) in q.point_mut(b).iter_mut().zip(&dir) {
                        *x += d;
                    }
                    moved = true;
                }
            }
        }
        if !moved {
            return Ok(());
        }
    }
    Ok(())
}

/// Gradient descent from `q0` toward the locally optimal projection of `p`.
///
/// All points are updated from the same snapshot each iteration. Balance
/// factors are computed on `q0` and, depending on the schedule, refreshed
/// every iteration. Each point takes its own BB step from its previous
/// iterate and gradient; the first step, and any non-positive BB step, uses
/// `gamma0`. A step is shortened so that no point moves more than
/// `max_step·h1` at once.
pub fn run_mlop(p: &PointCloud, q0: &PointCloud, cfg: &MlopConfig) -> Result<MlopRun> {
    if q0.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q0.dim(),
        });
    }
    let problem = MlopProblem::new(p, cfg)?;
    if cfg.max_iters == 0 {
        return Ok(MlopRun {
            q: q0.clone(),
            lambdas: Vec::new(),
            trace: Vec::new(),
            iterations: 0,
            converged: false,
        });
    }

    let dim = p.dim();
    let diameter = p.bounding_box_diameter().max(q0.bounding_box_diameter());
    let limit = DIVERGENCE_FACTOR * if diameter > 0.0 { diameter } else { 1.0 };
    let mut jitter = Gaussian::new(derive_seed(cfg.seed, "mlop-separation"));

    let mut q = q0.clone();
    separate_coincident(&problem, &mut q, &mut jitter)?;
    let terms = problem.terms(&q)?;
    let lambdas = terms.balance();
    let grad = terms.gradient(&lambdas);
    let gamma0 = cfg
        .gamma0
        .unwrap_or_else(|| 0.1 * problem.h1() / (1.0 + max_point_norm(&grad, dim)));

    let cap = cfg.max_step.map_or(f64::INFINITY, |c| c * problem.h1());

    let mut trace = vec![TraceRow {
        iter: 0,
        max_grad_norm: max_point_norm(&grad, dim),
        mean_displacement: 0.0,
        cost_estimate: terms.cost(&lambdas),
    }];
    let mut state = MlopState {
        q,
        lambdas,
        prev_q: None,
        prev_grad: None,
        iter: 0,
    };
    let mut grad = grad;
    let mut converged = false;

    while state.iter < cfg.max_iters {
        if max_point_norm(&grad, dim) <= cfg.grad_tol {
            converged = true;
            break;
        }
        let mut next = state.q.clone();
        let mut displacement = 0.0;
        for i in 0..next.len() {
            let g = &grad[i * dim..(i + 1) * dim];
            let step = match (&state.prev_q, &state.prev_grad) {
                (Some(pq), Some(pg)) => {
                    let dq: Vec<f64> = state
                        .q
                        .point(i)
                        .iter()
                        .zip(pq.point(i))
                        .map(|(a, b)| a - b)
                        .collect();
                    let dg: Vec<f64> = g
                        .iter()
                        .zip(&pg[i * dim..(i + 1) * dim])
                        .map(|(a, b)| a - b)
                        .collect();
                    bb_step(&dq, &dg)
                        .filter(|s| *s > 0.0 && s.is_finite())
                        .unwrap_or(gamma0)
                }
                _ => gamma0,
            };
            let gnorm = norm2(g).sqrt();
            let step = if step * gnorm > cap { cap / gnorm } else { step };
            let point = next.point_mut(i);
            let mut moved = 0.0;
            for (x, gi) in point.iter_mut().zip(g) {
                *x -= step * gi;
                moved += (step * gi) * (step * gi);
            }
            displacement += moved.sqrt();
        }
        state.iter += 1;

        let magnitude = next.max_abs();
        if !(magnitude <= limit) {
            return Err(Error::Diverged {
                iteration: state.iter,
                magnitude,
                limit,
            });
        }
        separate_coincident(&problem, &mut next, &mut jitter)?;

        let terms = problem.terms(&next)?;
        if cfg.lambda_schedule == LambdaSchedule::EveryIteration {
            state.lambdas = terms.balance();
        }
        let new_grad = terms.gradient(&state.lambdas);
        trace.push(TraceRow {
            iter: state.iter,
            max_grad_norm: max_point_norm(&new_grad, dim),
            mean_displacement: displacement / next.len() as f64,
            cost_estimate: terms.cost(&state.lambdas),
        });
        state.prev_q = Some(std::mem::replace(&mut state.q, next));
        state.prev_grad = Some(std::mem::replace(&mut grad, new_grad));
    }

    Ok(MlopRun {
        q: state.q,
        lambdas: state.lambdas,
        trace,
        iterations: state.iter,
        converged,
    })
}
