//! Manifold locally optimal projection: a small point set `Q` is pulled
//! toward the noisy samples `P` by an H_ε-smoothed L1 attraction and spread
//! out by a short-range repulsion, by gradient descent with per-point
//! Barzilai–Borwein steps.

mod driver;
mod terms;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use driver::{bb_step, init_q, init_q_indices, run_mlop, MlopRun, TraceRow};
pub use terms::{
    attraction_coeff, balance_lambda, cost, gradient, repulsion_coeff, MlopProblem, Terms,
};

/// Repulsion profile `η(r)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepulsionProfile {
    /// `η(r) = 1 / (3r³)`.
    #[default]
    InverseCubic,
}

impl RepulsionProfile {
    #[inline]
    pub fn eta(self, r: f64) -> f64 {
        match self {
            RepulsionProfile::InverseCubic => 1.0 / (3.0 * r * r * r),
        }
    }

    /// `|dη/dr|`.
    #[inline]
    pub fn slope(self, r: f64) -> f64 {
        match self {
            RepulsionProfile::InverseCubic => 1.0 / (r * r * r * r),
        }
    }
}

/// How the Gaussian weight of the attraction enters the descent direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractionForm {
    /// The true gradient of the attraction energy, including the derivative
    /// of the weight.
    Exact,
    /// Weights treated as constants, giving a weighted L1-median pull.
    #[default]
    FrozenWeights,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSchedule {
    /// Balance factors are computed on `Q⁽⁰⁾` and frozen.
    #[default]
    FirstIteration,
    EveryIteration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct MlopConfig {
    pub eps: f64,
    /// Attraction support; derived from the data when `None`.
    pub h1: Option<f64>,
    /// Repulsion support; derived from the data when `None`.
    pub h2: Option<f64>,
    pub eta: RepulsionProfile,
    pub max_iters: usize,
    /// Stop once every point's gradient norm is at most this.
    pub grad_tol: f64,
    /// Step for the first iteration and whenever a BB step is unusable.
    /// Defaults to `0.1·h1 / (1 + max |∇G(q⁰)|)`.
    pub gamma0: Option<f64>,
    pub seed: u64,
    /// Evaluate every scalar norm through a random sketch of the data.
    pub use_sketch: bool,
    /// Sketch width; `min(n, 20)` when `None`.
    pub sketch_dim: Option<usize>,
    pub lambda_schedule: LambdaSchedule,
    pub attraction: AttractionForm,
    /// Largest move of a single point per iteration, in units of `h1`.
    pub max_step: Option<f64>,
}

impl Default for MlopConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            h1: None,
            h2: None,
            eta: RepulsionProfile::InverseCubic,
            max_iters: 150,
            grad_tol: 0.0,
            gamma0: None,
            seed: 0,
            use_sketch: false,
            sketch_dim: None,
            lambda_schedule: LambdaSchedule::FirstIteration,
            attraction: AttractionForm::FrozenWeights,
            max_step: Some(0.1),
        }
    }
}

impl MlopConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("eps must be positive"));
        }
        if !positive(self.h1) || !positive(self.h2) {
            return Err(Error::invalid("h1 and h2 must be positive"));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::invalid("gradTol must be non-negative"));
        }
        if !positive(self.gamma0) {
            return Err(Error::invalid("gamma0 must be positive"));
        }
        if !positive(self.max_step) {
            return Err(Error::invalid("maxStep must be positive"));
        }
        if self.sketch_dim == Some(0) {
            return Err(Error::invalid("sketch dimension must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn supports(&self) -> Result<(f64, f64)> {
        match (self.h1, self.h2) {
            (Some(h1), Some(h2)) => Ok((h1, h2)),
            _ => Err(Error::invalid("h1 and h2 must be set before running MLOP")),
        }
    }
}

/// Per-run state: the current iterate, the frozen balance factors and the
/// previous iterate and gradient for the BB step.
#[derive(Clone, Debug)]
pub struct MlopState {
    pub q: crate::PointCloud,
    pub lambdas: Vec<f64>,
    pub prev_q: Option<crate::PointCloud>,
    pub prev_grad: Option<Vec<f64>>,
    pub iter: usize,
}
