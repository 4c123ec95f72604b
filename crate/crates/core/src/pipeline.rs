//! Graph denoising and function approximation: samples `(p_j, f(p_j))` are
//! embedded as points of the graph of `f`, cleaned with MLOP, split back into
//! domain points and values, and used as centers for an evaluator.

use serde::{Deserialize, Serialize};

use crate::cloud::{FunctionSamples, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{support_sizes, SupportSizes};
use crate::mlop::{init_q_indices, run_mlop, MlopConfig, TraceRow};
use crate::rbf::{self, KernelKind};
use crate::rng::derive_seed;

/// `max |p| / max |f|` over all coordinates; 1 when `f` vanishes.
pub fn normalization_factor(p: &PointCloud, f: &FunctionSamples) -> f64 {
    let fmax = f.max_abs();
    if fmax > 0.0 {
        p.max_abs() / fmax
    } else {
        1.0
    }
}

fn check_pairing(p: &PointCloud, f: &FunctionSamples) -> Result<()> {
    if p.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: f.len(),
        });
    }
    Ok(())
}

/// Concatenates `p_j` with `c·f(p_j)` for a given scale `c`.
pub fn embed_with(p: &PointCloud, f: &FunctionSamples, norm_factor: f64) -> Result<PointCloud> {
    check_pairing(p, f)?;
    let mut coords = Vec::with_capacity(p.len() * (p.dim() + f.codim()));
    for (x, v) in p.iter().zip(f.iter()) {
        coords.extend_from_slice(x);
        coords.extend(v.iter().map(|y| norm_factor * y));
    }
    PointCloud::new(p.dim() + f.codim(), coords)
}

/// Graph embedding with the data-driven normalization factor.
pub fn embed_graph(p: &PointCloud, f: &FunctionSamples) -> Result<(PointCloud, f64)> {
    let c = normalization_factor(p, f);
    Ok((embed_with(p, f, c)?, c))
}

/// Splits embedded points into the first `n` coordinates and the remaining
/// ones divided by `norm_factor`.
pub fn split_graph(graph: &PointCloud, n: usize, norm_factor: f64) -> Result<(PointCloud, FunctionSamples)> {
    if n == 0 || n >= graph.dim() {
        return Err(Error::invalid(format!(
            "cannot split {}-dimensional points after coordinate {n}",
            graph.dim()
        )));
    }
    if !(norm_factor > 0.0 && norm_factor.is_finite()) {
        return Err(Error::invalid("normalization factor must be positive"));
    }
    let s = graph.dim() - n;
    let mut q = Vec::with_capacity(graph.len() * n);
    let mut f = Vec::with_capacity(graph.len() * s);
    for x in graph.iter() {
        q.extend_from_slice(&x[..n]);
        f.extend(x[n..].iter().map(|y| y / norm_factor));
    }
    Ok((PointCloud::new(n, q)?, FunctionSamples::new(s, f)?))
}

/// Denoised domain points with their denoised values.
#[derive(Clone, Debug, PartialEq)]
pub struct DenoisedGraph {
    pub q: PointCloud,
    pub f_tilde: FunctionSamples,
}

/// Result of a graph denoising run.
#[derive(Clone, Debug)]
pub struct DenoiseRun {
    pub graph: DenoisedGraph,
    /// The sampled starting set, taken verbatim from the input.
    pub initial: DenoisedGraph,
    pub initial_indices: Vec<usize>,
    pub norm_factor: f64,
    pub support: SupportSizes,
    /// Configuration with the support sizes filled in.
    pub config: MlopConfig,
    pub trace: Vec<TraceRow>,
    pub lambdas: Vec<f64>,
}

/// Embeds `(p, f)`, draws `q_size` starting points, runs MLOP on the
/// embedded graph and splits the result.
pub fn denoise_graph(p: &PointCloud, f: &FunctionSamples, q_size: usize, cfg: &MlopConfig) -> Result<DenoiseRun> {
    cfg.validate()?;
    let (graph, c) = embed_graph(p, f)?;
    let indices = init_q_indices(graph.len(), q_size, derive_seed(cfg.seed, "mlop-init"))?;
    let q0 = graph.select(&indices)?;
    let support = support_sizes(&graph, &q0)?;
    let mut config = cfg.clone();
    config.h1.get_or_insert(support.h1);
    config.h2.get_or_insert(support.h2);
    let initial = DenoisedGraph {
        q: p.select(&indices)?,
        f_tilde: f.select(&indices)?,
    };
    let run = run_mlop(&graph, &q0, &config)?;
    let graph_out = if run.iterations == 0 {
        initial.clone()
    } else {
        let (q, f_tilde) = split_graph(&run.q, p.dim(), c)?;
        DenoisedGraph { q, f_tilde }
    };
    Ok(DenoiseRun {
        graph: graph_out,
        initial,
        initial_indices: indices,
        norm_factor: c,
        support,
        config,
        trace: run.trace,
        lambdas: run.lambdas,
    })
}

/// How a denoised graph is turned into a function on new points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluator {
    Rbf(KernelKind),
    WeightedAverage,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Rbf(k) => k.name(),
            Evaluator::WeightedAverage => "wavg",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "wavg" => Ok(Evaluator::WeightedAverage),
            other => KernelKind::parse(other).map(Evaluator::Rbf),
        }
    }

    /// Default width for these centers: the repulsion support for RBF
    /// kernels, the fill distance for the weighted average.
    pub fn default_width(self, centers: &PointCloud) -> Result<f64> {
        match self {
            Evaluator::Rbf(_) => rbf::default_rbf_width(centers),
            Evaluator::WeightedAverage => rbf::default_wavg_width(centers),
        }
    }
}

/// Evaluates a denoised graph at new points.
pub fn approximate_at(
    graph: &DenoisedGraph,
    z: &PointCloud,
    evaluator: Evaluator,
    width: Option<f64>,
) -> Result<FunctionSamples> {
    let h = match width {
        Some(h) => h,
        None => evaluator.default_width(&graph.q)?,
    };
    match evaluator {
        Evaluator::Rbf(kernel) => {
            let model = rbf::fit_rbf(&graph.q, &graph.f_tilde, kernel, h)?;
            model.eval(z)
        }
        Evaluator::WeightedAverage => rbf::weighted_average(&graph.q, &graph.f_tilde, z, h),
    }
}

/// Denoises `(p, f)` and evaluates the result at `z`.
pub fn approximate_function(
    p: &PointCloud,
    f: &FunctionSamples,
    q_size: usize,
    z: &PointCloud,
    cfg: &MlopConfig,
    evaluator: Evaluator,
) -> Result<(DenoiseRun, FunctionSamples)> {
    let run = denoise_graph(p, f, q_size, cfg)?;
    let values = approximate_at(&run.graph, z, evaluator, None)?;
    Ok((run, values))
}
