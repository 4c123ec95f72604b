//! Error statistics and the experiment runner that regenerates the result
//! tables: generate data, denoise the graph, evaluate every approximation
//! scenario on fresh points from the clean reference.

pub mod io;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::cloud::{FunctionSamples, PointCloud};
use crate::datasets::{generate, GeneratedSet, GeneratorSpec, NoiseLevels, TestFunction};
use crate::error::{Error, Result};
use crate::geometry::{nearest_neighbor_distances, nearest_reference, SupportSizes};
use crate::mlop::{MlopConfig, TraceRow};
use crate::pipeline::{approximate_at, denoise_graph, embed_with, DenoiseRun, DenoisedGraph, Evaluator};
use crate::rbf::KernelKind;
use crate::rng::{derive_seed, seeded};

/// Error statistics of predicted values against the nearest clean reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorReport {
    pub max_relative: f64,
    pub rmse: f64,
    /// Sample variance of the per-point errors.
    pub variance: f64,
    /// L1 error at each evaluation point.
    pub per_point: Vec<f64>,
    pub denominator: f64,
}

impl ErrorReport {
    /// Statistics of given per-point errors.
    pub fn from_errors(per_point: Vec<f64>, denominator: f64) -> Result<Self> {
        if per_point.is_empty() {
            return Err(Error::invalid("no evaluation points"));
        }
        let n = per_point.len() as f64;
        let max = per_point.iter().copied().fold(0.0, f64::max);
        let rmse = (per_point.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let mean = per_point.iter().sum::<f64>() / n;
        let variance = if per_point.len() > 1 {
            per_point.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let max_relative = if denominator > 0.0 { max / denominator } else { max };
        Ok(Self {
            max_relative,
            rmse,
            variance,
            per_point,
            denominator,
        })
    }
}

/// Relative-error denominator: the largest L1 norm of a reference value.
pub fn reference_denominator(values: &FunctionSamples) -> f64 {
    values
        .iter()
        .map(|v| v.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Compares `predicted[k]` with the reference value at the reference point
/// nearest to `eval_points[k]`.
pub fn error_report(
    predicted: &FunctionSamples,
    eval_points: &PointCloud,
    ref_points: &PointCloud,
    ref_values: &FunctionSamples,
) -> Result<ErrorReport> {
    if predicted.len() != eval_points.len() {
        return Err(Error::DimensionMismatch {
            expected: eval_points.len(),
            got: predicted.len(),
        });
    }
    if ref_points.len() != ref_values.len() {
        return Err(Error::DimensionMismatch {
            expected: ref_points.len(),
            got: ref_values.len(),
        });
    }
    if predicted.codim() != ref_values.codim() {
        return Err(Error::DimensionMismatch {
            expected: ref_values.codim(),
            got: predicted.codim(),
        });
    }
    let mut errors = Vec::with_capacity(predicted.len());
    for (z, v) in eval_points.iter().zip(predicted.iter()) {
        let r = nearest_reference(z, ref_points)?;
        errors.push(v.iter().zip(ref_values.value(r)).map(|(a, b)| (a - b).abs()).sum());
    }
    ErrorReport::from_errors(errors, reference_denominator(ref_values))
}

/// Standard deviation (population) of within-set nearest-neighbor distances.
pub fn nn_spread(points: &PointCloud) -> Result<f64> {
    let d = nearest_neighbor_distances(points)?;
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    Ok((d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

/// Groups of approximation scenarios evaluated at the new points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorGroup {
    /// RBF with centers at `Q⁽⁰⁾` and the noisy values there.
    RbfNoisyCenters,
    /// RBF with centers at the denoised `Q` and values `f̃`.
    RbfCleanCenters,
    /// Weighted average on both center sets.
    WeightedAverage,
}

fn default_kernels() -> Vec<KernelKind> {
    KernelKind::ALL.to_vec()
}

fn default_evaluators() -> Vec<EvaluatorGroup> {
    vec![
        EvaluatorGroup::RbfNoisyCenters,
        EvaluatorGroup::RbfCleanCenters,
        EvaluatorGroup::WeightedAverage,
    ]
}

fn default_new_points() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub generator: GeneratorSpec,
    pub noise: NoiseLevels,
    /// Size `I` of the denoised set.
    pub q_size: usize,
    pub max_iters: usize,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelKind>,
    #[serde(default = "default_evaluators")]
    pub evaluators: Vec<EvaluatorGroup>,
    #[serde(default = "default_new_points")]
    pub num_new_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Further MLOP settings; its `maxIters` and `seed` are replaced by the
    /// fields above.
    #[serde(default)]
    pub mlop: MlopConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_size < 2 || self.q_size > self.generator.points() {
            return Err(Error::invalid(format!(
                "qSize must be between 2 and the number of generated points ({})",
                self.generator.points()
            )));
        }
        if self.num_new_points == 0 {
            return Err(Error::invalid("numNewPoints must be positive"));
        }
        if self.kernels.is_empty() && self.evaluators.iter().any(|e| *e != EvaluatorGroup::WeightedAverage) {
            return Err(Error::invalid("RBF evaluators need at least one kernel"));
        }
        self.mlop_config().validate()
    }

    pub fn mlop_config(&self) -> MlopConfig {
        MlopConfig {
            max_iters: self.max_iters,
            seed: derive_seed(self.seed, "mlop"),
            ..self.mlop.clone()
        }
    }

    pub fn data_seed(&self) -> u64 {
        derive_seed(self.seed, "data")
    }
}

/// Named experiment presets; `swiss-noise` expands to one configuration per
/// noise amplitude.
pub fn preset(name: &str, seed: u64) -> Result<Vec<ExperimentConfig>> {
    let base = |scenario: &str, generator: GeneratorSpec, noise: f64, q_size: usize, max_iters: usize| ExperimentConfig {
        scenario: scenario.to_string(),
        generator,
        noise: NoiseLevels::both(noise),
        q_size,
        max_iters,
        kernels: default_kernels(),
        evaluators: default_evaluators(),
        num_new_points: default_new_points(),
        seed,
        mlop: MlopConfig::default(),
    };
    Ok(match name {
        "o2-smooth" => vec![base("o2-smooth", GeneratorSpec::o2(TestFunction::O2Smooth), 0.1, 55, 150)],
        "o2-nonsmooth" => vec![base(
            "o2-nonsmooth",
            GeneratorSpec::o2(TestFunction::O2NonSmooth),
            0.1,
            55,
            150,
        )],
        "cyl2" => vec![base("cyl2", GeneratorSpec::cylinder2d(), 0.1, 150, 300)],
        "cyl6" => vec![base("cyl6", GeneratorSpec::cylinder6d(), 0.2, 460, 300)],
        "swiss-noise" => SWISS_AMPLITUDES
            .iter()
            .map(|&a| base(&format!("swiss-{a}"), GeneratorSpec::swiss_roll(), a, 200, 300))
            .collect(),
        other => {
            return Err(Error::invalid(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    })
}

pub const PRESETS: [&str; 5] = ["o2-smooth", "o2-nonsmooth", "cyl2", "cyl6", "swiss-noise"];
pub const SWISS_AMPLITUDES: [f64; 4] = [0.1, 0.2, 0.5, 0.7];

/// Evaluator label for the value rows at `Q⁽⁰⁾`.
pub const VALUES_NOISY: &str = "values-q0";
/// Evaluator label for the value rows at the denoised `Q`.
pub const VALUES_CLEAN: &str = "values-qk";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultRow {
    pub scenario: String,
    pub evaluator: String,
    pub seed: u64,
    /// `None` when the row failed; `error` then says why.
    pub report: Option<ErrorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResultRow {
    fn new(cfg: &ExperimentConfig, evaluator: String, result: Result<ErrorReport>) -> Self {
        match result {
            Ok(report) => Self {
                scenario: cfg.scenario.clone(),
                evaluator,
                seed: cfg.seed,
                report: Some(report),
                error: None,
            },
            Err(e) => {
                log::warn!("{} / {evaluator}: {e}", cfg.scenario);
                Self {
                    scenario: cfg.scenario.clone(),
                    evaluator,
                    seed: cfg.seed,
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        }
    }
}

/// Everything one experiment produced.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub data: GeneratedSet,
    pub denoise: DenoiseRun,
    /// Indices of the new evaluation points in the clean reference.
    pub new_points: Vec<usize>,
    /// Nearest-neighbor spread of the embedded `Q` before and after.
    pub nn_spread: (f64, f64),
}

impl ExperimentOutcome {
    pub fn row(&self, evaluator: &str) -> Option<&ErrorReport> {
        self.rows
            .iter()
            .find(|r| r.evaluator == evaluator)
            .and_then(|r| r.report.as_ref())
    }

    pub fn support(&self) -> &SupportSizes {
        &self.denoise.support
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.denoise.trace
    }
}

fn scenario_rows(
    cfg: &ExperimentConfig,
    data: &GeneratedSet,
    run: &DenoiseRun,
    z: &PointCloud,
    rows: &mut Vec<ResultRow>,
) {
    let reference = |pred: Result<FunctionSamples>| -> Result<ErrorReport> {
        error_report(&pred?, z, &data.clean_points, &data.clean_values)
    };
    let centers: [(&DenoisedGraph, &str); 2] = [(&run.initial, "noisy"), (&run.graph, "clean")];
    for group in &cfg.evaluators {
        match group {
            EvaluatorGroup::RbfNoisyCenters | EvaluatorGroup::RbfCleanCenters => {
                let (graph, tag) = if *group == EvaluatorGroup::RbfNoisyCenters {
                    centers[0]
                } else {
                    centers[1]
                };
                for &k in &cfg.kernels {
                    let result = reference(approximate_at(graph, z, Evaluator::Rbf(k), None));
                    rows.push(ResultRow::new(cfg, format!("rbf-{}-{tag}", k.name()), result));
                }
            }
            EvaluatorGroup::WeightedAverage => {
                for (graph, tag) in centers {
                    let result = reference(approximate_at(graph, z, Evaluator::WeightedAverage, None));
                    rows.push(ResultRow::new(cfg, format!("wavg-{tag}"), result));
                }
            }
        }
    }
}

/// Runs one experiment: generate, denoise, and report the value errors at
/// `Q⁽⁰⁾` and at the denoised set followed by every configured evaluator at
/// new points drawn from the clean reference.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = generate(&cfg.generator, cfg.noise, cfg.data_seed())?;
    let run = denoise_graph(&data.noisy_points, &data.noisy_values, cfg.q_size, &cfg.mlop_config())?;

    let mut rows = Vec::new();
    let initial = error_report(&run.initial.f_tilde, &run.initial.q, &data.clean_points, &data.clean_values);
    rows.push(ResultRow::new(cfg, VALUES_NOISY.to_string(), initial));
    let cleaned = error_report(&run.graph.f_tilde, &run.graph.q, &data.clean_points, &data.clean_values);
    rows.push(ResultRow::new(cfg, VALUES_CLEAN.to_string(), cleaned));

    let count = cfg.num_new_points.min(data.clean_points.len());
    let mut rng = seeded(derive_seed(cfg.seed, "new-points"));
    let new_points = sample(&mut rng, data.clean_points.len(), count).into_vec();
    let z = data.clean_points.select(&new_points)?;
    scenario_rows(cfg, &data, &run, &z, &mut rows);

    let before = embed_with(&run.initial.q, &run.initial.f_tilde, run.norm_factor)?;
    let after = embed_with(&run.graph.q, &run.graph.f_tilde, run.norm_factor)?;
    let nn = (nn_spread(&before)?, nn_spread(&after)?);

    Ok(ExperimentOutcome {
        config: cfg.clone(),
        rows,
        data,
        denoise: run,
        new_points,
        nn_spread: nn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_report() {
        let r = ErrorReport::from_errors(vec![0.2], 1.0).unwrap();
        assert_eq!((r.max_relative, r.rmse, r.variance), (0.2, 0.2, 0.0));
        assert!(ErrorReport::from_errors(vec![], 1.0).is_err());
    }

    #[test]
    fn exact_prediction_has_zero_error() {
        let p = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let f = FunctionSamples::from_rows(&[vec![1.0, -1.0], vec![2.0, 0.5], vec![-3.0, 0.0]]).unwrap();
        let r = error_report(&f, &p, &p, &f).unwrap();
        assert_eq!((r.max_relative, r.rmse, r.variance), (0.0, 0.0, 0.0));
        assert_eq!(r.denominator, 3.0);
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            for cfg in preset(name, 7).unwrap() {
                cfg.validate().unwrap();
                assert_eq!(cfg.num_new_points, 100);
            }
        }
        assert_eq!(preset("swiss-noise", 0).unwrap().len(), 4);
        assert!(preset("nope", 0).is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let cfg = &preset("cyl2", 3).unwrap()[0];
        let text = serde_json::to_string(cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, cfg);
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(value).is_err());
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["mlop"]["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(value).is_err());
    }
}
