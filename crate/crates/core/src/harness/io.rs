//! File formats: point and value CSVs, MLOP traces, denoised graphs,
//! generated data sets and experiment outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentOutcome, ResultRow};
use crate::cloud::{FunctionSamples, PointCloud};
use crate::datasets::{GeneratedSet, GeneratorSpec};
use crate::error::{Error, Result};
use crate::geometry::SupportSizes;
use crate::mlop::{MlopConfig, TraceRow};
use crate::pipeline::{DenoiseRun, DenoisedGraph};

/// Writes rows of numbers under a header `{prefix}0,{prefix}1,…`.
pub fn write_matrix_csv(path: &Path, prefix: &str, width: usize, data: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..width).map(|c| format!("{prefix}{c}")))?;
    for row in data.chunks_exact(width) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV with a header row; returns `(width, row-major data)`.
pub fn read_matrix_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    let mut data = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != width {
            return Err(Error::invalid(format!(
                "{}: row with {} fields under a {width}-column header",
                path.display(),
                record.len()
            )));
        }
        for field in record.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::invalid(format!("{}: cannot parse {field:?} as a number", path.display()))
            })?;
            data.push(v);
        }
    }
    Ok((width, data))
}

pub fn write_points(path: &Path, points: &PointCloud) -> Result<()> {
    write_matrix_csv(path, "x", points.dim(), points.as_slice())
}

pub fn read_points(path: &Path) -> Result<PointCloud> {
    let (w, data) = read_matrix_csv(path)?;
    PointCloud::new(w, data)
}

pub fn write_values(path: &Path, values: &FunctionSamples) -> Result<()> {
    write_matrix_csv(path, "f", values.codim(), values.as_slice())
}

pub fn read_values(path: &Path) -> Result<FunctionSamples> {
    let (w, data) = read_matrix_csv(path)?;
    FunctionSamples::new(w, data)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// MLOP trace with columns `iter,maxGradNorm,meanDisplacement,costEstimate`.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in trace {
        w.serialize(row)?;
    }
    if trace.is_empty() {
        w.write_record(["iter", "maxGradNorm", "meanDisplacement", "costEstimate"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Manifest stored next to a denoised graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DenoiseManifest {
    pub norm_factor: f64,
    /// MLOP configuration with the support sizes that were used.
    pub cfg: MlopConfig,
    pub seed: u64,
    pub q_size: usize,
    pub iterations: usize,
    pub support: SupportSizes,
    pub initial_indices: Vec<usize>,
}

impl DenoiseManifest {
    pub fn from_run(run: &DenoiseRun) -> Self {
        Self {
            norm_factor: run.norm_factor,
            cfg: run.config.clone(),
            seed: run.config.seed,
            q_size: run.graph.q.len(),
            iterations: run.trace.len().saturating_sub(1),
            support: run.support,
            initial_indices: run.initial_indices.clone(),
        }
    }
}

/// Writes `points.csv`, `values.csv`, `manifest.json` and `trace.csv`.
pub fn write_denoise_run(dir: &Path, run: &DenoiseRun) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_points(&dir.join("points.csv"), &run.graph.q)?;
    write_values(&dir.join("values.csv"), &run.graph.f_tilde)?;
    write_json(&dir.join("manifest.json"), &DenoiseManifest::from_run(run))?;
    write_trace(&dir.join("trace.csv"), &run.trace)
}

/// Reads the point and value CSVs of a denoised graph (or any center set).
pub fn read_graph(dir: &Path) -> Result<DenoisedGraph> {
    let q = read_points(&dir.join("points.csv"))?;
    let f_tilde = read_values(&dir.join("values.csv"))?;
    if q.len() != f_tilde.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: f_tilde.len(),
        });
    }
    Ok(DenoisedGraph { q, f_tilde })
}

pub fn read_denoise_manifest(dir: &Path) -> Result<DenoiseManifest> {
    read_json(&dir.join("manifest.json"))
}

/// Writes the noisy samples (`points.csv`, `values.csv`), the parameters,
/// the clean reference and a manifest.
pub fn write_generated(dir: &Path, spec: &GeneratorSpec, set: &GeneratedSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_points(&dir.join("points.csv"), &set.noisy_points)?;
    write_values(&dir.join("values.csv"), &set.noisy_values)?;
    write_matrix_csv(&dir.join("params.csv"), "u", set.params.dim(), set.params.as_slice())?;
    write_points(&dir.join("reference_points.csv"), &set.clean_points)?;
    write_values(&dir.join("reference_values.csv"), &set.clean_values)?;
    write_json(
        &dir.join("manifest.json"),
        &serde_json::json!({
            "spec": spec,
            "generator": set.meta.generator,
            "seed": set.meta.seed,
            "noise": set.meta.noise,
            "function": set.meta.function,
            "embeddingSeed": set.meta.embedding_seed,
            "paramNames": set.meta.param_names,
        }),
    )
}

pub fn read_data_manifest(dir: &Path) -> Result<(GeneratorSpec, serde_json::Value)> {
    let value: serde_json::Value = read_json(&dir.join("manifest.json"))?;
    let spec = serde_json::from_value(value["spec"].clone())?;
    Ok((spec, value))
}

fn number(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// `results.csv`: `scenario,evaluator,maxRelative,rmse,variance,denominator,seed`.
pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "evaluator", "maxRelative", "rmse", "variance", "denominator", "seed"])?;
    for row in rows {
        let r = row.report.as_ref();
        w.write_record([
            row.scenario.clone(),
            row.evaluator.clone(),
            number(r.map(|r| r.max_relative)),
            number(r.map(|r| r.rmse)),
            number(r.map(|r| r.variance)),
            number(r.map(|r| r.denominator)),
            row.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ScenarioReport<'a> {
    config: &'a ExperimentConfig,
    support: SupportSizes,
    norm_factor: f64,
    iterations: usize,
    nn_spread_before: f64,
    nn_spread_after: f64,
    rows: &'a [ResultRow],
}

/// First coordinates used for plots: the canonical coordinates of O(2)
/// (undoing the random rotation), otherwise the leading ambient ones.
fn plot_coords(points: &PointCloud, outcome: &ExperimentOutcome) -> Vec<f64> {
    let k = points.dim().min(3);
    let mut out = Vec::with_capacity(points.len() * k);
    for p in points.iter() {
        match &outcome.data.embedding {
            Some(a) => out.extend((0..k).map(|c| (0..p.len()).map(|r| a[(r, c)] * p[r]).sum::<f64>())),
            None => out.extend_from_slice(&p[..k]),
        }
    }
    out
}

fn write_plot(path: &Path, points: &PointCloud, values: &FunctionSamples, outcome: &ExperimentOutcome) -> Result<()> {
    let coords = plot_coords(points, outcome);
    let k = coords.len() / points.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..k).map(|c| format!("x{c}")).collect();
    header.extend((0..values.codim()).map(|c| format!("f{c}")));
    w.write_record(&header)?;
    for (row, v) in coords.chunks_exact(k).zip(values.iter()) {
        w.write_record(row.iter().chain(v).map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `results.csv`, `report.json`, one trace per scenario and the
/// plot data of every scenario under `dir`.
pub fn write_experiment(dir: &Path, outcomes: &[ExperimentOutcome]) -> Result<()> {
    fs::create_dir_all(dir.join("plotdata"))?;
    let rows: Vec<ResultRow> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    write_results_csv(&dir.join("results.csv"), &rows)?;
    let reports: Vec<ScenarioReport> = outcomes
        .iter()
        .map(|o| ScenarioReport {
            config: &o.config,
            support: o.denoise.support,
            norm_factor: o.denoise.norm_factor,
            iterations: o.denoise.trace.len().saturating_sub(1),
            nn_spread_before: o.nn_spread.0,
            nn_spread_after: o.nn_spread.1,
            rows: &o.rows,
        })
        .collect();
    write_json(&dir.join("report.json"), &serde_json::json!({ "scenarios": reports }))?;
    for o in outcomes {
        let name = &o.config.scenario;
        write_trace(&dir.join(format!("trace_{name}.csv")), &o.denoise.trace)?;
        let plot = dir.join("plotdata");
        write_plot(&plot.join(format!("{name}_noisy.csv")), &o.data.noisy_points, &o.data.noisy_values, o)?;
        write_plot(&plot.join(format!("{name}_reference.csv")), &o.data.clean_points, &o.data.clean_values, o)?;
        write_plot(&plot.join(format!("{name}_q0.csv")), &o.denoise.initial.q, &o.denoise.initial.f_tilde, o)?;
        write_plot(&plot.join(format!("{name}_qk.csv")), &o.denoise.graph.q, &o.denoise.graph.f_tilde, o)?;
    }
    Ok(())
}

/// Reads one configuration or an array of configurations.
pub fn read_experiment_configs(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(vec![serde_json::from_value(value)?])
    }
}
