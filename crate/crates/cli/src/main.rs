use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use mlop_core::datasets::{generate, GeneratorSpec, NoiseLevels, TestFunction};
use mlop_core::harness::io::{
    read_experiment_configs, read_graph, read_points, write_denoise_run, write_experiment, write_generated,
    write_values,
};
use mlop_core::harness::{preset, run_experiment, ExperimentConfig};
use mlop_core::mlop::MlopConfig;
use mlop_core::pipeline::{denoise_graph, Evaluator};
use mlop_core::rbf::{default_rbf_width, default_wavg_width, fit_rbf, weighted_average, KernelKind};

#[derive(Parser)]
#[command(name = "mlop", version, about = "Denoise function samples on a manifold and approximate the function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataPreset {
    O2,
    Cyl2,
    Cyl6,
    Swiss,
}

#[derive(Clone, Copy, ValueEnum)]
enum O2Function {
    Smooth,
    Nonsmooth,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Phi1,
    Phi2,
    Phi3,
    Wavg,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic data set and add noise.
    Generate {
        #[arg(long, value_enum)]
        preset: Option<DataPreset>,
        /// Test function of the O(2) preset.
        #[arg(long, value_enum, default_value = "smooth")]
        function: O2Function,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generator description as JSON; replaces --preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run MLOP on the graph of the samples in a data directory.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        qsize: usize,
        #[arg(long)]
        iters: Option<usize>,
        /// Enables sketched norms with this many columns.
        #[arg(long)]
        sketch_dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// MLOP settings as JSON; explicit flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate an approximant built on a set of centers.
    Approx {
        #[arg(long, value_enum)]
        model: Model,
        /// Directory holding points.csv and values.csv of the centers.
        #[arg(long)]
        centers: PathBuf,
        /// CSV of evaluation points.
        #[arg(long)]
        points: PathBuf,
        /// Kernel or averaging width; derived from the centers when absent.
        #[arg(long)]
        width: Option<f64>,
        /// Also write the fitted RBF model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment and write its tables and plot data.
    Experiment {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One experiment configuration or an array of them, as JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_generate(
    preset: Option<DataPreset>,
    function: O2Function,
    noise: f64,
    seed: u64,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let spec: GeneratorSpec = match (config, preset) {
        (Some(path), _) => read_json(path)?,
        (None, Some(DataPreset::O2)) => GeneratorSpec::o2(match function {
            O2Function::Smooth => TestFunction::O2Smooth,
            O2Function::Nonsmooth => TestFunction::O2NonSmooth,
        }),
        (None, Some(DataPreset::Cyl2)) => GeneratorSpec::cylinder2d(),
        (None, Some(DataPreset::Cyl6)) => GeneratorSpec::cylinder6d(),
        (None, Some(DataPreset::Swiss)) => GeneratorSpec::swiss_roll(),
        (None, None) => bail!("either --preset or --config is required"),
    };
    let set = generate(&spec, NoiseLevels::both(noise), seed)?;
    write_generated(out, &spec, &set)?;
    info!("wrote {} points to {}", set.noisy_points.len(), out.display());
    Ok(())
}

fn cmd_denoise(
    input: &Path,
    qsize: usize,
    iters: Option<usize>,
    sketch_dim: Option<usize>,
    seed: Option<u64>,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut cfg: MlopConfig = match config {
        Some(path) => read_json(path)?,
        None => MlopConfig::default(),
    };
    if let Some(k) = iters {
        cfg.max_iters = k;
    }
    if let Some(m) = sketch_dim {
        cfg.use_sketch = true;
        cfg.sketch_dim = Some(m);
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let data = read_graph(input)?;
    let run = denoise_graph(&data.q, &data.f_tilde, qsize, &cfg)?;
    write_denoise_run(out, &run)?;
    info!(
        "denoised {} of {} points in {} iterations (h1 {}, h2 {})",
        qsize,
        data.q.len(),
        run.trace.len().saturating_sub(1),
        run.support.h1,
        run.support.h2
    );
    Ok(())
}

fn cmd_approx(
    model: Model,
    centers: &Path,
    points: &Path,
    width: Option<f64>,
    model_out: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let graph = read_graph(centers)?;
    let z = read_points(points)?;
    let kernel = match model {
        Model::Phi1 => KernelKind::Phi1,
        Model::Phi2 => KernelKind::Phi2,
        Model::Phi3 => KernelKind::Phi3,
        Model::Wavg => {
            if model_out.is_some() {
                bail!("--model-out needs an RBF model");
            }
            let h = width.map_or_else(|| default_wavg_width(&graph.q), Ok)?;
            let values = weighted_average(&graph.q, &graph.f_tilde, &z, h)?;
            write_values(out, &values)?;
            return Ok(());
        }
    };
    let h = width.map_or_else(|| default_rbf_width(&graph.q), Ok)?;
    let rbf = fit_rbf(&graph.q, &graph.f_tilde, kernel, h)?;
    info!(
        "{} fit: condition {:.3e}, residual {:.3e}",
        Evaluator::Rbf(kernel).name(),
        rbf.report.condition,
        rbf.report.relative_residual
    );
    if let Some(path) = model_out {
        std::fs::write(path, rbf.to_json()?)?;
    }
    write_values(out, &rbf.eval(&z)?)?;
    Ok(())
}

fn cmd_experiment(preset_name: Option<&str>, seed: u64, config: Option<&Path>, out: &Path) -> Result<()> {
    let configs: Vec<ExperimentConfig> = match (config, preset_name) {
        (Some(path), _) => read_experiment_configs(path)?,
        (None, Some(name)) => preset(name, seed)?,
        (None, None) => bail!("either --preset or --config is required"),
    };
    let mut outcomes = Vec::with_capacity(configs.len());
    for cfg in &configs {
        info!("running scenario {}", cfg.scenario);
        outcomes.push(run_experiment(cfg)?);
    }
    write_experiment(out, &outcomes)?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate {
            preset,
            function,
            noise,
            seed,
            config,
            out,
        } => cmd_generate(preset, function, noise, seed, config.as_deref(), &out),
        Command::Denoise {
            input,
            qsize,
            iters,
            sketch_dim,
            seed,
            config,
            out,
        } => cmd_denoise(&input, qsize, iters, sketch_dim, seed, config.as_deref(), &out),
        Command::Approx {
            model,
            centers,
            points,
            width,
            model_out,
            out,
        } => cmd_approx(model, &centers, &points, width, model_out.as_deref(), &out),
        Command::Experiment {
            preset,
            seed,
            config,
            out,
        } => cmd_experiment(preset.as_deref(), seed, config.as_deref(), &out),
    }
}
