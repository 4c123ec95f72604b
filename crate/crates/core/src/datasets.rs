//! Seeded generators for the synthetic manifolds used in the experiments:
//! O(2) embedded in ℝ⁶⁰ by a random rotation, a 2-D and a 6-D cylinder, and
//! a Swiss roll, each with a test function and uniform noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cloud::{FunctionSamples, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, uniform, Gaussian};

/// Scalar test functions, evaluated on the intrinsic parameters of a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// `¼(1 + sin 10θ)` on O(2).
    O2Smooth,
    /// `⅙(1 + arccos(cos 10θ))` on O(2).
    O2NonSmooth,
    /// `1.3(1 + sin(0.5u + 1.5t))` on the 2-D cylinder.
    CylinderWave,
    /// Sum of the sphere angles on the higher-dimensional cylinder.
    AngleSum,
    /// `t` on the Swiss roll.
    SwissRollT,
}

impl TestFunction {
    pub fn eval(self, params: &[f64]) -> f64 {
        match self {
            TestFunction::O2Smooth => 0.25 * (1.0 + (10.0 * params[0]).sin()),
            TestFunction::O2NonSmooth => (1.0 + (10.0 * params[0]).cos().acos()) / 6.0,
            TestFunction::CylinderWave => 1.3 * (1.0 + (0.5 * params[1] + 1.5 * params[0]).sin()),
            TestFunction::AngleSum => params[1..].iter().sum(),
            TestFunction::SwissRollT => params[0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    O2 {
        points: usize,
        ambient: usize,
        function: TestFunction,
    },
    #[serde(rename_all = "camelCase")]
    Cylinder2d {
        points: usize,
        ambient: usize,
        radius: f64,
        t_range: [f64; 2],
        u_range: [f64; 2],
    },
    #[serde(rename_all = "camelCase")]
    CylinderNd {
        points: usize,
        ambient: usize,
        /// Intrinsic dimension: the line plus a sphere of dimension `dim - 1`.
        dim: usize,
        radius: f64,
        t_range: [f64; 2],
        u_range: [f64; 2],
    },
    SwissRoll {
        points: usize,
        ambient: usize,
    },
}

impl GeneratorSpec {
    pub fn o2(function: TestFunction) -> Self {
        GeneratorSpec::O2 {
            points: 500,
            ambient: 60,
            function,
        }
    }

    pub fn cylinder2d() -> Self {
        GeneratorSpec::Cylinder2d {
            points: 800,
            ambient: 60,
            radius: 1.5,
            t_range: [0.0, 2.0],
            u_range: [0.1 * PI, 1.5 * PI],
        }
    }

    pub fn cylinder6d() -> Self {
        GeneratorSpec::CylinderNd {
            points: 1200,
            ambient: 60,
            dim: 6,
            radius: 1.5,
            t_range: [0.0, 2.0],
            u_range: [0.1 * PI, 0.6 * PI],
        }
    }

    pub fn swiss_roll() -> Self {
        GeneratorSpec::SwissRoll {
            points: 800,
            ambient: 60,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::O2 { .. } => "o2",
            GeneratorSpec::Cylinder2d { .. } => "cylinder-2d",
            GeneratorSpec::CylinderNd { .. } => "cylinder-nd",
            GeneratorSpec::SwissRoll { .. } => "swiss-roll",
        }
    }

    pub fn points(&self) -> usize {
        match *self {
            GeneratorSpec::O2 { points, .. }
            | GeneratorSpec::Cylinder2d { points, .. }
            | GeneratorSpec::CylinderNd { points, .. }
            | GeneratorSpec::SwissRoll { points, .. } => points,
        }
    }
}

/// Amplitudes of the uniform noise added to points and to values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseLevels {
    pub domain: f64,
    pub codomain: f64,
}

impl NoiseLevels {
    pub fn both(amplitude: f64) -> Self {
        Self {
            domain: amplitude,
            codomain: amplitude,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratorMeta {
    pub generator: String,
    pub seed: u64,
    pub noise: NoiseLevels,
    pub function: TestFunction,
    /// Seed of the random rotation, for generators that use one.
    pub embedding_seed: Option<u64>,
    pub param_names: Vec<String>,
}

/// Clean and noisy samples of one generator run, index-aligned.
#[derive(Clone, Debug)]
pub struct GeneratedSet {
    pub clean_points: PointCloud,
    pub noisy_points: PointCloud,
    /// Intrinsic parameters, one row per point.
    pub params: PointCloud,
    pub clean_values: FunctionSamples,
    pub noisy_values: FunctionSamples,
    pub meta: GeneratorMeta,
    /// The rotation applied after the canonical embedding, if any.
    pub embedding: Option<DMatrix<f64>>,
}

/// Seeded orthogonal matrix: the Q factor of a Gaussian matrix, with column
/// signs fixed by the diagonal of R.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut g = vec![0.0; n * n];
    Gaussian::new(seed).fill(&mut g);
    let qr = DMatrix::from_row_slice(n, n, &g).qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Adds independent `U(-a, a)` noise to every coordinate.
pub fn add_uniform_noise(points: &PointCloud, amplitude: f64, seed: u64) -> Result<PointCloud> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::invalid("noise amplitude must be non-negative"));
    }
    if amplitude == 0.0 {
        return Ok(points.clone());
    }
    let mut rng = seeded(seed);
    let coords = points
        .as_slice()
        .iter()
        .map(|x| x + uniform(&mut rng, -amplitude, amplitude))
        .collect();
    PointCloud::new(points.dim(), coords)
}

fn add_value_noise(values: &FunctionSamples, amplitude: f64, seed: u64) -> Result<FunctionSamples> {
    let noisy = add_uniform_noise(&values.as_cloud(), amplitude, seed)?;
    FunctionSamples::new(values.codim(), noisy.into_vec())
}

fn evaluate(function: TestFunction, params: &PointCloud) -> Result<FunctionSamples> {
    FunctionSamples::scalar(params.iter().map(|p| function.eval(p)).collect())
}

struct CleanSample {
    points: PointCloud,
    params: PointCloud,
    param_names: Vec<&'static str>,
    function: TestFunction,
    embedding: Option<(DMatrix<f64>, u64)>,
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

fn clean_o2(count: usize, ambient: usize, function: TestFunction, seed: u64) -> Result<CleanSample> {
    require(count >= 2, "O(2) generator needs at least two points")?;
    require(ambient >= 4, "O(2) generator needs ambient dimension >= 4")?;
    require(
        matches!(function, TestFunction::O2Smooth | TestFunction::O2NonSmooth),
        "O(2) generator takes an O(2) test function",
    )?;
    let embedding_seed = derive_seed(seed, "embedding");
    let a = random_orthogonal(ambient, embedding_seed);
    // θ equally spaced on [-π, π); the closing endpoint would duplicate θ = -π.
    let thetas: Vec<f64> = (0..count)
        .map(|j| -PI + 2.0 * PI * j as f64 / count as f64)
        .collect();
    let mut coords = Vec::with_capacity(count * ambient);
    for &t in &thetas {
        let (s, c) = t.sin_cos();
        let canonical = [c, -s, s, c];
        for r in 0..ambient {
            coords.push((0..4).map(|k| a[(r, k)] * canonical[k]).sum());
        }
    }
    Ok(CleanSample {
        points: PointCloud::new(ambient, coords)?,
        params: PointCloud::from_scalars(&thetas)?,
        param_names: vec!["theta"],
        function,
        embedding: Some((a, embedding_seed)),
    })
}

/// Factor pair `(rows, cols)` of `count` whose ratio is closest to `aspect`.
fn grid_shape(count: usize, aspect: f64) -> (usize, usize) {
    (1..=count)
        .filter(|d| count % d == 0)
        .map(|d| (d, count / d))
        .min_by(|a, b| {
            let da = (a.0 as f64 / a.1 as f64).ln() - aspect.ln();
            let db = (b.0 as f64 / b.1 as f64).ln() - aspect.ln();
            da.abs().total_cmp(&db.abs())
        })
        .unwrap_or((1, count))
}

fn spaced(range: [f64; 2], count: usize, k: usize) -> f64 {
    if count == 1 {
        0.5 * (range[0] + range[1])
    } else {
        range[0] + (range[1] - range[0]) * k as f64 / (count - 1) as f64
    }
}

fn clean_cylinder2d(
    count: usize,
    ambient: usize,
    radius: f64,
    t_range: [f64; 2],
    u_range: [f64; 2],
) -> Result<CleanSample> {
    require(count >= 2, "cylinder generator needs at least two points")?;
    require(ambient >= 4, "cylinder generator needs ambient dimension >= 4")?;
    let (nt, nu) = grid_shape(count, (t_range[1] - t_range[0]) / (u_range[1] - u_range[0]));
    let scale = radius / std::f64::consts::SQRT_2;
    let mut coords = Vec::with_capacity(count * ambient);
    let mut params = Vec::with_capacity(count * 2);
    for i in 0..nt {
        let t = spaced(t_range, nt, i);
        for k in 0..nu {
            let u = spaced(u_range, nu, k);
            let (s, c) = u.sin_cos();
            // t·(1,…,1) + R/√2 (cos u (0,1,-1,0,…) + sin u (1,0,0,-1,0,…))
            let mut p = vec![t; ambient];
            p[0] += scale * s;
            p[1] += scale * c;
            p[2] -= scale * c;
            p[3] -= scale * s;
            coords.extend_from_slice(&p);
            params.extend_from_slice(&[t, u]);
        }
    }
    Ok(CleanSample {
        points: PointCloud::new(ambient, coords)?,
        params: PointCloud::new(2, params)?,
        param_names: vec!["t", "u"],
        function: TestFunction::CylinderWave,
        embedding: None,
    })
}

/// Hyperspherical coordinates: `angles.len() + 1` coordinates of norm `radius`.
pub fn sphere_point(radius: f64, angles: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(angles.len() + 1);
    let mut chain = radius;
    for &u in angles {
        x.push(chain * u.cos());
        chain *= u.sin();
    }
    x.push(chain);
    x
}

#[allow(clippy::too_many_arguments)]
fn clean_cylinder_nd(
    count: usize,
    ambient: usize,
    dim: usize,
    radius: f64,
    t_range: [f64; 2],
    u_range: [f64; 2],
    seed: u64,
) -> Result<CleanSample> {
    require(count >= 2, "cylinder generator needs at least two points")?;
    require(dim >= 2, "cylinder dimension must be at least 2")?;
    require(ambient > dim, "ambient dimension must exceed the cylinder dimension")?;
    let mut rng = seeded(derive_seed(seed, "parameters"));
    let mut coords = Vec::with_capacity(count * ambient);
    let mut params = Vec::with_capacity(count * dim);
    let r2 = radius * radius;
    for _ in 0..count {
        let t = uniform(&mut rng, t_range[0], t_range[1]);
        let angles: Vec<f64> = (0..dim - 1)
            .map(|_| uniform(&mut rng, u_range[0], u_range[1]))
            .collect();
        let x = sphere_point(radius, &angles);
        let mut p = vec![0.0; ambient];
        for (c, v) in p.iter_mut().enumerate().take(dim + 1) {
            *v = t;
            if c < dim {
                *v += r2 * x[c];
            }
        }
        coords.extend_from_slice(&p);
        params.push(t);
        params.extend_from_slice(&angles);
    }
    let mut names = vec!["t"];
    names.extend(["u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8"].iter().take(dim - 1));
    Ok(CleanSample {
        points: PointCloud::new(ambient, coords)?,
        params: PointCloud::new(dim, params)?,
        param_names: names,
        function: TestFunction::AngleSum,
        embedding: None,
    })
}

fn clean_swiss_roll(count: usize, ambient: usize, seed: u64) -> Result<CleanSample> {
    require(count >= 2, "Swiss roll needs at least two points")?;
    require(ambient >= 3, "Swiss roll needs ambient dimension >= 3")?;
    let mut rng = seeded(derive_seed(seed, "parameters"));
    let mut coords = Vec::with_capacity(count * ambient);
    let mut params = Vec::with_capacity(count * 2);
    for j in 0..count {
        let t = 8.0 * j as f64 / count as f64 + 2.0;
        let y = uniform(&mut rng, -6.0, 6.0);
        let mut p = vec![0.0; ambient];
        p[0] = t * t.sin() / 10.0;
        p[1] = y / 10.0;
        p[2] = t * t.cos() / 10.0;
        coords.extend_from_slice(&p);
        params.extend_from_slice(&[t, y]);
    }
    Ok(CleanSample {
        points: PointCloud::new(ambient, coords)?,
        params: PointCloud::new(2, params)?,
        param_names: vec!["t", "y"],
        function: TestFunction::SwissRollT,
        embedding: None,
    })
}

/// Generates clean samples, evaluates the test function on them and adds
/// independent uniform noise to the points and to the values.
pub fn generate(spec: &GeneratorSpec, noise: NoiseLevels, seed: u64) -> Result<GeneratedSet> {
    let clean = match *spec {
        GeneratorSpec::O2 {
            points,
            ambient,
            function,
        } => clean_o2(points, ambient, function, seed)?,
        GeneratorSpec::Cylinder2d {
            points,
            ambient,
            radius,
            t_range,
            u_range,
        } => clean_cylinder2d(points, ambient, radius, t_range, u_range)?,
        GeneratorSpec::CylinderNd {
            points,
            ambient,
            dim,
            radius,
            t_range,
            u_range,
        } => clean_cylinder_nd(points, ambient, dim, radius, t_range, u_range, seed)?,
        GeneratorSpec::SwissRoll { points, ambient } => clean_swiss_roll(points, ambient, seed)?,
    };
    let clean_values = evaluate(clean.function, &clean.params)?;
    let noisy_points = add_uniform_noise(&clean.points, noise.domain, derive_seed(seed, "domain-noise"))?;
    let noisy_values = add_value_noise(&clean_values, noise.codomain, derive_seed(seed, "codomain-noise"))?;
    let (embedding, embedding_seed) = match clean.embedding {
        Some((a, s)) => (Some(a), Some(s)),
        None => (None, None),
    };
    Ok(GeneratedSet {
        clean_points: clean.points,
        noisy_points,
        params: clean.params,
        clean_values,
        noisy_values,
        meta: GeneratorMeta {
            generator: spec.name().to_string(),
            seed,
            noise,
            function: clean.function,
            embedding_seed,
            param_names: clean.param_names.iter().map(|s| s.to_string()).collect(),
        },
        embedding,
    })
}

pub fn gen_o2(count: usize, ambient: usize, function: TestFunction, noise: NoiseLevels, seed: u64) -> Result<GeneratedSet> {
    generate(
        &GeneratorSpec::O2 {
            points: count,
            ambient,
            function,
        },
        noise,
        seed,
    )
}

pub fn gen_swiss_roll(count: usize, ambient: usize, noise: NoiseLevels, seed: u64) -> Result<GeneratedSet> {
    generate(
        &GeneratorSpec::SwissRoll {
            points: count,
            ambient,
        },
        noise,
        seed,
    )
}
