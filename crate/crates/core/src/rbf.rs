//! Radial basis function interpolation with Gaussian-based kernels, an
//! optional polynomial part, and the locally weighted average baseline.

use nalgebra::{DMatrix, FullPivLU};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{dist2, FunctionSamples, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{fill_distance, repulsion_support};

/// Condition estimates above this trigger a ridge on the diagonal.
pub const RIDGE_THRESHOLD: f64 = 1e12;
/// Ridge size relative to the mean diagonal entry.
pub const RIDGE_SCALE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `e^{-s²}`, `s = r/h`.
    Phi1,
    /// `e^{-s²}(1 + s)`.
    Phi2,
    /// `e^{-s²}(15 + 15s + 6s² + s³)`.
    Phi3,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Phi1, KernelKind::Phi2, KernelKind::Phi3];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Phi1 => "phi1",
            KernelKind::Phi2 => "phi2",
            KernelKind::Phi3 => "phi3",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "phi1" => Ok(KernelKind::Phi1),
            "phi2" => Ok(KernelKind::Phi2),
            "phi3" => Ok(KernelKind::Phi3),
            other => Err(Error::invalid(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Kernel value at distance `r` with width `h`.
#[inline]
pub fn phi(kind: KernelKind, r: f64, h: f64) -> f64 {
    let s = r / h;
    let g = (-s * s).exp();
    match kind {
        KernelKind::Phi1 => g,
        KernelKind::Phi2 => g * (1.0 + s),
        KernelKind::Phi3 => g * (15.0 + s * (15.0 + s * (6.0 + s))),
    }
}

/// Width used for RBF fits when none is given: the repulsion support of
/// the centers.
pub fn default_rbf_width(centers: &PointCloud) -> Result<f64> {
    if centers.len() < 2 {
        return Ok(1.0);
    }
    repulsion_support(centers)
}

/// Width used for the weighted average when none is given: the fill
/// distance of the centers.
pub fn default_wavg_width(centers: &PointCloud) -> Result<f64> {
    if centers.len() < 2 {
        return Ok(1.0);
    }
    fill_distance(centers)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitReport {
    /// Ratio of extreme singular values of the system matrix.
    pub condition: f64,
    /// Ridge added to the kernel block, 0 when none was needed.
    pub ridge: f64,
    /// Max center residual over max |f|.
    pub relative_residual: f64,
}

/// Exponents of the monomials of degree at most `degree` in `dim` variables,
/// in graded lexicographic order.
pub fn monomial_exponents(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn fill(rest: usize, dim: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=rest).rev() {
            prefix.push(e);
            fill(rest - e, dim, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        fill(total, dim, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

fn monomial(x: &[f64], exps: &[usize]) -> f64 {
    x.iter().zip(exps).map(|(v, &e)| v.powi(e as i32)).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyPart {
    pub degree: usize,
    pub exponents: Vec<Vec<usize>>,
    /// One row of codomain coefficients per monomial.
    pub coeffs: Vec<Vec<f64>>,
}

/// A fitted interpolant `Σ_j λ_j φ(‖z − x_j‖) [+ Σ_i α_i p_i(z)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbfModel {
    pub kernel: KernelKind,
    pub h: f64,
    pub centers: PointCloud,
    /// `λ_j`, one row per center.
    pub coeffs: FunctionSamples,
    pub poly: Option<PolyPart>,
    pub report: FitReport,
}

fn check_fit_input(centers: &PointCloud, values: &FunctionSamples, h: f64) -> Result<()> {
    if centers.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: centers.len(),
            got: values.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("RBF width must be positive"));
    }
    Ok(())
}

fn kernel_matrix(centers: &PointCloud, kernel: KernelKind, h: f64) -> DMatrix<f64> {
    let k = centers.len();
    DMatrix::from_fn(k, k, |i, j| {
        phi(kernel, dist2(centers.point(i), centers.point(j)).sqrt(), h)
    })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Solves `m x = rhs`, adding `ridge` to the first `kernel_rows` diagonal
/// entries when the condition estimate exceeds [`RIDGE_THRESHOLD`], then
/// refines the solution against the unmodified system.
fn solve_system(m: DMatrix<f64>, rhs: &DMatrix<f64>, kernel_rows: usize) -> Result<(DMatrix<f64>, f64, f64)> {
    let condition = condition_number(&m);
    let mut ridge = 0.0;
    let mut factored = m.clone();
    if !(condition <= RIDGE_THRESHOLD) {
        let trace: f64 = (0..kernel_rows).map(|i| m[(i, i)]).sum();
        ridge = RIDGE_SCALE * trace / kernel_rows as f64;
        for i in 0..kernel_rows {
            factored[(i, i)] += ridge;
        }
        log::debug!("RBF system condition {condition:.3e}; ridge {ridge:.3e}");
    }
    let lu = FullPivLU::new(factored);
    let mut x = lu.solve(rhs).ok_or(Error::SingularSystem { condition })?;
    let mut residual = rhs - &m * &x;
    for _ in 0..REFINEMENT_STEPS {
        let Some(dx) = lu.solve(&residual) else { break };
        let candidate = &x + dx;
        let next = rhs - &m * &candidate;
        if !(next.amax() < residual.amax()) {
            break;
        }
        x = candidate;
        residual = next;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { condition });
    }
    Ok((x, condition, ridge))
}

fn values_matrix(values: &FunctionSamples, extra_rows: usize) -> DMatrix<f64> {
    let k = values.len();
    let s = values.codim();
    DMatrix::from_fn(k + extra_rows, s, |i, c| if i < k { values.value(i)[c] } else { 0.0 })
}

fn rows_of(m: &DMatrix<f64>, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    range
        .map(|i| (0..m.ncols()).map(|c| m[(i, c)]).collect())
        .collect()
}

impl RbfModel {
    fn finish(mut self, values: &FunctionSamples) -> Result<Self> {
        let fitted = self.eval(&self.centers)?;
        let scale = values.max_abs();
        let worst = fitted
            .as_slice()
            .iter()
            .zip(values.as_slice())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        self.report.relative_residual = if scale > 0.0 { worst / scale } else { worst };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn codim(&self) -> usize {
        self.coeffs.codim()
    }

    /// Value at one point.
    pub fn eval_point(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let mut out = vec![0.0; self.codim()];
        for (x, lam) in self.centers.iter().zip(self.coeffs.iter()) {
            let w = phi(self.kernel, dist2(z, x).sqrt(), self.h);
            for (o, l) in out.iter_mut().zip(lam) {
                *o += l * w;
            }
        }
        if let Some(poly) = &self.poly {
            for (exps, alpha) in poly.exponents.iter().zip(&poly.coeffs) {
                let p = monomial(z, exps);
                for (o, a) in out.iter_mut().zip(alpha) {
                    *o += a * p;
                }
            }
        }
        Ok(out)
    }

    /// Values at every point of `z`.
    pub fn eval(&self, z: &PointCloud) -> Result<FunctionSamples> {
        let rows: Vec<Vec<f64>> = z
            .as_slice()
            .par_chunks_exact(z.dim())
            .map(|p| self.eval_point(p))
            .collect::<Result<_>>()?;
        FunctionSamples::from_rows(&rows)
    }

    pub fn to_document(&self) -> RbfDocument {
        RbfDocument {
            kernel: self.kernel,
            h: self.h,
            centers: self.centers.to_rows(),
            coeffs: self.coeffs.to_rows(),
            poly_degree: self.poly.as_ref().map(|p| p.degree),
            poly_coeffs: self.poly.as_ref().map(|p| p.coeffs.clone()),
        }
    }

    pub fn from_document(doc: &RbfDocument) -> Result<Self> {
        let centers = PointCloud::from_rows(&doc.centers)?;
        let coeffs = FunctionSamples::from_rows(&doc.coeffs)?;
        check_fit_input(&centers, &coeffs, doc.h)?;
        let poly = match (doc.poly_degree, &doc.poly_coeffs) {
            (None, None) => None,
            (Some(degree), Some(rows)) => {
                let exponents = monomial_exponents(centers.dim(), degree);
                if rows.len() != exponents.len() || rows.iter().any(|r| r.len() != coeffs.codim()) {
                    return Err(Error::invalid("polynomial coefficients do not match the degree"));
                }
                Some(PolyPart {
                    degree,
                    exponents,
                    coeffs: rows.clone(),
                })
            }
            _ => return Err(Error::invalid("polyDegree and polyCoeffs must appear together")),
        };
        Ok(Self {
            kernel: doc.kernel,
            h: doc.h,
            centers,
            coeffs,
            poly,
            report: FitReport::default(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

/// Serialized form of an [`RbfModel`]; matrices are arrays of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RbfDocument {
    pub kernel: KernelKind,
    pub h: f64,
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly_coeffs: Option<Vec<Vec<f64>>>,
}

/// Interpolates `values` at `centers`: solves `Φλ = f` with one
/// factorization shared by all codomain components.
pub fn fit_rbf(centers: &PointCloud, values: &FunctionSamples, kernel: KernelKind, h: f64) -> Result<RbfModel> {
    check_fit_input(centers, values, h)?;
    let m = kernel_matrix(centers, kernel, h);
    let (x, condition, ridge) = solve_system(m, &values_matrix(values, 0), centers.len())?;
    RbfModel {
        kernel,
        h,
        centers: centers.clone(),
        coeffs: FunctionSamples::from_rows(&rows_of(&x, 0..centers.len()))?,
        poly: None,
        report: FitReport {
            condition,
            ridge,
            relative_residual: 0.0,
        },
    }
    .finish(values)
}

/// Interpolation with an added polynomial of total degree `degree`, under
/// the side conditions `Σ_j λ_j p_i(x_j) = 0`.
pub fn fit_rbf_poly(
    centers: &PointCloud,
    values: &FunctionSamples,
    kernel: KernelKind,
    h: f64,
    degree: usize,
) -> Result<RbfModel> {
    check_fit_input(centers, values, h)?;
    let k = centers.len();
    let exponents = monomial_exponents(centers.dim(), degree);
    let np = exponents.len();
    let pmat = DMatrix::from_fn(k, np, |j, i| monomial(centers.point(j), &exponents[i]));
    let rank = pmat.clone().svd(false, false).rank(1e-10 * pmat.norm().max(1.0));
    if rank < np {
        return Err(Error::invalid(format!(
            "centers are not unisolvent for degree {degree}: polynomial block has rank {rank} < {np}"
        )));
    }
    let mut m = DMatrix::zeros(k + np, k + np);
    m.view_mut((0, 0), (k, k)).copy_from(&kernel_matrix(centers, kernel, h));
    m.view_mut((0, k), (k, np)).copy_from(&pmat);
    m.view_mut((k, 0), (np, k)).copy_from(&pmat.transpose());
    let (x, condition, ridge) = solve_system(m, &values_matrix(values, np), k)?;
    RbfModel {
        kernel,
        h,
        centers: centers.clone(),
        coeffs: FunctionSamples::from_rows(&rows_of(&x, 0..k))?,
        poly: Some(PolyPart {
            degree,
            exponents,
            coeffs: rows_of(&x, k..k + np),
        }),
        report: FitReport {
            condition,
            ridge,
            relative_residual: 0.0,
        },
    }
    .finish(values)
}

/// Gaussian-weighted mean `Σ w_i f_i / Σ w_i`, `w_i = exp(-‖x_i − z‖²/h²)`,
/// evaluated at one point.
///
/// Weights are taken relative to the nearest point, so they never all
/// underflow, and the mean is accumulated as an offset from the smallest
/// value, so constants are reproduced exactly.
pub fn weighted_average_at(z: &[f64], x: &PointCloud, f: &FunctionSamples, h: f64) -> Result<Vec<f64>> {
    if z.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: z.len(),
        });
    }
    let d2: Vec<f64> = x.iter().map(|p| dist2(p, z)).collect();
    let nearest = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let s = f.codim();
    let mut base = vec![f64::INFINITY; s];
    for v in f.iter() {
        for (b, y) in base.iter_mut().zip(v) {
            *b = b.min(*y);
        }
    }
    let mut num = vec![0.0; s];
    let mut den = 0.0;
    for (dd, v) in d2.iter().zip(f.iter()) {
        let w = (-(dd - nearest) / (h * h)).exp();
        den += w;
        for ((n, y), b) in num.iter_mut().zip(v).zip(&base) {
            *n += w * (y - b);
        }
    }
    Ok(base.iter().zip(&num).map(|(b, n)| b + n / den).collect())
}

/// [`weighted_average_at`] at every point of `z`.
pub fn weighted_average(x: &PointCloud, f: &FunctionSamples, z: &PointCloud, h: f64) -> Result<FunctionSamples> {
    if x.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: f.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("weighted-average width must be positive"));
    }
    let rows: Vec<Vec<f64>> = z
        .as_slice()
        .par_chunks_exact(z.dim())
        .map(|p| weighted_average_at(p, x, f, h))
        .collect::<Result<_>>()?;
    FunctionSamples::from_rows(&rows)
}
