//! Data-adapted random linear sketch for cheap norm estimates.
//!
//! `S` is the orthonormal factor of `PᵗG` with `G` a seeded `J×m` Gaussian
//! matrix, so its columns span a random `m`-dimensional slice of the row
//! space of the cloud. `|Sᵗx|` never exceeds `|x|` and equals it on that slice.

use nalgebra::DMatrix;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::Gaussian;

/// Relative pivot size below which a column of `PᵗG` counts as dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SketchOperator {
    /// `n × m`, orthonormal columns.
    basis: DMatrix<f64>,
    seed: u64,
}

/// Default sketch width: `min(n, 20)`.
pub fn default_sketch_dim(n: usize) -> usize {
    n.min(20)
}

pub fn build_sketch(points: &PointCloud, m: usize, seed: u64) -> Result<SketchOperator> {
    let (j, n) = (points.len(), points.dim());
    if m == 0 || m > n.min(j) {
        return Err(Error::invalid(format!(
            "sketch dimension {m} must lie in 1..={}",
            n.min(j)
        )));
    }
    let mut g = vec![0.0; j * m];
    Gaussian::new(seed).fill(&mut g);
    let g = DMatrix::from_row_slice(j, m, &g);
    let p = DMatrix::from_row_slice(j, n, points.as_slice());
    let b = p.transpose() * g;

    let qr = b.qr();
    let r = qr.r();
    let scale = (0..m).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let rank = (0..m)
        .filter(|&i| r[(i, i)].abs() > RANK_TOL * scale)
        .count();
    if scale == 0.0 || rank < m {
        return Err(Error::SketchRankDeficient { rank, requested: m });
    }
    Ok(SketchOperator {
        basis: qr.q(),
        seed,
    })
}

impl SketchOperator {
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sketch_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `Sᵗx`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.sketch_dim()];
        self.project_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.basis.column(c).iter().zip(x).map(|(s, v)| s * v).sum();
        }
    }

    /// Projects every point of a cloud; the result lives in ℝᵐ.
    pub fn project_cloud(&self, points: &PointCloud) -> Result<PointCloud> {
        if points.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: points.dim(),
            });
        }
        let m = self.sketch_dim();
        let mut coords = vec![0.0; points.len() * m];
        for (p, out) in points.iter().zip(coords.chunks_exact_mut(m)) {
            self.project_into(p, out);
        }
        Ok(PointCloud::from_parts_unchecked(m, coords))
    }
}

/// `|Sᵗx|`, an underestimate of `|x|`.
pub fn sketched_norm(op: &SketchOperator, x: &[f64]) -> Result<f64> {
    Ok(op.project(x)?.iter().map(|v| v * v).sum::<f64>().sqrt())
}
