//! Dense row-major point and value containers shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of `len()` points in ℝ^`dim()`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("point cloud must contain at least one point"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("point cloud must contain at least one point"))?;
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    /// Points sit on the real line at the given coordinates.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Copies the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!(
                    "index {i} out of range for {} points",
                    self.len()
                )));
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, coords)
    }

    /// Keeps coordinates `range` of every point.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.dim || range.is_empty() {
            return Err(Error::invalid(format!(
                "column range {range:?} invalid for dimension {}",
                self.dim
            )));
        }
        let coords = self
            .iter()
            .flat_map(|p| p[range.clone()].iter().copied())
            .collect();
        Self::new(range.len(), coords)
    }

    /// Largest distance between two corners of the axis-aligned bounding box.
    pub fn bounding_box_diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for (c, &x) in p.iter().enumerate() {
                lo[c] = lo[c].min(x);
                hi[c] = hi[c].max(x);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub(crate) fn from_parts_unchecked(dim: usize, coords: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && coords.len() % dim == 0);
        Self { dim, coords }
    }

    pub(crate) fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Function values in ℝ^`codim()` aligned index-wise with a [`PointCloud`].
///
/// `norm_factor` is the scale applied when the values were embedded next to
/// their points; it is `1.0` for raw or de-normalized values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSamples {
    codim: usize,
    values: Vec<f64>,
    norm_factor: f64,
}

impl FunctionSamples {
    pub fn new(codim: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_norm_factor(codim, values, 1.0)
    }

    pub fn with_norm_factor(codim: usize, values: Vec<f64>, norm_factor: f64) -> Result<Self> {
        if codim == 0 {
            return Err(Error::invalid("codomain dimension must be at least 1"));
        }
        if values.is_empty() || values.len() % codim != 0 {
            return Err(Error::invalid(format!(
                "{} values cannot be split into rows of {codim}",
                values.len()
            )));
        }
        if !(norm_factor.is_finite() && norm_factor > 0.0) {
            return Err(Error::invalid("normalization factor must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("function samples"));
        }
        Ok(Self {
            codim,
            values,
            norm_factor,
        })
    }

    /// Scalar-valued samples.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cloud = PointCloud::from_rows(rows)?;
        Self::new(cloud.dim(), cloud.into_vec())
    }

    #[inline]
    pub fn codim(&self) -> usize {
        self.codim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len() / self.codim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.codim..(i + 1) * self.codim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.codim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.codim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!(
                    "index {i} out of range for {} samples",
                    self.len()
                )));
            }
            values.extend_from_slice(self.value(i));
        }
        Self::with_norm_factor(self.codim, values, self.norm_factor)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_norm_factor(
            self.codim,
            self.values.iter().map(|v| v * factor).collect(),
            self.norm_factor,
        )
    }

    /// The same values viewed as points in ℝ^codim.
    pub fn as_cloud(&self) -> PointCloud {
        PointCloud::from_parts_unchecked(self.codim, self.values.clone())
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}
