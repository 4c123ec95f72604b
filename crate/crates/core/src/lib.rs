//! Denoising of noisy samples of a function on a low-dimensional manifold in
//! high ambient dimension, followed by radial-basis-function approximation
//! on the cleaned, quasi-uniform sample.
//!
//! The pipeline embeds each sample `(p, f(p))` as one point of the graph of
//! `f`, runs the manifold locally optimal projection ([`mlop`]) on that
//! cloud, splits the result back into points and values ([`pipeline`]) and
//! fits an interpolant on it ([`rbf`]). [`datasets`] and [`harness`]
//! reproduce the synthetic experiments.

pub mod cloud;
pub mod datasets;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mlop;
pub mod pipeline;
pub mod rbf;
pub mod rng;
pub mod sketch;

pub use cloud::{FunctionSamples, PointCloud};
pub use error::{Error, Result};
