//! Epsilon-neighborhood graphs on sampled manifolds, with numeric
//! certificates for distance approximation, restricted volume doubling,
//! measure concentration, local Poincaré inequalities and heat kernels.

pub mod concentration;
pub mod distance;
pub mod doubling;
pub mod error;
pub mod geograph;
pub mod hamming;
pub mod heat;
pub mod manifold;
pub mod params;
pub mod poincare;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
pub use geograph::{EpsilonGraph, Graph, GraphMeasure, MeasureKind, Openness};
pub use manifold::{ManifoldModel, PointCloud};
pub use params::AssumptionParams;

/// Ceiling that ignores upward rounding noise, so 5.000000000000001 maps to 5.
pub fn tolerant_ceil(x: f64) -> f64 {
    (x - 1e-12 * x.abs().max(1.0)).ceil()
}
