//! Thin-annulus distance pair counting for well-distributed point sets.
//!
//! The crate is organised around a handful of independent pieces:
//!
//! * [`geometry`]: symmetric convex bodies and their gauge (Minkowski functional).
//! * [`pointsets`]: lattice cubes, lattice balls, jittered one-point-per-cell sets
//!   and the four-dimensional Lens configuration, plus a CSV codec.
//! * [`paircount`]: ordered pair counts in a distance band, via a dense cell grid
//!   and a brute-force oracle; near-integer distance counts; bound formulas.
//! * [`lattice`]: exact lattice point counts in Euclidean balls and the discrepancy.
//! * [`fourier`]: annulus Fourier transforms, decay bounds, the smoothed measure
//!   supported near a rescaled point set and its discrete Riesz energy.
//! * [`analysis`]: scaling fits and the experiment scans built on all of the above.
//!
//! Inner loops run on rayon when the `parallel` feature is enabled (the default).
//! Every parallel reduction uses fixed chunking, so results are identical for any
//! thread count, and identical to the sequential build.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod fourier;
pub mod geometry;
pub mod lattice;
pub mod paircount;
pub mod pointsets;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::NormBody;
pub use pointsets::PointSet;
