//! Spectra of Jacobi operators on universal covering trees.
//!
//! The crate works with finite weighted multigraphs ([`JacobiGraph`]) and the
//! operators they induce on their universal covers: truncated cover balls and
//! walk moments, random lifts, the Aomoto equations for the rooted Cauchy
//! transforms, the min-max formula for the spectral edges, band detection, and
//! amalgamated free products of colored graphs.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! `f64`.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aomoto;
pub mod bands;
pub mod cover;
pub mod edges;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod lifts;
mod linalg;
pub mod product;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{
    parse_graph, serialize_graph, DegreeProfile, Edge, GraphBuilder, JacobiGraph, Loop,
};
pub use scalar::Real;

pub type Graph = JacobiGraph<f64>;
pub type Matrix = eigen::DenseMatrix<f64>;
pub type Spectrum = eigen::SpectrumSample<f64>;
pub type Curve = aomoto::DensityCurve<f64>;
pub type Bands = bands::BandReport<f64>;
pub type Amalgam = product::AmalgamSpec<f64>;
