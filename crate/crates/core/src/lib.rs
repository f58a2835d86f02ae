//! Growing graphs, exact Ising Gibbs measures under boundary conditions, and
//! spectral gaps of heat-bath Glauber dynamics.

pub mod error;
pub mod generators;
pub mod geometry;
pub mod gibbs;
pub mod glauber;
pub mod graph;
pub mod rng;
pub mod spectral;
pub mod spins;

pub use error::{Error, Result};
pub use graph::{
    ball, build_from_edges, edge_boundary, vertex_boundary, BallSystem, Family, LayeredGraph,
};
