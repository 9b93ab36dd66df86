//! Clique factors in randomly perturbed graphs, made executable.
//!
//! The crate covers graph generation, fractional tilings of small gadget graphs,
//! an exact-cover factor solver, a lexicographic local search for near-perfect
//! tilings, size-balancing move planners, a host partitioner, absorber sampling,
//! regularity checks and a Monte Carlo threshold harness.

pub mod absorber;
pub mod balancing;
pub mod error;
pub mod gadget;
pub mod graph;
pub mod mis;
pub mod params;
pub mod partition;
pub mod ratio;
pub mod regularity;
pub mod rng;
pub mod solver;
pub mod threshold;
pub mod tiling;

pub use error::{Error, Result};
pub use gadget::{PackingCert, PackingMode, QGadget, WeightedGraph};
pub use graph::{gen_complete_multipartite, gen_extremal_host, gen_gnp, graph_union, Graph, GraphJson};
pub use params::{RParams, Variant};
pub use ratio::{parse_rational, Probability, Q};
pub use rng::Seed;
pub use solver::{solve_factor, FactorInstance, FactorResult, Piece, Status};
pub use threshold::{SweepResult, TrialSpec};
pub use tiling::{IndexVector, PFactor, TilePiece};
