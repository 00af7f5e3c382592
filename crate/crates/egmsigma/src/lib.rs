//! Simulation and singular-value analysis of atrial electrogram arrays.
//!
//! The toolkit synthesizes electrode-array electrograms from a simulated 2D
//! tissue (eikonal wavefronts plus parametric action potentials and an
//! inverse-distance lead field), builds per-beat frequency-magnitude
//! matrices whose phase has been discarded, and characterizes them through
//! normalized singular-value profiles, sliding-window sigma-2 maps, and
//! classical activation-map comparisons.

pub mod dataio;
pub mod error;
pub mod latmap;
pub mod leadfield;
pub mod mat;
pub mod pipeline;
pub mod sigmamap;
pub mod simulation;
pub mod spectral;
pub mod stats;
pub mod svdcore;

pub use error::{Error, Result};
