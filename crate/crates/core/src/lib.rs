//! Tactile peg-in-hole pose estimation at desk scale.
//!
//! The pipeline simulates vision-based tactile contact observations of
//! connector cross-sections, reconstructs contact geometry from gradient
//! fields via a 2D Poisson solve, cleans the resulting point clouds
//! (inversion, height filtering, planar projection, density-based
//! background removal), and estimates the in-plane pose of the hole
//! relative to the peg with multi-initialization 2D ICP. An evaluation
//! harness reruns the whole chain over pose grids and random perturbations
//! and writes CSV/JSON reports; a 3D no-preprocessing baseline quantifies
//! what the cleaning stages buy.

pub mod cloud;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod pipeline;
pub mod recon;
pub mod registration;
pub mod registration3d;
pub mod se2;
pub mod shapes;
pub mod sim;
pub mod spatial;

pub use error::{Error, Result};
