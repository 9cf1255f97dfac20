//! Exact five-point relative pose estimation over the 2-adic numbers.
//!
//! The crate implements the full pipeline: truncated 2-adic arithmetic, pixel
//! grid encodings, the five-point epipolar solver via variety decomposition
//! and Hensel lifting, ultrametric cluster analysis of the candidate pool,
//! and a randomized consensus driver that ranks candidate essential matrices
//! by vote mass and density. All arithmetic is exact; there is no floating
//! point in any computation path.

pub mod cluster;
pub mod field;
pub mod grid;
pub mod groebner;
pub mod hensel;
pub mod io;
pub mod mat;
pub mod mpoly;
pub mod padic;
pub mod ransac;
pub mod relpose;
pub mod scene;

pub use padic::{PadicError, PadicInt};
