//! Fat (thick) triangulations of Riemannian 2-manifolds built from
//! intrinsic geometry: epsilon-nets at convexity-radius scale, geodesic
//! Voronoi nerves, thickness optimization, even-incidence subdivision, and
//! the piecewise Alexander map onto the sphere with measured dilatation.

pub mod alexander;
pub mod complex;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod manifold;
pub mod net;
pub mod simplex;
pub mod thicken;
pub mod triangulate;

pub use error::{Error, Result};
