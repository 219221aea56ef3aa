//! Intrinsic 2-manifold machinery: metric charts, Gauss curvature,
//! geodesics, background meshes for graph-based distances, and the
//! comparison-geometry bound calculators.

mod bounds;
mod geodesic;
mod mesh;
mod surface;

pub use bounds::{
    comparison_volume, degree_bound, estimate_geometry, injrad_lower_bound, packing_bound,
    GeometryEstimates, InjRadRoute,
};
pub use geodesic::{geodesic_shoot, log_map};
pub use mesh::{
    distance_field, distance_field_labeled, distance_field_within, dijkstra_with_parents, nearest_vertex, relax_from,
    shortest_geodesic_loop, BackgroundMesh,
};
pub use surface::{gauss_curvature, ChartedSurface, SurfaceKind};
