//! Epsilon-nets on a background mesh: farthest-point sampling produces a
//! center set that is eps-covering and eps-separated in the graph metric,
//! plus the intersection pattern (center pairs closer than 2*eps) that the
//! Voronoi nerve is read from.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{distance_field, distance_field_within, relax_from, BackgroundMesh};

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonNet {
    pub eps: f64,
    /// Background-mesh vertex ids of the centers.
    pub centers: Vec<u32>,
    /// Max distance from any mesh vertex to its nearest center (< eps).
    pub covering_radius: f64,
    /// Min pairwise center distance (>= eps by construction).
    pub min_separation: f64,
    /// Center pairs (i, j), i < j, with d(c_i, c_j) < 2 * eps.
    pub pattern: Vec<(usize, usize)>,
    /// Pairwise center distances, pattern pairs only.
    pub pattern_distances: Vec<f64>,
}

impl EpsilonNet {
    /// JSON form with centers resolved to chart coordinates.
    pub fn to_json(&self, mesh: &BackgroundMesh) -> serde_json::Value {
        serde_json::json!({
            "eps": self.eps,
            "centers": self
                .centers
                .iter()
                .map(|&c| mesh.coords[c as usize])
                .collect::<Vec<_>>(),
            "covering_radius": self.covering_radius,
            "min_separation": self.min_separation,
            "pattern": self.pattern,
        })
    }
}

/// Greedy farthest-point net at scale eps. The seed picks the initial
/// center; every later choice is the deterministic farthest vertex. Errors
/// when eps is not safely above the mesh resolution (eps <= 3h), where
/// graph-distance error could fake or break the net properties.
pub fn farthest_point_net(mesh: &BackgroundMesh, eps: f64, seed: u64) -> Result<EpsilonNet> {
    if !(eps > 3.0 * mesh.h) {
        return Err(Error::Resolution {
            eps,
            h: mesh.h,
        });
    }
    let n = mesh.vertex_count();
    if n == 0 {
        return Err(Error::EmptyComplex);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n) as u32;

    let mut centers = vec![first];
    let mut dist = vec![f64::INFINITY; n];
    relax_from(mesh, first, &mut dist);
    loop {
        let (arg, &far) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        if far < eps {
            break;
        }
        centers.push(arg as u32);
        relax_from(mesh, arg as u32, &mut dist);
    }
    let covering_radius = dist.iter().cloned().fold(0.0f64, f64::max);

    // pairwise distances from per-center fields (independent Dijkstras).
    // min separation is <= 2 * covering radius <= 2 * eps on a connected
    // mesh, so truncating the sweeps at 2 * eps (+ slack) is exact for both
    // the separation and the intersection pattern.
    let cutoff = 2.0 * eps + 3.0 * mesh.h;
    let fields: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| distance_field_within(mesh, c, cutoff))
        .collect();
    let mut min_separation = f64::INFINITY;
    let mut pattern = Vec::new();
    let mut pattern_distances = Vec::new();
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let d = fields[i][centers[j] as usize];
            min_separation = min_separation.min(d);
            if d < 2.0 * eps {
                pattern.push((i, j));
                pattern_distances.push(d);
            }
        }
    }
    Ok(EpsilonNet {
        eps,
        centers,
        covering_radius,
        min_separation,
        pattern,
        pattern_distances,
    })
}

/// Recompute the intersection pattern from scratch: pairs of centers whose
/// eps-balls overlap, i.e. d(c_i, c_j) < 2 * eps.
pub fn intersection_pattern(mesh: &BackgroundMesh, centers: &[u32], eps: f64) -> Vec<(usize, usize)> {
    let mut pattern = Vec::new();
    for (i, &c) in centers.iter().enumerate() {
        let field = distance_field(mesh, &[c]);
        for (j, &d) in centers.iter().enumerate().skip(i + 1) {
            if field[d as usize] < 2.0 * eps {
                pattern.push((i, j));
            }
        }
    }
    pattern
}

/// Max vertex degree of an intersection pattern over n centers.
pub fn pattern_max_degree(pattern: &[(usize, usize)], n: usize) -> usize {
    let mut deg = vec![0usize; n];
    for &(i, j) in pattern {
        deg[i] += 1;
        deg[j] += 1;
    }
    deg.into_iter().max().unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct NetCheck {
    pub covering_radius: f64,
    pub min_separation: f64,
    pub is_covering: bool,
    pub is_separated: bool,
    pub is_net: bool,
}

/// Independent check of the two net properties for an arbitrary center set.
pub fn check_net_properties(mesh: &BackgroundMesh, centers: &[u32], eps: f64) -> NetCheck {
    let dist = distance_field(mesh, centers);
    let covering_radius = dist.iter().cloned().fold(0.0f64, f64::max);
    let mut min_separation = f64::INFINITY;
    for (i, &c) in centers.iter().enumerate() {
        let field = distance_field(mesh, &[c]);
        for &d in centers.iter().skip(i + 1) {
            min_separation = min_separation.min(field[d as usize]);
        }
    }
    let is_covering = covering_radius < eps;
    let is_separated = min_separation >= eps;
    NetCheck {
        covering_radius,
        min_separation,
        is_covering,
        is_separated,
        is_net: is_covering && is_separated,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetReport {
    pub eps: f64,
    pub n0: usize,
    pub covering_radius: f64,
    pub min_separation: f64,
    pub packing_bound: usize,
    pub max_degree: usize,
    pub degree_bound: usize,
    pub is_covering: bool,
    pub is_separated: bool,
    pub within_packing_bound: bool,
    pub within_degree_bound: bool,
    /// All four checks above.
    pub is_minimal_net: bool,
}

/// Full net verdict: the two metric properties plus the comparison-geometry
/// cardinality and degree bounds from the surface's geometry estimates.
pub fn verify_net(
    mesh: &BackgroundMesh,
    net: &EpsilonNet,
    est: &crate::manifold::GeometryEstimates,
) -> NetReport {
    // one multi-source field for covering, one field per center for
    // separation and the pattern (shared between the two)
    let dist = distance_field(mesh, &net.centers);
    let covering_radius = dist.iter().cloned().fold(0.0f64, f64::max);
    let mut min_separation = f64::INFINITY;
    let mut pattern = Vec::new();
    // per-center sweeps truncated at 2 * eps (+ slack): exact for the
    // pattern and for the min separation (<= 2 * covering radius <= 2 * eps)
    let cutoff = 2.0 * net.eps + 3.0 * mesh.h;
    let fields: Vec<Vec<f64>> = net
        .centers
        .par_iter()
        .map(|&c| distance_field_within(mesh, c, cutoff))
        .collect();
    for (i, field) in fields.iter().enumerate() {
        for (j, &d) in net.centers.iter().enumerate().skip(i + 1) {
            let dd = field[d as usize];
            min_separation = min_separation.min(dd);
            if dd < 2.0 * net.eps {
                pattern.push((i, j));
            }
        }
    }
    let check = NetCheck {
        covering_radius,
        min_separation,
        is_covering: covering_radius < net.eps,
        is_separated: min_separation >= net.eps,
        is_net: covering_radius < net.eps && min_separation >= net.eps,
    };
    let packing = crate::manifold::packing_bound(est.k_low, est.d_up, net.eps);
    let degree = crate::manifold::degree_bound(est.k_low, net.eps);
    let max_degree = pattern_max_degree(&pattern, net.centers.len());
    let n0 = net.centers.len();
    let within_packing_bound = n0 <= packing;
    let within_degree_bound = max_degree <= degree;
    NetReport {
        eps: net.eps,
        n0,
        covering_radius: check.covering_radius,
        min_separation: check.min_separation,
        packing_bound: packing,
        max_degree,
        degree_bound: degree,
        is_covering: check.is_covering,
        is_separated: check.is_separated,
        within_packing_bound,
        within_degree_bound,
        is_minimal_net: check.is_net && within_packing_bound && within_degree_bound,
    }
}
