//! Comparison-geometry calculators: constant-curvature disk volumes,
//! packing and vertex-degree bounds, and certified-or-heuristic lower
//! bounds for the injectivity and convexity radii.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::mesh::{distance_field, shortest_geodesic_loop, BackgroundMesh};
use crate::manifold::surface::{gauss_curvature, ChartedSurface, SurfaceKind};

/// Area of a radius-r disk in the simply connected surface of constant
/// curvature k; capped at the total area 4*pi/k when k > 0.
pub fn comparison_volume(k: f64, r: f64) -> f64 {
    assert!(r >= 0.0);
    if k > 0.0 {
        let total = 4.0 * std::f64::consts::PI / k;
        let s = k.sqrt();
        if r * s >= std::f64::consts::PI {
            total
        } else {
            (std::f64::consts::TAU / k) * (1.0 - (r * s).cos())
        }
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (std::f64::consts::TAU / -k) * ((r * s).cosh() - 1.0)
    } else {
        std::f64::consts::PI * r * r
    }
}

/// Upper bound on how many centers an eps-separated set can have in a
/// surface of curvature >= k and diameter <= diam: disjoint eps/2-balls
/// packed into a diam-ball, both measured in the comparison space.
pub fn packing_bound(k: f64, diam: f64, eps: f64) -> usize {
    assert!(eps > 0.0 && diam > 0.0);
    (comparison_volume(k, diam) / comparison_volume(k, eps / 2.0)).floor() as usize
}

/// Upper bound on the number of eps-separated centers within distance
/// 2*eps of a point (hence on nerve vertex degrees): their disjoint
/// eps/2-balls fit inside a 5*eps/2-ball.
pub fn degree_bound(k: f64, eps: f64) -> usize {
    assert!(eps > 0.0);
    (comparison_volume(k, 2.5 * eps) / comparison_volume(k, eps / 2.0)).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InjRadRoute {
    /// Exact closed form for a catalog surface.
    Catalog,
    /// pi / sqrt(max K) for everywhere-positive curvature.
    Maeda,
    /// min(pi / sqrt(inflated max K), shortest observed loop / 2);
    /// graph-based, not certified.
    Heuristic,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryEstimates {
    /// Inflated curvature range used for packing/degree inputs.
    pub k_low: f64,
    pub k_up: f64,
    /// Raw sampled-and-refined extremes (exact for catalog surfaces).
    pub k_min_raw: f64,
    pub k_max_raw: f64,
    /// Intrinsic diameter upper estimate (graph diameter plus margin).
    pub d_up: f64,
    /// Area lower estimate from integrating sqrt(det g).
    pub v_low: f64,
    pub injrad_low: f64,
    pub convrad_low: f64,
    pub injrad_route: InjRadRoute,
    /// Background-mesh resolution the distances were measured at.
    pub h: f64,
    /// In dimension 2 the Ricci lower bound equals the curvature one.
    pub ricci_low: f64,
}

/// Curvature extremes: coarse pass over mesh vertices, then local pattern
/// search around each extremizer. Catalog closed forms win when available.
fn curvature_extremes(surface: &ChartedSurface, mesh: &BackgroundMesh) -> Result<(f64, f64)> {
    if let Some(exact) = surface.analytic_curvature_extremes() {
        return Ok(exact);
    }
    let mut best_min = (f64::INFINITY, [0.0f64; 2]);
    let mut best_max = (f64::NEG_INFINITY, [0.0f64; 2]);
    for &p in &mesh.coords {
        if surface.metric_at(p[0], p[1]).is_err() {
            continue;
        }
        let k = gauss_curvature(surface, p[0], p[1]);
        if !k.is_finite() {
            continue;
        }
        if k < best_min.0 {
            best_min = (k, p);
        }
        if k > best_max.0 {
            best_max = (k, p);
        }
    }
    if !best_min.0.is_finite() || !best_max.0.is_finite() {
        return Err(Error::Degenerate(
            "no valid curvature samples on the background mesh".to_string(),
        ));
    }
    let refine = |start: (f64, [f64; 2]), sign: f64| -> f64 {
        let mut p = start.1;
        let mut val = sign * start.0;
        let mut step = 2.0 * mesh.h;
        let clamp = |q: [f64; 2]| -> [f64; 2] {
            let mut q = surface.wrap(q);
            for a in 0..2 {
                if !surface.periodic[a] {
                    q[a] = q[a].clamp(surface.domain[a][0], surface.domain[a][1]);
                }
            }
            q
        };
        while step > 1e-7 {
            let mut moved = false;
            for &(du, dv) in &[
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, 1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
                (-1.0, -1.0),
            ] {
                let q = clamp([p[0] + du * step, p[1] + dv * step]);
                if surface.metric_at(q[0], q[1]).is_err() {
                    continue;
                }
                let kq = sign * gauss_curvature(surface, q[0], q[1]);
                if kq > val {
                    val = kq;
                    p = q;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        sign * val
    };
    Ok((refine(best_min, -1.0), refine(best_max, 1.0)))
}

fn area_estimate(surface: &ChartedSurface) -> f64 {
    let [du, dv] = surface.domain;
    let n = 400;
    let su = (du[1] - du[0]) / n as f64;
    let sv = (dv[1] - dv[0]) / n as f64;
    let mut area = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u = du[0] + (i as f64 + 0.5) * su;
            let v = dv[0] + (j as f64 + 0.5) * sv;
            let g = surface.metric_raw(u, v);
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            if det > 0.0 {
                area += det.sqrt() * su * sv;
            }
        }
    }
    area
}

fn diameter_estimate(mesh: &BackgroundMesh) -> f64 {
    // multi-sweep eccentricity: farthest-point hops give a sharp lower
    // estimate of the graph diameter; the stencil already overestimates
    // metric distances, and 2h covers off-grid points.
    let mut best = 0.0f64;
    let mut src = 0u32;
    for _ in 0..4 {
        let dist = distance_field(mesh, &[src]);
        let (arg, &ecc) = dist
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        best = best.max(ecc);
        if arg as u32 == src {
            break;
        }
        src = arg as u32;
    }
    best + 2.0 * mesh.h
}

/// Lower bound on the injectivity radius with the route that produced it.
pub fn injrad_lower_bound(
    surface: &ChartedSurface,
    mesh: &BackgroundMesh,
) -> Result<(f64, InjRadRoute)> {
    match &surface.kind {
        SurfaceKind::Sphere { r } => return Ok((std::f64::consts::PI * r, InjRadRoute::Catalog)),
        SurfaceKind::FlatTorus { l1, l2 } => {
            return Ok((0.5 * l1.min(*l2), InjRadRoute::Catalog))
        }
        _ => {}
    }

    let (k_min_raw, k_max_raw) = curvature_extremes(surface, mesh)?;
    let positive_everywhere = match surface.kind {
        SurfaceKind::Graph { .. } => k_min_raw >= 0.0 && k_max_raw > 0.0,
        _ => k_min_raw > 0.0,
    };
    if positive_everywhere {
        return Ok((std::f64::consts::PI / k_max_raw.sqrt(), InjRadRoute::Maeda));
    }

    let k_up = inflate_up(k_max_raw);
    let conj = if k_up > 0.0 {
        std::f64::consts::PI / k_up.sqrt()
    } else {
        f64::INFINITY
    };
    let loop_half =
        shortest_geodesic_loop(surface, mesh.h, 4).map_or(f64::INFINITY, |l| 0.5 * l);
    let bound = conj.min(loop_half);
    if bound.is_finite() && bound > 0.0 {
        Ok((bound, InjRadRoute::Heuristic))
    } else {
        Err(Error::NoCertifiedBound)
    }
}

fn inflate_up(k: f64) -> f64 {
    k + 0.05 * k.abs()
}

fn inflate_down(k: f64) -> f64 {
    k - 0.05 * k.abs()
}

/// Full geometric profile of a surface over its background mesh.
pub fn estimate_geometry(
    surface: &ChartedSurface,
    mesh: &BackgroundMesh,
) -> Result<GeometryEstimates> {
    let (k_min_raw, k_max_raw) = curvature_extremes(surface, mesh)?;
    let k_low = inflate_down(k_min_raw);
    let k_up = inflate_up(k_max_raw);
    let (injrad_low, injrad_route) = injrad_lower_bound(surface, mesh)?;
    let d_up = diameter_estimate(mesh);
    let v_low = 0.98 * area_estimate(surface);
    Ok(GeometryEstimates {
        k_low,
        k_up,
        k_min_raw,
        k_max_raw,
        d_up,
        v_low,
        injrad_low,
        convrad_low: 0.5 * injrad_low,
        injrad_route,
        h: mesh.h,
        ricci_low: k_low,
    })
}
