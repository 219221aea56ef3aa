//! Catalog surfaces as metric charts: first fundamental form, optional
//! embedding into 3-space, and Gauss curvature via the Brioschi formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Metric = [[f64; 2]; 2];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Torus { big_r: f64, small_r: f64 },
    FlatTorus { l1: f64, l2: f64 },
    /// Graph surface z = f(x, y) with polynomial f given as (i, j, coeff)
    /// terms, over a rectangular x-y domain.
    Graph {
        terms: Vec<(u32, u32, f64)>,
        domain: [[f64; 2]; 2],
    },
}

/// A 2-manifold as a rectangular parameter domain with a metric field.
/// `caps` marks a u-axis end where the chart collapses to a point (sphere
/// poles); background meshes close those ends with a cap vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartedSurface {
    pub kind: SurfaceKind,
    pub domain: [[f64; 2]; 2],
    pub periodic: [bool; 2],
    pub caps: [bool; 2],
    pub compact: bool,
}

impl ChartedSurface {
    pub fn sphere(r: f64) -> Self {
        Self {
            kind: SurfaceKind::Sphere { r },
            domain: [[0.0, std::f64::consts::PI], [0.0, std::f64::consts::TAU]],
            periodic: [false, true],
            caps: [true, true],
            compact: true,
        }
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        Self {
            kind: SurfaceKind::Ellipsoid { a, b, c },
            domain: [[0.0, std::f64::consts::PI], [0.0, std::f64::consts::TAU]],
            periodic: [false, true],
            caps: [true, true],
            compact: true,
        }
    }

    pub fn torus(big_r: f64, small_r: f64) -> Self {
        assert!(big_r > small_r && small_r > 0.0);
        Self {
            kind: SurfaceKind::Torus { big_r, small_r },
            domain: [[0.0, std::f64::consts::TAU], [0.0, std::f64::consts::TAU]],
            periodic: [true, true],
            caps: [false, false],
            compact: true,
        }
    }

    pub fn flat_torus(l1: f64, l2: f64) -> Self {
        Self {
            kind: SurfaceKind::FlatTorus { l1, l2 },
            domain: [[0.0, l1], [0.0, l2]],
            periodic: [true, true],
            caps: [false, false],
            compact: true,
        }
    }

    pub fn graph(terms: Vec<(u32, u32, f64)>, domain: [[f64; 2]; 2]) -> Self {
        Self {
            kind: SurfaceKind::Graph { terms, domain },
            domain,
            periodic: [false, false],
            caps: [false, false],
            compact: false,
        }
    }

    pub fn from_kind(kind: SurfaceKind) -> Self {
        match kind {
            SurfaceKind::Sphere { r } => Self::sphere(r),
            SurfaceKind::Ellipsoid { a, b, c } => Self::ellipsoid(a, b, c),
            SurfaceKind::Torus { big_r, small_r } => Self::torus(big_r, small_r),
            SurfaceKind::FlatTorus { l1, l2 } => Self::flat_torus(l1, l2),
            SurfaceKind::Graph { terms, domain } => Self::graph(terms, domain),
        }
    }

    pub fn id(&self) -> String {
        match &self.kind {
            SurfaceKind::Sphere { r } => format!("sphere({r})"),
            SurfaceKind::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
            SurfaceKind::Torus { big_r, small_r } => format!("torus({big_r},{small_r})"),
            SurfaceKind::FlatTorus { l1, l2 } => format!("flat_torus({l1},{l2})"),
            SurfaceKind::Graph { .. } => "graph".to_string(),
        }
    }

    /// Unchecked metric evaluation; the catalog formulas are total.
    pub fn metric_raw(&self, u: f64, v: f64) -> Metric {
        match &self.kind {
            SurfaceKind::Sphere { r } => {
                let s = u.sin();
                [[r * r, 0.0], [0.0, r * r * s * s]]
            }
            SurfaceKind::Ellipsoid { a, b, c } => {
                // pullback of (a sin u cos v, b sin u sin v, c cos u)
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let eu = [a * cu * cv, b * cu * sv, -c * su];
                let ev = [-a * su * sv, b * su * cv, 0.0];
                let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
                [[dot(eu, eu), dot(eu, ev)], [dot(eu, ev), dot(ev, ev)]]
            }
            SurfaceKind::Torus { big_r, small_r } => {
                let w = big_r + small_r * u.cos();
                [[small_r * small_r, 0.0], [0.0, w * w]]
            }
            SurfaceKind::FlatTorus { .. } => [[1.0, 0.0], [0.0, 1.0]],
            SurfaceKind::Graph { terms, .. } => {
                let fx = poly_eval_dx(terms, u, v);
                let fy = poly_eval_dy(terms, u, v);
                [[1.0 + fx * fx, fx * fy], [fx * fy, 1.0 + fy * fy]]
            }
        }
    }

    /// First fundamental form at a chart point; errors when not symmetric
    /// positive definite there.
    pub fn metric_at(&self, u: f64, v: f64) -> Result<Metric> {
        let g = self.metric_raw(u, v);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if !(g[0][0] > 0.0 && det > 0.0) {
            return Err(Error::InvalidMetric {
                u,
                v,
                reason: format!("not positive definite: g11={}, det={}", g[0][0], det),
            });
        }
        Ok(g)
    }

    pub fn embedding(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        match &self.kind {
            SurfaceKind::Sphere { r } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                Some([r * su * cv, r * su * sv, r * cu])
            }
            SurfaceKind::Ellipsoid { a, b, c } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                Some([a * su * cv, b * su * sv, c * cu])
            }
            SurfaceKind::Torus { big_r, small_r } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let w = big_r + small_r * cu;
                Some([w * cv, w * sv, small_r * su])
            }
            SurfaceKind::FlatTorus { .. } => None,
            SurfaceKind::Graph { terms, .. } => Some([u, v, poly_eval(terms, u, v)]),
        }
    }

    /// Analytic Gauss-curvature extremes over the chart, when the catalog
    /// member admits a closed form.
    pub fn analytic_curvature_extremes(&self) -> Option<(f64, f64)> {
        match &self.kind {
            SurfaceKind::Sphere { r } => {
                let k = 1.0 / (r * r);
                Some((k, k))
            }
            SurfaceKind::FlatTorus { .. } => Some((0.0, 0.0)),
            SurfaceKind::Torus { big_r, small_r } => Some((
                -1.0 / (small_r * (big_r - small_r)),
                1.0 / (small_r * (big_r + small_r)),
            )),
            _ => None,
        }
    }

    /// Wrap a chart point into the fundamental domain along periodic axes.
    pub fn wrap(&self, mut p: [f64; 2]) -> [f64; 2] {
        for axis in 0..2 {
            if self.periodic[axis] {
                let lo = self.domain[axis][0];
                let len = self.domain[axis][1] - lo;
                p[axis] = (p[axis] - lo).rem_euclid(len) + lo;
            }
        }
        p
    }

    /// Minimal chart-coordinate displacement q - p across periodic
    /// identifications (9 lattice translates suffice).
    pub fn wrapped_diff(&self, p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
        let mut d = [q[0] - p[0], q[1] - p[1]];
        for axis in 0..2 {
            if self.periodic[axis] {
                let len = self.domain[axis][1] - self.domain[axis][0];
                d[axis] -= (d[axis] / len).round() * len;
            }
        }
        d
    }
}

fn poly_eval(terms: &[(u32, u32, f64)], x: f64, y: f64) -> f64 {
    terms
        .iter()
        .map(|&(i, j, c)| c * x.powi(i as i32) * y.powi(j as i32))
        .sum()
}

fn poly_eval_dx(terms: &[(u32, u32, f64)], x: f64, y: f64) -> f64 {
    terms
        .iter()
        .filter(|&&(i, _, _)| i > 0)
        .map(|&(i, j, c)| c * i as f64 * x.powi(i as i32 - 1) * y.powi(j as i32))
        .sum()
}

fn poly_eval_dy(terms: &[(u32, u32, f64)], x: f64, y: f64) -> f64 {
    terms
        .iter()
        .filter(|&&(_, j, _)| j > 0)
        .map(|&(i, j, c)| c * j as f64 * x.powi(i as i32) * y.powi(j as i32 - 1))
        .sum()
}

/// Metric with first and second derivatives at a chart point.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: Metric,
    /// [d/du, d/dv]
    pub d1: [Metric; 2],
    /// [d2/duu, d2/dudv, d2/dvv]
    pub d2: [Metric; 3],
}

fn scale(m: Metric, s: f64) -> Metric {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

fn add(a: Metric, b: Metric) -> Metric {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

pub fn metric_jet(surface: &ChartedSurface, u: f64, v: f64) -> MetricJet {
    // analytic jets for the constant-coefficient catalog members
    match &surface.kind {
        SurfaceKind::Sphere { r } => {
            let r2 = r * r;
            let zero = [[0.0; 2]; 2];
            let g = [[r2, 0.0], [0.0, r2 * u.sin() * u.sin()]];
            let gu = [[0.0, 0.0], [0.0, r2 * (2.0 * u).sin()]];
            let guu = [[0.0, 0.0], [0.0, 2.0 * r2 * (2.0 * u).cos()]];
            MetricJet {
                g,
                d1: [gu, zero],
                d2: [guu, zero, zero],
            }
        }
        SurfaceKind::Torus { big_r, small_r } => {
            let zero = [[0.0; 2]; 2];
            let w = big_r + small_r * u.cos();
            let wp = -small_r * u.sin();
            let wpp = -small_r * u.cos();
            let g = [[small_r * small_r, 0.0], [0.0, w * w]];
            let gu = [[0.0, 0.0], [0.0, 2.0 * w * wp]];
            let guu = [[0.0, 0.0], [0.0, 2.0 * (wp * wp + w * wpp)]];
            MetricJet {
                g,
                d1: [gu, zero],
                d2: [guu, zero, zero],
            }
        }
        SurfaceKind::FlatTorus { .. } => {
            let zero = [[0.0; 2]; 2];
            MetricJet {
                g: [[1.0, 0.0], [0.0, 1.0]],
                d1: [zero, zero],
                d2: [zero, zero, zero],
            }
        }
        _ => {
            // central differences: 1e-5 for first, 1e-4 for second derivatives
            let m = |uu: f64, vv: f64| surface.metric_raw(uu, vv);
            let h1 = 1e-5;
            let h2 = 1e-4;
            let g = m(u, v);
            let du = scale(add(m(u + h1, v), scale(m(u - h1, v), -1.0)), 0.5 / h1);
            let dv = scale(add(m(u, v + h1), scale(m(u, v - h1), -1.0)), 0.5 / h1);
            let duu = scale(
                add(
                    add(m(u + h2, v), m(u - h2, v)),
                    scale(g, -2.0),
                ),
                1.0 / (h2 * h2),
            );
            let dvv = scale(
                add(
                    add(m(u, v + h2), m(u, v - h2)),
                    scale(g, -2.0),
                ),
                1.0 / (h2 * h2),
            );
            let duv = scale(
                add(
                    add(m(u + h2, v + h2), m(u - h2, v - h2)),
                    scale(add(m(u + h2, v - h2), m(u - h2, v + h2)), -1.0),
                ),
                0.25 / (h2 * h2),
            );
            MetricJet {
                g,
                d1: [du, dv],
                d2: [duu, duv, dvv],
            }
        }
    }
}

/// Gauss curvature by the Brioschi formula from the metric jet.
pub fn gauss_curvature(surface: &ChartedSurface, u: f64, v: f64) -> f64 {
    let jet = metric_jet(surface, u, v);
    let e = jet.g[0][0];
    let f = jet.g[0][1];
    let g = jet.g[1][1];
    let eu = jet.d1[0][0][0];
    let ev = jet.d1[1][0][0];
    let fu = jet.d1[0][0][1];
    let fv = jet.d1[1][0][1];
    let gu = jet.d1[0][1][1];
    let gv = jet.d1[1][1][1];
    let evv = jet.d2[2][0][0];
    let fuv = jet.d2[1][0][1];
    let guu = jet.d2[0][1][1];

    let m1 = [
        [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
        [fv - 0.5 * gu, e, f],
        [0.5 * gv, f, g],
    ];
    let m2 = [
        [0.0, 0.5 * ev, 0.5 * gu],
        [0.5 * ev, e, f],
        [0.5 * gu, f, g],
    ];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let denom = e * g - f * f;
    (det3(m1) - det3(m2)) / (denom * denom)
}

/// Christoffel symbols of the chart metric: gamma[k][i][j] = Γ^k_ij.
pub fn christoffel(surface: &ChartedSurface, u: f64, v: f64) -> [[[f64; 2]; 2]; 2] {
    let jet = metric_jet(surface, u, v);
    let g = jet.g;
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let ginv = [
        [g[1][1] / det, -g[0][1] / det],
        [-g[1][0] / det, g[0][0] / det],
    ];
    let dg = |i: usize, a: usize, b: usize| jet.d1[i][a][b];
    let mut gamma = [[[0.0f64; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += ginv[k][l] * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    gamma
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sphere_metric_at_equator_is_identity() {
        let s = ChartedSurface::sphere(1.0);
        let g = s.metric_at(PI / 2.0, 0.3).unwrap();
        assert_relative_eq!(g[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[1][1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[0][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_torus_metric_is_identity() {
        let s = ChartedSurface::flat_torus(1.0, 1.0);
        let g = s.metric_at(0.77, 0.13).unwrap();
        assert_eq!(g, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn torus_metric_outer_equator() {
        let s = ChartedSurface::torus(2.0, 1.0);
        let g = s.metric_at(0.0, 1.0).unwrap();
        assert_relative_eq!(g[0][0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[1][1], 9.0, epsilon = 1e-12);
    }

    #[test]
    fn metric_at_pole_is_invalid() {
        let s = ChartedSurface::sphere(1.0);
        assert!(s.metric_at(0.0, 0.0).is_err());
    }

    #[test]
    fn curvature_sphere_is_one() {
        let s = ChartedSurface::sphere(1.0);
        for &(u, v) in &[(0.4, 0.1), (PI / 2.0, 2.0), (2.6, 5.0)] {
            assert_relative_eq!(gauss_curvature(&s, u, v), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn curvature_flat_torus_is_zero() {
        let s = ChartedSurface::flat_torus(1.0, 2.0);
        assert!(gauss_curvature(&s, 0.2, 0.9).abs() < 1e-12);
    }

    #[test]
    fn curvature_torus_matches_closed_form() {
        let s = ChartedSurface::torus(2.0, 1.0);
        for &u in &[0.0f64, 0.7, 1.9, 3.1, 4.4] {
            let expect = u.cos() / (1.0 * (2.0 + u.cos()));
            assert_relative_eq!(gauss_curvature(&s, u, 0.5), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn curvature_paraboloid_origin_and_closed_form() {
        // z = x^2 + y^2; K = 4 / (1 + 4 rho^2)^2
        let s = ChartedSurface::graph(
            vec![(2, 0, 1.0), (0, 2, 1.0)],
            [[-1.0, 1.0], [-1.0, 1.0]],
        );
        assert_relative_eq!(gauss_curvature(&s, 0.0, 0.0), 4.0, epsilon = 1e-4);
        for &(x, y) in &[(0.3f64, 0.1f64), (0.5, -0.5), (-0.9, 0.4)] {
            let rho2 = x * x + y * y;
            let expect = 4.0 / (1.0 + 4.0 * rho2).powi(2);
            assert_relative_eq!(gauss_curvature(&s, x, y), expect, epsilon = 1e-4);
        }
    }

    #[test]
    fn pullback_consistency_for_embedded_catalog_surfaces() {
        // catalog metric equals the numerical pullback of the embedding
        let surfaces = vec![
            ChartedSurface::sphere(1.3),
            ChartedSurface::ellipsoid(1.0, 1.4, 0.8),
            ChartedSurface::torus(2.0, 0.7),
            ChartedSurface::graph(vec![(2, 0, 0.5), (1, 1, -0.3)], [[-1.0, 1.0], [-1.0, 1.0]]),
        ];
        let mut state = 99u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for s in surfaces {
            for _ in 0..2500 {
                let u = s.domain[0][0]
                    + (0.05 + 0.9 * rng()) * (s.domain[0][1] - s.domain[0][0]);
                let v = s.domain[1][0]
                    + (0.05 + 0.9 * rng()) * (s.domain[1][1] - s.domain[1][0]);
                let g = s.metric_raw(u, v);
                let h = 1e-6;
                let e = |uu: f64, vv: f64| s.embedding(uu, vv).unwrap();
                let eu: Vec<f64> = (0..3)
                    .map(|i| (e(u + h, v)[i] - e(u - h, v)[i]) / (2.0 * h))
                    .collect();
                let ev: Vec<f64> = (0..3)
                    .map(|i| (e(u, v + h)[i] - e(u, v - h)[i]) / (2.0 * h))
                    .collect();
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                assert!((g[0][0] - dot(&eu, &eu)).abs() < 1e-6);
                assert!((g[0][1] - dot(&eu, &ev)).abs() < 1e-6);
                assert!((g[1][1] - dot(&ev, &ev)).abs() < 1e-6);
            }
        }
    }
}
