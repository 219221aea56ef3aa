//! Background mesh: a dense grid graph over the chart with metric edge
//! lengths. Distances are graph-based (Dijkstra) with a 16-neighbor stencil
//! so the directional overestimate stays below ~3%.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::manifold::surface::ChartedSurface;

#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    pub coords: Vec<[f64; 2]>,
    pub adj: Vec<Vec<(u32, f64)>>,
    pub edges: Vec<(u32, u32, f64)>,
    /// Triangulated grid (axis steps plus one fixed diagonal per cell, and
    /// cap fans); used for Voronoi adjacency and corner detection.
    pub tris: Vec<[u32; 3]>,
    /// Resolution: max metric length over axis and diagonal edges.
    pub h: f64,
    pub rows: usize,
    pub cols: usize,
    pub cap_lo: Option<u32>,
    pub cap_hi: Option<u32>,
}

impl BackgroundMesh {
    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    /// Induced sub-mesh on the kept vertices. Returns the sub-mesh and the
    /// new-to-old vertex index map. Grid bookkeeping (rows, caps) does not
    /// survive restriction and is cleared.
    pub fn submesh(&self, keep: &[bool]) -> (BackgroundMesh, Vec<u32>) {
        assert_eq!(keep.len(), self.vertex_count());
        let mut old_to_new = vec![u32::MAX; keep.len()];
        let mut new_to_old = Vec::new();
        let mut coords = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                old_to_new[i] = new_to_old.len() as u32;
                new_to_old.push(i as u32);
                coords.push(self.coords[i]);
            }
        }
        let mut edges = Vec::new();
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); coords.len()];
        for &(a, b, w) in &self.edges {
            let (na, nb) = (old_to_new[a as usize], old_to_new[b as usize]);
            if na != u32::MAX && nb != u32::MAX {
                edges.push((na, nb, w));
                adj[na as usize].push((nb, w));
                adj[nb as usize].push((na, w));
            }
        }
        let tris = self
            .tris
            .iter()
            .filter_map(|t| {
                let m: Vec<u32> = t.iter().map(|&v| old_to_new[v as usize]).collect();
                if m.iter().all(|&v| v != u32::MAX) {
                    Some([m[0], m[1], m[2]])
                } else {
                    None
                }
            })
            .collect();
        (
            BackgroundMesh {
                coords,
                adj,
                edges,
                tris,
                h: self.h,
                rows: 0,
                cols: 0,
                cap_lo: None,
                cap_hi: None,
            },
            new_to_old,
        )
    }

    /// Build a grid whose axis/diagonal edges have metric length <= h_target.
    pub fn build(surface: &ChartedSurface, h_target: f64) -> Result<Self> {
        assert!(h_target > 0.0);
        let [du_dom, dv_dom] = surface.domain;
        let extent_u = du_dom[1] - du_dom[0];
        let extent_v = dv_dom[1] - dv_dom[0];
        if !(extent_u > 0.0 && extent_v > 0.0) {
            return Err(Error::InvalidMetric {
                u: du_dom[0],
                v: dv_dom[0],
                reason: "degenerate parameter domain".to_string(),
            });
        }

        // sample the metric scale per axis (and check positive definiteness
        // away from cap ends)
        let ns = 64;
        let mut su = 0.0f64;
        let mut sv = 0.0f64;
        for i in 0..ns {
            for j in 0..ns {
                let u = du_dom[0] + (i as f64 + 0.5) / ns as f64 * extent_u;
                let v = dv_dom[0] + (j as f64 + 0.5) / ns as f64 * extent_v;
                let g = surface.metric_at(u, v)?;
                su = su.max(g[0][0].sqrt());
                sv = sv.max(g[1][1].sqrt());
            }
        }

        let step = h_target / 2.0f64.sqrt();
        let nu = ((extent_u * su / step).ceil() as usize).max(8);
        let nv = ((extent_v * sv / step).ceil() as usize).max(8);

        let capped = surface.caps[0] || surface.caps[1];
        let rows = if capped || surface.periodic[0] { nu } else { nu + 1 };
        let cols = if surface.periodic[1] { nv } else { nv + 1 };
        let u_of = |i: usize| -> f64 {
            if capped {
                du_dom[0] + (i as f64 + 0.5) * extent_u / nu as f64
            } else if surface.periodic[0] {
                du_dom[0] + i as f64 * extent_u / nu as f64
            } else {
                du_dom[0] + i as f64 * extent_u / nu as f64
            }
        };
        let v_of = |j: usize| -> f64 { dv_dom[0] + j as f64 * extent_v / nv as f64 };
        let du_step = extent_u / nu as f64;
        let dv_step = extent_v / nv as f64;

        let mut coords: Vec<[f64; 2]> = Vec::with_capacity(rows * cols + 2);
        for i in 0..rows {
            for j in 0..cols {
                coords.push([u_of(i), v_of(j)]);
            }
        }
        let idx = |i: usize, j: usize| -> u32 { (i * cols + j) as u32 };

        let cap_lo = if surface.caps[0] {
            coords.push([du_dom[0], dv_dom[0]]);
            Some((coords.len() - 1) as u32)
        } else {
            None
        };
        let cap_hi = if surface.caps[1] {
            coords.push([du_dom[1], dv_dom[0]]);
            Some((coords.len() - 1) as u32)
        } else {
            None
        };

        let wrap_i = |i: i64| -> Option<usize> {
            if surface.periodic[0] {
                Some(i.rem_euclid(rows as i64) as usize)
            } else if i >= 0 && (i as usize) < rows {
                Some(i as usize)
            } else {
                None
            }
        };
        let wrap_j = |j: i64| -> Option<usize> {
            if surface.periodic[1] {
                Some(j.rem_euclid(cols as i64) as usize)
            } else if j >= 0 && (j as usize) < cols {
                Some(j as usize)
            } else {
                None
            }
        };

        let metric_len = |p: [f64; 2], d: [f64; 2]| -> f64 {
            let mid = surface.wrap([p[0] + 0.5 * d[0], p[1] + 0.5 * d[1]]);
            let g = surface.metric_raw(mid[0], mid[1]);
            (g[0][0] * d[0] * d[0] + 2.0 * g[0][1] * d[0] * d[1] + g[1][1] * d[1] * d[1])
                .max(0.0)
                .sqrt()
        };

        // 16-neighbor stencil, half-set to add each edge once
        let offsets: [(i64, i64, bool); 8] = [
            (0, 1, true),
            (1, 0, true),
            (1, 1, true),
            (1, -1, true),
            (1, 2, false),
            (1, -2, false),
            (2, 1, false),
            (2, -1, false),
        ];
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        let mut h = 0.0f64;
        for i in 0..rows {
            for j in 0..cols {
                let a = idx(i, j);
                let p = [u_of(i), v_of(j)];
                for &(di, dj, short) in &offsets {
                    let (ii, jj) = match (wrap_i(i as i64 + di), wrap_j(j as i64 + dj)) {
                        (Some(ii), Some(jj)) => (ii, jj),
                        _ => continue,
                    };
                    let b = idx(ii, jj);
                    if a == b {
                        continue;
                    }
                    let d = [di as f64 * du_step, dj as f64 * dv_step];
                    let len = metric_len(p, d);
                    if len <= 0.0 {
                        return Err(Error::InvalidMetric {
                            u: p[0],
                            v: p[1],
                            reason: "zero-length mesh edge".to_string(),
                        });
                    }
                    if short {
                        h = h.max(len);
                    }
                    edges.push((a, b, len));
                }
            }
        }
        // cap edges: pole to every vertex of the adjacent row
        if let Some(cl) = cap_lo {
            let u0 = u_of(0);
            for j in 0..cols {
                let g = surface.metric_raw(du_dom[0] + 0.5 * (u0 - du_dom[0]), v_of(j));
                let len = (g[0][0].max(0.0)).sqrt() * (u0 - du_dom[0]);
                edges.push((cl, idx(0, j), len.max(1e-12)));
            }
        }
        if let Some(ch) = cap_hi {
            let u1 = u_of(rows - 1);
            for j in 0..cols {
                let g = surface.metric_raw(u1 + 0.5 * (du_dom[1] - u1), v_of(j));
                let len = (g[0][0].max(0.0)).sqrt() * (du_dom[1] - u1);
                edges.push((ch, idx(rows - 1, j), len.max(1e-12)));
            }
        }

        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); coords.len()];
        for &(a, b, w) in &edges {
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }

        // triangulated grid for adjacency/corner detection
        let mut tris: Vec<[u32; 3]> = Vec::new();
        let max_i_cell = if surface.periodic[0] { rows } else { rows - 1 };
        let max_j_cell = if surface.periodic[1] { cols } else { cols - 1 };
        for i in 0..max_i_cell {
            for j in 0..max_j_cell {
                let i1 = wrap_i(i as i64 + 1).unwrap();
                let j1 = wrap_j(j as i64 + 1).unwrap();
                tris.push([idx(i, j), idx(i1, j), idx(i1, j1)]);
                tris.push([idx(i, j), idx(i1, j1), idx(i, j1)]);
            }
        }
        if let Some(cl) = cap_lo {
            for j in 0..max_j_cell {
                let j1 = wrap_j(j as i64 + 1).unwrap();
                tris.push([cl, idx(0, j), idx(0, j1)]);
            }
        }
        if let Some(ch) = cap_hi {
            for j in 0..max_j_cell {
                let j1 = wrap_j(j as i64 + 1).unwrap();
                tris.push([ch, idx(rows - 1, j1), idx(rows - 1, j)]);
            }
        }

        Ok(Self {
            coords,
            adj,
            edges,
            tris,
            h,
            rows,
            cols,
            cap_lo,
            cap_hi,
        })
    }
}

/// Mesh vertex closest to a chart point (plain chart-coordinate metric;
/// adequate for seeding since grid spacing is uniform per axis).
pub fn nearest_vertex(mesh: &BackgroundMesh, p: [f64; 2]) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    for (i, c) in mesh.coords.iter().enumerate() {
        let d = (c[0] - p[0]).hypot(c[1] - p[1]);
        if d < best.0 {
            best = (d, i as u32);
        }
    }
    best.1
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    label: u32,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the min entry on top;
        // deterministic tie-breaking by (label, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.label.cmp(&self.label))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra distances.
pub fn distance_field(mesh: &BackgroundMesh, sources: &[u32]) -> Vec<f64> {
    let labeled: Vec<(u32, u32)> = sources.iter().map(|&s| (s, 0)).collect();
    distance_field_labeled(mesh, &labeled).0
}

/// Multi-source Dijkstra with per-source labels; ties resolve to the
/// lowest label deterministically.
pub fn distance_field_labeled(
    mesh: &BackgroundMesh,
    sources: &[(u32, u32)],
) -> (Vec<f64>, Vec<u32>) {
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut label = vec![u32::MAX; n];
    let mut heap = BinaryHeap::new();
    for &(s, l) in sources {
        if dist[s as usize] > 0.0 || label[s as usize] > l {
            dist[s as usize] = 0.0;
            label[s as usize] = label[s as usize].min(l);
        }
    }
    for &(s, l) in sources {
        heap.push(HeapEntry {
            dist: 0.0,
            label: l,
            node: s,
        });
    }
    let mut settled = vec![false; n];
    while let Some(e) = heap.pop() {
        let u = e.node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        dist[u] = e.dist;
        label[u] = e.label;
        for &(v, w) in &mesh.adj[u] {
            let vu = v as usize;
            if settled[vu] {
                continue;
            }
            let nd = e.dist + w;
            if nd < dist[vu] || (nd == dist[vu] && e.label < label[vu]) {
                dist[vu] = nd;
                label[vu] = e.label;
                heap.push(HeapEntry {
                    dist: nd,
                    label: e.label,
                    node: v,
                });
            }
        }
    }
    (dist, label)
}

/// Single-source Dijkstra truncated at radius `rmax`: vertices farther than
/// `rmax` keep distance +inf. Exact inside the ball, and much cheaper than a
/// full sweep when the ball is small relative to the mesh.
pub fn distance_field_within(mesh: &BackgroundMesh, source: u32, rmax: f64) -> Vec<f64> {
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        label: 0,
        node: source,
    });
    while let Some(e) = heap.pop() {
        let u = e.node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &(v, w) in &mesh.adj[u] {
            let vu = v as usize;
            if settled[vu] {
                continue;
            }
            let nd = e.dist + w;
            if nd <= rmax && nd < dist[vu] {
                dist[vu] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    label: 0,
                    node: v,
                });
            }
        }
    }
    dist
}

/// Single-source Dijkstra returning parent pointers (parent of the source
/// is itself).
pub fn dijkstra_with_parents(mesh: &BackgroundMesh, source: u32) -> (Vec<f64>, Vec<u32>) {
    let n = mesh.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<u32> = (0..n as u32).collect();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        label: 0,
        node: source,
    });
    while let Some(e) = heap.pop() {
        let u = e.node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &(v, w) in &mesh.adj[u] {
            let vu = v as usize;
            let nd = e.dist + w;
            if !settled[vu] && nd < dist[vu] {
                dist[vu] = nd;
                parent[vu] = e.node;
                heap.push(HeapEntry {
                    dist: nd,
                    label: 0,
                    node: v,
                });
            }
        }
    }
    (dist, parent)
}

/// Lower `dist` in place with distances from a newly added source,
/// pruning wherever the existing field already wins.
pub fn relax_from(mesh: &BackgroundMesh, source: u32, dist: &mut [f64]) {
    let mut heap = BinaryHeap::new();
    if dist[source as usize] <= 0.0 {
        return;
    }
    dist[source as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        label: 0,
        node: source,
    });
    while let Some(e) = heap.pop() {
        let u = e.node as usize;
        if e.dist > dist[u] {
            continue;
        }
        for &(v, w) in &mesh.adj[u] {
            let nd = e.dist + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    label: 0,
                    node: v,
                });
            }
        }
    }
}

/// Shortest non-contractible geodesic loop, estimated per homotopy class:
/// the chart is unrolled three periods wide along its periodic axes and the
/// loop in class (k0, k1) through x is the unrolled distance from x to its
/// lattice translate. Returns None when the chart carries no such classes
/// (non-periodic, or periodic circles that close over a cap).
pub fn shortest_geodesic_loop(
    surface: &ChartedSurface,
    h_target: f64,
    samples: usize,
) -> Option<f64> {
    if surface.caps[0] || surface.caps[1] {
        return None;
    }
    if !(surface.periodic[0] || surface.periodic[1]) {
        return None;
    }
    let mut unrolled = surface.clone();
    let mut lens = [0.0f64; 2];
    for a in 0..2 {
        if surface.periodic[a] {
            let lo = surface.domain[a][0];
            let len = surface.domain[a][1] - lo;
            lens[a] = len;
            unrolled.domain[a] = [lo - len, lo + 2.0 * len];
            unrolled.periodic[a] = false;
        }
    }
    let mesh = BackgroundMesh::build(&unrolled, h_target).ok()?;

    let nearest = |p: [f64; 2]| -> u32 {
        let mut best = (f64::INFINITY, 0u32);
        for (i, c) in mesh.coords.iter().enumerate() {
            let d = (c[0] - p[0]).hypot(c[1] - p[1]);
            if d < best.0 {
                best = (d, i as u32);
            }
        }
        best.1
    };

    let mut classes: Vec<[f64; 2]> = Vec::new();
    for &(k0, k1) in &[(1i32, 0i32), (0, 1), (1, 1), (1, -1)] {
        if (k0 != 0 && !surface.periodic[0]) || (k1 != 0 && !surface.periodic[1]) {
            continue;
        }
        classes.push([k0 as f64 * lens[0], k1 as f64 * lens[1]]);
    }
    if classes.is_empty() {
        return None;
    }

    let mut best: Option<f64> = None;
    for s in 0..samples.max(1) {
        // spread base points across the fundamental domain
        let t = (s as f64 + 0.5) / samples.max(1) as f64;
        let x = [
            surface.domain[0][0] + t * (surface.domain[0][1] - surface.domain[0][0]),
            surface.domain[1][0]
                + ((s as f64 * 0.381966).fract() + 0.5 / samples.max(1) as f64)
                    * (surface.domain[1][1] - surface.domain[1][0]),
        ];
        let src = nearest(x);
        let xs = mesh.coords[src as usize];
        let targets: Vec<u32> = classes
            .iter()
            .map(|d| nearest([xs[0] + d[0], xs[1] + d[1]]))
            .collect();
        if let Some(l) = multi_target_distance(&mesh, src, &targets, best) {
            best = Some(best.map_or(l, |b| b.min(l)));
        }
    }
    best
}

/// Dijkstra from `src` that stops once every target is settled or the
/// frontier passes `prune`; returns the smallest settled target distance.
fn multi_target_distance(
    mesh: &BackgroundMesh,
    src: u32,
    targets: &[u32],
    prune: Option<f64>,
) -> Option<f64> {
    let mut remaining: HashSet<u32> = targets.iter().copied().collect();
    let mut best: Option<f64> = None;
    let mut dist = vec![f64::INFINITY; mesh.vertex_count()];
    let mut settled = vec![false; mesh.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[src as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        label: 0,
        node: src,
    });
    while let Some(e) = heap.pop() {
        let u = e.node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if let Some(p) = prune {
            if e.dist > p {
                break;
            }
        }
        if remaining.remove(&e.node) {
            best = Some(best.map_or(e.dist, |b: f64| b.min(e.dist)));
            if remaining.is_empty() {
                break;
            }
        }
        for &(v, w) in &mesh.adj[u] {
            let vu = v as usize;
            let nd = e.dist + w;
            if !settled[vu] && nd < dist[vu] {
                dist[vu] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    label: 0,
                    node: v,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_mesh(h: f64) -> (ChartedSurface, BackgroundMesh) {
        let s = ChartedSurface::sphere(1.0);
        let m = BackgroundMesh::build(&s, h).unwrap();
        (s, m)
    }

    #[test]
    fn build_reports_resolution() {
        let (_, m) = sphere_mesh(0.08);
        assert!(m.h <= 0.08 + 1e-9, "h = {}", m.h);
        assert!(m.cap_lo.is_some() && m.cap_hi.is_some());
    }

    #[test]
    fn degenerate_domain_errors() {
        let s = ChartedSurface::graph(vec![(1, 0, 1.0)], [[0.0, 0.0], [0.0, 1.0]]);
        assert!(BackgroundMesh::build(&s, 0.05).is_err());
    }

    #[test]
    fn sphere_distance_matches_analytic_within_3h() {
        let (s, m) = sphere_mesh(0.08);
        // source at an ordinary grid vertex
        let src = (m.rows / 2 * m.cols) as u32;
        let dist = distance_field(&m, &[src]);
        let p = m.coords[src as usize];
        let e = |q: [f64; 2]| s.embedding(q[0], q[1]).unwrap();
        let pe = e(p);
        for step in (0..m.vertex_count()).step_by(53) {
            let qe = e(m.coords[step]);
            let dot: f64 = pe.iter().zip(&qe).map(|(a, b)| a * b).sum();
            let analytic = dot.clamp(-1.0, 1.0).acos();
            assert!(
                (dist[step] - analytic).abs() <= 3.0 * m.h,
                "graph {} vs analytic {} at {:?}",
                dist[step],
                analytic,
                m.coords[step]
            );
        }
    }

    #[test]
    fn all_sources_gives_zeros() {
        let (_, m) = sphere_mesh(0.2);
        let all: Vec<u32> = (0..m.vertex_count() as u32).collect();
        let dist = distance_field(&m, &all);
        assert!(dist.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn flat_torus_diagonal_distance() {
        let s = ChartedSurface::flat_torus(1.0, 1.0);
        let m = BackgroundMesh::build(&s, 0.02).unwrap();
        // nearest grid vertices to (0,0) and (0.5, 0.5)
        let find = |p: [f64; 2]| -> u32 {
            let mut best = (f64::INFINITY, 0u32);
            for (i, c) in m.coords.iter().enumerate() {
                let d = (c[0] - p[0]).hypot(c[1] - p[1]);
                if d < best.0 {
                    best = (d, i as u32);
                }
            }
            best.1
        };
        let a = find([0.0, 0.0]);
        let b = find([0.5, 0.5]);
        let dist = distance_field(&m, &[a]);
        let expect = 2.0f64.sqrt() / 2.0;
        assert!(
            (dist[b as usize] - expect).abs() <= 3.0 * m.h,
            "{} vs {}",
            dist[b as usize],
            expect
        );
    }

    #[test]
    fn triangle_inequality_on_sampled_triples() {
        let (_, m) = sphere_mesh(0.12);
        let picks: Vec<u32> = (0..6).map(|i| (i * 977 % m.vertex_count()) as u32).collect();
        let fields: Vec<Vec<f64>> = picks.iter().map(|&p| distance_field(&m, &[p])).collect();
        for a in 0..picks.len() {
            for b in 0..picks.len() {
                for c in 0..picks.len() {
                    let ab = fields[a][picks[b] as usize];
                    let bc = fields[b][picks[c] as usize];
                    let ac = fields[a][picks[c] as usize];
                    assert!(ac <= ab + bc + 2.0 * m.h);
                }
            }
        }
    }

    #[test]
    fn shortest_loop_on_flat_torus_is_systole() {
        let s = ChartedSurface::flat_torus(1.0, 1.5);
        let loop_len = shortest_geodesic_loop(&s, 0.03, 4).unwrap();
        assert!(
            (loop_len - 1.0).abs() < 0.1,
            "systole estimate {loop_len} should be near 1"
        );
    }

    #[test]
    fn no_loops_on_simply_connected_charts() {
        let sphere = ChartedSurface::sphere(1.0);
        assert!(shortest_geodesic_loop(&sphere, 0.1, 2).is_none());
        let graph = ChartedSurface::graph(vec![(2, 0, 1.0)], [[-1.0, 1.0], [-1.0, 1.0]]);
        assert!(shortest_geodesic_loop(&graph, 0.1, 2).is_none());
    }
}
