//! Simplicial complexes with realized coordinates: validity checks,
//! orientation propagation, barycentric (flag) subdivision, even-incidence
//! and chessboard coloring, and thickness reporting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::{self, Point};

/// Pure n-dimensional complex given by its top-dimensional simplices; faces
/// are implicit (closure under faces holds by construction). Vertex
/// coordinates live in a shared table; `simplex_coords`, when present,
/// overrides them per top-simplex (used for universal-cover unwraps of flat
/// quotients, where a vertex has several realized copies).
#[derive(Debug, Clone, Serialize)]
pub struct SimplicialComplex {
    pub dim: usize,
    pub ambient: usize,
    pub vertices: Vec<Point>,
    pub simplices: Vec<Vec<usize>>,
    pub orientations: Option<Vec<i8>>,
    pub colors: Option<Vec<u8>>,
    pub simplex_coords: Option<Vec<Vec<Point>>>,
    /// Per-vertex model label in 0..=dim (all labels distinct within each
    /// top simplex); produced by barycentric subdivision (barycenter
    /// dimension) and consumed by the Alexander map assembly.
    pub model_labels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub closed: bool,
    pub dual_connected: bool,
    pub orientable: bool,
    pub euler_characteristic: i64,
    /// (n-1)-faces not contained in exactly two top simplices, with counts.
    pub bad_faces: Vec<(Vec<usize>, usize)>,
    pub is_valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThicknessReport {
    pub phi: Vec<f64>,
    pub phi_min: f64,
    pub histogram: Vec<HistBucket>,
    pub phi0: f64,
    pub offenders: Vec<usize>,
}

impl SimplicialComplex {
    pub fn new(
        dim: usize,
        ambient: usize,
        vertices: Vec<Point>,
        simplices: Vec<Vec<usize>>,
    ) -> Self {
        let simplices = simplices
            .into_iter()
            .map(|mut t| {
                t.sort_unstable();
                assert_eq!(t.len(), dim + 1, "top simplex arity mismatch");
                t
            })
            .collect();
        Self {
            dim,
            ambient,
            vertices,
            simplices,
            orientations: None,
            colors: None,
            simplex_coords: None,
            model_labels: None,
        }
    }

    /// Realized Euclidean coordinates of top simplex `s`.
    pub fn realized(&self, s: usize) -> Vec<Point> {
        if let Some(coords) = &self.simplex_coords {
            coords[s].clone()
        } else {
            self.simplices[s]
                .iter()
                .map(|&v| self.vertices[v].clone())
                .collect()
        }
    }

    /// Map from each d-face (sorted index tuple) to the ids of its incident
    /// top simplices.
    pub fn faces_map(&self, d: usize) -> BTreeMap<Vec<usize>, Vec<usize>> {
        assert!(d <= self.dim);
        let mut map: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let arity = d + 1;
        for (sid, t) in self.simplices.iter().enumerate() {
            for mask in 1u32..(1 << t.len()) {
                if mask.count_ones() as usize != arity {
                    continue;
                }
                let face: Vec<usize> = (0..t.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| t[i])
                    .collect();
                map.entry(face).or_default().push(sid);
            }
        }
        map
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut per_dim: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); self.dim + 1];
        for t in &self.simplices {
            for mask in 1u32..(1 << t.len()) {
                let face: Vec<usize> = (0..t.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| t[i])
                    .collect();
                per_dim[face.len() - 1].insert(face);
            }
        }
        per_dim
            .iter()
            .enumerate()
            .map(|(d, set)| {
                let c = set.len() as i64;
                if d % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum()
    }

    /// Dual adjacency: pairs of top simplices sharing an (n-1)-face that is
    /// contained in exactly two top simplices.
    pub fn dual_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.simplices.len()];
        for (_, inc) in self.faces_map(self.dim - 1) {
            if inc.len() == 2 {
                adj[inc[0]].push(inc[1]);
                adj[inc[1]].push(inc[0]);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Consistent orientation signs (relative to each sorted tuple) via
    /// propagation over the dual graph. Fails on non-orientable complexes.
    pub fn orient(&self) -> Result<Vec<i8>> {
        let n = self.dim;
        let mut signs: Vec<i8> = vec![0; self.simplices.len()];
        // for each shared (n-1)-face record the position of the omitted
        // vertex inside each incident tuple
        let faces = self.faces_map(n.saturating_sub(1));
        let mut edges: Vec<(usize, usize, usize, usize)> = Vec::new();
        for (face, inc) in &faces {
            if inc.len() == 2 {
                let pos = |sid: usize| -> usize {
                    let t = &self.simplices[sid];
                    t.iter()
                        .position(|v| !face.contains(v))
                        .expect("omitted vertex")
                };
                edges.push((inc[0], inc[1], pos(inc[0]), pos(inc[1])));
            }
        }
        let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); self.simplices.len()];
        for &(a, b, pa, pb) in &edges {
            // consistency: sign_b = -sign_a * (-1)^(pa+pb)
            let rel: i8 = if (pa + pb) % 2 == 0 { -1 } else { 1 };
            adj[a].push((b, rel));
            adj[b].push((a, rel));
        }
        for start in 0..self.simplices.len() {
            if signs[start] != 0 {
                continue;
            }
            signs[start] = 1;
            let mut queue = VecDeque::from([start]);
            while let Some(s) = queue.pop_front() {
                for &(t, rel) in &adj[s] {
                    let want = signs[s] * rel;
                    if signs[t] == 0 {
                        signs[t] = want;
                        queue.push_back(t);
                    } else if signs[t] != want {
                        return Err(Error::InvalidComplex(format!(
                            "non-orientable: conflict between simplices {s} and {t}"
                        )));
                    }
                }
            }
        }
        Ok(signs)
    }

    /// Every (n-2)-face must meet an even number of top simplices.
    /// Returns the offending faces on failure.
    pub fn check_even_incidence(&self) -> std::result::Result<(), Vec<Vec<usize>>> {
        assert!(self.dim >= 2, "needs a pure n-complex with n >= 2");
        let mut offenders = Vec::new();
        for (face, inc) in self.faces_map(self.dim - 2) {
            if inc.len() % 2 != 0 {
                offenders.push(face);
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(offenders)
        }
    }

    /// Proper 2-coloring of the dual graph by breadth-first propagation.
    /// Failure returns an odd dual cycle (as a simplex-id loop). When the
    /// complex already carries colors (flag parity from subdivision), the
    /// propagated coloring is cross-checked against them.
    pub fn chessboard_coloring(&self) -> Result<Vec<u8>> {
        let adj = self.dual_adjacency();
        let m = self.simplices.len();
        let mut color: Vec<i8> = vec![-1; m];
        let mut parent: Vec<usize> = (0..m).collect();
        let mut depth: Vec<usize> = vec![0; m];
        for start in 0..m {
            if color[start] >= 0 {
                continue;
            }
            color[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(s) = queue.pop_front() {
                for &t in &adj[s] {
                    if color[t] < 0 {
                        color[t] = 1 - color[s];
                        parent[t] = s;
                        depth[t] = depth[s] + 1;
                        queue.push_back(t);
                    } else if color[t] == color[s] {
                        return Err(Error::OddCycle(odd_cycle(s, t, &parent, &depth)));
                    }
                }
            }
        }
        let bfs: Vec<u8> = color.iter().map(|&c| c as u8).collect();
        if let Some(stored) = &self.colors {
            // allow a global flip per dual component
            let mut seen = vec![false; m];
            for start in 0..m {
                if seen[start] {
                    continue;
                }
                let flip = bfs[start] != stored[start];
                let mut queue = VecDeque::from([start]);
                seen[start] = true;
                while let Some(s) = queue.pop_front() {
                    let ok = (bfs[s] != stored[s]) == flip;
                    if !ok {
                        return Err(Error::Contract(
                            "stored flag-parity coloring disagrees with propagation".into(),
                        ));
                    }
                    for &t in &adj[s] {
                        if !seen[t] {
                            seen[t] = true;
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        Ok(bfs)
    }

    pub fn validate_closed_pseudomanifold(&self) -> ValidityReport {
        let mut bad_faces = Vec::new();
        for (face, inc) in self.faces_map(self.dim.saturating_sub(1)) {
            if inc.len() != 2 {
                bad_faces.push((face, inc.len()));
            }
        }
        let closed = bad_faces.is_empty() && !self.simplices.is_empty();
        let adj = self.dual_adjacency();
        let dual_connected = if self.simplices.is_empty() {
            false
        } else {
            let mut seen = vec![false; self.simplices.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(s) = queue.pop_front() {
                for &t in &adj[s] {
                    if !seen[t] {
                        seen[t] = true;
                        count += 1;
                        queue.push_back(t);
                    }
                }
            }
            count == self.simplices.len()
        };
        let orientable = self.orient().is_ok();
        let euler_characteristic = self.euler_characteristic();
        ValidityReport {
            closed,
            dual_connected,
            orientable,
            euler_characteristic,
            is_valid: closed && dual_connected && orientable,
            bad_faces,
        }
    }

    /// Flag (barycentric) subdivision: each n-simplex becomes (n+1)!
    /// children on flags of face barycenters. Children inherit realized
    /// coordinates from their parent, carry barycenter-dimension model
    /// labels, and (when the input is orientable) a chessboard coloring by
    /// flag parity together with consistent orientations.
    pub fn barycentric_subdivision(&self) -> SimplicialComplex {
        let n = self.dim;
        let parent_signs = self.orient().ok();

        // assign one vertex id per face of the complex
        let mut face_id: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        let mut new_vertices: Vec<Point> = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        for t in &self.simplices {
            for mask in 1u32..(1 << t.len()) {
                let face: Vec<usize> = (0..t.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| t[i])
                    .collect();
                if !face_id.contains_key(&face) {
                    let bc = barycenter(&face.iter().map(|&v| self.vertices[v].clone()).collect::<Vec<_>>());
                    face_id.insert(face.clone(), new_vertices.len());
                    new_vertices.push(bc);
                    labels.push(face.len() - 1);
                }
            }
        }

        let needs_overrides = self.simplex_coords.is_some();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut child_colors: Vec<u8> = Vec::new();
        let mut child_signs: Vec<i8> = Vec::new();
        let mut child_coords: Vec<Vec<Point>> = Vec::new();

        let perms = permutations_with_parity(n + 1);
        for (sid, t) in self.simplices.iter().enumerate() {
            let realized = self.realized(sid);
            let or_s = parent_signs.as_ref().map(|s| s[sid]).unwrap_or(1);
            for (perm, parity) in &perms {
                // flag of faces by positions perm[0..=i]
                let mut tuple_flag: Vec<usize> = Vec::with_capacity(n + 1);
                let mut coords_flag: Vec<Point> = Vec::with_capacity(n + 1);
                let mut posset: Vec<usize> = Vec::with_capacity(n + 1);
                for i in 0..=n {
                    posset.push(perm[i]);
                    let mut face: Vec<usize> = posset.iter().map(|&p| t[p]).collect();
                    face.sort_unstable();
                    tuple_flag.push(face_id[&face]);
                    if needs_overrides {
                        coords_flag.push(barycenter(
                            &posset.iter().map(|&p| realized[p].clone()).collect::<Vec<_>>(),
                        ));
                    }
                }
                let color_val: i8 = or_s * parity;
                // sort the child tuple, tracking the sorting parity
                let mut order: Vec<usize> = (0..=n).collect();
                order.sort_by_key(|&i| tuple_flag[i]);
                let sort_parity = permutation_sign(&order);
                let sorted_tuple: Vec<usize> = order.iter().map(|&i| tuple_flag[i]).collect();
                children.push(sorted_tuple);
                child_colors.push(if color_val > 0 { 0 } else { 1 });
                child_signs.push(color_val * sort_parity);
                if needs_overrides {
                    child_coords.push(order.iter().map(|&i| coords_flag[i].clone()).collect());
                }
            }
        }

        SimplicialComplex {
            dim: n,
            ambient: self.ambient,
            vertices: new_vertices,
            simplices: children,
            orientations: parent_signs.as_ref().map(|_| child_signs),
            colors: parent_signs.as_ref().map(|_| child_colors),
            simplex_coords: if needs_overrides { Some(child_coords) } else { None },
            model_labels: Some(labels),
        }
    }
}

fn odd_cycle(s: usize, t: usize, parent: &[usize], depth: &[usize]) -> Vec<usize> {
    // walk both conflict endpoints up to their lowest common ancestor
    let (mut a, mut b) = (s, t);
    let mut pa = vec![a];
    let mut pb = vec![b];
    while depth[a] > depth[b] {
        a = parent[a];
        pa.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b];
        pb.push(b);
    }
    while a != b {
        a = parent[a];
        b = parent[b];
        pa.push(a);
        pb.push(b);
    }
    pb.pop();
    pb.reverse();
    pa.extend(pb);
    pa
}

pub fn barycenter(points: &[Point]) -> Point {
    let dim = points[0].len();
    let mut out = vec![0.0; dim];
    for p in points {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    for o in &mut out {
        *o /= points.len() as f64;
    }
    out
}

fn permutation_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn permutations_with_parity(m: usize) -> Vec<(Vec<usize>, i8)> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    heap_permute(&mut cur, m, &mut out);
    out
}

fn heap_permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<(Vec<usize>, i8)>) {
    if k == 1 {
        out.push((cur.clone(), permutation_sign(cur)));
        return;
    }
    for i in 0..k {
        heap_permute(cur, k - 1, out);
        if k % 2 == 0 {
            cur.swap(i, k - 1);
        } else {
            cur.swap(0, k - 1);
        }
    }
}

/// Per-simplex thickness over realized coordinates, with a 20-bucket
/// histogram on [0, 1] and the ids falling below `phi0`.
pub fn thickness_report(complex: &SimplicialComplex, phi0: f64) -> Result<ThicknessReport> {
    if complex.simplices.is_empty() {
        return Err(Error::EmptyComplex);
    }
    let phi: Vec<f64> = (0..complex.simplices.len())
        .into_par_iter()
        .map(|s| simplex::thickness(&complex.realized(s)))
        .collect();
    let phi_min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let nb = 20;
    let mut histogram: Vec<HistBucket> = (0..nb)
        .map(|i| HistBucket {
            lo: i as f64 / nb as f64,
            hi: (i + 1) as f64 / nb as f64,
            count: 0,
        })
        .collect();
    for &p in &phi {
        let idx = ((p * nb as f64) as usize).min(nb - 1);
        histogram[idx].count += 1;
    }
    let offenders = phi
        .iter()
        .enumerate()
        .filter(|(_, &p)| p < phi0)
        .map(|(i, _)| i)
        .collect();
    Ok(ThicknessReport {
        phi,
        phi_min,
        histogram,
        phi0,
        offenders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn subdivision_counts() {
        let tri = fixtures::single_triangle();
        assert_eq!(tri.barycentric_subdivision().simplices.len(), 6);

        let tb = fixtures::tetrahedron_boundary();
        assert_eq!(tb.barycentric_subdivision().simplices.len(), 24);

        let solid = fixtures::solid_simplex(3);
        assert_eq!(solid.barycentric_subdivision().simplices.len(), 24);
    }

    #[test]
    fn even_incidence_tetrahedron_boundary_fails_at_all_vertices() {
        let tb = fixtures::tetrahedron_boundary();
        let offenders = tb.check_even_incidence().unwrap_err();
        assert_eq!(offenders.len(), 4);
    }

    #[test]
    fn even_incidence_passes_after_subdivision() {
        let sd = fixtures::tetrahedron_boundary().barycentric_subdivision();
        assert!(sd.check_even_incidence().is_ok());
        // vertex degrees in the subdivision are 6 (original), 4 (edge
        // barycenters), 6 (face barycenters)
        let deg = sd.faces_map(0);
        let mut degrees: BTreeSet<usize> = BTreeSet::new();
        for (_, inc) in deg {
            degrees.insert(inc.len());
        }
        assert_eq!(degrees, BTreeSet::from([4, 6]));
    }

    #[test]
    fn even_incidence_octahedron_passes() {
        assert!(fixtures::octahedron().check_even_incidence().is_ok());
    }

    #[test]
    fn coloring_octahedron_succeeds() {
        let oct = fixtures::octahedron();
        let colors = oct.chessboard_coloring().unwrap();
        let adj = oct.dual_adjacency();
        for (s, nb) in adj.iter().enumerate() {
            for &t in nb {
                assert_ne!(colors[s], colors[t]);
            }
        }
    }

    #[test]
    fn coloring_tetrahedron_boundary_fails_with_odd_triangle() {
        let tb = fixtures::tetrahedron_boundary();
        match tb.chessboard_coloring() {
            Err(Error::OddCycle(cycle)) => assert_eq!(cycle.len(), 3),
            other => panic!("expected odd cycle, got {other:?}"),
        }
    }

    #[test]
    fn subdivision_of_closed_2_complex_colors_properly() {
        for complex in [fixtures::octahedron(), fixtures::tetrahedron_boundary()] {
            let sd = complex.barycentric_subdivision();
            assert!(sd.colors.is_some());
            let colors = sd.chessboard_coloring().unwrap();
            let adj = sd.dual_adjacency();
            for (s, nb) in adj.iter().enumerate() {
                for &t in nb {
                    assert_ne!(colors[s], colors[t]);
                }
            }
        }
    }

    #[test]
    fn subdivision_of_closed_3_complex_colors_properly() {
        // boundary of a 4-simplex: a closed 3-pseudomanifold
        let s3 = fixtures::simplex_boundary(4);
        assert_eq!(s3.dim, 3);
        let sd = s3.barycentric_subdivision();
        assert!(sd.check_even_incidence().is_ok());
        let colors = sd.chessboard_coloring().unwrap();
        let adj = sd.dual_adjacency();
        for (s, nb) in adj.iter().enumerate() {
            for &t in nb {
                assert_ne!(colors[s], colors[t]);
            }
        }
    }

    #[test]
    fn validity_octahedron_is_sphere() {
        let rep = fixtures::octahedron().validate_closed_pseudomanifold();
        assert!(rep.is_valid);
        assert_eq!(rep.euler_characteristic, 2);
    }

    #[test]
    fn validity_dangling_triangle_fails() {
        let mut oct = fixtures::octahedron();
        // attach a triangle hanging off vertex 0 with two fresh vertices
        let base = oct.vertices.len();
        oct.vertices.push(vec![2.0, 0.0, 0.0]);
        oct.vertices.push(vec![2.0, 1.0, 0.0]);
        oct.simplices.push(vec![0, base, base + 1]);
        let rep = oct.validate_closed_pseudomanifold();
        assert!(!rep.is_valid);
        assert!(!rep.bad_faces.is_empty());
    }

    #[test]
    fn subdivision_covers_parent_pointwise() {
        // every sampled point of a parent triangle lies in >= 1 child, and
        // in exactly one when away from child boundaries
        let tri = fixtures::single_triangle();
        let sd = tri.barycentric_subdivision();
        let mut state = 123456789u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let (mut a, mut b) = (rng(), rng());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let p = [
                tri.vertices[0][0] * (1.0 - a - b) + tri.vertices[1][0] * a + tri.vertices[2][0] * b,
                tri.vertices[0][1] * (1.0 - a - b) + tri.vertices[1][1] * a + tri.vertices[2][1] * b,
            ];
            let mut inside = 0;
            let mut strictly = 0;
            for s in 0..sd.simplices.len() {
                let verts = sd.realized(s);
                if let Some(min_bary) = bary_min(&verts, &p) {
                    if min_bary >= -1e-9 {
                        inside += 1;
                    }
                    if min_bary > 1e-9 {
                        strictly += 1;
                    }
                }
            }
            assert!(inside >= 1);
            assert!(strictly <= 1);
        }
    }

    fn bary_min(tri: &[Point], p: &[f64; 2]) -> Option<f64> {
        let (a, b, c) = (&tri[0], &tri[1], &tri[2]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if det.abs() < 1e-15 {
            return None;
        }
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        Some((1.0 - l1 - l2).min(l1).min(l2))
    }

    #[test]
    fn thickness_report_octahedron_all_equilateral() {
        let rep = thickness_report(&fixtures::octahedron(), 0.0).unwrap();
        let expect = 3.0f64.sqrt() / 4.0;
        for &p in &rep.phi {
            assert!((p - expect).abs() < 1e-12);
        }
        assert!((rep.phi_min - expect).abs() < 1e-12);
    }

    #[test]
    fn thickness_report_empty_errors() {
        let empty = SimplicialComplex::new(2, 2, vec![], vec![]);
        assert!(thickness_report(&empty, 0.0).is_err());
    }
}
