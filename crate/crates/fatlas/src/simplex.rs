//! Dimension-generic Euclidean simplex measures: volume, diameter,
//! thickness, orientation, and the affine dilatation to the regular model.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Point = Vec<f64>;

/// A k-simplex realized in N-dimensional Euclidean space, k = #vertices - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanSimplex {
    pub vertices: Vec<Point>,
}

impl EuclideanSimplex {
    pub fn new(vertices: Vec<Point>) -> Self {
        assert!(!vertices.is_empty(), "simplex needs at least one vertex");
        let dim = vertices[0].len();
        assert!(
            vertices.iter().all(|v| v.len() == dim),
            "mixed ambient dimensions"
        );
        Self { vertices }
    }

    /// Intrinsic dimension k.
    pub fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn volume(&self) -> f64 {
        simplex_volume(&self.vertices)
    }

    pub fn diameter(&self) -> f64 {
        simplex_diameter(&self.vertices)
    }

    pub fn thickness(&self) -> f64 {
        thickness(&self.vertices)
    }
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean j-volume of the simplex spanned by `vertices` (j = #vertices-1).
/// A single point has volume 1 by convention; degenerate simplices yield 0.
pub fn simplex_volume(vertices: &[Point]) -> f64 {
    assert!(!vertices.is_empty());
    let j = vertices.len() - 1;
    if j == 0 {
        return 1.0;
    }
    let n = vertices[0].len();
    let e = DMatrix::from_fn(n, j, |r, c| vertices[c + 1][r] - vertices[0][r]);
    let gram = e.tr_mul(&e);
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(j)
}

/// Max pairwise distance; 0 for a point.
pub fn simplex_diameter(vertices: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..vertices.len() {
        for l in (i + 1)..vertices.len() {
            d = d.max(dist(&vertices[i], &vertices[l]));
        }
    }
    d
}

/// Thickness φ ∈ [0, 1]: min over all faces σ of dimension ≥ 2 of
/// Vol_j(σ)/diam(σ)^j, capped at 1. Faces of dimension 0 and 1 contribute
/// exactly 1, so points and segments have φ = 1. Degenerate faces give 0.
pub fn thickness(vertices: &[Point]) -> f64 {
    let m = vertices.len();
    let mut phi = 1.0f64;
    // m <= 6 in practice (tested through dimension 4); subsets are cheap
    for mask in 1u32..(1 << m) {
        let cnt = mask.count_ones() as usize;
        if cnt < 3 {
            continue;
        }
        let face: Vec<Point> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| vertices[i].clone())
            .collect();
        let j = cnt - 1;
        let d = simplex_diameter(&face);
        let ratio = if d <= 0.0 {
            0.0
        } else {
            simplex_volume(&face) / d.powi(j as i32)
        };
        phi = phi.min(ratio.min(1.0));
    }
    phi
}

/// Sign of the determinant of the edge-vector matrix of an n-simplex in
/// n-space: +1, -1, or 0 when (numerically) degenerate.
pub fn orientation_sign(vertices: &[Point]) -> i8 {
    let n = vertices[0].len();
    assert_eq!(vertices.len(), n + 1, "need n+1 vertices in n-space");
    let e = DMatrix::from_fn(n, n, |r, c| vertices[c + 1][r] - vertices[0][r]);
    let mut scale = 1.0f64;
    for c in 0..n {
        scale *= e.column(c).norm();
    }
    let det = e.determinant();
    if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

/// Vertices of the regular n-simplex with unit edge length (hence unit
/// diameter), centered at the origin of n-space.
pub fn regular_simplex(n: usize) -> Vec<Point> {
    // start from e_1..e_{n+1} in R^{n+1}, center, project onto the span
    let m = n + 1;
    let mut pts: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let mut v = DVector::zeros(m);
            v[i] = 1.0;
            v
        })
        .collect();
    let centroid: DVector<f64> = pts.iter().sum::<DVector<f64>>() / m as f64;
    for p in &mut pts {
        *p -= &centroid;
    }
    // orthonormal basis of the centered span via Gram-Schmidt on p_1..p_n
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for p in pts.iter().skip(1) {
        let mut w = p.clone();
        for b in &basis {
            let c = w.dot(b);
            w -= b * c;
        }
        let norm = w.norm();
        assert!(norm > 1e-12);
        basis.push(w / norm);
    }
    // edge length of the centered standard simplex is sqrt(2); rescale to 1
    let scale = 1.0 / 2.0f64.sqrt();
    pts.iter()
        .map(|p| basis.iter().map(|b| p.dot(b) * scale).collect())
        .collect()
}

/// Local orthonormal coordinates of a k-simplex living in N-space (N >= k):
/// returns the (k x k+1) matrix of vertex coordinates in a basis of the
/// simplex's affine hull, first vertex at the origin.
pub fn local_coordinates(vertices: &[Point]) -> Result<Vec<Point>> {
    let k = vertices.len() - 1;
    let n = vertices[0].len();
    assert!(k <= n);
    let e = DMatrix::from_fn(n, k, |r, c| vertices[c + 1][r] - vertices[0][r]);
    let qr = e.clone().qr();
    let q = qr.q();
    let r = qr.r();
    // degenerate iff some diagonal entry of R vanishes
    let scale = (0..k).map(|c| e.column(c).norm()).fold(1.0, f64::max);
    for i in 0..k {
        if r[(i, i)].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(
                "affinely dependent vertices".to_string(),
            ));
        }
    }
    let mut out = vec![vec![0.0; k]];
    for c in 0..k {
        let col: Vec<f64> = (0..k).map(|rr| {
            // coordinates of edge c in the Q basis = R[..,c]
            if rr <= c {
                r[(rr, c)]
            } else {
                0.0
            }
        }).collect();
        out.push(col);
    }
    let _ = q;
    Ok(out)
}

/// Outer dilatation K_O of the affine map taking this k-simplex onto the
/// regular unit-diameter k-simplex (vertex i -> model vertex i):
/// sigma_max^k / |det| over the singular values of the linear part.
/// Returns +inf for a degenerate simplex.
pub fn affine_dilatation_to_regular(vertices: &[Point]) -> f64 {
    let k = vertices.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let local = match local_coordinates(vertices) {
        Ok(l) => l,
        Err(_) => return f64::INFINITY,
    };
    let model = regular_simplex(k);
    match affine_outer_dilatation(&local, &model) {
        Some(kk) => kk,
        None => f64::INFINITY,
    }
}

/// K_O of the affine map sending the ordered k-simplex `src` (in k-space)
/// onto the ordered k-simplex `dst` (in k-space). None when degenerate.
pub fn affine_outer_dilatation(src: &[Point], dst: &[Point]) -> Option<f64> {
    let k = src.len() - 1;
    assert_eq!(dst.len(), k + 1);
    let es = DMatrix::from_fn(k, k, |r, c| src[c + 1][r] - src[0][r]);
    let ed = DMatrix::from_fn(k, k, |r, c| dst[c + 1][r] - dst[0][r]);
    let inv = es.try_inverse()?;
    let a = ed * inv;
    let det = a.determinant().abs();
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    let sv = a.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    Some(smax.powi(k as i32) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Cayley-Menger determinant oracle for the j-volume of a simplex,
    /// independent of the Gram-matrix route used by `simplex_volume`.
    pub fn cayley_menger_volume(vertices: &[Point]) -> f64 {
        let m = vertices.len();
        let j = m - 1;
        if j == 0 {
            return 1.0;
        }
        let mut b = DMatrix::zeros(m + 1, m + 1);
        for i in 1..=m {
            b[(0, i)] = 1.0;
            b[(i, 0)] = 1.0;
        }
        for i in 0..m {
            for l in 0..m {
                let d = dist(&vertices[i], &vertices[l]);
                b[(i + 1, l + 1)] = d * d;
            }
        }
        let det = b.determinant();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let denom = 2.0f64.powi(j as i32) * factorial(j) * factorial(j);
        (sign * (-1.0f64) * det / denom).max(0.0).sqrt()
    }

    fn pt(coords: &[f64]) -> Point {
        coords.to_vec()
    }

    #[test]
    fn volume_point_is_one() {
        assert_eq!(simplex_volume(&[pt(&[3.0, 4.0])]), 1.0);
    }

    #[test]
    fn volume_unit_segment() {
        assert_relative_eq!(
            simplex_volume(&[pt(&[0.0]), pt(&[1.0])]),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn volume_equilateral_triangle() {
        let s3 = 3.0f64.sqrt();
        let v = simplex_volume(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, s3 / 2.0])]);
        assert_relative_eq!(v, s3 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn volume_regular_tetrahedron_vs_cayley_menger() {
        let verts = regular_tetrahedron();
        let v = simplex_volume(&verts);
        assert_relative_eq!(v, 2.0f64.sqrt() / 12.0, epsilon = 1e-12);
        assert_relative_eq!(v, cayley_menger_volume(&verts), epsilon = 1e-12);
    }

    fn regular_tetrahedron() -> Vec<Point> {
        regular_simplex(3)
    }

    #[test]
    fn regular_simplex_has_unit_edges() {
        for n in 1..=4 {
            let pts = regular_simplex(n);
            assert_eq!(pts.len(), n + 1);
            for i in 0..pts.len() {
                for l in (i + 1)..pts.len() {
                    assert_relative_eq!(dist(&pts[i], &pts[l]), 1.0, epsilon = 1e-12);
                }
            }
            // centered
            for c in 0..n {
                let s: f64 = pts.iter().map(|p| p[c]).sum();
                assert!(s.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(simplex_diameter(&[pt(&[2.0, 1.0])]), 0.0);
        assert_relative_eq!(
            simplex_diameter(&[pt(&[0.0]), pt(&[1.0])]),
            1.0,
            epsilon = 1e-15
        );
        let d = simplex_diameter(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]);
        assert_relative_eq!(d, 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn thickness_equilateral() {
        let s3 = 3.0f64.sqrt();
        let phi = thickness(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, s3 / 2.0])]);
        assert_relative_eq!(phi, s3 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn thickness_collinear_is_zero() {
        let phi = thickness(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[2.0, 0.0])]);
        assert_eq!(phi, 0.0);
    }

    #[test]
    fn thickness_right_triangle() {
        let phi = thickness(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]);
        assert_relative_eq!(phi, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn thickness_regular_tetrahedron() {
        let phi = thickness(&regular_tetrahedron());
        assert_relative_eq!(phi, 2.0f64.sqrt() / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn thickness_point_and_segment_are_one() {
        assert_eq!(thickness(&[pt(&[0.0])]), 1.0);
        assert_eq!(thickness(&[pt(&[0.0]), pt(&[2.0])]), 1.0);
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(
            orientation_sign(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]),
            1
        );
        assert_eq!(
            orientation_sign(&[pt(&[0.0, 0.0]), pt(&[0.0, 1.0]), pt(&[1.0, 0.0])]),
            -1
        );
        assert_eq!(
            orientation_sign(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[2.0, 0.0])]),
            0
        );
    }

    #[test]
    fn thickness_face_bound_by_brute_force() {
        // phi(tau) <= Vol_j(sigma)/diam^j(sigma) for every face of dim >= 2
        let mut rng = simple_rng(7);
        for _ in 0..50 {
            let m = 4;
            let verts: Vec<Point> = (0..=m)
                .map(|_| (0..m).map(|_| rng()).collect())
                .collect();
            let phi = thickness(&verts);
            for mask in 1u32..(1 << (m + 1)) {
                if mask.count_ones() < 3 {
                    continue;
                }
                let face: Vec<Point> = (0..=m)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| verts[i].clone())
                    .collect();
                let j = face.len() - 1;
                let ratio = simplex_volume(&face) / simplex_diameter(&face).powi(j as i32);
                assert!(phi <= ratio + 1e-12);
            }
        }
    }

    #[test]
    fn volume_matches_cayley_menger_random() {
        let mut rng = simple_rng(42);
        for dim in 1..=4usize {
            for _ in 0..250 {
                let amb = dim + (rng().abs() * 2.0) as usize;
                let verts: Vec<Point> = (0..=dim)
                    .map(|_| (0..amb).map(|_| rng() * 2.0).collect())
                    .collect();
                let a = simplex_volume(&verts);
                let b = cayley_menger_volume(&verts);
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.max(b)), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn thickness_rigid_motion_and_scale_invariance() {
        let mut rng = simple_rng(11);
        for _ in 0..50 {
            let verts: Vec<Point> = (0..4).map(|_| (0..3).map(|_| rng()).collect()).collect();
            let phi = thickness(&verts);
            // random rotation via QR of a random matrix
            let m = DMatrix::from_fn(3, 3, |_, _| rng());
            let q = m.qr().q();
            let shift: Vec<f64> = (0..3).map(|_| rng() * 5.0).collect();
            let s = 0.1 + rng().abs() * 3.0;
            let moved: Vec<Point> = verts
                .iter()
                .map(|v| {
                    let x = DVector::from_vec(v.clone());
                    let y = &q * x * s;
                    (0..3).map(|i| y[i] + shift[i]).collect()
                })
                .collect();
            assert_relative_eq!(thickness(&moved), phi, epsilon = 1e-9);
        }
    }

    #[test]
    fn affine_dilatation_right_isoceles_to_equilateral() {
        let src = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])];
        let s3 = 3.0f64.sqrt();
        let dst = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, s3 / 2.0])];
        let k = affine_outer_dilatation(&src, &dst).unwrap();
        assert_relative_eq!(k, s3, epsilon = 1e-12);
    }

    #[test]
    fn affine_dilatation_to_regular_equilateral_is_one() {
        let s3 = 3.0f64.sqrt();
        let tri = vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.5, s3 / 2.0])];
        assert_relative_eq!(affine_dilatation_to_regular(&tri), 1.0, epsilon = 1e-9);
    }

    // deterministic quasi-random source for tests without pulling rand here
    fn simple_rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        }
    }
}
