//! Small reference complexes used across tests and demos.

use crate::complex::SimplicialComplex;
use crate::simplex::regular_simplex;

/// Regular octahedron boundary: vertices at +/- e_i, eight triangles.
pub fn octahedron() -> SimplicialComplex {
    let vertices = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let mut simplices = Vec::new();
    for &x in &[0usize, 1] {
        for &y in &[2usize, 3] {
            for &z in &[4usize, 5] {
                simplices.push(vec![x, y, z]);
            }
        }
    }
    SimplicialComplex::new(2, 3, vertices, simplices)
}

/// Rescaled so every triangle is equilateral with unit side.
pub fn unit_octahedron() -> SimplicialComplex {
    let mut c = octahedron();
    let s = 1.0 / 2.0f64.sqrt();
    for v in &mut c.vertices {
        for x in v.iter_mut() {
            *x *= s;
        }
    }
    c
}

/// Boundary of the regular k-simplex: a closed (k-1)-pseudomanifold with
/// k+1 facets, realized in k-space.
pub fn simplex_boundary(k: usize) -> SimplicialComplex {
    let vertices = regular_simplex(k);
    let m = k + 1;
    let mut simplices = Vec::new();
    for omit in 0..m {
        simplices.push((0..m).filter(|&i| i != omit).collect());
    }
    SimplicialComplex::new(k - 1, k, vertices, simplices)
}

/// Boundary of a regular tetrahedron (four triangles in 3-space).
pub fn tetrahedron_boundary() -> SimplicialComplex {
    simplex_boundary(3)
}

/// A single solid k-simplex as a pure k-complex.
pub fn solid_simplex(k: usize) -> SimplicialComplex {
    let vertices = regular_simplex(k);
    SimplicialComplex::new(k, k, vertices, vec![(0..=k).collect()])
}

/// One triangle in the plane: (0,0), (1,0), (0,1).
pub fn single_triangle() -> SimplicialComplex {
    SimplicialComplex::new(
        2,
        2,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![0, 1, 2]],
    )
}
