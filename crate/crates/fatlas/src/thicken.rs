//! Thickness optimization: coordinate-wise stochastic ascent on the
//! minimum thickness over simplices incident to one vertex at a time, with
//! per-vertex trust regions halved on rejection. Combinatorics never change;
//! accepted moves cannot flip a simplex's geometric orientation and cannot
//! increase the worst incident affine dilatation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::simplex::{self, Point};

#[derive(Debug, Clone)]
pub struct ThickenOptions {
    /// Number of single-vertex proposals to evaluate.
    pub budget: usize,
    pub phi_target: f64,
    /// Cap on the total displacement of any vertex from its input position.
    pub max_move: f64,
    pub seed: u64,
}

impl Default for ThickenOptions {
    fn default() -> Self {
        Self {
            budget: 2000,
            phi_target: 0.4,
            max_move: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThickenOutcome {
    pub phi_before: f64,
    pub phi_after: f64,
    pub accepted_moves: usize,
    pub proposals: usize,
    pub reached_target: bool,
}

/// Geometric orientation signature of a simplex: determinant sign when the
/// intrinsic and ambient dimensions agree, the plane normal for a triangle
/// in 3-space, nothing otherwise.
enum OrientSig {
    Det(i8),
    Normal([f64; 3]),
    None,
}

fn orient_sig(verts: &[Point]) -> OrientSig {
    let k = verts.len() - 1;
    let n = verts[0].len();
    if k == n {
        OrientSig::Det(simplex::orientation_sign(verts))
    } else if k == 2 && n == 3 {
        let u: Vec<f64> = (0..3).map(|i| verts[1][i] - verts[0][i]).collect();
        let w: Vec<f64> = (0..3).map(|i| verts[2][i] - verts[0][i]).collect();
        OrientSig::Normal([
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
        ])
    } else {
        OrientSig::None
    }
}

fn sig_compatible(before: &OrientSig, after: &OrientSig) -> bool {
    match (before, after) {
        (OrientSig::Det(a), OrientSig::Det(b)) => *a == 0 || *a == *b,
        (OrientSig::Normal(a), OrientSig::Normal(b)) => {
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() > 0.0
        }
        _ => true,
    }
}

/// Perturb vertex positions to raise the minimum thickness. The simplex
/// index tuples, orientations, and colors are returned untouched; only
/// coordinates move. Monotone: the global minimum thickness never
/// decreases across accepted iterations.
pub fn thicken(
    complex: &SimplicialComplex,
    opts: &ThickenOptions,
) -> (SimplicialComplex, ThickenOutcome) {
    let mut out = complex.clone();
    let nv = out.vertices.len();
    let ns = out.simplices.len();
    let mut phi: Vec<f64> = (0..ns).map(|s| simplex::thickness(&out.realized(s))).collect();
    let phi_before = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut outcome = ThickenOutcome {
        phi_before,
        phi_after: phi_before,
        accepted_moves: 0,
        proposals: 0,
        reached_target: phi_before >= opts.phi_target,
    };
    if ns == 0 || nv == 0 || outcome.reached_target || opts.budget == 0 {
        return (out, outcome);
    }

    // vertex -> incident top simplices (and local index within each)
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for (sid, t) in out.simplices.iter().enumerate() {
        for (li, &v) in t.iter().enumerate() {
            incident[v].push((sid, li));
        }
    }

    let original = out.vertices.clone();
    let mut radius = vec![opts.max_move * 0.5; nv];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let dim = out.ambient;

    for _ in 0..opts.budget {
        outcome.proposals += 1;
        let v = rng.gen_range(0..nv);
        if incident[v].is_empty() {
            continue;
        }
        let before: Vec<(f64, f64, OrientSig)> = incident[v]
            .iter()
            .map(|&(sid, _)| {
                let verts = out.realized(sid);
                (
                    phi[sid],
                    simplex::affine_dilatation_to_regular(&verts),
                    orient_sig(&verts),
                )
            })
            .collect();
        let old_min = before.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        let old_max_k = before.iter().map(|x| x.1).fold(0.0f64, f64::max);

        let delta: Vec<f64> = (0..dim)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * radius[v])
            .collect();
        let moved: Vec<f64> = out.vertices[v].iter().zip(&delta).map(|(x, d)| x + d).collect();
        let disp = simplex::dist(&moved, &original[v]);
        if disp > opts.max_move {
            radius[v] = (radius[v] * 0.5).max(1e-12);
            continue;
        }

        // evaluate incident simplices at the proposed position
        let mut ok = true;
        let mut new_phis = Vec::with_capacity(incident[v].len());
        let mut new_min = f64::INFINITY;
        let mut new_max_k = 0.0f64;
        for (idx, &(sid, li)) in incident[v].iter().enumerate() {
            let mut verts = out.realized(sid);
            for (x, d) in verts[li].iter_mut().zip(&delta) {
                *x += d;
            }
            let p = simplex::thickness(&verts);
            let k = simplex::affine_dilatation_to_regular(&verts);
            let sig = orient_sig(&verts);
            if !sig_compatible(&before[idx].2, &sig) {
                ok = false;
                break;
            }
            new_min = new_min.min(p);
            new_max_k = new_max_k.max(k);
            new_phis.push(p);
        }
        if !ok || new_min <= old_min || new_max_k > old_max_k + 1e-12 {
            radius[v] = (radius[v] * 0.5).max(1e-12);
            continue;
        }

        // accept
        for (x, d) in out.vertices[v].iter_mut().zip(&delta) {
            *x += d;
        }
        if let Some(coords) = &mut out.simplex_coords {
            for &(sid, li) in &incident[v] {
                for (x, d) in coords[sid][li].iter_mut().zip(&delta) {
                    *x += d;
                }
            }
        }
        for (idx, &(sid, _)) in incident[v].iter().enumerate() {
            phi[sid] = new_phis[idx];
        }
        radius[v] = (radius[v] * 1.5).min(opts.max_move * 0.5);
        outcome.accepted_moves += 1;
        let global = phi.iter().cloned().fold(f64::INFINITY, f64::min);
        outcome.phi_after = global;
        if global >= opts.phi_target {
            outcome.reached_target = true;
            break;
        }
    }
    let global = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome.phi_after = global;
    outcome.reached_target = global >= opts.phi_target;
    (out, outcome)
}
