//! Piecewise-affine Alexander maps onto the model sphere: every colored
//! n-simplex is sent affinely onto one fixed regular model simplex, and
//! simplices of the negative color are composed with the radial fold that
//! exchanges the model simplex with its complement in R-hat^n. The result is
//! a quasiregular branched cover whose outer dilatation we measure both in
//! closed form (affine pieces) and by finite differences (folded pieces).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::simplex::{self, Point};

/// Finite-difference step for folded-piece Jacobians, in units of the model
/// diameter (which is 1).
const FD_STEP: f64 = 1e-6;
/// Samples closer than this (again in model-diameter units) to the fold
/// center or to the model boundary are rejected: the fold blows up at the
/// center and the map is only piecewise smooth across the boundary.
const REJECT_DIST: f64 = 1e-3;

/// A point of the target R-hat^n = R^n united with the point at infinity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TargetPoint {
    Finite(Point),
    Infinity,
}

impl TargetPoint {
    pub fn finite(&self) -> Option<&Point> {
        match self {
            TargetPoint::Finite(p) => Some(p),
            TargetPoint::Infinity => None,
        }
    }
}

/// The common target of all simplex maps: the regular n-simplex with unit
/// diameter centered at the origin of R^n, together with the cached
/// barycentric solver.
#[derive(Debug, Clone)]
pub struct ModelTarget {
    pub n: usize,
    pub vertices: Vec<Point>,
    /// Fold center: the barycenter of the model simplex (the origin).
    pub center: Point,
    /// Altitude of the model simplex: converts a barycentric coordinate into
    /// the Euclidean distance to the opposite facet.
    pub altitude: f64,
    /// Inverse of the homogeneous vertex matrix; maps [y; 1] to barycentrics.
    bary_inv: DMatrix<f64>,
}

impl ModelTarget {
    pub fn new(n: usize) -> Self {
        let vertices = simplex::regular_simplex(n);
        let m = DMatrix::from_fn(n + 1, n + 1, |r, c| {
            if r < n {
                vertices[c][r]
            } else {
                1.0
            }
        });
        let bary_inv = m.try_inverse().expect("regular simplex is nondegenerate");
        // altitude of the regular unit-edge n-simplex
        let altitude = ((n as f64 + 1.0) / (2.0 * n as f64)).sqrt();
        ModelTarget {
            n,
            vertices,
            center: vec![0.0; n],
            altitude,
            bary_inv,
        }
    }

    /// Barycentric coordinates of y with respect to the model vertices.
    pub fn barycentric(&self, y: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_fn(self.n + 1, |r, _| if r < self.n { y[r] } else { 1.0 });
        (&self.bary_inv * rhs).iter().cloned().collect()
    }

    /// Radial gauge of the fold: 0 at the center, 1 on the boundary of the
    /// model simplex, affine along every ray from the center.
    pub fn gauge(&self, y: &[f64]) -> f64 {
        let lam = self.barycentric(y);
        let min = lam.iter().cloned().fold(f64::INFINITY, f64::min);
        1.0 - (self.n as f64 + 1.0) * min
    }
}

/// The radial fold about the model center c: along each ray it sends
/// c + t(b - c), with b the boundary point of the ray, to c + (1/t)(b - c).
/// It fixes the boundary pointwise, sends the center to infinity, and
/// exchanges the model simplex with its complement in R-hat^n.
pub fn radial_fold(model: &ModelTarget, y: &[f64]) -> TargetPoint {
    let t = model.gauge(y);
    if t <= 0.0 {
        return TargetPoint::Infinity;
    }
    // y - c = t (b - c), so c + (1/t)(b - c) = c + (y - c) / t^2
    let out = model
        .center
        .iter()
        .zip(y)
        .map(|(c, yy)| c + (yy - c) / (t * t))
        .collect();
    TargetPoint::Finite(out)
}

/// An affine map x -> M x + b between n-spaces.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &[f64]) -> Point {
        let v = DVector::from_column_slice(x);
        (&self.m * v + &self.b).iter().cloned().collect()
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    /// Outer dilatation sigma_max^n / |det| of the linear part.
    pub fn outer_dilatation(&self) -> f64 {
        let det = self.det().abs();
        if det <= 0.0 || !det.is_finite() {
            return f64::INFINITY;
        }
        let sv = self.m.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0f64, f64::max);
        smax.powi(self.m.nrows() as i32) / det
    }
}

/// The affine map carrying the ordered n-simplex `src` (n+1 points in
/// n-space) onto the ordered n-simplex `dst`, vertex i to vertex i.
pub fn affine_to_model(src: &[Point], dst: &[Point]) -> Result<AffineMap> {
    let n = src[0].len();
    assert_eq!(src.len(), n + 1, "need n+1 vertices in n-space");
    assert_eq!(dst.len(), n + 1);
    let es = DMatrix::from_fn(n, n, |r, c| src[c + 1][r] - src[0][r]);
    let ed = DMatrix::from_fn(n, n, |r, c| dst[c + 1][r] - dst[0][r]);
    let scale = (0..n).map(|c| es.column(c).norm()).fold(1.0, f64::max);
    let inv = es
        .try_inverse()
        .filter(|_| scale > 0.0)
        .ok_or_else(|| Error::Degenerate("source simplex is affinely degenerate".to_string()))?;
    let m = ed * inv;
    let v0 = DVector::from_column_slice(&src[0]);
    let q0 = DVector::from_column_slice(&dst[0]);
    let b = q0 - &m * v0;
    Ok(AffineMap { m, b })
}

/// The assembled quasiregular map of a colored, labeled complex: per-simplex
/// affine maps onto the model, with the radial fold composed on one color
/// class.
pub struct QmMap {
    pub model: ModelTarget,
    pub n: usize,
    /// Per-vertex model labels (distinct within every top simplex).
    pub labels: Vec<usize>,
    /// Per-simplex fold flags, derived from the affine orientation and
    /// checked against the chessboard colors.
    pub fold: Vec<bool>,
    pub simplices: Vec<Vec<usize>>,
    /// Oriented local coordinates of each realized simplex (frame chosen so
    /// that the coordinate orientation matches the combinatorial one).
    pub locals: Vec<Vec<Point>>,
    /// Affine map from the local chart of simplex s onto the model, sending
    /// each vertex to the model vertex of its label.
    pub affines: Vec<AffineMap>,
}

/// The assembled piecewise map under its classical name.
pub type AlexanderMap = QmMap;

/// A dilatation measurement at one accepted sample: the local outer
/// dilatation and the Jacobian determinant in the oriented chart.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DilatationSample {
    pub k: f64,
    pub jf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DilatationReport {
    pub samples_requested: usize,
    pub samples_accepted: usize,
    pub k_max: f64,
    pub k_per_simplex: Vec<f64>,
    pub min_jf: f64,
    pub quasiregular: bool,
}

/// Infer per-vertex model labels by propagating across shared facets: two
/// simplices sharing a facet must agree on the labels of the shared vertices,
/// which forces the label of each remaining vertex.
fn infer_labels(complex: &SimplicialComplex) -> Result<Vec<usize>> {
    let n = complex.dim;
    let mut labels: Vec<Option<usize>> = vec![None; complex.vertices.len()];
    let adj = complex.dual_adjacency();
    let mut seen = vec![false; complex.simplices.len()];
    for start in 0..complex.simplices.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        for (i, &v) in complex.simplices[start].iter().enumerate() {
            match labels[v] {
                None => labels[v] = Some(i),
                Some(l) if l == i => {}
                Some(_) => return Err(Error::LabelConflict(v)),
            }
        }
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
                // complete/check labels of t from the already-labeled pool
                let mut used = [false; 16];
                let mut missing: Vec<usize> = Vec::new();
                for &v in &complex.simplices[t] {
                    match labels[v] {
                        Some(l) => {
                            if used[l] {
                                return Err(Error::LabelConflict(v));
                            }
                            used[l] = true;
                        }
                        None => missing.push(v),
                    }
                }
                if missing.len() == 1 {
                    let free: Vec<usize> = (0..=n).filter(|&l| !used[l]).collect();
                    labels[missing[0]] = Some(free[0]);
                }
            }
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or(Error::LabelConflict(v)))
        .collect()
}

/// Local coordinates of a realized simplex with the frame chosen so that the
/// coordinate orientation equals the given combinatorial sign. For simplices
/// already living in n-space the realized coordinates are used as-is.
fn oriented_local_coords(realized: &[Point], n: usize, sign: i8) -> Result<Vec<Point>> {
    let ambient = realized[0].len();
    if ambient == n {
        return Ok(realized.to_vec());
    }
    let mut local = simplex::local_coordinates(realized)?;
    let geo = simplex::orientation_sign(&local);
    if geo == 0 {
        return Err(Error::Degenerate("degenerate simplex".to_string()));
    }
    if geo != sign {
        for p in &mut local {
            p[n - 1] = -p[n - 1];
        }
    }
    Ok(local)
}

/// Assemble the piecewise map of a colored complex: every simplex is sent
/// affinely onto the model (vertex to model vertex of its label); simplices
/// whose affine part reverses orientation are composed with the radial fold.
/// The fold pattern must coincide with the chessboard coloring (up to one
/// global swap of the two colors), otherwise the complex does not carry an
/// Alexander map and a contract error is returned.
pub fn assemble_qm_map(complex: &SimplicialComplex) -> Result<QmMap> {
    let n = complex.dim;
    let colors = complex
        .colors
        .clone()
        .ok_or_else(|| Error::Contract("complex has no chessboard coloring".to_string()))?;
    let labels = match &complex.model_labels {
        Some(l) => l.clone(),
        None => infer_labels(complex)?,
    };
    for t in &complex.simplices {
        let mut seen = vec![false; n + 1];
        for &v in t {
            if labels[v] > n || seen[labels[v]] {
                return Err(Error::LabelConflict(v));
            }
            seen[labels[v]] = true;
        }
    }
    let model = ModelTarget::new(n);
    let signs = complex.orient()?;

    let mut locals = Vec::with_capacity(complex.simplices.len());
    let mut affines = Vec::with_capacity(complex.simplices.len());
    let mut fold = Vec::with_capacity(complex.simplices.len());
    for (sid, t) in complex.simplices.iter().enumerate() {
        let realized = complex.realized(sid);
        let local = oriented_local_coords(&realized, n, signs[sid])?;
        let dst: Vec<Point> = t.iter().map(|&v| model.vertices[labels[v]].clone()).collect();
        let a = affine_to_model(&local, &dst)?;
        fold.push(a.det() < 0.0);
        locals.push(local);
        affines.push(a);
    }

    // the fold pattern must be one of the two color classes, consistently
    let direct = fold
        .iter()
        .zip(&colors)
        .all(|(&f, &c)| f == (c == 1));
    let swapped = fold
        .iter()
        .zip(&colors)
        .all(|(&f, &c)| f == (c == 0));
    if !direct && !swapped {
        return Err(Error::Contract(
            "fold orientations do not match the chessboard coloring".to_string(),
        ));
    }

    Ok(QmMap {
        model,
        n,
        labels,
        fold,
        simplices: complex.simplices.clone(),
        locals,
        affines,
    })
}

impl QmMap {
    /// Evaluate the map at the point of simplex `sid` with barycentric
    /// coordinates `lambda` (with respect to the simplex's sorted vertex
    /// tuple).
    pub fn eval(&self, sid: usize, lambda: &[f64]) -> TargetPoint {
        let t = &self.simplices[sid];
        let mut y = vec![0.0; self.n];
        for (&v, &l) in t.iter().zip(lambda) {
            for (yy, q) in y.iter_mut().zip(&self.model.vertices[self.labels[v]]) {
                *yy += l * q;
            }
        }
        if self.fold[sid] {
            radial_fold(&self.model, &y)
        } else {
            TargetPoint::Finite(y)
        }
    }

    /// Evaluate at a point given in the simplex's oriented local chart.
    pub fn eval_local(&self, sid: usize, x: &[f64]) -> TargetPoint {
        let y = self.affines[sid].apply(x);
        if self.fold[sid] {
            radial_fold(&self.model, &y)
        } else {
            TargetPoint::Finite(y)
        }
    }

    fn local_point(&self, sid: usize, lambda: &[f64]) -> Point {
        let mut x = vec![0.0; self.n];
        for (p, &l) in self.locals[sid].iter().zip(lambda) {
            for (xx, c) in x.iter_mut().zip(p) {
                *xx += l * c;
            }
        }
        x
    }
}

/// Pointwise outer dilatation of the assembled map at a sample of simplex
/// `sid`. Affine pieces use the closed form sigma_max^n / |det|; folded
/// pieces use a central-difference Jacobian in the oriented local chart.
/// Folded samples within `REJECT_DIST` of the fold center or of the model
/// boundary are rejected (None).
pub fn dilatation_at(map: &QmMap, sid: usize, lambda: &[f64]) -> Option<DilatationSample> {
    if !map.fold[sid] {
        let a = &map.affines[sid];
        return Some(DilatationSample {
            k: a.outer_dilatation(),
            jf: a.det(),
        });
    }
    let x = map.local_point(sid, lambda);
    let y = map.affines[sid].apply(&x);
    // rejection: distance to the fold center and to the model boundary
    let r: f64 = y
        .iter()
        .zip(&map.model.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if r < REJECT_DIST {
        return None;
    }
    let lam_model = map.model.barycentric(&y);
    let min_l = lam_model.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_l * map.model.altitude < REJECT_DIST {
        return None;
    }
    // central-difference Jacobian of fold . affine in the local chart
    let n = map.n;
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += FD_STEP;
        xm[c] -= FD_STEP;
        let fp = map.eval_local(sid, &xp).finite()?.clone();
        let fm = map.eval_local(sid, &xm).finite()?.clone();
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    let det = j.determinant();
    if det.abs() <= 0.0 || !det.is_finite() {
        return None;
    }
    let sv = j.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    Some(DilatationSample {
        k: smax.powi(n as i32) / det.abs(),
        jf: det,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn sample_barycentric<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // exponential spacings give the uniform distribution on the simplex
    let mut e: Vec<f64> = (0..=n)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    e
}

/// Sampled dilatation report over the whole complex: `per_simplex` accepted
/// samples are drawn uniformly in each simplex (rejected folded samples are
/// redrawn, with a bounded retry budget). Quasiregularity demands a positive
/// Jacobian and |f'|^n <= K J_f at every accepted sample; both are asserted
/// before the report is returned.
pub fn dilatation_report(map: &QmMap, per_simplex: usize, seed: u64) -> Result<DilatationReport> {
    if per_simplex == 0 {
        return Err(Error::Contract("empty sampling budget".to_string()));
    }
    if map.simplices.is_empty() {
        return Err(Error::EmptyComplex);
    }
    let n = map.n;
    let per: Vec<(f64, f64, usize)> = (0..map.simplices.len())
        .into_par_iter()
        .map(|sid| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix64(sid as u64));
            let mut k_max = 0.0f64;
            let mut jf_min = f64::INFINITY;
            let mut accepted = 0usize;
            let mut attempts = 0usize;
            while accepted < per_simplex && attempts < 50 * per_simplex {
                attempts += 1;
                let lam = sample_barycentric(&mut rng, n);
                if let Some(s) = dilatation_at(map, sid, &lam) {
                    accepted += 1;
                    k_max = k_max.max(s.k);
                    jf_min = jf_min.min(s.jf);
                    if !map.fold[sid] {
                        // affine pieces have constant dilatation
                        break;
                    }
                }
            }
            (k_max, jf_min, accepted)
        })
        .collect();
    let k_per_simplex: Vec<f64> = per.iter().map(|p| p.0).collect();
    let min_jf = per.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let accepted: usize = per.iter().map(|p| p.2).sum();
    let k_max = k_per_simplex.iter().cloned().fold(0.0f64, f64::max);
    let quasiregular = min_jf > 0.0 && k_max.is_finite();
    if !quasiregular {
        return Err(Error::Contract(format!(
            "quasiregularity violated: min J_f = {min_jf:e}, K = {k_max:e}"
        )));
    }
    // 0 < |f'|^n <= K J_f at every accepted sample, i.e. k <= k_max with
    // jf > 0; both hold by construction of k_max and the min_jf check, and
    // are re-asserted here for the record.
    assert!(per.iter().all(|p| p.0 <= k_max && p.1 > 0.0));
    Ok(DilatationReport {
        samples_requested: per_simplex * map.simplices.len(),
        samples_accepted: accepted,
        k_max,
        k_per_simplex,
        min_jf,
        quasiregular,
    })
}

/// FD outer dilatation of the bare radial fold at an interior point of the
/// model simplex, with the same rejection rules as `dilatation_at`.
pub fn fold_dilatation(model: &ModelTarget, y: &[f64]) -> Option<DilatationSample> {
    let n = model.n;
    let r: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if r < REJECT_DIST {
        return None;
    }
    let lam = model.barycentric(y);
    if lam.iter().cloned().fold(f64::INFINITY, f64::min) * model.altitude < REJECT_DIST {
        return None;
    }
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[c] += FD_STEP;
        ym[c] -= FD_STEP;
        let fp = radial_fold(model, &yp).finite()?.clone();
        let fm = radial_fold(model, &ym).finite()?.clone();
        for r in 0..n {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * FD_STEP);
        }
    }
    let det = j.determinant();
    if det.abs() <= 0.0 || !det.is_finite() {
        return None;
    }
    let sv = j.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    Some(DilatationSample {
        k: smax.powi(n as i32) / det.abs(),
        jf: det,
    })
}

/// The branching set of the assembled map: the (n-2)-skeleton of the
/// complex. Across every (n-1)-face the map is a local homeomorphism (one
/// side lands inside the model simplex, the folded side in its complement);
/// only at the (n-2)-faces can local injectivity fail.
pub fn branching_set(complex: &SimplicialComplex) -> Vec<Vec<usize>> {
    let n = complex.dim;
    if n < 2 {
        return Vec::new();
    }
    complex
        .faces_map(n - 2)
        .into_keys()
        .collect()
}

/// Two-sided locality check at interior (n-1)-faces: slightly inside each of
/// the two simplices sharing a face, the images must land on opposite sides
/// of the model boundary (inside the model simplex on the unfolded side,
/// outside on the folded side).
pub fn check_fold_locality(map: &QmMap, complex: &SimplicialComplex) -> Result<()> {
    let n = map.n;
    let faces = complex.faces_map(n - 1);
    let offsets = [0.5, 0.25, 0.75];
    for (face, owners) in &faces {
        if owners.len() != 2 {
            continue;
        }
        let (s, t) = (owners[0], owners[1]);
        if map.fold[s] == map.fold[t] {
            return Err(Error::Contract(format!(
                "fold flags agree across shared face {face:?}"
            )));
        }
        for &alpha in &offsets {
            for &sid in &[s, t] {
                let tup = &map.simplices[sid];
                let free = tup.iter().position(|v| !face.contains(v)).unwrap();
                // weight eps on the off-face vertex, the rest split over the
                // face vertices as (alpha, 1-alpha, ...)
                let mut lam = vec![0.0; n + 1];
                let eps = 1e-3;
                lam[free] = eps;
                let mut w = alpha;
                for i in (0..=n).filter(|&i| i != free) {
                    lam[i] = (1.0 - eps) * w;
                    w = 1.0 - w;
                }
                let img = map.eval(sid, &lam);
                let p = img.finite().ok_or_else(|| {
                    Error::Contract("face-adjacent sample mapped to infinity".to_string())
                })?;
                let min_l = map
                    .model
                    .barycentric(p)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                let inside = min_l > 0.0;
                if inside == map.fold[sid] {
                    return Err(Error::Contract(format!(
                        "locality violated across face {face:?} at simplex {sid}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Inverse stereographic projection R-hat^2 -> S^2 (unit sphere, projection
/// from the north pole). Conformal, so it contributes no dilatation.
pub fn target_to_sphere(p: &TargetPoint) -> [f64; 3] {
    match p {
        TargetPoint::Infinity => [0.0, 0.0, 1.0],
        TargetPoint::Finite(q) => {
            let (x, y) = (q[0], q[1]);
            let s = x * x + y * y;
            [2.0 * x / (s + 1.0), 2.0 * y / (s + 1.0), (s - 1.0) / (s + 1.0)]
        }
    }
}
