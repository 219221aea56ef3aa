//! Geodesic shooting (chart-coordinate exponential map, adaptive RK4) and
//! its inverse (log map via damped Newton on the shot endpoint).

use crate::error::{Error, Result};
use crate::manifold::surface::{christoffel, ChartedSurface, SurfaceKind};

/// Geodesic acceleration u''^k = -Γ^k_ij u'^i u'^j. Terms whose velocity
/// factor vanishes are dropped even when the symbol blows up (chart
/// coordinate singularities such as sphere poles on a meridian).
fn acceleration(surface: &ChartedSurface, pos: [f64; 2], vel: [f64; 2]) -> [f64; 2] {
    let gamma = christoffel(surface, pos[0], pos[1]);
    let mut acc = [0.0f64; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let vv = vel[i] * vel[j];
                if vv == 0.0 {
                    continue;
                }
                acc[k] -= gamma[k][i][j] * vv;
            }
        }
    }
    acc
}

fn rk4_endpoint(surface: &ChartedSurface, p: [f64; 2], w: [f64; 2], steps: usize) -> [f64; 4] {
    let mut y = [p[0], p[1], w[0], w[1]];
    let h = 1.0 / steps as f64;
    let f = |y: [f64; 4]| -> [f64; 4] {
        let a = acceleration(surface, [y[0], y[1]], [y[2], y[3]]);
        [y[2], y[3], a[0], a[1]]
    };
    for _ in 0..steps {
        let k1 = f(y);
        let mid1 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = f(mid1);
        let mid2 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = f(mid2);
        let end = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = f(end);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Exponential map in chart coordinates: the time-1 endpoint of the
/// geodesic leaving `p` with chart velocity `w`. Integrated by RK4 with
/// step doubling until two resolutions agree below 1e-7.
pub fn geodesic_shoot(surface: &ChartedSurface, p: [f64; 2], w: [f64; 2]) -> Result<[f64; 2]> {
    if w[0] == 0.0 && w[1] == 0.0 {
        return Ok(p);
    }
    if let SurfaceKind::FlatTorus { .. } = surface.kind {
        return Ok(surface.wrap([p[0] + w[0], p[1] + w[1]]));
    }
    let speed = w[0].hypot(w[1]);
    let mut steps = ((speed * 40.0).ceil() as usize).clamp(32, 512);
    let mut prev = rk4_endpoint(surface, p, w, steps);
    for _ in 0..8 {
        steps *= 2;
        let cur = rk4_endpoint(surface, p, w, steps);
        let err = (cur[0] - prev[0]).hypot(cur[1] - prev[1]);
        if !cur.iter().all(|x| x.is_finite()) {
            return Err(Error::Degenerate(format!(
                "geodesic integration diverged from ({}, {})",
                p[0], p[1]
            )));
        }
        if err < 1e-7 {
            return Ok(surface.wrap([cur[0], cur[1]]));
        }
        prev = cur;
    }
    Err(Error::Degenerate(format!(
        "geodesic integration did not converge from ({}, {})",
        p[0], p[1]
    )))
}

/// Inverse of the exponential map: chart velocity `w` with exp_p(w) = q.
/// Exact for the flat torus; damped Newton on the shot endpoint otherwise.
/// Valid only below injectivity-radius scale, where the problem is
/// well-posed; convergence failure is reported as an error.
pub fn log_map(surface: &ChartedSurface, p: [f64; 2], q: [f64; 2]) -> Result<[f64; 2]> {
    if let SurfaceKind::FlatTorus { .. } = surface.kind {
        return Ok(surface.wrapped_diff(p, q));
    }
    let mut w = surface.wrapped_diff(p, q);
    let mut err_vec = residual(surface, p, w, q)?;
    let mut err = err_vec[0].hypot(err_vec[1]);
    let tol = 1e-9;
    for _ in 0..60 {
        if err < tol {
            return Ok(w);
        }
        // finite-difference Jacobian of the endpoint in w
        let h = 1e-6 * (1.0 + w[0].hypot(w[1]));
        let mut jac = [[0.0f64; 2]; 2];
        for col in 0..2 {
            let mut wp = w;
            let mut wm = w;
            wp[col] += h;
            wm[col] -= h;
            let rp = residual(surface, p, wp, q)?;
            let rm = residual(surface, p, wm, q)?;
            jac[0][col] = (rp[0] - rm[0]) / (2.0 * h);
            jac[1][col] = (rp[1] - rm[1]) / (2.0 * h);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 {
            return Err(Error::LogMapNoConvergence);
        }
        let step = [
            -(jac[1][1] * err_vec[0] - jac[0][1] * err_vec[1]) / det,
            -(-jac[1][0] * err_vec[0] + jac[0][0] * err_vec[1]) / det,
        ];
        // damping: halve until the residual decreases
        let mut t = 1.0f64;
        let mut improved = false;
        for _ in 0..10 {
            let cand = [w[0] + t * step[0], w[1] + t * step[1]];
            if let Ok(r) = residual(surface, p, cand, q) {
                let e = r[0].hypot(r[1]);
                if e < err {
                    w = cand;
                    err_vec = r;
                    err = e;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            return Err(Error::LogMapNoConvergence);
        }
    }
    if err < tol {
        Ok(w)
    } else {
        Err(Error::LogMapNoConvergence)
    }
}

fn residual(
    surface: &ChartedSurface,
    p: [f64; 2],
    w: [f64; 2],
    q: [f64; 2],
) -> Result<[f64; 2]> {
    let end = geodesic_shoot(surface, p, w)?;
    Ok(surface.wrapped_diff(q, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere_point(u: f64, v: f64) -> [f64; 3] {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        [su * cv, su * sv, cu]
    }

    #[test]
    fn zero_velocity_is_identity() {
        let s = ChartedSurface::torus(2.0, 0.5);
        assert_eq!(geodesic_shoot(&s, [0.4, 1.2], [0.0, 0.0]).unwrap(), [0.4, 1.2]);
    }

    #[test]
    fn sphere_meridian_reaches_pole() {
        let s = ChartedSurface::sphere(1.0);
        let end = geodesic_shoot(&s, [PI / 2.0, 1.0], [-PI / 2.0, 0.0]).unwrap();
        assert!(end[0].abs() < 1e-7, "u at endpoint = {}", end[0]);
    }

    #[test]
    fn random_sphere_shots_match_analytic_great_circles() {
        let s = ChartedSurface::sphere(1.0);
        let mut state = 7u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let u = 0.3 + rng() * (PI - 0.6);
            let v = rng() * 6.0;
            let theta = rng() * std::f64::consts::TAU;
            let len = 0.05 + rng() * 0.95;
            // unit-speed chart direction from an angle in the orthonormal
            // frame (du, dv / sin u)
            let w = [len * theta.cos(), len * theta.sin() / u.sin()];
            let end = geodesic_shoot(&s, [u, v], w).unwrap();
            let got = sphere_point(end[0], end[1]);

            // analytic: rotate p toward the unit tangent
            let p3 = sphere_point(u, v);
            let eu = [u.cos() * v.cos(), u.cos() * v.sin(), -u.sin()];
            let ev = [-v.sin(), v.cos(), 0.0]; // normalized d/dv direction
            let t3: Vec<f64> = (0..3)
                .map(|i| theta.cos() * eu[i] + theta.sin() * ev[i])
                .collect();
            let expect: Vec<f64> = (0..3)
                .map(|i| len.cos() * p3[i] + len.sin() * t3[i])
                .collect();
            for i in 0..3 {
                assert!(
                    (got[i] - expect[i]).abs() < 1e-6,
                    "coordinate {i}: {} vs {}",
                    got[i],
                    expect[i]
                );
            }
        }
    }

    #[test]
    fn flat_torus_geodesics_are_straight() {
        let s = ChartedSurface::flat_torus(1.0, 2.0);
        let end = geodesic_shoot(&s, [0.9, 1.9], [0.3, 0.3]).unwrap();
        assert!((end[0] - 0.2).abs() < 1e-12);
        assert!((end[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn log_map_of_same_point_is_zero() {
        let s = ChartedSurface::sphere(2.0);
        let w = log_map(&s, [1.0, 2.0], [1.0, 2.0]).unwrap();
        assert!(w[0].abs() < 1e-9 && w[1].abs() < 1e-9);
    }

    #[test]
    fn log_map_inverts_shooting() {
        let surfaces = vec![
            ChartedSurface::sphere(1.0),
            ChartedSurface::torus(2.0, 0.6),
            ChartedSurface::graph(vec![(2, 0, 0.4), (0, 2, 0.4)], [[-2.0, 2.0], [-2.0, 2.0]]),
        ];
        let probes = [
            ([1.2f64, 0.7f64], [0.31f64, -0.22f64]),
            ([1.9, 3.0], [-0.17, 0.28]),
        ];
        for s in surfaces {
            for &(p, w) in &probes {
                let q = geodesic_shoot(&s, p, w).unwrap();
                let back = log_map(&s, p, q).unwrap();
                assert!(
                    (back[0] - w[0]).abs() < 1e-6 && (back[1] - w[1]).abs() < 1e-6,
                    "{:?}: {:?} vs {:?}",
                    s.id(),
                    back,
                    w
                );
            }
        }
    }

    #[test]
    fn log_map_flat_torus_takes_short_way_around() {
        let s = ChartedSurface::flat_torus(1.0, 1.0);
        let w = log_map(&s, [0.05, 0.5], [0.95, 0.5]).unwrap();
        assert!((w[0] + 0.1).abs() < 1e-12, "w = {:?}", w);
    }
}
