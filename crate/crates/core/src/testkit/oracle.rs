//! Brute-force references, independent of the production geometry code.

use rand::Rng;

use crate::geometry::{Triangle3, Vec3};

#[derive(Clone, Copy, Debug)]
pub struct GridClosest {
    pub point: Vec3,
    pub distance: f64,
    /// The best grid point is within 1e-8 of `p`.
    pub inside: bool,
}

const WINDOW_CELLS: f64 = 64.0;
const REFINE_ROWS: usize = 2048;
const FINEST_STEP: f64 = 1e-11;

/// Closest point on the closed triangle by grid search over the parameter
/// domain `x(s, u) = v0 + s(v1 - v0) + u(v2 - v0)`, `s, u ≥ 0`, `s + u ≤ 1`.
///
/// The first level is the `n × n` grid. Along each grid row the squared
/// distance is a convex parabola in `u`, so its smallest grid value sits on
/// one of the two columns around the parabola's vertex; evaluating those (and
/// the row's end points) yields the exact grid minimum in `O(n)`. The search
/// then repeats on finer grids centred on the best point until the spacing
/// drops below 1e-11.
pub fn closest_point_grid(t: &Triangle3, p: Vec3, n: usize) -> GridClosest {
    let step = 1.0 / n as f64;
    let (mut s, mut u, mut d2) = grid_level(t, p, 0.0, 0.0, step, n);
    let mut step = step;
    while step > FINEST_STEP {
        let next = step * 2.0 * WINDOW_CELLS / REFINE_ROWS as f64;
        let (s1, u1, d1) =
            grid_level(t, p, s - WINDOW_CELLS * step, u - WINDOW_CELLS * step, next, REFINE_ROWS);
        if d1 <= d2 {
            (s, u, d2) = (s1, u1, d1);
        }
        step = next;
    }
    let point = param_point(t, s, u);
    let distance = d2.sqrt();
    GridClosest { point, distance, inside: distance < 1e-8 }
}

/// Full enumeration of the `n × n` grid; `O(n²)`.
pub fn closest_point_grid_exhaustive(t: &Triangle3, p: Vec3, n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let q = param_point(t, i as f64 / n as f64, j as f64 / n as f64);
            best = best.min((p - q).norm_squared());
        }
    }
    best.sqrt()
}

fn param_point(t: &Triangle3, s: f64, u: f64) -> Vec3 {
    t.v0 + (t.v1 - t.v0) * s + (t.v2 - t.v0) * u
}

fn grid_level(t: &Triangle3, p: Vec3, s0: f64, u0: f64, step: f64, rows: usize) -> (f64, f64, f64) {
    let e1 = t.v1 - t.v0;
    let e2 = t.v2 - t.v0;
    let e2e2 = e2.dot(e2);
    let mut best = (0.0, 0.0, f64::INFINITY);
    let consider = |s: f64, u: f64, best: &mut (f64, f64, f64)| {
        let d2 = (p - param_point(t, s, u)).norm_squared();
        if d2 < best.2 {
            *best = (s, u, d2);
        }
    };
    for k in 0..=rows {
        let s = (s0 + k as f64 * step).clamp(0.0, 1.0);
        let lo = u0.max(0.0);
        let hi = (u0 + rows as f64 * step).min(1.0 - s);
        if lo > hi {
            continue;
        }
        consider(s, lo, &mut best);
        consider(s, hi, &mut best);
        if e2e2 == 0.0 {
            continue;
        }
        let vertex = (p - t.v0 - e1 * s).dot(e2) / e2e2;
        let m_lo = ((lo - u0) / step).ceil();
        let m_hi = ((hi - u0) / step).floor();
        if m_lo > m_hi {
            continue;
        }
        let m = (vertex - u0) / step;
        for cand in [m.floor(), m.ceil()] {
            let cand = cand.clamp(m_lo, m_hi);
            consider(s, u0 + cand * step, &mut best);
        }
    }
    best
}

/// Rotation of `p` about the line through `origin` along `dir` by the
/// matrix form `R = cos·I + sin·[u]× + (1 - cos)·u uᵀ`.
pub fn rodrigues(p: Vec3, origin: Vec3, dir: Vec3, angle: f64) -> Vec3 {
    let n = dir.norm();
    let (x, y, z) = (dir.x / n, dir.y / n, dir.z / n);
    let (c, s) = (angle.cos(), angle.sin());
    let k = 1.0 - c;
    let m = [
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ];
    let d = p - origin;
    let v = [d.x, d.y, d.z];
    let r: [f64; 3] = std::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2]);
    origin + Vec3::new(r[0], r[1], r[2])
}

/// Triangle with vertices uniform in the unit cube, area at least 1e-3 and
/// every interior angle at least 15 degrees.
pub fn random_triangle<R: Rng>(rng: &mut R) -> Triangle3 {
    let min_cos = 15f64.to_radians().cos();
    loop {
        let mut v = || Vec3::new(rng.gen(), rng.gen(), rng.gen());
        let t = Triangle3::new(v(), v(), v());
        let corners = [(t.v0, t.v1, t.v2), (t.v1, t.v2, t.v0), (t.v2, t.v0, t.v1)];
        let well_shaped = corners.iter().all(|&(a, b, c)| {
            let (x, y) = ((b - a).normalized(), (c - a).normalized());
            x.dot(y) <= min_cos
        });
        if t.area() >= 1e-3 && well_shaped {
            return t;
        }
    }
}

/// Uniform in `[-0.5, 1.5]³`.
pub fn random_point<R: Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn row_minimum_equals_full_enumeration() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..4 {
            let t = random_triangle(&mut rng);
            let p = random_point(&mut rng);
            let (_, _, d2) = grid_level(&t, p, 0.0, 0.0, 1.0 / 300.0, 300);
            let full = closest_point_grid_exhaustive(&t, p, 300);
            assert!((d2.sqrt() - full).abs() < 1e-12, "{} vs {full}", d2.sqrt());
        }
    }

    #[test]
    fn refinement_never_worsens() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        for _ in 0..50 {
            let t = random_triangle(&mut rng);
            let p = random_point(&mut rng);
            let (_, _, coarse) = grid_level(&t, p, 0.0, 0.0, 1.0 / 2000.0, 2000);
            assert!(closest_point_grid(&t, p, 2000).distance <= coarse.sqrt());
        }
    }

    #[test]
    fn rodrigues_quarter_turn_about_z() {
        let q = rodrigues(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::ZERO,
            Vec3::new(0.0, 0.0, 2.0),
            std::f64::consts::FRAC_PI_2,
        );
        assert!((q - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }
}
