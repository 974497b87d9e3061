//! The limiting zero set `Omega` of the local field as `M(theta) -> infinity`.
//!
//! After rescaling distances by `1 + M(theta)`, the zero set converges to the
//! cell `{u : n_i . u > -y_i for all i}` cut out by a unit-rate Poisson process
//! `(t_i, y_i)` on `boundary(B) x (0, inf)`, i.e. the zero cell of a Poisson
//! hyperplane tessellation. It is convex, so volumes are computed by exact
//! polygon clipping in the plane and by radial integration otherwise.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::geometry::{dot, Kernel, Vec3};

use super::rays::random_directions;

/// How to measure the volume of a set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeMethod {
    /// Exact polygon clipping (planar convex cells only).
    Exact,
    /// Radial integration over this many random directions.
    Rays(usize),
    /// Hit-or-miss with this many uniform points in the bounding cube.
    HitOrMiss(usize),
}

#[derive(Clone, Debug)]
pub struct OmegaRealization {
    pub dim: usize,
    /// Outward normal and distance `y > 0` of each cutting hyperplane.
    pub planes: Vec<(Vec3, f64)>,
    pub radius: f64,
}

/// Volume of `Omega` together with the radius it needed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaVolume {
    pub volume: f64,
    pub radius: f64,
    /// The cell still reached the largest allowed radius.
    pub truncated: bool,
}

impl OmegaRealization {
    pub fn simulate<R: Rng>(kernel: &Kernel, radius: f64, rng: &mut R) -> Self {
        let mut o = OmegaRealization { dim: kernel.dim(), planes: Vec::new(), radius: 0.0 };
        o.extend(kernel, radius, rng);
        o
    }

    pub fn extend<R: Rng>(&mut self, kernel: &Kernel, radius: f64, rng: &mut R) {
        if radius <= self.radius {
            return;
        }
        let mean = kernel.boundary_area() * (radius - self.radius);
        let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
        for _ in 0..n {
            let bp = kernel.sample_boundary(rng);
            let y = self.radius + (radius - self.radius) * rng.random::<f64>();
            self.planes.push((bp.normal, y));
        }
        self.radius = radius;
    }

    pub fn contains(&self, u: &Vec3) -> bool {
        self.planes.iter().all(|(n, y)| dot(n, u) > -y)
    }

    /// Distance to the boundary of the cell along `e`, capped at the radius.
    pub fn radial_extent(&self, e: &Vec3) -> f64 {
        let mut r = self.radius;
        for (n, y) in &self.planes {
            let a = dot(n, e);
            if a < 0.0 {
                r = r.min(y / -a);
            }
        }
        r
    }

    /// Volume of the cell and whether it touches the simulated radius.
    pub fn volume<R: Rng>(&self, method: VolumeMethod, rng: &mut R) -> (f64, bool) {
        match (method, self.dim) {
            (VolumeMethod::Exact, 2) => {
                let cons: Vec<([f64; 2], f64)> = self.planes.iter().map(|(n, y)| ([-n[0], -n[1]], *y)).collect();
                // planes beyond the radius are not simulated, so the cell is
                // only exact if it stays inside the disc
                let (area, reach) = convex_cell_area(&cons, self.radius);
                (area, reach >= self.radius)
            }
            (VolumeMethod::HitOrMiss(n), d) => {
                let r = self.radius;
                let mut hits = 0usize;
                let mut edge = false;
                for _ in 0..n {
                    let mut u = [0.0; 3];
                    for x in u.iter_mut().take(d) {
                        *x = r * (2.0 * rng.random::<f64>() - 1.0);
                    }
                    if self.contains(&u) {
                        hits += 1;
                        if u.iter().any(|x| x.abs() > 0.5 * r) {
                            edge = true;
                        }
                    }
                }
                ((2.0 * r).powi(d as i32) * hits as f64 / n as f64, edge)
            }
            (VolumeMethod::Rays(_) | VolumeMethod::Exact, d) => {
                let n = if let VolumeMethod::Rays(n) = method { n } else { 4096 };
                let dirs = random_directions(d, n, rng);
                let mut vol = 0.0;
                let mut edge = false;
                for (e, w) in &dirs {
                    let r = self.radial_extent(e);
                    if r >= self.radius {
                        edge = true;
                    }
                    vol += w * r.powi(d as i32) / d as f64;
                }
                (vol, edge)
            }
        }
    }
}

/// Simulates `Omega` and measures its volume, doubling the radius until the
/// cell fits (at most `max_doublings` times).
pub fn simulate_omega_volume<R: Rng>(
    kernel: &Kernel,
    method: VolumeMethod,
    max_doublings: usize,
    rng: &mut R,
) -> OmegaVolume {
    let beta = kernel.min_shadow().0;
    // the radial extent in direction e is exponential with rate shadow(e) >= beta
    let mut radius = 12.0 / beta;
    let mut o = OmegaRealization::simulate(kernel, radius, rng);
    let mut doublings = 0;
    loop {
        let (volume, edge) = o.volume(method, rng);
        if !edge || doublings >= max_doublings {
            return OmegaVolume { volume, radius, truncated: edge };
        }
        radius *= 2.0;
        o.extend(kernel, radius, rng);
        doublings += 1;
    }
}

/// The polygon `{u in [-r, r]^2 : a_i . u < b_i}`, counter-clockwise, with
/// repeated vertices removed. Empty when the cell has no area.
pub fn convex_cell(constraints: &[([f64; 2], f64)], r: f64) -> Vec<[f64; 2]> {
    let mut poly: Vec<[f64; 2]> = vec![[-r, -r], [r, -r], [r, r], [-r, r]];
    for (a, b) in constraints {
        if poly.is_empty() {
            break;
        }
        let f = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
        if poly.iter().all(|p| f(p) < 0.0) {
            continue;
        }
        let n = poly.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            let (fp, fq) = (f(&p), f(&q));
            if fp < 0.0 {
                out.push(p);
            }
            if (fp < 0.0) != (fq < 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
    }
    // a constraint through an existing vertex produces that vertex twice
    let tol = 1e-12 * r;
    poly.dedup_by(|q, p| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol);
    while poly.len() > 1 {
        let (p, q) = (poly[0], poly[poly.len() - 1]);
        if (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol {
            poly.pop();
        } else {
            break;
        }
    }
    if poly.len() < 3 {
        poly.clear();
    }
    poly
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

/// Area of `{u in [-r, r]^2 : a_i . u < b_i}` and the largest distance from
/// the origin to a vertex of that cell.
pub fn convex_cell_area(constraints: &[([f64; 2], f64)], r: f64) -> (f64, f64) {
    let poly = convex_cell(constraints, r);
    let reach = poly.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    (polygon_area(&poly), reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{mean_se, replicate};

    #[test]
    fn cell_area_of_known_polygons() {
        // triangle x > -1, y > -1, x + y < 1
        let cons = [([-1.0, 0.0], 1.0), ([0.0, -1.0], 1.0), ([1.0, 1.0], 1.0)];
        let (a, reach) = convex_cell_area(&cons, 10.0);
        assert!((a - 4.5).abs() < 1e-12);
        assert!((reach - 5f64.sqrt()).abs() < 1e-12);
        let (a, reach) = convex_cell_area(&cons[..2], 10.0);
        assert!((a - 121.0).abs() < 1e-9);
        assert!(reach > 10.0);
    }

    #[test]
    fn exact_and_ray_volumes_agree() {
        let k = Kernel::ball(1.0, 2).unwrap();
        let mut rng = crate::mc::stream(1, "omega-test", &[]);
        for _ in 0..50 {
            let o = OmegaRealization::simulate(&k, 8.0, &mut rng);
            let (a, e1) = o.volume(VolumeMethod::Exact, &mut rng);
            let (b, e2) = o.volume(VolumeMethod::Rays(20000), &mut rng);
            assert_eq!(e1, e2);
            if !e1 {
                assert!((a - b).abs() < 2e-3 * a, "{a} {b}");
            }
        }
    }

    /// For a centrally symmetric planar kernel the line process is stationary
    /// and `E[1/area]` of the zero cell equals the intensity of crossings,
    /// `(1/8) * double integral of |n x n'|` over pairs of boundary points:
    /// `pi` for the unit disc and 1 for the unit square.
    #[test]
    fn inverse_area_matches_crossing_intensity() {
        for (k, exact) in [
            (Kernel::ball(1.0, 2).unwrap(), std::f64::consts::PI),
            (Kernel::boxed(&[1.0, 1.0]).unwrap(), 1.0),
        ] {
            let xs = replicate(4, "omega-inv", &[], 20_000, |rng, _| {
                1.0 / simulate_omega_volume(&k, VolumeMethod::Exact, 4, rng).volume
            });
            let (m, se) = mean_se(&xs);
            assert!((m - exact).abs() < 4.0 * se, "{m} +- {se} vs {exact}");
        }
    }
}
