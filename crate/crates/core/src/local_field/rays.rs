//! Radial integration. Along a ray from the origin events only ever switch on,
//! so `Y(r e)` is a step function of `r` and the measure of `{Y = 0}` follows
//! from `vol = sum over rays of w_e * integral of r^{d-1} 1{Y(r e) = 0} dr`.

use std::f64::consts::PI;

use rand::Rng;

use crate::geometry::{fibonacci_sphere, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub start: f64,
    pub value: f64,
    pub count: usize,
}

/// `Y` along one ray, as a list of steps starting at radius 0.
#[derive(Clone, Debug)]
pub struct RayProfile {
    pub steps: Vec<Step>,
    pub r_max: f64,
}

impl RayProfile {
    /// Builds the profile from `(entry radius, signed mark)` pairs sorted by radius.
    pub fn from_entries(entries: &[(f64, f64)], r_max: f64) -> Self {
        let mut steps = Vec::with_capacity(entries.len() + 1);
        steps.push(Step { start: 0.0, value: 0.0, count: 0 });
        let mut v = 0.0;
        for (k, &(r, w)) in entries.iter().enumerate() {
            v += w;
            steps.push(Step { start: r, value: v, count: k + 1 });
        }
        RayProfile { steps, r_max }
    }

    pub fn value_at(&self, r: f64) -> f64 {
        // events count strictly beyond their entry radius for the added stream
        // and from it on for the subtracted one; at a grid point the two only
        // differ on a null set
        let k = self.steps.partition_point(|s| s.start < r);
        self.steps[k.max(1) - 1].value
    }

    /// `integral of r^{d-1} 1{zero} dr` over `[0, r_max)`, the largest radius at
    /// which the field is still zero, and whether the zero set reaches `r_max`.
    pub fn zero_moment(&self, d: usize, arithmetic: bool) -> (f64, f64, bool) {
        let mut acc = 0.0;
        let mut last = 0.0;
        let mut reaches = false;
        let pow = |r: f64| r.powi(d as i32) / d as f64;
        for (k, s) in self.steps.iter().enumerate() {
            let zero = if arithmetic { s.value == 0.0 } else { s.count == 0 };
            if !zero {
                continue;
            }
            let end = self.steps.get(k + 1).map_or(self.r_max, |n| n.start.min(self.r_max));
            if end > s.start {
                acc += pow(end) - pow(s.start);
                last = end;
                if k + 1 == self.steps.len() {
                    reaches = true;
                }
            }
        }
        (acc, last, reaches)
    }
}

/// Ray directions with quadrature weights summing to the surface measure of
/// the unit sphere. The set is rotated at random, so that sums over rays are
/// unbiased for the corresponding integrals.
pub fn random_directions<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<(Vec3, f64)> {
    match d {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let step = 2.0 * PI / n as f64;
            let off = rng.random::<f64>() * step;
            (0..n)
                .map(|i| {
                    let phi = off + i as f64 * step;
                    ([phi.cos(), phi.sin(), 0.0], step)
                })
                .collect()
        }
        _ => {
            let rot = random_rotation(rng);
            let w = 4.0 * PI / n as f64;
            fibonacci_sphere(n)
                .into_iter()
                .map(|p| {
                    let q = [
                        rot[0][0] * p[0] + rot[0][1] * p[1] + rot[0][2] * p[2],
                        rot[1][0] * p[0] + rot[1][1] * p[1] + rot[1][2] * p[2],
                        rot[2][0] * p[0] + rot[2][1] * p[1] + rot[2][2] * p[2],
                    ];
                    (q, w)
                })
                .collect()
        }
    }
}

/// Uniform random rotation of `R^3` from a uniform unit quaternion.
fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    );
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Measure of `{Y = 0}` within radius `r_max` by radial integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayOccupation {
    pub volume: f64,
    /// Largest radius at which a zero was seen.
    pub max_zero_radius: f64,
    /// True if the zero set touches `r_max` along some ray.
    pub reaches_edge: bool,
}

pub fn zero_volume(field: &super::LocalField, dirs: &[(Vec3, f64)], r_max: f64) -> RayOccupation {
    let mut volume = 0.0;
    let mut max_zero_radius: f64 = 0.0;
    let mut reaches_edge = false;
    for (e, w) in dirs {
        let p = field.ray_profile(e, r_max);
        let (m, last, reaches) = p.zero_moment(field.dim, field.arithmetic);
        volume += w * m;
        max_zero_radius = max_zero_radius.max(last);
        reaches_edge |= reaches;
    }
    RayOccupation { volume, max_zero_radius, reaches_edge }
}
