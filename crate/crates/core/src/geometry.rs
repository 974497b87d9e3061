//! Convex scanning kernels and the few geometric functionals the rest of the
//! crate needs: volume, boundary measure, projection ("shadow") areas and the
//! translation deficit `vol(B \ (v + B))`.
//!
//! Points live in `[f64; 3]` regardless of dimension; unused coordinates are 0.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Serializable description of a kernel, e.g. `{"shape":"ball","r":1.0,"d":2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    /// Closed ball of radius `r` centred at the origin.
    Ball { r: f64, d: usize },
    /// Axis-aligned box `[0, b_1] x ... x [0, b_d]`.
    Box { b: Vec<f64> },
    /// Cylinder with axis along the third coordinate, radius `r`, total height `h`,
    /// centred at the origin.
    Cylinder { r: f64, h: f64 },
    /// Convex polygon given by its vertices.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Ball { r: f64, d: usize },
    Box { b: Vec<f64> },
    Cylinder { r: f64, h: f64 },
    /// Counter-clockwise vertices plus per-edge outward normals and lengths.
    Polygon {
        vertices: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
        lengths: Vec<f64>,
    },
}

/// A point of the kernel boundary together with its outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub location: Vec3,
    pub normal: Vec3,
}

/// A validated convex kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct Kernel {
    shape: Shape,
    dim: usize,
    volume: f64,
    boundary_area: f64,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ScanError::InvalidKernel(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    PI.powf(d / 2.0) / libm::tgamma(d / 2.0 + 1.0)
}

/// Area of the intersection of two discs of radius `r` whose centres are `s` apart.
fn disc_lens_area(r: f64, s: f64) -> f64 {
    if s >= 2.0 * r {
        return 0.0;
    }
    2.0 * r * r * (s / (2.0 * r)).acos() - 0.5 * s * (4.0 * r * r - s * s).sqrt()
}

impl Kernel {
    pub fn ball(r: f64, d: usize) -> Result<Self> {
        check_positive("radius", r)?;
        if !(1..=3).contains(&d) {
            return Err(ScanError::InvalidKernel(format!("ball dimension must be 1, 2 or 3, got {d}")));
        }
        let volume = unit_ball_volume(d) * r.powi(d as i32);
        let boundary_area = d as f64 * unit_ball_volume(d) * r.powi(d as i32 - 1);
        Ok(Kernel { shape: Shape::Ball { r, d }, dim: d, volume, boundary_area })
    }

    pub fn boxed(b: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&b.len()) {
            return Err(ScanError::InvalidKernel(format!(
                "box needs 1 to 3 side lengths, got {}",
                b.len()
            )));
        }
        for &x in b {
            check_positive("box side", x)?;
        }
        let volume: f64 = b.iter().product();
        let boundary_area = 2.0 * (0..b.len()).map(|k| volume / b[k]).sum::<f64>();
        Ok(Kernel { shape: Shape::Box { b: b.to_vec() }, dim: b.len(), volume, boundary_area })
    }

    pub fn cylinder(r: f64, h: f64) -> Result<Self> {
        check_positive("radius", r)?;
        check_positive("height", h)?;
        Ok(Kernel {
            shape: Shape::Cylinder { r, h },
            dim: 3,
            volume: PI * r * r * h,
            boundary_area: 2.0 * PI * r * r + 2.0 * PI * r * h,
        })
    }

    /// Convex polygon from its vertices (either orientation).
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(ScanError::InvalidKernel("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(ScanError::InvalidKernel("polygon vertices must be finite".into()));
        }
        let mut vs = vertices.to_vec();
        let signed: f64 = (0..n)
            .map(|i| {
                let (a, b) = (vs[i], vs[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        if signed < 0.0 {
            vs.reverse();
        }
        let area = signed.abs();
        if area <= 0.0 {
            return Err(ScanError::InvalidKernel("polygon is degenerate".into()));
        }
        let mut normals = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b, c) = (vs[i], vs[(i + 1) % n], vs[(i + 2) % n]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let f = [c[0] - b[0], c[1] - b[1]];
            if e[0] * f[1] - e[1] * f[0] < -1e-12 * (area + 1.0) {
                return Err(ScanError::InvalidKernel("polygon is not convex".into()));
            }
            let len = e[0].hypot(e[1]);
            if len <= 0.0 {
                return Err(ScanError::InvalidKernel("polygon has repeated vertices".into()));
            }
            normals.push([e[1] / len, -e[0] / len]);
            lengths.push(len);
        }
        let boundary_area = lengths.iter().sum();
        Ok(Kernel {
            shape: Shape::Polygon { vertices: vs, normals, lengths },
            dim: 2,
            volume: area,
            boundary_area,
        })
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Ball { r, d } => Kernel::ball(*r, *d),
            KernelSpec::Box { b } => Kernel::boxed(b),
            KernelSpec::Cylinder { r, h } => Kernel::cylinder(*r, *h),
            KernelSpec::Polygon { vertices } => Kernel::polygon(vertices),
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match &self.shape {
            Shape::Ball { r, d } => KernelSpec::Ball { r: *r, d: *d },
            Shape::Box { b } => KernelSpec::Box { b: b.clone() },
            Shape::Cylinder { r, h } => KernelSpec::Cylinder { r: *r, h: *h },
            Shape::Polygon { vertices, .. } => KernelSpec::Polygon { vertices: vertices.clone() },
        }
    }

    /// Short human readable label, used in reports.
    pub fn label(&self) -> String {
        match &self.shape {
            Shape::Ball { r, d } => format!("ball(r={r},d={d})"),
            Shape::Box { b } => {
                let s: Vec<String> = b.iter().map(|x| x.to_string()).collect();
                format!("box({})", s.join(","))
            }
            Shape::Cylinder { r, h } => format!("cylinder(r={r},h={h})"),
            Shape::Polygon { vertices, .. } => format!("polygon({} vertices)", vertices.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary_area
    }

    pub fn is_box(&self) -> bool {
        matches!(self.shape, Shape::Box { .. })
    }

    pub fn box_sides(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Box { b } => Some(b),
            _ => None,
        }
    }

    /// True for kernels symmetric under `x -> -x` about some centre.
    pub fn is_centrally_symmetric(&self) -> bool {
        match &self.shape {
            Shape::Polygon { normals, .. } => {
                normals.len() % 2 == 0
                    && normals.iter().all(|n| {
                        normals.iter().any(|m| (m[0] + n[0]).abs() < 1e-9 && (m[1] + n[1]).abs() < 1e-9)
                    })
            }
            _ => true,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match &self.shape {
            Shape::Ball { r, d } => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for k in 0..*d {
                    lo[k] = -r;
                    hi[k] = *r;
                }
                (lo, hi)
            }
            Shape::Box { b } => {
                let mut hi = [0.0; 3];
                hi[..b.len()].copy_from_slice(b);
                ([0.0; 3], hi)
            }
            Shape::Cylinder { r, h } => ([-r, -r, -h / 2.0], [*r, *r, h / 2.0]),
            Shape::Polygon { vertices, .. } => {
                let mut lo = [f64::INFINITY, f64::INFINITY, 0.0];
                let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Membership test for the closed kernel.
    pub fn contains(&self, x: &Vec3) -> bool {
        match &self.shape {
            Shape::Ball { r, .. } => dot(x, x) <= r * r,
            Shape::Box { b } => b.iter().enumerate().all(|(k, &bk)| x[k] >= 0.0 && x[k] <= bk),
            Shape::Cylinder { r, h } => {
                x[0] * x[0] + x[1] * x[1] <= r * r && x[2].abs() <= h / 2.0
            }
            Shape::Polygon { vertices, normals, .. } => vertices
                .iter()
                .zip(normals)
                .all(|(v, n)| n[0] * (x[0] - v[0]) + n[1] * (x[1] - v[1]) <= 0.0),
        }
    }

    /// Draws a point uniformly with respect to surface measure on the boundary.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint {
        match &self.shape {
            Shape::Ball { r, d } => {
                let n = random_unit_vector(*d, rng);
                BoundaryPoint { location: scale(&n, *r), normal: n }
            }
            Shape::Box { b } => {
                let d = b.len();
                let total = self.boundary_area / 2.0;
                let mut pick = rng.random::<f64>() * total;
                let mut face = d - 1;
                for k in 0..d {
                    let a = self.volume / b[k];
                    if pick < a {
                        face = k;
                        break;
                    }
                    pick -= a;
                }
                let upper = rng.random::<bool>();
                let mut location = [0.0; 3];
                for k in 0..d {
                    location[k] = rng.random::<f64>() * b[k];
                }
                let mut normal = [0.0; 3];
                if upper {
                    location[face] = b[face];
                    normal[face] = 1.0;
                } else {
                    location[face] = 0.0;
                    normal[face] = -1.0;
                }
                BoundaryPoint { location, normal }
            }
            Shape::Cylinder { r, h } => {
                let cap = PI * r * r;
                let side = 2.0 * PI * r * h;
                let u = rng.random::<f64>() * (2.0 * cap + side);
                if u < 2.0 * cap {
                    let top = u < cap;
                    // uniform point in the disc
                    let rho = r * rng.random::<f64>().sqrt();
                    let phi = 2.0 * PI * rng.random::<f64>();
                    let z = if top { h / 2.0 } else { -h / 2.0 };
                    BoundaryPoint {
                        location: [rho * phi.cos(), rho * phi.sin(), z],
                        normal: [0.0, 0.0, if top { 1.0 } else { -1.0 }],
                    }
                } else {
                    let phi = 2.0 * PI * rng.random::<f64>();
                    let z = (rng.random::<f64>() - 0.5) * h;
                    let (s, c) = phi.sin_cos();
                    BoundaryPoint { location: [r * c, r * s, z], normal: [c, s, 0.0] }
                }
            }
            Shape::Polygon { vertices, normals, lengths } => {
                let mut pick = rng.random::<f64>() * self.boundary_area;
                let mut i = lengths.len() - 1;
                for (k, &l) in lengths.iter().enumerate() {
                    if pick < l {
                        i = k;
                        break;
                    }
                    pick -= l;
                }
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                let s = rng.random::<f64>();
                BoundaryPoint {
                    location: [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), 0.0],
                    normal: [normals[i][0], normals[i][1], 0.0],
                }
            }
        }
    }

    /// Outward unit normal at a boundary point `t` (within a relative tolerance).
    pub fn normal_at(&self, t: &Vec3) -> Result<Vec3> {
        let tol = 1e-9 * (1.0 + norm(t));
        let off = || ScanError::InvalidArgument(format!("point {t:?} is not on the kernel boundary"));
        match &self.shape {
            Shape::Ball { r, .. } => {
                let n = norm(t);
                if (n - r).abs() > tol {
                    return Err(off());
                }
                Ok(scale(t, 1.0 / n))
            }
            Shape::Box { b } => {
                if !self.near_contains(t, tol) {
                    return Err(off());
                }
                for (k, &bk) in b.iter().enumerate() {
                    let mut n = [0.0; 3];
                    if (t[k] - bk).abs() <= tol {
                        n[k] = 1.0;
                        return Ok(n);
                    }
                    if t[k].abs() <= tol {
                        n[k] = -1.0;
                        return Ok(n);
                    }
                }
                Err(off())
            }
            Shape::Cylinder { r, h } => {
                if (t[2].abs() - h / 2.0).abs() <= tol && t[0].hypot(t[1]) <= r + tol {
                    return Ok([0.0, 0.0, t[2].signum()]);
                }
                let rho = t[0].hypot(t[1]);
                if (rho - r).abs() <= tol && t[2].abs() <= h / 2.0 + tol {
                    return Ok([t[0] / rho, t[1] / rho, 0.0]);
                }
                Err(off())
            }
            Shape::Polygon { vertices, normals, .. } => {
                for (v, n) in vertices.iter().zip(normals) {
                    if (n[0] * (t[0] - v[0]) + n[1] * (t[1] - v[1])).abs() <= tol && self.near_contains(t, tol) {
                        return Ok([n[0], n[1], 0.0]);
                    }
                }
                Err(off())
            }
        }
    }

    fn near_contains(&self, x: &Vec3, tol: f64) -> bool {
        match &self.shape {
            Shape::Box { b } => b.iter().enumerate().all(|(k, &bk)| x[k] >= -tol && x[k] <= bk + tol),
            Shape::Polygon { vertices, normals, .. } => vertices
                .iter()
                .zip(normals)
                .all(|(v, n)| n[0] * (x[0] - v[0]) + n[1] * (x[1] - v[1]) <= tol),
            _ => self.contains(x),
        }
    }

    /// Shadow of the kernel in direction `e`: the integral of `(n . e)^+` over the
    /// boundary, i.e. the `(d-1)`-volume of the projection along `e`.
    /// `e` need not be normalised; the result scales with `|e|`.
    pub fn shadow(&self, e: &Vec3) -> f64 {
        match &self.shape {
            Shape::Ball { r, d } => {
                let len = norm(e);
                match d {
                    1 => len,
                    2 => 2.0 * r * len,
                    _ => PI * r * r * len,
                }
            }
            Shape::Box { b } => (0..b.len()).map(|k| self.volume / b[k] * e[k].abs()).sum(),
            Shape::Cylinder { r, h } => PI * r * r * e[2].abs() + 2.0 * r * h * e[0].hypot(e[1]),
            Shape::Polygon { normals, lengths, .. } => normals
                .iter()
                .zip(lengths)
                .map(|(n, l)| l * (n[0] * e[0] + n[1] * e[1]).max(0.0))
                .sum(),
        }
    }

    /// `(1/8)` times the double integral of `|n x n'|` over pairs of boundary
    /// points, for planar kernels. For a centrally symmetric kernel this is the
    /// intensity of crossing points of the unit-rate line process whose normals
    /// follow the boundary measure. `None` outside the plane.
    pub fn crossing_intensity(&self) -> Option<f64> {
        if self.dim != 2 {
            return None;
        }
        // the inner integral over n' is 2 shadow(n rotated by 90 degrees)
        Some(match &self.shape {
            Shape::Ball { r, .. } => PI * r * r,
            Shape::Box { b } => b[0] * b[1],
            Shape::Polygon { normals, lengths, .. } => {
                normals.iter().zip(lengths).map(|(n, l)| l * self.shadow(&[-n[1], n[0], 0.0])).sum::<f64>() / 4.0
            }
            Shape::Cylinder { .. } => return None,
        })
    }

    /// Minimum shadow over unit directions, with the minimising direction.
    /// Computed numerically: a dense direction grid followed by golden-section
    /// refinement of the best grid direction.
    pub fn min_shadow(&self) -> (f64, Vec3) {
        match self.dim {
            1 => (self.shadow(&[1.0, 0.0, 0.0]), [1.0, 0.0, 0.0]),
            2 => {
                let f = |phi: f64| self.shadow(&[phi.cos(), phi.sin(), 0.0]);
                let n = 512;
                let step = 2.0 * PI / n as f64;
                let best = (0..n)
                    .map(|i| (i, f(i as f64 * step)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0;
                let phi0 = best as f64 * step;
                let phi = golden_section(&f, phi0 - step, phi0 + step, 1e-12);
                let e = [phi.cos(), phi.sin(), 0.0];
                let v = f(phi).min(f(phi0));
                if f(phi) <= f(phi0) {
                    (v, e)
                } else {
                    (v, [phi0.cos(), phi0.sin(), 0.0])
                }
            }
            _ => {
                let dirs = fibonacci_sphere(1024);
                let mut best = dirs[0];
                let mut best_v = f64::INFINITY;
                for e in &dirs {
                    let v = self.shadow(e);
                    if v < best_v {
                        best_v = v;
                        best = *e;
                    }
                }
                // alternate golden-section searches in polar and azimuthal angle
                let mut polar = best[2].clamp(-1.0, 1.0).acos();
                let mut azim = best[1].atan2(best[0]);
                let to_vec = |p: f64, a: f64| [p.sin() * a.cos(), p.sin() * a.sin(), p.cos()];
                let mut width = 0.15;
                for _ in 0..6 {
                    let fp = |p: f64| self.shadow(&to_vec(p, azim));
                    let p_new = golden_section(&fp, polar - width, polar + width, 1e-12);
                    if fp(p_new) <= fp(polar) {
                        polar = p_new;
                    }
                    let fa = |a: f64| self.shadow(&to_vec(polar, a));
                    let a_new = golden_section(&fa, azim - width, azim + width, 1e-12);
                    if fa(a_new) <= fa(azim) {
                        azim = a_new;
                    }
                    width *= 0.5;
                }
                let e = to_vec(polar, azim);
                let v = self.shadow(&e);
                if v <= best_v {
                    (v, e)
                } else {
                    (best_v, best)
                }
            }
        }
    }

    /// `vol(B \ (v + B))`, exact for every supported shape.
    pub fn overlap_deficit(&self, v: &Vec3) -> f64 {
        let overlap = match &self.shape {
            Shape::Box { b } => b.iter().enumerate().map(|(k, &bk)| (bk - v[k].abs()).max(0.0)).product(),
            Shape::Ball { r, d } => {
                let s = norm(v);
                match d {
                    1 => (2.0 * r - s).max(0.0),
                    2 => disc_lens_area(*r, s),
                    _ => {
                        if s >= 2.0 * r {
                            0.0
                        } else {
                            PI * (4.0 * r + s) * (2.0 * r - s).powi(2) / 12.0
                        }
                    }
                }
            }
            Shape::Cylinder { r, h } => disc_lens_area(*r, v[0].hypot(v[1])) * (h - v[2].abs()).max(0.0),
            Shape::Polygon { vertices, .. } => {
                let shifted: Vec<[f64; 2]> = vertices.iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect();
                polygon_area(&clip_convex(vertices, &shifted))
            }
        };
        (self.volume - overlap).max(0.0)
    }
}

impl TryFrom<KernelSpec> for Kernel {
    type Error = ScanError;
    fn try_from(spec: KernelSpec) -> Result<Self> {
        Kernel::from_spec(&spec)
    }
}

impl From<Kernel> for KernelSpec {
    fn from(k: Kernel) -> Self {
        k.spec()
    }
}

/// Uniform direction on the unit sphere of `R^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec3 {
    match d {
        1 => [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let phi = 2.0 * PI * rng.random::<f64>();
            [phi.cos(), phi.sin(), 0.0]
        }
        _ => loop {
            let g: Vec3 = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            let n = norm(&g);
            if n > 1e-12 {
                break scale(&g, 1.0 / n);
            }
        },
    }
}

/// Quasi-uniform point set on the 2-sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

/// Sutherland-Hodgman clip of `subject` by the convex counter-clockwise `clip`.
fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let side = |p: &[f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let (p, q) = (input[j], input[(j + 1) % k]);
            let (sp, sq) = (side(&p), side(&q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}
