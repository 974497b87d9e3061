//! The local field `Y` seen from the boundary of the kernel.
//!
//! Events `(t, y, z)` live on `boundary(B) x [-R, R]`. The added stream has
//! rate 1, offsets `y` in `[0, R]` and marks from `F`; an added event counts at
//! `u` when `n_t . u > y`. The subtracted stream has rate `M(theta)`, offsets
//! in `[-R, 0)` and marks from the tilted law; it counts (negatively) when
//! `n_t . u <= y`. Only events with `|y| <= |u|` can count at `u`, so a field
//! simulated to radius `R` is exact on the ball of radius `R`.
//!
//! Marks are stored in units of the lattice span for arithmetic laws, which
//! keeps every value of `Y` an exact integer and makes `{Y = 0}` well defined.

pub mod arrangement;
pub mod omega;
pub mod rays;
pub mod typical;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Result, ScanError};
use crate::geometry::{dot, norm, Kernel, Vec3};
use crate::marks::{solve_tilt, MarkLaw, TiltSolution};

use arrangement::{Clip, HalfPlane};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stream {
    Added,
    Subtracted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldEvent {
    pub location: Vec3,
    pub normal: Vec3,
    pub offset: f64,
    /// Mark in units of [`LocalField::unit`].
    pub mark: f64,
    pub stream: Stream,
}

impl FieldEvent {
    #[inline]
    pub fn includes(&self, u: &Vec3) -> bool {
        let s = dot(&self.normal, u);
        match self.stream {
            Stream::Added => s > self.offset,
            Stream::Subtracted => s <= self.offset,
        }
    }

    /// Contribution to `Y` (in units) when included.
    #[inline]
    pub fn signed_mark(&self) -> f64 {
        match self.stream {
            Stream::Added => self.mark,
            Stream::Subtracted => -self.mark,
        }
    }

    /// Distance along the unit direction `e` at which the event starts to count,
    /// or `None` if it never counts along that ray.
    #[inline]
    pub fn ray_entry(&self, e: &Vec3) -> Option<f64> {
        let a = dot(&self.normal, e);
        match self.stream {
            Stream::Added if a > 0.0 => Some(self.offset / a),
            Stream::Subtracted if a < 0.0 => Some(self.offset / a),
            _ => None,
        }
    }

    fn half_plane(&self) -> HalfPlane {
        HalfPlane {
            normal: [self.normal[0], self.normal[1]],
            offset: self.offset,
            weight: self.signed_mark(),
            upper: self.stream == Stream::Added,
        }
    }
}

/// A realisation of the local field, exact on the ball of radius `radius`.
#[derive(Clone, Debug)]
pub struct LocalField {
    pub dim: usize,
    pub events: Vec<FieldEvent>,
    pub radius: f64,
    /// Natural value of one mark unit.
    pub unit: f64,
    pub arithmetic: bool,
}

impl LocalField {
    /// `Y(u)` in mark units and the number of counting events. No truncation check.
    #[inline]
    pub fn eval_units(&self, u: &Vec3) -> (f64, usize) {
        let mut v = 0.0;
        let mut n = 0;
        for ev in &self.events {
            if ev.includes(u) {
                v += ev.signed_mark();
                n += 1;
            }
        }
        (v, n)
    }

    /// `Y(u)` in natural units.
    pub fn eval(&self, u: &Vec3) -> Result<f64> {
        let r = norm(u);
        if r > self.radius {
            return Err(ScanError::Truncation { radius: r, truncation: self.radius });
        }
        Ok(self.eval_units(u).0 * self.unit)
    }

    #[inline]
    pub fn is_zero(&self, value: f64, count: usize) -> bool {
        if self.arithmetic {
            value == 0.0
        } else {
            count == 0
        }
    }

    /// Events as half-planes (planar fields only).
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        self.events.iter().map(|e| e.half_plane()).collect()
    }

    /// Exact `sup Y` over the box `[0, m]^d` for `d <= 2`, otherwise on a grid.
    pub fn sup_box(&self, m: f64) -> Result<f64> {
        if self.dim <= 2 {
            self.sup_box_exact(m)
        } else {
            self.sup_box_grid(m, m / 64.0)
        }
    }

    fn check_box(&self, m: f64) -> Result<()> {
        if !(m.is_finite() && m > 0.0) {
            return Err(ScanError::InvalidArgument(format!("box side must be positive, got {m}")));
        }
        let reach = m * (self.dim as f64).sqrt();
        if reach > self.radius * (1.0 + 1e-12) {
            return Err(ScanError::Truncation { radius: reach, truncation: self.radius });
        }
        Ok(())
    }

    /// Exact supremum over `[0, m]^d` (in natural units) for `d` = 1 or 2.
    pub fn sup_box_exact(&self, m: f64) -> Result<f64> {
        self.check_box(m)?;
        match self.dim {
            1 => {
                let p = self.ray_profile(&[1.0, 0.0, 0.0], m);
                Ok(p.steps.iter().map(|s| s.value).fold(0.0, f64::max) * self.unit)
            }
            2 => {
                let planes: Vec<HalfPlane> = self
                    .events
                    .iter()
                    .filter(|e| {
                        let lo = m * (e.normal[0].min(0.0) + e.normal[1].min(0.0));
                        let hi = m * (e.normal[0].max(0.0) + e.normal[1].max(0.0));
                        e.offset >= lo && e.offset <= hi
                    })
                    .map(|e| e.half_plane())
                    .collect();
                let clip = Clip::Box { lo: [0.0, 0.0], hi: [m, m] };
                let mut best = f64::NEG_INFINITY;
                let any = arrangement::visit_cells(&planes, &clip, |c| best = best.max(c.value));
                if !any {
                    best = self.eval_units(&[m / 2.0, m / 2.0, 0.0]).0;
                }
                Ok(best * self.unit)
            }
            d => Err(ScanError::InvalidArgument(format!("exact box supremum needs d <= 2, got {d}"))),
        }
    }

    /// Supremum over the lattice `{0, h, ..., m}^d`, halving `h` until two
    /// successive refinements agree (at most three refinements).
    pub fn sup_box_grid(&self, m: f64, h: f64) -> Result<f64> {
        self.check_box(m)?;
        let mut h = h.min(m);
        let mut prev = self.sup_on_grid(m, h);
        for _ in 0..3 {
            h /= 2.0;
            let next = self.sup_on_grid(m, h);
            let tol = if self.arithmetic { 0.5 } else { 1e-3 * next.abs().max(1.0) };
            if (next - prev).abs() < tol {
                return Ok(next * self.unit);
            }
            prev = next;
        }
        Ok(prev * self.unit)
    }

    fn sup_on_grid(&self, m: f64, h: f64) -> f64 {
        let g = (m / h).round().max(1.0) as usize;
        let mut best = f64::NEG_INFINITY;
        let d = self.dim;
        let total = (g + 1).pow(d as u32);
        for idx in 0..total {
            let mut u = [0.0; 3];
            let mut rest = idx;
            for k in 0..d {
                u[k] = (rest % (g + 1)) as f64 * m / g as f64;
                rest /= g + 1;
            }
            best = best.max(self.eval_units(&u).0);
        }
        best
    }

    /// Values of `Y` (in units) on the lattice `{0, m/g, ..., m}^d`, in
    /// row-major order with the first coordinate fastest.
    pub fn box_grid_values(&self, m: f64, g: usize) -> Vec<f64> {
        let h = m / g as f64;
        let n1 = g + 1;
        match self.dim {
            1 => {
                let prof = self.ray_profile(&[1.0, 0.0, 0.0], m * (1.0 + 1e-9) + h);
                (0..n1).map(|i| prof.value_at(i as f64 * h)).collect()
            }
            2 => {
                // rasterise each half-plane row by row with a difference array
                let mut out = vec![0.0; n1 * n1];
                let mut diff = vec![0.0; n1 + 1];
                for j in 0..n1 {
                    let uy = j as f64 * h;
                    diff.iter_mut().for_each(|x| *x = 0.0);
                    for e in &self.events {
                        // included iff nx * ux > t (added) or nx * ux <= t (subtracted)
                        let t = e.offset - e.normal[1] * uy;
                        let (a, b) = index_range(e.normal[0], t, h, n1, e.stream == Stream::Added);
                        if a < b {
                            let w = e.signed_mark();
                            diff[a] += w;
                            diff[b] -= w;
                        }
                    }
                    let mut acc = 0.0;
                    for i in 0..n1 {
                        acc += diff[i];
                        out[j * n1 + i] = acc;
                    }
                }
                out
            }
            _ => {
                let total = n1.pow(3);
                (0..total)
                    .map(|idx| {
                        let u = [(idx % n1) as f64 * h, ((idx / n1) % n1) as f64 * h, (idx / (n1 * n1)) as f64 * h];
                        self.eval_units(&u).0
                    })
                    .collect()
            }
        }
    }

    /// Step profile of `Y` along the ray `r e`, `0 <= r < r_max`.
    pub fn ray_profile(&self, e: &Vec3, r_max: f64) -> rays::RayProfile {
        let mut entries: Vec<(f64, f64)> = self
            .events
            .iter()
            .filter_map(|ev| ev.ray_entry(e).filter(|&r| r < r_max).map(|r| (r, ev.signed_mark())))
            .collect();
        entries.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        rays::RayProfile::from_entries(&entries, r_max)
    }

    /// Largest strictly negative value of `Y` over the ball of radius `r`
    /// (natural units) and the distance at which it is attained.
    /// Exact for `d <= 2`.
    pub fn negative_sup_exact(&self, r: f64) -> Result<Option<(f64, f64)>> {
        if r > self.radius * (1.0 + 1e-12) {
            return Err(ScanError::Truncation { radius: r, truncation: self.radius });
        }
        let mut best: Option<(f64, f64)> = None;
        let mut offer = |v: f64, count: usize, at: f64| {
            let neg = if self.arithmetic { v < 0.0 } else { count > 0 && v < 0.0 };
            if neg && best.is_none_or(|b| v > b.0) {
                best = Some((v, at));
            }
        };
        match self.dim {
            1 => {
                for e in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]] {
                    let p = self.ray_profile(&e, r);
                    for s in &p.steps {
                        offer(s.value, s.count, s.start);
                    }
                }
            }
            2 => {
                let planes: Vec<HalfPlane> =
                    self.events.iter().filter(|e| e.offset.abs() < r).map(|e| e.half_plane()).collect();
                arrangement::visit_cells(&planes, &Clip::Disc { radius: r }, |c| {
                    offer(c.value, c.count, c.point[0].hypot(c.point[1]))
                });
            }
            d => {
                return Err(ScanError::InvalidArgument(format!("exact negative supremum needs d <= 2, got {d}")))
            }
        }
        Ok(best.map(|(v, at)| (v * self.unit, at)))
    }

    /// Exact area and outer reach of the zero cell (the set where no event
    /// counts) for planar fields. For nonarithmetic marks this cell is `{Y = 0}`.
    pub fn zero_cell_area(&self) -> (f64, f64) {
        let cons: Vec<([f64; 2], f64)> = self
            .events
            .iter()
            .map(|e| match e.stream {
                Stream::Added => ([e.normal[0], e.normal[1]], e.offset),
                Stream::Subtracted => ([-e.normal[0], -e.normal[1]], -e.offset),
            })
            .collect();
        omega::convex_cell_area(&cons, self.radius)
    }

    /// Exact measure of `{Y = 0}` in the cube `[-radius, radius]^d` when every
    /// event normal is a coordinate direction (box kernels) and the marks are
    /// arithmetic. `Y` is then a sum of step functions of single coordinates,
    /// and the measure is a convolution of their level-set lengths. Also
    /// returns the largest coordinate reached by the zero set.
    pub fn axis_zero_volume(&self) -> Option<(f64, f64)> {
        if !self.arithmetic {
            return None;
        }
        let axial = |n: &Vec3| {
            let nz = n.iter().filter(|x| **x != 0.0).count();
            nz == 1 && n.iter().any(|x| x.abs() == 1.0)
        };
        if !self.events.iter().all(|e| axial(&e.normal)) {
            return None;
        }
        // level -> (measure, reach)
        let mut total: BTreeMap<i64, (f64, f64)> = BTreeMap::from([(0, (1.0, 0.0))]);
        for k in 0..self.dim {
            let mut axis: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
            for sign in [1.0, -1.0] {
                let mut e = [0.0; 3];
                e[k] = sign;
                let p = self.ray_profile(&e, self.radius);
                for (i, s) in p.steps.iter().enumerate() {
                    let end = p.steps.get(i + 1).map_or(p.r_max, |n| n.start.min(p.r_max));
                    if end > s.start {
                        let slot = axis.entry(s.value.round() as i64).or_insert((0.0, 0.0));
                        slot.0 += end - s.start;
                        slot.1 = slot.1.max(end);
                    }
                }
            }
            let mut next: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
            for (v, (a, ra)) in &total {
                for (w, (b, rb)) in &axis {
                    let slot = next.entry(v + w).or_insert((0.0, 0.0));
                    slot.0 += a * b;
                    slot.1 = slot.1.max(ra.max(*rb));
                }
            }
            total = next;
        }
        Some(total.get(&0).copied().unwrap_or((0.0, 0.0)))
    }

    /// Largest negative value of `Y` over the given points (natural units).
    pub fn negative_sup_sampled(&self, points: &[Vec3]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for p in points {
            let (v, n) = self.eval_units(p);
            let neg = if self.arithmetic { v < 0.0 } else { n > 0 && v < 0.0 };
            if neg && best.is_none_or(|b| v > b) {
                best = Some(v);
            }
        }
        best.map(|v| v * self.unit)
    }
}

/// Hit-or-miss estimate of the measure of `{Y = 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupationEstimate {
    pub volume: f64,
    pub stderr: f64,
    /// Half-width of the sampling cube that was finally used.
    pub radius: f64,
    /// The outer shell still held zeros when the cube hit the field radius.
    pub truncated: bool,
}

impl LocalField {
    /// Estimates `vol{Y = 0}` from `points` uniform draws in `[-r, r]^d`,
    /// doubling `r` (from `r0`, up to the field radius over `sqrt(d)`) while
    /// more than 0.1% of the hits fall in the outer shell `|u|_inf > r/2`.
    /// Zero sets of integer fields can be disconnected, so an empty shell does
    /// not prove that nothing lies further out; pass a large `r0` to be safe.
    pub fn zero_occupation_hit_or_miss<R: Rng>(&self, r0: f64, points: usize, rng: &mut R) -> OccupationEstimate {
        let cap = self.radius / (self.dim as f64).sqrt();
        let mut r = r0.min(cap);
        loop {
            let mut hits = 0usize;
            let mut shell = 0usize;
            for _ in 0..points {
                let mut u = [0.0; 3];
                for x in u.iter_mut().take(self.dim) {
                    *x = r * (2.0 * rng.random::<f64>() - 1.0);
                }
                let (v, n) = self.eval_units(&u);
                if self.is_zero(v, n) {
                    hits += 1;
                    if u.iter().any(|x| x.abs() > r / 2.0) {
                        shell += 1;
                    }
                }
            }
            let cube = (2.0 * r).powi(self.dim as i32);
            let p = hits as f64 / points as f64;
            let spill = shell as f64 > 1e-3 * hits as f64;
            if !spill || r >= cap {
                return OccupationEstimate {
                    volume: cube * p,
                    stderr: cube * (p * (1.0 - p) / points as f64).sqrt(),
                    radius: r,
                    truncated: spill,
                };
            }
            r = (2.0 * r).min(cap);
        }
    }
}

/// Index range `[a, b)` of `i` in `0..n` with `nx * (i h) > t` (or `<= t`).
fn index_range(nx: f64, t: f64, h: f64, n: usize, strict_greater: bool) -> (usize, usize) {
    if nx.abs() < 1e-300 {
        let inc = if strict_greater { 0.0 > t } else { 0.0 <= t };
        return if inc { (0, n) } else { (0, 0) };
    }
    let x = t / nx / h; // boundary in index units
    let clamp = |v: f64| v.clamp(0.0, n as f64) as usize;
    // nx > 0: greater <=> i > x ; nx < 0: greater <=> i < x
    match (nx > 0.0, strict_greater) {
        (true, true) => (clamp((x.floor() + 1.0).max(0.0)), n),
        (true, false) => (0, clamp(x.floor() + 1.0)),
        (false, true) => (0, clamp(x.ceil())),
        (false, false) => (clamp(x.ceil()), n),
    }
}

/// A kernel, mark law and tilt, ready to simulate local fields.
#[derive(Clone, Debug)]
pub struct FieldModel {
    kernel: Kernel,
    law: MarkLaw,
    tilted: MarkLaw,
    tilt: TiltSolution,
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

impl FieldModel {
    pub fn new(kernel: &Kernel, law: &MarkLaw, c: f64) -> Result<Self> {
        let tilt = solve_tilt(law, kernel, c)?;
        Self::from_tilt(kernel, law, &tilt)
    }

    pub fn from_tilt(kernel: &Kernel, law: &MarkLaw, tilt: &TiltSolution) -> Result<Self> {
        Ok(FieldModel { kernel: kernel.clone(), law: law.clone(), tilted: law.tilted(tilt.theta)?, tilt: tilt.clone() })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn law(&self) -> &MarkLaw {
        &self.law
    }

    pub fn tilt(&self) -> &TiltSolution {
        &self.tilt
    }

    /// Radius beyond which the field returns to zero with probability below
    /// roughly `e^{-12}`, from the Chernoff bound `P{Y(u) >= 0} <= e^{-zeta beta |u|}`.
    pub fn default_radius(&self) -> f64 {
        let zeta = self.law.return_rate(self.tilt.theta).unwrap_or(f64::NAN);
        let beta = self.kernel.min_shadow().0;
        let r = 12.0 / (zeta * beta);
        if r.is_finite() {
            r.clamp(2.0, 400.0)
        } else {
            400.0
        }
    }

    fn empty_field(&self, radius: f64) -> LocalField {
        LocalField {
            dim: self.kernel.dim(),
            events: Vec::new(),
            radius,
            unit: self.law.unit(),
            arithmetic: self.law.span().is_some(),
        }
    }

    fn push_events<R: Rng>(
        &self,
        out: &mut Vec<FieldEvent>,
        stream: Stream,
        rate: f64,
        law: &MarkLaw,
        r0: f64,
        r1: f64,
        rng: &mut R,
    ) {
        let n = poisson(rate * self.kernel.boundary_area() * (r1 - r0), rng);
        for _ in 0..n {
            let bp = self.kernel.sample_boundary(rng);
            let y = r0 + (r1 - r0) * rng.random::<f64>();
            out.push(FieldEvent {
                location: bp.location,
                normal: bp.normal,
                offset: if stream == Stream::Added { y } else { -y },
                mark: law.sample_units(rng),
                stream,
            });
        }
    }

    /// Simulates the field on the ball of radius `radius`.
    pub fn simulate<R: Rng>(&self, radius: f64, rng: &mut R) -> LocalField {
        let mut f = self.empty_field(0.0);
        self.extend(&mut f, radius, rng);
        f
    }

    /// Extends a realisation to a larger radius by adding events with
    /// `|y|` in `(old radius, radius]`; existing events are kept.
    pub fn extend<R: Rng>(&self, field: &mut LocalField, radius: f64, rng: &mut R) {
        if radius <= field.radius {
            return;
        }
        let r0 = field.radius;
        self.push_events(&mut field.events, Stream::Added, 1.0, &self.law, r0, radius, rng);
        self.push_events(&mut field.events, Stream::Subtracted, self.tilt.m0, &self.tilted, r0, radius, rng);
        field.radius = radius;
    }

    /// Simulates the field under the change of measure with density
    /// `e^{theta Y(tau)}`. Because the boundary normals integrate to zero,
    /// `E e^{theta Y(tau)} = 1` and this density needs no normalisation.
    /// Under it, added events with `0 <= y < n . tau` arrive at rate `M(theta)`
    /// with tilted marks and subtracted events with `n . tau <= y < 0` arrive at
    /// rate 1 with untilted marks.
    pub fn simulate_tilted_at<R: Rng>(&self, tau: &Vec3, radius: f64, rng: &mut R) -> LocalField {
        let mut f = self.empty_field(radius);
        let mut base = Vec::new();
        self.push_events(&mut base, Stream::Added, 1.0, &self.law, 0.0, radius, rng);
        self.push_events(&mut base, Stream::Subtracted, self.tilt.m0, &self.tilted, 0.0, radius, rng);
        // drop base events inside the tilted region; it is refilled below
        base.retain(|e| {
            let s = dot(&e.normal, tau);
            match e.stream {
                Stream::Added => !(e.offset < s),
                Stream::Subtracted => !(s <= e.offset),
            }
        });
        let reach = norm(tau);
        let mut region = Vec::new();
        self.push_events(&mut region, Stream::Added, self.tilt.m0, &self.tilted, 0.0, reach, rng);
        region.retain(|e| e.offset < dot(&e.normal, tau));
        let mut lower = Vec::new();
        self.push_events(&mut lower, Stream::Subtracted, 1.0, &self.law, 0.0, reach, rng);
        lower.retain(|e| dot(&e.normal, tau) <= e.offset);
        base.extend(region);
        base.extend(lower);
        f.events = base;
        f
    }
}

#[cfg(test)]
mod tests;
