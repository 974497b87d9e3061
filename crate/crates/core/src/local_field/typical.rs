//! The cell at a typical vertex of a planar field's line arrangement.
//!
//! For a centrally symmetric planar kernel the event lines `n . u = y` form a
//! stationary Poisson line process. Seen from any point, each line carries an
//! independent label: added with probability `1 / (1 + M(theta))` and
//! subtracted otherwise. The cell around the origin is therefore the
//! area-biased typical cell, and
//!
//! `E[g / vol{Y = 0}] = lambda_0 E_typ[g vol(C) / vol{Y = 0}]`
//!
//! where `lambda_0` is the intensity of vertices, which equals that of cells.
//! A cell taken at a random corner of a typical vertex is biased by its number
//! of vertices `n`, and the typical mean of `n` is 4, so
//! `E_typ[h] = 4 E[h / n]`. The resulting per-sample value is bounded, unlike
//! `1 / vol{Y = 0}` itself, whose variance is infinite.

use rand::Rng;

use crate::error::{Result, ScanError};
use crate::geometry::{dot, norm, scale, BoundaryPoint, Vec3};

use super::omega::{convex_cell, polygon_area};
use super::{FieldEvent, FieldModel, LocalField, Stream};

/// A typical-vertex cell and the field seen from a point inside it.
#[derive(Clone, Debug)]
pub struct TypicalCell {
    /// Labels and offsets are relative to the root point, the mean of the
    /// cell's vertices.
    pub field: LocalField,
    pub area: f64,
    pub vertices: usize,
    /// The cell still reached a third of the simulated radius.
    pub truncated: bool,
}

impl FieldModel {
    /// Intensity of crossing points of the event lines, or `None` when the
    /// line process is not stationary (kernel not planar or not centrally
    /// symmetric).
    pub fn vertex_intensity(&self) -> Option<f64> {
        if !self.kernel.is_centrally_symmetric() {
            return None;
        }
        self.kernel.crossing_intensity().map(|c| (1.0 + self.tilt.m0).powi(2) * c)
    }

    /// Simulates the cell at one of the four corners of a typical vertex.
    /// The radius around the vertex doubles at most `max_doublings` times
    /// until the cell stays within a third of it.
    pub fn simulate_typical_cell<R: Rng>(&self, radius: f64, max_doublings: usize, rng: &mut R) -> Result<TypicalCell> {
        if self.vertex_intensity().is_none() {
            return Err(ScanError::InvalidArgument(
                "typical cells need a centrally symmetric planar kernel".into(),
            ));
        }
        // by Slivnyak the vertex lies on two extra lines with normals weighted by |n1 x n2|
        let (p1, p2) = loop {
            let a = self.kernel.sample_boundary(rng);
            let b = self.kernel.sample_boundary(rng);
            let cross = (a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0]).abs();
            if rng.random::<f64>() < cross {
                break (a, b);
            }
        };
        // the chosen corner is {s_i . u > 0}
        let sides: Vec<(Vec3, BoundaryPoint)> = [p1, p2]
            .into_iter()
            .map(|p| (if rng.random::<bool>() { p.normal } else { scale(&p.normal, -1.0) }, p))
            .collect();
        let mut radius = radius;
        let mut around = self.simulate(radius, rng);
        let mut doublings = 0;
        let (poly, truncated) = loop {
            let mut cons: Vec<([f64; 2], f64)> = sides.iter().map(|(s, _)| ([-s[0], -s[1]], 0.0)).collect();
            cons.extend(around.events.iter().map(|e| match e.stream {
                Stream::Added => ([e.normal[0], e.normal[1]], e.offset),
                Stream::Subtracted => ([-e.normal[0], -e.normal[1]], -e.offset),
            }));
            let poly = convex_cell(&cons, radius);
            let reach = poly.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
            // seen from the root, the field must still cover the whole cell
            let fits = reach < radius / 3.0;
            if fits || doublings >= max_doublings {
                break (poly, !fits);
            }
            radius *= 2.0;
            self.extend(&mut around, radius, rng);
            doublings += 1;
        };
        if poly.is_empty() {
            return Err(ScanError::Numerical("typical cell has no area".into()));
        }
        let k = poly.len() as f64;
        let root = [poly.iter().map(|p| p[0]).sum::<f64>() / k, poly.iter().map(|p| p[1]).sum::<f64>() / k, 0.0];
        let r_root = radius - norm(&root);
        // no other line separates the vertex from the root, so their labels carry over
        let mut events: Vec<FieldEvent> = around
            .events
            .iter()
            .filter_map(|e| {
                let offset = e.offset - dot(&e.normal, &root);
                (offset.abs() <= r_root).then_some(FieldEvent { offset, ..*e })
            })
            .collect();
        let (lo, hi) = self.kernel.bounding_box();
        for (s, p) in &sides {
            // the line s . u = 0 seen from the root: outward normal -s at distance s . root
            let r = dot(s, &root);
            let reflected = [lo[0] + hi[0] - p.location[0], lo[1] + hi[1] - p.location[1], 0.0];
            // the boundary point whose normal is -s, and the one whose normal is s
            let (out_at, in_at) = if dot(s, &p.normal) > 0.0 { (reflected, p.location) } else { (p.location, reflected) };
            let added = rng.random::<f64>() * (1.0 + self.tilt.m0) < 1.0;
            events.push(if added {
                FieldEvent {
                    location: out_at,
                    normal: scale(s, -1.0),
                    offset: r,
                    mark: self.law.sample_units(rng),
                    stream: Stream::Added,
                }
            } else {
                FieldEvent { location: in_at, normal: *s, offset: -r, mark: self.tilted.sample_units(rng), stream: Stream::Subtracted }
            });
        }
        let mut field = self.empty_field(r_root);
        field.events = events;
        Ok(TypicalCell { field, area: polygon_area(&poly), vertices: poly.len(), truncated })
    }
}
