//! `K` as a mean inverse occupation measure, and the bound from `Omega`.
//!
//! Per realisation the estimator is
//! `chi^{-1} (1 - e^{theta s}) / vol{Y = 0}` with `s` the largest negative value
//! of `Y`. For a degenerate law `s = -eta` and the factor is exactly `eta`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::geometry::Kernel;
use crate::local_field::omega::{simulate_omega_volume, VolumeMethod};
use crate::local_field::rays::{random_directions, zero_volume};
use crate::local_field::{FieldModel, LocalField};
use crate::mc::{mean_se, replicate, McEstimate, StreamRng};

use super::{KEstimate, Route};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationOptions {
    pub reps: usize,
    /// Directions for radial integration of `vol{Y = 0}` when no exact cell
    /// area is available (integer-valued or three-dimensional fields).
    pub rays: usize,
    /// How often the simulation radius may double when the zero set comes
    /// close to it.
    pub max_doublings: usize,
    /// Overrides the default simulation radius.
    pub radius: Option<f64>,
    /// Sample the cell at a typical vertex of the line arrangement instead of
    /// the cell at the origin, where the kernel allows it (planar and centrally
    /// symmetric). Both have the same mean; the typical-vertex sample is bounded.
    #[serde(default = "yes")]
    pub typical_cell: bool,
}

fn yes() -> bool {
    true
}

impl Default for OccupationOptions {
    fn default() -> Self {
        OccupationOptions { reps: 100_000, rays: 256, max_doublings: 3, radius: None, typical_cell: true }
    }
}

/// One realisation's contribution to the occupation route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OccupationSample {
    /// `chi^{-1} (1 - e^{theta s}) / vol{Y = 0}`.
    pub value: f64,
    pub volume: f64,
    /// Largest negative value of `Y`, if one was found.
    pub negative_sup: Option<f64>,
    pub radius: f64,
    /// The zero set still came within reach of the simulation radius.
    pub truncated: bool,
    /// The largest negative value was located on sampled rays only.
    pub approximate_sup: bool,
    /// Vertices of the typical-vertex cell, when that sampler was used.
    pub cell_vertices: Option<usize>,
}

impl OccupationSample {
    fn draw(model: &FieldModel, opts: &OccupationOptions, rng: &mut StreamRng) -> Result<Self> {
        let tilt = model.tilt();
        let law = model.law();
        let mut radius = opts.radius.unwrap_or_else(|| model.default_radius());
        let mut field = model.simulate(radius, rng);
        let d = field.dim;
        let exact_cell = d == 2 && !field.arithmetic;
        let axial = field.arithmetic && model.kernel().is_box();
        let mut doublings = 0;
        let (volume, truncated, ray_sup) = loop {
            let exact = if exact_cell { Some(field.zero_cell_area()) } else { field.axis_zero_volume().filter(|_| axial) };
            let (volume, reach, ray_sup) = if let Some((v, reach)) = exact {
                (v, reach, None)
            } else {
                let dirs = random_directions(d, opts.rays, rng);
                let occ = zero_volume(&field, &dirs, radius);
                let ray_sup = if d > 2 && !law.is_degenerate() { ray_negative_sup(&field, &dirs) } else { None };
                (occ.volume, occ.max_zero_radius, ray_sup)
            };
            // exact volumes are final once the zero set stays inside the
            // simulated region; ray estimates get a factor two of margin
            let limit = if exact.is_some() { radius * (1.0 - 1e-12) } else { 0.5 * radius };
            let inside = reach < limit;
            if inside || doublings >= opts.max_doublings {
                break (volume, !inside, ray_sup);
            }
            radius *= 2.0;
            model.extend(&mut field, radius, rng);
            doublings += 1;
        };
        if !(volume > 0.0) {
            return Err(ScanError::Numerical("zero set of the local field has no volume".into()));
        }
        let (negative_sup, approximate_sup) = if law.is_degenerate() {
            (Some(-field.unit), false)
        } else if d <= 2 {
            (field.negative_sup_exact(radius)?.map(|(v, _)| v), false)
        } else {
            (ray_sup, true)
        };
        // with no negative value in range the factor is its limit 1
        let factor = negative_sup.map_or(1.0, |s| -(tilt.theta * s).exp_m1());
        Ok(OccupationSample {
            value: factor / tilt.chi / volume,
            volume,
            negative_sup,
            radius,
            truncated,
            approximate_sup,
            cell_vertices: None,
        })
    }

    /// `4 lambda_0 / n * chi^{-1} (1 - e^{theta s}) * vol(C) / vol{Y = 0}` for the
    /// cell `C` at a typical vertex, with `n` its number of vertices.
    fn draw_typical(model: &FieldModel, opts: &OccupationOptions, lambda0: f64, rng: &mut StreamRng) -> Result<Self> {
        let tilt = model.tilt();
        let law = model.law();
        let start = opts.radius.unwrap_or_else(|| model.default_radius());
        let cell = model.simulate_typical_cell(start, opts.max_doublings, rng)?;
        let mut field = cell.field;
        let mut radius = field.radius;
        let mut truncated = cell.truncated;
        // nonarithmetic fields are nonzero off the cell; otherwise the zero set
        // outside it is integrated over rays
        let mut volume = cell.area;
        let mut ratio = 1.0;
        if field.arithmetic {
            let mut doublings = 0;
            loop {
                if let Some((v, reach)) = field.axis_zero_volume().filter(|_| model.kernel().is_box()) {
                    let inside = reach < radius * (1.0 - 1e-12);
                    if inside || doublings >= opts.max_doublings {
                        volume = v;
                        ratio = cell.area / v;
                        truncated |= !inside;
                        break;
                    }
                    radius *= 2.0;
                    model.extend(&mut field, radius, rng);
                    doublings += 1;
                    continue;
                }
                let dirs = random_directions(2, opts.rays, rng);
                let (outer, reach) = outer_zero_area(&field, &dirs, radius);
                let inside = reach < 0.5 * radius;
                if inside || doublings >= opts.max_doublings {
                    let full: f64 = outer.iter().sum();
                    volume += full;
                    // vol(C) / vol{Y = 0} is convex in the ray estimate; the
                    // jackknife over the two interleaved half sets of rays
                    // removes the leading bias in the number of rays; the
                    // corrected value is kept in the range of the ratio
                    let half = |k: usize| 2.0 * outer.iter().skip(k).step_by(2).sum::<f64>();
                    let rho = |o: f64| cell.area / (cell.area + o);
                    ratio = (2.0 * rho(full) - 0.5 * (rho(half(0)) + rho(half(1)))).clamp(0.0, 1.0);
                    truncated |= !inside;
                    break;
                }
                radius *= 2.0;
                model.extend(&mut field, radius, rng);
                doublings += 1;
            }
        }
        let negative_sup =
            if law.is_degenerate() { Some(-field.unit) } else { field.negative_sup_exact(radius)?.map(|(v, _)| v) };
        let factor = negative_sup.map_or(1.0, |s| -(tilt.theta * s).exp_m1());
        let n = cell.vertices as f64;
        Ok(OccupationSample {
            value: 4.0 * lambda0 / n * factor / tilt.chi * ratio,
            volume,
            negative_sup,
            radius,
            truncated,
            approximate_sup: false,
            cell_vertices: Some(cell.vertices),
        })
    }
}

/// Per-ray contributions to the area of `{Y = 0}` outside the root cell, and
/// the largest radius at which that set was seen.
fn outer_zero_area(field: &LocalField, dirs: &[(crate::geometry::Vec3, f64)], r_max: f64) -> (Vec<f64>, f64) {
    let mut reach: f64 = 0.0;
    let parts = dirs
        .iter()
        .map(|(e, w)| {
            let steps = field.ray_profile(e, r_max).steps;
            let mut area = 0.0;
            for (k, s) in steps.iter().enumerate() {
                if s.count == 0 || s.value != 0.0 {
                    continue;
                }
                let end = steps.get(k + 1).map_or(r_max, |n| n.start.min(r_max));
                if end > s.start {
                    area += w * (end * end - s.start * s.start) / 2.0;
                    reach = reach.max(end);
                }
            }
            area
        })
        .collect();
    (parts, reach)
}

fn ray_negative_sup(field: &LocalField, dirs: &[(crate::geometry::Vec3, f64)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (e, _) in dirs {
        for s in &field.ray_profile(e, field.radius).steps {
            if s.count > 0 && s.value < 0.0 && best.is_none_or(|b| s.value > b) {
                best = Some(s.value);
            }
        }
    }
    best.map(|v| v * field.unit)
}

/// Raw per-replicate samples of the occupation route.
pub fn occupation_samples(model: &FieldModel, opts: &OccupationOptions, seed: u64) -> Result<Vec<OccupationSample>> {
    if opts.reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    match model.vertex_intensity().filter(|_| opts.typical_cell) {
        Some(lambda0) => replicate(seed, "k-occupation-typical", &[], opts.reps, |rng, _| {
            OccupationSample::draw_typical(model, opts, lambda0, rng)
        }),
        None => replicate(seed, "k-occupation", &[], opts.reps, |rng, _| OccupationSample::draw(model, opts, rng)),
    }
    .into_iter()
    .collect()
}

/// `K` by the occupation route.
pub fn k_occupation(model: &FieldModel, opts: &OccupationOptions, seed: u64) -> Result<KEstimate> {
    let samples = occupation_samples(model, opts, seed)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let (value, stderr) = mean_se(&xs);
    let n = samples.len() as f64;
    let truncated = samples.iter().filter(|s| s.truncated).count() as f64 / n;
    let missing = samples.iter().filter(|s| s.negative_sup.is_none()).count() as f64 / n;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("truncated_fraction".into(), truncated);
    diagnostics.insert("missing_negative_sup_fraction".into(), missing);
    diagnostics.insert("mean_radius".into(), samples.iter().map(|s| s.radius).sum::<f64>() / n);
    diagnostics.insert("mean_volume".into(), samples.iter().map(|s| s.volume).sum::<f64>() / n);
    let cells: Vec<f64> = samples.iter().filter_map(|s| s.cell_vertices.map(|v| v as f64)).collect();
    if !cells.is_empty() {
        diagnostics.insert("typical_cell".into(), 1.0);
        // 1/n has mean 1/4 under vertex sampling
        let (inv, inv_se) = mean_se(&cells.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
        diagnostics.insert("mean_inverse_vertices".into(), inv);
        diagnostics.insert("mean_inverse_vertices_se".into(), inv_se);
    }
    if samples.iter().any(|s| s.approximate_sup) {
        diagnostics.insert("sampled_negative_sup".into(), 1.0);
    }
    let failure = (truncated > 0.01).then(|| format!("{:.1}% of zero sets reached the simulation radius", 100.0 * truncated));
    Ok(KEstimate { value, stderr, route: Route::Occupation, reps: samples.len(), seed, diagnostics, failure })
}

/// `E[1 / vol(Omega)]`, exact cell areas in the plane and radial integration otherwise.
pub fn omega_inverse_volume(kernel: &Kernel, reps: usize, seed: u64) -> Result<McEstimate> {
    if reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let method = if kernel.dim() == 2 { VolumeMethod::Exact } else { VolumeMethod::Rays(1024) };
    let xs = replicate(seed, "omega", &[], reps, |rng, _| 1.0 / simulate_omega_volume(kernel, method, 4, rng).volume);
    Ok(McEstimate::from_samples(&xs, seed))
}

/// Upper bound `chi^{-1} (1 + M(theta))^d E[1/vol(Omega)]` for `K`, with `eta`
/// in place of `chi^{-1}` when the law is degenerate at `eta`.
pub fn k_omega_bound(model: &FieldModel, reps: usize, seed: u64) -> Result<KEstimate> {
    let tilt = model.tilt();
    let d = model.kernel().dim();
    let inv = omega_inverse_volume(model.kernel(), reps, seed)?;
    let scale = if model.law().is_degenerate() { model.law().unit() } else { 1.0 / tilt.chi };
    let factor = scale * (1.0 + tilt.m0).powi(d as i32);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("omega_inverse_volume".into(), inv.estimate);
    diagnostics.insert("omega_inverse_volume_se".into(), inv.stderr);
    Ok(KEstimate {
        value: factor * inv.estimate,
        stderr: factor * inv.stderr,
        route: Route::OmegaBound,
        reps,
        seed,
        diagnostics,
        failure: None,
    })
}
