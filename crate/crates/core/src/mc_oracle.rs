//! Brute-force ground truth: simulate the marked Poisson field at a finite
//! rate, scan it with the kernel over a box of shifts and count exceedances.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::geometry::{Kernel, Vec3};
use crate::marks::MarkLaw;
use crate::mc::{replicate, wilson_half_width, McEstimate};

/// Axis-aligned box of shifts `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec3,
    pub hi: Vec3,
    pub dim: usize,
}

impl BoxDomain {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || !(1..=3).contains(&lo.len()) {
            return Err(ScanError::InvalidArgument(format!(
                "domain corners must both have 1 to 3 coordinates, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite() && hi[k] > lo[k]) {
                return Err(ScanError::InvalidArgument(format!("domain side {k} is empty: [{}, {}]", lo[k], hi[k])));
            }
            a[k] = lo[k];
            b[k] = hi[k];
        }
        Ok(BoxDomain { lo: a, hi: b, dim: lo.len() })
    }

    /// `[0, side]^d`.
    pub fn cube(side: f64, dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim], &vec![side; dim])
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.hi[k] - self.lo[k]).product()
    }
}

/// One realization of the marked field on a window covering `D + B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldRealization {
    pub points: Vec<(Vec3, f64)>,
    pub window: (Vec3, Vec3),
    pub lambda: f64,
    pub dim: usize,
}

/// Homogeneous Poisson locations of rate `lambda` on the Minkowski sum of
/// `domain` and the kernel's bounding box, with i.i.d. marks.
pub fn simulate_field<R: Rng>(
    lambda: f64,
    domain: &BoxDomain,
    kernel: &Kernel,
    law: &MarkLaw,
    rng: &mut R,
) -> Result<FieldRealization> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ScanError::InvalidArgument(format!("rate lambda must be positive, got {lambda}")));
    }
    check_dims(domain, kernel)?;
    let (klo, khi) = kernel.bounding_box();
    let dim = domain.dim;
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for k in 0..dim {
        lo[k] = domain.lo[k] + klo[k];
        hi[k] = domain.hi[k] + khi[k];
    }
    let vol: f64 = (0..dim).map(|k| hi[k] - lo[k]).product();
    let n = Poisson::new(lambda * vol)
        .map_err(|e| ScanError::InvalidArgument(format!("cannot draw a Poisson count: {e}")))?
        .sample(rng) as usize;
    let points = (0..n)
        .map(|_| {
            let mut t = [0.0; 3];
            for k in 0..dim {
                t[k] = lo[k] + (hi[k] - lo[k]) * rng.random::<f64>();
            }
            (t, law.sample(rng))
        })
        .collect();
    Ok(FieldRealization { points, window: (lo, hi), lambda, dim })
}

fn check_dims(domain: &BoxDomain, kernel: &Kernel) -> Result<()> {
    if domain.dim != kernel.dim() {
        return Err(ScanError::InvalidArgument(format!(
            "domain has dimension {} but the kernel has dimension {}",
            domain.dim,
            kernel.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ScanMethod {
    /// Lattice of shifts with spacing `step`, endpoints included.
    Grid { step: f64 },
    /// Exact supremum over all shifts, box kernels in one or two dimensions.
    ExactBoxSweep,
}

/// Smallest bounding-box side of the kernel over 20.
pub fn default_grid_step(kernel: &Kernel) -> f64 {
    let (lo, hi) = kernel.bounding_box();
    (0..kernel.dim()).map(|k| hi[k] - lo[k]).fold(f64::INFINITY, f64::min) / 20.0
}

/// `sup_{v in D} S(v + B)`; an empty kernel position contributes 0.
pub fn sup_scan(field: &FieldRealization, kernel: &Kernel, domain: &BoxDomain, method: ScanMethod) -> Result<f64> {
    check_dims(domain, kernel)?;
    match method {
        ScanMethod::Grid { step } => {
            if !(step.is_finite() && step > 0.0) {
                return Err(ScanError::InvalidArgument(format!("grid step must be positive, got {step}")));
            }
            Ok(grid_sup(field, kernel, domain, step))
        }
        ScanMethod::ExactBoxSweep => {
            let b = kernel.box_sides().ok_or_else(|| {
                ScanError::InvalidArgument(format!("exact sweep needs a box kernel, got {}", kernel.label()))
            })?;
            match b.len() {
                1 => Ok(sweep_1d(field, b[0], domain)),
                2 => Ok(sweep_2d(field, b, domain)),
                d => Err(ScanError::InvalidArgument(format!("exact sweep supports d <= 2, got d = {d}"))),
            }
        }
    }
}

fn axis_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step - 1e-9).ceil().max(0.0) as usize;
    (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect()
}

fn grid_sup(field: &FieldRealization, kernel: &Kernel, domain: &BoxDomain, step: f64) -> f64 {
    let (klo, khi) = kernel.bounding_box();
    let mut pts = field.points.clone();
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    let xs: Vec<f64> = pts.iter().map(|p| p.0[0]).collect();
    let axes: Vec<Vec<f64>> = (0..domain.dim).map(|k| axis_grid(domain.lo[k], domain.hi[k], step)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut best: f64 = 0.0;
    for idx in 0..total {
        let mut v = [0.0; 3];
        let mut r = idx;
        for (k, axis) in axes.iter().enumerate() {
            v[k] = axis[r % axis.len()];
            r /= axis.len();
        }
        let a = xs.partition_point(|&x| x < v[0] + klo[0]);
        let b = xs.partition_point(|&x| x <= v[0] + khi[0]);
        let s: f64 = pts[a..b]
            .iter()
            .filter(|(t, _)| kernel.contains(&[t[0] - v[0], t[1] - v[1], t[2] - v[2]]))
            .map(|p| p.1)
            .sum();
        best = best.max(s);
    }
    best
}

/// Candidate shifts along one axis. With nonnegative marks the supremum is
/// attained with the lower face on a point or at the top of the domain;
/// otherwise every cell of the breakpoint arrangement is visited.
fn candidates(coords: impl Iterator<Item = f64>, side: f64, lo: f64, hi: f64, nonnegative: bool) -> Vec<f64> {
    let mut c: Vec<f64> = vec![hi];
    if nonnegative {
        c.extend(coords.filter(|&t| t >= lo && t <= hi));
    } else {
        c.push(lo);
        for t in coords {
            for s in [t, t - side] {
                if s >= lo && s <= hi {
                    c.push(s);
                }
            }
        }
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    if !nonnegative {
        let mids: Vec<f64> = c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        c.extend(mids);
        c.sort_by(f64::total_cmp);
    }
    c
}

/// Maximum window sum over increasing candidate shifts, `items` sorted by coordinate.
fn slide(items: &[(f64, f64)], cands: &[f64], side: f64) -> f64 {
    let (mut a, mut b) = (0, 0);
    let mut s = 0.0;
    let mut best: f64 = 0.0;
    for &v in cands {
        while b < items.len() && items[b].0 - v <= side {
            s += items[b].1;
            b += 1;
        }
        while a < b && items[a].0 < v {
            s -= items[a].1;
            a += 1;
        }
        best = best.max(s);
    }
    best
}

fn sweep_1d(field: &FieldRealization, side: f64, domain: &BoxDomain) -> f64 {
    let mut items: Vec<(f64, f64)> = field.points.iter().map(|(t, x)| (t[0], *x)).collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nonneg = items.iter().all(|p| p.1 >= 0.0);
    let c = candidates(items.iter().map(|p| p.0), side, domain.lo[0], domain.hi[0], nonneg);
    slide(&items, &c, side)
}

fn sweep_2d(field: &FieldRealization, b: &[f64], domain: &BoxDomain) -> f64 {
    let mut pts: Vec<(Vec3, f64)> = field.points.clone();
    pts.sort_by(|p, q| p.0[1].total_cmp(&q.0[1]));
    let nonneg = pts.iter().all(|p| p.1 >= 0.0);
    let cx = candidates(pts.iter().map(|p| p.0[0]), b[0], domain.lo[0], domain.hi[0], nonneg);
    let mut best: f64 = 0.0;
    let mut strip: Vec<(f64, f64)> = Vec::new();
    for &vx in &cx {
        strip.clear();
        strip.extend(pts.iter().filter(|p| p.0[0] >= vx && p.0[0] - vx <= b[0]).map(|p| (p.0[1], p.1)));
        if strip.is_empty() {
            continue;
        }
        let cy = candidates(strip.iter().map(|p| p.0), b[1], domain.lo[1], domain.hi[1], nonneg);
        best = best.max(slide(&strip, &cy, b[1]));
    }
    best
}

/// Empirical exceedance probability with a 95% Wilson half-width as `stderr`.
#[derive(Clone, Debug, Serialize)]
pub struct OracleEstimate {
    pub estimate: McEstimate,
    pub exceedances: usize,
    pub threshold: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Scan maxima of `reps` independent fields, in replicate order.
pub fn scan_replicates(
    lambda: f64,
    domain: &BoxDomain,
    kernel: &Kernel,
    law: &MarkLaw,
    method: ScanMethod,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    // validate once so replicate closures cannot fail on arguments
    check_dims(domain, kernel)?;
    if let ScanMethod::ExactBoxSweep = method {
        if kernel.box_sides().is_none_or(|b| b.len() > 2) {
            return Err(ScanError::InvalidArgument(format!(
                "exact sweep needs a box kernel in one or two dimensions, got {}",
                kernel.label()
            )));
        }
    }
    let out = replicate(seed, "oracle", &[lambda.to_bits()], reps, |rng, _| {
        simulate_field(lambda, domain, kernel, law, rng).and_then(|f| sup_scan(&f, kernel, domain, method))
    });
    out.into_iter().collect()
}

/// `P{sup_v S(v + B) >= lambda c}` by direct simulation.
pub fn estimate_p(
    lambda: f64,
    domain: &BoxDomain,
    kernel: &Kernel,
    law: &MarkLaw,
    c: f64,
    method: ScanMethod,
    reps: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if reps == 0 {
        return Err(ScanError::InvalidArgument("need at least one replicate".into()));
    }
    let sups = scan_replicates(lambda, domain, kernel, law, method, reps, seed)?;
    let mut est = summarize(&sups, lambda * c, seed);
    if let ScanMethod::Grid { step } = method {
        // refinement check on a prefix of the same replicates
        let n = reps.min(200);
        let fine = scan_replicates(lambda, domain, kernel, law, ScanMethod::Grid { step: step / 2.0 }, n, seed)?;
        let changed = sups.iter().zip(&fine).filter(|(a, b)| (**a >= lambda * c) != (**b >= lambda * c)).count();
        est.diagnostics.insert("refinement_changed_fraction".into(), changed as f64 / n as f64);
    }
    Ok(est)
}

/// Exceedance summary of precomputed scan maxima.
pub fn summarize(sups: &[f64], threshold: f64, seed: u64) -> OracleEstimate {
    let n = sups.len();
    let k = sups.iter().filter(|&&s| s >= threshold).count();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("mean_sup".into(), sups.iter().sum::<f64>() / n.max(1) as f64);
    OracleEstimate {
        estimate: McEstimate {
            estimate: k as f64 / n as f64,
            stderr: wilson_half_width(k, n, 1.959963984540054),
            reps: n,
            seed,
        },
        exceedances: k,
        threshold,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use rand::Rng;
    use proptest::prelude::*;

    fn field(points: Vec<(Vec3, f64)>, dim: usize) -> FieldRealization {
        FieldRealization { points, window: ([0.0; 3], [0.0; 3]), lambda: 1.0, dim }
    }

    fn random_points(n: usize, side: f64, dim: usize, signed: bool, seed: u64) -> Vec<(Vec3, f64)> {
        let mut rng = stream(seed, "pts", &[]);
        (0..n)
            .map(|_| {
                let mut t = [0.0; 3];
                for x in t.iter_mut().take(dim) {
                    *x = side * rng.random::<f64>();
                }
                let m = if signed { rng.random::<f64>() * 2.0 - 0.8 } else { rng.random::<f64>() + 0.2 };
                (t, m)
            })
            .collect()
    }

    /// Maximum over all windows by trying every arrangement cell directly.
    fn brute_force_2d(pts: &[(Vec3, f64)], b: &[f64], d: &BoxDomain) -> f64 {
        let axis = |k: usize| {
            let mut c = vec![d.lo[k], d.hi[k]];
            for p in pts {
                for s in [p.0[k], p.0[k] - b[k]] {
                    if s >= d.lo[k] && s <= d.hi[k] {
                        c.push(s);
                    }
                }
            }
            c.sort_by(f64::total_cmp);
            let mids: Vec<f64> = c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            c.extend(mids);
            c
        };
        let kern = Kernel::boxed(b).unwrap();
        let mut best: f64 = 0.0;
        for &x in &axis(0) {
            for &y in &axis(1) {
                let s: f64 =
                    pts.iter().filter(|p| kern.contains(&[p.0[0] - x, p.0[1] - y, 0.0])).map(|p| p.1).sum();
                best = best.max(s);
            }
        }
        best
    }

    #[test]
    fn expected_count_matches_the_window_volume() {
        let kern = Kernel::boxed(&[1.0, 0.5]).unwrap();
        let dom = BoxDomain::cube(2.0, 2).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        let counts: Vec<f64> = (0..1000)
            .map(|i| simulate_field(5.0, &dom, &kern, &law, &mut stream(1, "count", &[i])).unwrap().points.len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / 1000.0;
        let expect = 5.0 * 3.0 * 2.5;
        assert!((mean - expect).abs() < 4.0 * (expect / 1000.0).sqrt(), "{mean} vs {expect}");
    }

    #[test]
    fn disjoint_halves_have_independent_counts() {
        let kern = Kernel::boxed(&[1.0]).unwrap();
        let dom = BoxDomain::cube(1.0, 1).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        // 2x2 contingency table of (left count > median, right count > median)
        let mut table = [[0.0f64; 2]; 2];
        for i in 0..2000 {
            let f = simulate_field(4.0, &dom, &kern, &law, &mut stream(2, "indep", &[i])).unwrap();
            let left = f.points.iter().filter(|p| p.0[0] < 1.0).count();
            let right = f.points.len() - left;
            table[(left > 4) as usize][(right > 4) as usize] += 1.0;
        }
        let n = 2000.0;
        let mut chi2 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let e = (table[r][0] + table[r][1]) * (table[0][c] + table[1][c]) / n;
                chi2 += (table[r][c] - e).powi(2) / e;
            }
        }
        // 99th percentile of chi-square with one degree of freedom
        assert!(chi2 < 6.635, "{chi2} {table:?}");
    }

    #[test]
    fn tiny_rate_gives_empty_fields() {
        let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let dom = BoxDomain::cube(1.0, 2).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        let sups = scan_replicates(1e-9, &dom, &kern, &law, ScanMethod::ExactBoxSweep, 50, 3).unwrap();
        assert!(sups.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_point_and_empty_field() {
        let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let dom = BoxDomain::cube(5.0, 2).unwrap();
        let one = field(vec![([2.3, 1.7, 0.0], 2.5)], 2);
        for m in [ScanMethod::ExactBoxSweep, ScanMethod::Grid { step: 0.05 }] {
            assert_eq!(sup_scan(&one, &kern, &dom, m).unwrap(), 2.5);
            assert_eq!(sup_scan(&field(vec![], 2), &kern, &dom, m).unwrap(), 0.0);
        }
        let ball = Kernel::ball(1.0, 2).unwrap();
        assert_eq!(sup_scan(&one, &ball, &dom, ScanMethod::Grid { step: 0.1 }).unwrap(), 2.5);
    }

    #[test]
    fn sweep_rejects_other_kernels() {
        let dom = BoxDomain::cube(1.0, 2).unwrap();
        let f = field(vec![], 2);
        assert!(sup_scan(&f, &Kernel::ball(1.0, 2).unwrap(), &dom, ScanMethod::ExactBoxSweep).is_err());
        let dom3 = BoxDomain::cube(1.0, 3).unwrap();
        let f3 = field(vec![], 3);
        assert!(sup_scan(&f3, &Kernel::boxed(&[1.0; 3]).unwrap(), &dom3, ScanMethod::ExactBoxSweep).is_err());
    }

    #[test]
    fn sweep_matches_brute_force() {
        let b = [1.0, 0.7];
        let kern = Kernel::boxed(&b).unwrap();
        let dom = BoxDomain::new(&[0.5, 0.2], &[2.5, 3.0]).unwrap();
        for (seed, signed) in [(1, false), (2, true), (3, true), (4, false)] {
            let pts = random_points(60, 4.0, 2, signed, seed);
            let f = field(pts.clone(), 2);
            let s = sup_scan(&f, &kern, &dom, ScanMethod::ExactBoxSweep).unwrap();
            let brute = brute_force_2d(&pts, &b, &dom);
            assert!((s - brute).abs() < 1e-12, "seed {seed}: {s} vs {brute}");
        }
    }

    #[test]
    fn grid_converges_to_the_sweep() {
        let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let dom = BoxDomain::cube(2.0, 2).unwrap();
        let f = field(random_points(50, 3.0, 2, false, 5), 2);
        let exact = sup_scan(&f, &kern, &dom, ScanMethod::ExactBoxSweep).unwrap();
        let mut last = 0.0;
        for h in [0.2, 0.05, 0.01, 0.002] {
            let g = sup_scan(&f, &kern, &dom, ScanMethod::Grid { step: h }).unwrap();
            assert!(g <= exact + 1e-12);
            last = g;
        }
        assert!((last - exact).abs() < 1e-12, "{last} vs {exact}");
    }

    #[test]
    fn one_dimensional_sweep() {
        let kern = Kernel::boxed(&[1.0]).unwrap();
        let dom = BoxDomain::cube(3.0, 1).unwrap();
        let f = field(vec![([0.5, 0.0, 0.0], 1.0), ([1.4, 0.0, 0.0], 1.0), ([1.6, 0.0, 0.0], 1.0), ([3.9, 0.0, 0.0], 5.0)], 1);
        assert_eq!(sup_scan(&f, &kern, &dom, ScanMethod::ExactBoxSweep).unwrap(), 5.0);
        let signed = field(vec![([0.5, 0.0, 0.0], 2.0), ([1.0, 0.0, 0.0], -3.0), ([1.2, 0.0, 0.0], 2.0)], 1);
        assert_eq!(sup_scan(&signed, &kern, &dom, ScanMethod::ExactBoxSweep).unwrap(), 2.0);
    }

    #[test]
    fn low_threshold_is_always_exceeded() {
        let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let dom = BoxDomain::cube(2.0, 2).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        let e = estimate_p(50.0, &dom, &kern, &law, 0.5, ScanMethod::ExactBoxSweep, 200, 6).unwrap();
        assert_eq!(e.estimate.estimate, 1.0);
        assert!(e.estimate.stderr > 0.0 && e.estimate.stderr < 0.02);
    }

    #[test]
    fn grid_estimate_reports_refinement() {
        let kern = Kernel::ball(0.5, 2).unwrap();
        let dom = BoxDomain::cube(1.0, 2).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        let step = default_grid_step(&kern);
        let e = estimate_p(10.0, &dom, &kern, &law, 2.0, ScanMethod::Grid { step }, 100, 7).unwrap();
        let p = e.estimate.estimate;
        assert!((0.0..=1.0).contains(&p));
        assert!(e.diagnostics.contains_key("refinement_changed_fraction"));
    }

    #[test]
    fn seeds_reproduce() {
        let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let dom = BoxDomain::cube(2.0, 2).unwrap();
        let law = MarkLaw::gaussian(0.0, 1.0).unwrap();
        let a = scan_replicates(8.0, &dom, &kern, &law, ScanMethod::ExactBoxSweep, 30, 9).unwrap();
        let b = scan_replicates(8.0, &dom, &kern, &law, ScanMethod::ExactBoxSweep, 30, 9).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn adding_a_positive_point_never_lowers_the_sup(seed in 0u64..1000, x in 0.0f64..3.0, y in 0.0f64..3.0, m in 0.0f64..2.0) {
            let kern = Kernel::boxed(&[1.0, 1.0]).unwrap();
            let dom = BoxDomain::cube(2.0, 2).unwrap();
            let pts = random_points(30, 3.0, 2, true, seed);
            let before = sup_scan(&field(pts.clone(), 2), &kern, &dom, ScanMethod::ExactBoxSweep).unwrap();
            let mut more = pts;
            more.push(([x, y, 0.0], m));
            let after = sup_scan(&field(more, 2), &kern, &dom, ScanMethod::ExactBoxSweep).unwrap();
            prop_assert!(after >= before - 1e-12);
        }

        #[test]
        fn translation_invariance(seed in 0u64..1000, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
            let kern = Kernel::boxed(&[1.0, 0.8]).unwrap();
            let dom = BoxDomain::cube(2.0, 2).unwrap();
            let pts = random_points(30, 3.0, 2, false, seed);
            let s = sup_scan(&field(pts.clone(), 2), &kern, &dom, ScanMethod::ExactBoxSweep).unwrap();
            let shifted: Vec<_> = pts.iter().map(|(t, m)| ([t[0] + dx, t[1] + dy, 0.0], *m)).collect();
            let dom2 = BoxDomain::new(&[dx, dy], &[2.0 + dx, 2.0 + dy]).unwrap();
            let s2 = sup_scan(&field(shifted, 2), &kern, &dom2, ScanMethod::ExactBoxSweep).unwrap();
            prop_assert!((s - s2).abs() < 1e-9, "{s} vs {s2}");
            let g = sup_scan(&field(pts, 2), &kern, &dom, ScanMethod::Grid { step: 0.1 }).unwrap();
            prop_assert!(g <= s + 1e-12);
        }
    }
}
