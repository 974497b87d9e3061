//! The Gaussian-field constant `K~` for locally stationary fields with
//! covariance `1 - a ||s||^alpha` near the origin.
//!
//! The local field has `E Y(u) = -||u||^alpha` and
//! `Cov(Y(u), Y(v)) = ||u||^alpha + ||v||^alpha - ||u - v||^alpha`. It is
//! simulated exactly on a lattice from a pivoted Cholesky factor of the
//! covariance matrix, truncated once the remaining diagonal falls below a
//! relative tolerance of 1e-10. For `alpha = 2` the factor has rank `d`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::geometry::Vec3;
use crate::mc::{poly_fit, replicate, McEstimate, StreamRng};

/// Largest lattice accepted.
pub const MAX_GRID_POINTS: usize = 100_000;
/// Largest factor (points times rank) accepted.
pub const MAX_FACTOR_ENTRIES: usize = 40_000_000;
const PIVOT_TOL: f64 = 1e-10;

fn check_alpha_dim(alpha: f64, d: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ScanError::InvalidArgument(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(1..=3).contains(&d) {
        return Err(ScanError::InvalidArgument(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    Ok(())
}

fn norm_pow(u: &Vec3, alpha: f64) -> f64 {
    let r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    if alpha == 2.0 {
        r2
    } else {
        r2.powf(alpha / 2.0)
    }
}

/// `Cov(Y(u), Y(v))`.
pub fn covariance(alpha: f64, u: &Vec3, v: &Vec3) -> f64 {
    let w = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    norm_pow(u, alpha) + norm_pow(v, alpha) - norm_pow(&w, alpha)
}

/// A lattice with step `h` and its covariance factor, shared by replicates.
#[derive(Clone, Debug)]
pub struct GaussGrid {
    alpha: f64,
    dim: usize,
    step: f64,
    points: Arc<Vec<Vec3>>,
    /// Points on the outer faces of the lattice.
    boundary: Vec<usize>,
    mean: Vec<f64>,
    /// Factor columns, each of length `points.len()`.
    columns: Vec<Vec<f64>>,
}

impl GaussGrid {
    /// Lattice `{lo, lo + h, ..., hi}^d`; `lo / h` and `hi / h` must be integers
    /// so that the origin is a lattice point when it lies in the box.
    pub fn new(alpha: f64, dim: usize, lo: f64, hi: f64, step: f64) -> Result<Self> {
        check_alpha_dim(alpha, dim)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(ScanError::InvalidArgument(format!("grid step must be positive, got {step}")));
        }
        let to_index = |x: f64| -> Result<i64> {
            let q = x / step;
            if (q - q.round()).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(ScanError::InvalidArgument(format!("{x} is not a multiple of the grid step {step}")));
            }
            Ok(q.round() as i64)
        };
        let (a, b) = (to_index(lo)?, to_index(hi)?);
        if b < a {
            return Err(ScanError::InvalidArgument(format!("empty grid [{lo}, {hi}]")));
        }
        let per_axis = (b - a + 1) as usize;
        let n = per_axis.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if n > MAX_GRID_POINTS {
            return Err(ScanError::InvalidArgument(format!(
                "grid has {n} points, more than the limit of {MAX_GRID_POINTS}; use a coarser step or smaller region"
            )));
        }
        let mut points = Vec::with_capacity(n);
        let mut boundary = Vec::new();
        for idx in 0..n {
            let mut p = [0.0; 3];
            let mut r = idx;
            let mut on_face = false;
            for x in p.iter_mut().take(dim) {
                let i = (r % per_axis) as i64;
                r /= per_axis;
                on_face |= i == 0 || i == b - a;
                *x = (a + i) as f64 * step;
            }
            if on_face {
                boundary.push(idx);
            }
            points.push(p);
        }
        let mean = points.iter().map(|u| -norm_pow(u, alpha)).collect();
        let columns = pivoted_cholesky(alpha, &points)?;
        Ok(GaussGrid { alpha, dim, step, points: Arc::new(points), boundary, mean, columns })
    }

    /// `[0, m]^d`.
    pub fn corner(alpha: f64, dim: usize, m: f64, step: f64) -> Result<Self> {
        Self::new(alpha, dim, 0.0, m, step)
    }

    /// `[-m, m]^d`.
    pub fn centered(alpha: f64, dim: usize, m: f64, step: f64) -> Result<Self> {
        Self::new(alpha, dim, -m, m, step)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// One realization, optionally with the mean shifted by `Cov(Y(.), Y(tau))`.
    fn draw(&self, rng: &mut StreamRng, tilt_at: Option<usize>) -> Vec<f64> {
        let mut y = self.mean.clone();
        for col in &self.columns {
            let z: f64 = StandardNormal.sample(rng);
            for (yi, ci) in y.iter_mut().zip(col) {
                *yi += z * ci;
            }
        }
        if let Some(t) = tilt_at {
            let tau = self.points[t];
            for (yi, u) in y.iter_mut().zip(self.points.iter()) {
                *yi += covariance(self.alpha, u, &tau);
            }
        }
        y
    }

    pub fn simulate(&self, rng: &mut StreamRng) -> GaussLocalField {
        GaussLocalField {
            alpha: self.alpha,
            dim: self.dim,
            step: self.step,
            points: Arc::clone(&self.points),
            values: self.draw(rng, None),
        }
    }
}

/// Columns of a pivoted Cholesky factor `L` with `L L^T` equal to the
/// covariance matrix up to the pivot tolerance.
fn pivoted_cholesky(alpha: f64, points: &[Vec3]) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let mut diag: Vec<f64> = points.iter().map(|u| 2.0 * norm_pow(u, alpha)).collect();
    let scale = diag.iter().cloned().fold(0.0, f64::max).max(1.0);
    let tol = PIVOT_TOL * scale;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    while let Some((piv, &dmax)) = diag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        if dmax <= tol || columns.len() == n {
            break;
        }
        if (columns.len() + 1) * n > MAX_FACTOR_ENTRIES {
            return Err(ScanError::Numerical(format!(
                "covariance factor of {n} points exceeds rank {}; use a coarser step or smaller region",
                columns.len()
            )));
        }
        let root = dmax.sqrt();
        let p = points[piv];
        let mut col: Vec<f64> = points.iter().map(|u| covariance(alpha, u, &p)).collect();
        for prev in &columns {
            let lp = prev[piv];
            if lp != 0.0 {
                for (c, l) in col.iter_mut().zip(prev) {
                    *c -= lp * l;
                }
            }
        }
        for (j, c) in col.iter_mut().enumerate() {
            *c /= root;
            diag[j] -= *c * *c;
            if diag[j] < -1e-8 * scale {
                return Err(ScanError::Numerical(format!(
                    "covariance matrix is not positive semidefinite (residual diagonal {} at point {j})",
                    diag[j]
                )));
            }
        }
        diag[piv] = 0.0;
        columns.push(col);
    }
    Ok(columns)
}

/// A realization of the local field on a lattice.
#[derive(Clone, Debug)]
pub struct GaussLocalField {
    pub alpha: f64,
    pub dim: usize,
    pub step: f64,
    pub points: Arc<Vec<Vec3>>,
    pub values: Vec<f64>,
}

/// One realization on `[0, m]^d` with step `h`. Builds the factor each call;
/// use [`GaussGrid`] for repeated draws.
pub fn simulate_gauss_local(alpha: f64, d: usize, m: f64, h: f64, rng: &mut StreamRng) -> Result<GaussLocalField> {
    Ok(GaussGrid::corner(alpha, d, m, h)?.simulate(rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussRoute {
    Pickands,
    Clump,
    Thm3,
    Bound,
}

impl GaussRoute {
    pub fn as_str(&self) -> &'static str {
        match self {
            GaussRoute::Pickands => "pickands",
            GaussRoute::Clump => "clump",
            GaussRoute::Thm3 => "thm3",
            GaussRoute::Bound => "bound",
        }
    }
}

/// A `K~` estimate with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct KTildeEstimate {
    pub route: GaussRoute,
    pub estimate: McEstimate,
    pub diagnostics: BTreeMap<String, f64>,
    /// A diagnostic check failed.
    pub failure: Option<String>,
    /// Advisory only.
    pub warning: Option<String>,
}

/// Grid settings used when the caller gives none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussSettings {
    /// Box sizes for the sup route.
    pub m_list: Vec<f64>,
    pub sup_step: f64,
    /// Half-width of the region for the set routes.
    pub region: f64,
    pub region_step: f64,
}

impl GaussSettings {
    pub fn default_for(alpha: f64, d: usize) -> Self {
        let smooth = alpha == 2.0;
        match (d, smooth) {
            (1, true) => GaussSettings { m_list: vec![2.0, 4.0, 6.0, 8.0], sup_step: 1.0 / 32.0, region: 8.0, region_step: 1.0 / 64.0 },
            (1, false) => GaussSettings { m_list: vec![2.0, 4.0, 6.0, 8.0], sup_step: 1.0 / 32.0, region: 24.0, region_step: 1.0 / 32.0 },
            (2, true) => GaussSettings { m_list: vec![4.0, 8.0, 12.0, 16.0], sup_step: 1.0 / 16.0, region: 6.0, region_step: 1.0 / 16.0 },
            // a dense factor limits rough planar fields to small regions
            (2, false) => GaussSettings { m_list: vec![1.0, 2.0, 3.0, 4.0], sup_step: 1.0 / 8.0, region: 4.0, region_step: 1.0 / 4.0 },
            (_, true) => GaussSettings { m_list: vec![1.0, 1.25, 1.5, 1.75, 2.0], sup_step: 1.0 / 8.0, region: 4.0, region_step: 1.0 / 8.0 },
            (_, false) => GaussSettings { m_list: vec![0.5, 0.75, 1.0, 1.25, 1.5], sup_step: 1.0 / 4.0, region: 2.0, region_step: 1.0 / 4.0 },
        }
    }
}

/// `K~ = lim m^{-d} int_0^inf e^y P{sup_{[0,m]^d} Y >= y} dy = lim m^{-d} (E e^{S_m} - 1)`.
///
/// `E e^{S_m}` is estimated under the change of measure `e^{Y(tau)}` with `tau`
/// uniform on the lattice, giving the bounded sample `N / sum_j e^{Y_j - S}`.
/// The normalized values are fitted by a polynomial of degree `d` in `1/m`.
pub fn ktilde_pickands(alpha: f64, d: usize, m_list: &[f64], h: f64, reps: usize, seed: u64) -> Result<KTildeEstimate> {
    check_alpha_dim(alpha, d)?;
    if m_list.len() < d + 2 || m_list.windows(2).any(|w| w[1] <= w[0]) || m_list[0] <= 0.0 {
        return Err(ScanError::InvalidArgument(format!(
            "need at least {} positive, strictly increasing box sizes, got {m_list:?}",
            d + 2
        )));
    }
    if reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let mut diagnostics = BTreeMap::new();
    let mut warning = None;
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &m) in m_list.iter().enumerate() {
        let grid = GaussGrid::corner(alpha, d, m, h)?;
        let n = grid.len();
        let vol = m.powi(d as i32);
        let samples = replicate(seed, "gauss-pickands", &[i as u64, m.to_bits()], reps, |rng, _| {
            let tau = rng.random_range(0..n);
            let y = grid.draw(rng, Some(tau));
            let s = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = y.iter().map(|v| (v - s).exp()).sum();
            (n as f64 / denom - 1.0) / vol
        });
        let est = McEstimate::from_samples(&samples, seed);
        let top = samples.iter().cloned().fold(0.0, f64::max);
        let total: f64 = samples.iter().sum();
        if total > 0.0 && top > 0.1 * total {
            warning = Some(format!("one sample carries over 10% of the mean at m = {m}; increase m or reps"));
        }
        diagnostics.insert(format!("k_m/m^d@{m}"), est.estimate);
        diagnostics.insert(format!("se@{m}"), est.stderr);
        xs.push(1.0 / m);
        ys.push(est.estimate);
        ws.push(1.0 / est.stderr.max(1e-300).powi(2));
    }
    let (coef, cov, chi2) = poly_fit(&xs, &ys, &ws, d)
        .ok_or_else(|| ScanError::Numerical("extrapolation in 1/m is singular".into()))?;
    let dof = (xs.len() - d - 1) as f64;
    diagnostics.insert("fit_chi2".into(), chi2);
    diagnostics.insert("fit_dof".into(), dof);
    let failure = (chi2 > chi2_upper(dof)).then(|| format!("extrapolation misfit: chi2 = {chi2:.2} on {dof} dof"));
    Ok(KTildeEstimate {
        route: GaussRoute::Pickands,
        estimate: McEstimate { estimate: coef[0], stderr: cov[0][0].max(0.0).sqrt(), reps, seed },
        diagnostics,
        failure,
        warning,
    })
}

/// Upper 99.9% point of chi-square (Wilson-Hilferty).
fn chi2_upper(dof: f64) -> f64 {
    let z = 3.090232306167813;
    let a = 2.0 / (9.0 * dof);
    dof * (1.0 - a + z * a.sqrt()).powi(3)
}

fn check_region(region: f64, h: f64) -> Result<()> {
    if !(region.is_finite() && region > 0.0) {
        return Err(ScanError::InvalidArgument(format!("region half-width must be positive, got {region}")));
    }
    if !(h.is_finite() && h > 0.0 && h < region) {
        return Err(ScanError::InvalidArgument(format!("grid step must lie in (0, region), got {h}")));
    }
    Ok(())
}

/// `K~ = E[1 / vol{u: Y(u) >= -Z}]` with `Z ~ Exp(1)` independent of `Y`,
/// volumes counted on the lattice over `[-region, region]^d`.
pub fn ktilde_clump(alpha: f64, d: usize, region: f64, h: f64, reps: usize, seed: u64) -> Result<KTildeEstimate> {
    check_region(region, h)?;
    if reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let grid = GaussGrid::centered(alpha, d, region, h)?;
    let cell = h.powi(d as i32);
    let out = replicate(seed, "gauss-clump", &[], reps, |rng, _| {
        let y = grid.draw(rng, None);
        let z: f64 = Exp1.sample(rng);
        let count = y.iter().filter(|&&v| v >= -z).count();
        let truncated = grid.boundary.iter().any(|&i| y[i] >= -z);
        (1.0 / (count as f64 * cell), truncated)
    });
    let xs: Vec<f64> = out.iter().map(|o| o.0).collect();
    let truncated = out.iter().filter(|o| o.1).count() as f64 / reps as f64;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("truncated_fraction".into(), truncated);
    diagnostics.insert("grid_points".into(), grid.len() as f64);
    diagnostics.insert("rank".into(), grid.rank() as f64);
    let failure = (truncated > 0.01).then(|| format!("{:.1}% of excursion sets reached the region boundary", 100.0 * truncated));
    Ok(KTildeEstimate { route: GaussRoute::Clump, estimate: McEstimate::from_samples(&xs, seed), diagnostics, failure, warning: None })
}

/// `K~ = lim_{xi -> 0} int_0^xi E[1 / vol{u: -b < Y(u) <= xi - b}] db` by the
/// midpoint rule with `nodes` points, evaluated at `xi` and `xi / 2` on the same
/// fields. The reported value is the one at `xi`; the Richardson value
/// `2 I(xi/2) - I(xi)` and the halving difference are diagnostics.
pub fn ktilde_thm3(
    alpha: f64,
    d: usize,
    xi: f64,
    nodes: usize,
    region: f64,
    h: f64,
    reps: usize,
    seed: u64,
) -> Result<KTildeEstimate> {
    if !(xi > 0.0 && xi <= 0.5) {
        return Err(ScanError::InvalidArgument(format!("xi must lie in (0, 0.5], got {xi}")));
    }
    if nodes == 0 {
        return Err(ScanError::InvalidArgument("need at least one quadrature node".into()));
    }
    check_region(region, h)?;
    if reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let grid = GaussGrid::centered(alpha, d, region, h)?;
    let cell = h.powi(d as i32);
    // slab count with sorted values: #{-b < y <= w - b}
    let integral = |sorted: &[f64], w: f64| -> Option<f64> {
        let mut acc = 0.0;
        for i in 0..nodes {
            let b = (i as f64 + 0.5) * w / nodes as f64;
            let lo = sorted.partition_point(|&v| v <= -b);
            let hi = sorted.partition_point(|&v| v <= w - b);
            if hi == lo {
                return None;
            }
            acc += 1.0 / ((hi - lo) as f64 * cell);
        }
        Some(acc * w / nodes as f64)
    };
    let out = replicate(seed, "gauss-thm3", &[], reps, |rng, _| {
        let y = grid.draw(rng, None);
        let truncated = grid.boundary.iter().any(|&i| y[i] > -xi);
        let mut sorted = y;
        sorted.sort_by(f64::total_cmp);
        (integral(&sorted, xi), integral(&sorted, xi / 2.0), truncated)
    });
    let valid: Vec<(f64, f64)> = out.iter().filter_map(|o| Some((o.0?, o.1?))).collect();
    let empty = (reps - valid.len()) as f64 / reps as f64;
    let truncated = out.iter().filter(|o| o.2).count() as f64 / reps as f64;
    if valid.len() < 2 {
        return Err(ScanError::Numerical("every replicate had an empty slab; refine the grid".into()));
    }
    let full: Vec<f64> = valid.iter().map(|v| v.0).collect();
    let half: Vec<f64> = valid.iter().map(|v| v.1).collect();
    let diff: Vec<f64> = valid.iter().map(|v| v.1 - v.0).collect();
    let e_full = McEstimate::from_samples(&full, seed);
    let e_half = McEstimate::from_samples(&half, seed);
    let e_diff = McEstimate::from_samples(&diff, seed);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("half_xi_estimate".into(), e_half.estimate);
    diagnostics.insert("half_xi_stderr".into(), e_half.stderr);
    diagnostics.insert("richardson".into(), 2.0 * e_half.estimate - e_full.estimate);
    diagnostics.insert("halving_difference".into(), e_diff.estimate);
    diagnostics.insert("halving_difference_se".into(), e_diff.stderr);
    diagnostics.insert("empty_slab_fraction".into(), empty);
    diagnostics.insert("truncated_fraction".into(), truncated);
    let mut failure = None;
    // paired difference; allow 5% systematic drift besides noise
    if e_diff.estimate.abs() > 4.0 * e_diff.stderr + 0.05 * e_full.estimate.abs() {
        failure = Some(format!("unstable under halving xi: difference {:.4} +- {:.4}", e_diff.estimate, e_diff.stderr));
    } else if truncated > 0.01 {
        failure = Some(format!("{:.1}% of slabs reached the region boundary", 100.0 * truncated));
    } else if empty > 0.01 {
        failure = Some(format!("{:.1}% of replicates had an empty slab; refine the grid", 100.0 * empty));
    }
    Ok(KTildeEstimate { route: GaussRoute::Thm3, estimate: e_full, diagnostics, failure, warning: None })
}

/// `K~ >= d^{-1} pi^{(1-d)/2} 4^{1-d/alpha} alpha Gamma(d/2+1) / Gamma(d/alpha - 1/2)`.
pub fn ktilde_lower_bound(alpha: f64, d: usize) -> Result<f64> {
    check_alpha_dim(alpha, d)?;
    let df = d as f64;
    let g = df / alpha - 0.5;
    if g <= 1e-12 {
        return Err(ScanError::InvalidArgument(format!(
            "the bound needs d / alpha > 1/2, got d = {d} and alpha = {alpha}"
        )));
    }
    Ok(std::f64::consts::PI.powf((1.0 - df) / 2.0) * 4f64.powf(1.0 - df / alpha) * alpha * libm::tgamma(df / 2.0 + 1.0)
        / (df * libm::tgamma(g)))
}

/// `P{sup_D X >= c} ~ vol(D) (2 pi)^{-1/2} c^{2d/alpha - 1} e^{-c^2/2} a^{d/alpha} K~`.
pub fn tail_p_gauss(alpha: f64, d: usize, a: f64, c: f64, domain_volume: f64, ktilde: f64) -> Result<f64> {
    check_alpha_dim(alpha, d)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(ScanError::InvalidArgument(format!("level c must be positive, got {c}")));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(ScanError::InvalidArgument(format!("scale a must be positive, got {a}")));
    }
    if !(domain_volume.is_finite() && domain_volume > 0.0) {
        return Err(ScanError::InvalidArgument(format!("domain volume must be positive, got {domain_volume}")));
    }
    if !(ktilde.is_finite() && ktilde > 0.0) {
        return Err(ScanError::InvalidArgument(format!("K~ must be positive, got {ktilde}")));
    }
    let e = d as f64 / alpha;
    let log_p = -0.5 * (2.0 * std::f64::consts::PI).ln() + (2.0 * e - 1.0) * c.ln() - 0.5 * c * c + e * a.ln()
        + ktilde.ln()
        + domain_volume.ln();
    Ok(log_p.exp())
}
