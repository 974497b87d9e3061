//! `K` from suprema of the local field over growing boxes.
//!
//! For every law, `K_m = E[e^{theta S_m}] / chi` where `S_m` is the supremum of
//! `Y` over `[0, m]^d` (`S_m >= Y(0) = 0`). The plain estimator averages
//! `e^{theta S_m}`, whose variance grows like `m^{2d}`. The default estimator
//! draws `tau` uniformly from the lattice points of the box, simulates the
//! field under the density `e^{theta Y(tau)}` and returns
//! `N / sum_j e^{theta (Y(u_j) - S_m)}`, which has the same mean and a relative
//! variance that stays bounded in `m`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::local_field::FieldModel;
use crate::marks::TiltSolution;
use crate::mc::{poly_fit, replicate, McEstimate};

use super::{KEstimate, Route};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupEstimator {
    Plain,
    Importance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSupOptions {
    pub m_list: Vec<f64>,
    pub reps: usize,
    /// Lattice step used for the change of measure.
    pub grid_step: f64,
    pub estimator: SupEstimator,
}

impl Default for LocalSupOptions {
    fn default() -> Self {
        LocalSupOptions { m_list: vec![4.0, 8.0, 12.0, 16.0], reps: 2000, grid_step: 0.25, estimator: SupEstimator::Importance }
    }
}

/// `theta^{-1} + int_0^inf e^{theta y} P{S >= y} dy` for one sampled `S >= 0`
/// (`eta [(1 - e^{-eta theta})^{-1} + sum_{l in eta N} e^{theta l} 1{S >= l}]`
/// for span `eta`). Both equal `e^{theta S} / chi`.
pub fn local_tail_integral(sup: f64, tilt: &TiltSolution) -> f64 {
    (tilt.theta * sup).exp() / tilt.chi
}

/// Monte Carlo estimate of `K_m`.
pub fn k_m(model: &FieldModel, m: f64, opts: &LocalSupOptions, seed: u64) -> Result<McEstimate> {
    if !(m.is_finite() && m > 0.0) {
        return Err(ScanError::InvalidArgument(format!("box size m must be positive, got {m}")));
    }
    if opts.reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let d = model.kernel().dim();
    let tilt = model.tilt();
    let radius = m * (d as f64).sqrt() * (1.0 + 1e-9);
    let samples: Vec<Result<f64>> = match opts.estimator {
        SupEstimator::Plain => replicate(seed, "k-m-plain", &[m.to_bits()], opts.reps, |rng, _| {
            let f = model.simulate(radius, rng);
            Ok(local_tail_integral(f.sup_box(m)?, tilt))
        }),
        SupEstimator::Importance => {
            let g = (m / opts.grid_step).round().max(1.0) as usize;
            let n1 = g + 1;
            let total = n1.pow(d as u32);
            let h = m / g as f64;
            replicate(seed, "k-m-is", &[m.to_bits(), g as u64], opts.reps, |rng, _| {
                use rand::Rng;
                let idx = rng.random_range(0..total);
                let mut tau = [0.0; 3];
                let mut rest = idx;
                for t in tau.iter_mut().take(d) {
                    *t = (rest % n1) as f64 * h;
                    rest /= n1;
                }
                let f = model.simulate_tilted_at(&tau, radius, rng);
                let vals = f.box_grid_values(m, g);
                let grid_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * f.unit;
                let sup = f.sup_box(m)?.max(grid_max);
                let s: f64 = vals.iter().map(|v| (tilt.theta * (v * f.unit - sup)).exp()).sum();
                Ok(total as f64 / s / tilt.chi)
            })
        }
    };
    let xs: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&xs, seed))
}

/// `K` from `K_m / m^d` fitted by a polynomial of degree `d` in `1/m`.
///
/// For box kernels `K_m` is asymptotically a polynomial of degree `d` in `m`
/// (a product of `d` renewal functions), so the fit is exact up to
/// exponentially small terms there; for other kernels the extra terms absorb
/// edge and corner effects of the box.
pub fn k_local_sup(model: &FieldModel, opts: &LocalSupOptions, seed: u64) -> Result<KEstimate> {
    let d = model.kernel().dim();
    if opts.m_list.len() < d + 2 {
        return Err(ScanError::InvalidArgument(format!(
            "need at least {} box sizes to fit and check a degree-{d} extrapolation, got {}",
            d + 2,
            opts.m_list.len()
        )));
    }
    if opts.m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScanError::InvalidArgument("m_list must be strictly increasing".into()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut diagnostics = BTreeMap::new();
    for &m in &opts.m_list {
        let est = k_m(model, m, opts, seed)?;
        let md = m.powi(d as i32);
        x.push(1.0 / m);
        y.push(est.estimate / md);
        w.push((md / est.stderr).powi(2));
        diagnostics.insert(format!("k_m/m^d@{m}"), est.estimate / md);
        diagnostics.insert(format!("se@{m}"), est.stderr / md);
    }
    let (coef, cov, rss) =
        poly_fit(&x, &y, &w, d).ok_or_else(|| ScanError::Numerical("singular extrapolation fit".into()))?;
    let dof = (x.len() - d - 1) as f64;
    diagnostics.insert("fit_chi2".into(), rss);
    diagnostics.insert("fit_dof".into(), dof);
    let value = coef[0];
    let stderr = cov[0][0].sqrt();
    let mut failure = None;
    if !(value > 0.0) {
        failure = Some(format!("extrapolated K = {value} is not positive"));
    } else if rss > chi2_upper(dof) {
        failure = Some(format!("extrapolation misfit: chi2 = {rss:.2} on {dof} dof"));
    }
    Ok(KEstimate { value, stderr, route: Route::LocalSup, reps: opts.reps, seed, diagnostics, failure })
}

/// Rough 99.9% point of a chi-square law (Wilson-Hilferty).
fn chi2_upper(dof: f64) -> f64 {
    let z = 3.09;
    let a = 2.0 / (9.0 * dof);
    dof * (1.0 - a + z * a.sqrt()).powi(3)
}
