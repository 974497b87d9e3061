//! The constant `K` of the tail approximation, by several independent routes.
//!
//! * [`k_local_sup`]: `K = lim m^{-d} K_m` from box suprema of the local field.
//! * [`k_occupation`]: `K` as a mean inverse occupation measure of `{Y = 0}`.
//! * [`k_rectangle`]: closed form for box kernels given the overshoot constant.
//! * [`occupation_ball`] and [`k_ball_lower_bound`]: closed forms for the
//!   ball with unit marks.
//! * [`k_omega_bound`]: the upper bound from the limiting random set.

mod local_sup;
mod occupation;
mod report;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::local_field::FieldModel;
use crate::marks::{MarkLaw, TiltSolution};
use crate::mc::McEstimate;
use crate::overshoot::{default_levels, nu_c, WalkSpec};

pub use local_sup::{k_local_sup, k_m, local_tail_integral, LocalSupOptions, SupEstimator};
pub use occupation::{
    k_occupation, k_omega_bound, occupation_samples, omega_inverse_volume, OccupationOptions, OccupationSample,
};
pub use report::{table1, write_csv, KRecord, Table1Entry, Table1Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    LocalSup,
    Occupation,
    RectangleClosedForm,
    BallClosedForm,
    OmegaBound,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::LocalSup => "local_sup",
            Route::Occupation => "occupation",
            Route::RectangleClosedForm => "rectangle_closed_form",
            Route::BallClosedForm => "ball_closed_form",
            Route::OmegaBound => "omega_bound",
        }
    }
}

/// An estimate of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub value: f64,
    pub stderr: f64,
    pub route: Route,
    pub reps: usize,
    pub seed: u64,
    /// Numeric diagnostics (fit residuals, truncation rates, ...).
    pub diagnostics: BTreeMap<String, f64>,
    /// Set when a diagnostic check failed; the value should not be trusted.
    pub failure: Option<String>,
}

impl KEstimate {
    pub fn exact(value: f64, route: Route) -> Self {
        KEstimate { value, stderr: 0.0, route, reps: 0, seed: 0, diagnostics: BTreeMap::new(), failure: None }
    }

    /// `diagnostics` as `key=value` pairs separated by `;`.
    pub fn diagnostics_string(&self) -> String {
        let mut parts: Vec<String> = self.diagnostics.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if let Some(f) = &self.failure {
            parts.push(format!("failure={f}"));
        }
        parts.join(";")
    }

    /// Number of combined standard errors between two estimates.
    pub fn z_against(&self, other: &KEstimate) -> f64 {
        (self.value - other.value) / self.stderr.hypot(other.stderr)
    }
}

/// Route selector for [`estimate_k`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRoute {
    Local,
    Occupation,
    Rectangle,
    Ball,
    Omega,
}

impl FromStr for KRoute {
    type Err = ScanError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "local" | "local_sup" => Ok(KRoute::Local),
            "occupation" => Ok(KRoute::Occupation),
            "rectangle" => Ok(KRoute::Rectangle),
            "ball" => Ok(KRoute::Ball),
            "omega" => Ok(KRoute::Omega),
            other => Err(ScanError::InvalidArgument(format!(
                "unknown K route '{other}' (expected local, occupation, rectangle, ball or omega)"
            ))),
        }
    }
}

/// `K` by the chosen route with default settings and `reps` replicates.
///
/// `Ball` is the closed-form lower bound `eta / E vol{Y = 0}`, available for
/// the unit ball with degenerate marks. `Rectangle` simulates the overshoot
/// constant with `reps` walks per level.
pub fn estimate_k(model: &FieldModel, route: KRoute, reps: usize, seed: u64) -> Result<KEstimate> {
    match route {
        KRoute::Local => k_local_sup(model, &LocalSupOptions { reps, ..Default::default() }, seed),
        KRoute::Occupation => k_occupation(model, &OccupationOptions { reps, ..Default::default() }, seed),
        KRoute::Omega => k_omega_bound(model, reps, seed),
        KRoute::Rectangle => {
            let b = model.kernel().box_sides().ok_or_else(|| {
                ScanError::InvalidArgument(format!("the rectangle route needs a box kernel, got {}", model.kernel().label()))
            })?;
            let spec = WalkSpec::new(model.law(), model.tilt())?;
            let nu = nu_c(&spec, &default_levels(&spec), reps, seed)?;
            let mut k = k_rectangle(model.law(), model.tilt(), b, &nu.estimate)?;
            if !nu.stable {
                k.failure = Some("overshoot estimates are not stable across levels".into());
            }
            Ok(k)
        }
        KRoute::Ball => {
            let unit_ball = matches!(model.kernel().spec(), crate::geometry::KernelSpec::Ball { r, .. } if r == 1.0);
            if !unit_ball || !model.law().is_degenerate() {
                return Err(ScanError::InvalidArgument(
                    "the ball route needs the unit ball kernel and degenerate marks".into(),
                ));
            }
            let d = model.kernel().dim();
            let value = model.law().unit() * k_ball_lower_bound(d, model.tilt().c_hat())?;
            let mut k = KEstimate::exact(value, Route::BallClosedForm);
            k.diagnostics.insert("lower_bound".into(), 1.0);
            Ok(k)
        }
    }
}

/// `C_d = area(unit sphere in R^d) / vol(unit ball in R^{d-1})^d`.
pub fn ball_series_constant(d: usize) -> f64 {
    let df = d as f64;
    let sphere = df * std::f64::consts::PI.powf(df / 2.0) / libm::tgamma(df / 2.0 + 1.0);
    let slice = std::f64::consts::PI.powf((df - 1.0) / 2.0) / libm::tgamma((df + 1.0) / 2.0);
    sphere / slice.powi(d as i32)
}

/// `E vol{Y = 0}` for the unit ball in `R^d` with unit marks, where
/// `c_hat = M(theta)`: the series `C_d sum_k c^k Gamma(2k+d) / ((k!)^2 (1+c)^{2k+d})`.
pub fn occupation_ball(d: usize, c_hat: f64) -> Result<f64> {
    if d == 0 {
        return Err(ScanError::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(c_hat.is_finite() && c_hat > 1.0) {
        return Err(ScanError::InvalidArgument(format!("c_hat = M(theta) must exceed 1, got {c_hat}")));
    }
    let df = d as f64;
    let lc = c_hat.ln();
    let l1c = (1.0 + c_hat).ln();
    let mut sum = 0.0;
    for k in 0..10_000_000u64 {
        let kf = k as f64;
        let log_term = kf * lc + libm::lgamma(2.0 * kf + df) - 2.0 * libm::lgamma(kf + 1.0) - (2.0 * kf + df) * l1c;
        let term = log_term.exp();
        sum += term;
        // terms decrease geometrically once k exceeds the mode
        if term < 1e-17 * sum && kf > df {
            break;
        }
    }
    Ok(ball_series_constant(d) * sum)
}

/// `1 / E vol{Y = 0}`, a lower bound for `K` by Jensen's inequality.
pub fn k_ball_lower_bound(d: usize, c_hat: f64) -> Result<f64> {
    Ok(1.0 / occupation_ball(d, c_hat)?)
}

/// `K = {nu [c / vol(B) - mu]}^d (chi prod b_k)^{d-1}` for a box kernel.
pub fn k_rectangle(law: &MarkLaw, tilt: &TiltSolution, b: &[f64], nu: &McEstimate) -> Result<KEstimate> {
    let d = b.len();
    if d == 0 {
        return Err(ScanError::InvalidArgument("box needs at least one side".into()));
    }
    let vol: f64 = b.iter().product();
    if ((vol - tilt.kernel_volume) / vol).abs() > 1e-12 {
        return Err(ScanError::InvalidArgument(format!(
            "tilt was solved for kernel volume {} but the box has volume {vol}",
            tilt.kernel_volume
        )));
    }
    let drift = tilt.c / vol - law.mean();
    if drift <= 0.0 {
        return Err(ScanError::ThresholdTooSmall { c: tilt.c, bound: (law.mean() * vol).max(0.0) });
    }
    if !(nu.estimate > 0.0 && nu.estimate <= 1.0 + 1e-12) {
        return Err(ScanError::InvalidArgument(format!("overshoot constant must lie in (0, 1], got {}", nu.estimate)));
    }
    let df = d as f64;
    let value = (nu.estimate * drift).powi(d as i32) * (tilt.chi * vol).powi(d as i32 - 1);
    let stderr = df * value * nu.stderr / nu.estimate;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("nu".into(), nu.estimate);
    diagnostics.insert("nu_stderr".into(), nu.stderr);
    Ok(KEstimate {
        value,
        stderr,
        route: Route::RectangleClosedForm,
        reps: nu.reps,
        seed: nu.seed,
        diagnostics,
        failure: None,
    })
}
