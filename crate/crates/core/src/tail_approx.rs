//! The tail approximation
//! `p ~ [2 pi vol(B) M''(theta)]^{-1/2} e^{-lambda I + x_lambda} lambda^{d-1/2} vol(D) K`
//! and its saturating form `1 - exp(-that)` for large domains.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::geometry::Kernel;
use crate::marks::{solve_tilt, x_lambda, MarkLaw, TiltSolution};
use crate::mc::McEstimate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Linear,
    #[default]
    Saturating,
}

/// The factors whose product is the linear approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Components {
    /// `[2 pi vol(B) M''(theta)]^{-1/2}`.
    pub prefactor: f64,
    /// `-lambda I + x_lambda`, the logarithm of the exponential factor.
    pub log_exp_term: f64,
    pub exp_term: f64,
    /// `lambda^{d - 1/2}`.
    pub lambda_power: f64,
    pub domain_volume: f64,
    pub k: f64,
}

impl Components {
    /// Logarithm of the linear approximation.
    pub fn log_product(&self) -> f64 {
        self.prefactor.ln() + self.log_exp_term + self.lambda_power.ln() + self.domain_volume.ln() + self.k.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxResult {
    pub p: f64,
    pub variant: Variant,
    /// The linear approximation (may exceed 1).
    pub linear_p: f64,
    pub components: Components,
    pub x_lambda: f64,
    /// The linear form exceeds 0.1, where it is no longer a safe probability.
    pub linear_large: bool,
}

/// Evaluates the approximation for a solved tilt, kernel dimension `dim`,
/// rate `lambda`, domain volume and constant `k`.
pub fn approx_p(
    tilt: &TiltSolution,
    dim: usize,
    lambda: f64,
    domain_volume: f64,
    k: f64,
    variant: Variant,
) -> Result<ApproxResult> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ScanError::InvalidArgument(format!("rate lambda must be positive, got {lambda}")));
    }
    if !(domain_volume.is_finite() && domain_volume > 0.0) {
        return Err(ScanError::InvalidArgument(format!("domain volume must be positive, got {domain_volume}")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(ScanError::InvalidArgument(format!("constant K must be positive, got {k}")));
    }
    if dim == 0 {
        return Err(ScanError::InvalidArgument("dimension must be at least 1".into()));
    }
    let x = x_lambda(lambda, tilt);
    let log_exp_term = -lambda * tilt.rate + x;
    let components = Components {
        prefactor: (2.0 * std::f64::consts::PI * tilt.kernel_volume * tilt.m2).powf(-0.5),
        log_exp_term,
        exp_term: log_exp_term.exp(),
        lambda_power: lambda.powf(dim as f64 - 0.5),
        domain_volume,
        k,
    };
    let log_linear = components.log_product();
    let linear_p = log_linear.exp();
    let p = match variant {
        Variant::Linear => linear_p,
        Variant::Saturating => -(-linear_p).exp_m1(),
    };
    Ok(ApproxResult { p, variant, linear_p, components, x_lambda: x, linear_large: linear_p > 0.1 })
}

/// Closed-form approximation for a box kernel with sides `b`:
/// `K = {nu [c/vol(B) - mu]}^d (chi prod b_k)^{d-1}` substituted directly.
pub fn example1_p(
    law: &MarkLaw,
    b: &[f64],
    c: f64,
    lambda: f64,
    domain_volume: f64,
    nu: &McEstimate,
    variant: Variant,
) -> Result<ApproxResult> {
    let kernel = Kernel::boxed(b)?;
    let tilt = solve_tilt(law, &kernel, c)?;
    let k = crate::constants::k_rectangle(law, &tilt, b, nu)?;
    approx_p(&tilt, b.len(), lambda, domain_volume, k.value, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marks::solve_tilt_volume;
    use proptest::prelude::*;

    fn unit_tilt(c: f64) -> TiltSolution {
        solve_tilt_volume(&MarkLaw::degenerate(1.0).unwrap(), 1.0, c).unwrap()
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>() / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>()
    }

    #[test]
    fn decay_rate_approaches_the_large_deviation_rate() {
        let tilt = unit_tilt(2.0);
        let log_p = |xs: &[f64]| -> Vec<f64> {
            xs.iter().map(|&l| approx_p(&tilt, 2, l, 1.0, 0.5, Variant::Linear).unwrap().components.log_product()).collect()
        };
        // lambda c is an integer so the sawtooth vanishes
        let xs = [20.0, 40.0, 80.0];
        let corrected: Vec<f64> = log_p(&xs).iter().zip(&xs).map(|(y, l)| y - 1.5 * l.ln()).collect();
        assert!((-slope(&xs, &corrected) / tilt.rate - 1.0).abs() < 1e-10);
        let big = [2000.0, 4000.0, 8000.0];
        assert!((-slope(&big, &log_p(&big)) / tilt.rate - 1.0).abs() < 0.01);
    }

    #[test]
    fn linear_in_domain_volume() {
        let tilt = unit_tilt(2.5);
        let a = approx_p(&tilt, 2, 30.0, 2.0, 0.7, Variant::Linear).unwrap();
        let b = approx_p(&tilt, 2, 30.0, 4.0, 0.7, Variant::Linear).unwrap();
        assert!((b.p / a.p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn saturating_tracks_linear_when_small() {
        let tilt = unit_tilt(2.0);
        for lambda in [10.0, 30.0, 60.0, 100.0] {
            let l = approx_p(&tilt, 2, lambda, 9.0, 0.5, Variant::Linear).unwrap();
            let s = approx_p(&tilt, 2, lambda, 9.0, 0.5, Variant::Saturating).unwrap();
            assert!(s.p <= 1.0 && s.p <= l.p);
            if l.p <= 0.01 {
                assert!((s.p / l.p - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn box_formula_matches_the_generic_one() {
        let law = MarkLaw::degenerate(1.0).unwrap();
        let nu = McEstimate { estimate: 1.0, stderr: 0.0, reps: 0, seed: 0 };
        let direct = example1_p(&law, &[1.0, 1.0], 2.0, 50.0, 9.0, &nu, Variant::Linear).unwrap();
        let tilt = unit_tilt(2.0);
        let k = crate::constants::k_rectangle(&law, &tilt, &[1.0, 1.0], &nu).unwrap();
        assert!((k.value - 0.5).abs() < 1e-12);
        let generic = approx_p(&tilt, 2, 50.0, 9.0, k.value, Variant::Linear).unwrap();
        assert!((direct.p / generic.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_box_has_no_chi_factor() {
        let law = MarkLaw::gaussian(0.0, 1.0).unwrap();
        let nu = McEstimate { estimate: 0.6, stderr: 0.01, reps: 100, seed: 0 };
        let tilt = solve_tilt_volume(&law, 1.0, 2.0).unwrap();
        let k = crate::constants::k_rectangle(&law, &tilt, &[1.0], &nu).unwrap();
        assert!((k.value - 0.6 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn sawtooth_has_period_eta_over_c() {
        let law = MarkLaw::degenerate(1.0).unwrap();
        let tilt = solve_tilt_volume(&law, 1.0, 2.3).unwrap();
        let period = 1.0 / 2.3;
        for lambda in [10.1, 17.3, 33.7] {
            let a = x_lambda(lambda, &tilt);
            let b = x_lambda(lambda + period, &tilt);
            assert!((a - b).abs() < 1e-9, "{a} {b}");
            assert!(a >= 0.0 && a < tilt.theta);
        }
    }

    #[test]
    fn errors_on_bad_input() {
        let tilt = unit_tilt(2.0);
        assert!(approx_p(&tilt, 2, 0.0, 1.0, 1.0, Variant::Linear).is_err());
        assert!(approx_p(&tilt, 2, 1.0, -1.0, 1.0, Variant::Linear).is_err());
        assert!(approx_p(&tilt, 2, 1.0, 1.0, 0.0, Variant::Linear).is_err());
    }

    proptest! {
        #[test]
        fn decreasing_in_threshold(c in 1.2f64..4.0, lambda in 5.0f64..80.0) {
            let a = approx_p(&unit_tilt(c), 2, lambda, 4.0, 1.0, Variant::Linear).unwrap();
            let b = approx_p(&unit_tilt(c + 0.05), 2, lambda, 4.0, 1.0, Variant::Linear).unwrap();
            // the sawtooth can add at most theta; compare on the smooth part
            prop_assert!(b.components.log_exp_term - b.x_lambda < a.components.log_exp_term - a.x_lambda);
        }

        #[test]
        fn components_recombine(c in 1.2f64..4.0, lambda in 1.0f64..200.0, vol in 0.1f64..100.0, k in 0.01f64..10.0) {
            let r = approx_p(&unit_tilt(c), 2, lambda, vol, k, Variant::Linear).unwrap();
            let t = unit_tilt(c);
            let expect = -lambda * t.rate + r.x_lambda + 1.5 * lambda.ln()
                + (r.components.prefactor * vol * k).ln();
            prop_assert!((r.components.log_product() - expect).abs() < 1e-12 * expect.abs().max(1.0));
            prop_assert!((r.p.ln() - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }
}
