//! Mark laws, their moment generating functions, and the exponential tilt that
//! matches a threshold.
//!
//! Arithmetic laws keep their marks as integer multiples of the span so that
//! sums of marks are exact; see [`MarkLaw::unit`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Result, ScanError};
use crate::geometry::Kernel;

/// A user supplied law of exponential type.
///
/// Implementations must return analytic values of `M`, `M'` and `M''`; the
/// solver never differentiates numerically.
pub trait ExpFamily: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// `[M(theta), M'(theta), M''(theta)]`, or `None` outside the domain.
    fn mgf(&self, theta: f64) -> Option<[f64; 3]>;
    /// Supremum of the domain of `M` (may be infinite).
    fn theta_sup(&self) -> f64 {
        f64::INFINITY
    }
    /// Span if the law is arithmetic with support in `span * Z`.
    fn span(&self) -> Option<f64> {
        None
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    /// Sample from `e^{theta x} F(dx) / M(theta)`.
    fn sample_tilted(&self, theta: f64, rng: &mut dyn RngCore) -> f64;
}

/// Serializable description of a mark law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum MarkSpec {
    Degenerate { eta: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// `atoms` are `[value, probability]` pairs with values in `eta * Z`.
    Lattice { eta: f64, atoms: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    eta: f64,
    /// Integer multiples of `eta` and their probabilities.
    atoms: Vec<(i64, f64)>,
    cumulative: Vec<f64>,
}

impl Lattice {
    fn new(eta: f64, atoms: Vec<(i64, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Lattice { eta, atoms, cumulative }
    }

    fn draw_index<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
        let total = *cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().map(move |&(k, p)| (k as f64 * self.eta, p))
    }
}

/// Law of the marks.
#[derive(Clone, Debug)]
pub enum MarkLaw {
    Degenerate { eta: f64 },
    Gaussian { mean: f64, sd: f64 },
    Lattice(Lattice),
    Generic(Arc<dyn ExpFamily>),
}

impl PartialEq for MarkLaw {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (MarkLaw::Degenerate { eta: a }, MarkLaw::Degenerate { eta: b }) => a == b,
            (MarkLaw::Gaussian { mean: a, sd: s }, MarkLaw::Gaussian { mean: b, sd: t }) => a == b && s == t,
            (MarkLaw::Lattice(a), MarkLaw::Lattice(b)) => a == b,
            (MarkLaw::Generic(a), MarkLaw::Generic(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl MarkLaw {
    pub fn degenerate(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(ScanError::InvalidLaw(format!(
                "degenerate mark must be positive so that P(X > 0) > 0, got {eta}"
            )));
        }
        Ok(MarkLaw::Degenerate { eta })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd.is_finite() && sd > 0.0) {
            return Err(ScanError::InvalidLaw(format!(
                "gaussian marks need finite mean and positive sd, got mean={mean}, sd={sd}"
            )));
        }
        Ok(MarkLaw::Gaussian { mean, sd })
    }

    /// Lattice law from `(value, probability)` atoms; values must lie in `eta * Z`
    /// and `eta` must be the maximal span.
    pub fn lattice(eta: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(ScanError::InvalidLaw(format!("lattice span must be positive, got {eta}")));
        }
        if atoms.is_empty() {
            return Err(ScanError::InvalidLaw("lattice law needs at least one atom".into()));
        }
        let mut merged: Vec<(i64, f64)> = Vec::new();
        for &(x, p) in atoms {
            if !(p.is_finite() && p >= 0.0) {
                return Err(ScanError::InvalidLaw(format!("atom probability {p} is invalid")));
            }
            let k = (x / eta).round();
            if !x.is_finite() || (x / eta - k).abs() > 1e-9 || k.abs() > 1e12 {
                return Err(ScanError::InvalidLaw(format!("atom {x} is not a multiple of eta = {eta}")));
            }
            if p == 0.0 {
                continue;
            }
            let k = k as i64;
            match merged.iter_mut().find(|a| a.0 == k) {
                Some(a) => a.1 += p,
                None => merged.push((k, p)),
            }
        }
        merged.sort_by_key(|a| a.0);
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ScanError::InvalidLaw(format!("atom probabilities sum to {total}, not 1")));
        }
        for a in &mut merged {
            a.1 /= total;
        }
        if !merged.iter().any(|a| a.0 > 0) {
            return Err(ScanError::InvalidLaw("lattice law must put mass on positive values".into()));
        }
        let g = merged.iter().fold(0, |g, a| gcd(g, a.0));
        if g != 1 {
            return Err(ScanError::InvalidLaw(format!(
                "eta = {eta} is not the maximal span; the atoms lie in {} * Z",
                g as f64 * eta
            )));
        }
        if merged.len() == 1 {
            return Ok(MarkLaw::Degenerate { eta });
        }
        Ok(MarkLaw::Lattice(Lattice::new(eta, merged)))
    }

    pub fn generic(law: Arc<dyn ExpFamily>) -> Self {
        MarkLaw::Generic(law)
    }

    pub fn from_spec(spec: &MarkSpec) -> Result<Self> {
        match spec {
            MarkSpec::Degenerate { eta } => MarkLaw::degenerate(*eta),
            MarkSpec::Gaussian { mean, sd } => MarkLaw::gaussian(*mean, *sd),
            MarkSpec::Lattice { eta, atoms } => {
                let atoms: Vec<(f64, f64)> = atoms.iter().map(|a| (a[0], a[1])).collect();
                MarkLaw::lattice(*eta, &atoms)
            }
        }
    }

    /// `None` for user supplied laws, which have no serial form.
    pub fn spec(&self) -> Option<MarkSpec> {
        match self {
            MarkLaw::Degenerate { eta } => Some(MarkSpec::Degenerate { eta: *eta }),
            MarkLaw::Gaussian { mean, sd } => Some(MarkSpec::Gaussian { mean: *mean, sd: *sd }),
            MarkLaw::Lattice(l) => Some(MarkSpec::Lattice {
                eta: l.eta,
                atoms: l.atoms().map(|(x, p)| [x, p]).collect(),
            }),
            MarkLaw::Generic(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MarkLaw::Degenerate { eta } => format!("degenerate({eta})"),
            MarkLaw::Gaussian { mean, sd } => format!("gaussian({mean},{sd})"),
            MarkLaw::Lattice(l) => {
                let a: Vec<String> = l.atoms().map(|(x, p)| format!("{x}:{p}")).collect();
                format!("lattice({};{})", l.eta, a.join(","))
            }
            MarkLaw::Generic(g) => g.name(),
        }
    }

    /// Span of an arithmetic law, `None` for nonarithmetic laws.
    pub fn span(&self) -> Option<f64> {
        match self {
            MarkLaw::Degenerate { eta } => Some(*eta),
            MarkLaw::Lattice(l) => Some(l.eta),
            MarkLaw::Gaussian { .. } => None,
            MarkLaw::Generic(g) => g.span(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, MarkLaw::Degenerate { .. })
    }

    /// Unit in which [`MarkLaw::sample_units`] reports marks: the span for
    /// arithmetic laws, 1 otherwise.
    pub fn unit(&self) -> f64 {
        self.span().unwrap_or(1.0)
    }

    pub fn theta_sup(&self) -> f64 {
        match self {
            MarkLaw::Generic(g) => g.theta_sup(),
            _ => f64::INFINITY,
        }
    }

    /// `(M, M', M'')` at `theta`.
    pub fn mgf(&self, theta: f64) -> Result<(f64, f64, f64)> {
        let out = match self {
            MarkLaw::Degenerate { eta } => {
                let m = (theta * eta).exp();
                (m, eta * m, eta * eta * m)
            }
            MarkLaw::Gaussian { mean, sd } => {
                let s2 = sd * sd;
                let m = (mean * theta + 0.5 * s2 * theta * theta).exp();
                let a = mean + s2 * theta;
                (m, a * m, (s2 + a * a) * m)
            }
            MarkLaw::Lattice(l) => {
                let mut out = (0.0, 0.0, 0.0);
                for (x, p) in l.atoms() {
                    let w = p * (theta * x).exp();
                    out.0 += w;
                    out.1 += x * w;
                    out.2 += x * x * w;
                }
                out
            }
            MarkLaw::Generic(g) => match g.mgf(theta) {
                Some([a, b, c]) => (a, b, c),
                None => return Err(ScanError::Domain { theta }),
            },
        };
        if !(out.0.is_finite() && out.1.is_finite() && out.2.is_finite()) {
            return Err(ScanError::Domain { theta });
        }
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        self.mgf(0.0).map(|m| m.1).unwrap_or(f64::NAN)
    }

    /// The tilted law `e^{theta x} F(dx) / M(theta)`.
    pub fn tilted(&self, theta: f64) -> Result<MarkLaw> {
        self.mgf(theta)?;
        Ok(match self {
            MarkLaw::Degenerate { .. } => self.clone(),
            MarkLaw::Gaussian { mean, sd } => MarkLaw::Gaussian { mean: mean + sd * sd * theta, sd: *sd },
            MarkLaw::Lattice(l) => {
                let m: f64 = l.atoms().map(|(x, p)| p * (theta * x).exp()).sum();
                let atoms = l
                    .atoms
                    .iter()
                    .map(|&(k, p)| (k, p * (theta * k as f64 * l.eta).exp() / m))
                    .collect();
                MarkLaw::Lattice(Lattice::new(l.eta, atoms))
            }
            MarkLaw::Generic(g) => MarkLaw::Generic(Arc::new(TiltedFamily { base: g.clone(), theta })),
        })
    }

    /// One mark, in units of [`MarkLaw::unit`].
    pub fn sample_units<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::Degenerate { .. } => 1.0,
            MarkLaw::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            MarkLaw::Lattice(l) => l.atoms[Lattice::draw_index(&l.cumulative, rng)].0 as f64,
            MarkLaw::Generic(g) => {
                let x = g.sample(rng);
                match g.span() {
                    Some(eta) => (x / eta).round(),
                    None => x,
                }
            }
        }
    }

    /// One mark in natural units.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.sample_units(rng) * self.unit()
    }

    /// `zeta = M(theta) + 1 - 2 M(theta/2)`, the Chernoff exponent (per unit of
    /// shadow and distance) for the local field to sit at or above zero.
    pub fn return_rate(&self, theta: f64) -> Result<f64> {
        let (m, _, _) = self.mgf(theta)?;
        let (h, _, _) = self.mgf(theta / 2.0)?;
        Ok(m + 1.0 - 2.0 * h)
    }
}

impl Serialize for MarkLaw {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.spec() {
            Some(spec) => spec.serialize(s),
            None => {
                #[derive(Serialize)]
                struct Generic {
                    law: &'static str,
                    name: String,
                }
                Generic { law: "generic", name: self.label() }.serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for MarkLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = MarkSpec::deserialize(d)?;
        MarkLaw::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug)]
struct TiltedFamily {
    base: Arc<dyn ExpFamily>,
    theta: f64,
}

impl ExpFamily for TiltedFamily {
    fn name(&self) -> String {
        format!("{}[tilt {}]", self.base.name(), self.theta)
    }
    fn mgf(&self, phi: f64) -> Option<[f64; 3]> {
        let m = self.base.mgf(self.theta)?[0];
        let [a, b, c] = self.base.mgf(self.theta + phi)?;
        Some([a / m, b / m, c / m])
    }
    fn theta_sup(&self) -> f64 {
        self.base.theta_sup() - self.theta
    }
    fn span(&self) -> Option<f64> {
        self.base.span()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.base.sample_tilted(self.theta, rng)
    }
    fn sample_tilted(&self, phi: f64, rng: &mut dyn RngCore) -> f64 {
        self.base.sample_tilted(self.theta + phi, rng)
    }
}

/// Root of `M'(theta) = c / vol(B)` and the quantities derived from it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TiltSolution {
    pub c: f64,
    pub kernel_volume: f64,
    pub theta: f64,
    /// Large deviation rate `theta c - vol(B) (M(theta) - 1)`.
    pub rate: f64,
    /// `M(theta)`, the rate of the subtracted stream of the local field.
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    /// `theta` for nonarithmetic laws, `(1 - e^{-eta theta}) / eta` for span `eta`.
    pub chi: f64,
    pub span: Option<f64>,
    pub mean: f64,
}

impl TiltSolution {
    /// `M(theta)`; equals `c / vol(B)` for degenerate unit marks.
    pub fn c_hat(&self) -> f64 {
        self.m0
    }
}

/// Solves for the tilt with a kernel.
pub fn solve_tilt(law: &MarkLaw, kernel: &Kernel, c: f64) -> Result<TiltSolution> {
    solve_tilt_volume(law, kernel.volume(), c)
}

/// Solves `M'(theta) = c / volume` by bracketing, bisection and a Newton polish.
pub fn solve_tilt_volume(law: &MarkLaw, volume: f64, c: f64) -> Result<TiltSolution> {
    if !(volume.is_finite() && volume > 0.0) {
        return Err(ScanError::InvalidArgument(format!("kernel volume must be positive, got {volume}")));
    }
    let mean = law.mean();
    let bound = (mean * volume).max(0.0);
    if !c.is_finite() || c <= bound {
        return Err(ScanError::ThresholdTooSmall { c, bound });
    }
    let target = c / volume;
    let theta = solve_increasing(|t| law.mgf(t).map(|m| m.1), target, law.theta_sup(), |t| law.mgf(t).map(|m| m.2))
        .map_err(|e| match e {
            ScanError::Domain { .. } => ScanError::Unattainable { target },
            other => other,
        })?;
    let (m0, m1, m2) = law.mgf(theta)?;
    let span = law.span();
    let chi = match span {
        Some(eta) => -(-eta * theta).exp_m1() / eta,
        None => theta,
    };
    Ok(TiltSolution {
        c,
        kernel_volume: volume,
        theta,
        rate: theta * c - volume * (m0 - 1.0),
        m0,
        m1,
        m2,
        chi,
        span,
        mean,
    })
}

/// Positive root of `f(theta) = target` for increasing `f` with `f(0) < target`.
fn solve_increasing(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    theta_sup: f64,
    fprime: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = if theta_sup.is_finite() { 0.5 * theta_sup.min(2.0) } else { 1.0 };
    let mut iters = 0;
    loop {
        let v = f(hi);
        match v {
            Ok(v) if v >= target => break,
            Ok(_) => {
                lo = hi;
                hi = if theta_sup.is_finite() { (hi + theta_sup) / 2.0 } else { hi * 2.0 };
            }
            Err(_) => {
                // overflow or domain edge: shrink back toward the last good point
                hi = (lo + hi) / 2.0;
            }
        }
        iters += 1;
        if iters > 400 {
            return Err(ScanError::Domain { theta: hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = (f(t)? - target) / fprime(t)?;
        let next = t - step;
        if next.is_finite() && next >= lo && next <= hi {
            t = next;
        }
    }
    Ok(t)
}

/// Positive `theta` with `M(theta) = mass` (requires `mass > 1`).
pub fn theta_for_mass(law: &MarkLaw, mass: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 1.0) {
        return Err(ScanError::InvalidArgument(format!("tilted mass M(theta) must exceed 1, got {mass}")));
    }
    if law.mean() < 0.0 {
        return Err(ScanError::InvalidArgument("mass parametrisation needs a nonnegative mean".into()));
    }
    solve_increasing(|t| law.mgf(t).map(|m| m.0), mass, law.theta_sup(), |t| law.mgf(t).map(|m| m.1))
}

/// Threshold `c` whose tilt has `M(theta_c) = c_hat`.
pub fn threshold_for_mass(law: &MarkLaw, volume: f64, c_hat: f64) -> Result<f64> {
    let theta = theta_for_mass(law, c_hat)?;
    Ok(volume * law.mgf(theta)?.1)
}

/// Lattice correction `theta (lambda c - eta floor(lambda c / eta))`, 0 if nonarithmetic.
pub fn x_lambda(lambda: f64, tilt: &TiltSolution) -> f64 {
    match tilt.span {
        None => 0.0,
        Some(eta) => {
            let lc = lambda * tilt.c;
            let q = lc / eta;
            // snap values that are integers up to rounding
            let fl = if (q - q.round()).abs() < 1e-9 * q.abs().max(1.0) { q.round() } else { q.floor() };
            tilt.theta * (lc - eta * fl)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, RngCore};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `X = E - 1` with `E` standard exponential.
    #[derive(Debug)]
    pub(crate) struct ShiftedExp;

    impl ExpFamily for ShiftedExp {
        fn name(&self) -> String {
            "shifted-exp".into()
        }
        fn mgf(&self, t: f64) -> Option<[f64; 3]> {
            if t >= 1.0 {
                return None;
            }
            let m = (-t).exp() / (1.0 - t);
            let a = 1.0 / (1.0 - t) - 1.0;
            Some([m, a * m, (a * a + 1.0 / (1.0 - t).powi(2)) * m])
        }
        fn theta_sup(&self) -> f64 {
            1.0
        }
        fn sample(&self, rng: &mut dyn RngCore) -> f64 {
            let u: f64 = rng.random();
            -(1.0 - u).ln() - 1.0
        }
        fn sample_tilted(&self, t: f64, rng: &mut dyn RngCore) -> f64 {
            let u: f64 = rng.random();
            -(1.0 - u).ln() / (1.0 - t) - 1.0
        }
    }

    #[test]
    fn degenerate_unit_box() {
        let k = Kernel::boxed(&[1.0, 1.0]).unwrap();
        let law = MarkLaw::degenerate(1.0).unwrap();
        let s = solve_tilt(&law, &k, 2.0).unwrap();
        assert!((s.theta - 2f64.ln()).abs() < 1e-14);
        assert!((s.chi - 0.5).abs() < 1e-14);
        assert!((s.c_hat() - 2.0).abs() < 1e-13);
        assert!((s.rate - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tilt_closed_form() {
        let law = MarkLaw::gaussian(0.0, 1.0).unwrap();
        let s = solve_tilt_volume(&law, std::f64::consts::PI, 3.0).unwrap();
        // M'(theta) = theta e^{theta^2/2} = 3/pi
        let t = s.theta;
        assert!((t * (t * t / 2.0).exp() - 3.0 / std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(s.chi, s.theta);
        let th = theta_for_mass(&law, 2.0).unwrap();
        assert!((th - (2.0 * 2f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn threshold_preconditions() {
        let law = MarkLaw::degenerate(1.0).unwrap();
        let err = solve_tilt_volume(&law, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, ScanError::ThresholdTooSmall { .. }));
        assert!(err.to_string().contains("c > max{0, mu*vol(B)}"));
        let neg = MarkLaw::gaussian(-1.0, 1.0).unwrap();
        assert!(solve_tilt_volume(&neg, 1.0, 0.0).is_err());
        assert!(solve_tilt_volume(&neg, 1.0, 0.1).is_ok());
    }

    #[test]
    fn generic_law_with_finite_domain() {
        let law = MarkLaw::generic(Arc::new(ShiftedExp));
        let s = solve_tilt_volume(&law, 1.0, 3.0).unwrap();
        // M'(t)/M(t) = 1/(1-t) - 1 and M' = that times M
        let (m, m1, _) = law.mgf(s.theta).unwrap();
        assert!((m1 - 3.0).abs() < 1e-10);
        assert!(s.theta < 1.0 && m > 0.0);
        assert!(law.mgf(1.5).is_err());
        let tilted = law.tilted(0.5).unwrap();
        let (a, b, _) = tilted.mgf(0.0).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
        assert!((b - 1.0).abs() < 1e-12); // tilted mean 1/(1-0.5) - 1
    }

    #[test]
    fn lattice_validation() {
        assert!(MarkLaw::lattice(1.0, &[(-1.0, 0.5), (1.0, 0.5)]).is_ok());
        assert!(MarkLaw::lattice(1.0, &[(-2.0, 0.5), (2.0, 0.5)]).is_err());
        assert!(MarkLaw::lattice(1.0, &[(-1.5, 0.5), (1.0, 0.5)]).is_err());
        assert!(MarkLaw::lattice(1.0, &[(-1.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(MarkLaw::lattice(1.0, &[(-1.0, 1.0)]).is_err());
        assert_eq!(MarkLaw::lattice(0.5, &[(0.5, 1.0)]).unwrap(), MarkLaw::degenerate(0.5).unwrap());
        let law: MarkLaw =
            serde_json::from_str(r#"{"law":"lattice","eta":1.0,"atoms":[[-1,0.5],[1,0.5]]}"#).unwrap();
        assert_eq!(law.span(), Some(1.0));
        let back: MarkLaw = serde_json::from_str(&serde_json::to_string(&law).unwrap()).unwrap();
        assert_eq!(law, back);
    }

    #[test]
    fn lattice_sampling_and_tilt() {
        let law = MarkLaw::lattice(0.5, &[(-0.5, 0.3), (1.0, 0.7)]).unwrap();
        let theta = 0.8;
        let tilted = law.tilted(theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| tilted.sample(&mut rng)).sum::<f64>() / n as f64;
        let (m, m1, _) = law.mgf(theta).unwrap();
        assert!((mean - m1 / m).abs() < 0.01, "{mean} {}", m1 / m);
        // units are exact integers
        for _ in 0..100 {
            let u = law.sample_units(&mut rng);
            assert!(u == -1.0 || u == 2.0);
        }
    }

    #[test]
    fn x_lambda_sawtooth() {
        let law = MarkLaw::degenerate(1.0).unwrap();
        let s = solve_tilt_volume(&law, 1.0, 1.8).unwrap();
        assert_eq!(x_lambda(30.0, &s), 0.0);
        assert!((x_lambda(10.0, &s) - 0.0).abs() < 1e-12);
        assert!((x_lambda(1.0, &s) - 0.8 * s.theta).abs() < 1e-12);
        let g = MarkLaw::gaussian(0.0, 1.0).unwrap();
        assert_eq!(x_lambda(7.3, &solve_tilt_volume(&g, 1.0, 2.0).unwrap()), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tilt_root_residual(eta in 0.1f64..3.0, sd in 0.2f64..3.0, mu in -1.0f64..1.0, vol in 0.2f64..5.0, extra in 0.01f64..10.0) {
            let laws = [
                MarkLaw::degenerate(eta).unwrap(),
                MarkLaw::gaussian(mu, sd).unwrap(),
                MarkLaw::lattice(eta, &[(-eta, 0.4), (2.0 * eta, 0.35), (3.0 * eta, 0.25)]).unwrap(),
                MarkLaw::generic(Arc::new(ShiftedExp)),
            ];
            for law in &laws {
                let c = law.mean().max(0.0) * vol + extra;
                let s = solve_tilt_volume(law, vol, c).unwrap();
                let (_, m1, m2) = law.mgf(s.theta).unwrap();
                prop_assert!(s.theta > 0.0);
                prop_assert!(((m1 - c / vol) / (c / vol)).abs() < 1e-10);
                prop_assert!(m2 > 0.0);
                prop_assert!(s.rate > 0.0);
                prop_assert!(s.chi > 0.0 && s.chi <= s.theta + 1e-15);
            }
        }

        #[test]
        fn tilted_mean_identity(theta in -0.5f64..0.8, which in 0usize..3, eta in 0.2f64..2.0) {
            let law = match which {
                0 => MarkLaw::degenerate(eta).unwrap(),
                1 => MarkLaw::gaussian(0.3, eta).unwrap(),
                _ => MarkLaw::lattice(eta, &[(-eta, 0.2), (eta, 0.5), (3.0 * eta, 0.3)]).unwrap(),
            };
            let (m0, m1, _) = law.mgf(theta).unwrap();
            let tilted = law.tilted(theta).unwrap().mean();
            prop_assert!((tilted - m1 / m0).abs() < 1e-10 * (1.0 + tilted.abs()), "{} vs {}", tilted, m1 / m0);
        }

        #[test]
        fn x_lambda_range(lambda in 0.5f64..200.0, c in 1.01f64..20.0, eta in 0.1f64..2.0) {
            let law = MarkLaw::degenerate(eta).unwrap();
            let s = solve_tilt_volume(&law, 1.0, c * eta).unwrap();
            let x = x_lambda(lambda, &s);
            prop_assert!(x >= 0.0 && x < eta * s.theta + 1e-9);
        }
    }
}
