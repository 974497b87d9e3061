//! The overshoot constant `nu_c = lim_y E_* e^{-theta (R_tau - y)}`.
//!
//! `R` is a random walk whose steps are `-X` with probability `1 / (1 + M)`
//! (`X ~ F`) and `X` with probability `M / (1 + M)` (`X ~ F_c`), `M = M(theta)`,
//! and `tau` is its first passage time over the level `y`. The walk drifts
//! upwards because `M'(theta) > mu`.

use serde::Serialize;

use crate::error::{Result, ScanError};
use crate::marks::{solve_tilt_volume, MarkLaw, TiltSolution};
use crate::mc::{replicate, McEstimate, StreamRng};

/// Step law of the ladder walk for a given law and tilt.
#[derive(Clone, Debug)]
pub struct WalkSpec {
    law: MarkLaw,
    tilted: MarkLaw,
    theta: f64,
    /// Probability of an upward (tilted) step.
    up: f64,
    span: Option<f64>,
}

impl WalkSpec {
    pub fn new(law: &MarkLaw, tilt: &TiltSolution) -> Result<Self> {
        let drift = tilt.m1 - law.mean();
        if !(drift > 0.0) {
            return Err(ScanError::InvalidArgument(format!(
                "the ladder walk needs M'(theta) > mu, got M'(theta) = {} and mu = {}",
                tilt.m1,
                law.mean()
            )));
        }
        Ok(WalkSpec {
            law: law.clone(),
            tilted: law.tilted(tilt.theta)?,
            theta: tilt.theta,
            up: tilt.m0 / (1.0 + tilt.m0),
            span: law.span(),
        })
    }

    /// Walk for `law` with the tilt of threshold `c` on a kernel of volume `volume`.
    pub fn for_threshold(law: &MarkLaw, volume: f64, c: f64) -> Result<Self> {
        Self::new(law, &solve_tilt_volume(law, volume, c)?)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn span(&self) -> Option<f64> {
        self.span
    }

    /// Mean step `(M'(theta) - mu) / (1 + M(theta))`.
    pub fn drift(&self) -> f64 {
        let m0 = self.up / (1.0 - self.up);
        let m1 = self.law.mgf(self.theta).map(|m| m.1).unwrap_or(f64::NAN);
        (m1 - self.law.mean()) / (1.0 + m0)
    }

    /// One step, in mark units (span units for arithmetic laws).
    fn step(&self, rng: &mut StreamRng) -> f64 {
        use rand::Rng;
        if rng.random::<f64>() < self.up {
            self.tilted.sample_units(rng)
        } else {
            -self.law.sample_units(rng)
        }
    }

    /// Overshoot `R_tau - y` (natural units) of one walk over level `y`.
    pub fn overshoot(&self, y: f64, rng: &mut StreamRng) -> f64 {
        let unit = self.law.unit();
        // integer steps on lattice levels keep the comparison exact
        let level = if self.span.is_some() { (y / unit).round() } else { y / unit };
        let mut r = 0.0;
        loop {
            r += self.step(rng);
            if r >= level {
                return (r - level) * unit;
            }
        }
    }
}

/// Estimates of `E_* e^{-theta (R_tau - y)}` at each level.
#[derive(Clone, Debug, Serialize)]
pub struct NuEstimate {
    /// Estimate at the largest level.
    pub estimate: McEstimate,
    pub levels: Vec<(f64, McEstimate)>,
    /// Estimates in the top half of the levels agree within three combined
    /// standard errors.
    pub stable: bool,
    /// The law is degenerate and `nu_c = 1` exactly.
    pub exact: bool,
}

/// Default levels `{10, 20, 40, 80} max(eta, 1/theta)`, rounded to the lattice.
pub fn default_levels(spec: &WalkSpec) -> Vec<f64> {
    let scale = spec.span.unwrap_or(0.0).max(1.0 / spec.theta);
    [10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|k| match spec.span {
            Some(eta) => (k * scale / eta).round() * eta,
            None => k * scale,
        })
        .collect()
}

/// `nu_c` by simulating the walk at every level of `levels` (increasing).
/// Degenerate laws have no overshoot on lattice levels and give exactly 1.
pub fn nu_c(spec: &WalkSpec, levels: &[f64], reps: usize, seed: u64) -> Result<NuEstimate> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] <= 0.0 {
        return Err(ScanError::InvalidArgument("levels must be positive and strictly increasing".into()));
    }
    if let Some(eta) = spec.span {
        if let Some(y) = levels.iter().find(|y| ((*y / eta) - (*y / eta).round()).abs() > 1e-9) {
            return Err(ScanError::InvalidArgument(format!("level {y} is not a multiple of the span {eta}")));
        }
    }
    if spec.law.is_degenerate() {
        let one = McEstimate { estimate: 1.0, stderr: 0.0, reps: 0, seed };
        return Ok(NuEstimate { estimate: one, levels: levels.iter().map(|y| (*y, one)).collect(), stable: true, exact: true });
    }
    if reps < 2 {
        return Err(ScanError::InvalidArgument("need at least two replicates".into()));
    }
    let mut out = Vec::with_capacity(levels.len());
    for (i, &y) in levels.iter().enumerate() {
        let xs = replicate(seed, "overshoot", &[i as u64, y.to_bits()], reps, |rng, _| {
            (-spec.theta * spec.overshoot(y, rng)).exp()
        });
        out.push((y, McEstimate::from_samples(&xs, seed)));
    }
    let top = &out[out.len() / 2..];
    let stable = top.windows(2).all(|w| {
        let (a, b) = (&w[0].1, &w[1].1);
        (a.estimate - b.estimate).abs() <= 3.0 * a.stderr.hypot(b.stderr)
    });
    Ok(NuEstimate { estimate: out.last().unwrap().1, levels: out, stable, exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{mean_se, stream};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian_walk(sd: f64, theta: f64) -> WalkSpec {
        let law = MarkLaw::gaussian(0.0, sd).unwrap();
        let c = law.mgf(theta).unwrap().1;
        WalkSpec::for_threshold(&law, 1.0, c).unwrap()
    }

    #[test]
    fn degenerate_is_exactly_one() {
        let law = MarkLaw::degenerate(2.0).unwrap();
        let spec = WalkSpec::for_threshold(&law, 1.0, 5.0).unwrap();
        let nu = nu_c(&spec, &default_levels(&spec), 10, 1).unwrap();
        assert!(nu.exact);
        assert_eq!(nu.estimate.estimate, 1.0);
        // the simulated walk agrees: steps are +-eta and never overshoot
        let mut rng = stream(1, "deg", &[]);
        for _ in 0..200 {
            assert_eq!(spec.overshoot(20.0, &mut rng), 0.0);
        }
    }

    #[test]
    fn lattice_overshoot_stays_on_the_lattice() {
        let law = MarkLaw::lattice(0.5, &[(-0.5, 0.3), (1.0, 0.5), (1.5, 0.2)]).unwrap();
        let spec = WalkSpec::for_threshold(&law, 1.0, 1.5).unwrap();
        let mut rng = stream(2, "lat", &[]);
        for _ in 0..2000 {
            let o = spec.overshoot(10.0, &mut rng);
            assert!(o >= 0.0 && ((o / 0.5) - (o / 0.5).round()).abs() < 1e-12, "{o}");
        }
        let nu = nu_c(&spec, &default_levels(&spec), 4000, 3).unwrap();
        assert!(nu.estimate.estimate > 0.0 && nu.estimate.estimate <= 1.0);
    }

    /// Straight-line simulation of the walk for `N(0, 1)` marks.
    #[test]
    fn gaussian_matches_direct_walk() {
        let theta = 1.0;
        let spec = gaussian_walk(1.0, theta);
        let nu = nu_c(&spec, &[50.0], 20_000, 4).unwrap();
        let m = (theta * theta / 2.0f64).exp();
        let up = m / (1.0 + m);
        let down = Normal::new(0.0, 1.0).unwrap();
        let tilted = Normal::new(theta, 1.0).unwrap();
        let mut rng = stream(5, "direct", &[]);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                let mut r = 0.0;
                while r < 50.0 {
                    r += if rng.random::<f64>() < up { tilted.sample(&mut rng) } else { -down.sample(&mut rng) };
                }
                (-theta * (r - 50.0)).exp()
            })
            .collect();
        let (m2, se2) = mean_se(&xs);
        let z = (nu.estimate.estimate - m2) / nu.estimate.stderr.hypot(se2);
        assert!(z.abs() < 3.0, "{nu:?} vs {m2} +- {se2}");
        assert!(nu.estimate.estimate > 0.0 && nu.estimate.estimate < 1.0);
    }

    #[test]
    fn gaussian_levels_are_stable() {
        let spec = gaussian_walk(1.0, 1.0);
        let nu = nu_c(&spec, &default_levels(&spec), 20_000, 6).unwrap();
        assert!(nu.stable, "{:?}", nu.levels);
    }

    /// Doubling the marks and halving the tilt leaves `theta * overshoot` unchanged in law.
    #[test]
    fn scaling_leaves_the_estimator_invariant() {
        let a = gaussian_walk(1.0, 1.2);
        let b = gaussian_walk(2.0, 0.6);
        let na = nu_c(&a, &[30.0], 20_000, 7).unwrap();
        let nb = nu_c(&b, &[60.0], 20_000, 8).unwrap();
        let z = (na.estimate.estimate - nb.estimate.estimate) / na.estimate.stderr.hypot(nb.estimate.stderr);
        assert!(z.abs() < 3.0, "{na:?} {nb:?}");
    }

    #[test]
    fn levels_must_sit_on_the_lattice() {
        let law = MarkLaw::lattice(1.0, &[(-1.0, 0.5), (2.0, 0.5)]).unwrap();
        let spec = WalkSpec::for_threshold(&law, 1.0, 2.0).unwrap();
        assert!(nu_c(&spec, &[10.5], 10, 1).is_err());
        assert!(nu_c(&spec, &[10.0, 5.0], 10, 1).is_err());
    }
}
