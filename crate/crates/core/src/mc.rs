//! Reproducible replicate streams and small summary statistics.
//!
//! Every replicate draws from its own ChaCha8 stream whose 256-bit seed is the
//! SHA-256 digest of `(master seed, tag, indices)`. Replicates run on the rayon
//! pool of the caller and are summed in index order, so results do not depend
//! on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Independent stream for replicate `indices` of the computation named `tag`.
pub fn stream(seed: u64, tag: &str, indices: &[u64]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Runs `reps` replicates in parallel; output is in replicate order.
pub fn replicate<T, F>(seed: u64, tag: &str, key: &[u64], reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, u64) -> T + Sync + Send,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut idx = key.to_vec();
            idx.push(i);
            let mut rng = stream(seed, tag, &idx);
            f(&mut rng, i)
        })
        .collect()
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64], seed: u64) -> Self {
        let (m, se) = mean_se(xs);
        McEstimate { estimate: m, stderr: se, reps: xs.len(), seed }
    }

    /// Number of standard errors separating `self` from `x`.
    pub fn z_score(&self, x: f64) -> f64 {
        (self.estimate - x) / self.stderr
    }
}

/// Sample mean and standard error of the mean, summed in order.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n as f64 - 1.0) / n as f64).sqrt())
}

/// Ratio estimator `sum(x) / sum(w)` with a delta-method standard error.
pub fn ratio_se(x: &[f64], w: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sw: f64 = w.iter().sum();
    let r = sx / sw;
    let wbar = sw / n;
    let ss: f64 = x.iter().zip(w).map(|(a, b)| (a - r * b).powi(2)).sum();
    (r, (ss / (n - 1.0) / n).sqrt() / wbar)
}

/// Half-width of the Wilson score interval for `k` successes in `n` trials.
pub fn wilson_half_width(k: usize, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Weighted least squares polynomial fit `y ~ sum_j a_j x^j` of degree `deg`.
/// Returns coefficients, their covariance matrix, and the weighted residual
/// sum of squares. Weights are inverse variances.
pub fn poly_fit(x: &[f64], y: &[f64], w: &[f64], deg: usize) -> Option<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let p = deg + 1;
    if x.len() < p {
        return None;
    }
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..x.len() {
        let mut pw = vec![1.0; p];
        for j in 1..p {
            pw[j] = pw[j - 1] * x[i];
        }
        for j in 0..p {
            b[j] += w[i] * pw[j] * y[i];
            for k in 0..p {
                a[j][k] += w[i] * pw[j] * pw[k];
            }
        }
    }
    let inv = invert(a)?;
    let coef: Vec<f64> = (0..p).map(|j| (0..p).map(|k| inv[j][k] * b[k]).sum()).collect();
    let rss = (0..x.len())
        .map(|i| {
            let f: f64 = coef.iter().rev().fold(0.0, |acc, c| acc * x[i] + c);
            w[i] * (y[i] - f).powi(2)
        })
        .sum();
    Some((coef, inv, rss))
}

/// Gauss-Jordan inverse with partial pivoting, for the tiny normal equations above.
fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: u64 = stream(7, "x", &[1]).random();
        let b: u64 = stream(7, "x", &[1]).random();
        let c: u64 = stream(7, "x", &[2]).random();
        let d: u64 = stream(7, "y", &[1]).random();
        let e: u64 = stream(8, "x", &[1]).random();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }

    #[test]
    fn replicate_ignores_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                let xs = replicate(11, "t", &[], 1000, |rng, _| rng.random::<f64>());
                mean_se(&xs)
            })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn fit_recovers_polynomial() {
        let x = [0.1, 0.2, 0.3, 0.5, 0.7];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 3.0 * t + 0.5 * t * t).collect();
        let (c, _, rss) = poly_fit(&x, &y, &[1.0; 5], 2).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-10 && (c[1] + 3.0).abs() < 1e-9 && (c[2] - 0.5).abs() < 1e-8);
        assert!(rss < 1e-20);
    }

    #[test]
    fn wilson_matches_hand_value() {
        // p = 0.5, n = 100: half-width 1.96 * sqrt(0.25/100 + 1.96^2/40000) / (1 + 1.96^2/100)
        let h = wilson_half_width(50, 100, 1.96);
        let z2: f64 = 1.96 * 1.96;
        let exact = 1.96 * (0.0025 + z2 / 40000.0f64).sqrt() / (1.0 + z2 / 100.0);
        assert!((h - exact).abs() < 1e-15);
    }
}
