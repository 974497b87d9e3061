//! Exact enumeration of the values taken by a sum of half-plane indicators.
//!
//! Each line contributes `weight` on one side. Walking along every line and
//! tracking the crossings with all other lines visits every cell of the
//! arrangement that meets the clip region (each cell at least once), so
//! maxima over cells are exact. Cost is `O(n^2 log n)`.

/// Half-plane term: included where `n . p > offset` (`upper`) or `n . p <= offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
    pub weight: f64,
    pub upper: bool,
}

impl HalfPlane {
    #[inline]
    pub fn includes(&self, p: [f64; 2]) -> bool {
        let s = self.normal[0] * p[0] + self.normal[1] * p[1];
        if self.upper {
            s > self.offset
        } else {
            s <= self.offset
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Clip {
    Box { lo: [f64; 2], hi: [f64; 2] },
    Disc { radius: f64 },
}

/// A cell value found by the sweep: the sum of included weights, how many
/// terms are included, and a point inside (or on the edge of) the cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellValue {
    pub value: f64,
    pub count: usize,
    pub point: [f64; 2],
}

fn chord(clip: &Clip, p0: [f64; 2], d: [f64; 2]) -> Option<(f64, f64)> {
    match *clip {
        Clip::Disc { radius } => {
            // |p0 + s d|^2 <= r^2 with p0 . d = 0 and |d| = 1
            let q = radius * radius - (p0[0] * p0[0] + p0[1] * p0[1]);
            if q <= 0.0 {
                None
            } else {
                let h = q.sqrt();
                Some((-h, h))
            }
        }
        Clip::Box { lo, hi } => {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
            for k in 0..2 {
                if d[k].abs() < 1e-300 {
                    if p0[k] < lo[k] || p0[k] > hi[k] {
                        return None;
                    }
                } else {
                    let t1 = (lo[k] - p0[k]) / d[k];
                    let t2 = (hi[k] - p0[k]) / d[k];
                    a = a.max(t1.min(t2));
                    b = b.min(t1.max(t2));
                }
            }
            if a < b {
                Some((a, b))
            } else {
                None
            }
        }
    }
}

/// Visits every cell of the arrangement that meets `clip` and is adjacent to
/// some line inside it. Returns `false` when no line meets the clip region, in
/// which case the caller must evaluate the single remaining cell itself.
pub fn visit_cells(planes: &[HalfPlane], clip: &Clip, mut visit: impl FnMut(CellValue)) -> bool {
    let mut any = false;
    let mut crossings: Vec<(f64, usize)> = Vec::with_capacity(planes.len());
    for (i, hp) in planes.iter().enumerate() {
        let n = hp.normal;
        let p0 = [hp.offset * n[0], hp.offset * n[1]];
        let d = [-n[1], n[0]];
        let Some((s_lo, s_hi)) = chord(clip, p0, d) else { continue };
        any = true;
        crossings.clear();
        for (j, other) in planes.iter().enumerate() {
            if j == i {
                continue;
            }
            let den = other.normal[0] * d[0] + other.normal[1] * d[1];
            if den.abs() < 1e-14 {
                continue;
            }
            let s = (other.offset - (other.normal[0] * p0[0] + other.normal[1] * p0[1])) / den;
            if s > s_lo && s < s_hi {
                crossings.push((s, j));
            }
        }
        crossings.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let first = crossings.first().map_or(s_hi, |c| c.0);
        let s_eval = 0.5 * (s_lo + first);
        let at = |s: f64| [p0[0] + s * d[0], p0[1] + s * d[1]];
        let pe = at(s_eval);
        let mut base = 0.0;
        let mut count = 0usize;
        for (j, other) in planes.iter().enumerate() {
            if j != i && other.includes(pe) {
                base += other.weight;
                count += 1;
            }
        }
        let mut report = |base: f64, count: usize, s: f64| {
            let p = at(s);
            visit(CellValue { value: base, count, point: p });
            visit(CellValue { value: base + hp.weight, count: count + 1, point: p });
        };
        report(base, count, s_eval);
        for k in 0..crossings.len() {
            let (s, j) = crossings[k];
            let other = &planes[j];
            let den = other.normal[0] * d[0] + other.normal[1] * d[1];
            // past the crossing, n_j . p - offset_j has the sign of den
            let now_included = if other.upper { den > 0.0 } else { den < 0.0 };
            if now_included {
                base += other.weight;
                count += 1;
            } else {
                base -= other.weight;
                count = count.saturating_sub(1);
            }
            let next = crossings.get(k + 1).map_or(s_hi, |c| c.0);
            report(base, count, 0.5 * (s + next));
        }
    }
    any
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_planes(rng: &mut ChaCha8Rng, n: usize) -> Vec<HalfPlane> {
        (0..n)
            .map(|_| {
                let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                HalfPlane {
                    normal: [phi.cos(), phi.sin()],
                    offset: rng.random_range(-2.0..2.0),
                    weight: (rng.random_range(-3..=3) as f64),
                    upper: rng.random(),
                }
            })
            .collect()
    }

    fn eval(planes: &[HalfPlane], p: [f64; 2]) -> f64 {
        planes.iter().filter(|h| h.includes(p)).map(|h| h.weight).sum()
    }

    #[test]
    fn max_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let planes = random_planes(&mut rng, 12);
            let clip = Clip::Box { lo: [-1.0, -1.0], hi: [1.5, 1.0] };
            let mut best = f64::NEG_INFINITY;
            let mut values = std::collections::BTreeSet::new();
            visit_cells(&planes, &clip, |c| {
                best = best.max(c.value);
                values.insert(c.value as i64);
            });
            let mut grid_best = f64::NEG_INFINITY;
            let n = 600;
            for a in 0..=n {
                for b in 0..=n {
                    let p = [-1.0 + 2.5 * a as f64 / n as f64, -1.0 + 2.0 * b as f64 / n as f64];
                    let v = eval(&planes, p);
                    grid_best = grid_best.max(v);
                    assert!(values.contains(&(v as i64)), "grid value {v} missed by sweep");
                }
            }
            assert_eq!(best, grid_best);
        }
    }

    #[test]
    fn counts_track_inclusions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let planes = random_planes(&mut rng, 15);
        visit_cells(&planes, &Clip::Disc { radius: 1.5 }, |c| {
            assert!(c.count <= planes.len());
            assert!(c.point[0].hypot(c.point[1]) <= 1.5 + 1e-12);
        });
    }

    #[test]
    fn empty_clip_reports_nothing() {
        let planes = [HalfPlane { normal: [1.0, 0.0], offset: 5.0, weight: 1.0, upper: true }];
        let mut n = 0;
        assert!(!visit_cells(&planes, &Clip::Disc { radius: 1.0 }, |_| n += 1));
        assert_eq!(n, 0);
    }
}
