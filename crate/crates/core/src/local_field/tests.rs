use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;

use super::rays::{random_directions, zero_volume};
use super::*;
use crate::geometry::{dot, scale};
use crate::mc::{mean_se, replicate, stream};

fn ball_model(c_hat: f64) -> FieldModel {
    let k = Kernel::ball(1.0, 2).unwrap();
    FieldModel::new(&k, &MarkLaw::degenerate(1.0).unwrap(), c_hat * PI).unwrap()
}

fn gauss_model(mass: f64) -> FieldModel {
    let k = Kernel::ball(1.0, 2).unwrap();
    let law = MarkLaw::gaussian(0.0, 1.0).unwrap();
    let c = crate::marks::threshold_for_mass(&law, k.volume(), mass).unwrap();
    FieldModel::new(&k, &law, c).unwrap()
}

#[test]
fn event_rates() {
    let model = ball_model(3.0);
    let xs = replicate(1, "rates", &[], 400, |rng, _| {
        let f = model.simulate(5.0, rng);
        let added = f.events.iter().filter(|e| e.stream == Stream::Added).count();
        (added as f64, (f.events.len() - added) as f64)
    });
    let a: Vec<f64> = xs.iter().map(|x| x.0).collect();
    let s: Vec<f64> = xs.iter().map(|x| x.1).collect();
    let (ma, sa) = mean_se(&a);
    let (ms, ss) = mean_se(&s);
    assert!((ma - 2.0 * PI * 5.0).abs() < 4.0 * sa);
    assert!((ms - 3.0 * 2.0 * PI * 5.0).abs() < 4.0 * ss);
}

#[test]
fn extension_keeps_events_and_covers_shell() {
    let model = ball_model(2.0);
    let mut rng = stream(2, "extend", &[]);
    let mut f = model.simulate(3.0, &mut rng);
    let before = f.events.clone();
    model.extend(&mut f, 6.0, &mut rng);
    assert_eq!(&f.events[..before.len()], &before[..]);
    assert!(f.events[before.len()..].iter().all(|e| e.offset.abs() >= 3.0 && e.offset.abs() <= 6.0));
    assert!(f.eval(&[5.0, 0.0, 0.0]).is_ok());
    assert!(f.eval(&[7.0, 0.0, 0.0]).is_err());
}

#[test]
fn origin_is_zero() {
    let model = gauss_model(2.0);
    let mut rng = stream(3, "origin", &[]);
    for _ in 0..50 {
        let f = model.simulate(4.0, &mut rng);
        assert_eq!(f.eval_units(&[0.0; 3]), (0.0, 0));
    }
}

#[test]
fn ray_profile_matches_pointwise_evaluation() {
    let model = gauss_model(3.0);
    let mut rng = stream(4, "rays", &[]);
    for _ in 0..30 {
        let f = model.simulate(6.0, &mut rng);
        let phi: f64 = rng.random::<f64>() * 2.0 * PI;
        let e = [phi.cos(), phi.sin(), 0.0];
        let p = f.ray_profile(&e, 6.0);
        for _ in 0..50 {
            let r = 6.0 * rng.random::<f64>();
            let (v, _) = f.eval_units(&scale(&e, r));
            assert!((p.value_at(r) - v).abs() < 1e-9);
        }
    }
}

#[test]
fn grid_values_match_pointwise_evaluation() {
    for model in [ball_model(2.0), gauss_model(2.5)] {
        let mut rng = stream(5, "grid", &[]);
        let f = model.simulate(6.0, &mut rng);
        let (m, g) = (3.0, 24);
        let vals = f.box_grid_values(m, g);
        for j in 0..=g {
            for i in 0..=g {
                let u = [i as f64 * m / g as f64, j as f64 * m / g as f64, 0.0];
                assert!((vals[j * (g + 1) + i] - f.eval_units(&u).0).abs() < 1e-9);
            }
        }
    }
    let k = Kernel::boxed(&[1.0]).unwrap();
    let model = FieldModel::new(&k, &MarkLaw::degenerate(1.0).unwrap(), 2.0).unwrap();
    let f = model.simulate(5.0, &mut stream(5, "grid1", &[]));
    let vals = f.box_grid_values(4.0, 40);
    for (i, v) in vals.iter().enumerate() {
        assert_eq!(*v, f.eval_units(&[i as f64 * 0.1, 0.0, 0.0]).0);
    }
}

#[test]
fn exact_box_sup_dominates_grid() {
    for model in [ball_model(2.0), gauss_model(2.0)] {
        let mut rng = stream(6, "sup", &[]);
        for _ in 0..20 {
            let f = model.simulate(2.0 * 2f64.sqrt() + 0.01, &mut rng);
            let exact = f.sup_box_exact(2.0).unwrap();
            let grid = f.sup_on_grid(2.0, 2.0 / 400.0) * f.unit;
            assert!(exact >= grid - 1e-9);
            if f.arithmetic {
                // cells of an integer field are wide enough for a fine grid
                assert!(exact - grid <= 1.0);
            }
            assert!(exact >= 0.0);
        }
    }
}

#[test]
fn negative_sup_bounds_sampled_values() {
    let model = gauss_model(2.0);
    let mut rng = stream(7, "negsup", &[]);
    for _ in 0..20 {
        let f = model.simulate(4.0, &mut rng);
        let (exact, at) = f.negative_sup_exact(4.0).unwrap().unwrap();
        assert!(exact < 0.0 && at <= 4.0 + 1e-9);
        let pts: Vec<Vec3> = (0..4000)
            .map(|_| {
                let r = 4.0 * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                [r * phi.cos(), r * phi.sin(), 0.0]
            })
            .collect();
        if let Some(s) = f.negative_sup_sampled(&pts) {
            assert!(s <= exact + 1e-12);
        }
    }
}

#[test]
fn zero_cell_matches_rays_for_gaussian_marks() {
    let model = gauss_model(2.0);
    let mut rng = stream(8, "cell", &[]);
    for _ in 0..20 {
        let f = model.simulate(8.0, &mut rng);
        let (area, reach) = f.zero_cell_area();
        if reach < 8.0 {
            let dirs = random_directions(2, 20_000, &mut rng);
            let occ = zero_volume(&f, &dirs, 8.0);
            assert!((occ.volume - area).abs() < 2e-3 * area, "{} {area}", occ.volume);
        }
    }
}

#[test]
fn axis_volume_matches_rays_for_boxes() {
    let k = Kernel::boxed(&[1.0, 2.0]).unwrap();
    let model = FieldModel::new(&k, &MarkLaw::degenerate(1.0).unwrap(), 4.0).unwrap();
    let mut rng = stream(12, "axis", &[]);
    let mut compared = 0;
    for _ in 0..20 {
        let f = model.simulate(model.default_radius(), &mut rng);
        let (vol, reach) = f.axis_zero_volume().unwrap();
        if reach >= 0.5 * f.radius {
            continue;
        }
        compared += 1;
        let dirs = random_directions(2, 20_000, &mut rng);
        let rays = zero_volume(&f, &dirs, f.radius);
        assert!((rays.volume - vol).abs() < 5e-3 * vol, "{} {vol}", rays.volume);
        assert!(rays.max_zero_radius <= reach * 2f64.sqrt() + 1e-9);
    }
    assert!(compared >= 10);
    // any normal off the axes rules the method out
    assert!(ball_model(2.0).simulate(2.0, &mut rng).axis_zero_volume().is_none());
}

#[test]
fn typical_cell_is_seen_from_inside() {
    let boxed = FieldModel::new(&Kernel::boxed(&[1.0, 1.0]).unwrap(), &MarkLaw::degenerate(1.0).unwrap(), 2.0).unwrap();
    let mut rng = stream(13, "typical", &[]);
    for model in [ball_model(3.0), gauss_model(2.0), boxed] {
        for _ in 0..50 {
            let cell = model.simulate_typical_cell(model.default_radius(), 3, &mut rng).unwrap();
            assert!(!cell.truncated);
            assert_eq!(cell.field.eval_units(&[0.0; 3]), (0.0, 0));
            // the root's zero cell is the sampled cell
            let (area, _) = cell.field.zero_cell_area();
            assert!((area - cell.area).abs() < 1e-9 * cell.area, "{area} {}", cell.area);
            assert_eq!(cell.field.events.iter().filter(|e| e.offset.abs() > cell.field.radius).count(), 0);
        }
    }
}

/// A cell at a random corner of a typical vertex is biased by its number of
/// vertices, whose typical mean is 4, so `E[1/n] = 1/4`. Box kernels only
/// make rectangles.
#[test]
fn typical_cells_have_four_vertices_on_average() {
    let model = ball_model(2.0);
    let xs = replicate(14, "corners", &[], 4000, |rng, _| {
        1.0 / model.simulate_typical_cell(6.0, 3, rng).unwrap().vertices as f64
    });
    let (m, se) = mean_se(&xs);
    assert!((m - 0.25).abs() < 4.0 * se, "{m} +- {se}");
    let boxed = FieldModel::new(&Kernel::boxed(&[1.0, 1.0]).unwrap(), &MarkLaw::degenerate(1.0).unwrap(), 2.0).unwrap();
    let mut rng = stream(15, "corners", &[]);
    for _ in 0..50 {
        assert_eq!(boxed.simulate_typical_cell(6.0, 3, &mut rng).unwrap().vertices, 4);
    }
    let tri = Kernel::polygon(&[[0.0, 0.0], [2.0, 0.0], [0.5, 1.0]]).unwrap();
    let m = FieldModel::new(&tri, &MarkLaw::degenerate(1.0).unwrap(), 2.0).unwrap();
    assert!(m.simulate_typical_cell(6.0, 3, &mut rng).is_err());
}

#[test]
fn rays_agree_with_hit_or_miss() {
    let model = ball_model(3.0);
    let mut rng = stream(9, "hom", &[]);
    let mut compared = 0;
    for _ in 0..10 {
        let f = model.simulate(model.default_radius(), &mut rng);
        let dirs = random_directions(2, 2048, &mut rng);
        let rays = zero_volume(&f, &dirs, f.radius);
        let hom = f.zero_occupation_hit_or_miss(f.radius, 400_000, &mut rng);
        if hom.truncated {
            continue;
        }
        compared += 1;
        assert!((rays.volume - hom.volume).abs() < 4.0 * hom.stderr + 0.01 * rays.volume, "{rays:?} {hom:?}");
    }
    assert!(compared >= 5);
}

/// `E vol{Y = 0}` for the unit disc with unit marks is `pi (1 + c)/(2 (c - 1)^3)`.
#[test]
fn mean_zero_area_matches_closed_form() {
    for c_hat in [2.0, 4.0] {
        let model = ball_model(c_hat);
        let r = model.default_radius();
        let xs = replicate(10, "mean-area", &[c_hat.to_bits()], 4000, |rng, _| {
            let f = model.simulate(r, rng);
            let dirs = random_directions(2, 64, rng);
            zero_volume(&f, &dirs, r).volume
        });
        let (m, se) = mean_se(&xs);
        let exact = PI * (1.0 + c_hat) / (2.0 * (c_hat - 1.0f64).powi(3));
        assert!((m - exact).abs() < 4.0 * se, "c={c_hat}: {m} +- {se} vs {exact}");
    }
}

/// In one dimension `E vol{Y = 0} = 2 / (c - 1)` for unit marks.
#[test]
fn mean_zero_length_in_one_dimension() {
    let k = Kernel::ball(1.0, 1).unwrap();
    let model = FieldModel::new(&k, &MarkLaw::degenerate(1.0).unwrap(), 2.0 * 3.0).unwrap();
    let r = model.default_radius();
    let xs = replicate(11, "len", &[], 20_000, |rng, _| {
        let f = model.simulate(r, rng);
        let dirs = random_directions(1, 2, rng);
        zero_volume(&f, &dirs, r).volume
    });
    let (m, se) = mean_se(&xs);
    assert!((m - 1.0).abs() < 4.0 * se, "{m} +- {se}");
}

/// `e^{theta Y(u)}` has mean one at every point.
#[test]
fn exponential_moment_is_one() {
    for model in [ball_model(2.0), gauss_model(2.0)] {
        let theta = model.tilt().theta;
        let u = [0.8, -0.3, 0.0];
        let xs = replicate(12, "expmom", &[], 100_000, |rng, _| {
            let f = model.simulate(1.0, rng);
            (theta * f.eval(&u).unwrap()).exp()
        });
        let (m, se) = mean_se(&xs);
        assert!((m - 1.0).abs() < 4.0 * se, "{m} +- {se}");
    }
}

/// The tilted simulation reproduces `E[g(Y) e^{theta Y(tau)}]`.
#[test]
fn tilted_simulation_is_the_tilted_law() {
    let model = gauss_model(2.0);
    let theta = model.tilt().theta;
    let tau = [0.6, 0.4, 0.0];
    let probe = [0.2, 0.9, 0.0];
    let g = |f: &LocalField| f.eval(&probe).unwrap() + 0.5 * f.eval(&tau).unwrap();
    let direct = replicate(13, "tilt-p", &[], 200_000, |rng, _| {
        let f = model.simulate(1.2, rng);
        g(&f) * (theta * f.eval(&tau).unwrap()).exp()
    });
    let tilted = replicate(13, "tilt-q", &[], 200_000, |rng, _| g(&model.simulate_tilted_at(&tau, 1.2, rng)));
    let (a, sa) = mean_se(&direct);
    let (b, sb) = mean_se(&tilted);
    assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "{a} +- {sa} vs {b} +- {sb}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Mean and variance of `Y(r e)` match the shadow formulas.
    #[test]
    fn drift_and_variance(phi in 0.0..(2.0 * PI), r in 0.3f64..2.0, which in 0usize..3) {
        let (kernel, law) = match which {
            0 => (Kernel::ball(1.0, 2).unwrap(), MarkLaw::gaussian(0.2, 1.0).unwrap()),
            1 => (Kernel::boxed(&[1.0, 0.5]).unwrap(), MarkLaw::degenerate(1.0).unwrap()),
            _ => (Kernel::cylinder(0.7, 1.0).unwrap(), MarkLaw::lattice(1.0, &[(-1.0, 0.3), (2.0, 0.7)]).unwrap()),
        };
        let model = FieldModel::new(&kernel, &law, 1.5 * kernel.volume() * law.mean().max(0.5) + 0.5).unwrap();
        let e = if kernel.dim() == 3 { [phi.cos() * 0.6, phi.sin() * 0.6, 0.8] } else { [phi.cos(), phi.sin(), 0.0] };
        let u = scale(&e, r);
        let xs = replicate(14, "drift", &[which as u64, phi.to_bits(), r.to_bits()], 20_000, |rng, _| {
            model.simulate(r * (1.0 + 1e-9), rng).eval(&u).unwrap()
        });
        let (m, se) = mean_se(&xs);
        let t = model.tilt();
        let (_, _, m2_0) = law.mgf(0.0).unwrap();
        let sh = kernel.shadow(&e);
        let mean = r * sh * (t.mean - t.m1);
        let var = r * sh * (m2_0 + t.m2);
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
        prop_assert!((m - mean).abs() < 4.5 * se, "mean {} vs {}", m, mean);
        prop_assert!((v - var).abs() < 0.08 * var, "var {} vs {}", v, var);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Nudging `u` without crossing an event hyperplane leaves `Y(u)` unchanged.
    #[test]
    fn piecewise_constant(seed in 0u64..1000, which in 0usize..3, x in -1.0f64..1.0, y in -1.0f64..1.0, phi in 0.0..(2.0 * PI)) {
        let model = match which {
            0 => ball_model(3.0),
            1 => gauss_model(2.0),
            _ => FieldModel::new(&Kernel::boxed(&[1.0, 2.0]).unwrap(), &MarkLaw::lattice(0.5, &[(0.5, 0.4), (1.5, 0.6)]).unwrap(), 3.0).unwrap(),
        };
        let f = model.simulate(3.0, &mut stream(seed, "nudge", &[which as u64]));
        let u = [x, y, 0.0];
        let v = [x + 1e-9 * phi.cos(), y + 1e-9 * phi.sin(), 0.0];
        let clear = f.events.iter().all(|e| (dot(&e.normal, &u) - e.offset).abs() > 1e-7);
        prop_assume!(clear);
        prop_assert_eq!(f.eval(&u).unwrap(), f.eval(&v).unwrap());
    }
}
