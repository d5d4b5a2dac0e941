mod support;

use bundleopt::contact::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::lcp_oracle_1d;

#[test]
fn one_dimensional_step_matches_lcp_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let p = Contact1DParams::new(
            rng.random_range(0.1..5.0),
            rng.random_range(0.01..0.2),
            rng.random_range(1.0..500.0),
        )
        .unwrap();
        let x_object = rng.random_range(-2.0..2.0);
        let s = Contact1DState {
            x_object,
            x_robot: x_object - rng.random_range(0.0..1.0),
        };
        let cmd = rng.random_range(-3.0..3.0);
        let (next, diag) = step_1d(&s, cmd, &p);
        let (mode, xo, xr) = lcp_oracle_1d(&s, cmd, &p).expect("the LCP has a solution");
        assert_eq!(diag.mode, mode);
        assert!((next.x_object - xo).abs() <= 1e-12 * (1.0 + xo.abs()));
        assert!((next.x_robot - xr).abs() <= 1e-12 * (1.0 + xr.abs()));
        assert!(diag.complementarity_residual() <= 1e-10);
        assert!(diag.force_balance_residual.abs() <= 1e-10);
        assert!(diag.momentum_residual.abs() <= 1e-10);
    }
}

fn random_2d(rng: &mut ChaCha8Rng) -> (Contact2DParams, Contact2DState, [f64; 2]) {
    let p = Contact2DParams {
        mass: rng.random_range(0.1..5.0),
        dt: rng.random_range(0.01..0.2),
        stiffness: rng.random_range(1.0..500.0),
        friction: rng.random_range(0.05..1.5),
        box_half_height: 0.5,
        sphere_radius: 0.1,
    };
    let s = Contact2DState {
        x_object: rng.random_range(-1.0..1.0),
        x_robot: rng.random_range(-1.0..1.0),
        y_robot: p.touching_height() + rng.random_range(0.0..0.5),
    };
    let cmd = [
        rng.random_range(-2.0..2.0),
        p.touching_height() + rng.random_range(-1.0..1.0),
    ];
    (p, s, cmd)
}

#[test]
fn planar_exact_step_satisfies_coulomb_complementarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let (p, s, cmd) = random_2d(&mut rng);
        let (next, d) = step_2d_exact(&s, cmd, &p);
        assert!(d.complementarity_residual(p.friction) <= 1e-10, "{d:?}");
        // Quasi-static equilibrium of the sphere and momentum of the box.
        let hk = p.dt * p.stiffness;
        assert!(
            (hk * (cmd[0] - next.x_robot) - d.tangential_impulse).abs() <= 1e-10 * (1.0 + d.tangential_impulse.abs())
        );
        assert!((hk * (cmd[1] - next.y_robot) + d.normal_impulse).abs() <= 1e-10 * (1.0 + d.normal_impulse.abs()));
        assert!(
            (p.mass * (next.x_object - s.x_object) / p.dt - d.tangential_impulse).abs()
                <= 1e-10 * (1.0 + d.tangential_impulse.abs())
        );
    }
}

#[test]
fn planar_relaxation_matches_exact_outside_sliding() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..5_000 {
        let (p, s, cmd) = random_2d(&mut rng);
        let (exact, d) = step_2d_exact(&s, cmd, &p);
        let sliding = matches!(d.mode, ContactMode2D::SlidingPositive | ContactMode2D::SlidingNegative);
        // Separation close to the friction boundary layer can still feel drag.
        let phi = s.gap(&p);
        let layer = p.friction * (cmd[0] - s.x_robot).abs();
        if sliding || (d.mode == ContactMode2D::Separation && phi + (cmd[1] - s.y_robot) <= layer) {
            continue;
        }
        let (relaxed, _) = step_2d_anitescu(&s, cmd, &p).unwrap();
        assert!((exact.x_object - relaxed.x_object).abs() <= 1e-6);
        assert!((exact.x_robot - relaxed.x_robot).abs() <= 1e-6);
        assert!((exact.y_robot - relaxed.y_robot).abs() <= 1e-6);
        checked += 1;
    }
    assert!(checked > 1_000);
}

#[test]
fn steps_are_continuous_across_mode_boundaries() {
    let p1 = Contact1DParams::new(1.3, 0.1, 80.0).unwrap();
    let s1 = Contact1DState {
        x_object: 0.7,
        x_robot: 0.2,
    };
    for eps in [1e-9, 1e-11] {
        let (a, _) = step_1d(&s1, s1.x_object - eps, &p1);
        let (b, _) = step_1d(&s1, s1.x_object + eps, &p1);
        assert!((a.x_object - b.x_object).abs() <= 1e-8 && (a.x_robot - b.x_robot).abs() <= 1e-8);
    }

    let p = Contact2DParams {
        mass: 1.0,
        dt: 0.1,
        stiffness: 100.0,
        friction: 0.5,
        box_half_height: 0.5,
        sphere_radius: 0.1,
    };
    let s = Contact2DState {
        x_object: 0.0,
        x_robot: 0.0,
        y_robot: p.touching_height(),
    };
    // Sweep along x at fixed depth: sticking ↔ sliding boundaries.
    let y = p.touching_height() - 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut crossings = 0;
    let mut prev = step_2d_exact(&s, [-1.0, y], &p);
    for i in 1..=20_000 {
        let x = -1.0 + 2.0 * i as f64 / 20_000.0;
        let cur = step_2d_exact(&s, [x, y], &p);
        if cur.1.mode != prev.1.mode {
            crossings += 1;
        }
        assert!((cur.0.x_object - prev.0.x_object).abs() <= 1e-4 * 1.01);
        prev = cur;
    }
    assert!(crossings >= 2);
    // Directional limits at a sticking/sliding boundary: λ_t = μ λ_n.
    let normal = p.dt * p.stiffness * 0.2;
    let boundary = p.friction * normal * (1.0 / (p.dt * p.stiffness) + p.dt / p.mass);
    for eps in [1e-9, 1e-10] {
        let (a, _) = step_2d_exact(&s, [boundary - eps, y], &p);
        let (b, _) = step_2d_exact(&s, [boundary + eps, y], &p);
        assert!((a.x_object - b.x_object).abs() <= 1e-8);
        assert!((a.x_robot - b.x_robot).abs() <= 1e-8);
    }
    // Separation/contact boundary in y.
    for _ in 0..100 {
        let x = rng.random_range(-1.0..1.0);
        let (a, _) = step_2d_exact(&s, [x, p.touching_height() + 1e-10], &p);
        let (b, _) = step_2d_exact(&s, [x, p.touching_height() - 1e-10], &p);
        assert!((a.x_object - b.x_object).abs() <= 1e-8 && (a.x_robot - b.x_robot).abs() <= 1e-8);
    }
}

#[test]
fn steps_are_affine_within_a_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    for _ in 0..2_000 {
        let (p, s, c0) = random_2d(&mut rng);
        let c1 = [c0[0] + rng.random_range(-0.2..0.2), c0[1] + rng.random_range(-0.2..0.2)];
        let mid = [(c0[0] + c1[0]) / 2.0, (c0[1] + c1[1]) / 2.0];
        let quarter = [0.75 * c0[0] + 0.25 * c1[0], 0.75 * c0[1] + 0.25 * c1[1]];
        let outs: Vec<_> = [c0, quarter, mid, c1]
            .iter()
            .map(|c| step_2d_exact(&s, *c, &p))
            .collect();
        if outs.iter().any(|o| o.1.mode != outs[0].1.mode) {
            continue;
        }
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        for (o, t) in [(&outs[1], 0.25), (&outs[2], 0.5)] {
            assert!((o.0.x_object - lerp(outs[0].0.x_object, outs[3].0.x_object, t)).abs() <= 1e-10);
            assert!((o.0.x_robot - lerp(outs[0].0.x_robot, outs[3].0.x_robot, t)).abs() <= 1e-10);
            assert!((o.0.y_robot - lerp(outs[0].0.y_robot, outs[3].0.y_robot, t)).abs() <= 1e-10);
        }
        tested += 1;
    }
    assert!(tested > 500);

    let p = Contact1DParams::new(1.0, 0.1, 100.0).unwrap();
    let s = Contact1DState {
        x_object: 1.0,
        x_robot: 0.0,
    };
    for (a, b) in [(-1.0, 0.9), (1.0, 3.0)] {
        let (ya, _) = step_1d(&s, a, &p);
        let (yb, _) = step_1d(&s, b, &p);
        let (ym, _) = step_1d(&s, 0.5 * (a + b), &p);
        assert!((ym.x_object - 0.5 * (ya.x_object + yb.x_object)).abs() <= 1e-10);
        assert!((ym.x_robot - 0.5 * (ya.x_robot + yb.x_robot)).abs() <= 1e-10);
    }
}
