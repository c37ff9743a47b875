use mintime::geometry::{
    certify_attainable_inner_ball, certify_hypograph_exterior_sphere, check_inner_ball, check_realized_by_ball,
    hausdorff_distance, indicator_mask, rho_T_of, target_boundary_points, test_lipschitz_sampling, test_semiconcavity,
    AttainableOptions, HypoOptions, R_of_T,
};
use mintime::extremal::rho_of_s;
use mintime::linalg::norm;
use mintime::model::Constants;
use mintime::scenarios::{ball_origin_scenario, eikonal_scenario, example1_T};
use mintime::solver::restrict_continuity_region;
use mintime::{solve_min_time, Grid, ScalarField, SolveOptions, SplitMix64};
use proptest::prelude::*;

/// Straight transcription of the radius formulas, kept apart from the library.
mod oracle {
    pub fn rho(k: f64, k1: f64, c0: f64, rho0: f64, s: f64) -> f64 {
        rho0 * (-(k + 2.0 * k1) * s).exp() / (1.0 + 2.0 * c0 * rho0 * s)
    }

    pub fn rho_t(a: f64, r: f64, k: f64, k1: f64, k2: f64, c0: f64, rho0: f64) -> f64 {
        let p = rho(k, k1, c0, rho0, r);
        let l1 = (1.0 + (k2 * (a + 1.0)).powi(2) * (2.0 * k2 * r).exp()) * (k * r).exp() / (2.0 * p)
            + k * k2 * (a + 1.0) * ((k + k2) * r).exp()
            + 2.0 * k * (k * r).exp();
        let l2 = k * k2 * (a + 1.0) * (2.0 * (k * r).exp() + 1.0) * (k2 * r).exp();
        let l4 = ((k2 * (a + 2.0)).powi(2) * (2.0 * k2).exp() + 1.0) / (2.0 * p)
            + k1 * (1.0 + k2 * (a + 2.0) * k2.exp())
            + 1.0;
        1.0 / f64::max(2.0 * l1 + l2, 2.0 * l4)
    }

    pub fn big_r(rr: f64, k: f64, k1: f64, c0: f64, t: f64) -> Option<f64> {
        let top = (-3.0 * k * t).exp() - 2.0 * c0 * rr * t * t;
        (top > 0.0).then(|| rr * top / (1.0 + (k + k1) * t).powi(2))
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn formulas_match_the_transcription() {
    let mut rng = SplitMix64::new(4);
    for _ in 0..2000 {
        let (k, k1, k2, c0) = (rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
        let c = Constants::provided(k, k1, k2, c0, None).unwrap();
        let rho0 = rng.uniform(0.1, 2.0);
        let s = rng.uniform(0.0, 2.0);
        let x = rng.point_in_box(&[-2.0, -2.0], &[2.0, 2.0]);
        assert!(rel(rho_of_s(&c, rho0, s).unwrap(), oracle::rho(k, k1, c0, rho0, s)) < 1e-12);
        let got = rho_T_of(&x, s, &c, rho0).unwrap();
        assert!(rel(got, oracle::rho_t(norm(&x), s, k, k1, k2, c0, rho0)) < 1e-12);
        let rr = rng.uniform(0.1, 2.0);
        let t = rng.uniform(0.01, 2.0);
        match (R_of_T(&c, rr, t).unwrap(), oracle::big_r(rr, k, k1, c0, t)) {
            (Some(a), Some(b)) => assert!(rel(a, b) < 1e-12),
            (None, None) => {}
            other => panic!("gate mismatch {other:?}"),
        }
    }
}

#[test]
fn printed_spot_value() {
    let c = Constants::provided(1.0, 1.0, 0.0, 1.0, None).unwrap();
    let v = R_of_T(&c, 1.0, 0.1).unwrap().unwrap();
    assert!((v - 0.500568).abs() < 5e-7, "{v}");
}

#[test]
fn hypograph_of_solved_eikonal() {
    let sc = eikonal_scenario(1.0);
    let g = Grid::with_spacing(sc.lower.clone(), sc.upper.clone(), 0.02).unwrap();
    let sol = solve_min_time(&sc.model, &sc.target, &g, &SolveOptions::default()).unwrap();
    let mask = restrict_continuity_region(&sol.field, 10.0);
    let opts = HypoOptions { samples: 100, seed: 9, ..Default::default() };
    let recs =
        certify_hypograph_exterior_sphere(&sol.field, &mask, &sc.model, &sc.target, sc.model.constants(), 1.0, &opts)
            .unwrap();
    assert_eq!(recs.len(), 100);
    let pass = recs.iter().filter(|r| r.passed()).count();
    assert!(pass >= 95, "{pass}/100");
    for r in &recs {
        if let Some(l) = r.lambda {
            assert!(l >= -1e-8);
        }
    }
}

#[test]
fn attainable_ball_is_tight_on_a_fine_grid() {
    let sc = ball_origin_scenario();
    let t = 0.5;
    let h = t / 50.0;
    let g = Grid::with_spacing(sc.lower.clone(), sc.upper.clone(), h).unwrap();
    let field = ScalarField::from_fn(g, 10.0, sc.oracle.unwrap()).unwrap();
    let c = sc.model.constants().clone();
    let base = AttainableOptions { samples: 30, theta_samples: 0, ..Default::default() };
    let rep = certify_attainable_inner_ball(&sc.model, &field, t, &c, 1.0, &base).unwrap();
    let slack = rep.balls.iter().map(|b| b.slack).fold(0.0, f64::max) / t;
    for (scale, want) in [(1.0 - 2.0 * slack, 1.0), (1.0 + 2.0 * slack, 0.0)] {
        let opts = AttainableOptions { radius_scale: scale, ..base };
        let rep = certify_attainable_inner_ball(&sc.model, &field, t, &c, 1.0, &opts).unwrap();
        assert_eq!(rep.pass_fraction, want, "scale {scale}");
    }
}

#[test]
fn disk_boundary_is_close_to_the_circle() {
    let g = Grid::with_spacing(vec![-1.0, -1.0], vec![1.0, 1.0], 0.02).unwrap();
    let set = indicator_mask(&g, |x| norm(x) - 0.5);
    let nodes: Vec<Vec<f64>> = set.boundary().into_iter().map(|i| g.point(i)).collect();
    let circle: Vec<Vec<f64>> = (0..720)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 360.0;
            vec![0.5 * a.cos(), 0.5 * a.sin()]
        })
        .collect();
    assert!(hausdorff_distance(&nodes, &circle).unwrap() <= 0.02 * 2f64.sqrt());
    let rep = check_inner_ball(&set, 0.25, 0.1).unwrap();
    assert_eq!(rep.pass_fraction, 1.0);
    let sc = eikonal_scenario(1.0);
    let pts = target_boundary_points(&sc.target, &g);
    assert!(pts.iter().all(|p| (norm(p) - 1.0).abs() < 1e-9));
}

#[test]
fn example1_is_not_lipschitz_above_the_seam() {
    for l in [1.0, 5.0, 20.0] {
        let pairs: Vec<_> = (1..12)
            .map(|k| {
                let d = 0.05 / 2f64.powi(k);
                (vec![0.5, 0.0], vec![0.5, d])
            })
            .collect();
        let f = |x: &[f64]| example1_T(x[0], x[1]).unwrap();
        assert!(!test_lipschitz_sampling(&f, &pairs, l).unwrap().pass);
    }
    let f = |x: &[f64]| example1_T(x[0], x[1]).unwrap();
    let pairs = vec![(vec![0.2, -0.5], vec![0.3, -0.6]), (vec![0.0, -0.2], vec![-0.1, -0.9])];
    assert!(test_lipschitz_sampling(&f, &pairs, 1.0 + 1e-12).unwrap().pass);
}

fn points_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..40)
}

proptest! {
    #[test]
    fn smaller_balls_keep_passing(pts in points_strategy(), angle in 0.0f64..6.3, r1 in 0.01f64..2.0, f in 0.01f64..1.0, slack in 0.0f64..0.1) {
        let base = pts[0].clone();
        let normal = vec![angle.cos(), angle.sin()];
        let normal: Vec<f64> = normal.iter().map(|v| v / norm(&normal)).collect();
        let big = check_realized_by_ball(&pts, &base, &normal, r1, slack).unwrap();
        let small = check_realized_by_ball(&pts, &base, &normal, r1 * f, slack).unwrap();
        prop_assert!(small.sigma_residual <= big.sigma_residual + 1e-15);
        if big.pass { prop_assert!(small.pass); }
    }

    #[test]
    fn semiconcave_quadratics_pass(c in 0.0f64..3.0, a in 0.0f64..2.0, b in -1.0f64..1.0, tilt in -2.0f64..2.0) {
        // c|x|² minus a concave-compatible part: f − c|x|² is concave.
        let f = move |x: &[f64]| c * (x[0] * x[0] + x[1] * x[1]) - a * x[0] * x[0] - b * b * x[1] * x[1] + tilt * x[0];
        let centers: Vec<Vec<f64>> = (0..25).map(|k| vec![-0.8 + 0.4 * (k % 5) as f64, -0.8 + 0.4 * (k / 5) as f64]).collect();
        let steps = vec![vec![0.1, 0.0], vec![0.0, 0.1], vec![0.07, 0.07], vec![0.05, -0.15]];
        let rep = test_semiconcavity(&f, &centers, &|_| true, c, &steps, 1e-12).unwrap();
        prop_assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn r_of_t_never_exceeds_r(k in 0.0f64..3.0, k1 in 0.0f64..3.0, c0 in 0.0f64..3.0, rr in 0.01f64..5.0, t in 0.001f64..3.0) {
        let c = Constants::provided(k, k1, 0.0, c0, None).unwrap();
        if let Some(v) = R_of_T(&c, rr, t).unwrap() {
            prop_assert!(v > 0.0 && v <= rr);
        }
    }

    #[test]
    fn rho_t_decreases_in_r_and_norm(a in 0.0f64..3.0, r in 0.0f64..2.0, dr in 0.0f64..0.5, da in 0.0f64..0.5, k in 0.0f64..1.0, k2 in 0.0f64..1.0) {
        let c = Constants::provided(k, 0.5, k2, 0.2, None).unwrap();
        let v = rho_T_of(&[a, 0.0], r, &c, 1.0).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(rho_T_of(&[a, 0.0], r + dr, &c, 1.0).unwrap() <= v * (1.0 + 1e-12));
        prop_assert!(rho_T_of(&[a + da, 0.0], r, &c, 1.0).unwrap() <= v * (1.0 + 1e-12));
    }
}
