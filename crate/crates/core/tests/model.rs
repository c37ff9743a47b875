use mintime::linalg::normalize;
use mintime::model::{check_c1_criterion, check_petrov, C1Verdict};
use mintime::scenarios::{eikonal_scenario, example1_gamma1, example1_model, example1_target};
use mintime::SplitMix64;

#[test]
fn c1_criterion_fails_on_the_hinge() {
    let m = example1_model();
    match check_c1_criterion(&m, &[1.0, 1.0], &[0.0, 1.0], None).unwrap() {
        C1Verdict::Evaluated { holds, left, right_hull, .. } => {
            assert!(!holds);
            assert!(left.iter().all(|v| v.abs() < 1e-6), "{left:?}");
            assert!(right_hull[1].hi >= 0.5, "{right_hull:?}");
        }
        v => panic!("expected an evaluated verdict, got {v:?}"),
    }
}

#[test]
fn c1_criterion_on_the_ball() {
    let sc = eikonal_scenario(1.0);
    let mut rng = SplitMix64::new(21);
    for _ in 0..100 {
        let x = rng.point_in_box(&[-2.0, -2.0], &[2.0, 2.0]);
        let p = rng.unit_vector(2);
        let v = check_c1_criterion(&sc.model, &x, &p, None).unwrap();
        assert!(v.holds().unwrap_or(true));
    }
}

#[test]
fn petrov_margins() {
    let sc = eikonal_scenario(1.0);
    let circle: Vec<Vec<f64>> = (0..64)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 32.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let rep = check_petrov(&sc.model, &sc.target, &circle).unwrap();
    assert!((rep.mu_min - 1.0).abs() < 1e-9);

    let m = example1_model();
    let t = example1_target();
    let near: Vec<Vec<f64>> =
        (1..8).flat_map(|k| [-0.1f64.powi(k), 0.1f64.powi(k)]).map(|s| vec![example1_gamma1(s), s]).collect();
    let rep = check_petrov(&m, &t, &near).unwrap();
    assert!(rep.mu_min < 0.1, "{}", rep.mu_min);
    assert!(rep.worst_point[1] > 0.0 && rep.worst_point[1] < 1e-3);
    assert!(near.iter().all(|x| t.normal(x).and_then(|n| normalize(&n)).is_some()));
}
