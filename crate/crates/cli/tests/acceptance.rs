//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use mintime::extremal::{shoot_extremal, rho_of_s, DIAGNOSTIC_RTOL};
use mintime::geometry::{
    certify_attainable_inner_ball, certify_hypograph_at, certify_hypograph_exterior_sphere, hausdorff_distance,
    indicator_mask, rho_T_of, target_boundary_points, test_lipschitz_sampling, test_semiconcavity, AttainableOptions,
    HypoOptions, R_of_T,
};
use mintime::linalg::{neg, norm, normalize};
use mintime::model::{check_c1_criterion, check_petrov, C1Verdict, Constants};
use mintime::scenarios::{ball_origin_scenario, eikonal_scenario, example1_T, example1_gamma1, example1_scenario};
use mintime::solver::restrict_continuity_region;
use mintime::target::FieldSublevel;
use mintime::{attainable_set, eval_hamiltonian, solve_min_time, Grid, ScalarField, SolveOptions, SplitMix64, TargetSet};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid(lower: &[f64], upper: &[f64], h: f64) -> Grid {
    Grid::with_spacing(lower.to_vec(), upper.to_vec(), h).unwrap()
}

fn eikonal_error(h: f64) -> (f64, f64) {
    let sc = eikonal_scenario(1.0);
    let g = grid(&sc.lower, &sc.upper, h);
    let t0 = Instant::now();
    let sol = solve_min_time(&sc.model, &sc.target, &g, &SolveOptions::default()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let mut err: f64 = 0.0;
    for i in 0..g.len() {
        let r = norm(&g.point(i));
        if (0.1..=0.9).contains(&r) {
            err = err.max((sol.field.get(i) - (1.0 - r)).abs());
        }
    }
    (err, secs)
}

fn eikonal_oracle() -> Verdict {
    let (e1, secs) = eikonal_error(0.01);
    let (e2, _) = eikonal_error(0.005);
    let ratio = e1 / e2;
    check(
        e1 <= 0.02 && secs < 60.0 && ratio >= 1.8,
        format!("max err {e1:.5} at h=0.01 in {secs:.2}s, {e2:.5} at h=0.005, ratio {ratio:.3}"),
    )
}

fn example1_reproduction() -> Verdict {
    let sc = example1_scenario();
    let g = grid(&sc.lower, &sc.upper, 0.005);
    let sol = solve_min_time(&sc.model, &sc.target, &g, &SolveOptions::default()).unwrap();
    let mut err: f64 = 0.0;
    let mut compared = 0;
    for i in 0..g.len() {
        let x = g.point(i);
        let seam = x[1].abs() < 0.05 && x[0] < 1.0;
        let boundary = sc.target.indicator(&x).abs() < 0.05;
        let inside = sc.target.contains(&x);
        if seam || boundary || inside {
            continue;
        }
        let Some(exact) = example1_T(x[0], x[1]) else { continue };
        compared += 1;
        err = err.max((sol.field.get(i) - exact).abs());
    }
    // Non-Lipschitz band: pairs straddling the seam at shrinking offsets.
    let f = |x: &[f64]| example1_T(x[0], x[1]).unwrap();
    let mut rng = SplitMix64::new(2);
    let mut pairs = Vec::new();
    for _ in 0..50 {
        let x1 = rng.uniform(-0.9, 0.9);
        for k in 1..=6 {
            let d = 0.005 / 2f64.powi(k);
            pairs.push((vec![x1, 0.0], vec![x1, d]));
        }
    }
    let mut lip_fail = true;
    let mut worst: f64 = f64::INFINITY;
    for l in [1.0, 2.0, 5.0, 10.0, 20.0] {
        let rep = test_lipschitz_sampling(&f, &pairs, l).unwrap();
        lip_fail &= !rep.pass;
        worst = worst.min(rep.max_ratio);
    }
    check(
        err <= 0.03 && compared > 10_000 && lip_fail,
        format!("max err {err:.5} over {compared} nodes; seam ratio {worst:.1} exceeds every L <= 20: {lip_fail}"),
    )
}

fn extremal_bounds() -> Verdict {
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut worst_lambda = f64::INFINITY;
    let mut shots = 0;
    let mut rng = SplitMix64::new(3);
    let eik = eikonal_scenario(1.0);
    for _ in 0..100 {
        let e = rng.unit_vector(2);
        let r = rng.uniform(0.0, 1.0);
        let arc = shoot_extremal(&eik.model, &e, &neg(&e), r, 1e-3).map_err(|e| e.to_string())?;
        let g = arc.gronwall(eik.model.constants().k());
        worst_excess = worst_excess.max(g.sandwich_excess).max(g.increment_excess);
        worst_lambda = worst_lambda.min(arc.lambda);
        shots += 1;
    }
    let ex = example1_scenario();
    while shots < 200 {
        let t = rng.uniform(-1.0, 1.8);
        let x = vec![example1_gamma1(t), t];
        let nu = normalize(&ex.target.normal(&x).unwrap()).unwrap();
        let r = rng.uniform(0.0, 1.0);
        let arc = shoot_extremal(&ex.model, &x, &nu, r, 1e-3).map_err(|e| e.to_string())?;
        let g = arc.gronwall(ex.model.constants().k());
        worst_excess = worst_excess.max(g.sandwich_excess).max(g.increment_excess);
        let lam = eval_hamiltonian(&ex.model, arc.end_state(), &neg(arc.end_adjoint())).unwrap();
        worst_lambda = worst_lambda.min(lam);
        shots += 1;
    }
    check(
        worst_excess <= DIAGNOSTIC_RTOL && worst_lambda >= -1e-8,
        format!("{shots} shots, worst relative Gronwall excess {worst_excess:.3e}, min lambda {worst_lambda:.3e}"),
    )
}

/// Independent transcription of the radius formulas.
fn oracle_rho(k: f64, k1: f64, c0: f64, rho0: f64, s: f64) -> f64 {
    let denom = 1.0 + 2.0 * c0 * rho0 * s;
    rho0 / denom * (-(k + 2.0 * k1) * s).exp()
}

fn oracle_rho_t(a: f64, r: f64, k: f64, k1: f64, k2: f64, c0: f64, rho0: f64) -> f64 {
    let rho = oracle_rho(k, k1, c0, rho0, r);
    let (ekr, ek2r) = ((k * r).exp(), (k2 * r).exp());
    let l1 = (1.0 + k2 * k2 * (a + 1.0) * (a + 1.0) * ek2r * ek2r) / (2.0 * rho) * ekr
        + k * k2 * (a + 1.0) * ekr * ek2r
        + 2.0 * k * ekr;
    let l2 = k * k2 * (a + 1.0) * (2.0 * ekr + 1.0) * ek2r;
    let l4 = (k2 * k2 * (a + 2.0) * (a + 2.0) * (2.0 * k2).exp() + 1.0) / (2.0 * rho)
        + k1 * (1.0 + k2 * (a + 2.0) * k2.exp())
        + 1.0;
    let m = if 2.0 * l1 + l2 > 2.0 * l4 { 2.0 * l1 + l2 } else { 2.0 * l4 };
    1.0 / m
}

fn oracle_r_of_t(rr: f64, k: f64, k1: f64, c0: f64, t: f64) -> Option<f64> {
    let e = (-3.0 * k * t).exp();
    if e > 2.0 * c0 * rr * t * t {
        let d = 1.0 + k * t + k1 * t;
        Some(rr * (e - 2.0 * c0 * rr * t * t) / (d * d))
    } else {
        None
    }
}

fn formula_evaluators() -> Verdict {
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let mut rng = SplitMix64::new(4);
    let mut worst: f64 = 0.0;
    let mut gate_mismatch = 0;
    for _ in 0..10_000 {
        let (k, k1, k2, c0) = (rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
        let c = Constants::provided(k, k1, k2, c0, None).unwrap();
        let rho0 = rng.uniform(0.05, 3.0);
        let s = rng.uniform(0.0, 3.0);
        let x = rng.point_in_box(&[-3.0, -3.0], &[3.0, 3.0]);
        worst = worst.max(rel(rho_of_s(&c, rho0, s).unwrap(), oracle_rho(k, k1, c0, rho0, s)));
        worst = worst.max(rel(rho_T_of(&x, s, &c, rho0).unwrap(), oracle_rho_t(norm(&x), s, k, k1, k2, c0, rho0)));
        let (rr, t) = (rng.uniform(0.05, 3.0), rng.uniform(0.01, 3.0));
        match (R_of_T(&c, rr, t).unwrap(), oracle_r_of_t(rr, k, k1, c0, t)) {
            (Some(a), Some(b)) => worst = worst.max(rel(a, b)),
            (None, None) => {}
            _ => gate_mismatch += 1,
        }
    }
    let spot = R_of_T(&Constants::provided(1.0, 1.0, 0.0, 1.0, None).unwrap(), 1.0, 0.1).unwrap().unwrap();
    check(
        worst <= 1e-12 && gate_mismatch == 0 && (spot - 0.500568).abs() < 5e-7,
        format!("worst relative deviation {worst:.2e} over 10^4 points, gate mismatches {gate_mismatch}, R(0.1) = {spot:.6}"),
    )
}

fn hypograph_certification() -> Verdict {
    let h = 0.01;
    let opts = HypoOptions::default();
    let sc = eikonal_scenario(1.0);
    let g = grid(&sc.lower, &sc.upper, h);
    let field = solve_min_time(&sc.model, &sc.target, &g, &SolveOptions::default()).unwrap().field;
    let mask = restrict_continuity_region(&field, 10.0);
    let c = *sc.model.constants();
    let recs = certify_hypograph_exterior_sphere(&field, &mask, &sc.model, &sc.target, &c, 1.0, &opts).unwrap();
    let eik = recs.iter().filter(|r| r.passed()).count() as f64 / recs.len() as f64;

    let ex = example1_scenario();
    let g = grid(&ex.lower, &ex.upper, h);
    let field = ScalarField::from_fn(g.clone(), 10.0, |x| example1_T(x[0], x[1])).unwrap();
    let mask = restrict_continuity_region(&field, 10.0);
    let c = *ex.model.constants();
    let recs = certify_hypograph_exterior_sphere(&field, &mask, &ex.model, &ex.target, &c, 1.0, &opts).unwrap();
    let ex1 = recs.iter().filter(|r| r.passed()).count() as f64 / recs.len() as f64;
    let seam: Vec<usize> = mask
        .indices()
        .filter(|&i| {
            let x = g.point(i);
            x[1] > 0.0 && x[1] <= 0.05
        })
        .collect();
    let recs = certify_hypograph_at(&field, &mask, &ex.model, &ex.target, &c, 1.0, &opts, &seam).unwrap();
    let near = recs.iter().filter(|r| r.passed()).count() as f64 / recs.len().max(1) as f64;
    check(
        recs.len() >= 100 && eik >= 0.95 && ex1 >= 0.95 && near >= 0.95,
        format!("eikonal {eik:.3} of 500, example1 {ex1:.3} of 500, {near:.3} of {} masked nodes with 0 < x2 <= 0.05", recs.len()),
    )
}

fn attainable_inner_ball() -> Verdict {
    let sc = ball_origin_scenario();
    let (h, t) = (0.005, 0.5);
    let g = grid(&sc.lower, &sc.upper, h);
    let field = attainable_set(&sc.model, &sc.target, &g, &SolveOptions::default()).unwrap().field;
    let set = indicator_mask(&g, |x| field.interpolate(x) - t);
    let boundary: Vec<Vec<f64>> = set.boundary().into_iter().map(|i| g.point(i)).collect();
    let circle: Vec<Vec<f64>> = (0..3600)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / 1800.0;
            vec![t * a.cos(), t * a.sin()]
        })
        .collect();
    let haus = hausdorff_distance(&boundary, &circle).unwrap();
    let c = *sc.model.constants();
    let big_r = c.r().unwrap();
    let rep = certify_attainable_inner_ball(&sc.model, &field, t, &c, big_r, &AttainableOptions::default()).unwrap();
    let loose = AttainableOptions { radius_scale: 1.1, theta_samples: 0, ..Default::default() };
    let tight = certify_attainable_inner_ball(&sc.model, &field, t, &c, big_r, &loose).unwrap();
    let worst_margin = rep.transports.iter().map(|x| x.min_margin).fold(f64::INFINITY, f64::min);
    check(
        haus <= g.cell_diameter()
            && rep.balls.len() == 200
            && rep.pass_fraction == 1.0
            && tight.pass_fraction == 0.0
            && rep.transports.len() == 100
            && rep.transport_pass_fraction == 1.0,
        format!(
            "Hausdorff {haus:.5} (cell {:.5}); r0T ball {} of {}, 1.1 r0T ball {}; theta checks {} of {}, min margin {worst_margin:.3e}",
            g.cell_diameter(),
            rep.balls.iter().filter(|b| b.pass).count(),
            rep.balls.len(),
            tight.pass_fraction,
            rep.transports.iter().filter(|x| x.pass).count(),
            rep.transports.len()
        ),
    )
}

fn target_dilation() -> Verdict {
    let sc = eikonal_scenario(1.0);
    let (h, t) = (0.01, 0.2);
    let g = grid(&sc.lower, &sc.upper, h);
    let opts = SolveOptions::default();
    let base = solve_min_time(&sc.model, &sc.target, &g, &opts).unwrap().field;
    let reach = attainable_set(&sc.model, &sc.target, &g, &opts).unwrap().field;
    let dilated = TargetSet::new(Arc::new(FieldSublevel { field: Arc::new(reach), level: t }), None).unwrap();
    let shifted = solve_min_time(&sc.model, &dilated, &g, &opts).unwrap().field;
    let mask = restrict_continuity_region(&base, 10.0);
    let dev = mask.indices().map(|i| (shifted.get(i) - (base.get(i) - t).max(0.0)).abs()).fold(0.0, f64::max);
    check(dev <= 2.0 * h && mask.count() > 0, format!("max deviation {dev:.5} over {} masked nodes (bound {})", mask.count(), 2.0 * h))
}

fn c1_detector() -> Verdict {
    let ex = example1_scenario();
    let (ok1, d1) = match check_c1_criterion(&ex.model, &[1.0, 1.0], &[0.0, 1.0], None).unwrap() {
        C1Verdict::Evaluated { holds, left, right_hull, .. } => {
            let ok = !holds && left.iter().all(|v| v.abs() < 1e-6) && right_hull[1].hi >= 0.5;
            (ok, format!("holds={holds}, left {left:?}, right x2-hull [{}, {}]", right_hull[1].lo, right_hull[1].hi))
        }
        v => (false, format!("unexpected {v:?}")),
    };
    let ball = eikonal_scenario(1.0).model;
    let mut rng = SplitMix64::new(8);
    let mut bad = 0;
    for _ in 0..100 {
        let x = rng.point_in_box(&[-2.0, -2.0], &[2.0, 2.0]);
        let p = rng.unit_vector(2);
        if check_c1_criterion(&ball, &x, &p, None).unwrap().holds() == Some(false) {
            bad += 1;
        }
    }
    check(ok1 && bad == 0, format!("example1: {d1}; ball: {bad} of 100 points flagged"))
}

fn semiconcavity_suite() -> Verdict {
    let mut rng = SplitMix64::new(9);
    let centers: Vec<Vec<f64>> = (0..2000).map(|_| rng.point_in_box(&[-0.9, -0.9], &[0.9, 0.9])).collect();
    let steps: Vec<Vec<f64>> = (0..200).map(|_| {
        let s = rng.uniform(1e-4, 0.05);
        rng.unit_vector(2).iter().map(|v| v * s).collect()
    }).collect();
    let cone = |x: &[f64]| 1.0 - norm(x);
    let annulus = |x: &[f64]| (0.1..=0.9).contains(&norm(x));
    let concave = test_semiconcavity(&cone, &centers, &annulus, 0.0, &steps, 1e-12).unwrap();
    let kink = |x: &[f64]| norm(x);
    let at_zero = test_semiconcavity(&kink, &[vec![0.0, 0.0]], &|_| true, 0.0, &steps, 1e-12).unwrap();

    let eik = eikonal_scenario(1.0);
    let g = grid(&eik.lower, &eik.upper, 0.01);
    let ring = target_boundary_points(&eik.target, &g);
    let mu_eik = check_petrov(&eik.model, &eik.target, &ring).unwrap().mu_min;
    let ex = example1_scenario();
    let g = grid(&ex.lower, &ex.upper, 0.005);
    let near: Vec<Vec<f64>> = target_boundary_points(&ex.target, &g)
        .into_iter()
        .filter(|x| x[1] < 0.01 && (x[0] - 1.0).abs() < 0.2 && x[1].abs() < 0.2)
        .collect();
    let mu_ex = check_petrov(&ex.model, &ex.target, &near).unwrap().mu_min;
    check(
        concave.pass && !at_zero.pass && (mu_eik - 1.0).abs() < 1e-6 && mu_ex < 0.1,
        format!(
            "1-|x|: max excess {:.2e} over {} triples; |x| at 0: excess {:.3e}; petrov mu_min {mu_eik:.6} (eikonal), {mu_ex:.4} (example1, {} samples)",
            concave.max_excess,
            concave.tested,
            at_zero.max_excess,
            near.len()
        ),
    )
}

const ARTIFACT_RUNS: &[&[&str]] = &[
    &["solve", "--scenario", "eikonal", "--h", "0.01"],
    &["shoot", "--scenario", "example1", "--point", "1,-0.5", "--normal", "-1,0", "--r", "0.5"],
    &["verify", "hypo", "--scenario", "eikonal", "--h", "0.01"],
    &["verify", "semiconcavity", "--scenario", "eikonal", "--h", "0.01"],
    &["verify", "petrov", "--scenario", "example1", "--h", "0.01"],
    &["verify", "attainable", "--scenario", "ball-origin", "--h", "0.01", "--T", "0.5"],
    &["solve", "--scenario", "example1", "--h", "0.01"],
    &["report"],
];

fn run_suite(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    for args in ARTIFACT_RUNS {
        let st = Command::new(env!("CARGO_BIN_EXE_mintime"))
            .args(*args)
            .args(["--seed", "7"])
            .env("MINTIME_OUT", dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !st.status.success() {
            return Err(format!("{args:?} exited with {:?}: {}", st.status.code(), String::from_utf8_lossy(&st.stderr)));
        }
        // Artifacts of later steps overwrite shared names, so snapshot now.
        let snap = std::fs::read_dir(dir).map_err(|e| e.to_string())?;
        for entry in snap {
            let e = entry.map_err(|e| e.to_string())?;
            let name = e.file_name().to_string_lossy().into_owned();
            std::fs::copy(e.path(), dir.join("..").join(format!("{}-{}", dir.file_name().unwrap().to_string_lossy(), name)))
                .map_err(|e| e.to_string())?;
        }
    }
    let parent = dir.parent().unwrap();
    let prefix = format!("{}-", dir.file_name().unwrap().to_string_lossy());
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(parent)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let n = e.file_name().to_string_lossy().into_owned();
            n.strip_prefix(&prefix).map(|s| (s.to_string(), std::fs::read(e.path()).unwrap()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let first = run_suite(&a)?;
    let second = run_suite(&b)?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    let same = first == second;
    check(
        same && names.len() >= 8,
        format!("{} artifacts ({}) byte-identical across two runs: {same}", names.len(), names.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("eikonal oracle", eikonal_oracle),
        ("example 1 reproduction", example1_reproduction),
        ("extremal bounds", extremal_bounds),
        ("formula evaluators", formula_evaluators),
        ("hypograph exterior sphere", hypograph_certification),
        ("attainable inner ball", attainable_inner_ball),
        ("target dilation", target_dilation),
        ("C1 criterion detector", c1_detector),
        ("semiconcavity and Petrov", semiconcavity_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match v {
            Ok(d) => println!("PASS criterion {:2} {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {:2} {name}: {d} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
