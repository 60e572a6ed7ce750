use rgg_core::distance::{a3_check, check_ball_inclusions, check_ge_vs_manifold, check_sandwich_sp_ge, PairPlan};
use rgg_core::{AssumptionParams, EpsilonGraph, Error, ManifoldModel, PointCloud};

fn circle() -> ManifoldModel {
    ManifoldModel::circle(1.0).unwrap()
}

fn params(lambda: f64) -> AssumptionParams {
    AssumptionParams { lambda1: lambda, lambda2: lambda, ..AssumptionParams::reference(1) }
}

#[test]
fn sandwich_on_collinear_points() {
    let pts = PointCloud::from_rows(&[vec![0.0], vec![0.9], vec![1.8]]).unwrap();
    let g = EpsilonGraph::build(pts, 1.0).unwrap();
    let rep = check_sandwich_sp_ge(&g, &PairPlan::Exhaustive).unwrap();
    // 3 off-diagonal pairs plus 3 diagonal pairs
    assert_eq!(rep.pairs_checked, 6);
    assert!(rep.verdict.passed());
    assert!(rep.violations.is_empty());
}

#[test]
fn sandwich_needs_a_connected_graph() {
    let pts = PointCloud::from_rows(&[vec![0.0], vec![3.0]]).unwrap();
    let g = EpsilonGraph::build(pts, 1.0).unwrap();
    assert!(matches!(check_sandwich_sp_ge(&g, &PairPlan::Exhaustive), Err(Error::Disconnected { .. })));
}

#[test]
fn sandwich_holds_on_manifold_samples() {
    for seed in 0..10 {
        for (m, eps) in [(circle(), 0.1), (ManifoldModel::sphere2(1.0).unwrap(), 0.5)] {
            let g = EpsilonGraph::build(m.sample(300, seed), eps).unwrap();
            if g.graph().component_count() > 1 {
                continue;
            }
            let rep = check_sandwich_sp_ge(&g, &PairPlan::Exhaustive).unwrap();
            assert!(rep.verdict.passed(), "seed {seed}");
            assert!(rep.max_slack <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn sampled_plan_is_deterministic() {
    let plan = PairPlan::for_size(1000, 4);
    assert_eq!(plan, PairPlan::Sampled { seed: 4, sources: 100, targets: 100 });
    assert_eq!(plan.groups(1000), plan.groups(1000));
    assert_eq!(PairPlan::for_size(600, 4), PairPlan::Exhaustive);
}

#[test]
fn undersampled_run_is_flagged() {
    let m = circle();
    let a3 = a3_check(&m, 10, 0.2, &AssumptionParams::reference(1)).unwrap();
    assert!(a3.epsilon_ok);
    assert!(!a3.n_ok);
    assert!(!a3.passed());
    // the threshold follows -ln(p1 u) / u with u = mu(B(eps lambda2 / 16))
    let u = 0.2 / 3.0 / 16.0 / std::f64::consts::PI;
    assert!((a3.u - u).abs() < 1e-15);
    assert!((a3.n_threshold - (-(0.1 * u).ln() / u)).abs() < 1e-9);
    let big = a3_check(&m, 10, 3.0, &AssumptionParams::reference(1)).unwrap();
    assert!(!big.epsilon_ok);
}

#[test]
fn ge_vs_manifold_monte_carlo() {
    let m = circle();
    let p = params(0.3);
    let mut clean = 0;
    for seed in 0..50 {
        let g = EpsilonGraph::build(m.sample(500, seed), 0.2).unwrap();
        if g.graph().component_count() > 1 {
            continue;
        }
        let rep = check_ge_vs_manifold(&g, &m, &p, &PairPlan::Exhaustive).unwrap();
        if rep.verdict.passed() {
            clean += 1;
            let inc = check_ball_inclusions(&g, &m, &p, &[1.0, 2.0, 4.0, 8.0], &[0.1, 0.2, 0.4, 0.8], &[0, 100, 250, 499]).unwrap();
            assert!(inc.verdict.passed(), "seed {seed}: inclusions fail although distances pass");
        }
    }
    assert!(clean >= 45, "{clean}/50");
}

#[test]
fn inclusions_are_trivial_for_tiny_and_huge_radii() {
    let m = circle();
    let g = EpsilonGraph::build(m.sample(200, 1), 0.2).unwrap();
    let p = params(0.3);
    let rep = check_ball_inclusions(&g, &m, &p, &[0.5, 1e6], &[1e-9, 10.0], &[0, 50]).unwrap();
    assert!(rep.verdict.passed());
}

#[test]
fn larger_epsilon_never_increases_distances() {
    let m = circle();
    let pts = m.sample(300, 2);
    let g1 = EpsilonGraph::build(pts.clone(), 0.1).unwrap();
    let g2 = EpsilonGraph::build(pts, 0.15).unwrap();
    for s in [0, 77, 299] {
        let (h1, h2) = (g1.graph().sp_distances_from(s), g2.graph().sp_distances_from(s));
        let (e1, e2) = (g1.euclidean_distances_from(s), g2.euclidean_distances_from(s));
        for t in 0..300 {
            assert!(h2[t] <= h1[t]);
            assert!(e2[t] <= e1[t] + 1e-12);
        }
    }
}
