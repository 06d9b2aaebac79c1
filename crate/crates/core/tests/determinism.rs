//! Seeded operations give identical results run to run.

use milnor_planner::milnor::{sample_fiber, sample_link};
use milnor_planner::verify::{continuity_all, run_contract_suite, GoalConstraint, SuiteConfig};
use milnor_planner::{build_planner, pullback_planner, rr_arm_workmap, Germ, LiftingOracle};

#[test]
fn sphere_reports_are_byte_identical() {
    let p = build_planner(3, 0.05).unwrap();
    let cfg = SuiteConfig::new(5000, 9);
    let mut a = run_contract_suite(&p, &cfg);
    let mut b = run_contract_suite(&p, &cfg);
    a.continuity = continuity_all(&p, 20, 9).unwrap();
    b.continuity = continuity_all(&p, 20, 9).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = run_contract_suite(&p, &SuiteConfig::new(5000, 10));
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn lift_failure_reports_are_reproducible() {
    let p = pullback_planner(rr_arm_workmap(), build_planner(2, 0.05).unwrap(), LiftingOracle::numeric()).unwrap();
    let cfg = SuiteConfig::new(50, 4).with_goal(GoalConstraint::NearPole { distance: 1e-3 });
    let a = run_contract_suite(&p, &cfg);
    assert_eq!(a.lift_failures, 50);
    assert_eq!(a.to_json(), run_contract_suite(&p, &cfg).to_json());
}

#[test]
fn arm_succeeds_away_from_poles_for_several_seeds() {
    let p = pullback_planner(rr_arm_workmap(), build_planner(2, 0.05).unwrap(), LiftingOracle::numeric()).unwrap();
    for seed in 100..104 {
        let cfg = SuiteConfig::new(250, seed).with_goal(GoalConstraint::PoleClearance { distance: 0.1 });
        let r = run_contract_suite(&p, &cfg);
        assert!(r.passed(), "seed {seed}: {:?}", r.failures.first());
    }
}

#[test]
fn samplers_are_seeded() {
    let g = Germ::brieskorn(2, 3).unwrap();
    assert_eq!(sample_fiber(&g, 0.3, 400, 2).unwrap(), sample_fiber(&g, 0.3, 400, 2).unwrap());
    assert_eq!(sample_link(&g, 200, 2).unwrap(), sample_link(&g, 200, 2).unwrap());
}
