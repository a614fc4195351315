//! Library-level end-to-end properties: config files, determinism across
//! execution modes, and the schedule → solver provenance chain.

use neumann_lab::geometry::Domain;
use neumann_lab::harness::{self, Scenario, BUILTIN_SCENARIOS};
use neumann_lab::kernel::{calibrate_bti_constant, KernelEvaluator, SamplingPlan};
use neumann_lab::seqlab::{builtin_suite, running_min_j_lambda};
use neumann_lab::Execution;

#[test]
fn builtin_scenarios_round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, _) in BUILTIN_SCENARIOS {
        let s = harness::builtin(name).unwrap();
        let path = tmp.path().join(format!("{name}.cfg"));
        std::fs::write(&path, s.to_text()).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), s);
        assert_eq!(harness::resolve_scenario(path.to_str().unwrap()).unwrap(), s);
    }
}

#[test]
fn calibration_is_identical_in_both_modes() {
    let d = Domain::unit_square();
    let e = KernelEvaluator::new(d).unwrap();
    let p = SamplingPlan::standard(&d);
    let a = calibrate_bti_constant(&e, 0.75, &p, Execution::Sequential).unwrap();
    let b = calibrate_bti_constant(&e, 0.75, &p, Execution::Parallel).unwrap();
    assert_eq!(a.c_hat.to_bits(), b.c_hat.to_bits());
    assert_eq!(a.argmax, b.argmax);
}

#[test]
fn sequence_traces_are_identical_in_both_modes() {
    for spec in builtin_suite(2.0) {
        let a = running_min_j_lambda(&spec, 40_000, Execution::Sequential).unwrap();
        let b = running_min_j_lambda(&spec, 40_000, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn capped_run_carries_its_constants_and_stays_below_the_cap() {
    let s = harness::builtin("cap_B5")
        .unwrap()
        .with_override("solver.resolution", "16")
        .unwrap();
    let (r, prep) = harness::run_scenario(&s, Execution::Parallel).unwrap();
    let c = r.constants.as_ref().unwrap();
    assert_eq!(Some(c), prep.constants.as_ref());
    assert_eq!(c.c_hat, prep.calibration.as_ref().unwrap().c_hat);
    assert!(r.max_m() <= c.b.unwrap());
    let tmp = tempfile::tempdir().unwrap();
    harness::write_run(tmp.path(), &s, &r).unwrap();
    let back: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report")).unwrap()).unwrap();
    assert_eq!(back["constants"]["C_star"].as_f64(), Some(c.c_star));
}
