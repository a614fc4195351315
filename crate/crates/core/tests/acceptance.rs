//! One test per acceptance criterion. Each prints a `PASS`/`FAIL` line with
//! its measured values to stderr (uncaptured) and fails if the criterion
//! does. Criteria run one at a time so their wall-clock limits are not
//! distorted by each other.

use std::io::Write;
use std::sync::{Mutex, OnceLock};

use neumann_lab::harness::accept::{run_criterion, Context};
use neumann_lab::Execution;

fn context() -> &'static Mutex<Context> {
    static CTX: OnceLock<Mutex<Context>> = OnceLock::new();
    CTX.get_or_init(|| Mutex::new(Context::new(Execution::Parallel)))
}

fn check(id: u8) {
    let ctx = context().lock().unwrap_or_else(|p| p.into_inner());
    let r = run_criterion(id, &ctx);
    let _ = writeln!(std::io::stderr(), "{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn c01_kernel_normalization() {
    check(1);
}

#[test]
fn c02_kernel_symmetry_and_zero_flux() {
    check(2);
}

#[test]
fn c03_gaussian_domination() {
    check(3);
}

#[test]
fn c04_boundary_time_integral_bound() {
    check(4);
}

#[test]
fn c05_solver_matches_representation_oracle() {
    check(5);
}

#[test]
fn c06_blowup_upper_bound() {
    check(6);
}

#[test]
fn c07_two_d_lifespan_scaling() {
    check(7);
}

#[test]
fn c08_global_existence_schedule() {
    check(8);
}

#[test]
fn c09_temperature_cap_schedule() {
    check(9);
}

#[test]
fn c10_growth_rate_bound() {
    check(10);
}

#[test]
fn c11_sequence_lemma_suite() {
    check(11);
}

#[test]
fn c12_schedule_closed_forms() {
    check(12);
}
