//! The acceptance gate: one test per criterion, each printing a single
//! pass/fail line (run with --nocapture to see them on success). Criterion
//! numbering and tolerances are fixed; a red line here is a contract
//! violation, not a flaky test.

use derham_core::selftest::{self, CriterionOutcome};
use std::process::Command;

fn report(c: &CriterionOutcome) {
    println!(
        "criterion {:>2} [{}] {} — {}",
        c.id,
        if c.passed { "pass" } else { "FAIL" },
        c.name,
        c.detail
    );
    assert!(c.passed, "criterion {} ({}) failed: {}", c.id, c.name, c.detail);
}

#[test]
fn criterion_01_closed_form_at_u1() {
    report(&selftest::criterion_01());
}

#[test]
fn criterion_02_evaluator_equivalence() {
    report(&selftest::criterion_02());
}

#[test]
fn criterion_03_functional_equation_residual() {
    report(&selftest::criterion_03());
}

#[test]
fn criterion_04_path_enumeration_oracle() {
    report(&selftest::criterion_04());
}

#[test]
fn criterion_05_monte_carlo_vs_exact() {
    report(&selftest::criterion_05());
}

#[test]
fn criterion_06_boundary_parameter() {
    report(&selftest::criterion_06());
}

#[test]
fn criterion_07_atoms_at_u2() {
    report(&selftest::criterion_07());
}

#[test]
fn criterion_08_singularity_criterion() {
    report(&selftest::criterion_08());
}

#[test]
fn criterion_09_dimension_bounds() {
    report(&selftest::criterion_09());
}

/// Criterion 10 at two layers: the in-process check (render determinism,
/// worker invariance, cross-level DKW gate) plus a true process-level byte
/// comparison of the installed binary's stdout.
#[test]
fn criterion_10_determinism_and_cross_level() {
    let bin = env!("CARGO_BIN_EXE_derham-range");
    let run = || {
        Command::new(bin)
            .args([
                "simulate",
                "--u",
                "0.7",
                "--level",
                "6",
                "--samples",
                "2000",
                "--seed",
                "11",
                "--workers",
                "2",
                "--no-timestamp",
            ])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    assert!(a.status.success() && b.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout, "process-level simulate bytes differ");

    report(&derham_range::criterion_10());
}
