//! The embedded acceptance suite: each criterion exercises one pillar of
//! the crate against an independent oracle (closed forms, ruin ratios,
//! brute-force enumeration, DKW-banded Monte Carlo, frozen regression
//! constants) and reports a pass/fail verdict with the measured numbers.
//!
//! Criteria 1-9 are library-level and live here; the determinism/
//! cross-level criterion needs the command-line binary and is implemented
//! next to it.

use crate::analysis;
use crate::cdf::{build_table, eval_cdf, DeRhamModel, SQRT3};
use crate::dyadic::Dyadic;
use crate::empirics::{dkw_epsilon, ecdf, ks_against_exact};
use crate::error::Result;
use crate::mobius;
use crate::rng::sample_rng;
use crate::walk::{enumerate_exact, simulate_ranges};
use rand::Rng;

/// Parameter values exercised by the evaluator criteria: both singular
/// regimes, the boundary, and the absolutely continuous point.
pub const U_SET: [f64; 7] = [0.3, 0.7, 1.0, 1.5, SQRT3, 2.0, 3.0];

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(id: u8, name: &'static str, r: Result<(bool, String)>) -> CriterionOutcome {
    match r {
        Ok((passed, detail)) => CriterionOutcome {
            id,
            name,
            passed,
            detail,
        },
        Err(e) => CriterionOutcome {
            id,
            name,
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}

/// u = 1 closed form 2x/(1+x): matches the table at every dyadic of level
/// ≤ 12, satisfies the functional-equation pair identically, and reproduces
/// the ruin ratios P(R_n ≤ 2^n + k) = 2(k+1)/(2^n + k + 1) at levels 1-3.
pub fn criterion_01() -> CriterionOutcome {
    let run = || {
        let m = DeRhamModel::new(1.0)?;
        let g = |x: f64| 2.0 * x / (1.0 + x);

        let t = build_table(&m, 12)?;
        let mut max_dev = 0.0f64;
        for (j, v) in t.values.iter().enumerate() {
            max_dev = max_dev.max((v - g(j as f64 / 4096.0)).abs());
        }

        let mut max_res = 0.0f64;
        for j in 0..=4096u64 {
            let x = j as f64 / 4096.0;
            let r = if x <= 0.5 {
                g(x) - mobius::apply(&m.a0, g(2.0 * x))?
            } else {
                g(x) - mobius::apply(&m.a1, g(2.0 * x - 1.0))?
            };
            max_res = max_res.max(r.abs());
        }

        let mut max_ruin = 0.0f64;
        for n in 1..=3u32 {
            let t = build_table(&m, n)?;
            for (j, v) in t.values.iter().enumerate() {
                let want = 2.0 * j as f64 / ((1u64 << n) as f64 + j as f64);
                max_ruin = max_ruin.max((v - want).abs());
            }
        }

        let passed = max_dev <= 1e-12 && max_res <= 1e-12 && max_ruin <= 1e-12;
        Ok((
            passed,
            format!(
                "table vs 2x/(1+x) dev {max_dev:.2e}, functional-equation residual \
                 {max_res:.2e}, ruin-ratio dev {max_ruin:.2e} (gates 1e-12)"
            ),
        ))
    };
    outcome(1, "u = 1 closed form and ruin oracle", run())
}

/// Seed of the random-dyadic draw below, fixed so the criterion is a
/// deterministic regression.
const DYADIC_SEED: u64 = 20260814;

/// The three evaluation routes (doubling table, digit composition, raw
/// generator products) agree to 1e-12 at 1000 random dyadics of level ≤ 12
/// for every u in U_SET.
pub fn criterion_02() -> CriterionOutcome {
    let run = || {
        let mut worst = 0.0f64;
        for u in U_SET {
            let m = DeRhamModel::new(u)?;
            let t = build_table(&m, 12)?;
            let mut rng = sample_rng(DYADIC_SEED, 0);
            for _ in 0..1000 {
                let n = rng.random_range(1..=12u32);
                let k = rng.random_range(0..(1u64 << n));
                let x = Dyadic::new(k, n)?;
                let table_val = t.values[(x.numerator() << (12 - x.level())) as usize];
                let (lo, hi) = eval_cdf(&m, x.value(), 62)?;
                debug_assert_eq!(lo, hi, "dyadics evaluate exactly");
                let prod = crate::cdf::product_entries(&m, x.value(), x.level(), false)?;
                let via_prod = mobius::apply(&prod, 0.0)?;
                worst = worst
                    .max((table_val - lo).abs())
                    .max((table_val - via_prod).abs());
            }
        }
        Ok((
            worst <= 1e-12,
            format!("worst three-way deviation {worst:.2e} (gate 1e-12)"),
        ))
    };
    outcome(2, "evaluator equivalence on random dyadics", run())
}

/// The evaluated CDF satisfies its own functional equation to 1e-10 on a
/// uniform 10^4-point grid for every u in U_SET (grid points are exact f64
/// binary values, so almost all evaluations are width-0 exact).
pub fn criterion_03() -> CriterionOutcome {
    let run = || {
        let mid = |b: (f64, f64)| 0.5 * (b.0 + b.1);
        let mut max_res = 0.0f64;
        let mut max_width = 0.0f64;
        for u in U_SET {
            let m = DeRhamModel::new(u)?;
            for i in 0..=10_000u64 {
                let x = i as f64 / 1e4;
                let bx = eval_cdf(&m, x, 62)?;
                max_width = max_width.max(bx.1 - bx.0);
                let res = if x <= 0.5 {
                    mid(bx) - mobius::apply(&m.a0, mid(eval_cdf(&m, 2.0 * x, 62)?))?
                } else {
                    mid(bx) - mobius::apply(&m.a1, mid(eval_cdf(&m, 2.0 * x - 1.0, 62)?))?
                };
                max_res = max_res.max(res.abs());
            }
        }
        Ok((
            max_res <= 1e-10,
            format!(
                "max residual {max_res:.2e} (gate 1e-10), max bracket width {max_width:.2e}"
            ),
        ))
    };
    outcome(3, "functional-equation residual on a grid", run())
}

/// Truncated exact enumeration (60 pairs per hierarchy level) reproduces
/// the tables at N = 1, 2 within its own tail bound, and the level-1 value
/// matches the geometric closed form x_u/(1 - u²x_u²).
pub fn criterion_04() -> CriterionOutcome {
    let run = || {
        let mut detail = String::new();
        let mut passed = true;
        for u in [0.5, 1.0, 2.0] {
            let m = DeRhamModel::new(u)?;
            let mut worst = 0.0f64;
            let mut tails = 0.0f64;
            for n in [1u32, 2] {
                let (dp, tail) = enumerate_exact(u, n, 60)?;
                let t = build_table(&m, n)?;
                for (k, v) in dp.iter().enumerate() {
                    let dev = (v - t.values[k + 1]).abs();
                    passed &= dev <= tail + 1e-12;
                    worst = worst.max(dev);
                }
                tails = tails.max(tail);
            }
            let (g1, tail1) = enumerate_exact(u, 1, 60)?;
            let x = m.x_u;
            let closed = x / (1.0 - u * u * x * x);
            passed &= (g1[0] - closed).abs() <= tail1 + 1e-12;
            detail.push_str(&format!(
                "u={u}: dev {worst:.2e} (tail {tails:.2e}); "
            ));
        }
        Ok((passed, detail + "gates tail + 1e-12"))
    };
    outcome(4, "small-level enumeration oracle", run())
}

/// Monte Carlo histograms match the exact tables at coarse dyadic
/// boundaries within fixed DKW-style gates (seed 42, 2 workers).
pub fn criterion_05() -> CriterionOutcome {
    let run = || {
        let mut detail = String::new();
        let mut passed = true;
        let cases: [(f64, u32, u64, u32, f64); 3] = [
            (1.0, 10, 100_000, 6, 0.01),
            (0.5, 8, 100_000, 6, 0.01),
            (2.0, 6, 20_000, 6, 0.0125),
        ];
        for (u, n, count, grid, gate) in cases {
            let m = DeRhamModel::new(u)?;
            let h = simulate_ranges(u, n, count, 42, 2)?;
            let ks = ks_against_exact(&ecdf(&h)?, &m, grid)?;
            passed &= ks <= gate;
            let band = dkw_epsilon(count, 0.99)?;
            detail.push_str(&format!(
                "u={u} N={n}: ks {ks:.4} vs gate {gate} (dkw99 {band:.4}); "
            ));
        }
        Ok((passed, detail + "seed 42, workers 2"))
    };
    outcome(5, "Monte Carlo vs exact tables", run())
}

/// The u = √3 boundary: right-map iterates are exactly n/(n+1) for
/// n ≤ 100, the largest level-m cell measure obeys the 9/(m+1) decay for
/// m ≤ 14, and the four grid inequalities between the two maps hold at
/// 1000 points.
pub fn criterion_06() -> CriterionOutcome {
    let run = || {
        let m = DeRhamModel::new(SQRT3)?;
        let iterates = analysis::atom_iterates(&m, 100)?;
        let mut drift = 0.0f64;
        for (n, it) in iterates.iter().enumerate() {
            drift = drift.max((it - n as f64 / (n + 1) as f64).abs());
        }

        let mut decay_ok = true;
        for level in 1..=14u32 {
            decay_ok &= analysis::max_increment(SQRT3, level)? <= 9.0 / (level as f64 + 1.0);
        }

        let checks = analysis::boundary_map_inequalities(1000)?;
        let passed = drift <= 1e-12 && decay_ok && checks == [true; 4];
        Ok((
            passed,
            format!(
                "iterate drift {drift:.2e} (gate 1e-12), 9/(m+1) decay for m ≤ 14: {decay_ok}, \
                 grid inequalities {checks:?}"
            ),
        ))
    };
    outcome(6, "boundary behavior at u = sqrt(3)", run())
}

/// Atoms at u = 2: the fixed point z1, its iterate approximation at depth
/// 40, the mass at 1 against the finite-depth jump, and positivity plus
/// sub-unit total mass over all dyadics of level ≤ 6.
pub fn criterion_07() -> CriterionOutcome {
    let run = || {
        let m = DeRhamModel::new(2.0)?;
        let z1 = m.z1.expect("u = 2 > sqrt(3)");
        let fp_res = (mobius::apply(&m.a1, z1)? - z1).abs();

        let it40 = *analysis::atom_iterates(&m, 40)?.last().expect("nonempty");
        let conv = (it40 - z1).abs();

        let mass1 = analysis::atom_mass(2.0, &Dyadic::ONE)?.expect("atoms present");
        let mass_identity = (mass1 - (1.0 - z1)).abs();
        let jump40 = analysis::atom_jump_at_depth(2.0, &Dyadic::ONE, 40)?;
        let jump_gap = (jump40 - mass1).abs();

        let mut total = mass1;
        let mut all_positive = true;
        let mut count = 1u32;
        for n in 1..=6u32 {
            for k in (1..(1u64 << n)).step_by(2) {
                let mass = analysis::atom_mass(2.0, &Dyadic::new(k, n)?)?.expect("atoms");
                all_positive &= mass > 0.0;
                total += mass;
                count += 1;
            }
        }

        let passed = fp_res <= 1e-12
            && conv <= 1e-6
            && mass_identity <= 1e-12
            && jump_gap <= 1e-6
            && all_positive
            && total <= 1.0;
        Ok((
            passed,
            format!(
                "fixed-point residual {fp_res:.2e} (gate 1e-12); |iterate_40 - z1| = \
                 {conv:.7e} vs gate 1e-6 — the contraction rate at z1 is z1 = {z1:.4}, \
                 so depth 40 leaves a ~1.4e-4 gap and ~69 iterations would be needed; \
                 the depth-40 jump at x=1 misses the atom mass by the same {jump_gap:.7e}; \
                 mass(1) = 1 - z1 to {mass_identity:.1e}; {count} dyadic atoms of level \
                 ≤ 6 all positive, total {total:.4} ≤ 1"
            ),
        ))
    };
    outcome(7, "atoms at u = 2", run())
}

/// The absolute-continuity criterion: both transpose residuals vanish at
/// u = 1, stay above 1e-2 at u ∈ {0.5, 2}, and the classification matches
/// the case split over u ∈ {0, 0.5, 1, 1.6, √3, 2, 5}.
pub fn criterion_08() -> CriterionOutcome {
    let run = || {
        let (r0, r1) = analysis::singularity_criterion(1.0)?;
        let at_one = r0.abs().max(r1.abs());

        let mut min_off = f64::INFINITY;
        for u in [0.5, 2.0] {
            let (r0, r1) = analysis::singularity_criterion(u)?;
            min_off = min_off.min(r0.abs().min(r1.abs()));
        }

        use analysis::Classification::*;
        let cases = [
            (0.0, DeltaAtZero),
            (0.5, SingularContinuousRegime),
            (1.0, AbsolutelyContinuous),
            (1.6, SingularContinuousRegime),
            (SQRT3, BoundarySqrt3),
            (2.0, SingularWithAtoms),
            (5.0, SingularWithAtoms),
        ];
        let mut split_ok = true;
        for (u, want) in cases {
            split_ok &= analysis::classify(u)? == want;
        }

        let passed = at_one <= 1e-12 && min_off >= 1e-2 && split_ok;
        Ok((
            passed,
            format!(
                "residuals at u=1: {at_one:.2e} (gate 1e-12); min |residual| off 1: \
                 {min_off:.3} (gate 1e-2); case split over 7 values: {split_ok}"
            ),
        ))
    };
    outcome(8, "singularity criterion and classification", run())
}

/// Entropy dimension bounds on 0 < u < 1: ordered, inside (0,1), equal to
/// s(x_u)/ln 2 on the upper side, increasing toward 1 as u → 1⁻, and
/// explicitly not applicable for u ≥ 1.
pub fn criterion_09() -> CriterionOutcome {
    let run = || {
        let mut passed = true;
        let mut uppers = Vec::new();
        for u in [0.1, 0.5, 0.9] {
            let (up, lo) = analysis::dimension_bounds(u).expect("in range");
            passed &= 0.0 < lo && lo <= up && up < 1.0;
            let direct = analysis::entropy(mobius::x_param(u)) / std::f64::consts::LN_2;
            passed &= (up - direct).abs() <= 1e-15;
            uppers.push(up);
        }
        passed &= uppers[0] < uppers[1] && uppers[1] < uppers[2];
        for u in [1.0, 1.5, 2.0] {
            passed &= analysis::dimension_bounds(u).is_none();
        }
        Ok((
            passed,
            format!(
                "uppers at u = 0.1/0.5/0.9: {:.4}/{:.4}/{:.4}, increasing toward 1; \
                 not-applicable markers for u ≥ 1",
                uppers[0], uppers[1], uppers[2]
            ),
        ))
    };
    outcome(9, "entropy dimension bounds", run())
}

/// Criteria 1-9 in order (the determinism criterion ships with the binary).
pub fn library_criteria() -> Vec<CriterionOutcome> {
    vec![
        criterion_01(),
        criterion_02(),
        criterion_03(),
        criterion_04(),
        criterion_05(),
        criterion_06(),
        criterion_07(),
        criterion_08(),
        criterion_09(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    // The full criteria run from the dedicated acceptance target; here only
    // the cheap ones are smoke-tested so `cargo test -p` stays quick.

    #[test]
    fn cheap_criteria_pass() {
        for c in [
            criterion_01(),
            criterion_06(),
            criterion_08(),
            criterion_09(),
        ] {
            assert!(c.passed, "criterion {} failed: {}", c.id, c.detail);
        }
    }

    #[test]
    fn atom_criterion_reports_the_depth40_gap() {
        // the iterate-depth gate is unattainable: Φ₁^40(0) sits ~1.4e-4
        // away from z1 because the contraction rate is z1 ≈ 0.843. The
        // criterion must report this honestly rather than pass.
        let c = criterion_07();
        assert!(!c.passed);
        assert!(c.detail.contains("1e-6"));
        // every other sub-check inside it is sound
        assert!(c.detail.contains("total"));
    }
}
