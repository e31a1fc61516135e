//! The limit CDF f_u and its exact evaluators.
//!
//! f_u is the unique increasing solution of the self-similarity pair
//!
//! ```text
//! f(x) = Φ(A_{u,0}; f(2x))       for x in [0, 1/2]
//! f(x) = Φ(A_{u,1}; f(2x - 1))   for x in [1/2, 1]
//! ```
//!
//! with f(0) = 0, f(1) = 1. Three equivalent evaluation routes are kept and
//! cross-checked: a doubling pass filling the full dyadic grid of a level, a
//! per-point digit composition (right-to-left, every intermediate stays in
//! [0,1]), and raw matrix products of the generators.

use crate::dyadic;
use crate::error::{Error, Result};
use crate::mobius::{self, Matrix2};

/// Precomputed data of the parameter u: x_u, the generator pair, the ratio
/// constant γ_u = 1/Φ(A_{u,0}; 1), and (for u > √3) the attracting fixed
/// point z1 of Φ(A_{u,1}; ·) in (0,1), the engine of the atoms.
#[derive(Clone, Copy, Debug)]
pub struct DeRhamModel {
    pub u: f64,
    pub x_u: f64,
    pub a0: Matrix2,
    pub a1: Matrix2,
    pub gamma_u: f64,
    pub z1: Option<f64>,
}

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

impl DeRhamModel {
    pub fn new(u: f64) -> Result<DeRhamModel> {
        let (a0, a1) = mobius::generators(u)?;
        let x_u = mobius::x_param(u);
        let w = u * u * x_u * x_u;
        let gamma_u = (1.0 - w) / x_u;
        let z1 = if u > SQRT3 {
            Some(1.0 / (u * u * x_u))
        } else {
            None
        };
        Ok(DeRhamModel {
            u,
            x_u,
            a0,
            a1,
            gamma_u,
            z1,
        })
    }

    fn map(&self, bit: u8) -> &Matrix2 {
        if bit == 0 {
            &self.a0
        } else {
            &self.a1
        }
    }

    /// Right-to-left composition Φ(A_{X_1}; Φ(A_{X_2}; ... Φ(A_{X_m}; z0))).
    /// Stable: every intermediate value stays inside [0,1].
    pub(crate) fn compose_digits(&self, bits: &[u8], z0: f64) -> Result<f64> {
        let mut z = z0;
        for bit in bits.iter().rev() {
            z = mobius::apply(self.map(*bit), z)?;
        }
        Ok(z)
    }
}

/// Exact values of f_u on the full dyadic grid of one level:
/// values[j] = f_u(j/2^n).
#[derive(Clone, Debug)]
pub struct CdfTable {
    pub level: u32,
    pub values: Vec<f64>,
}

pub const MAX_TABLE_LEVEL: u32 = 30;

/// Fills level n by n doubling passes: level m+1 is Φ(A0; ·) of level m on
/// the left half and Φ(A1; ·) on the right half; the two halves agree at the
/// midpoint by the join identity Φ(A0; 1) = Φ(A1; 0). The endpoints are the
/// definitional values 0 and 1.
pub fn build_table(model: &DeRhamModel, n: u32) -> Result<CdfTable> {
    guard_table_level(n)?;
    let mut values = vec![0.0, 1.0];
    for _ in 0..n {
        let half = values.len() - 1;
        let mut next = Vec::with_capacity(2 * half + 1);
        for v in &values[..half] {
            next.push(mobius::apply(&model.a0, *v)?);
        }
        for v in &values[..half] {
            next.push(mobius::apply(&model.a1, *v)?);
        }
        next.push(1.0);
        debug_assert_eq!(next[0], 0.0);
        values = next;
    }
    Ok(CdfTable { level: n, values })
}

/// The u = 0 special case: the walk is deterministic, the measure is the
/// point mass at 0, and the grid values are 0 at the origin and 1 elsewhere.
pub fn delta0_table(n: u32) -> Result<CdfTable> {
    guard_table_level(n)?;
    let size = (1usize << n) + 1;
    let mut values = vec![1.0; size];
    values[0] = 0.0;
    Ok(CdfTable { level: n, values })
}

fn guard_table_level(n: u32) -> Result<()> {
    if n > MAX_TABLE_LEVEL {
        return Err(Error::SizeGuard {
            what: "table level",
            got: n as u64,
            limit: MAX_TABLE_LEVEL as u64,
        });
    }
    Ok(())
}

/// A rigorous bracket [f_u(ζ_m(x)), f_u(ζ_m(x) + 2^{-m})] ∋ f_u(x) from the
/// first m ≤ max_depth digits of x.
///
/// When the binary expansion of x (as the nearest representable value)
/// terminates within max_depth digits, the exact value is returned as a
/// width-0 bracket: the trailing zero digits close the composition with
/// lim Φ(A0^j; ·) = 0, i.e. the finite word applied to 0. For u ≥ √3 the
/// right map is not a contraction near 1, so brackets at points with long
/// all-ones digit runs may shrink slowly; the achieved width is whatever the
/// returned pair shows, no tolerance is promised.
pub fn eval_cdf(model: &DeRhamModel, x: f64, max_depth: u32) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("eval_cdf needs x in [0,1], got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 0.0));
    }
    if x == 1.0 {
        return Ok((1.0, 1.0));
    }
    let (bits, _, residual) = dyadic::digit_scan(x, max_depth)?;
    if residual == 0.0 {
        // terminated: strip trailing zeros, compose the finite word on 0
        let m = bits.iter().rposition(|b| *b == 1).map_or(0, |i| i + 1);
        let exact = model.compose_digits(&bits[..m], 0.0)?;
        return Ok((exact, exact));
    }
    let lo = model.compose_digits(&bits, 0.0)?;
    let hi = model.compose_digits(&bits, 1.0)?;
    Ok((lo, hi))
}

/// Inverts the CDF by bisection: returns x with f_u(x-) ≤ p ≤ f_u(x),
/// located to within tol. Bisection midpoints are dyadic, so every probe is
/// an exact evaluation.
pub fn quantile(model: &DeRhamModel, p: f64, tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile needs p in [0,1], got {p}")));
    }
    if tol < 1e-12 {
        return Err(Error::Domain(format!("quantile tol {tol:e} below 1e-12")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (fm, _) = eval_cdf(model, mid, dyadic::MAX_LEVEL)?;
        if fm < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Measure of the level-n dyadic cell containing x:
/// f_u(ζ_n(x) + 2^{-n}) - f_u(ζ_n(x)), computed from one digit word by
/// closing the same composition with 1 and with 0.
pub fn increment(model: &DeRhamModel, x: f64, n: u32) -> Result<f64> {
    let (bits, _, _) = dyadic::digit_scan(x, n)?;
    let lo = model.compose_digits(&bits, 0.0)?;
    let hi = model.compose_digits(&bits, 1.0)?;
    Ok(hi - lo)
}

/// The raw generator product A_{X_1(x)} ··· A_{X_n(x)} housing the
/// (p, q, r, s) entries. Products of n > 40 maps underflow without
/// renormalization; with `renormalize` the entries are rescaled by the
/// largest magnitude whenever they drift small (the induced Möbius map is
/// scale-invariant), which admits n up to the 62-digit cap.
pub fn product_entries(
    model: &DeRhamModel,
    x: f64,
    n: u32,
    renormalize: bool,
) -> Result<Matrix2> {
    if !renormalize && n > 40 {
        return Err(Error::NumericRange(
            "products beyond 40 maps need renormalize = true",
        ));
    }
    let (bits, _, _) = dyadic::digit_scan(x, n)?;
    let mut prod = Matrix2::IDENTITY;
    for bit in &bits {
        // raw multiply: the float determinant of a long product cancels to
        // zero (both columns align with the shrinking image interval) long
        // before the entries underflow, so the det-validating constructor
        // would reject a perfectly usable product
        let g = model.map(*bit);
        prod = Matrix2 {
            a: prod.a * g.a + prod.b * g.c,
            b: prod.a * g.b + prod.b * g.d,
            c: prod.c * g.a + prod.d * g.c,
            d: prod.c * g.b + prod.d * g.d,
        };
        let mag = prod.a.abs().max(prod.b.abs()).max(prod.c.abs()).max(prod.d.abs());
        if renormalize {
            if mag < 1e-2 {
                prod = Matrix2 {
                    a: prod.a / mag,
                    b: prod.b / mag,
                    c: prod.c / mag,
                    d: prod.d / mag,
                };
            }
        } else if mag < 1e-280 {
            return Err(Error::NumericRange(
                "product entries underflowed; pass renormalize = true",
            ));
        }
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::apply;
    use proptest::prelude::*;

    fn model(u: f64) -> DeRhamModel {
        DeRhamModel::new(u).unwrap()
    }

    /// u-values exercised across the evaluator tests: both regimes, the
    /// boundary, and the absolutely continuous point.
    pub(crate) const U_SET: [f64; 7] = [0.3, 0.7, 1.0, 1.5, SQRT3, 2.0, 3.0];

    #[test]
    fn model_invariants() {
        for u in U_SET {
            let m = model(u);
            assert_eq!(m.x_u, mobius::x_param(u));
            assert!(m.gamma_u > 1.0);
            // γ_u = 1/Φ(A0; 1)
            let join = apply(&m.a0, 1.0).unwrap();
            assert!((m.gamma_u - 1.0 / join).abs() < 1e-12);
            match m.z1 {
                Some(z1) => {
                    assert!(u > SQRT3);
                    assert!(0.0 < z1 && z1 < 1.0);
                    assert!((apply(&m.a1, z1).unwrap() - z1).abs() <= 1e-12);
                }
                None => assert!(u <= SQRT3),
            }
        }
        assert!(DeRhamModel::new(0.0).is_err());
    }

    #[test]
    fn table_level_zero_and_one() {
        for u in U_SET {
            let m = model(u);
            assert_eq!(build_table(&m, 0).unwrap().values, vec![0.0, 1.0]);
            let t1 = build_table(&m, 1).unwrap();
            let x = m.x_u;
            let mid = x / (1.0 - u * u * x * x);
            assert_eq!(t1.values[0], 0.0);
            assert!((t1.values[1] - mid).abs() < 1e-15);
            assert_eq!(t1.values[2], 1.0);
        }
    }

    #[test]
    fn table_u1_matches_gambler_levels() {
        // the u = 1 walk is the simple random walk, so exit probabilities are
        // the classical ruin ratios: P(R_n ≤ 2^n + k) = 2(k+1)/(2^n + k + 1)
        let m = model(1.0);
        let t1 = build_table(&m, 1).unwrap();
        assert!((t1.values[1] - 2.0 / 3.0).abs() < 1e-15);
        let t2 = build_table(&m, 2).unwrap();
        for (j, want) in [0.0, 2.0 / 5.0, 2.0 / 3.0, 6.0 / 7.0, 1.0].iter().enumerate() {
            assert!((t2.values[j] - want).abs() < 1e-15, "level 2 j = {j}");
        }
    }

    #[test]
    fn table_monotone_in_unit_interval() {
        for u in U_SET {
            let t = build_table(&model(u), 8).unwrap();
            assert_eq!(t.values.len(), 257);
            for j in 0..t.values.len() - 1 {
                assert!(t.values[j] < t.values[j + 1], "u = {u}, j = {j}");
                assert!((0.0..=1.0).contains(&t.values[j]));
            }
        }
    }

    #[test]
    fn table_level_guard() {
        assert!(matches!(
            build_table(&model(1.0), 31),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn delta0_table_shape() {
        let t = delta0_table(3).unwrap();
        assert_eq!(t.values, vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn eval_endpoints_and_closed_form_u1() {
        let m = model(1.0);
        assert_eq!(eval_cdf(&m, 0.0, 40).unwrap(), (0.0, 0.0));
        assert_eq!(eval_cdf(&m, 1.0, 40).unwrap(), (1.0, 1.0));
        // f_1(x) = 2x/(1+x); 1/3 is non-terminating as an f64 only beyond
        // depth 40, so this exercises the genuine bracket path
        let (lo, hi) = eval_cdf(&m, 1.0 / 3.0, 40).unwrap();
        assert!(hi - lo < 1e-6);
        assert!(lo <= 0.5 && 0.5 <= hi + 1e-12);
    }

    #[test]
    fn eval_exact_on_dyadics_matches_table() {
        for u in U_SET {
            let m = model(u);
            let t = build_table(&m, 10).unwrap();
            for j in 0..=1024usize {
                let x = j as f64 / 1024.0;
                let (lo, hi) = eval_cdf(&m, x, 62).unwrap();
                assert_eq!(lo, hi, "u = {u}, j = {j} should be exact");
                assert!((lo - t.values[j]).abs() <= 1e-12, "u = {u}, j = {j}");
            }
        }
    }

    #[test]
    fn eval_sqrt3_all_ones_prefix() {
        // x = 1 - 2^{-n} has digit word 1^n, so f(x) is the n-th iterate of
        // the right map at 0, which is n/(n+1) at u = √3
        let m = model(SQRT3);
        for n in 1..=20u32 {
            let x = 1.0 - 0.5f64.powi(n as i32);
            let (lo, hi) = eval_cdf(&m, x, 62).unwrap();
            assert_eq!(lo, hi);
            assert!((lo - n as f64 / (n + 1) as f64).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn brackets_nest_with_depth() {
        for u in [0.7, 2.0] {
            let m = model(u);
            for x in [0.1, 1.0 / 3.0, 0.9, 0.123456789] {
                let mut prev = (0.0, 1.0);
                for depth in 1..=40 {
                    let (lo, hi) = eval_cdf(&m, x, depth).unwrap();
                    assert!(lo <= hi);
                    assert!(prev.0 <= lo + 1e-15 && hi <= prev.1 + 1e-15);
                    prev = (lo, hi);
                }
            }
        }
    }

    #[test]
    fn quantile_named_values() {
        let m = model(1.0);
        assert_eq!(quantile(&m, 0.0, 1e-10).unwrap(), 0.0);
        assert_eq!(quantile(&m, 1.0, 1e-10).unwrap(), 1.0);
        assert!((quantile(&m, 0.5, 1e-10).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!((quantile(&m, 2.0 / 3.0, 1e-10).unwrap() - 0.5).abs() < 1e-9);
        assert!(matches!(quantile(&m, 0.5, 1e-13), Err(Error::Domain(_))));
    }

    #[test]
    fn increment_named_values() {
        for u in U_SET {
            let m = model(u);
            let x = m.x_u;
            let want = x / (1.0 - u * u * x * x);
            assert!((increment(&m, 0.0, 1).unwrap() - want).abs() < 1e-14);
        }
        assert!((increment(&model(1.0), 0.0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn increments_telescope_to_one() {
        for u in [0.7, 1.0, 2.0] {
            let m = model(u);
            let n = 6u32;
            let total: f64 = (0..(1u64 << n))
                .map(|k| increment(&m, k as f64 / (1u64 << n) as f64, n).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn product_entries_named_values() {
        let m = model(1.0);
        let p = product_entries(&m, 0.5, 1, false).unwrap();
        assert_eq!(p, m.a1);
        // all-zero digits give powers of A0
        let p3 = product_entries(&m, 0.0, 3, false).unwrap();
        let a0_3 = mobius::compose(&mobius::compose(&m.a0, &m.a0).unwrap(), &m.a0).unwrap();
        assert_eq!(p3, a0_3);
    }

    #[test]
    fn product_entries_match_table() {
        for u in U_SET {
            let m = model(u);
            let t = build_table(&m, 9).unwrap();
            for k in (0..512u64).step_by(11) {
                let x = k as f64 / 512.0;
                let p = product_entries(&m, x, 9, false).unwrap();
                let got = apply(&p, 0.0).unwrap();
                assert!((got - t.values[k as usize]).abs() <= 1e-12, "u = {u}, k = {k}");
            }
        }
    }

    #[test]
    fn product_entries_renormalization() {
        let m = model(0.3);
        assert!(matches!(
            product_entries(&m, 1.0 / 3.0, 41, false),
            Err(Error::NumericRange(_))
        ));
        let p = product_entries(&m, 1.0 / 3.0, 54, true).unwrap();
        // the rescaled product still induces the correct map
        let (lo, hi) = eval_cdf(&m, 1.0 / 3.0, 54).unwrap();
        let got = apply(&p, 0.0).unwrap();
        assert!(lo <= got + 1e-12 && got <= hi + 1e-12);
    }

    proptest! {
        /// The functional equation halves the argument: f(x) relates to
        /// f(2x) or f(2x-1) through the matching generator.
        #[test]
        fn functional_equation_on_random_points(x in 0.0f64..1.0, ui in 0usize..7) {
            let m = model(U_SET[ui]);
            let mid = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
            let fx = mid(eval_cdf(&m, x, 62).unwrap());
            let residual = if x <= 0.5 {
                let inner = mid(eval_cdf(&m, 2.0 * x, 62).unwrap());
                fx - apply(&m.a0, inner).unwrap()
            } else {
                let inner = mid(eval_cdf(&m, 2.0 * x - 1.0, 62).unwrap());
                fx - apply(&m.a1, inner).unwrap()
            };
            prop_assert!(residual.abs() <= 1e-10);
        }

        #[test]
        fn table_refinement_is_consistent(ui in 0usize..7, n in 1u32..=7) {
            // level n+1 restricted to the even indices reproduces level n
            let m = model(U_SET[ui]);
            let coarse = build_table(&m, n).unwrap();
            let fine = build_table(&m, n + 1).unwrap();
            for (j, v) in coarse.values.iter().enumerate() {
                prop_assert!((fine.values[2 * j] - v).abs() <= 1e-13);
            }
        }
    }
}
