//! Möbius transformations and the generator pair (A_{u,0}, A_{u,1}).
//!
//! A 2x2 real matrix A acts on the line by Φ(A; z) = (az + b)/(cz + d).
//! The two generators drive the functional equation of the limit CDF:
//!
//! ```text
//! A_{u,0} = [ x_u      0 ]      A_{u,1} = [ 0        x_u       ]
//!           [ -u²x_u²  1 ]                [ -u²x_u²  1 - u²x_u² ]
//! ```
//!
//! with x_u = 2/(1 + sqrt(1 + 8u²)), the positive root of 2u²x² + x = 1.
//! Both maps send [0,1] into [0,1] and are strictly increasing there.

use crate::error::{Error, Result};

/// Default denominator floor. The generator maps never approach a pole on
/// [0,1], so hitting the floor indicates caller misuse rather than a
/// legitimate near-pole evaluation.
pub const EPS_DEN: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Rejects non-finite entries and exactly-zero determinant.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Matrix2> {
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        let m = Matrix2 { a, b, c, d };
        if m.det() == 0.0 {
            return Err(Error::Singular { a, b, c, d });
        }
        Ok(m)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
}

/// x_u = 2/(1 + sqrt(1 + 8u²)); equals 1 at u = 0 and decreases to 0.
pub fn x_param(u: f64) -> f64 {
    2.0 / (1.0 + (1.0 + 8.0 * u * u).sqrt())
}

/// The generator pair (A_{u,0}, A_{u,1}) for u > 0.
///
/// u = 0 is rejected: A_{0,1} is singular, and the u = 0 measure is the
/// point mass at 0 (handled as a special case by callers, not by maps).
pub fn generators(u: f64) -> Result<(Matrix2, Matrix2)> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!(
            "generators need u > 0; u = {u} is the delta-at-0 special case"
        )));
    }
    let x = x_param(u);
    let w = u * u * x * x; // = (1 - x)/2 by the defining relation of x_u
    let a0 = Matrix2::new(x, 0.0, -w, 1.0)?;
    let a1 = Matrix2::new(0.0, x, -w, 1.0 - w)?;
    Ok((a0, a1))
}

/// Φ(A; z) = (az + b)/(cz + d) with the default pole floor.
pub fn apply(m: &Matrix2, z: f64) -> Result<f64> {
    apply_with_floor(m, z, EPS_DEN)
}

/// Φ(A; z) with a caller-chosen denominator floor.
pub fn apply_with_floor(m: &Matrix2, z: f64, floor: f64) -> Result<f64> {
    let den = m.c * z + m.d;
    if den.abs() <= floor {
        return Err(Error::Pole {
            a: m.a,
            b: m.b,
            c: m.c,
            d: m.d,
            z,
            den: den.abs(),
            floor,
        });
    }
    Ok((m.a * z + m.b) / den)
}

/// Matrix product A·B, so that Φ(A·B; z) = Φ(A; Φ(B; z)).
pub fn compose(m: &Matrix2, n: &Matrix2) -> Result<Matrix2> {
    Matrix2::new(
        m.a * n.a + m.b * n.c,
        m.a * n.b + m.b * n.d,
        m.c * n.a + m.d * n.c,
        m.c * n.b + m.d * n.d,
    )
}

pub fn transpose(m: &Matrix2) -> Matrix2 {
    Matrix2 {
        a: m.a,
        b: m.c,
        c: m.b,
        d: m.d,
    }
}

/// Φ'(A; z) = det(A)/(cz + d)².
pub fn derivative(m: &Matrix2, z: f64) -> Result<f64> {
    let den = m.c * z + m.d;
    if den.abs() <= EPS_DEN {
        return Err(Error::Pole {
            a: m.a,
            b: m.b,
            c: m.c,
            d: m.d,
            z,
            den: den.abs(),
            floor: EPS_DEN,
        });
    }
    Ok(m.det() / (den * den))
}

/// Real fixed points of Φ(A; ·): roots of cz² + (d - a)z - b = 0, ascending.
///
/// Returns zero, one or two values; an empty result means the discriminant is
/// negative. A discriminant within 1e-12 of zero (relative to the
/// coefficients) is snapped to a double root — the tangent case, e.g.
/// A_{√3,1}, lands one rounding below zero otherwise.
pub fn fixed_points(m: &Matrix2) -> Result<Vec<f64>> {
    let qa = m.c;
    let qb = m.d - m.a;
    let qc = -m.b;
    if qa == 0.0 && qb == 0.0 {
        // cz² + (d-a)z - b with all coefficients zero: scalar multiple of I.
        return Err(Error::Degenerate);
    }
    if qa == 0.0 {
        return Ok(vec![-qc / qb]);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    let scale = (qb * qb).max((4.0 * qa * qc).abs()).max(f64::MIN_POSITIVE);
    if disc.abs() <= 1e-12 * scale {
        let z = -qb / (2.0 * qa);
        return Ok(vec![z, z]);
    }
    if disc < 0.0 {
        return Ok(vec![]);
    }
    // Citardauq-stable: compute the larger-magnitude root first.
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let (r1, r2) = (q / qa, qc / q);
    Ok(if r1 <= r2 { vec![r1, r2] } else { vec![r2, r1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn a0(u: f64) -> Matrix2 {
        generators(u).unwrap().0
    }
    fn a1(u: f64) -> Matrix2 {
        generators(u).unwrap().1
    }

    /// Log grid over [1e-3, 1e3] used by several invariants.
    fn u_grid() -> Vec<f64> {
        (0..=120).map(|i| 1e-3_f64 * 10f64.powf(i as f64 / 20.0)).collect()
    }

    #[test]
    fn x_param_named_values() {
        assert_eq!(x_param(1.0), 0.5);
        assert!((x_param(SQRT3) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(x_param(0.0), 1.0);
    }

    #[test]
    fn x_param_defining_relation_on_log_grid() {
        for u in u_grid() {
            let x = x_param(u);
            assert!(
                (2.0 * u * u * x * x + x - 1.0).abs() <= 1e-12,
                "relation fails at u = {u}"
            );
        }
    }

    #[test]
    fn generators_u1_entries() {
        let (g0, g1) = generators(1.0).unwrap();
        assert_eq!(g0, Matrix2 { a: 0.5, b: 0.0, c: -0.25, d: 1.0 });
        assert_eq!(g1, Matrix2 { a: 0.0, b: 0.5, c: -0.25, d: 0.75 });
    }

    #[test]
    fn generators_sqrt3_entries() {
        let g1 = a1(SQRT3);
        assert!((g1.b - 1.0 / 3.0).abs() < 1e-15);
        assert!((g1.c + 1.0 / 3.0).abs() < 1e-15);
        assert!((g1.d - 2.0 / 3.0).abs() < 1e-15);
        // so Φ(A_{√3,1}; z) = 1/(2 - z)
        assert!((apply(&g1, 0.5).unwrap() - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn generators_reject_u_zero() {
        assert!(matches!(generators(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn join_identity_on_grid() {
        // Φ(A0; 1) = Φ(A1; 0) = x_u/(1 - u²x_u²)
        for u in u_grid() {
            let (g0, g1) = generators(u).unwrap();
            let left = apply(&g0, 1.0).unwrap();
            let right = apply(&g1, 0.0).unwrap();
            let x = x_param(u);
            let closed = x / (1.0 - u * u * x * x);
            assert!((left - right).abs() <= 1e-15);
            assert!((left - closed).abs() <= 1e-12);
        }
    }

    #[test]
    fn apply_named_values() {
        let z = 0.372;
        assert_eq!(apply(&Matrix2::IDENTITY, z).unwrap(), z);
        assert!((apply(&a0(1.0), 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((apply(&a1(SQRT3), 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn apply_pole_error() {
        let m = Matrix2::new(1.0, 0.0, 1.0, -0.5).unwrap();
        assert!(matches!(apply(&m, 0.5), Err(Error::Pole { .. })));
        // a floor of zero admits the same point
        assert!(apply_with_floor(&m, 0.5 + 1e-9, 0.0).is_ok());
    }

    #[test]
    fn fixed_endpoints() {
        // Φ(A0; 0) = 0 exactly (literal zero numerator). Φ(A1; 1) = x/((1-w)-w)
        // suffers cancellation in the denominator (true value x), so the
        // relative error scales like ulp/x_u and grows with u.
        for u in u_grid() {
            let (g0, g1) = generators(u).unwrap();
            assert_eq!(apply(&g0, 0.0).unwrap(), 0.0);
            let slack = 5e-16 / x_param(u) + 1e-15;
            assert!((apply(&g1, 1.0).unwrap() - 1.0).abs() <= slack, "u = {u}");
        }
    }

    #[test]
    fn maps_preserve_unit_interval_and_increase() {
        for u in u_grid() {
            // near z = 1 the image may overshoot 1 by the endpoint rounding
            // documented in fixed_endpoints
            let slack = 5e-16 / x_param(u) + 1e-15;
            for m in [a0(u), a1(u)] {
                for i in 0..=50 {
                    let z = i as f64 / 50.0;
                    let y = apply(&m, z).unwrap();
                    assert!((-slack..=1.0 + slack).contains(&y), "u = {u}, z = {z}");
                    assert!(derivative(&m, z).unwrap() > 0.0);
                }
            }
        }
    }

    #[test]
    fn compose_identity_and_small_cases() {
        let g0 = a0(1.0);
        let g1 = a1(1.0);
        assert_eq!(compose(&g0, &Matrix2::IDENTITY).unwrap(), g0);
        let g00 = compose(&g0, &g0).unwrap();
        assert_eq!(apply(&g00, 0.0).unwrap(), 0.0);
        assert!((apply(&g00, 1.0).unwrap() - 2.0 / 5.0).abs() < 1e-15);
        let g10 = compose(&g1, &g0).unwrap();
        assert!((apply(&g10, 1.0).unwrap() - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_swaps_and_involutes() {
        let g0 = a0(1.0);
        let t = transpose(&g0);
        assert_eq!(t, Matrix2 { a: 0.5, b: -0.25, c: 0.0, d: 1.0 });
        assert_eq!(transpose(&t), g0);
        let sym = Matrix2::new(1.0, 0.3, 0.3, 2.0).unwrap();
        assert_eq!(transpose(&sym), sym);
    }

    #[test]
    fn derivative_named_values() {
        assert_eq!(derivative(&Matrix2::IDENTITY, 0.7).unwrap(), 1.0);
        let g1 = a1(SQRT3);
        assert!((derivative(&g1, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((derivative(&g1, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_threshold_at_sqrt3() {
        // sup of Φ'(A_{u,1}; ·) on [0,1] sits at z = 1 and equals u²x_u.
        for u in [0.3, 0.7, 1.0, 1.5] {
            let sup = (0..=100)
                .map(|i| derivative(&a1(u), i as f64 / 100.0).unwrap())
                .fold(0.0, f64::max);
            assert!(sup < 1.0, "u = {u} sup = {sup}");
        }
        for u in [2.0, 3.0] {
            assert!(derivative(&a1(u), 1.0).unwrap() > 1.0);
        }
    }

    #[test]
    fn fixed_points_named_cases() {
        let fp = fixed_points(&a1(1.0)).unwrap();
        assert_eq!(fp.len(), 2);
        assert!((fp[0] - 1.0).abs() < 1e-12 && (fp[1] - 2.0).abs() < 1e-12);

        // tangent case: double root at 1
        let fp3 = fixed_points(&a1(SQRT3)).unwrap();
        assert_eq!(fp3.len(), 2);
        assert!((fp3[0] - 1.0).abs() < 1e-7 && fp3[0] == fp3[1]);

        assert!(matches!(fixed_points(&Matrix2::IDENTITY), Err(Error::Degenerate)));
        // no real fixed points: z² + 1 = 0
        let rot = Matrix2::new(0.0, -1.0, 1.0, 0.0).unwrap();
        assert!(fixed_points(&rot).unwrap().is_empty());
    }

    #[test]
    fn fixed_points_of_a1_general_u() {
        // {1, 1/(u²x_u)} in some order; 1 is always a root of the quadratic.
        for u in [0.3, 0.7, 1.0, 1.5, 2.0, 3.0] {
            let x = x_param(u);
            let other = 1.0 / (u * u * x);
            let want = if other < 1.0 { [other, 1.0] } else { [1.0, other] };
            let fp = fixed_points(&a1(u)).unwrap();
            assert_eq!(fp.len(), 2, "u = {u}");
            assert!((fp[0] - want[0]).abs() < 1e-10 && (fp[1] - want[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(matches!(
            Matrix2::new(1.0, 2.0, 2.0, 4.0),
            Err(Error::Singular { .. })
        ));
        assert!(Matrix2::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
    }

    proptest! {
        /// Φ(A·B; z) = Φ(A; Φ(B; z)) for random generator words of length ≤ 20.
        #[test]
        fn compose_matches_functional_composition(
            word in proptest::collection::vec(0u8..2, 1..20),
            ui in 0usize..6,
            zi in 0usize..3,
        ) {
            let u = [0.3, 0.7, 1.0, 1.5, 2.0, 3.0][ui];
            let z = [0.0, 0.37, 1.0][zi];
            let (g0, g1) = generators(u).unwrap();
            let pick = |b: &u8| if *b == 0 { g0 } else { g1 };
            let mut prod = pick(&word[0]);
            for b in &word[1..] {
                prod = compose(&prod, &pick(b)).unwrap();
            }
            let via_product = apply(&prod, z).unwrap();
            let mut via_maps = z;
            for b in word.iter().rev() {
                via_maps = apply(&pick(b), via_maps).unwrap();
            }
            prop_assert!((via_product - via_maps).abs() <= 1e-12);
        }
    }
}
