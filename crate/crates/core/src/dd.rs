//! Double-double arithmetic (~32 significant digits): the extended-precision
//! cross-check path. All production arithmetic is f64; this module rebuilds
//! x_u and the dyadic tables at roughly twice the precision so drift in the
//! f64 iterations can be measured rather than assumed away.
//!
//! Representation: value = hi + lo with |lo| ≤ ulp(hi)/2. The usual
//! error-free transforms (two_sum, two_prod via fma) plus a long-division
//! step; nothing here aims for full IEEE semantics, only for the [0,1]
//! compositions this crate performs.

use crate::error::Result;
use crate::mobius::x_param;
use std::ops::{Add, Div, Mul, Sub};

#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            Dd {
                hi: -self.hi,
                lo: -self.lo,
            }
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + Dd {
            hi: -o.hi,
            lo: -o.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r2 = r - o * Dd::from(q2);
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2 + q3);
        Dd { hi, lo }
    }
}

/// x_u to double-double accuracy: Newton on p(x) = 2u²x² + x - 1 seeded with
/// the f64 value (quadratic convergence: two corrections suffice).
pub fn x_param_dd(u: f64) -> Dd {
    let uu = Dd::from(u) * Dd::from(u);
    let two = Dd::from(2.0);
    let mut x = Dd::from(x_param(u));
    for _ in 0..3 {
        let p = two * uu * x * x + x - Dd::ONE;
        let dp = Dd::from(4.0) * uu * x + Dd::ONE;
        x = x - p / dp;
    }
    x
}

/// Residual of the defining relation at x_param_dd(u); magnitude is the
/// honest accuracy estimate of the double-double root.
pub fn x_param_dd_residual(u: f64) -> f64 {
    let uu = Dd::from(u) * Dd::from(u);
    let x = x_param_dd(u);
    (Dd::from(2.0) * uu * x * x + x - Dd::ONE).to_f64()
}

struct DdGenerators {
    // A0 = [[x, 0], [-w, 1]], A1 = [[0, x], [-w, 1-w]] with w = u²x²
    x: Dd,
    w: Dd,
    d1: Dd,
}

impl DdGenerators {
    fn new(u: f64) -> DdGenerators {
        let x = x_param_dd(u);
        let w = Dd::from(u) * Dd::from(u) * x * x;
        DdGenerators {
            x,
            w,
            d1: Dd::ONE - w,
        }
    }

    fn phi0(&self, z: Dd) -> Dd {
        self.x * z / (Dd::ONE - self.w * z)
    }

    fn phi1(&self, z: Dd) -> Dd {
        self.x / (self.d1 - self.w * z)
    }
}

/// The doubling-pass table in double-double arithmetic, rounded to f64 on
/// return. Differences against the plain table bound the f64 drift.
pub fn build_table_dd(u: f64, n: u32) -> Result<Vec<f64>> {
    crate::cdf::DeRhamModel::new(u)?; // same domain checks as the f64 path
    let g = DdGenerators::new(u);
    let mut values = vec![Dd::ZERO, Dd::ONE];
    for _ in 0..n {
        let half = values.len() - 1;
        let mut next = Vec::with_capacity(2 * half + 1);
        for v in &values[..half] {
            next.push(g.phi0(*v));
        }
        for v in &values[..half] {
            next.push(g.phi1(*v));
        }
        next.push(Dd::ONE);
        values = next;
    }
    Ok(values.into_iter().map(Dd::to_f64).collect())
}
