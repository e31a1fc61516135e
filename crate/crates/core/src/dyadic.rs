//! Exact dyadic rationals k/2^n on [0,1] and binary-digit machinery.
//!
//! The digit functionals are X_i(x) = ⌊2^i x⌋ - 2⌊2^{i-1} x⌋ ∈ {0,1} and
//! ζ_n(x) = Σ_{i≤n} X_i(x) 2^{-i}, the level-n left grid point with
//! ζ_n(x) ≤ x < ζ_n(x) + 2^{-n}. Everything downstream (CDF evaluation,
//! atoms) is driven by these digits.

use crate::error::{Error, Result};
use std::fmt;

/// Levels beyond 62 do not fit the u64 numerator (and are far below f64
/// resolution anyway).
pub const MAX_LEVEL: u32 = 62;

/// A dyadic rational k/2^n in [0,1], kept canonical: k odd, or k = 0 at
/// level 0, or (k, n) = (1, 0) for the value 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    k: u64,
    n: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { k: 0, n: 0 };
    pub const ONE: Dyadic = Dyadic { k: 1, n: 0 };

    /// k/2^n, normalized to canonical form. Rejects n > 62 and k > 2^n.
    pub fn new(k: u64, n: u32) -> Result<Dyadic> {
        if n > MAX_LEVEL {
            return Err(Error::SizeGuard {
                what: "dyadic level",
                got: n as u64,
                limit: MAX_LEVEL as u64,
            });
        }
        if k > (1u64 << n) {
            return Err(Error::Domain(format!("dyadic {k}/2^{n} exceeds 1")));
        }
        let (mut k, mut n) = (k, n);
        if k == 0 {
            n = 0;
        }
        while k != 0 && k % 2 == 0 && n > 0 {
            k /= 2;
            n -= 1;
        }
        Ok(Dyadic { k, n })
    }

    pub fn numerator(&self) -> u64 {
        self.k
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    /// Nearest f64 (exact whenever the numerator fits 53 bits, which covers
    /// every level this crate produces from f64 input).
    pub fn value(&self) -> f64 {
        self.k as f64 / (1u64 << self.n) as f64
    }

    /// Exact dyadic representation of an f64 in [0,1], if its binary
    /// expansion terminates within MAX_LEVEL digits.
    pub fn from_f64_exact(x: f64) -> Option<Dyadic> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let mut y = x;
        let mut n = 0u32;
        while y.fract() != 0.0 {
            if n == MAX_LEVEL {
                return None;
            }
            y *= 2.0; // exact: multiplying f64 by 2
            n += 1;
        }
        Some(Dyadic::new(y as u64, n).expect("in range by construction"))
    }

    /// The unique m with X_m = 1 and X_i = 0 for i > m; defined on (0,1).
    pub fn last_one_index(&self) -> Result<u32> {
        if self.k == 0 || *self == Dyadic::ONE {
            return Err(Error::Domain(format!(
                "last_one_index needs x in (0,1), got {self}"
            )));
        }
        // canonical numerator is odd, so the final 1-digit sits at the level
        Ok(self.n)
    }

    /// First n binary digits and ζ_n, by integer arithmetic on (k, n).
    /// Requires value < 1.
    pub fn digits(&self, n: u32) -> Result<(Vec<u8>, Dyadic)> {
        if *self == Dyadic::ONE {
            return Err(Error::Domain("digits need x in [0,1)".into()));
        }
        guard_level(n)?;
        let mut bits = Vec::with_capacity(n as usize);
        for i in 1..=n {
            bits.push(if i <= self.n {
                ((self.k >> (self.n - i)) & 1) as u8
            } else {
                0
            });
        }
        let zeta = if n >= self.n {
            *self
        } else {
            Dyadic::new(self.k >> (self.n - n), n)?
        };
        Ok((bits, zeta))
    }

    /// Exact decimal expansion (a dyadic has a finite one), e.g. 3/8 → "0.375".
    pub fn exact_decimal(&self) -> String {
        if self.n == 0 {
            return if self.k == 0 { "0".into() } else { "1".into() };
        }
        let mut out = String::from("0.");
        let mut r = self.k as u128;
        let level = self.n;
        while r != 0 {
            r *= 10;
            let digit = r >> level;
            out.push((b'0' + digit as u8) as char);
            r -= digit << level;
        }
        out
    }

    /// Parses the canonical external form: "0", "1", or "k/2^n" with the
    /// denominator written out in decimal (e.g. "3/8"). Non-canonical input
    /// is rejected, naming the violated constraint.
    pub fn parse(s: &str) -> Result<Dyadic> {
        let s = s.trim();
        match s {
            "0" => return Ok(Dyadic::ZERO),
            "1" => return Ok(Dyadic::ONE),
            _ => {}
        }
        let (ks, ds) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("'{s}': expected \"k/2^n\" like \"3/8\"")))?;
        let k: u64 = ks
            .parse()
            .map_err(|_| Error::Parse(format!("'{ks}': numerator is not a non-negative integer")))?;
        let d: u64 = ds
            .parse()
            .map_err(|_| Error::Parse(format!("'{ds}': denominator is not a positive integer")))?;
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::Parse(format!("'{ds}': denominator must be a power of two")));
        }
        let n = d.trailing_zeros();
        if n > MAX_LEVEL {
            return Err(Error::Parse(format!("'{ds}': level {n} exceeds {MAX_LEVEL}")));
        }
        if k > d {
            return Err(Error::Parse(format!("'{s}': value exceeds 1")));
        }
        if n > 0 && k.is_multiple_of(2) {
            return Err(Error::Parse(format!(
                "'{s}': not canonical (numerator must be odd; reduce the fraction)"
            )));
        }
        Dyadic::new(k, n)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 0 {
            write!(f, "{}", self.k)
        } else {
            write!(f, "{}/{}", self.k, 1u64 << self.n)
        }
    }
}

fn guard_level(n: u32) -> Result<()> {
    if n > MAX_LEVEL {
        return Err(Error::SizeGuard {
            what: "digit count",
            got: n as u64,
            limit: MAX_LEVEL as u64,
        });
    }
    Ok(())
}

/// First n binary digits of a real x in [0,1) (those of the nearest
/// representable binary value) together with ζ_n(x).
pub fn digits(x: f64, n: u32) -> Result<(Vec<u8>, Dyadic)> {
    let (bits, k, _) = digit_scan(x, n)?;
    Ok((bits, Dyadic::new(k, n)?))
}

/// Digit extraction workhorse: returns the digits, the integer ⌊2^n x⌋, and
/// the residual y = 2^n x - ⌊2^n x⌋ (zero iff the expansion terminated).
/// All steps are exact f64 operations.
pub(crate) fn digit_scan(x: f64, n: u32) -> Result<(Vec<u8>, u64, f64)> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("digits need x in [0,1), got {x}")));
    }
    guard_level(n)?;
    let mut bits = Vec::with_capacity(n as usize);
    let mut k = 0u64;
    let mut y = x;
    for _ in 0..n {
        y *= 2.0;
        let bit = y >= 1.0;
        if bit {
            y -= 1.0;
        }
        bits.push(bit as u8);
        k = (k << 1) | bit as u64;
    }
    Ok((bits, k, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digits_named_values() {
        let (bits, zeta) = digits(0.0, 5).unwrap();
        assert_eq!(bits, vec![0; 5]);
        assert_eq!(zeta, Dyadic::ZERO);

        let (bits, zeta) = digits(0.5, 2).unwrap();
        assert_eq!(bits, vec![1, 0]);
        assert_eq!(zeta, Dyadic::new(1, 1).unwrap());

        let (bits, zeta) = digits(0.75, 2).unwrap();
        assert_eq!(bits, vec![1, 1]);
        assert_eq!(zeta, Dyadic::new(3, 2).unwrap());
    }

    #[test]
    fn digits_rejects_out_of_range() {
        assert!(digits(1.0, 3).is_err());
        assert!(digits(-0.1, 3).is_err());
        assert!(digits(0.5, 63).is_err());
    }

    #[test]
    fn last_one_index_named_values() {
        assert_eq!(Dyadic::parse("1/2").unwrap().last_one_index().unwrap(), 1);
        assert_eq!(Dyadic::parse("3/4").unwrap().last_one_index().unwrap(), 2);
        assert_eq!(Dyadic::parse("5/8").unwrap().last_one_index().unwrap(), 3);
        assert!(Dyadic::ZERO.last_one_index().is_err());
        assert!(Dyadic::ONE.last_one_index().is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(Dyadic::new(6, 3).unwrap(), Dyadic::new(3, 2).unwrap());
        assert_eq!(Dyadic::new(4, 2).unwrap(), Dyadic::ONE);
        assert_eq!(Dyadic::new(0, 7).unwrap(), Dyadic::ZERO);
        assert!(Dyadic::new(9, 3).is_err());
        assert!(Dyadic::new(1, 63).is_err());
    }

    #[test]
    fn roundtrip_digit_sum_is_exact() {
        for n in 0..=10u32 {
            for k in 0..(1u64 << n) {
                let d = Dyadic::new(k, n).unwrap();
                let (bits, zeta) = d.digits(n).unwrap();
                let sum: f64 = bits
                    .iter()
                    .enumerate()
                    .map(|(i, b)| *b as f64 / (1u64 << (i + 1)) as f64)
                    .sum();
                assert_eq!(sum, d.value(), "k = {k}, n = {n}");
                assert_eq!(zeta, d);
            }
        }
    }

    #[test]
    fn integer_and_real_paths_agree() {
        for n in 0..=12u32 {
            for k in (0..(1u64 << n)).step_by(7) {
                let d = Dyadic::new(k, n).unwrap();
                let (bi, zi) = d.digits(12).unwrap();
                let (br, zr) = digits(d.value(), 12).unwrap();
                assert_eq!(bi, br);
                assert_eq!(zi, zr);
            }
        }
    }

    #[test]
    fn parse_display_named() {
        assert_eq!(Dyadic::parse("3/8").unwrap(), Dyadic::new(3, 3).unwrap());
        assert_eq!(Dyadic::parse("0").unwrap(), Dyadic::ZERO);
        assert_eq!(Dyadic::parse("1").unwrap(), Dyadic::ONE);
        assert_eq!(Dyadic::new(3, 3).unwrap().to_string(), "3/8");
        assert_eq!(Dyadic::ZERO.to_string(), "0");
        assert_eq!(Dyadic::ONE.to_string(), "1");
    }

    #[test]
    fn parse_rejects_with_named_constraint() {
        for (s, needle) in [
            ("2/4", "odd"),
            ("3/5", "power of two"),
            ("9/8", "exceeds 1"),
            ("x/8", "integer"),
            ("1/0", "power of two"),
            ("0.375", "k/2^n"),
        ] {
            match Dyadic::parse(s) {
                Err(Error::Parse(msg)) => {
                    assert!(msg.contains(needle), "'{s}' → '{msg}' lacks '{needle}'")
                }
                other => panic!("'{s}' should fail to parse, got {other:?}"),
            }
        }
    }

    #[test]
    fn exact_decimal_named() {
        assert_eq!(Dyadic::parse("1/4").unwrap().exact_decimal(), "0.25");
        assert_eq!(Dyadic::parse("3/8").unwrap().exact_decimal(), "0.375");
        assert_eq!(Dyadic::ZERO.exact_decimal(), "0");
        assert_eq!(Dyadic::ONE.exact_decimal(), "1");
        assert_eq!(
            Dyadic::new(1, 10).unwrap().exact_decimal(),
            "0.0009765625"
        );
        // worst-case level still terminates and has exactly 62 digits
        let tiny = Dyadic::new(1, 62).unwrap().exact_decimal();
        assert_eq!(tiny.len(), 2 + 62);
        // 2^-62 = 2.168...e-19: eighteen zeros, then the digits of 5^62
        assert!(tiny.starts_with("0.000000000000000000216840"));
    }

    #[test]
    fn from_f64_exact_roundtrip() {
        assert_eq!(Dyadic::from_f64_exact(0.375).unwrap().to_string(), "3/8");
        assert_eq!(Dyadic::from_f64_exact(1.0).unwrap(), Dyadic::ONE);
        // 1/3 in binary does not terminate within 62 digits as a real number,
        // but the f64 nearest to it does (level 54)
        let third = Dyadic::from_f64_exact(1.0 / 3.0).unwrap();
        assert_eq!(third.level(), 54);
        assert_eq!(third.value(), 1.0 / 3.0);
        assert!(Dyadic::from_f64_exact(1e-300).is_none());
    }

    proptest! {
        #[test]
        fn zeta_brackets_and_refines(x in 0.0f64..1.0, n in 1u32..=62) {
            let (_, zeta) = digits(x, n).unwrap();
            let z = zeta.value();
            prop_assert!(z <= x);
            prop_assert!(x < z + 0.5f64.powi(n as i32) || n >= 53);
            if n > 1 {
                let (_, coarse) = digits(x, n - 1).unwrap();
                prop_assert!(coarse.value() <= z);
            }
        }

        #[test]
        fn parse_display_roundtrip(k in 0u64..=1024, n in 0u32..=10) {
            let k = k.min(1u64 << n);
            let d = Dyadic::new(k, n).unwrap();
            prop_assert_eq!(Dyadic::parse(&d.to_string()).unwrap(), d);
            // exact_decimal re-reads to the same f64 for these levels
            prop_assert_eq!(d.exact_decimal().parse::<f64>().unwrap(), d.value());
        }
    }
}
