//! Regularity diagnostics of the limit law: the absolute-continuity
//! criterion (the measure has a density iff u = 1), entropy bounds on the
//! Hausdorff dimension for 0 < u < 1, atoms and fixed points past the √3
//! threshold, the boundary checks at u = √3 itself, and derivative
//! diagnostics along binary expansions.

use crate::cdf::{build_table, DeRhamModel, SQRT3};
use crate::dyadic::{self, Dyadic};
use crate::error::{Error, Result};
use crate::mobius::{self, Matrix2};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::fmt;

/// Binary entropy in nats, s(p) = -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0.
pub fn entropy(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "entropy needs p in [0,1], got {p}");
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

/// Entropy bounds on the Hausdorff dimension of the measure, valid on
/// 0 < u < 1 (where the walk interpolates strictly between the self-avoiding
/// and simple ones): upper = s(x_u)/ln 2, lower = s(2x_u/(1+x_u))/ln 2.
/// Outside (0,1) no bound of this form applies and `None` is returned.
pub fn dimension_bounds(u: f64) -> Option<(f64, f64)> {
    if !(u > 0.0 && u < 1.0) {
        return None;
    }
    let x = mobius::x_param(u);
    let upper = entropy(x) / std::f64::consts::LN_2;
    let lower = entropy(2.0 * x / (1.0 + x)) / std::f64::consts::LN_2;
    Some((upper, lower))
}

/// Fixed-point residuals of the transposed generators at γ_u - 2:
/// residual_i = Φ(ᵗA_{u,i}; γ_u - 2) - (γ_u - 2). Both vanish exactly when
/// u = 1; for every other u at least one is bounded away from 0, which is
/// what makes the measure singular off u = 1.
pub fn singularity_criterion(u: f64) -> Result<(f64, f64)> {
    let model = DeRhamModel::new(u)?;
    let z = model.gamma_u - 2.0;
    let r0 = mobius::apply(&mobius::transpose(&model.a0), z)? - z;
    let r1 = mobius::apply(&mobius::transpose(&model.a1), z)? - z;
    Ok((r0, r1))
}

/// γ_u = 1/Φ(A_{u,0}; 1) and the increment-ratio pair
/// p_{u,0}(z) = (z+1)/(z+γ_u), p_{u,1}(z) = 1 - p_{u,0}(z).
/// p_{u,X}(z) is the exact ratio of successive cell measures along a binary
/// expansion when z is the associated product-entry ratio (see
/// [`derivative_diagnostic`]).
pub fn gamma_and_ratios(u: f64, z: f64) -> Result<(f64, f64, f64)> {
    let model = DeRhamModel::new(u)?;
    let gamma = 1.0 / mobius::apply(&model.a0, 1.0)?;
    if z <= -gamma {
        return Err(Error::Domain(format!(
            "ratio functions need z > -γ_u = {:.6}, got {z}",
            -gamma
        )));
    }
    let p0 = (z + 1.0) / (z + gamma);
    Ok((gamma, p0, 1.0 - p0))
}

/// Number of right-map iterates reported by [`atom_analysis`].
pub const ATOM_ITERATE_COUNT: usize = 40;

/// Fixed-point data of the right map Φ(A_{u,1}; ·): its attracting fixed
/// point z1 in (0,1) and the derivative-1 point z0 (both only for u > √3),
/// plus the iterates Φ^j(0) for j = 0..=40. The iterates increase to z1 when
/// it exists and to 1 otherwise.
pub fn atom_analysis(u: f64) -> Result<(Option<f64>, Option<f64>, Vec<f64>)> {
    let model = DeRhamModel::new(u)?;
    let iterates = atom_iterates(&model, ATOM_ITERATE_COUNT)?;
    let z0 = match model.z1 {
        Some(_) => Some(derivative_one_point(&model.a1)?),
        None => None,
    };
    Ok((model.z1, z0, iterates))
}

/// (Φ(A_{u,1}; ·)^j (0))_{j=0..=count}.
pub fn atom_iterates(model: &DeRhamModel, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count + 1);
    let mut z = 0.0;
    out.push(z);
    for _ in 0..count {
        z = mobius::apply(&model.a1, z)?;
        out.push(z);
    }
    Ok(out)
}

/// Unique root of Φ′(A₁; z) = 1 in (0,1), by bisection to 1e-12. The
/// derivative is increasing in z (the denominator -wz + (1-w) shrinks), and
/// for u > √3 it crosses 1 strictly inside the interval: Φ′(0) < 1 < Φ′(1).
fn derivative_one_point(a1: &Matrix2) -> Result<f64> {
    let g = |z: f64| -> Result<f64> { Ok(mobius::derivative(a1, z)? - 1.0) };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if g(lo)? >= 0.0 || g(hi)? <= 0.0 {
        return Err(Error::Domain(
            "derivative-1 point needs Φ′(0) < 1 < Φ′(1)".into(),
        ));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The digit word behind the atom map φ at a dyadic x = 0.b_1...b_m (b_m=1):
/// φ = Φ_{b_1} ∘ ... ∘ Φ_{b_{m-1}} ∘ Φ_0, i.e. the first m-1 digits followed
/// by a left map. Empty (φ = identity modulo the convention below) for x = 1.
fn atom_word(x: &Dyadic) -> Result<Option<Vec<u8>>> {
    if *x == Dyadic::ZERO {
        return Err(Error::Domain("atoms live on dyadics in (0,1]".into()));
    }
    if *x == Dyadic::ONE {
        return Ok(None);
    }
    let m = x.last_one_index()?;
    let (bits, _) = x.digits(m)?;
    let mut word = bits[..(m as usize - 1)].to_vec();
    word.push(0);
    Ok(Some(word))
}

/// Mass of the atom at a dyadic x in (0,1]: the jump of f_u at x, equal to
/// φ(1) - φ(z1) (and to 1 - z1 at x = 1). `None` ("no atoms") for u ≤ √3,
/// where the measure is continuous.
pub fn atom_mass(u: f64, x: &Dyadic) -> Result<Option<f64>> {
    let model = DeRhamModel::new(u)?;
    let z1 = match model.z1 {
        Some(z1) => z1,
        None => {
            atom_word(x)?; // still validate the point
            return Ok(None);
        }
    };
    match atom_word(x)? {
        None => Ok(Some(1.0 - z1)),
        Some(word) => {
            let hi = model.compose_digits(&word, 1.0)?;
            let lo = model.compose_digits(&word, z1)?;
            Ok(Some(hi - lo))
        }
    }
}

/// Finite-depth approximation of the jump at x: the increment
/// f_u(x) - f_u(x - 2^{-n}) at n = last_one_index(x) + extra, which closes
/// the atom word with Φ₁^extra(0) instead of z1. Converges to the atom mass
/// at the geometric rate Φ₁′(z1) = z1.
pub fn atom_jump_at_depth(u: f64, x: &Dyadic, extra: usize) -> Result<f64> {
    let model = DeRhamModel::new(u)?;
    let inner = *atom_iterates(&model, extra)?.last().expect("nonempty");
    match atom_word(x)? {
        None => Ok(1.0 - inner),
        Some(word) => {
            Ok(model.compose_digits(&word, 1.0)? - model.compose_digits(&word, inner)?)
        }
    }
}

/// The extrapolated finite-depth jump: Aitken Δ² applied to
/// [`atom_jump_at_depth`] at extra ∈ {58, 59, 60}, which cancels the leading
/// geometric error term and reproduces the atom mass to well below 1e-8 for
/// u ≥ 2 (closer to √3 the rate z1 → 1 and more depth would be needed).
pub fn atom_jump_extrapolated(u: f64, x: &Dyadic) -> Result<f64> {
    let d0 = atom_jump_at_depth(u, x, 58)?;
    let d1 = atom_jump_at_depth(u, x, 59)?;
    let d2 = atom_jump_at_depth(u, x, 60)?;
    let denom = d2 - 2.0 * d1 + d0;
    if denom.abs() < 1e-300 {
        return Ok(d2);
    }
    Ok(d0 - (d1 - d0) * (d1 - d0) / denom)
}

pub const MAX_INCREMENT_LEVEL: u32 = 24;

/// Largest level-m cell measure, max_k f_u(k/2^m) - f_u((k-1)/2^m).
pub fn max_increment(u: f64, m: u32) -> Result<f64> {
    if m == 0 || m > MAX_INCREMENT_LEVEL {
        return Err(Error::SizeGuard {
            what: "increment level",
            got: m as u64,
            limit: MAX_INCREMENT_LEVEL as u64,
        });
    }
    let table = build_table(&DeRhamModel::new(u)?, m)?;
    let max = table
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    Ok(max)
}

/// The four inequalities between the boundary-parameter maps
/// h0 = Φ(A_{√3,0}; ·) = z/(3-z) and h1 = Φ(A_{√3,1}; ·) = 1/(2-z) that
/// drive the 9/(m+1) increment bound at u = √3, each checked on a uniform
/// grid over [0,1]:
///   0: h0 < h1 everywhere;
///   1: h0′ and h1′ are nondecreasing (first differences);
///   2: h0′ ≤ 3 h1′ everywhere;
///   3: h0′ ≤ h1′ from h1²(0) = 2/3 on.
pub fn boundary_map_inequalities(grid_size: usize) -> Result<[bool; 4]> {
    if grid_size < 100 {
        return Err(Error::Domain(format!(
            "boundary checks need a grid of at least 100 points, got {grid_size}"
        )));
    }
    let model = DeRhamModel::new(SQRT3)?;
    let threshold = mobius::apply(&model.a1, mobius::apply(&model.a1, 0.0)?)?;
    let mut checks = [true; 4];
    let mut prev_d = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..=grid_size {
        let z = i as f64 / grid_size as f64;
        let h0 = mobius::apply(&model.a0, z)?;
        let h1 = mobius::apply(&model.a1, z)?;
        let d0 = mobius::derivative(&model.a0, z)?;
        let d1 = mobius::derivative(&model.a1, z)?;
        checks[0] &= h0 < h1;
        checks[1] &= d0 >= prev_d.0 && d1 >= prev_d.1;
        checks[2] &= d0 <= 3.0 * d1;
        if z >= threshold {
            checks[3] &= d0 <= d1;
        }
        prev_d = (d0, d1);
    }
    Ok(checks)
}

pub const MAX_DIAGNOSTIC_LEVEL: u32 = 62;

/// Derivative diagnostics along the binary expansion of a non-dyadic x:
/// scaled cell measures 2^n·(f_u over the level-n cell containing x) for
/// n = 1..=max_level, and the successive-ratio sequence
/// p_{u,X_{n+1}}(ρ_n) for n = 0..max_level, where ρ_n is the bottom-row
/// ratio of the generator product A_{X_1}···A_{X_n} and evolves by
/// ρ_{n+1} = Φ(ᵗA_{X_{n+1}}; ρ_n) from ρ_0 = 0. The n-th ratio equals
/// cell-measure(n+1)/cell-measure(n) exactly; at u = 1 it converges to 1/2
/// and the scaled measures to the density 2/(1+x)². No convergence is
/// asserted for other u — both sequences are reported as-is.
///
/// x whose f64 expansion terminates within max_level digits is rejected:
/// at such points the cell measures converge to the jump of f_u, which is
/// the business of [`atom_mass`], not a derivative.
pub fn derivative_diagnostic(
    u: f64,
    x: f64,
    max_level: u32,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0 < x && x < 1.0) {
        return Err(Error::Domain(format!(
            "derivative_diagnostic needs x in (0,1), got {x}"
        )));
    }
    if max_level == 0 || max_level > MAX_DIAGNOSTIC_LEVEL {
        return Err(Error::SizeGuard {
            what: "diagnostic level",
            got: max_level as u64,
            limit: MAX_DIAGNOSTIC_LEVEL as u64,
        });
    }
    let model = DeRhamModel::new(u)?;
    let (bits, _, residual) = dyadic::digit_scan(x, max_level)?;
    if residual == 0.0 {
        return Err(Error::Domain(format!(
            "{x} is dyadic at this depth; its cell measures converge to the \
             jump of f_u — query atom_mass instead"
        )));
    }
    let t0 = mobius::transpose(&model.a0);
    let t1 = mobius::transpose(&model.a1);
    let mut ratios = Vec::with_capacity(max_level as usize);
    let mut rho = 0.0f64;
    for bit in &bits {
        let (_, p0, p1) = gamma_and_ratios(u, rho)?;
        ratios.push(if *bit == 0 { p0 } else { p1 });
        rho = mobius::apply(if *bit == 0 { &t0 } else { &t1 }, rho)?;
    }
    // Cell measures accumulate from the ratio product (inc_0 = 1, so
    // inc_n = Π_{i<n} ratios[i], exactly). Differencing the composed-word
    // endpoint values instead would subtract two ~0.5-sized floats whose gap
    // shrinks like the measure itself: past n ≈ 30 the scaled measure would
    // be pure rounding noise.
    let mut scaled = Vec::with_capacity(max_level as usize);
    let mut inc_scaled = 1.0f64;
    for r in &ratios {
        inc_scaled *= 2.0 * r;
        scaled.push(inc_scaled);
    }
    Ok((scaled, ratios))
}

/// Where the parameter sits in the regularity landscape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// u = 0: the walk is deterministic and the measure is δ₀.
    DeltaAtZero,
    /// 0 < u < √3, u ≠ 1: singular, continuous, no atoms.
    SingularContinuousRegime,
    /// u = 1: the one absolutely continuous member, density 2/(1+x)².
    AbsolutelyContinuous,
    /// u = √3: continuous with the borderline 9/(m+1) increment decay.
    BoundarySqrt3,
    /// u > √3: every dyadic in (0,1] carries positive mass.
    SingularWithAtoms,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::DeltaAtZero => "delta-at-0",
            Classification::SingularContinuousRegime => "singular-continuous-regime",
            Classification::AbsolutelyContinuous => "absolutely-continuous",
            Classification::BoundarySqrt3 => "boundary-sqrt3",
            Classification::SingularWithAtoms => "singular-with-atoms",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Classification {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

pub fn classify(u: f64) -> Result<Classification> {
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("classification needs u ≥ 0, got {u}")));
    }
    Ok(if u == 0.0 {
        Classification::DeltaAtZero
    } else if u == 1.0 {
        Classification::AbsolutelyContinuous
    } else if u == SQRT3 {
        Classification::BoundarySqrt3
    } else if u > SQRT3 {
        Classification::SingularWithAtoms
    } else {
        Classification::SingularContinuousRegime
    })
}

/// Everything the `analyze` command reports about one parameter value.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    pub u: f64,
    pub x_u: f64,
    pub gamma_u: f64,
    pub criterion_residuals: (f64, f64),
    pub dim_upper: Option<f64>,
    pub dim_lower: Option<f64>,
    pub z1: Option<f64>,
    pub z0: Option<f64>,
    pub atom_mass_at_1: Option<f64>,
    pub classification: Classification,
}

pub fn regularity_report(u: f64) -> Result<RegularityReport> {
    let classification = classify(u)?;
    if u == 0.0 {
        // A_{0,1} is singular, so the u → 0 limits are reported: x_u → 1,
        // γ_u → 1, residuals → (0, 1/2); the measure itself is δ₀.
        return Ok(RegularityReport {
            u,
            x_u: 1.0,
            gamma_u: 1.0,
            criterion_residuals: (0.0, 0.5),
            dim_upper: None,
            dim_lower: None,
            z1: None,
            z0: None,
            atom_mass_at_1: None,
            classification,
        });
    }
    let model = DeRhamModel::new(u)?;
    let criterion_residuals = singularity_criterion(u)?;
    let dims = dimension_bounds(u);
    let (z1, z0, _) = atom_analysis(u)?;
    let atom_mass_at_1 = atom_mass(u, &Dyadic::ONE)?;
    Ok(RegularityReport {
        u,
        x_u: model.x_u,
        gamma_u: model.gamma_u,
        criterion_residuals,
        dim_upper: dims.map(|d| d.0),
        dim_lower: dims.map(|d| d.1),
        z1,
        z0,
        atom_mass_at_1,
        classification,
    })
}

#[derive(Serialize)]
struct DimBoundsJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    applicable: bool,
}

#[derive(Serialize)]
struct AtomsJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    z1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass_at_1: Option<f64>,
    applicable: bool,
}

impl Serialize for RegularityReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RegularityReport", 7)?;
        st.serialize_field("u", &self.u)?;
        st.serialize_field("x_u", &self.x_u)?;
        st.serialize_field("gamma_u", &self.gamma_u)?;
        st.serialize_field("classification", &self.classification)?;
        st.serialize_field(
            "criterion_residuals",
            &[self.criterion_residuals.0, self.criterion_residuals.1],
        )?;
        st.serialize_field(
            "dim_bounds",
            &DimBoundsJson {
                upper: self.dim_upper,
                lower: self.dim_lower,
                applicable: self.dim_upper.is_some(),
            },
        )?;
        st.serialize_field(
            "atoms",
            &AtomsJson {
                z1: self.z1,
                z0: self.z0,
                mass_at_1: self.atom_mass_at_1,
                applicable: self.z1.is_some(),
            },
        )?;
        st.end()
    }
}
