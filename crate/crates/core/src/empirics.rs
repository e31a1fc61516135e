//! Empirical-CDF machinery for checking Monte Carlo output against the
//! exact tables.
//!
//! Comparison happens only at coarse dyadic boundaries: the finite-level
//! law of the scaled range hits the level-n table exactly at points k/2^n
//! (coarse exit events are decided by the coarse decimated walk), so the
//! only discrepancy left is sampling noise, bounded by the DKW band.

use crate::cdf::{build_table, DeRhamModel};
use crate::error::{Error, Result};
use crate::walk::DepthHistogram;

/// Normalized cumulative counts of a depth sample:
/// cumulative[d] = fraction of samples with depth ≤ d, for d < 2^level.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCDF {
    pub level: u32,
    pub cumulative: Vec<f64>,
    pub total: u64,
}

pub fn ecdf(hist: &DepthHistogram) -> Result<EmpiricalCDF> {
    if hist.total == 0 {
        return Err(Error::Domain("ecdf needs at least one sample".into()));
    }
    let size = 1usize << hist.level;
    let mut cumulative = vec![0.0f64; size];
    for (d, c) in &hist.counts {
        if *d as usize >= size {
            return Err(Error::Domain(format!(
                "depth {d} outside [0, 2^{} - 1]",
                hist.level
            )));
        }
        cumulative[*d as usize] = *c as f64;
    }
    let mut run = 0.0;
    for v in cumulative.iter_mut() {
        run += *v;
        *v = run / hist.total as f64;
    }
    Ok(EmpiricalCDF {
        level: hist.level,
        cumulative,
        total: hist.total,
    })
}

/// Sup distance between the sample and the exact level-n table over the
/// 2^n coarse boundaries: max_k |P̂(depth < k·2^{N-n}) - f_u(k/2^n)|.
/// At these boundaries the exact finite-level probability equals the table
/// value, so the statistic measures pure sampling error.
pub fn ks_against_exact(e: &EmpiricalCDF, model: &DeRhamModel, grid_level: u32) -> Result<f64> {
    if grid_level > e.level {
        return Err(Error::Domain(format!(
            "grid level {grid_level} exceeds sample level {}",
            e.level
        )));
    }
    let table = build_table(model, grid_level)?;
    let stride = 1usize << (e.level - grid_level);
    let mut sup = 0.0f64;
    for k in 1..=(1usize << grid_level) {
        let diff = (e.cumulative[k * stride - 1] - table.values[k]).abs();
        sup = sup.max(diff);
    }
    Ok(sup)
}

/// Sup distance between two samples (possibly of different levels) over a
/// common coarse grid.
pub fn cross_level_distance(
    a: &EmpiricalCDF,
    b: &EmpiricalCDF,
    grid_level: u32,
) -> Result<f64> {
    if grid_level > a.level.min(b.level) {
        return Err(Error::Domain(format!(
            "grid level {grid_level} exceeds sample levels {} and {}",
            a.level, b.level
        )));
    }
    let sa = 1usize << (a.level - grid_level);
    let sb = 1usize << (b.level - grid_level);
    let mut sup = 0.0f64;
    for k in 1..=(1usize << grid_level) {
        let diff = (a.cumulative[k * sa - 1] - b.cumulative[k * sb - 1]).abs();
        sup = sup.max(diff);
    }
    Ok(sup)
}

/// Dvoretzky–Kiefer–Wolfowitz band: with probability ≥ confidence the sup
/// distance between an ECDF of n i.i.d. samples and the truth is at most
/// √(ln(2/(1-confidence))/(2n)), clipped to the trivial bound 1.
pub fn dkw_epsilon(n_samples: u64, confidence: f64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Domain("dkw_epsilon needs n ≥ 1".into()));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::Domain(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }
    let eps = ((2.0 / (1.0 - confidence)).ln() / (2.0 * n_samples as f64)).sqrt();
    Ok(eps.min(1.0))
}
