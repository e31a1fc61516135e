use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain: {0}")]
    Domain(String),

    /// Möbius denominator fell below the pole floor; carries the map and the point.
    #[error("pole: |c*z + d| = {den:e} below floor {floor:e} at z = {z} for [[{a}, {b}], [{c}, {d}]]")]
    Pole {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        z: f64,
        den: f64,
        floor: f64,
    },

    #[error("singular matrix: det([[{a}, {b}], [{c}, {d}]]) = 0")]
    Singular { a: f64, b: f64, c: f64, d: f64 },

    #[error("degenerate: matrix is a scalar multiple of the identity, every point is fixed")]
    Degenerate,

    #[error("size guard: {what} = {got} exceeds limit {limit}")]
    SizeGuard {
        what: &'static str,
        got: u64,
        limit: u64,
    },

    #[error("budget: estimated cost {estimate:.3e} exceeds budget {budget:.3e}")]
    Budget { estimate: f64, budget: f64 },

    #[error("numeric range: {0}")]
    NumericRange(&'static str),

    #[error("parse: {0}")]
    Parse(String),
}
