use thiserror::Error;

use crate::ortho::Bqf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot factorize zero")]
    ZeroInput,

    #[error("Jacobi symbol needs an odd positive modulus, got {0}")]
    EvenModulus(i64),

    #[error("vector {0:?} is not primitive")]
    NotPrimitive([i64; 3]),

    #[error("vector {w:?} is not orthogonal to {v:?}")]
    NotOrthogonal { v: [i64; 3], w: [i64; 3] },

    /// The Gram form of an orthogonal lattice with D = 3 mod 4 must have even
    /// outer coefficients; anything else contradicts the halving rule.
    #[error("halving parity fails for v = {v:?}: Gram form ({a}, {b}, {c})")]
    HalvingParity { v: [i64; 3], a: i64, b: i64, c: i64 },

    #[error("form {0} is not positive definite")]
    NotPositiveDefinite(Bqf),

    #[error("discriminant {0} is not a negative integer congruent to 0 or 1 mod 4")]
    BadDiscriminant(i64),

    #[error("forms {0} and {1} have different discriminants")]
    DiscriminantMismatch(Bqf, Bqf),

    #[error("form {0} is not primitive")]
    Imprimitive(Bqf),

    #[error("spherical harmonic degree {l} order {m} is invalid")]
    InvalidHarmonic { l: u32, m: i32 },

    #[error("vector is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("matrix is singular or not unimodular (det {0})")]
    NearSingular(f64),

    #[error("region {0} is not contained in the fundamental domain")]
    RegionOutsideDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "Heegner point mismatch for v = {v:?}: lattice shape ({lattice_x}, {lattice_y}) vs form root ({form_x}, {form_y}), distance {residual}"
    )]
    HeegnerMismatch {
        v: [i64; 3],
        lattice_x: f64,
        lattice_y: f64,
        form_x: f64,
        form_y: f64,
        residual: f64,
    },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}
