//! Exact and numerical tools for integer points on spheres, the shapes of
//! their orthogonal lattices, and the joint equidistribution of the two.

pub mod arith;
pub mod classgrp;
pub mod eisen;
pub mod error;
pub mod modsurf;
pub mod ortho;
pub mod sphere;
pub mod weyl;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
