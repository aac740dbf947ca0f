//! Primitive integer points on the sphere x² + y² + z² = D.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{exact_sqrt, gcd3, is_admissible, isqrt};
use crate::error::{Error, Result};

/// A primitive integer vector together with its squared norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimVec3 {
    pub coords: [i64; 3],
    pub norm: u64,
}

impl PrimVec3 {
    pub fn new(coords: [i64; 3]) -> Result<Self> {
        if gcd3(coords[0], coords[1], coords[2]) != 1 {
            return Err(Error::NotPrimitive(coords));
        }
        let norm = coords.iter().map(|&c| (c as i128) * (c as i128)).sum::<i128>();
        let norm = u64::try_from(norm).map_err(|_| Error::Overflow("squared norm"))?;
        Ok(PrimVec3 { coords, norm })
    }

    pub fn neg(&self) -> Self {
        PrimVec3 { coords: self.coords.map(|c| -c), norm: self.norm }
    }

    /// `v / |v|` as floats.
    pub fn unit(&self) -> [f64; 3] {
        let r = (self.norm as f64).sqrt();
        self.coords.map(|c| c as f64 / r)
    }
}

impl fmt::Display for PrimVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.coords;
        write!(f, "({x}, {y}, {z})")
    }
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// All images of `v` under coordinate permutations and sign changes,
/// without duplicates.
pub fn signed_permutations(v: [i64; 3]) -> Vec<[i64; 3]> {
    let mut out = Vec::with_capacity(48);
    for p in PERMS {
        for signs in 0..8u8 {
            let mut w = [v[p[0]], v[p[1]], v[p[2]]];
            for (k, c) in w.iter_mut().enumerate() {
                if signs & (1 << k) != 0 {
                    *c = -*c;
                }
            }
            out.push(w);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Sorted triples `0 <= x <= y <= z` with `x² + y² + z² = d` and
/// `gcd(x, y, z) = 1`; one representative per signed-permutation orbit.
pub fn orbit_representatives(d: u64) -> Vec<[i64; 3]> {
    let mut reps = Vec::new();
    let x_max = isqrt(d / 3);
    for x in 0..=x_max {
        let rest = d - x * x;
        let y_max = isqrt(rest / 2);
        for y in x..=y_max {
            let zz = rest - y * y;
            if let Some(z) = exact_sqrt(zz) {
                if z >= y && gcd3(x as i64, y as i64, z as i64) == 1 {
                    reps.push([x as i64, y as i64, z as i64]);
                }
            }
        }
    }
    reps
}

/// S²(D) in lexicographic order. Empty exactly when D mod 8 is 0, 4 or 7;
/// that case runs through the same loop rather than being short-circuited.
pub fn enumerate_sphere(d: u64) -> Vec<PrimVec3> {
    let mut out: Vec<PrimVec3> = orbit_representatives(d)
        .into_iter()
        .flat_map(signed_permutations)
        .map(|coords| PrimVec3 { coords, norm: d })
        .collect();
    out.sort_unstable();
    out
}

/// Number of primitive points without materialising them.
pub fn sphere_count(d: u64) -> usize {
    orbit_representatives(d).into_iter().map(|v| signed_permutations(v).len()).sum()
}

/// Discriminant of the form attached to points of S²(D): -4D when
/// D = 1, 2 mod 4 and -D when D = 3 mod 4. `None` when D = 0 mod 4.
pub fn attached_discriminant(d: u64) -> Option<i64> {
    match d % 4 {
        1 | 2 => Some(-4 * d as i64),
        3 => Some(-(d as i64)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussBranch {
    /// D = 1, 2 mod 4: count is 12 h(-4D).
    Mod4_12h,
    /// D = 3 mod 8: count is 24 h(-D).
    Mod8_24h,
    /// D not admissible: the sphere is empty.
    Empty,
    /// D <= 3, outside the range of the count formula.
    ExcludedSmall,
}

impl fmt::Display for GaussBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaussBranch::Mod4_12h => "mod4_12h",
            GaussBranch::Mod8_24h => "mod8_24h",
            GaussBranch::Empty => "empty",
            GaussBranch::ExcludedSmall => "excluded_small",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussCountReport {
    pub d: u64,
    pub count: u64,
    pub class_number: u64,
    pub branch: GaussBranch,
    /// `None` for [`GaussBranch::ExcludedSmall`].
    pub pass: Option<bool>,
}

/// Compares |S²(D)| with the class number `h` of [`attached_discriminant`].
pub fn gauss_count_check(d: u64, h: u64) -> GaussCountReport {
    let count = sphere_count(d) as u64;
    let (branch, pass) = if d <= 3 {
        (GaussBranch::ExcludedSmall, None)
    } else if !is_admissible(d) {
        (GaussBranch::Empty, Some(count == 0))
    } else if d % 4 == 3 {
        (GaussBranch::Mod8_24h, Some(count == 24 * h))
    } else {
        (GaussBranch::Mod4_12h, Some(count == 12 * h))
    };
    GaussCountReport { d, count, class_number: h, branch, pass }
}
