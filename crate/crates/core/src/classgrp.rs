//! Class groups of positive definite binary quadratic forms: reduced-form
//! enumeration, composition, the subgroup of squares, genus index, and the
//! coset test for the classes of orthogonal lattices on a sphere.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd_i128, factorize, gcd3, isqrt};
use crate::error::{Error, Result};
use crate::modsurf::reduce_form;
use crate::ortho::{gram_form, Bqf};
use crate::sphere::{attached_discriminant, enumerate_sphere};

/// Above this |disc| the composition table is not materialised.
pub const TABLE_LIMIT: i64 = 10_000;

fn check_disc(disc: i64) -> Result<()> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::BadDiscriminant(disc));
    }
    Ok(())
}

/// Primitive reduced forms of discriminant `disc`, ordered by `(a, b)`.
pub fn reduced_forms(disc: i64) -> Result<Vec<Bqf>> {
    check_disc(disc)?;
    let n = -disc;
    let a_max = isqrt(n as u64 / 3) as i64;
    let mut out = Vec::new();
    for a in 1..=a_max {
        for b in -a + 1..=a {
            if (b - disc).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            let q = Bqf::new(a, b, c);
            if q.is_reduced() && gcd3(a, b, c) == 1 {
                out.push(q);
            }
        }
    }
    Ok(out)
}

pub fn class_number(disc: i64) -> Result<u64> {
    Ok(reduced_forms(disc)?.len() as u64)
}

/// The principal form of discriminant `disc`.
pub fn principal_form(disc: i64) -> Result<Bqf> {
    check_disc(disc)?;
    let b = disc.rem_euclid(2);
    Ok(Bqf::new(1, b, (b * b - disc) / 4))
}

/// Gauss composition with
/// `e = gcd(a1, a2, (b1+b2)/2) = u a1 + v a2 + w (b1+b2)/2`,
/// `a3 = a1 a2 / e²`, `b3 = (u a1 b2 + v a2 b1 + w (b1 b2 + Δ)/2) / e`,
/// followed by reduction. All intermediate products are 128-bit.
pub fn compose(q1: &Bqf, q2: &Bqf) -> Result<Bqf> {
    let disc = q1.disc();
    if q2.disc() != disc {
        return Err(Error::DiscriminantMismatch(*q1, *q2));
    }
    for q in [q1, q2] {
        if !q.is_positive_definite() {
            return Err(Error::NotPositiveDefinite(*q));
        }
        if !q.is_primitive() {
            return Err(Error::Imprimitive(*q));
        }
    }
    let (a1, b1) = (q1.a as i128, q1.b as i128);
    let (a2, b2) = (q2.a as i128, q2.b as i128);
    let dd = disc as i128;
    let beta = (b1 + b2) / 2;
    let (g1, x1, y1) = ext_gcd_i128(a1, a2);
    let (e, x2, w) = ext_gcd_i128(g1, beta);
    let (u, v) = (x1 * x2, y1 * x2);

    let a3 = a1 * a2 / (e * e);
    let b3 = (u * a1 * b2 + v * a2 * b1 + w * (b1 * b2 + dd) / 2) / e;
    let b3 = b3.rem_euclid(2 * a3);
    let b3 = if b3 > a3 { b3 - 2 * a3 } else { b3 };
    let c3 = (b3 * b3 - dd) / (4 * a3);
    debug_assert_eq!(b3 * b3 - 4 * a3 * c3, dd);

    let to64 = |x: i128| i64::try_from(x).map_err(|_| Error::Overflow("composition"));
    let composed = Bqf::new(to64(a3)?, to64(b3)?, to64(c3)?);
    Ok(reduce_form(&composed)?.0)
}

/// Reduced representative of the inverse class.
pub fn inverse(q: &Bqf) -> Result<Bqf> {
    Ok(reduce_form(&Bqf::new(q.a, -q.b, q.c))?.0)
}

/// The class group as its list of reduced forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassGroup {
    pub disc: i64,
    pub elements: Vec<Bqf>,
    pub principal: usize,
    #[serde(skip)]
    index: HashMap<Bqf, usize>,
}

impl ClassGroup {
    pub fn new(disc: i64) -> Result<Self> {
        let elements = reduced_forms(disc)?;
        let index: HashMap<Bqf, usize> = elements.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        let principal = index[&principal_form(disc)?];
        Ok(ClassGroup { disc, elements, principal, index })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the class of a (not necessarily reduced) form.
    pub fn class_of(&self, q: &Bqf) -> Result<usize> {
        let (r, _) = reduce_form(q)?;
        self.index
            .get(&r)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("{q} is not a primitive form of discriminant {}", self.disc)))
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        let q = compose(&self.elements[i], &self.elements[j]).expect("forms of one group compose");
        self.index[&q]
    }

    pub fn inv(&self, i: usize) -> usize {
        self.index[&inverse(&self.elements[i]).expect("reduced forms are positive definite")]
    }

    /// Full composition table; only for |disc| <= [`TABLE_LIMIT`].
    pub fn table(&self) -> Option<Vec<Vec<usize>>> {
        if -self.disc > TABLE_LIMIT {
            return None;
        }
        let h = self.order();
        Some((0..h).map(|i| (0..h).map(|j| self.mul(i, j)).collect()).collect())
    }
}

/// `{x² : x in C}` as element indices.
pub fn squares_subgroup(g: &ClassGroup) -> BTreeSet<usize> {
    (0..g.order()).map(|i| g.mul(i, i)).collect()
}

/// Number of distinct primes dividing `|n|`.
pub fn distinct_prime_count(n: i64) -> usize {
    factorize(n.unsigned_abs()).map(|f| f.distinct_primes()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetReport {
    pub d: u64,
    pub disc: i64,
    pub h: usize,
    pub squares_size: usize,
    /// `h / |C²|`.
    pub genus_index: usize,
    pub pd_size: usize,
    /// Every quotient of two classes in P_D is a square.
    pub quotients_in_squares: bool,
    pub is_coset: bool,
    /// `2^(r-1)` with r the number of primes dividing D.
    pub index_from_d: usize,
    /// `2^(r-1)` with r the number of primes dividing the discriminant.
    pub index_from_disc: usize,
}

/// The classes `[q_v]` for `v` in S²(D).
pub fn sphere_classes(d: u64, group: &ClassGroup) -> Result<BTreeSet<usize>> {
    enumerate_sphere(d).iter().map(|v| group.class_of(&gram_form(v)?)).collect()
}

pub fn coset_check(d: u64) -> Result<CosetReport> {
    let disc = attached_discriminant(d).ok_or_else(|| Error::InvalidArgument(format!("D = {d} is 0 mod 4")))?;
    let group = ClassGroup::new(disc)?;
    let squares = squares_subgroup(&group);
    let pd = sphere_classes(d, &group)?;

    let inverses: HashMap<usize, usize> = pd.iter().map(|&j| (j, group.inv(j))).collect();
    let quotients_in_squares = pd
        .iter()
        .all(|&i| pd.iter().all(|j| squares.contains(&group.mul(i, inverses[j]))));
    let is_coset = !pd.is_empty() && quotients_in_squares && pd.len() == squares.len();

    let pow = |r: usize| if r == 0 { 1 } else { 1usize << (r - 1) };
    Ok(CosetReport {
        d,
        disc,
        h: group.order(),
        squares_size: squares.len(),
        genus_index: group.order() / squares.len(),
        pd_size: pd.len(),
        quotients_in_squares,
        is_coset,
        index_from_d: pow(distinct_prime_count(d as i64)),
        index_from_disc: pow(distinct_prime_count(disc)),
    })
}
