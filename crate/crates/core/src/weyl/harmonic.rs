//! Real spherical harmonics, orthonormal for the normalised surface measure
//! (so `Y_{0,0} = 1`), without the Condon–Shortley phase:
//!
//! `Y_{l,m}(u) = K_{l,m} · P̃_l^{|m|}(u_z) · Re/Im (u_x + i u_y)^{|m|}`
//!
//! where `P̃_l^m = d^m P_l / dt^m` is the polynomial part of the associated
//! Legendre function, cosine for `m > 0` and sine for `m < 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SphHarmonic {
    l: u32,
    m: i32,
}

impl fmt::Display for SphHarmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Y{},{}", self.l, self.m)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl SphHarmonic {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if l > MAX_DEGREE || m.unsigned_abs() > l {
            return Err(Error::InvalidHarmonic { l, m });
        }
        Ok(SphHarmonic { l, m })
    }

    pub const fn constant() -> Self {
        SphHarmonic { l: 0, m: 0 }
    }

    pub fn degree(&self) -> u32 {
        self.l
    }

    pub fn order(&self) -> i32 {
        self.m
    }

    pub fn is_constant(&self) -> bool {
        self.l == 0
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn norm_factor(&self) -> f64 {
        let (l, am) = (self.l, self.m.unsigned_abs());
        let two = if am == 0 { 1.0 } else { 2.0 };
        (two * f64::from(2 * l + 1) * factorial(l - am) / factorial(l + am)).sqrt()
    }

    /// Upper bound for |Y| on the sphere: `|P_l^m| <= (l+m)!/(l-m)!`-type
    /// bounds are loose, so this uses `K · max |P̃ (1-t²)^{m/2}|` sampled
    /// densely, plus a margin.
    pub fn sup_bound(&self) -> f64 {
        let am = self.m.unsigned_abs();
        let mut best: f64 = 0.0;
        for i in 0..=4000 {
            let t = -1.0 + 2.0 * i as f64 / 4000.0;
            let s = (1.0 - t * t).max(0.0).sqrt();
            best = best.max((legendre_poly_part(self.l, am, t) * s.powi(am as i32)).abs());
        }
        self.norm_factor() * best * 1.01
    }

    /// Evaluation at a unit vector.
    pub fn eval(&self, u: [f64; 3]) -> Result<f64> {
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitVector(n));
        }
        Ok(self.eval_unit(u))
    }

    /// As [`Self::eval`] without the norm check. Negating `u` multiplies the
    /// result by exactly `(-1)^l` in floating point.
    pub fn eval_unit(&self, u: [f64; 3]) -> f64 {
        let am = self.m.unsigned_abs();
        let p = legendre_poly_part(self.l, am, u[2]);
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..am {
            (re, im) = (re * u[0] - im * u[1], re * u[1] + im * u[0]);
        }
        let trig = if self.m >= 0 { re } else { im };
        self.norm_factor() * p * trig
    }
}

/// `d^m P_l / dt^m` by the three-term recurrence in `l`, seeded with
/// `(2m-1)!!` and `(2m+1) t (2m-1)!!`.
pub fn legendre_poly_part(l: u32, m: u32, t: f64) -> f64 {
    debug_assert!(m <= l);
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= f64::from(2 * k - 1);
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = f64::from(2 * m + 1) * t * pmm;
    for ll in m + 2..=l {
        let next = (f64::from(2 * ll - 1) * t * cur - f64::from(ll + m - 1) * prev) / f64::from(ll - m);
        prev = cur;
        cur = next;
    }
    cur
}

fn binomial(n: u32, k: u32) -> i128 {
    let mut r: i128 = 1;
    for i in 0..k {
        r = r * (n - i) as i128 / (i + 1) as i128;
    }
    r
}

/// The homogeneous harmonic polynomial `2^l r^l Y_{l,m}(v/r) / K_{l,m}`
/// with integer coefficients, evaluated exactly on integer vectors.
///
/// Built from the explicit sum `2^l P_l(t) = Σ_k (-1)^k C(l,k) C(2l-2k,l)
/// t^(l-2k)`, differentiated `m` times; `r^(l-m-j)` becomes a power of the
/// squared norm `n`, which is an integer for lattice points.
#[derive(Debug, Clone)]
pub struct SolidHarmonic {
    harmonic: SphHarmonic,
    /// `(power of z, power of n, coefficient)`
    terms: Vec<(u32, u32, i128)>,
}

impl SolidHarmonic {
    pub fn new(harmonic: SphHarmonic) -> Self {
        let l = harmonic.l;
        let m = harmonic.m.unsigned_abs();
        let mut terms = Vec::new();
        for k in 0..=l / 2 {
            let j = l - 2 * k;
            if j < m {
                continue;
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let mut coef = sign * binomial(l, k) * binomial(2 * l - 2 * k, l);
            for i in 0..m {
                coef *= (j - i) as i128;
            }
            terms.push((j - m, (l - j) / 2, coef));
        }
        SolidHarmonic { harmonic, terms }
    }

    pub fn harmonic(&self) -> SphHarmonic {
        self.harmonic
    }

    /// Integer numerator at `v` with squared norm `n`; `None` on overflow.
    pub fn numerator(&self, v: [i64; 3], n: u64) -> Option<i128> {
        let (x, y, z) = (v[0] as i128, v[1] as i128, v[2] as i128);
        let n = n as i128;
        let mut poly: i128 = 0;
        for &(pz, pn, coef) in &self.terms {
            let term = coef.checked_mul(z.checked_pow(pz)?)?.checked_mul(n.checked_pow(pn)?)?;
            poly = poly.checked_add(term)?;
        }
        let am = self.harmonic.m.unsigned_abs();
        let (mut re, mut im): (i128, i128) = (1, 0);
        for _ in 0..am {
            (re, im) = (
                re.checked_mul(x)?.checked_sub(im.checked_mul(y)?)?,
                re.checked_mul(y)?.checked_add(im.checked_mul(x)?)?,
            );
        }
        poly.checked_mul(if self.harmonic.m >= 0 { re } else { im })
    }

    /// Factor turning a numerator at norm `n` into `Y(v / sqrt n)`.
    pub fn scale(&self, n: u64) -> f64 {
        let l = self.harmonic.l as i32;
        self.harmonic.norm_factor() / (2f64.powi(l) * (n as f64).powf(l as f64 / 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Fibonacci lattice on the sphere: quasi-uniform, equal-area cells.
    fn fibonacci_sphere(n: usize) -> impl Iterator<Item = [f64; 3]> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n).map(move |i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
    }

    #[test]
    fn basic_values() {
        let y00 = SphHarmonic::new(0, 0).unwrap();
        assert_eq!(y00.eval([0.6, 0.0, 0.8]).unwrap(), 1.0);
        let y10 = SphHarmonic::new(1, 0).unwrap();
        assert!((y10.eval([0.0, 0.0, 1.0]).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(y10.eval([1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(SphHarmonic::new(2, 3).is_err());
        assert!(SphHarmonic::new(17, 0).is_err());
        assert!(matches!(y10.eval([1.0, 1.0, 0.0]), Err(Error::NotUnitVector(_))));
    }

    #[test]
    fn orthonormal_under_quadrature() {
        let n = 1_000_000;
        let y21 = SphHarmonic::new(2, 1).unwrap();
        let mean_sq = fibonacci_sphere(n).map(|u| y21.eval_unit(u).powi(2)).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() < 1e-3, "{mean_sq}");

        let pairs = [((3, -2), (3, -2)), ((2, 0), (4, 0)), ((2, 1), (2, -1)), ((4, 3), (4, 3)), ((1, 1), (3, 1))];
        for ((l1, m1), (l2, m2)) in pairs {
            let a = SphHarmonic::new(l1, m1).unwrap();
            let b = SphHarmonic::new(l2, m2).unwrap();
            let ip = fibonacci_sphere(200_000).map(|u| a.eval_unit(u) * b.eval_unit(u)).sum::<f64>() / 200_000.0;
            let expected = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
            assert!((ip - expected).abs() < 2e-3, "<{a},{b}> = {ip}");
        }
    }

    #[test]
    fn recurrence_matches_exact_polynomial() {
        let vs = [[1i64, 2, 3], [-4, 0, 7], [5, -5, 1], [0, 0, 9], [3, 4, 0], [-2, -7, -11]];
        for l in 0..=MAX_DEGREE {
            for m in -(l as i32)..=(l as i32) {
                let h = SphHarmonic::new(l, m).unwrap();
                let solid = SolidHarmonic::new(h);
                for v in vs {
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as u64;
                    let r = (n as f64).sqrt();
                    let u = v.map(|c| c as f64 / r);
                    let direct = h.eval_unit(u);
                    let exact = solid.numerator(v, n).unwrap() as f64 * solid.scale(n);
                    let tol = 1e-10 * h.sup_bound().max(1.0);
                    assert!((direct - exact).abs() < tol, "{h} at {v:?}: {direct} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn antipodal_parity_is_exact() {
        for l in 0..=8 {
            for m in -(l as i32)..=(l as i32) {
                let h = SphHarmonic::new(l, m).unwrap();
                for u in fibonacci_sphere(50) {
                    let s = h.eval_unit(u);
                    let t = h.eval_unit(u.map(|c| -c));
                    if l % 2 == 1 {
                        assert_eq!(s + t, 0.0);
                    } else {
                        assert_eq!(s, t);
                    }
                }
            }
        }
    }

    #[test]
    fn sup_bound_holds() {
        let h = SphHarmonic::new(4, 0).unwrap();
        let bound = h.sup_bound();
        assert!((bound / 1.01 - 3.0).abs() < 1e-9); // sqrt(9) at the poles
        assert!(fibonacci_sphere(10_000).all(|u| h.eval_unit(u).abs() <= bound));
    }
}
