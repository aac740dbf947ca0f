//! The orthogonal lattice Λ_v = Z³ ∩ v⊥ of a primitive vector: an oriented
//! basis, the completion vector w, the attached binary quadratic form, the
//! marked torus point of the orthogonal grid, and the projection lattice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, ext_gcd_i128, gcd3};
use crate::error::{Error, Result};
use crate::modsurf::{reduce_form, Unimodular};
use crate::sphere::PrimVec3;

pub type IVec3 = [i64; 3];

pub fn dot(a: IVec3, b: IVec3) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: IVec3, b: IVec3) -> IVec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Determinant of the matrix with columns `a`, `b`, `c`.
pub fn det3(a: IVec3, b: IVec3, c: IVec3) -> i64 {
    dot(cross(a, b), c)
}

fn lin(x: i64, a: IVec3, y: i64, b: IVec3) -> IVec3 {
    [x * a[0] + y * b[0], x * a[1] + y * b[1], x * a[2] + y * b[2]]
}

/// Integral binary quadratic form aX² + bXY + cY².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bqf {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Bqf {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        Bqf { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        let d = (self.b as i128) * (self.b as i128) - 4 * (self.a as i128) * (self.c as i128);
        d as i64
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    pub fn is_primitive(&self) -> bool {
        gcd3(self.a, self.b, self.c) == 1
    }

    /// |b| <= a <= c, with b >= 0 whenever |b| = a or a = c.
    pub fn is_reduced(&self) -> bool {
        let Bqf { a, b, c } = *self;
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn eval(&self, x: i64, y: i64) -> i128 {
        let (x, y) = (x as i128, y as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// The form `q(pX + qY, rX + sY)` for `m = [[p, q], [r, s]]`.
    pub fn transform(&self, m: &Unimodular) -> Bqf {
        let [[p, q], [r, s]] = m.entries;
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        let (p, q, r, s) = (p as i128, q as i128, r as i128, s as i128);
        let na = a * p * p + b * p * r + c * r * r;
        let nb = 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s;
        let nc = a * q * q + b * q * s + c * s * s;
        Bqf::new(na as i64, nb as i64, nc as i64)
    }
}

impl fmt::Display for Bqf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// An oriented basis `(v1, v2)` of Λ_v with `det(v1, v2, v) > 0`, and a
/// completion `w` with `<w, v> = 1`; the matrix with columns `v1, v2, w`
/// lies in SL₃(Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthoBasis {
    pub v: PrimVec3,
    pub v1: IVec3,
    pub v2: IVec3,
    pub w: IVec3,
}

impl OrthoBasis {
    pub fn check(&self) -> bool {
        let v = self.v.coords;
        dot(self.v1, v) == 0
            && dot(self.v2, v) == 0
            && dot(self.w, v) == 1
            && det3(self.v1, self.v2, self.w) == 1
            && det3(self.v1, self.v2, v) > 0
    }

    /// `(<v1,v1>, 2<v1,v2>, <v2,v2>)`, discriminant -4D.
    pub fn raw_gram(&self) -> Bqf {
        Bqf::new(dot(self.v1, self.v1), 2 * dot(self.v1, self.v2), dot(self.v2, self.v2))
    }

    /// The basis `(v1, v2) * m`, same `w`.
    pub fn rebased(&self, m: &Unimodular) -> OrthoBasis {
        let [[p, q], [r, s]] = m.entries;
        OrthoBasis { v1: lin(p, self.v1, r, self.v2), v2: lin(q, self.v1, s, self.v2), ..*self }
    }
}

/// Column reduction of the row vector `v` by unimodular 2×2 steps: the first
/// column ends up pairing to gcd = 1 with `v`, the other two pair to zero.
pub fn ortho_basis(v: &PrimVec3) -> OrthoBasis {
    let mut cols: [IVec3; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let mut vals = v.coords;

    for j in [1, 2] {
        let (a, b) = (vals[0], vals[j]);
        if a == 0 && b == 0 {
            continue;
        }
        let (g, x, y) = ext_gcd(a, b);
        let (ci, cj) = (cols[0], cols[j]);
        cols[0] = lin(x, ci, y, cj);
        cols[j] = lin(b / g, ci, -(a / g), cj);
        vals[0] = g;
        vals[j] = 0;
    }
    debug_assert_eq!(vals[0], 1, "input must be primitive");

    let (mut v1, mut v2, w) = (cols[1], cols[2], cols[0]);
    if det3(v1, v2, w) < 0 {
        std::mem::swap(&mut v1, &mut v2);
    }
    OrthoBasis { v: *v, v1, v2, w }
}

/// The form of Λ_v with respect to [`ortho_basis`]: the Gram form itself
/// (discriminant -4D) when D = 1, 2 mod 4, and half of it (discriminant -D)
/// when D = 3 mod 4. Odd outer coefficients in the latter case are reported,
/// never patched.
pub fn gram_form(v: &PrimVec3) -> Result<Bqf> {
    gram_form_of(&ortho_basis(v))
}

pub fn gram_form_of(basis: &OrthoBasis) -> Result<Bqf> {
    let raw = basis.raw_gram();
    match basis.v.norm % 4 {
        1 | 2 => Ok(raw),
        3 => {
            if raw.a % 2 != 0 || raw.c % 2 != 0 {
                return Err(Error::HalvingParity { v: basis.v.coords, a: raw.a, b: raw.b, c: raw.c });
            }
            Ok(Bqf::new(raw.a / 2, raw.b / 2, raw.c / 2))
        }
        _ => Err(Error::NotPrimitive(basis.v.coords)),
    }
}

/// An integer `u` with `v × u = w`, following the divisibility argument:
/// with `v = (a, b, c)`, `c != 0`, pick `t` with `c | f - bt` and
/// `c | g + at`, then `s = (bt - f)/c`, `r = (g + at)/c`.
pub fn solve_cross(v: &PrimVec3, w: IVec3) -> Result<IVec3> {
    if dot(v.coords, w) != 0 {
        return Err(Error::NotOrthogonal { v: v.coords, w });
    }
    // cyclic shifts commute with the cross product
    let shift = (0..3).find(|&k| v.coords[(2 + k) % 3] != 0).expect("nonzero vector");
    let rot = |x: IVec3| [x[shift % 3], x[(1 + shift) % 3], x[(2 + shift) % 3]];
    let [a, b, c] = rot(v.coords).map(|x| x as i128);
    let [f, g, _h] = rot(w).map(|x| x as i128);

    // b t = f (mod c)
    let (gb, x, _) = ext_gcd_i128(b, c);
    debug_assert_eq!(f % gb, 0);
    let m = c / gb;
    let t0 = (x * (f / gb)).rem_euclid(m.abs());
    // g + a t0 = m q; need q + a k = 0 (mod gb) for t = t0 + k m
    let q = (g + a * t0) / m;
    let k = if gb.abs() == 1 {
        0
    } else {
        let (one, ainv, _) = ext_gcd_i128(a, gb);
        debug_assert_eq!(one, 1);
        (-q * ainv).rem_euclid(gb.abs())
    };
    let t = t0 + k * m;
    let s = (b * t - f) / c;
    let r = (g + a * t) / c;
    debug_assert_eq!((b * t - f) % c, 0);
    debug_assert_eq!((g + a * t) % c, 0);

    let u = [r, s, t].map(|x| x as i64);
    // undo the shift
    let mut out = [0i64; 3];
    for i in 0..3 {
        out[(i + shift) % 3] = u[i];
    }
    Ok(out)
}

/// Shape of the orthogonal grid: the reduced form of Λ_v and the marked
/// torus point `num / den` (mod 1) in the basis realising that form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub shape: Bqf,
    pub num: [i64; 2],
    pub den: i64,
}

impl GridPoint {
    pub fn t(&self) -> [f64; 2] {
        self.num.map(|n| n as f64 / self.den as f64)
    }
}

/// Proper automorphs of a reduced positive definite form.
pub fn automorphs(q: &Bqf) -> Vec<Unimodular> {
    let mut out = vec![Unimodular::IDENTITY, Unimodular::new([[-1, 0], [0, -1]])];
    if q.b == 0 && q.a == q.c {
        out.push(Unimodular::new([[0, -1], [1, 0]]));
        out.push(Unimodular::new([[0, 1], [-1, 0]]));
    } else if q.a == q.b && q.b == q.c {
        let r = Unimodular::new([[0, -1], [1, 1]]);
        let mut p = r;
        for _ in 0..4 {
            out.push(p);
            p = p.mul(&r);
        }
    }
    out
}

pub fn grid_point(v: &PrimVec3) -> Result<GridPoint> {
    grid_point_of(&ortho_basis(v))
}

/// The orthogonal projection `w - v/D` in coordinates of `(v1, v2)` is
/// `G⁻¹ (<w,v1>, <w,v2>)` with `det G = D`; that vector is transported to
/// the reduced basis and minimised over the automorphs.
pub fn grid_point_of(basis: &OrthoBasis) -> Result<GridPoint> {
    let d = basis.v.norm as i128;
    let (a, b, c) = (
        dot(basis.v1, basis.v1) as i128,
        dot(basis.v1, basis.v2) as i128,
        dot(basis.v2, basis.v2) as i128,
    );
    debug_assert_eq!(a * c - b * b, d);
    let (p1, p2) = (dot(basis.w, basis.v1) as i128, dot(basis.w, basis.v2) as i128);
    let s = [(c * p1 - b * p2).rem_euclid(d), (a * p2 - b * p1).rem_euclid(d)];

    let q = gram_form_of(basis)?;
    let (shape, m) = reduce_form(&q)?;
    let move_by = |u: &Unimodular, s: [i128; 2]| -> [i128; 2] {
        // coordinates change by the inverse of the basis change
        let [[p, q], [r, t]] = u.entries.map(|row| row.map(|x| x as i128));
        [(t * s[0] - q * s[1]).rem_euclid(d), (-r * s[0] + p * s[1]).rem_euclid(d)]
    };
    let s = move_by(&m, s);
    let best = automorphs(&shape).iter().map(|au| move_by(au, s)).min().expect("identity");
    Ok(GridPoint { shape, num: best.map(|x| x as i64), den: d as i64 })
}

/// Row-style Hermite reduction of integer vectors; returns the nonzero rows.
pub fn hermite_rows(rows: &[IVec3]) -> Vec<IVec3> {
    let mut m: Vec<[i128; 3]> = rows.iter().map(|r| r.map(|x| x as i128)).collect();
    let mut pivot_row = 0;
    for col in 0..3 {
        if pivot_row >= m.len() {
            break;
        }
        for i in pivot_row + 1..m.len() {
            let (a, b) = (m[pivot_row][col], m[i][col]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd_i128(a, b);
            let (ra, rb) = (m[pivot_row], m[i]);
            for k in 0..3 {
                m[pivot_row][k] = x * ra[k] + y * rb[k];
                m[i][k] = (b / g) * ra[k] - (a / g) * rb[k];
            }
        }
        if m[pivot_row][col] != 0 {
            pivot_row += 1;
        }
    }
    m.into_iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .map(|r| r.map(|x| x as i64))
        .collect()
}

/// Gram form of the projection of Z³ to v⊥, scaled by D. The lattice is
/// generated by `D e_i - v_i v` (projections scaled by D), so its Gram
/// matrix divided by D is the scaled projection Gram matrix. Oriented so
/// that `det(p1, p2, v) > 0`.
pub fn projection_form(v: &PrimVec3) -> Bqf {
    let d = v.norm as i64;
    let gens: Vec<IVec3> = (0..3)
        .map(|i| {
            let mut e = [0i64; 3];
            e[i] = d;
            [e[0] - v.coords[i] * v.coords[0], e[1] - v.coords[i] * v.coords[1], e[2] - v.coords[i] * v.coords[2]]
        })
        .collect();
    let basis = hermite_rows(&gens);
    assert_eq!(basis.len(), 2, "projection lattice has rank 2");
    let (mut p1, mut p2) = (basis[0], basis[1]);
    if det3(p1, p2, v.coords) < 0 {
        std::mem::swap(&mut p1, &mut p2);
    }
    let (g11, g12, g22) = (dot(p1, p1), dot(p1, p2), dot(p2, p2));
    debug_assert!(g11 % d == 0 && g12 % d == 0 && g22 % d == 0);
    Bqf::new(g11 / d, 2 * g12 / d, g22 / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::enumerate_sphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pv(c: IVec3) -> PrimVec3 {
        PrimVec3::new(c).unwrap()
    }

    fn brute_cross(v: IVec3, w: IVec3) -> Option<IVec3> {
        for x in -6..=6 {
            for y in -6..=6 {
                for z in -6..=6 {
                    if cross(v, [x, y, z]) == w {
                        return Some([x, y, z]);
                    }
                }
            }
        }
        None
    }

    fn random_sl2(rng: &mut ChaCha8Rng) -> Unimodular {
        let mut m = Unimodular::IDENTITY;
        for _ in 0..rng.gen_range(0..6) {
            let k = rng.gen_range(-3..=3);
            let step = if rng.gen_bool(0.5) {
                Unimodular::new([[1, k], [0, 1]])
            } else {
                Unimodular::new([[1, 0], [k, 1]])
            };
            m = m.mul(&step);
        }
        m
    }

    #[test]
    fn basis_examples() {
        let b = ortho_basis(&pv([0, 0, 1]));
        assert_eq!((b.v1, b.v2, b.w), ([1, 0, 0], [0, 1, 0], [0, 0, 1]));
        for c in [[1, 1, 1], [2, 1, 0], [0, 0, -1], [3, -5, 7]] {
            let b = ortho_basis(&pv(c));
            assert!(b.check(), "{c:?}: {b:?}");
        }
        let b = ortho_basis(&pv([1, 1, 1]));
        assert_eq!(b.w.iter().sum::<i64>(), 1);
    }

    #[test]
    fn basis_invariants_and_index_identity() {
        for d in 1..=600u64 {
            for v in enumerate_sphere(d) {
                let b = ortho_basis(&v);
                assert!(b.check(), "{v}");
                assert_eq!(det3(b.v1, b.v2, v.coords), d as i64);
            }
        }
    }

    #[test]
    fn gram_examples() {
        let v = pv([1, 1, 1]);
        let b = OrthoBasis { v, v1: [1, -1, 0], v2: [0, 1, -1], w: [0, 0, 1] };
        assert_eq!(b.raw_gram(), Bqf::new(2, -2, 2));
        assert_eq!(gram_form_of(&b).unwrap(), Bqf::new(1, -1, 1));
        assert_eq!(gram_form_of(&b).unwrap().disc(), -3);

        let q = gram_form(&pv([2, 1, 0])).unwrap();
        assert_eq!(q.disc(), -20);
        assert_eq!(reduce_form(&q).unwrap().0, Bqf::new(1, 0, 5));
    }

    #[test]
    fn halving_parity_is_reported() {
        // a fake basis with odd outer coefficients for a D = 3 mod 4 vector
        let v = pv([1, 1, 1]);
        let b = OrthoBasis { v, v1: [1, 0, 0], v2: [0, 1, -1], w: [0, 0, 1] };
        assert!(matches!(gram_form_of(&b), Err(Error::HalvingParity { .. })));
    }

    #[test]
    fn gram_discriminants() {
        for d in 1..=800u64 {
            for v in enumerate_sphere(d) {
                let q = gram_form(&v).unwrap();
                let expected = if d % 4 == 3 { -(d as i64) } else { -4 * d as i64 };
                assert_eq!(q.disc(), expected, "{v}");
                assert!(q.is_positive_definite());
                if crate::arith::is_squarefree(d) {
                    assert!(q.is_primitive(), "{v}: {q}");
                }
            }
        }
    }

    #[test]
    fn cross_examples() {
        assert_eq!(solve_cross(&pv([0, 0, 1]), [1, 0, 0]).unwrap(), [0, -1, 0]);
        for (v, w) in [([1, 1, 1], [1, -1, 0]), ([2, 1, 0], [0, 0, 1])] {
            let u = solve_cross(&pv(v), w).unwrap();
            assert_eq!(cross(v, u), w);
            assert!(brute_cross(v, w).is_some());
        }
        assert!(solve_cross(&pv([1, 1, 1]), [1, 0, 0]).is_err());
    }

    #[test]
    fn cross_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        while done < 10_000 {
            let c = [0; 3].map(|_| rng.gen_range(-50i64..=50));
            let Ok(v) = PrimVec3::new(c) else { continue };
            let b = ortho_basis(&v);
            let (x, y) = (rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            let w = lin(x, b.v1, y, b.v2);
            let u = solve_cross(&v, w).unwrap();
            assert_eq!(cross(v.coords, u), w);
            done += 1;
        }
    }

    #[test]
    fn intersection_is_cross_of_projection() {
        // Gram of {v × e_i} reduced to a rank-2 basis equals the Gram of Λ_v
        for d in 1..=300u64 {
            for v in enumerate_sphere(d) {
                let gens: Vec<IVec3> = (0..3)
                    .map(|i| {
                        let mut e = [0; 3];
                        e[i] = 1;
                        cross(v.coords, e)
                    })
                    .collect();
                let rows = hermite_rows(&gens);
                assert_eq!(rows.len(), 2);
                let (mut p1, mut p2) = (rows[0], rows[1]);
                if det3(p1, p2, v.coords) < 0 {
                    std::mem::swap(&mut p1, &mut p2);
                }
                let q = Bqf::new(dot(p1, p1), 2 * dot(p1, p2), dot(p2, p2));
                let raw = ortho_basis(&v).raw_gram();
                assert_eq!(reduce_form(&q).unwrap().0, reduce_form(&raw).unwrap().0, "{v}");
            }
        }
    }

    #[test]
    fn projection_examples() {
        assert_eq!(reduce_form(&projection_form(&pv([0, 0, 1]))).unwrap().0, Bqf::new(1, 0, 1));
        for c in [[1, 1, 1], [2, 1, 0]] {
            let v = pv(c);
            let p = projection_form(&v);
            assert_eq!(p.disc(), -4 * v.norm as i64);
            let raw = ortho_basis(&v).raw_gram();
            assert_eq!(reduce_form(&p).unwrap().0, reduce_form(&raw).unwrap().0);
        }
    }

    #[test]
    fn grid_examples() {
        let g = grid_point(&pv([0, 0, 1])).unwrap();
        assert_eq!((g.num, g.den), ([0, 0], 1));
        let g = grid_point(&pv([1, 1, 1])).unwrap();
        assert_eq!(g.den, 3);
        assert_eq!(g.shape, Bqf::new(1, 1, 1));
    }

    #[test]
    fn grid_point_is_choice_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=400u64 {
            for v in enumerate_sphere(d) {
                let base = ortho_basis(&v);
                let g0 = grid_point_of(&base).unwrap();
                for _ in 0..3 {
                    let (x, y) = (rng.gen_range(-5..=5), rng.gen_range(-5..=5));
                    let shifted = OrthoBasis { w: lin(1, base.w, 1, lin(x, base.v1, y, base.v2)), ..base };
                    let alt = shifted.rebased(&random_sl2(&mut rng));
                    assert!(alt.check());
                    assert_eq!(grid_point_of(&alt).unwrap(), g0, "{v}");
                }
            }
        }
    }

    #[test]
    fn automorphs_fix_the_form() {
        for q in [Bqf::new(1, 0, 1), Bqf::new(1, 1, 1), Bqf::new(2, 2, 3), Bqf::new(2, 0, 2)] {
            let auts = automorphs(&q);
            for m in &auts {
                assert_eq!(q.transform(m), q);
            }
        }
        assert_eq!(automorphs(&Bqf::new(1, 1, 1)).len(), 6);
        assert_eq!(automorphs(&Bqf::new(1, 0, 1)).len(), 4);
    }
}
