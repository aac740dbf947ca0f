//! The modular surface SL₂(Z)\H: roots of forms, reduction of points and
//! forms into the standard fundamental domain, and the comparison between
//! the rotated orthogonal lattice and the root of its Gram form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho::{ortho_basis, Bqf, OrthoBasis};
use crate::sphere::PrimVec3;

/// Boundary tolerance for float reduction.
const BOUNDARY_EPS: f64 = 1e-11;

/// Default tolerance for the lattice/form comparison.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An element of SL₂(Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unimodular {
    pub entries: [[i64; 2]; 2],
}

impl Unimodular {
    pub const IDENTITY: Unimodular = Unimodular { entries: [[1, 0], [0, 1]] };
    pub const S: Unimodular = Unimodular { entries: [[0, -1], [1, 0]] };

    pub fn new(entries: [[i64; 2]; 2]) -> Self {
        let u = Unimodular { entries };
        assert_eq!(u.det(), 1, "not in SL2(Z): {entries:?}");
        u
    }

    pub fn translation(k: i64) -> Self {
        Unimodular { entries: [[1, k], [0, 1]] }
    }

    pub fn det(&self) -> i64 {
        let [[p, q], [r, s]] = self.entries;
        p * s - q * r
    }

    pub fn mul(&self, other: &Unimodular) -> Unimodular {
        let [[a, b], [c, d]] = self.entries;
        let [[e, f], [g, h]] = other.entries;
        Unimodular { entries: [[a * e + b * g, a * f + b * h], [c * e + d * g, c * f + d * h]] }
    }

    pub fn inverse(&self) -> Unimodular {
        let [[p, q], [r, s]] = self.entries;
        Unimodular { entries: [[s, -q], [-r, p]] }
    }

    /// Möbius action `(pz + q) / (rz + s)`.
    pub fn act(&self, z: HPoint) -> HPoint {
        let [[p, q], [r, s]] = self.entries.map(|row| row.map(|x| x as f64));
        let (x, y) = mobius(p, q, r, s, z.x, z.y);
        HPoint { x, y, reduced: false }
    }
}

fn mobius(p: f64, q: f64, r: f64, s: f64, x: f64, y: f64) -> (f64, f64) {
    // (p z + q)(r z̄ + s) / |r z + s|²
    let (dx, dy) = (r * x + s, r * y);
    let den = dx * dx + dy * dy;
    let (nx, ny) = (p * x + q, p * y);
    ((nx * dx + ny * dy) / den, (ny * dx - nx * dy) / den)
}

/// A point of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub reduced: bool,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Self {
        assert!(y > 0.0, "point must lie in the upper half plane");
        HPoint { x, y, reduced: false }
    }

    pub const I: HPoint = HPoint { x: 0.0, y: 1.0, reduced: true };

    /// Membership in the fundamental domain with the boundary convention:
    /// -1/2 <= x < 1/2, |z| >= 1, and x <= 0 on the unit circle.
    pub fn in_fundamental_domain(&self, eps: f64) -> bool {
        let r2 = self.x * self.x + self.y * self.y;
        self.x >= -0.5 - eps
            && self.x < 0.5 - eps
            && r2 >= 1.0 - eps
            && !((r2 - 1.0).abs() <= eps && self.x > eps)
    }
}

/// The root of q(X, 1) in H: `(-b + i sqrt|disc|) / 2a`.
pub fn form_root(q: &Bqf) -> Result<HPoint> {
    if !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(*q));
    }
    let two_a = 2.0 * q.a as f64;
    Ok(HPoint {
        x: -(q.b as f64) / two_a,
        y: (-(q.disc() as f64)).sqrt() / two_a,
        reduced: q.is_reduced(),
    })
}

/// Reduces `z` into the fundamental domain; returns the reduced point and
/// the element `W` with `W·z` equal to it.
pub fn reduce_point(z: HPoint) -> (HPoint, Unimodular) {
    assert!(z.y > 0.0);
    let (mut x, mut y) = (z.x, z.y);
    let mut word = Unimodular::IDENTITY;
    loop {
        let mut k = x.round();
        if x - k >= 0.5 - BOUNDARY_EPS {
            k += 1.0;
        }
        if k != 0.0 {
            x -= k;
            word = Unimodular::translation(-(k as i64)).mul(&word);
        }
        let r2 = x * x + y * y;
        if r2 < 1.0 - BOUNDARY_EPS {
            (x, y) = (-x / r2, y / r2);
            word = Unimodular::S.mul(&word);
            continue;
        }
        if (r2 - 1.0).abs() <= BOUNDARY_EPS && x > BOUNDARY_EPS {
            (x, y) = (-x / r2, y / r2);
            word = Unimodular::S.mul(&word);
        }
        break;
    }
    (HPoint { x, y, reduced: true }, word)
}

/// Reduces a positive definite form; returns `(r, M)` with `r = q∘M`
/// reduced in the sense of [`Bqf::is_reduced`].
pub fn reduce_form(q: &Bqf) -> Result<(Bqf, Unimodular)> {
    if !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(*q));
    }
    let (mut a, mut b, mut c) = (q.a as i128, q.b as i128, q.c as i128);
    let mut m = [[1i128, 0], [0, 1]];
    let right = |m: [[i128; 2]; 2], s: [[i128; 2]; 2]| {
        [
            [m[0][0] * s[0][0] + m[0][1] * s[1][0], m[0][0] * s[0][1] + m[0][1] * s[1][1]],
            [m[1][0] * s[0][0] + m[1][1] * s[1][0], m[1][0] * s[0][1] + m[1][1] * s[1][1]],
        ]
    };
    loop {
        if !(-a < b && b <= a) {
            let k = (a - b).div_euclid(2 * a);
            (b, c) = (b + 2 * a * k, a * k * k + b * k + c);
            m = right(m, [[1, k], [0, 1]]);
        }
        if a > c {
            (a, b, c) = (c, -b, a);
            m = right(m, [[0, -1], [1, 0]]);
            continue;
        }
        break;
    }
    if a == c && b < 0 {
        (a, b, c) = (c, -b, a);
        m = right(m, [[0, -1], [1, 0]]);
    }
    let to64 = |x: i128| i64::try_from(x).map_err(|_| Error::Overflow("form reduction"));
    let entries = [[to64(m[0][0])?, to64(m[0][1])?], [to64(m[1][0])?, to64(m[1][1])?]];
    Ok((Bqf::new(to64(a)?, to64(b)?, to64(c)?), Unimodular { entries }))
}

/// The reduced root of a positive definite form, computed through exact
/// form reduction.
pub fn reduced_root(q: &Bqf) -> Result<HPoint> {
    let (r, _) = reduce_form(q)?;
    form_root(&r)
}

/// Hyperbolic distance in H.
pub fn hyperbolic_distance(z: HPoint, w: HPoint) -> f64 {
    let e = ((z.x - w.x).powi(2) + (z.y - w.y).powi(2)).sqrt();
    2.0 * (e / (2.0 * (z.y * w.y).sqrt())).asinh()
}

pub type Mat3 = [[f64; 3]; 3];

fn fdot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = fdot(a, a).sqrt();
    a.map(|x| x / n)
}

pub fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [fdot(m[0], v), fdot(m[1], v), fdot(m[2], v)]
}

/// A rotation `k` in SO₃(R) with `k·v = |v| e₃`: Gram–Schmidt on
/// `v1, v2` of the oriented orthogonal basis, with `v/|v|` as last row.
pub fn rotation_to_e3(v: &PrimVec3) -> Mat3 {
    rotation_from_basis(&ortho_basis(v))
}

pub fn rotation_from_basis(basis: &OrthoBasis) -> Mat3 {
    let f = |x: [i64; 3]| x.map(|c| c as f64);
    let e3 = normalize(f(basis.v.coords));
    let f1 = normalize(f(basis.v1));
    let v2 = f(basis.v2);
    let proj = fdot(v2, f1);
    let f2 = normalize([v2[0] - proj * f1[0], v2[1] - proj * f1[1], v2[2] - proj * f1[2]]);
    [f1, f2, e3]
}

/// `N_v = [[α, β], [γ, δ]]`: columns are the first two entries of
/// `k v1` and `k v2`.
pub fn lattice_matrix(basis: &OrthoBasis) -> [[f64; 2]; 2] {
    let k = rotation_from_basis(basis);
    let kv1 = mat_vec(&k, basis.v1.map(|c| c as f64));
    let kv2 = mat_vec(&k, basis.v2.map(|c| c as f64));
    [[kv1[0], kv2[0]], [kv1[1], kv2[1]]]
}

/// `N_v⁻¹ · i = (δ i - β) / (-γ i + α)`, unreduced.
pub fn lattice_point(basis: &OrthoBasis) -> HPoint {
    let [[alpha, beta], [gamma, delta]] = lattice_matrix(basis);
    let (x, y) = mobius(delta, -beta, -gamma, alpha, 0.0, 1.0);
    HPoint { x, y, reduced: false }
}

/// Hyperbolic distance between the reduced shape of the rotated lattice
/// `k_v Λ_v` and the reduced root of the Gram form of Λ_v. Mismatches of at
/// least `tol` are returned as errors carrying both points.
pub fn heegner_identity_check(v: &PrimVec3, tol: f64) -> Result<f64> {
    let basis = ortho_basis(v);
    let (lattice, _) = reduce_point(lattice_point(&basis));
    let form = reduced_root(&basis.raw_gram())?;
    let residual = hyperbolic_distance(lattice, form);
    if residual.is_nan() || residual >= tol {
        return Err(Error::HeegnerMismatch {
            v: v.coords,
            lattice_x: lattice.x,
            lattice_y: lattice.y,
            form_x: form.x,
            form_y: form.y,
            residual,
        });
    }
    Ok(residual)
}
