//! Coefficients of the Eisenstein series for the maximal parabolic of SL₃
//! at the identity, computed through unimodular completion and the Iwasawa
//! decomposition, and their comparison with the Weyl sums.
//!
//! For a primitive `v` with `|v|² = n`, a completion `γ ∈ SL₃(Z)` with last
//! row `v` decomposes as `γ = m·a·n·k`. The last row of `k` is `v/|v|`, the
//! scalar `a` is `|v|`, and the block `m ∈ SL₂(R)` carries the shape of the
//! lattice spanned by the first two rows modulo `Zv`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::ext_gcd;
use crate::error::{Error, Result};
use crate::modsurf::{hyperbolic_distance, reduce_form, reduce_point, HPoint, Mat3};
use crate::ortho::{ortho_basis, projection_form, IVec3};
use crate::sphere::{enumerate_sphere, orbit_representatives, signed_permutations, PrimVec3};
use crate::weyl::{weyl_sum, SolidHarmonic, SphHarmonic, SurfaceTestFn};

pub type IMat3 = [[i64; 3]; 3];

fn det3i(m: &IMat3) -> i128 {
    let e = |i: usize, j: usize| m[i][j] as i128;
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

fn adjugate(m: &IMat3) -> IMat3 {
    let mut out = [[0i64; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *x = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        }
    }
    out
}

/// A matrix in SL₃(Z) whose last row is the primitive vector `v`.
///
/// Column operations reduce `v` to `e₃` (`vᵀ U = e₃ᵀ`, U unimodular), and the
/// completion is `U⁻¹`; its last row is `vᵀ`.
pub fn complete_to_unimodular(v: &PrimVec3) -> IMat3 {
    let mut cols: [IVec3; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let mut vals = v.coords;
    for j in [1usize, 0] {
        let (a, b) = (vals[2], vals[j]);
        if b == 0 {
            continue;
        }
        let (g, x, y) = ext_gcd(a, b);
        let (cp, cj) = (cols[2], cols[j]);
        cols[2] = std::array::from_fn(|i| x * cp[i] + y * cj[i]);
        cols[j] = std::array::from_fn(|i| (a / g) * cj[i] - (b / g) * cp[i]);
        vals[2] = g;
        vals[j] = 0;
    }
    if vals[2] < 0 {
        cols[2] = cols[2].map(|c| -c);
        cols[0] = cols[0].map(|c| -c);
    }
    let mut u: IMat3 = std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]));
    if det3i(&u) < 0 {
        // column 0 is annihilated by v, so flipping it keeps vᵀ U = e₃ᵀ
        for row in u.iter_mut() {
            row[0] = -row[0];
        }
    }
    reduce_completion(adjugate(&u))
}

/// Shortens the first two rows without leaving the coset `Γ∞ γ`: Lagrange
/// reduction of their projections orthogonal to `v`, then removal of the
/// nearest multiple of `v` from each row. Keeps the floating-point Iwasawa
/// decomposition well conditioned.
fn reduce_completion(g: IMat3) -> IMat3 {
    let v = g[2].map(|x| x as i128);
    let n: i128 = v.iter().map(|x| x * x).sum();
    let dot = |a: [i128; 3], b: [i128; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    // n² times the inner product of the projections
    let ip = |a: [i128; 3], b: [i128; 3]| n * dot(a, b) - dot(a, v) * dot(b, v);
    let mut r1 = g[0].map(|x| x as i128);
    let mut r2 = g[1].map(|x| x as i128);
    loop {
        let (g11, g12) = (ip(r1, r1), ip(r1, r2));
        let mu = (2 * g12 + g11).div_euclid(2 * g11);
        r2 = std::array::from_fn(|i| r2[i] - mu * r1[i]);
        if ip(r2, r2) < g11 {
            (r1, r2) = (r2.map(|x| -x), r1);
        } else {
            break;
        }
    }
    // the shortest vector goes last, so the m-block point is nearly reduced
    if ip(r2, r2) > ip(r1, r1) {
        (r1, r2) = (r2, r1.map(|x| -x));
    }
    let shorten = |r: [i128; 3]| -> [i64; 3] {
        let k = (2 * dot(r, v) + n).div_euclid(2 * n);
        std::array::from_fn(|i| (r[i] - k * v[i]) as i64)
    };
    [shorten(r1), shorten(r2), g[2]]
}

/// `g = m·a·n·k` with respect to the parabolic fixing the last row direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaParts {
    /// In SL₂(R), upper triangular with positive diagonal.
    pub m_block: [[f64; 2]; 2],
    /// Length of the last row of `g`.
    pub a_scalar: f64,
    /// Upper-right column of the unipotent part.
    pub n_vec: [f64; 2],
    /// Rows form a right-handed orthonormal frame.
    pub k: Mat3,
}

impl IwasawaParts {
    pub fn k_bottom_row(&self) -> [f64; 3] {
        self.k[2]
    }

    /// `m·a·n·k` with `m` block-diagonal `(m_block, 1)`,
    /// `a = diag(a^{-1/2}, a^{-1/2}, a)` and `n = [[I, n_vec], [0, 1]]`.
    pub fn reconstruct(&self) -> Mat3 {
        let s = self.a_scalar.sqrt().recip();
        let b = self.m_block.map(|r| r.map(|x| x * s));
        let top_right = [
            b[0][0] * self.n_vec[0] + b[0][1] * self.n_vec[1],
            b[1][0] * self.n_vec[0] + b[1][1] * self.n_vec[1],
        ];
        let p = [[b[0][0], b[0][1], top_right[0]], [b[1][0], b[1][1], top_right[1]], [0.0, 0.0, self.a_scalar]];
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = (0..3).map(|l| p[i][l] * self.k[l][j]).sum();
            }
        }
        g
    }

    /// The point of the modular surface carried by the m-block.
    pub fn surface_point(&self, convention: MBlockConvention) -> HPoint {
        let [[p, q], [r, s]] = match convention {
            MBlockConvention::Direct => self.m_block,
            MBlockConvention::Inverse => {
                let [[p, q], [r, s]] = self.m_block;
                [[s, -q], [-r, p]]
            }
        };
        // (p i + q) / (r i + s)
        let den = r * r + s * s;
        let z = HPoint::new((q * s + p * r) / den, (p * s - q * r) / den);
        reduce_point(z).0
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn det3f(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Iwasawa decomposition of `g ∈ SL₃(R)`: the rows of `g` are
/// orthonormalised bottom-up to give `k`, leaving the triangular factor
/// `g kᵀ`.
///
/// Every quantity is written through unnormalised dot products and
/// determinants of the rows, which are exact for integer matrices of
/// moderate size, so only the final square roots and quotients round.
pub fn iwasawa(g: &Mat3) -> Result<IwasawaParts> {
    let det = det3f(g);
    let scale = g.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max).powi(3);
    if !det.is_finite() || (det - 1.0).abs() > 1e-10 * scale {
        return Err(Error::NearSingular(det));
    }
    let [g1, g2, g3] = *g;
    let nn = dot(g3, g3);
    let a_scalar = nn.sqrt();
    // w = |g3|² g2 - <g2,g3> g3 is orthogonal to g3
    let c = dot(g2, g3);
    let w: [f64; 3] = std::array::from_fn(|i| nn * g2[i] - c * g3[i]);
    let wn = dot(w, w).sqrt();
    if !(wn > 0.0) {
        return Err(Error::NearSingular(det));
    }
    let k3 = g3.map(|x| x / a_scalar);
    let k2 = w.map(|x| x / wn);
    let wx = [w[1] * g3[2] - w[2] * g3[1], w[2] * g3[0] - w[0] * g3[2], w[0] * g3[1] - w[1] * g3[0]];
    let k1 = wx.map(|x| x / (wn * a_scalar));
    let k = [k1, k2, k3];
    // g kᵀ = [[B, B n], [0, a]] with B upper triangular and det B = 1/a
    let b00 = det3f(&[g1, w, g3]) / (wn * a_scalar);
    let b01 = dot(g1, w) / wn;
    let b11 = dot(g2, w) / wn;
    let top_right = [dot(g1, g3) / a_scalar, dot(g2, g3) / a_scalar];
    let n1 = top_right[1] / b11;
    let n0 = (top_right[0] - b01 * n1) / b00;
    let s = a_scalar.sqrt();
    Ok(IwasawaParts { m_block: [[b00 * s, b01 * s], [0.0, b11 * s]], a_scalar, n_vec: [n0, n1], k })
}

/// How the m-block is sent to the modular surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MBlockConvention {
    /// `m · i`, invariant under left multiplication by the integral
    /// parabolic subgroup.
    Direct,
    /// `m⁻¹ · i`.
    Inverse,
}

/// The convention in use: `m · i` agrees with the Weyl-sum Heegner point
/// and is well defined on cosets, while `m⁻¹ · i` is neither.
pub const M_BLOCK_CONVENTION: MBlockConvention = MBlockConvention::Direct;

fn to_f64(m: &IMat3) -> Mat3 {
    m.map(|r| r.map(|x| x as f64))
}

/// `a_n = Σ ω(k(γ)) φ(m(γ))` over cosets, one completion per primitive
/// vector of squared norm `n`.
pub fn coefficient_a_n(n: u64, omega: &SphHarmonic, phi: &SurfaceTestFn, convention: MBlockConvention) -> Result<f64> {
    let mut sum = 0.0;
    for v in enumerate_sphere(n) {
        let parts = iwasawa(&to_f64(&complete_to_unimodular(&v)))?;
        let w = omega.eval_unit(parts.k_bottom_row());
        let f = if phi.is_constant() { 1.0 } else { phi.eval(parts.surface_point(convention)) };
        sum += w * f;
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub n: u64,
    pub omega_id: String,
    pub phi_id: String,
    pub a_n_eisenstein: f64,
    pub a_n_weyl: f64,
    pub abs_gap: f64,
}

/// A completion whose coset-invariants disagree with the reference one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceFailure {
    pub v: [i64; 3],
    pub completion: IMat3,
    pub other: IMat3,
    pub point: [f64; 2],
    pub other_point: [f64; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCheckReport {
    pub rows: Vec<CoefficientRow>,
    pub max_gap: f64,
    /// Largest change of the m-block point, `a`, or `ω(k)` over re-chosen
    /// completions.
    pub max_invariance_residual: f64,
    pub invariance_failures: Vec<InvarianceFailure>,
    /// Vectors whose projection lattice and orthogonal lattice have
    /// different shapes.
    pub projection_mismatches: Vec<[i64; 3]>,
    pub vectors_checked: usize,
}

/// Small deterministic element of the integral parabolic subgroup:
/// `[[A, t], [0, 1]]` with `A` a word in SL₂(Z) generators.
fn parabolic_element(seed: u64) -> IMat3 {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut a: [[i64; 2]; 2] = [[1, 0], [0, 1]];
    for _ in 0..(2 + next() % 4) {
        let k = (next() % 5) as i64 - 2;
        a = if next() % 2 == 0 {
            [[a[0][0] + k * a[1][0], a[0][1] + k * a[1][1]], a[1]] // T^k · a
        } else {
            [[-a[1][0], -a[1][1]], a[0]] // S · a
        };
    }
    let t0 = (next() % 7) as i64 - 3;
    let t1 = (next() % 7) as i64 - 3;
    [[a[0][0], a[0][1], t0], [a[1][0], a[1][1], t1], [0, 0, 1]]
}

fn mat_mul_i(a: &IMat3, b: &IMat3) -> IMat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|l| a[i][l] * b[l][j]).sum()))
}

/// Checks `a_n` from the coset sum against the Weyl sum for every `n` up to
/// `n_max` and every battery pair, together with the independence of the
/// coset invariants from the chosen completion and the agreement of the
/// projection lattice with the orthogonal lattice. `seed` selects the
/// parabolic elements used to re-choose completions.
pub fn coefficient_identity_check(
    n_max: u64,
    battery: &[(SphHarmonic, SurfaceTestFn)],
    tol: f64,
    seed: u64,
) -> Result<CoefficientCheckReport> {
    let rows: Vec<CoefficientRow> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            battery
                .iter()
                .map(|(omega, phi)| {
                    let e = coefficient_a_n(n, omega, phi, M_BLOCK_CONVENTION)?;
                    let w = weyl_sum(n, omega, phi)?.sum;
                    Ok(CoefficientRow {
                        n,
                        omega_id: omega.id(),
                        phi_id: phi.id(),
                        a_n_eisenstein: e,
                        a_n_weyl: w,
                        abs_gap: (e - w).abs(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let max_gap = rows.iter().map(|r| r.abs_gap).fold(0.0, f64::max);

    let probe = SphHarmonic::new(3, 1).expect("degree within range");
    let mut max_res: f64 = 0.0;
    let mut failures = Vec::new();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for n in 1..=n_max {
        for v in enumerate_sphere(n) {
            checked += 1;
            let gamma = complete_to_unimodular(&v);
            let base = iwasawa(&to_f64(&gamma))?;
            let z = base.surface_point(M_BLOCK_CONVENTION);
            let w0 = probe.eval_unit(base.k_bottom_row());
            for t in 0..2u64 {
                let other = mat_mul_i(&parabolic_element(seed ^ (n * 31 + t + checked as u64)), &gamma);
                let parts = iwasawa(&to_f64(&other))?;
                let zo = parts.surface_point(M_BLOCK_CONVENTION);
                let dist = hyperbolic_distance(z, zo);
                let res = dist
                    .max((parts.a_scalar - base.a_scalar).abs())
                    .max((probe.eval_unit(parts.k_bottom_row()) - w0).abs());
                max_res = max_res.max(res);
                if !(res < tol) {
                    failures.push(InvarianceFailure {
                        v: v.coords,
                        completion: gamma,
                        other,
                        point: [z.x, z.y],
                        other_point: [zo.x, zo.y],
                        distance: dist,
                    });
                }
            }
            let proj = reduce_form(&projection_form(&v))?.0;
            let inter = reduce_form(&ortho_basis(&v).raw_gram())?.0;
            if proj != inter {
                mismatches.push(v.coords);
            }
        }
    }
    Ok(CoefficientCheckReport {
        rows,
        max_gap,
        max_invariance_residual: max_res,
        invariance_failures: failures,
        projection_mismatches: mismatches,
        vectors_checked: checked,
    })
}

/// The density prediction `(4π/3) / ζ(3)` for the number of primitive
/// points of norm at most `√X`, divided by `X^{3/2}`.
pub fn primitive_density_constant() -> f64 {
    // ζ(3) by direct summation with an integral tail correction
    let n = 100_000u64;
    let head: f64 = (1..=n).rev().map(|k| (k as f64).powi(-3)).sum();
    let tail = 1.0 / (2.0 * (n as f64).powi(2)) - 1.0 / (2.0 * (n as f64).powi(3));
    (4.0 * PI / 3.0) / (head + tail)
}

/// The error exponent of the asymptotic for nontrivial pairs.
pub const ERROR_EXPONENT_BENCHMARK: f64 = 15.0 / 14.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub x_max: u64,
    pub omega_id: String,
    pub phi_id: String,
    /// `(x, Σ_{n<=x} a_n)` on a log-spaced grid.
    pub series: Vec<(u64, f64)>,
    /// Slope of `log |Σ|` against `log x` over the top two decades;
    /// `-inf` when every partial sum there is zero.
    pub fitted_exponent: f64,
    /// `c` in `c x^{3/2}` fitted over the top two decades.
    pub fitted_constant: f64,
    pub identically_zero: bool,
    /// `|Σ_{n<=X} a_n| / X^{3/2}`.
    pub final_ratio: f64,
    pub density_prediction: f64,
    pub benchmark_exponent: f64,
}

/// Integer points `1 <= x <= x_max`, roughly `per_decade` per decade, always
/// including `x_max`.
pub fn log_grid(x_max: u64, per_decade: usize) -> Vec<u64> {
    let decades = (x_max as f64).log10();
    let steps = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut grid: Vec<u64> =
        (0..=steps).map(|i| (10f64.powf(decades * i as f64 / steps as f64).round() as u64).clamp(1, x_max)).collect();
    grid.push(x_max);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `a_n` for `n = 1..=x_max`, in ascending order. Trivial `φ` takes the
/// exact harmonic route; otherwise each `a_n` is the Weyl sum, which equals
/// the coset sum.
pub fn coefficients(x_max: u64, omega: &SphHarmonic, phi: &SurfaceTestFn) -> Result<Vec<f64>> {
    let solid = SolidHarmonic::new(*omega);
    (1..=x_max)
        .into_par_iter()
        .map(|n| {
            if !phi.is_constant() {
                return Ok(weyl_sum(n, omega, phi)?.sum);
            }
            let points: Vec<[i64; 3]> =
                orbit_representatives(n).into_iter().flat_map(signed_permutations).collect();
            let exact = points.iter().try_fold(0i128, |s, &w| s.checked_add(solid.numerator(w, n)?));
            Ok(match exact {
                Some(s) => s as f64 * solid.scale(n),
                None => {
                    let r = (n as f64).sqrt();
                    points.iter().map(|w| omega.eval_unit(w.map(|c| c as f64 / r))).sum()
                }
            })
        })
        .collect()
}

/// Partial sums `Σ_{n<=x} a_n` on a log grid with growth fits.
pub fn partial_sum_scan(x_max: u64, omega: &SphHarmonic, phi: &SurfaceTestFn) -> Result<ScanReport> {
    if x_max < 100 {
        return Err(Error::InvalidArgument(format!("scan range {x_max} below 100")));
    }
    let a = coefficients(x_max, omega, phi)?;
    let grid = log_grid(x_max, 40);
    let mut series = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut next = 0;
    for (i, an) in a.iter().enumerate() {
        acc += an;
        if grid.get(next) == Some(&(i as u64 + 1)) {
            series.push((i as u64 + 1, acc));
            next += 1;
        }
    }
    let lo = x_max as f64 / 100.0;
    let window: Vec<(f64, f64)> =
        series.iter().filter(|(x, _)| *x as f64 >= lo).map(|&(x, s)| (x as f64, s)).collect();
    let nonzero: Vec<(f64, f64)> = window.iter().filter(|(_, s)| *s != 0.0).copied().collect();
    let identically_zero = nonzero.is_empty();
    let fitted_exponent = if nonzero.len() >= 2 {
        let xs: Vec<f64> = nonzero.iter().map(|(x, _)| x.ln()).collect();
        let ys: Vec<f64> = nonzero.iter().map(|(_, s)| s.abs().ln()).collect();
        linear_fit(&xs, &ys).0
    } else {
        f64::NEG_INFINITY
    };
    let fitted_constant = if identically_zero {
        0.0
    } else {
        let logs: Vec<f64> = nonzero.iter().map(|(x, s)| s.abs().ln() - 1.5 * x.ln()).collect();
        (logs.iter().sum::<f64>() / logs.len() as f64).exp()
    };
    let final_ratio = acc.abs() / (x_max as f64).powf(1.5);
    Ok(ScanReport {
        x_max,
        omega_id: omega.id(),
        phi_id: phi.id(),
        series,
        fitted_exponent,
        fitted_constant,
        identically_zero,
        final_ratio,
        density_prediction: primitive_density_constant(),
        benchmark_exponent: ERROR_EXPONENT_BENCHMARK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{battery_boxes, heegner_point, standard_battery, Region};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn completion_examples() {
        let e3 = complete_to_unimodular(&PrimVec3::new([0, 0, 1]).unwrap());
        assert_eq!(e3, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let e1 = complete_to_unimodular(&PrimVec3::new([1, 0, 0]).unwrap());
        assert_eq!(e1[2], [1, 0, 0]);
        assert_eq!(det3i(&e1), 1);
        assert!(e1.iter().flatten().all(|x| x.abs() <= 1));
        let g = complete_to_unimodular(&PrimVec3::new([2, 1, 0]).unwrap());
        assert_eq!((g[2], det3i(&g)), ([2, 1, 0], 1));
    }

    #[test]
    fn completions_on_spheres() {
        for n in 1..=2000u64 {
            for v in enumerate_sphere(n) {
                let g = complete_to_unimodular(&v);
                assert_eq!(g[2], v.coords);
                assert_eq!(det3i(&g), 1, "{v}");
            }
        }
    }

    proptest! {
        #[test]
        fn completion_of_random_primitive(x in -100_000i64..100_000, y in -100_000i64..100_000, z in -100_000i64..100_000) {
            prop_assume!(crate::arith::gcd3(x, y, z) == 1);
            let v = PrimVec3::new([x, y, z]).unwrap();
            let g = complete_to_unimodular(&v);
            prop_assert_eq!(g[2], [x, y, z]);
            prop_assert_eq!(det3i(&g), 1);
        }
    }

    #[test]
    fn iwasawa_examples() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let p = iwasawa(&id).unwrap();
        assert_eq!(p.m_block, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(p.a_scalar, 1.0);
        assert_eq!(p.k_bottom_row(), [0.0, 0.0, 1.0]);
        let g = complete_to_unimodular(&PrimVec3::new([2, 1, 0]).unwrap());
        assert!((iwasawa(&to_f64(&g)).unwrap().a_scalar - 5f64.sqrt()).abs() < 1e-15);
        let singular = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]];
        assert!(matches!(iwasawa(&singular), Err(Error::NearSingular(_))));
    }

    fn check_parts(g: &Mat3, p: &IwasawaParts) {
        let r = p.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - g[i][j]).abs() < 1e-10 * (1.0 + g[i][j].abs()), "{g:?} -> {r:?}");
            }
        }
        let m = p.m_block;
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-10);
        assert!((p.a_scalar - dot(g[2], g[2]).sqrt()).abs() < 1e-12 * p.a_scalar);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(p.k[i], p.k[j]) - want).abs() < 1e-12);
            }
        }
        assert!((det3f(&p.k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iwasawa_reconstructs_random_completions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let v = loop {
                let c: [i64; 3] = std::array::from_fn(|_| rng.gen_range(-300..=300));
                if let Ok(v) = PrimVec3::new(c) {
                    break v;
                }
            };
            let g = to_f64(&complete_to_unimodular(&v));
            let p = iwasawa(&g).unwrap();
            check_parts(&g, &p);
            assert!((p.a_scalar.powi(2) - v.norm as f64).abs() < 1e-9 * v.norm as f64);
            let u = v.unit();
            assert!((0..3).all(|i| (p.k_bottom_row()[i] - u[i]).abs() < 1e-14));
        }
    }

    #[test]
    fn m_block_point_is_the_heegner_point() {
        for n in 1..=300u64 {
            for v in enumerate_sphere(n) {
                let p = iwasawa(&to_f64(&complete_to_unimodular(&v))).unwrap();
                let z = p.surface_point(MBlockConvention::Direct);
                let h = heegner_point(&v).unwrap();
                assert!(hyperbolic_distance(z, h) < 1e-9, "{v}: {z:?} vs {h:?}");
            }
        }
    }

    #[test]
    fn inverse_convention_is_not_coset_invariant() {
        // classes (3, ±2, 5) of discriminant -56 are not mirror symmetric
        let v = enumerate_sphere(14).into_iter().next().unwrap();
        let gamma = complete_to_unimodular(&v);
        let moved = (0..20u64).any(|t| {
            let other = mat_mul_i(&parabolic_element(t), &gamma);
            let a = iwasawa(&to_f64(&gamma)).unwrap().surface_point(MBlockConvention::Inverse);
            let b = iwasawa(&to_f64(&other)).unwrap().surface_point(MBlockConvention::Inverse);
            hyperbolic_distance(a, b) > 1e-6
        });
        assert!(moved);
    }

    #[test]
    fn convention_gate() {
        // n = 2: both conventions agree because the class number is 1
        let asym = SurfaceTestFn::centered_box(Region::rect(-0.5, 0.0, 1.0, 1.5).unwrap());
        let one = SphHarmonic::constant();
        let w2 = weyl_sum(2, &one, &asym).unwrap().sum;
        for c in [MBlockConvention::Direct, MBlockConvention::Inverse] {
            assert!((coefficient_a_n(2, &one, &asym, c).unwrap() - w2).abs() < 1e-12);
        }
        // beyond class number 1 only the direct convention matches
        let boxed = SurfaceTestFn::centered_box(Region::rect(0.0, 0.5, 1.0, 1.5).unwrap());
        let mut inverse_differs = false;
        for n in [14u64, 21, 30, 41, 59, 62, 65, 69, 77, 86] {
            let w = weyl_sum(n, &one, &boxed).unwrap().sum;
            let direct = coefficient_a_n(n, &one, &boxed, MBlockConvention::Direct).unwrap();
            let inverse = coefficient_a_n(n, &one, &boxed, MBlockConvention::Inverse).unwrap();
            assert!((direct - w).abs() < 1e-9);
            inverse_differs |= (inverse - w).abs() > 1e-6;
        }
        assert!(inverse_differs);
    }

    #[test]
    fn coefficient_examples() {
        let one = SphHarmonic::constant();
        assert_eq!(coefficient_a_n(35, &one, &SurfaceTestFn::ConstantOne, M_BLOCK_CONVENTION).unwrap(), 48.0);
        assert_eq!(coefficient_a_n(7, &one, &SurfaceTestFn::ConstantOne, M_BLOCK_CONVENTION).unwrap(), 0.0);
        let [b1, ..] = battery_boxes();
        let phi = SurfaceTestFn::centered_box(b1);
        let y20 = SphHarmonic::new(2, 0).unwrap();
        let e = coefficient_a_n(5, &y20, &phi, M_BLOCK_CONVENTION).unwrap();
        assert!((e - weyl_sum(5, &y20, &phi).unwrap().sum).abs() < 1e-9);
    }

    #[test]
    fn coefficient_identity_small_range() {
        let trivial = [(SphHarmonic::constant(), SurfaceTestFn::ConstantOne)];
        let r = coefficient_identity_check(100, &trivial, 1e-9, 0).unwrap();
        assert!(r.rows.iter().all(|row| row.abs_gap == 0.0));
        let r = coefficient_identity_check(120, &standard_battery(), 1e-9, 99).unwrap();
        assert!(r.max_gap < 1e-8);
        assert!(r.invariance_failures.is_empty());
        assert!(r.projection_mismatches.is_empty());
    }

    #[test]
    fn log_grid_and_fit() {
        let g = log_grid(1000, 10);
        assert_eq!((g[0], *g.last().unwrap()), (1, 1000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let xs = [0.0, 1.0, 2.0];
        let (s, c) = linear_fit(&xs, &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        assert!((primitive_density_constant() - 3.4846).abs() < 1e-3);
    }

    #[test]
    fn small_scan() {
        let one = SphHarmonic::constant();
        let r = partial_sum_scan(5000, &one, &SurfaceTestFn::ConstantOne).unwrap();
        assert!((r.fitted_exponent - 1.5).abs() < 0.05);
        let count: usize = (1..=5000u64).map(crate::sphere::sphere_count).sum();
        assert_eq!(r.series.last().unwrap().1, count as f64);
        let y20 = SphHarmonic::new(2, 0).unwrap();
        let z = partial_sum_scan(1000, &y20, &SurfaceTestFn::ConstantOne).unwrap();
        assert!(z.identically_zero && z.fitted_exponent == f64::NEG_INFINITY);
        assert!(partial_sum_scan(50, &one, &SurfaceTestFn::ConstantOne).is_err());
    }
}
