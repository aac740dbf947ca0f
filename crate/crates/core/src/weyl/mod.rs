//! Weyl sums `S(D, ω, φ) = Σ_{v ∈ S²(D)} ω(v/|v|) φ(z_v)` and joint
//! equidistribution statistics for the pairs (direction, shape).
//!
//! The 24 rotations of the cube act on S²(D) and move the orthogonal lattice
//! by a rotation, so `z_v` is constant on each rotation orbit; the 24
//! reflections send `z_v` to its mirror image. Sums are therefore taken orbit
//! by orbit, with the harmonic summed exactly in integers over each half
//! orbit. A harmonic whose average over the rotation group vanishes (every
//! odd degree below 9, all of degree 2, ...) gives an exactly zero sum.

mod harmonic;
mod testfn;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use harmonic::{legendre_poly_part, SolidHarmonic, SphHarmonic, MAX_DEGREE};
pub use testfn::{Region, SurfaceTestFn};

use crate::arith::{passes_filter, CongruenceFilter};
use crate::error::{Error, Result};
use crate::modsurf::{reduced_root, HPoint};
use crate::ortho::ortho_basis;
use crate::sphere::{orbit_representatives, PrimVec3};

/// Reduced Heegner point of `v`: the reduced root of the oriented Gram form
/// of its orthogonal lattice.
pub fn heegner_point(v: &PrimVec3) -> Result<HPoint> {
    reduced_root(&ortho_basis(v).raw_gram())
}

/// The images of one orbit representative under signed permutations,
/// split by the determinant of the signed permutation. When some image is
/// reached both ways the orbit is achiral and everything sits in `proper`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub rep: [i64; 3],
    pub proper: Vec<[i64; 3]>,
    pub improper: Vec<[i64; 3]>,
}

impl Orbit {
    pub fn new(rep: [i64; 3]) -> Self {
        const PERMS: [([usize; 3], i8); 6] =
            [([0, 1, 2], 1), ([1, 2, 0], 1), ([2, 0, 1], 1), ([0, 2, 1], -1), ([2, 1, 0], -1), ([1, 0, 2], -1)];
        let mut seen: BTreeMap<[i64; 3], u8> = BTreeMap::new();
        for (p, sign) in PERMS {
            for mask in 0..8u32 {
                let mut w = [rep[p[0]], rep[p[1]], rep[p[2]]];
                for (k, c) in w.iter_mut().enumerate() {
                    if mask & (1 << k) != 0 {
                        *c = -*c;
                    }
                }
                let det = if mask.count_ones() % 2 == 0 { sign } else { -sign };
                *seen.entry(w).or_default() |= if det > 0 { 1 } else { 2 };
            }
        }
        let achiral = seen.values().any(|&b| b == 3);
        let mut proper = Vec::new();
        let mut improper = Vec::new();
        for (w, bits) in seen {
            if achiral || bits == 1 {
                proper.push(w);
            } else {
                improper.push(w);
            }
        }
        Orbit { rep, proper, improper }
    }

    pub fn len(&self) -> usize {
        self.proper.len() + self.improper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_achiral(&self) -> bool {
        self.improper.is_empty()
    }
}

/// Orbits of S²(D) with the Heegner point of each half.
#[derive(Debug, Clone)]
pub struct OrbitPoints {
    pub orbit: Orbit,
    pub z_proper: HPoint,
    pub z_improper: Option<HPoint>,
}

pub fn sphere_orbits(d: u64) -> Vec<Orbit> {
    orbit_representatives(d).into_iter().map(Orbit::new).collect()
}

pub fn orbit_points(d: u64) -> Result<Vec<OrbitPoints>> {
    sphere_orbits(d)
        .into_iter()
        .map(|orbit| {
            let z_proper = heegner_point(&PrimVec3 { coords: orbit.rep, norm: d })?;
            let z_improper = match orbit.improper.first() {
                Some(&w) => Some(heegner_point(&PrimVec3 { coords: w, norm: d })?),
                None => None,
            };
            Ok(OrbitPoints { orbit, z_proper, z_improper })
        })
        .collect()
}

/// `Σ ω(w/|w|)` over a half orbit, exactly when the integer route fits.
fn harmonic_sum(solid: &SolidHarmonic, ws: &[[i64; 3]], d: u64) -> f64 {
    let exact = ws.iter().try_fold(0i128, |acc, &w| acc.checked_add(solid.numerator(w, d)?));
    match exact {
        Some(s) => s as f64 * solid.scale(d),
        None => {
            let r = (d as f64).sqrt();
            ws.iter().map(|w| solid.harmonic().eval_unit(w.map(|c| c as f64 / r))).sum()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub index: u64,
    pub omega_id: String,
    pub phi_id: String,
    pub sum: f64,
    pub count: u64,
    /// `sum / count`, 0 for an empty sphere.
    pub normalized: f64,
}

pub fn weyl_sum(d: u64, omega: &SphHarmonic, phi: &SurfaceTestFn) -> Result<WeylReport> {
    let solid = SolidHarmonic::new(*omega);
    let mut sum = 0.0;
    let mut count = 0u64;
    for orbit in sphere_orbits(d) {
        count += orbit.len() as u64;
        let value = |w: [i64; 3]| -> Result<f64> {
            if phi.is_constant() {
                Ok(1.0)
            } else {
                Ok(phi.eval(heegner_point(&PrimVec3 { coords: w, norm: d })?))
            }
        };
        sum += value(orbit.rep)? * harmonic_sum(&solid, &orbit.proper, d);
        if let Some(&w) = orbit.improper.first() {
            sum += value(w)? * harmonic_sum(&solid, &orbit.improper, d);
        }
    }
    let normalized = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(WeylReport { index: d, omega_id: omega.id(), phi_id: phi.id(), sum, count, normalized })
}

/// [`weyl_sum`] over many D in parallel, in the order given.
pub fn weyl_table(ds: &[u64], omega: &SphHarmonic, phi: &SurfaceTestFn) -> Result<Vec<WeylReport>> {
    ds.par_iter().map(|&d| weyl_sum(d, omega, phi)).collect()
}

/// A spherical cap `{u : <u, axis> >= cos angle}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl Cap {
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0 && angle > 0.0 && angle <= PI) {
            return Err(Error::InvalidArgument(format!("cap with axis {axis:?} and angle {angle}")));
        }
        Ok(Cap { axis: axis.map(|c| c / n), angle })
    }

    /// Normalised area `(1 - cos θ) / 2`.
    pub fn measure(&self) -> f64 {
        if self.angle >= PI {
            1.0
        } else {
            (1.0 - self.angle.cos()) / 2.0
        }
    }

    pub fn contains(&self, u: [f64; 3]) -> bool {
        self.angle >= PI || u[0] * self.axis[0] + u[1] * self.axis[1] + u[2] * self.axis[2] >= self.angle.cos()
    }
}

/// 26 quasi-uniform axes (Fibonacci lattice) times angles π/6, π/3, π/2.
pub fn standard_caps() -> Vec<Cap> {
    let n = 26;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut caps = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        let axis = [r * phi.cos(), r * phi.sin(), z];
        for angle in [PI / 6.0, PI / 3.0, PI / 2.0] {
            caps.push(Cap { axis, angle });
        }
    }
    caps
}

/// Cusp strips at heights 1.5, 2, 3 and six rectangles inside the domain.
pub fn standard_boxes() -> Vec<Region> {
    let mut boxes: Vec<Region> = [1.5, 2.0, 3.0].iter().map(|&t| Region::CuspStrip { height: t }).collect();
    let rects = [
        (-0.5, -0.25, 0.97, 1.3),
        (0.25, 0.5, 0.97, 1.3),
        (-0.25, 0.25, 1.0, 1.4),
        (-0.5, 0.0, 1.3, 2.0),
        (0.0, 0.5, 1.3, 2.0),
        (-0.5, 0.5, 2.0, 4.0),
    ];
    for (x0, x1, y0, y1) in rects {
        boxes.push(Region::rect(x0, x1, y0, y1).expect("standard rectangle lies in the domain"));
    }
    boxes
}

/// Three boxes whose edges are irrational, so no Heegner point lies on an
/// edge and floating-point noise cannot move a point across one.
pub fn battery_boxes() -> [Region; 3] {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    [
        Region::CuspStrip { height: PI / 2.0 },
        Region::Rect { x0: s2 - 1.3, x1: 0.5, y0: s2.sqrt(), y1: std::f64::consts::E / 1.5 },
        Region::Rect { x0: -0.5, x1: -(s3 - 1.0) / 2.0, y0: (s5 + 1.0) / 3.4, y1: 1.0 + 1.0 / PI },
    ]
}

/// Six (ω, φ) pairs with degree at most 4 and the three [`battery_boxes`].
pub fn standard_battery() -> Vec<(SphHarmonic, SurfaceTestFn)> {
    let [b1, b2, b3] = battery_boxes();
    let y = |l, m| SphHarmonic::new(l, m).expect("degree within range");
    vec![
        (y(0, 0), SurfaceTestFn::centered_box(b1.clone())),
        (y(0, 0), SurfaceTestFn::centered_box(b3.clone())),
        (y(2, 0), SurfaceTestFn::centered_box(b2.clone())),
        (y(4, 0), SurfaceTestFn::centered_box(b1)),
        (y(4, 0), SurfaceTestFn::centered_box(b2)),
        (y(4, 4), SurfaceTestFn::centered_box(b3)),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyStats {
    pub d: u64,
    pub count: u64,
    pub max_cap_dev: f64,
    pub max_box_dev: f64,
    pub max_joint_dev: f64,
    /// Indices of the cap and box attaining `max_joint_dev`.
    pub worst_pair: Option<(usize, usize)>,
}

/// Deviations of the empirical measure on S²(D) × X₂ from the product of
/// the uniform measures, maximised over the families. All zero for an
/// empty sphere.
pub fn discrepancy(d: u64, caps: &[Cap], boxes: &[Region]) -> Result<DiscrepancyStats> {
    let mut cap_hits = vec![0u64; caps.len()];
    let mut box_hits = vec![0u64; boxes.len()];
    let mut joint_hits = vec![0u64; caps.len() * boxes.len()];
    let mut count = 0u64;
    let r = (d as f64).sqrt();
    let mut in_box = vec![false; boxes.len()];
    for op in orbit_points(d)? {
        let halves = [(&op.orbit.proper, op.z_proper), (&op.orbit.improper, op.z_improper.unwrap_or(op.z_proper))];
        for (ws, z) in halves {
            if ws.is_empty() {
                continue;
            }
            for (j, b) in boxes.iter().enumerate() {
                in_box[j] = b.contains(z);
            }
            for w in ws.iter() {
                count += 1;
                let u = w.map(|c| c as f64 / r);
                for (j, &inside) in in_box.iter().enumerate() {
                    box_hits[j] += inside as u64;
                }
                for (i, cap) in caps.iter().enumerate() {
                    if cap.contains(u) {
                        cap_hits[i] += 1;
                        for (j, &inside) in in_box.iter().enumerate() {
                            joint_hits[i * boxes.len() + j] += inside as u64;
                        }
                    }
                }
            }
        }
    }
    let mut stats = DiscrepancyStats { d, count, max_cap_dev: 0.0, max_box_dev: 0.0, max_joint_dev: 0.0, worst_pair: None };
    if count == 0 {
        return Ok(stats);
    }
    let n = count as f64;
    for (i, cap) in caps.iter().enumerate() {
        stats.max_cap_dev = stats.max_cap_dev.max((cap_hits[i] as f64 / n - cap.measure()).abs());
    }
    for (j, b) in boxes.iter().enumerate() {
        stats.max_box_dev = stats.max_box_dev.max((box_hits[j] as f64 / n - b.measure()).abs());
    }
    for (i, cap) in caps.iter().enumerate() {
        for (j, b) in boxes.iter().enumerate() {
            let dev = (joint_hits[i * boxes.len() + j] as f64 / n - cap.measure() * b.measure()).abs();
            if stats.worst_pair.is_none() || dev > stats.max_joint_dev {
                stats.max_joint_dev = dev;
                stats.worst_pair = Some((i, j));
            }
        }
    }
    Ok(stats)
}

/// Median of a non-empty sample; mean of the middle two for even length.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub k: u32,
    pub d_count: usize,
    pub median: f64,
    pub max: f64,
}

/// The D in `[2^k, 2^(k+1))` that pass `filter` and have a nonempty sphere.
pub fn dyadic_block(k: u32, filter: &CongruenceFilter) -> Vec<u64> {
    (1u64 << k..1u64 << (k + 1)).filter(|&d| passes_filter(d, filter) && crate::arith::is_admissible(d)).collect()
}

fn trend(k_range: RangeInclusive<u32>, filter: &CongruenceFilter, stat: impl Fn(u64) -> Result<f64> + Sync) -> Result<Vec<TrendRow>> {
    k_range
        .map(|k| {
            let ds = dyadic_block(k, filter);
            let mut values: Vec<f64> = ds.par_iter().map(|&d| stat(d)).collect::<Result<_>>()?;
            let max = values.iter().cloned().fold(0.0, f64::max);
            let median = median(&mut values).unwrap_or(0.0);
            Ok(TrendRow { k, d_count: ds.len(), median, max })
        })
        .collect()
}

/// Median and maximum of the joint discrepancy over dyadic blocks of D.
pub fn discrepancy_trend(k_range: RangeInclusive<u32>, filter: &CongruenceFilter, caps: &[Cap], boxes: &[Region]) -> Result<Vec<TrendRow>> {
    trend(k_range, filter, |d| Ok(discrepancy(d, caps, boxes)?.max_joint_dev))
}

/// Median and maximum of `|normalized Weyl sum|` over dyadic blocks of D.
pub fn weyl_trend(k_range: RangeInclusive<u32>, filter: &CongruenceFilter, omega: &SphHarmonic, phi: &SurfaceTestFn) -> Result<Vec<TrendRow>> {
    trend(k_range, filter, |d| Ok(weyl_sum(d, omega, phi)?.normalized.abs()))
}
