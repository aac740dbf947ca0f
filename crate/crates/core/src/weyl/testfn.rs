//! Test functions on the modular surface and the regions used to build them.
//!
//! Measures are normalised so the fundamental domain has mass 1, i.e. the
//! hyperbolic area `dx dy / y²` divided by `π/3`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modsurf::{hyperbolic_distance, HPoint};

const DOMAIN_AREA: f64 = PI / 3.0;
const EDGE: f64 = 0.5;

/// A measurable subset of the fundamental domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The whole domain.
    Whole,
    /// `{ y > height }`, with `height >= 1`.
    CuspStrip { height: f64 },
    /// `[x0, x1) × [y0, y1)`, contained in the domain. An edge at `x = ±1/2`
    /// admits every reduced point on that side, so the snapped boundary
    /// representatives are never split by rounding.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Region {
    pub fn cusp_strip(height: f64) -> Result<Self> {
        if !(height >= 1.0 && height.is_finite()) {
            return Err(Error::RegionOutsideDomain(format!("cusp strip at height {height}")));
        }
        Ok(Region::CuspStrip { height })
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let inside = -EDGE <= x0 && x0 < x1 && x1 <= EDGE && 0.0 < y0 && y0 < y1 && y1.is_finite();
        // lowest corner of the rectangle against the unit circle
        let xm = if x0 <= 0.0 && 0.0 <= x1 { 0.0 } else { x0.abs().min(x1.abs()) };
        if !inside || xm * xm + y0 * y0 < 1.0 {
            return Err(Error::RegionOutsideDomain(format!("[{x0}, {x1}) x [{y0}, {y1})")));
        }
        Ok(Region::Rect { x0, x1, y0, y1 })
    }

    /// Normalised measure.
    pub fn measure(&self) -> f64 {
        match *self {
            Region::Whole => 1.0,
            Region::CuspStrip { height } => 1.0 / height / DOMAIN_AREA,
            Region::Rect { x0, x1, y0, y1 } => (x1 - x0) * (1.0 / y0 - 1.0 / y1) / DOMAIN_AREA,
        }
    }

    /// Membership of a reduced point.
    pub fn contains(&self, z: HPoint) -> bool {
        match *self {
            Region::Whole => true,
            Region::CuspStrip { height } => z.y > height,
            Region::Rect { x0, x1, y0, y1 } => {
                (x0 <= -EDGE || z.x >= x0) && (x1 >= EDGE || z.x < x1) && z.y >= y0 && z.y < y1
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            Region::Whole => "whole".into(),
            Region::CuspStrip { height } => format!("cusp(y>{height})"),
            Region::Rect { x0, x1, y0, y1 } => format!("rect[{x0},{x1})x[{y0},{y1})"),
        }
    }
}

/// Smooth bump `exp(1 - 1/(1 - s²))` on `[0, 1)`, peak 1 at `s = 0`.
fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// A function on the modular surface, stored together with its mean so that
/// [`SurfaceTestFn::eval`] returns the mean-zero (centred) value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceTestFn {
    ConstantOne,
    CenteredBox { region: Region, mean: f64 },
    CenteredBump { cx: f64, cy: f64, radius: f64, mean: f64 },
    SampledGrid { x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, values: Vec<f64>, mean: f64 },
}

impl SurfaceTestFn {
    /// `1_B - μ(B)`.
    pub fn centered_box(region: Region) -> Self {
        let mean = region.measure();
        SurfaceTestFn::CenteredBox { region, mean }
    }

    /// A smooth radial bump of hyperbolic radius `radius` around `center`,
    /// minus its mean. The disc must lie inside the open fundamental domain.
    pub fn centered_bump(center: HPoint, radius: f64) -> Result<Self> {
        // Euclidean image of the hyperbolic disc: centre y cosh r, radius y sinh r
        let (ey, er) = (center.y * radius.cosh(), center.y * radius.sinh());
        let ok = radius > 0.0 && center.x.abs() + er < EDGE && center.x.hypot(ey) - er > 1.0;
        if !ok {
            return Err(Error::RegionOutsideDomain(format!(
                "bump of radius {radius} at ({}, {})",
                center.x, center.y
            )));
        }
        let integral = 2.0 * PI * simpson(|r| bump_profile(r / radius) * r.sinh(), 0.0, radius, 4000);
        Ok(SurfaceTestFn::CenteredBump { cx: center.x, cy: center.y, radius, mean: integral / DOMAIN_AREA })
    }

    /// Bilinear interpolation of `values` (row-major, `ny` rows of `nx`) on
    /// a uniform grid over `[x0, x1] × [y0, y1]`, zero outside, minus the mean
    /// over the fundamental domain.
    pub fn sampled_grid(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny || !(x0 < x1 && 0.0 < y0 && y0 < y1) {
            return Err(Error::InvalidArgument(format!("grid {nx}x{ny} with {} values", values.len())));
        }
        let mut grid = SurfaceTestFn::SampledGrid { x0, x1, y0, y1, nx, ny, values, mean: 0.0 };
        // midpoint rule over the grid box, restricted to the domain
        let cells = 600;
        let (hx, hy) = ((x1 - x0) / cells as f64, (y1 - y0) / cells as f64);
        let mut total = 0.0;
        for i in 0..cells {
            let x = x0 + (i as f64 + 0.5) * hx;
            for j in 0..cells {
                let y = y0 + (j as f64 + 0.5) * hy;
                let z = HPoint { x, y, reduced: true };
                if z.in_fundamental_domain(0.0) {
                    total += grid.raw(z) / (y * y);
                }
            }
        }
        let m = total * hx * hy / DOMAIN_AREA;
        if let SurfaceTestFn::SampledGrid { mean, .. } = &mut grid {
            *mean = m;
        }
        Ok(grid)
    }

    /// Value before centring.
    fn raw(&self, z: HPoint) -> f64 {
        match self {
            SurfaceTestFn::ConstantOne => 1.0,
            SurfaceTestFn::CenteredBox { region, .. } => {
                if region.contains(z) {
                    1.0
                } else {
                    0.0
                }
            }
            SurfaceTestFn::CenteredBump { cx, cy, radius, .. } => {
                let d = hyperbolic_distance(z, HPoint { x: *cx, y: *cy, reduced: true });
                bump_profile(d / radius)
            }
            SurfaceTestFn::SampledGrid { x0, x1, y0, y1, nx, ny, values, .. } => {
                if z.x < *x0 || z.x > *x1 || z.y < *y0 || z.y > *y1 {
                    return 0.0;
                }
                let fx = (z.x - x0) / (x1 - x0) * (*nx - 1) as f64;
                let fy = (z.y - y0) / (y1 - y0) * (*ny - 1) as f64;
                let i = (fx.floor() as usize).min(nx - 2);
                let j = (fy.floor() as usize).min(ny - 2);
                let (tx, ty) = (fx - i as f64, fy - j as f64);
                let at = |i: usize, j: usize| values[j * nx + i];
                (1.0 - ty) * ((1.0 - tx) * at(i, j) + tx * at(i + 1, j))
                    + ty * ((1.0 - tx) * at(i, j + 1) + tx * at(i + 1, j + 1))
            }
        }
    }

    /// Mean of the uncentred function over the fundamental domain.
    pub fn mean(&self) -> f64 {
        match self {
            SurfaceTestFn::ConstantOne => 1.0,
            SurfaceTestFn::CenteredBox { mean, .. }
            | SurfaceTestFn::CenteredBump { mean, .. }
            | SurfaceTestFn::SampledGrid { mean, .. } => *mean,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SurfaceTestFn::ConstantOne)
    }

    /// Evaluation at a reduced point; mean-zero except for the constant.
    pub fn eval(&self, z: HPoint) -> f64 {
        match self {
            SurfaceTestFn::ConstantOne => 1.0,
            _ => self.raw(z) - self.mean(),
        }
    }

    /// Bound for `|eval|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            SurfaceTestFn::ConstantOne => 1.0,
            SurfaceTestFn::CenteredBox { mean, .. } | SurfaceTestFn::CenteredBump { mean, .. } => mean.max(1.0 - mean),
            SurfaceTestFn::SampledGrid { values, mean, .. } => {
                let hi = values.iter().fold(0.0f64, |a, &b| a.max(b));
                let lo = values.iter().fold(0.0f64, |a, &b| a.min(b));
                (hi - mean).abs().max((lo - mean).abs())
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            SurfaceTestFn::ConstantOne => "one".into(),
            SurfaceTestFn::CenteredBox { region, .. } => format!("box:{}", region.id()),
            SurfaceTestFn::CenteredBump { cx, cy, radius, .. } => format!("bump({cx},{cy};{radius})"),
            SurfaceTestFn::SampledGrid { nx, ny, .. } => format!("grid{nx}x{ny}"),
        }
    }
}
