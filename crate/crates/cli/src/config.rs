//! Run configuration: validated ranges, filters and test-function specs.

use std::path::PathBuf;

use linnik_core::arith::CongruenceFilter;
use linnik_core::modsurf::HPoint;
use linnik_core::weyl::{standard_battery, Region, SphHarmonic, SurfaceTestFn};
use serde::Serialize;
use serde_json::Value;

use crate::output::Format;

/// A tool error: reported on stderr as one JSON record, exit code 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolError {
    pub kind: &'static str,
    pub message: String,
}

impl ToolError {
    pub fn config(message: impl Into<String>) -> Self {
        ToolError { kind: "invalid_config", message: message.into() }
    }
}

impl From<linnik_core::Error> for ToolError {
    fn from(e: linnik_core::Error) -> Self {
        ToolError { kind: "computation", message: e.to_string() }
    }
}

impl From<std::io::Error> for ToolError {
    fn from(e: std::io::Error) -> Self {
        ToolError { kind: "io", message: e.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub d_min: u64,
    pub d_max: u64,
    pub filter: CongruenceFilter,
    /// `(omega, phi)` ids; empty for commands without test functions.
    pub battery: Vec<(String, String)>,
    pub output_format: Format,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
    pub tolerance: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ToolError> {
        if self.d_min == 0 {
            return Err(ToolError::config("D must be positive"));
        }
        if self.d_min > self.d_max {
            return Err(ToolError::config(format!("dmin {} exceeds dmax {}", self.d_min, self.d_max)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(ToolError::config(format!("tolerance {} is not positive", self.tolerance)));
        }
        Ok(())
    }

    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// The values of D in range that pass the filter, ascending.
    pub fn ds(&self) -> Vec<u64> {
        (self.d_min..=self.d_max).filter(|&d| linnik_core::arith::passes_filter(d, &self.filter)).collect()
    }
}

/// The single pair given on the command line, or the standard battery when
/// neither `ω` nor `φ` is given. A missing half defaults to the constant.
pub fn resolve_battery(omega: Option<&str>, phi: Option<&str>) -> Result<Vec<(SphHarmonic, SurfaceTestFn)>, ToolError> {
    if omega.is_none() && phi.is_none() {
        return Ok(standard_battery());
    }
    let omega = omega.map_or_else(|| Ok(SphHarmonic::constant()), parse_omega)?;
    let phi = phi.map_or(Ok(SurfaceTestFn::ConstantOne), parse_phi)?;
    Ok(vec![(omega, phi)])
}

fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, ToolError> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ToolError::config(format!("{what}: cannot parse '{s}'")))?;
    if xs.len() != n {
        return Err(ToolError::config(format!("{what}: expected {n} numbers, got '{s}'")));
    }
    Ok(xs)
}

/// `l,m`
pub fn parse_omega(s: &str) -> Result<SphHarmonic, ToolError> {
    let (l, m) = s.split_once(',').ok_or_else(|| ToolError::config(format!("omega: expected 'l,m', got '{s}'")))?;
    let l: u32 = l.trim().parse().map_err(|_| ToolError::config(format!("omega: bad degree in '{s}'")))?;
    let m: i32 = m.trim().parse().map_err(|_| ToolError::config(format!("omega: bad order in '{s}'")))?;
    SphHarmonic::new(l, m).map_err(|e| ToolError::config(e.to_string()))
}

/// `one`, `cusp:T`, `rect:x0,x1,y0,y1`, `bump:x,y,r`
pub fn parse_phi(s: &str) -> Result<SurfaceTestFn, ToolError> {
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let bad = |e: linnik_core::Error| ToolError::config(format!("phi '{s}': {e}"));
    match kind {
        "one" if args.is_empty() => Ok(SurfaceTestFn::ConstantOne),
        "cusp" => {
            let t = numbers(args, 1, "phi cusp")?;
            Ok(SurfaceTestFn::centered_box(Region::cusp_strip(t[0]).map_err(bad)?))
        }
        "rect" => {
            let r = numbers(args, 4, "phi rect")?;
            Ok(SurfaceTestFn::centered_box(Region::rect(r[0], r[1], r[2], r[3]).map_err(bad)?))
        }
        "bump" => {
            let b = numbers(args, 3, "phi bump")?;
            if !(b[1] > 0.0) {
                return Err(ToolError::config(format!("phi '{s}': centre must lie in the upper half plane")));
            }
            SurfaceTestFn::centered_bump(HPoint::new(b[0], b[1]), b[2]).map_err(bad)
        }
        _ => Err(ToolError::config(format!("phi: unknown spec '{s}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        assert_eq!(parse_omega("2,-1").unwrap(), SphHarmonic::new(2, -1).unwrap());
        assert!(parse_omega("2,3").is_err());
        assert!(parse_omega("x").is_err());
        assert!(parse_phi("one").unwrap().is_constant());
        assert!(parse_phi("cusp:2").is_ok());
        assert!(parse_phi("cusp:0.5").is_err());
        assert!(parse_phi("rect:-0.5,0,1.2,2").is_ok());
        assert!(parse_phi("rect:-0.5,0,1.2").is_err());
        assert!(parse_phi("bump:0,2,0.2").is_ok());
        assert!(parse_phi("bump:0,-2,0.2").is_err());
        assert!(parse_phi("disc").is_err());
    }

    #[test]
    fn battery_defaults() {
        assert_eq!(resolve_battery(None, None).unwrap().len(), standard_battery().len());
        let one = resolve_battery(Some("1,0"), None).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].1.is_constant());
        assert!(resolve_battery(None, Some("cusp:2")).unwrap()[0].0.is_constant());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig {
            command: "enumerate".into(),
            d_min: 5,
            d_max: 4,
            filter: CongruenceFilter::default(),
            battery: vec![],
            output_format: Format::Csv,
            output_path: None,
            seed: 0,
            tolerance: 1e-9,
        };
        assert!(c.validate().is_err());
        c.d_max = 10;
        assert!(c.validate().is_ok());
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
