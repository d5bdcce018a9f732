use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::assembly::ExactSolution;
use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// `cos t (-sin(pi x) cos(pi y), cos(pi x) sin(pi y), 0)`.
    DivFree,
    /// `cos t (-sin(pi x) cos(pi y), cos(pi x) cos(pi y), 0)`.
    NonDivFree,
}

impl CaseTag {
    pub fn name(self) -> &'static str {
        match self {
            CaseTag::DivFree => "divfree",
            CaseTag::NonDivFree => "nondivfree",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "divfree" => Ok(CaseTag::DivFree),
            "nondivfree" => Ok(CaseTag::NonDivFree),
            other => Err(Error::InvalidArgument(format!(
                "unknown case '{other}', expected divfree or nondivfree"
            ))),
        }
    }
}

/// Closed-form test field `E(x, t) = cos(t) F(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManufacturedCase {
    pub tag: CaseTag,
}

impl ManufacturedCase {
    pub fn new(tag: CaseTag) -> Self {
        Self { tag }
    }

    /// Spatial factor `F`.
    pub fn spatial(&self, x: &Point) -> Vector3<f64> {
        let (sx, cx) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        match self.tag {
            CaseTag::DivFree => Vector3::new(-sx * cy, cx * sy, 0.0),
            CaseTag::NonDivFree => Vector3::new(-sx * cy, cx * cy, 0.0),
        }
    }

    pub fn spatial_curl(&self, x: &Point) -> Vector3<f64> {
        let (sx, _) = (PI * x.x).sin_cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        match self.tag {
            CaseTag::DivFree => Vector3::new(0.0, 0.0, -2.0 * PI * sx * sy),
            CaseTag::NonDivFree => Vector3::new(0.0, 0.0, -PI * sx * (cy + sy)),
        }
    }

    pub fn divergence(&self, x: &Point, t: f64) -> f64 {
        let cx = (PI * x.x).cos();
        let (sy, cy) = (PI * x.y).sin_cos();
        t.cos()
            * match self.tag {
                CaseTag::DivFree => -PI * cx * cy + PI * cx * cy,
                CaseTag::NonDivFree => -PI * cx * (cy + sy),
            }
    }

    /// `(E, dtt E, curl E)` at `(x, t)`.
    pub fn eval(&self, x: &Point, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let c = t.cos();
        let e = self.spatial(x) * c;
        (e, -e, self.spatial_curl(x) * c)
    }
}

impl ExactSolution for ManufacturedCase {
    fn field(&self, x: &Point, t: f64) -> Vector3<f64> {
        self.spatial(x) * t.cos()
    }

    fn curl(&self, x: &Point, t: f64) -> Vector3<f64> {
        self.spatial_curl(x) * t.cos()
    }

    fn dtt(&self, x: &Point, t: f64) -> Vector3<f64> {
        -self.spatial(x) * t.cos()
    }
}
