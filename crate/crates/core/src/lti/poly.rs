//! Real polynomials in descending-degree coefficient form, closed-loop
//! poles and pole-location tests.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::uncertainty::C64;

/// Real parts with magnitude below this count as marginal, hence unstable.
pub const MARGINAL_TOLERANCE: f64 = 1e-12;

pub fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum aligned at the constant term.
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len().max(b.len());
    let mut out = vec![0.0; len];
    for (k, x) in a.iter().rev().enumerate() {
        out[len - 1 - k] += x;
    }
    for (k, y) in b.iter().rev().enumerate() {
        out[len - 1 - k] += y;
    }
    out
}

/// Drops leading zero coefficients.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    p[first..].to_vec()
}

pub fn eval_complex(p: &[f64], z: C64) -> C64 {
    p.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn eval_real(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Roots via the eigenvalues of the companion matrix.
pub fn poles(charpoly: &[f64]) -> Result<Vec<C64>> {
    let p = trim(charpoly);
    if p.len() < 2 {
        return invalid("polynomial must have degree >= 1");
    }
    let degree = p.len() - 1;
    let lead = p[0];
    if degree == 1 {
        return Ok(vec![C64::new(-p[1] / lead, 0.0)]);
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for j in 0..degree {
        companion[(0, j)] = -p[j + 1] / lead;
    }
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

/// Strict open-left-half-plane test; marginal roots fail.
pub fn is_hurwitz(roots: &[C64]) -> bool {
    roots.iter().all(|z| z.re < -MARGINAL_TOLERANCE)
}

/// One building block of a pole region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionPrimitive {
    /// `Re(z) < re_below`.
    HalfPlane { re_below: f64 },
    /// `|z − center| < radius`.
    Disk { center: [f64; 2], radius: f64 },
}

impl RegionPrimitive {
    fn contains(&self, z: C64) -> bool {
        match *self {
            RegionPrimitive::HalfPlane { re_below } => z.re < re_below,
            RegionPrimitive::Disk { center, radius } => (z - C64::new(center[0], center[1])).norm() < radius,
        }
    }
}

/// Union of half-planes and disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RegionPrimitive>", into = "Vec<RegionPrimitive>")]
pub struct DRegion {
    primitives: Vec<RegionPrimitive>,
}

impl DRegion {
    pub fn new(primitives: Vec<RegionPrimitive>) -> Result<Self> {
        if primitives.is_empty() {
            return invalid("D-region needs at least one primitive");
        }
        for p in &primitives {
            match *p {
                RegionPrimitive::Disk { radius, .. } if !(radius > 0.0) => {
                    return invalid(format!("disk radius must be > 0, got {radius}"));
                }
                RegionPrimitive::HalfPlane { re_below } if !re_below.is_finite() => {
                    return invalid("half-plane bound must be finite");
                }
                _ => {}
            }
        }
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> &[RegionPrimitive] {
        &self.primitives
    }

    pub fn contains(&self, z: C64) -> bool {
        self.primitives.iter().any(|p| p.contains(z))
    }
}

impl TryFrom<Vec<RegionPrimitive>> for DRegion {
    type Error = crate::Error;

    fn try_from(value: Vec<RegionPrimitive>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DRegion> for Vec<RegionPrimitive> {
    fn from(value: DRegion) -> Self {
        value.primitives
    }
}

/// Every root lies in the region.
pub fn in_region(roots: &[C64], region: &DRegion) -> bool {
    roots.iter().all(|&z| region.contains(z))
}
