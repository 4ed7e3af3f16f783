//! Expected sample cost of the reuse scheme on a radius grid.

use serde::Serialize;

use super::RadiusGrid;
use crate::error::{invalid, Error, Result};

fn ratio_power(larger: f64, smaller: f64, d: u32) -> f64 {
    if smaller == 0.0 {
        0.0
    } else {
        (smaller / larger).powi(d as i32)
    }
}

/// `l / (l − Σ_{i≥2} (r_i / r_{i−1})ᵈ)`.
pub fn theoretical_reuse_factor(grid: &RadiusGrid, d: u32) -> f64 {
    let radii = grid.radii();
    let l = radii.len() as f64;
    let reused: f64 = radii.windows(2).map(|w| ratio_power(w[0], w[1], d)).sum();
    l / (l - reused)
}

/// `E[n_i]` for a run with `n` samples per radius; index 0 is the largest
/// radius and always costs `n`.
pub fn expected_fresh(grid: &RadiusGrid, d: u32, n: usize, index: usize) -> Result<f64> {
    let radii = grid.radii();
    if index >= radii.len() {
        return invalid(format!("index {index} out of range for {} radii", radii.len()));
    }
    let n = n as f64;
    if index == 0 {
        return Ok(n);
    }
    Ok(n * (1.0 - ratio_power(radii[index - 1], radii[index], d)))
}

/// `r_i / r_{i−1}` on the `(a, b, l)` linspace grid, written without the
/// radii themselves. `i` counts from 1 at the largest radius and must be ≥ 2.
pub fn linspace_ratio(l: usize, a: f64, b: f64, i: usize) -> f64 {
    1.0 - 1.0 / ((l as f64 - 1.0) / (1.0 - a / b) - i as f64 + 2.0)
}

/// Reuse factor on the `(a, b, l)` grid through [`linspace_ratio`].
pub fn linspace_reuse_factor(l: usize, a: f64, b: f64, d: u32) -> f64 {
    let lf = l as f64;
    let reused: f64 = (2..=l).map(|i| linspace_ratio(l, a, b, i).powi(d as i32)).sum();
    lf / (lf - reused)
}

/// A linspace grid configuration for the factor-versus-dimension figures.
#[derive(Debug, Clone, Serialize)]
pub struct FigureConfig {
    pub label: String,
    pub l: usize,
    pub a: f64,
    pub b: f64,
}

impl FigureConfig {
    pub fn new(label: &str, l: usize, a: f64, b: f64) -> Self {
        Self {
            label: label.to_string(),
            l,
            a,
            b,
        }
    }

    /// A: l=200, b=2a. B: l=100, b=2a. C: l=100, a=0. D: l=20, b=2a.
    /// Only `a/b` matters, so `b = 2a` is realized as `(1, 2)`.
    pub fn standard() -> Vec<Self> {
        vec![
            Self::new("A", 200, 1.0, 2.0),
            Self::new("B", 100, 1.0, 2.0),
            Self::new("C", 100, 0.0, 1.0),
            Self::new("D", 20, 1.0, 2.0),
        ]
    }
}

/// Reuse factor for each configuration at `d = 1..=d_max`.
#[derive(Debug, Clone, Serialize)]
pub struct FigureTable {
    pub configs: Vec<FigureConfig>,
    /// `rows[k]` holds `(d, [F per config])` with `d = k + 1`.
    pub rows: Vec<(u32, Vec<f64>)>,
}

pub const FIGURE_IDENTITY_TOLERANCE: f64 = 1e-12;

/// Evaluates the factor on each grid both from the radii and from the
/// linspace closed form; any disagreement beyond
/// [`FIGURE_IDENTITY_TOLERANCE`] is an error.
pub fn figure_reuse_curves(configs: &[FigureConfig], d_max: u32) -> Result<FigureTable> {
    let grids = configs
        .iter()
        .map(|c| RadiusGrid::linspace(c.a, c.b, c.l))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(d_max as usize);
    for d in 1..=d_max {
        let mut values = Vec::with_capacity(configs.len());
        for (config, grid) in configs.iter().zip(&grids) {
            let direct = theoretical_reuse_factor(grid, d);
            let closed = linspace_reuse_factor(config.l, config.a, config.b, d);
            if (direct - closed).abs() > FIGURE_IDENTITY_TOLERANCE * direct.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "config {}: closed form {closed} disagrees with direct sum {direct} at d={d}",
                    config.label
                )));
            }
            values.push(direct);
        }
        rows.push((d, values));
    }
    Ok(FigureTable {
        configs: configs.to_vec(),
        rows,
    })
}
