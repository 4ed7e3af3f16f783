//! Joint singular-value law of a complex matrix drawn uniformly from the
//! unit spectral-norm ball.
//!
//! For `Δ ∈ C^{m×n}` with `m ≥ n`, the ordered singular values
//! `1 ≥ σ₁ > … > σₙ > 0` of a uniform draw have density proportional to
//!
//! ```text
//! ∏ᵢ σᵢ^{2(m−n)+1} · ∏_{i<k} (σᵢ² − σₖ²)²
//! ```
//!
//! with normalizing constant `Υ_C = 2ⁿ π^{mn} / ∏ₖ (n−k)! (m−k)!` relating the
//! integral of the density to the ball's volume. Sampling is done by
//! rejection against a constant envelope on the unit cube; the density is
//! symmetric in its arguments so an accepted cube point is simply sorted.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Largest `n` (smaller matrix dimension) with a vetted envelope.
pub const MAX_SMALL_DIM: usize = 4;

/// Rejection iterations allowed per draw.
pub const REJECTION_CAP: u64 = 10_000_000;

const ENVELOPE_SAFETY: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularValueDensity {
    m: usize,
    n: usize,
    normalization: f64,
    peak: f64,
}

impl SingularValueDensity {
    /// Prepares the sampler for `m ≥ n ≥ 1`, `n ≤ 4`.
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if n == 0 || m < n {
            return invalid(format!("singular-value density needs m >= n >= 1, got m={m}, n={n}"));
        }
        if n > MAX_SMALL_DIM {
            return Err(Error::Unsupported(format!(
                "complex full blocks with min dimension {n} > {MAX_SMALL_DIM}"
            )));
        }
        let mut density = Self {
            m,
            n,
            normalization: normalization_constant(m, n),
            peak: 0.0,
        };
        density.peak = density.locate_peak();
        Ok(density)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// `Υ_C`.
    pub fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    /// Constant rejection envelope (safety factor times the located maximum).
    pub fn envelope(&self) -> f64 {
        ENVELOPE_SAFETY * self.peak
    }

    /// Unnormalized density at `sigma` (any order).
    pub fn unnormalized(&self, sigma: &[f64]) -> f64 {
        debug_assert_eq!(sigma.len(), self.n);
        let power = (2 * (self.m - self.n) + 1) as i32;
        let mut value: f64 = sigma.iter().map(|s| s.powi(power)).product();
        for i in 0..self.n {
            for k in (i + 1)..self.n {
                let gap = sigma[i] * sigma[i] - sigma[k] * sigma[k];
                value *= gap * gap;
            }
        }
        value
    }

    /// Draws strictly descending singular values in `(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let envelope = self.envelope();
        let mut sigma = vec![0.0; self.n];
        for _ in 0..REJECTION_CAP {
            for s in sigma.iter_mut() {
                *s = rng.random::<f64>();
            }
            let f = self.unnormalized(&sigma);
            if f > 0.0 && rng.random::<f64>() * envelope < f {
                sigma.sort_by(|a, b| b.total_cmp(a));
                return Ok(sigma);
            }
        }
        Err(Error::ResourceExhausted {
            what: format!("singular values for {}x{} complex block", self.m, self.n),
            iterations: REJECTION_CAP,
            acceptance_rate: 0.0,
        })
    }

    fn locate_peak(&self) -> f64 {
        // Dense grid over the ordered region, then coordinate-wise polish.
        let step: f64 = if self.n <= 2 { 0.01 } else { 0.05 };
        let ticks = (1.0 / step).round() as usize;
        let mut best = vec![1.0; self.n];
        let mut best_value = self.unnormalized(&best);
        let mut index = vec![0usize; self.n];
        let mut point = vec![0.0; self.n];
        'grid: loop {
            let ordered = index.windows(2).all(|w| w[0] >= w[1]);
            if ordered {
                for (p, &i) in point.iter_mut().zip(&index) {
                    *p = i as f64 * step;
                }
                let value = self.unnormalized(&point);
                if value > best_value {
                    best_value = value;
                    best.copy_from_slice(&point);
                }
            }
            for digit in index.iter_mut() {
                *digit += 1;
                if *digit <= ticks {
                    continue 'grid;
                }
                *digit = 0;
            }
            break;
        }

        let fine = 2000usize;
        for _ in 0..50 {
            let before = best_value;
            for coord in 0..self.n {
                let mut trial = best.clone();
                for t in 0..=fine {
                    trial[coord] = t as f64 / fine as f64;
                    let value = self.unnormalized(&trial);
                    if value > best_value {
                        best_value = value;
                        best[coord] = trial[coord];
                    }
                }
            }
            if best_value <= before * (1.0 + 1e-12) {
                break;
            }
        }
        best_value
    }
}

/// Draws descending singular values for a uniform `m × n` complex block
/// of unit spectral radius (`m ≥ n`).
pub fn sample_singular_values<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    SingularValueDensity::new(m, n)?.sample(rng)
}

fn normalization_constant(m: usize, n: usize) -> f64 {
    let factorial = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let denominator: f64 = (1..=n).map(|k| factorial(n - k) * factorial(m - k)).product();
    2f64.powi(n as i32) * std::f64::consts::PI.powi((m * n) as i32) / denominator
}
