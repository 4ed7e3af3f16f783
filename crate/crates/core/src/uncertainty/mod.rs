//! Uncertainty sets `B(r)`, their gauge `ℓ(·)`, volume-scaling dimension
//! and exact uniform samplers.
//!
//! Three families are supported:
//!
//! * `l_p` balls in `R^n`, `p ∈ {1, 2, …, ∞}`;
//! * spectral-norm balls over block-diagonal structures of (possibly
//!   repeated) real/complex scalars and real/complex full blocks;
//! * homogeneous star-shaped sets `{r(Δ − Δ₀) + Δ₀ : Δ ∈ Q}` with `Q` a
//!   simplex and `Δ₀` interior to it.
//!
//! For every family `vol(B(r)) = vol(B(1)) rᵈ`, so all volume comparisons
//! reduce to [`UncertaintySet::volume_ratio`].

mod matrix;
mod singular;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use matrix::{
    haar_unitary, max_singular_value, sample_complex_full, sample_real_full, C64, REAL_FULL_MAX_ENTRIES,
    REAL_FULL_REJECTION_CAP,
};
pub use singular::{sample_singular_values, SingularValueDensity, MAX_SMALL_DIM, REJECTION_CAP};

/// Order `p` of an `l_p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormOrder {
    Finite(u32),
    Infinity,
}

impl NormOrder {
    pub fn norm(&self, x: &[f64]) -> f64 {
        match *self {
            NormOrder::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
            NormOrder::Finite(1) => x.iter().map(|v| v.abs()).sum(),
            NormOrder::Finite(2) => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormOrder::Finite(p) => {
                // Scale by the max entry so large p does not overflow.
                let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let p = p as f64;
                scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    RealScalar,
    ComplexScalar,
    RealFull,
    ComplexFull,
}

/// One diagonal block of a structured spectral-norm ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    kind: BlockKind,
    rows: usize,
    cols: usize,
    multiplicity: usize,
}

impl BlockSpec {
    /// Scalar `q I_multiplicity`.
    pub fn scalar(complex: bool, multiplicity: usize) -> Result<Self> {
        if multiplicity == 0 {
            return invalid("scalar block multiplicity must be >= 1");
        }
        let kind = if complex { BlockKind::ComplexScalar } else { BlockKind::RealScalar };
        Ok(Self { kind, rows: 1, cols: 1, multiplicity })
    }

    pub fn full(complex: bool, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("full block dimensions must be >= 1");
        }
        let kind = if complex { BlockKind::ComplexFull } else { BlockKind::RealFull };
        Ok(Self { kind, rows, cols, multiplicity: 1 })
    }

    pub fn new(kind: BlockKind, rows: usize, cols: usize, multiplicity: usize) -> Result<Self> {
        match kind {
            BlockKind::RealScalar | BlockKind::ComplexScalar => {
                if rows != 1 || cols != 1 {
                    return invalid("scalar blocks are 1x1 (use multiplicity for repetition)");
                }
                Self::scalar(kind == BlockKind::ComplexScalar, multiplicity)
            }
            BlockKind::RealFull | BlockKind::ComplexFull => {
                if multiplicity != 1 {
                    return Err(Error::Unsupported("repeated full blocks".into()));
                }
                Self::full(kind == BlockKind::ComplexFull, rows, cols)
            }
        }
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// Real degrees of freedom `κ` of the block's free variable. A repeated
    /// scalar `q I_k` is still a single variable.
    pub fn kappa(&self) -> usize {
        match self.kind {
            BlockKind::RealScalar => 1,
            BlockKind::ComplexScalar => 2,
            BlockKind::RealFull => self.rows * self.cols,
            BlockKind::ComplexFull => 2 * self.rows * self.cols,
        }
    }
}

/// Value of a single block in a structured uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    RealScalar(f64),
    ComplexScalar(C64),
    RealMatrix(DMatrix<f64>),
    ComplexMatrix(DMatrix<C64>),
}

impl BlockValue {
    fn magnitude(&self) -> f64 {
        match self {
            BlockValue::RealScalar(q) => q.abs(),
            BlockValue::ComplexScalar(q) => q.norm(),
            BlockValue::RealMatrix(m) => max_singular_value(m),
            BlockValue::ComplexMatrix(m) => max_singular_value(m),
        }
    }

    fn scale(&mut self, factor: f64) {
        match self {
            BlockValue::RealScalar(q) => *q *= factor,
            BlockValue::ComplexScalar(q) => *q *= factor,
            BlockValue::RealMatrix(m) => *m *= factor,
            BlockValue::ComplexMatrix(m) => *m *= C64::new(factor, 0.0),
        }
    }

    fn matches(&self, spec: &BlockSpec) -> bool {
        match (self, spec.kind) {
            (BlockValue::RealScalar(_), BlockKind::RealScalar) => true,
            (BlockValue::ComplexScalar(_), BlockKind::ComplexScalar) => true,
            (BlockValue::RealMatrix(m), BlockKind::RealFull) => m.shape() == (spec.rows, spec.cols),
            (BlockValue::ComplexMatrix(m), BlockKind::ComplexFull) => m.shape() == (spec.rows, spec.cols),
            _ => false,
        }
    }
}

/// A point `Δ` of an uncertainty set.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyPoint {
    Vector(Vec<f64>),
    Blocks(Vec<BlockValue>),
}

impl UncertaintyPoint {
    /// Real coordinates: vectors as-is; blocks in order, scalars once
    /// (complex as re, im) and matrices row-major (complex as re, im per
    /// entry). The count equals the set's dimension `d`.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            UncertaintyPoint::Vector(v) => v.clone(),
            UncertaintyPoint::Blocks(blocks) => {
                let mut out = Vec::new();
                for block in blocks {
                    match block {
                        BlockValue::RealScalar(q) => out.push(*q),
                        BlockValue::ComplexScalar(q) => out.extend([q.re, q.im]),
                        BlockValue::RealMatrix(m) => {
                            for i in 0..m.nrows() {
                                out.extend(m.row(i).iter());
                            }
                        }
                        BlockValue::ComplexMatrix(m) => {
                            for i in 0..m.nrows() {
                                for z in m.row(i).iter() {
                                    out.extend([z.re, z.im]);
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpBall {
    order: NormOrder,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBall {
    blocks: Vec<BlockSpec>,
    densities: Vec<Option<SingularValueDensity>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSimplex {
    vertices: Vec<Vec<f64>>,
    center: Vec<f64>,
    /// Inverse of the `(n+1)×(n+1)` matrix `[v₁ … v_{n+1}; 1 … 1]`.
    barycentric: DMatrix<f64>,
    center_weights: Vec<f64>,
}

impl StarSimplex {
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let n = self.center.len();
        let mut rhs = DVector::from_element(n + 1, 1.0);
        rhs.rows_mut(0, n).copy_from_slice(x);
        (&self.barycentric * rhs).iter().copied().collect()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

/// An uncertainty family `{B(r) : r ≥ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    LpBall(LpBall),
    SpectralBall(SpectralBall),
    StarSimplex(StarSimplex),
}

impl UncertaintySet {
    pub fn lp_ball(order: NormOrder, dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("l_p ball dimension must be >= 1");
        }
        if order == NormOrder::Finite(0) {
            return invalid("l_p norm order must be a positive integer or infinity");
        }
        Ok(Self::LpBall(LpBall { order, dim }))
    }

    pub fn spectral_ball(blocks: Vec<BlockSpec>) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("spectral ball needs at least one block");
        }
        let mut densities = Vec::with_capacity(blocks.len());
        for b in &blocks {
            densities.push(match b.kind {
                BlockKind::ComplexFull => {
                    Some(SingularValueDensity::new(b.rows.max(b.cols), b.rows.min(b.cols))?)
                }
                BlockKind::RealFull if b.rows * b.cols > REAL_FULL_MAX_ENTRIES => {
                    return Err(Error::Unsupported(format!(
                        "real full block {}x{} exceeds {REAL_FULL_MAX_ENTRIES} entries",
                        b.rows, b.cols
                    )));
                }
                _ => None,
            });
        }
        Ok(Self::SpectralBall(SpectralBall { blocks, densities }))
    }

    /// Simplex `Q = conv(vertices)` scaled about `center`.
    pub fn star_simplex(vertices: Vec<Vec<f64>>, center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return invalid("star simplex dimension must be >= 1");
        }
        if vertices.len() != n + 1 || vertices.iter().any(|v| v.len() != n) {
            return invalid(format!("a simplex in R^{n} needs {} vertices of length {n}", n + 1));
        }
        let mut lifted = DMatrix::from_element(n + 1, n + 1, 1.0);
        for (j, v) in vertices.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                lifted[(i, j)] = *x;
            }
        }
        let scale = lifted.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let det = lifted.clone().lu().determinant();
        if det.abs() <= 1e-12 * scale.powi((n + 1) as i32) {
            return invalid("simplex vertices are affinely dependent");
        }
        let barycentric = lifted
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("simplex vertices are affinely dependent".into()))?;
        let mut simplex = StarSimplex {
            vertices,
            center,
            barycentric,
            center_weights: Vec::new(),
        };
        simplex.center_weights = simplex.weights(&simplex.center);
        if simplex.center_weights.iter().any(|&w| w <= 1e-12) {
            return invalid("star-shaped center must lie strictly inside the simplex");
        }
        Ok(Self::StarSimplex(simplex))
    }

    /// Volume-scaling exponent `d`: `vol(B(r)) = vol(B(1)) rᵈ`.
    pub fn dimension(&self) -> usize {
        match self {
            UncertaintySet::LpBall(b) => b.dim,
            UncertaintySet::SpectralBall(s) => s.blocks.iter().map(BlockSpec::kappa).sum(),
            UncertaintySet::StarSimplex(s) => s.center.len(),
        }
    }

    /// `vol(B(r_small)) / vol(B(r_large)) = (r_small / r_large)ᵈ`.
    pub fn volume_ratio(&self, r_small: f64, r_large: f64) -> Result<f64> {
        volume_ratio(self.dimension(), r_small, r_large)
    }

    /// The single point of `B(0)`.
    pub fn center(&self) -> UncertaintyPoint {
        match self {
            UncertaintySet::LpBall(b) => UncertaintyPoint::Vector(vec![0.0; b.dim]),
            UncertaintySet::StarSimplex(s) => UncertaintyPoint::Vector(s.center.clone()),
            UncertaintySet::SpectralBall(s) => UncertaintyPoint::Blocks(
                s.blocks
                    .iter()
                    .map(|b| match b.kind {
                        BlockKind::RealScalar => BlockValue::RealScalar(0.0),
                        BlockKind::ComplexScalar => BlockValue::ComplexScalar(C64::new(0.0, 0.0)),
                        BlockKind::RealFull => BlockValue::RealMatrix(DMatrix::zeros(b.rows, b.cols)),
                        BlockKind::ComplexFull => BlockValue::ComplexMatrix(DMatrix::zeros(b.rows, b.cols)),
                    })
                    .collect(),
            ),
        }
    }

    /// Gauge `ℓ(X) = min{r : X ∈ B(r)}`.
    pub fn gauge(&self, point: &UncertaintyPoint) -> Result<f64> {
        match (self, point) {
            (UncertaintySet::LpBall(b), UncertaintyPoint::Vector(x)) if x.len() == b.dim => Ok(b.order.norm(x)),
            (UncertaintySet::SpectralBall(s), UncertaintyPoint::Blocks(values))
                if values.len() == s.blocks.len() && values.iter().zip(&s.blocks).all(|(v, b)| v.matches(b)) =>
            {
                Ok(values.iter().map(BlockValue::magnitude).fold(0.0, f64::max))
            }
            (UncertaintySet::StarSimplex(s), UncertaintyPoint::Vector(x)) if x.len() == s.center.len() => {
                let weights = s.weights(x);
                Ok(weights
                    .iter()
                    .zip(&s.center_weights)
                    .map(|(w, c)| 1.0 - w / c)
                    .fold(0.0, f64::max))
            }
            _ => invalid("uncertainty point shape does not match the set"),
        }
    }

    /// Uniform draw over `B(r)`. `r = 0` returns the center.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, r: f64, rng: &mut R) -> Result<UncertaintyPoint> {
        if !(r >= 0.0) || !r.is_finite() {
            return invalid(format!("sampling radius must be finite and >= 0, got {r}"));
        }
        if r == 0.0 {
            return Ok(self.center());
        }
        let mut point = match self {
            UncertaintySet::LpBall(b) => UncertaintyPoint::Vector(sample_lp(b, r, rng)),
            UncertaintySet::StarSimplex(s) => UncertaintyPoint::Vector(sample_simplex(s, r, rng)),
            UncertaintySet::SpectralBall(s) => {
                let mut values = Vec::with_capacity(s.blocks.len());
                for (b, density) in s.blocks.iter().zip(&s.densities) {
                    values.push(match b.kind {
                        BlockKind::RealScalar => BlockValue::RealScalar(r * (2.0 * rng.random::<f64>() - 1.0)),
                        BlockKind::ComplexScalar => {
                            let angle = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                            BlockValue::ComplexScalar(C64::from_polar(r * rng.random::<f64>().sqrt(), angle))
                        }
                        BlockKind::RealFull => BlockValue::RealMatrix(sample_real_full(b.rows, b.cols, r, rng)?),
                        BlockKind::ComplexFull => {
                            let density = density.as_ref().expect("complex block density prepared at construction");
                            BlockValue::ComplexMatrix(sample_complex_full(b.rows, b.cols, r, density, rng)?)
                        }
                    });
                }
                UncertaintyPoint::Blocks(values)
            }
        };
        self.pull_inside(&mut point, r)?;
        Ok(point)
    }

    /// Rounding can leave a draw an ulp outside `B(r)`; shrink it back
    /// toward the center using gauge homogeneity.
    fn pull_inside(&self, point: &mut UncertaintyPoint, r: f64) -> Result<()> {
        for _ in 0..8 {
            let g = self.gauge(point)?;
            if g <= r {
                return Ok(());
            }
            let factor = (r / g) * (1.0 - 4.0 * f64::EPSILON);
            match (self, &mut *point) {
                (UncertaintySet::StarSimplex(s), UncertaintyPoint::Vector(x)) => {
                    for (xi, ci) in x.iter_mut().zip(&s.center) {
                        *xi = ci + (*xi - ci) * factor;
                    }
                }
                (_, UncertaintyPoint::Vector(x)) => x.iter_mut().for_each(|v| *v *= factor),
                (_, UncertaintyPoint::Blocks(values)) => values.iter_mut().for_each(|v| v.scale(factor)),
            }
        }
        invalid("sampled point could not be brought inside B(r)")
    }
}

/// `(r_small / r_large)^d`.
pub fn volume_ratio(dimension: usize, r_small: f64, r_large: f64) -> Result<f64> {
    if !(r_large > 0.0) {
        return invalid(format!("r_large must be > 0, got {r_large}"));
    }
    if !(r_small >= 0.0) || r_small > r_large {
        return invalid(format!("need 0 <= r_small <= r_large, got {r_small} > {r_large}"));
    }
    Ok((r_small / r_large).powi(dimension as i32))
}

/// Mean of the vertices.
pub fn centroid(vertices: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = vertices.first() else {
        return invalid("no vertices");
    };
    if vertices.iter().any(|v| v.len() != first.len()) {
        return invalid("vertices have differing dimensions");
    }
    let k = vertices.len() as f64;
    Ok((0..first.len()).map(|j| vertices.iter().map(|v| v[j]).sum::<f64>() / k).collect())
}

/// Empirical `Pr(ℓ(q) ≤ t·r)` for uniform `q` over `B(r)` against the exact
/// value `tᵈ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialCdfPoint {
    pub t: f64,
    pub empirical: f64,
    pub expected: f64,
    /// Binomial standard deviation of `empirical` under the exact law.
    pub sigma: f64,
}

impl RadialCdfPoint {
    pub fn z_score(&self) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else {
            (self.empirical - self.expected) / self.sigma
        }
    }
}

/// Draws `samples` points over `B(r)` keyed by `(seed, 0, k)` and tabulates
/// the gauge CDF at each `t ∈ (0, 1]`.
pub fn radial_cdf(set: &UncertaintySet, r: f64, samples: u32, seed: u64, ts: &[f64]) -> Result<Vec<RadialCdfPoint>> {
    if !(r > 0.0) || samples == 0 {
        return invalid("radial CDF needs r > 0 and at least one sample");
    }
    if ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return invalid("CDF levels must lie in (0, 1]");
    }
    let mut gauges = Vec::with_capacity(samples as usize);
    for k in 0..samples {
        let mut rng = crate::rng::draw_stream(seed, 0, k);
        gauges.push(set.gauge(&set.sample_uniform(r, &mut rng)?)? / r);
    }
    let d = set.dimension() as i32;
    let n = samples as f64;
    Ok(ts
        .iter()
        .map(|&t| {
            let expected = t.powi(d);
            RadialCdfPoint {
                t,
                empirical: gauges.iter().filter(|&&g| g <= t).count() as f64 / n,
                expected,
                sigma: (expected * (1.0 - expected) / n).sqrt(),
            }
        })
        .collect())
}

/// Coordinates with density `∝ exp(−|x|ᵖ)`, projected to the unit `l_p`
/// sphere and scaled by `r u^{1/n}`.
fn sample_lp<R: Rng + ?Sized>(ball: &LpBall, r: f64, rng: &mut R) -> Vec<f64> {
    let n = ball.dim;
    let p = match ball.order {
        NormOrder::Infinity => {
            return (0..n).map(|_| r * (2.0 * rng.random::<f64>() - 1.0)).collect();
        }
        NormOrder::Finite(p) => p as f64,
    };
    let gamma = Gamma::new(1.0 / p, 1.0).expect("shape 1/p is positive");
    loop {
        // |x_i|^p = g_i, so the l_p norm is (Σ g_i)^{1/p} without overflow.
        let g: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            continue;
        }
        let radius = r * rng.random::<f64>().powf(1.0 / n as f64);
        return g
            .iter()
            .map(|gi| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * radius * (gi / total).powf(1.0 / p)
            })
            .collect();
    }
}

/// Flat-Dirichlet point of `Q`, then the affine map `Δ ↦ r(Δ − Δ₀) + Δ₀`.
fn sample_simplex<R: Rng + ?Sized>(simplex: &StarSimplex, r: f64, rng: &mut R) -> Vec<f64> {
    let weights: Vec<f64> = (0..simplex.vertices.len()).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let n = simplex.center.len();
    let mut x = vec![0.0; n];
    for (w, v) in weights.iter().zip(&simplex.vertices) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += w / total * vi;
        }
    }
    x.iter_mut()
        .zip(&simplex.center)
        .for_each(|(xi, ci)| *xi = ci + r * (*xi - ci));
    x
}
