//! Small dense-matrix helpers for full uncertainty blocks.

use nalgebra::{ComplexField, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::singular::SingularValueDensity;
use crate::error::{invalid, Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Entry limit for real full blocks sampled by box rejection.
pub const REAL_FULL_MAX_ENTRIES: usize = 9;

/// Iteration cap for real full-block rejection.
pub const REAL_FULL_REJECTION_CAP: u64 = 10_000_000;

/// Largest singular value, from the dominant eigenvalue of the smaller
/// Gram matrix.
pub fn max_singular_value<T>(matrix: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    if matrix.is_empty() {
        return 0.0;
    }
    let adjoint = matrix.adjoint();
    let gram = if matrix.nrows() >= matrix.ncols() {
        &adjoint * matrix
    } else {
        matrix * &adjoint
    };
    let largest = gram
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    largest.max(0.0).sqrt()
}

/// Haar-distributed `n × n` unitary matrix.
///
/// QR of a complex Gaussian matrix, with the phases of `R`'s diagonal moved
/// into `Q` so the factorization is unique and the result exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let gaussian = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let modulus = d.norm();
        let phase = if modulus > 0.0 { d / modulus } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniform draw from `{Δ ∈ C^{rows×cols} : σ̄(Δ) ≤ radius}`.
///
/// `density` must be prepared for `(max(rows, cols), min(rows, cols))`.
pub fn sample_complex_full<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    radius: f64,
    density: &SingularValueDensity,
    rng: &mut R,
) -> Result<DMatrix<C64>> {
    let (big, small) = (rows.max(cols), rows.min(cols));
    if density.rows() != big || density.cols() != small {
        return invalid(format!(
            "density prepared for {}x{}, block is {rows}x{cols}",
            density.rows(),
            density.cols()
        ));
    }
    let sigma = density.sample(rng)?;
    let left = haar_unitary(big, rng);
    let right = haar_unitary(small, rng);
    let mut scaled = left.columns(0, small).into_owned();
    for (j, s) in sigma.iter().enumerate() {
        let factor = C64::new(radius * s, 0.0);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= factor);
    }
    let tall = scaled * right.adjoint();
    Ok(if rows >= cols { tall } else { tall.transpose() })
}

/// Uniform draw from `{Δ ∈ R^{rows×cols} : σ̄(Δ) ≤ radius}` by rejection
/// from the entrywise box `[−radius, radius]`, which contains the ball.
pub fn sample_real_full<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    radius: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if rows * cols > REAL_FULL_MAX_ENTRIES {
        return Err(Error::Unsupported(format!(
            "real full block {rows}x{cols} exceeds {REAL_FULL_MAX_ENTRIES} entries"
        )));
    }
    for _ in 0..REAL_FULL_REJECTION_CAP {
        let candidate = DMatrix::from_fn(rows, cols, |_, _| radius * (2.0 * rng.random::<f64>() - 1.0));
        if max_singular_value(&candidate) <= radius {
            return Ok(candidate);
        }
    }
    Err(Error::ResourceExhausted {
        what: format!("real {rows}x{cols} full block"),
        iterations: REAL_FULL_REJECTION_CAP,
        acceptance_rate: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single_stream;
    use std::f64::consts::PI;

    /// One-sided Jacobi SVD, used only as an independent oracle.
    fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
        let mut u = a.clone();
        let n = u.ncols();
        for _ in 0..100 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha: f64 = u.column(p).norm_squared();
                    let beta: f64 = u.column(q).norm_squared();
                    let gamma: f64 = u.column(p).dot(&u.column(q));
                    off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                    if gamma.abs() < 1e-300 {
                        continue;
                    }
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..u.nrows() {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    #[test]
    fn diagonal_and_shift() {
        let d = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.0, 0.2]);
        assert!((max_singular_value(&d) - 0.6).abs() < 1e-14);
        let shift = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((max_singular_value(&shift) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_jacobi_oracle() {
        let mut rng = single_stream(5);
        for _ in 0..50 {
            let a = DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let oracle = jacobi_singular_values(&a)[0];
            assert!((max_singular_value(&a) - oracle).abs() < 1e-10);
        }
        let wide = DMatrix::from_fn(2, 5, |_, _| rng.random::<f64>() - 0.5);
        let oracle = jacobi_singular_values(&wide.transpose())[0];
        assert!((max_singular_value(&wide) - oracle).abs() < 1e-10);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = single_stream(6);
        for n in 1..=5 {
            let u = haar_unitary(n, &mut rng);
            let err = (&u * u.adjoint() - DMatrix::<C64>::identity(n, n))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(err <= 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn haar_scalar_phase_is_uniform() {
        let mut rng = single_stream(7);
        let draws = 40_000;
        let mut quadrant = [0usize; 4];
        for _ in 0..draws {
            let z = haar_unitary(1, &mut rng)[(0, 0)];
            assert!((z.norm() - 1.0).abs() < 1e-12);
            let arg = z.arg().rem_euclid(2.0 * PI);
            quadrant[((arg / (PI / 2.0)) as usize).min(3)] += 1;
        }
        let sd = (0.25 * 0.75 / draws as f64).sqrt();
        for count in quadrant {
            assert!((count as f64 / draws as f64 - 0.25).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn haar_first_column_is_uniform_on_sphere() {
        let mut rng = single_stream(8);
        let n = 3;
        let draws = 20_000;
        let values: Vec<f64> = (0..draws)
            .map(|_| haar_unitary(n, &mut rng)[(0, 0)].norm_sqr())
            .collect();
        let mean = values.iter().sum::<f64>() / draws as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 1.0 / n as f64).abs() < 3.0 * se);
    }

    #[test]
    fn complex_disk_area_ratio() {
        let density = SingularValueDensity::new(1, 1).unwrap();
        let mut rng = single_stream(9);
        let draws = 50_000;
        let r = 2.0;
        let inside = (0..draws)
            .filter(|_| sample_complex_full(1, 1, r, &density, &mut rng).unwrap()[(0, 0)].norm() <= r / 2.0)
            .count();
        let sd = (0.25 * 0.75 / draws as f64).sqrt();
        assert!((inside as f64 / draws as f64 - 0.25).abs() < 3.0 * sd);
    }

    #[test]
    fn complex_two_by_two_radial_law() {
        let density = SingularValueDensity::new(2, 2).unwrap();
        let mut rng = single_stream(10);
        let draws = 50_000;
        let norms: Vec<f64> = (0..draws)
            .map(|_| max_singular_value(&sample_complex_full(2, 2, 1.0, &density, &mut rng).unwrap()))
            .collect();
        for t in [0.7f64, 0.9] {
            let p = t.powi(8);
            let frac = norms.iter().filter(|&&s| s <= t).count() as f64 / draws as f64;
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((frac - p).abs() < 3.0 * sd, "t={t} frac={frac} p={p}");
        }
    }

    #[test]
    fn full_blocks_respect_support() {
        let mut rng = single_stream(11);
        let wide = SingularValueDensity::new(3, 2).unwrap();
        for _ in 0..20_000 {
            let c = sample_complex_full(2, 3, 0.7, &wide, &mut rng).unwrap();
            assert_eq!((c.nrows(), c.ncols()), (2, 3));
            assert!(max_singular_value(&c) <= 0.7 * (1.0 + 1e-12));
            let r = sample_real_full(2, 2, 0.7, &mut rng).unwrap();
            assert!(max_singular_value(&r) <= 0.7);
        }
    }

    #[test]
    fn large_real_blocks_are_unsupported() {
        let mut rng = single_stream(12);
        assert!(matches!(sample_real_full(2, 5, 1.0, &mut rng), Err(Error::Unsupported(_))));
    }
}
