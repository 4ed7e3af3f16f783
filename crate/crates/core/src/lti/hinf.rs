//! H∞ norm of a stable SISO transfer function.
//!
//! A 200-point logarithmic frequency sweep gives a lower bound `γ`. The
//! Hamiltonian matrix built from the realization at `(1 + 2ε)γ` has
//! imaginary-axis eigenvalues `jω_k` exactly where `|T(jω)|` crosses that
//! level; `|T|` at the midpoints of consecutive crossings raises `γ`. The
//! bound is always an attained gain, so it never overshoots the norm.

use nalgebra::DMatrix;

use super::poly::{eval_complex, is_hurwitz, poles, trim};
use super::realization::StateSpace;
use crate::error::{invalid, Result};
use crate::uncertainty::C64;

const SWEEP_POINTS: usize = 200;
const RELATIVE_TOLERANCE: f64 = 1e-9;
const AXIS_TOLERANCE: f64 = 1e-5;
const MAX_ITERATIONS: usize = 100;

fn gain(num: &[f64], den: &[f64], w: f64) -> f64 {
    let s = C64::new(0.0, w);
    (eval_complex(num, s) / eval_complex(den, s)).norm()
}

/// Largest `|T(jω)|` over the sweep used to seed the bisection.
pub fn sweep_peak(num: &[f64], den: &[f64]) -> Result<f64> {
    let roots = poles(den)?;
    Ok(sweep(num, den, &roots).1)
}

fn sweep(num: &[f64], den: &[f64], roots: &[C64]) -> (Vec<f64>, f64) {
    let mags: Vec<f64> = roots.iter().map(|z| z.norm()).filter(|m| *m > 0.0).collect();
    let low = mags.iter().copied().fold(f64::INFINITY, f64::min).min(1.0) * 1e-2;
    let high = mags.iter().copied().fold(0.0, f64::max).max(1.0) * 1e2;
    let (l0, l1) = (low.log10(), high.log10());
    let freqs: Vec<f64> = (0..SWEEP_POINTS)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (SWEEP_POINTS - 1) as f64))
        .collect();
    let peak = freqs
        .iter()
        .map(|&w| gain(num, den, w))
        .fold(gain(num, den, 0.0), f64::max);
    (freqs, peak)
}

/// Imaginary-axis eigenvalue frequencies of the γ-Hamiltonian.
fn axis_crossings(ss: &StateSpace, gamma: f64) -> Vec<f64> {
    let n = ss.order();
    let d = ss.d;
    // SISO: DᵀD − γ² and DDᵀ − γ² coincide.
    let r = d * d - gamma * gamma;
    let bt = ss.b.transpose();
    let ct = ss.c.transpose();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let top_left = &ss.a - &ss.b * (d / r) * &ct;
    let top_right = &ss.b * &bt * (-gamma / r);
    let bottom_left = ss.c.clone() * (gamma / r) * &ct;
    let bottom_right = -ss.a.transpose() + ss.c.clone() * (d / r) * &bt;
    h.view_mut((0, 0), (n, n)).copy_from(&top_left);
    h.view_mut((0, n), (n, n)).copy_from(&top_right);
    h.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    h.view_mut((n, n), (n, n)).copy_from(&bottom_right);
    let mut out: Vec<f64> = h
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re.abs() <= AXIS_TOLERANCE * z.norm().max(1.0))
        .map(|z| z.im.abs())
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Coefficients of `num(ω₀s), den(ω₀s)`, with `ω₀` the geometric mean of
/// the pole magnitudes. The sup over the axis is unchanged and the
/// companion matrix is far better conditioned.
fn frequency_scaled(num: &[f64], den: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = den.len() - 1;
    let (lead, last) = (den[0], den[n]);
    let w0 = if n > 0 && last != 0.0 { (last / lead).abs().powf(1.0 / n as f64) } else { 1.0 };
    let scale = |p: &[f64]| -> Vec<f64> {
        let deg = p.len() - 1;
        p.iter().enumerate().map(|(k, c)| c * w0.powi((deg - k) as i32) / lead).collect()
    };
    (scale(num), scale(den))
}

/// `sup_ω |num(jω)/den(jω)|` for a stable, proper transfer function.
pub fn hinf_norm(num: &[f64], den: &[f64]) -> Result<f64> {
    let num = trim(num);
    let den = trim(den);
    if num.is_empty() {
        return Ok(0.0);
    }
    let roots = if den.len() >= 2 { poles(&den)? } else { Vec::new() };
    if den.is_empty() {
        return invalid("denominator is identically zero");
    }
    if !is_hurwitz(&roots) {
        return invalid("H-infinity norm is infinite for an unstable denominator");
    }
    let (num, den) = frequency_scaled(&num, &den);
    let mut ss = StateSpace::from_transfer(&num, &den)?;
    let balance = (ss.c.norm() / ss.b.norm()).sqrt();
    if balance.is_finite() && balance > 0.0 {
        ss.b *= balance;
        ss.c /= balance;
    }
    if ss.order() == 0 {
        return Ok(ss.d.abs());
    }
    let roots = poles(&den)?;
    let (_, peak) = sweep(&num, &den, &roots);
    let mut lo = peak.max(ss.d.abs());
    if lo == 0.0 {
        return Ok(0.0);
    }

    for _ in 0..MAX_ITERATIONS {
        let crossings = axis_crossings(&ss, lo * (1.0 + 2.0 * RELATIVE_TOLERANCE));
        if crossings.is_empty() {
            break;
        }
        let mut best = lo;
        for (k, &w) in crossings.iter().enumerate() {
            best = best.max(gain(&num, &den, w));
            if let Some(&next) = crossings.get(k + 1) {
                best = best.max(gain(&num, &den, 0.5 * (w + next)));
            }
        }
        // Near-axis eigenvalues that are not true crossings give no progress.
        if best <= lo * (1.0 + RELATIVE_TOLERANCE) {
            break;
        }
        lo = best;
    }
    Ok(lo)
}
