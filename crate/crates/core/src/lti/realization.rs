use nalgebra::{DMatrix, DVector};

use super::poly::trim;
use crate::error::{invalid, Result};

/// Controllable canonical realization `(A, B, C, D)` of a proper SISO
/// transfer function.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn from_transfer(num: &[f64], den: &[f64]) -> Result<Self> {
        let den = trim(den);
        let num = trim(num);
        if den.is_empty() {
            return invalid("denominator is identically zero");
        }
        if num.len() > den.len() {
            return invalid("transfer function is improper");
        }
        let n = den.len() - 1;
        let lead = den[0];
        let a_coef: Vec<f64> = den.iter().map(|c| c / lead).collect();
        let mut b_coef = vec![0.0; n + 1 - num.len()];
        b_coef.extend(num.iter().map(|c| c / lead));

        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        let mut c = DVector::zeros(n);
        let d = b_coef[0];
        if n > 0 {
            for j in 0..n {
                a[(n - 1, j)] = -a_coef[n - j];
                c[j] = b_coef[n - j] - a_coef[n - j] * d;
            }
            b[n - 1] = 1.0;
        }
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}
