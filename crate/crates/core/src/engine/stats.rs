//! Sample sizing and exact binomial intervals.

use statrs::function::beta::beta_reg;

use crate::error::{invalid, Result};

/// `⌈ln(2/δ) / (2ε²)⌉`: samples for absolute error `ε` at confidence `1 − δ`.
pub fn chernoff_sample_size(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta must lie in (0, 1], got {delta}"));
    }
    let n = (2.0 / delta).ln() / (2.0 * epsilon * epsilon);
    // Guard against ln/division rounding just above an integer.
    let rounded = n.round();
    let n = if (n - rounded).abs() < 1e-9 * rounded.max(1.0) { rounded } else { n.ceil() };
    Ok(n as usize)
}

const BISECTION_TOLERANCE: f64 = 1e-12;

/// Root of an increasing `f` on `[0, 1]`.
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided `1 − δ` Clopper–Pearson interval for `successes` out of
/// `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, delta: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return invalid(format!("need 0 <= successes <= trials, trials >= 1; got {successes}/{trials}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    let (k, n) = (successes as f64, trials as f64);
    let tail = delta / 2.0;
    // P[X >= k] = I_p(k, n-k+1), increasing in p.
    let lo = if successes == 0 {
        0.0
    } else if successes == trials {
        tail.powf(1.0 / n)
    } else {
        bisect(|p| beta_reg(k, n - k + 1.0, p) - tail)
    };
    // P[X <= k] = 1 - I_p(k+1, n-k), decreasing in p.
    let hi = if successes == trials {
        1.0
    } else if successes == 0 {
        1.0 - tail.powf(1.0 / n)
    } else {
        bisect(|p| tail - (1.0 - beta_reg(k + 1.0, n - k, p)))
    };
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::single_stream;
    use rand_distr::{Binomial, Distribution};

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_sample_size(0.01, 0.01).unwrap(), 26492);
        assert_eq!(chernoff_sample_size(0.1, 0.05).unwrap(), 185);
        assert_eq!(chernoff_sample_size(0.5, 1.0).unwrap(), 2);
        assert!(chernoff_sample_size(0.0, 0.1).is_err());
        assert!(chernoff_sample_size(0.1, 0.0).is_err());
    }

    #[test]
    fn boundary_closed_forms() {
        let (lo, hi) = clopper_pearson(20, 20, 0.05).unwrap();
        assert_eq!(hi, 1.0);
        assert_eq!(lo, 0.025f64.powf(1.0 / 20.0));
        let (lo, hi) = clopper_pearson(0, 20, 0.05).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0 - 0.025f64.powf(1.0 / 20.0));
    }

    #[test]
    fn five_of_ten() {
        let (lo, hi) = clopper_pearson(5, 10, 0.05).unwrap();
        assert!((lo - 0.1871).abs() < 1e-3 && (hi - 0.8129).abs() < 1e-3, "{lo} {hi}");
    }

    #[test]
    fn invalid_counts() {
        assert!(clopper_pearson(3, 2, 0.05).is_err());
        assert!(clopper_pearson(0, 0, 0.05).is_err());
        assert!(clopper_pearson(1, 2, 1.0).is_err());
    }

    #[test]
    fn coverage_at_least_nominal() {
        let (p, n, delta) = (0.3, 100u64, 0.05);
        let binomial = Binomial::new(n, p).unwrap();
        let mut rng = single_stream(5);
        let draws = 10_000;
        let covered = (0..draws)
            .filter(|_| {
                let k = binomial.sample(&mut rng);
                let (lo, hi) = clopper_pearson(k, n, delta).unwrap();
                lo <= p && p <= hi
            })
            .count();
        // Exact intervals are conservative; allow 3σ of Monte Carlo noise.
        let sigma = (delta * (1.0 - delta) / draws as f64).sqrt();
        assert!(covered as f64 / draws as f64 >= 1.0 - delta - 3.0 * sigma, "{covered}");
    }
}
