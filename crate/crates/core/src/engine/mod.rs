//! Estimation of the robustness degradation function `P(r)` on a grid of
//! radii, with and without sample reuse.
//!
//! The reuse scheme walks the radii from largest to smallest. A uniform
//! draw `q` over `B(r_i)` is, conditioned on `ℓ(q) ≤ r_s`, a uniform draw
//! over `B(r_s)`, so its verdict is credited to every row `s ≥ i` with
//! `r_s ≥ ℓ(q)`. Phase `i` then only tops row `i` up to `N` trials.

mod efficiency;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::draw_stream;
use crate::uncertainty::{UncertaintyPoint, UncertaintySet};

pub use efficiency::{
    expected_fresh, figure_reuse_curves, linspace_ratio, linspace_reuse_factor, theoretical_reuse_factor,
    FigureConfig, FigureTable, FIGURE_IDENTITY_TOLERANCE,
};
pub use stats::{chernoff_sample_size, clopper_pearson};

/// The robustness requirement as a pure predicate on uncertainty values.
/// Called concurrently from every worker.
pub trait Requirement: Sync {
    fn is_satisfied(&self, point: &UncertaintyPoint) -> bool;
}

impl<F> Requirement for F
where
    F: Fn(&UncertaintyPoint) -> bool + Sync,
{
    fn is_satisfied(&self, point: &UncertaintyPoint) -> bool {
        self(point)
    }
}

/// Strictly decreasing radii `r₁ > r₂ > … > r_l ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusGrid {
    radii: Vec<f64>,
}

impl RadiusGrid {
    /// `r_i = b − (b − a)(i − 1)/(l − 1)`, from `b` down to `a`.
    pub fn linspace(a: f64, b: f64, l: usize) -> Result<Self> {
        if !(a >= 0.0) || !b.is_finite() || a >= b {
            return invalid(format!("need 0 <= a < b, got a={a}, b={b}"));
        }
        if l == 0 {
            return invalid("grid needs at least one radius");
        }
        if l == 1 {
            return Ok(Self { radii: vec![b] });
        }
        let step = (b - a) / (l - 1) as f64;
        let mut radii: Vec<f64> = (0..l).map(|k| b - step * k as f64).collect();
        radii[l - 1] = a;
        Self::from_radii(radii)
    }

    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return invalid("grid needs at least one radius");
        }
        if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return invalid("radii must be finite and >= 0");
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("radii must be strictly decreasing");
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// First index whose radius is below `gauge`; rows before it contain the
    /// point.
    fn covering_end(&self, gauge: f64) -> usize {
        self.radii.partition_point(|&r| r >= gauge)
    }
}

/// Per-radius `(trials, successes)` counts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TallyMatrix {
    pub trials: Vec<u64>,
    pub successes: Vec<u64>,
}

impl TallyMatrix {
    pub fn zeros(l: usize) -> Self {
        Self {
            trials: vec![0; l],
            successes: vec![0; l],
        }
    }
}

/// How the per-radius estimate is formed from the tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// `m_i2 / m_i1`, interval on `(m_i2, m_i1)`. A zero radius is
    /// evaluated once and reported with a degenerate interval.
    #[default]
    Ratio,
    /// `m_i2 / N` with the interval on `(min(m_i2, N), N)`; a zero radius is
    /// topped up to `N` identical trials.
    Literal,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// `N`.
    pub samples_per_radius: usize,
    /// Intervals are reported at level `1 − δ`.
    pub delta: f64,
    pub grid: RadiusGrid,
    pub set: UncertaintySet,
    pub seed: u64,
    pub workers: usize,
    pub mode: EstimatorMode,
}

impl EngineConfig {
    pub fn new(samples_per_radius: usize, delta: f64, grid: RadiusGrid, set: UncertaintySet, seed: u64) -> Self {
        Self {
            samples_per_radius,
            delta,
            grid,
            set,
            seed,
            workers: 1,
            mode: EstimatorMode::Ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_radius == 0 {
            return invalid("samples per radius must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.workers == 0 {
            return invalid("workers must be >= 1");
        }
        if self.grid.len() > u32::MAX as usize || self.samples_per_radius > u32::MAX as usize {
            return invalid("grid or sample count too large for the stream key space");
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub radius: f64,
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fresh draws made while this radius was the sampling radius.
    pub fresh_samples: u64,
}

/// Estimated `P(r_i)` with intervals, largest radius first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationCurve {
    pub samples_per_radius: usize,
    pub delta: f64,
    pub mode: EstimatorMode,
    pub points: Vec<CurvePoint>,
}

impl DegradationCurve {
    fn from_tallies(
        config: &EngineConfig,
        tally: &TallyMatrix,
        fresh: &[u64],
    ) -> Result<Self> {
        let n = config.samples_per_radius as u64;
        let mut points = Vec::with_capacity(tally.trials.len());
        for (i, &radius) in config.grid.radii().iter().enumerate() {
            let (trials, successes) = (tally.trials[i], tally.successes[i]);
            let (estimate, (ci_low, ci_high)) = match config.mode {
                // B(0) is a single point: the verdict is P(0) exactly.
                EstimatorMode::Ratio if radius == 0.0 => {
                    let p = successes as f64 / trials as f64;
                    (p, (p, p))
                }
                EstimatorMode::Ratio => (
                    successes as f64 / trials as f64,
                    clopper_pearson(successes, trials, config.delta)?,
                ),
                EstimatorMode::Literal => {
                    let k = successes.min(n);
                    (k as f64 / n as f64, clopper_pearson(k, n, config.delta)?)
                }
            };
            points.push(CurvePoint {
                radius,
                trials,
                successes,
                estimate,
                ci_low,
                ci_high,
                fresh_samples: fresh[i],
            });
        }
        Ok(Self {
            samples_per_radius: config.samples_per_radius,
            delta: config.delta,
            mode: config.mode,
            points,
        })
    }

    pub fn total_fresh(&self) -> u64 {
        self.points.iter().map(|p| p.fresh_samples).sum()
    }
}

/// Sample cost of a reuse run against the conventional `N·l` budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReuseReport {
    /// Volume-scaling exponent `d` of the set.
    pub dimension: usize,
    pub theoretical_factor: f64,
    pub empirical_factor: f64,
    pub expected_fresh: Vec<f64>,
    pub observed_fresh: Vec<u64>,
    pub total_fresh: u64,
    pub conventional_budget: u64,
}

/// `N·l / Σ n_i`.
pub fn empirical_reuse_factor(curve: &DegradationCurve) -> f64 {
    let budget = (curve.samples_per_radius * curve.points.len()) as f64;
    budget / curve.total_fresh() as f64
}

// Difference-array tallies for one worker: row range [start, end) gets +1.
struct Local {
    trials: Vec<i64>,
    successes: Vec<i64>,
}

impl Local {
    fn new(l: usize) -> Self {
        Self {
            trials: vec![0; l + 1],
            successes: vec![0; l + 1],
        }
    }

    fn credit(&mut self, start: usize, end: usize, success: bool) {
        self.trials[start] += 1;
        self.trials[end] -= 1;
        if success {
            self.successes[start] += 1;
            self.successes[end] -= 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.trials.iter_mut().zip(other.trials) {
            *a += b;
        }
        for (a, b) in self.successes.iter_mut().zip(other.successes) {
            *a += b;
        }
        self
    }

    fn apply(self, tally: &mut TallyMatrix) {
        let (mut t, mut s) = (0i64, 0i64);
        for i in 0..tally.trials.len() {
            t += self.trials[i];
            s += self.successes[i];
            tally.trials[i] += t as u64;
            tally.successes[i] += s as u64;
        }
    }
}

/// Draws `count` fresh points at radius index `phase`, keyed by
/// `(seed, phase, draw)`, and credits them. With `reuse` off only row
/// `phase` is credited.
fn run_phase<Q: Requirement + ?Sized>(
    config: &EngineConfig,
    requirement: &Q,
    phase: usize,
    count: u64,
    reuse: bool,
) -> Result<Local> {
    let l = config.grid.len();
    let radius = config.grid.radii()[phase];
    (0..count)
        .into_par_iter()
        .try_fold(
            || Local::new(l),
            |mut local, k| -> Result<Local> {
                let mut rng = draw_stream(config.seed, phase as u32, k as u32);
                let q = config.set.sample_uniform(radius, &mut rng)?;
                let success = requirement.is_satisfied(&q);
                let end = if reuse {
                    config.grid.covering_end(config.set.gauge(&q)?).max(phase + 1)
                } else {
                    phase + 1
                };
                local.credit(phase, end, success);
                Ok(local)
            },
        )
        .try_reduce(|| Local::new(l), |a, b| Ok(a.merge(b)))
}

/// Sample-reuse estimate of the degradation curve.
pub fn run_sample_reuse<Q: Requirement + ?Sized>(
    config: &EngineConfig,
    requirement: &Q,
) -> Result<(DegradationCurve, ReuseReport)> {
    let (curve, _) = run_sample_reuse_with_tallies(config, requirement)?;
    let report = reuse_report(config, &curve)?;
    Ok((curve, report))
}

/// [`run_sample_reuse`] that also returns the final tallies.
pub fn run_sample_reuse_with_tallies<Q: Requirement + ?Sized>(
    config: &EngineConfig,
    requirement: &Q,
) -> Result<(DegradationCurve, TallyMatrix)> {
    config.validate()?;
    let pool = config.pool()?;
    let l = config.grid.len();
    let n = config.samples_per_radius as u64;
    let mut tally = TallyMatrix::zeros(l);
    let mut fresh = vec![0u64; l];
    for i in 0..l {
        let have = tally.trials[i];
        let count = if config.grid.radii()[i] == 0.0 && config.mode == EstimatorMode::Ratio {
            u64::from(have == 0)
        } else {
            n.saturating_sub(have)
        };
        let local = pool.install(|| run_phase(config, requirement, i, count, true))?;
        local.apply(&mut tally);
        fresh[i] = count;
    }
    let curve = DegradationCurve::from_tallies(config, &tally, &fresh)?;
    Ok((curve, tally))
}

/// Independent `N`-sample estimate at every radius.
pub fn run_conventional<Q: Requirement + ?Sized>(config: &EngineConfig, requirement: &Q) -> Result<DegradationCurve> {
    config.validate()?;
    let pool = config.pool()?;
    let l = config.grid.len();
    let n = config.samples_per_radius as u64;
    let mut tally = TallyMatrix::zeros(l);
    for i in 0..l {
        let local = pool.install(|| run_phase(config, requirement, i, n, false))?;
        local.apply(&mut tally);
    }
    DegradationCurve::from_tallies(config, &tally, &vec![n; l])
}

pub fn reuse_report(config: &EngineConfig, curve: &DegradationCurve) -> Result<ReuseReport> {
    let d = config.set.dimension();
    let d32 = u32::try_from(d).map_err(|_| Error::InvalidArgument(format!("dimension {d} too large")))?;
    let expected = (0..config.grid.len())
        .map(|i| expected_fresh(&config.grid, d32, config.samples_per_radius, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReuseReport {
        dimension: d,
        theoretical_factor: theoretical_reuse_factor(&config.grid, d32),
        empirical_factor: empirical_reuse_factor(curve),
        expected_fresh: expected,
        observed_fresh: curve.points.iter().map(|p| p.fresh_samples).collect(),
        total_fresh: curve.total_fresh(),
        conventional_budget: (config.samples_per_radius * config.grid.len()) as u64,
    })
}

/// Conservative lower bound on `inf_{0 ≤ ρ ≤ r_i} P(ρ)`: the running
/// minimum of `ci_low` over all sampled radii `≤ r_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundCurve {
    pub bounds: Vec<f64>,
    /// The smallest sampled radius is positive, so the infimum only runs
    /// over `[r_l, r_i]`.
    pub restricted: bool,
}

pub fn lower_bound_curve(curve: &DegradationCurve) -> LowerBoundCurve {
    let values: Vec<f64> = curve.points.iter().map(|p| p.ci_low).collect();
    LowerBoundCurve {
        bounds: running_min_from_small(&values),
        restricted: curve.points.last().is_some_and(|p| p.radius > 0.0),
    }
}

/// `out[i] = min(values[i..])`.
pub fn running_min_from_small(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::NormOrder;

    fn box3() -> UncertaintySet {
        UncertaintySet::lp_ball(NormOrder::Infinity, 3).unwrap()
    }

    #[test]
    fn linspace_examples() {
        assert_eq!(RadiusGrid::linspace(0.0, 1.0, 5).unwrap().radii(), &[1.0, 0.75, 0.5, 0.25, 0.0]);
        assert_eq!(RadiusGrid::linspace(1.0, 2.0, 2).unwrap().radii(), &[2.0, 1.0]);
        assert_eq!(RadiusGrid::linspace(1.0, 2.0, 1).unwrap().radii(), &[2.0]);
        let g = RadiusGrid::linspace(0.5, 3.0, 100).unwrap();
        for w in g.radii().windows(2) {
            assert!(((w[0] - w[1]) - 2.5 / 99.0).abs() < 1e-14);
        }
        assert!(RadiusGrid::linspace(2.0, 2.0, 3).is_err());
        assert!(RadiusGrid::linspace(3.0, 2.0, 3).is_err());
    }

    #[test]
    fn radii_validation() {
        let err = RadiusGrid::from_radii(vec![1.0, 1.0, 0.5]).unwrap_err();
        assert!(err.to_string().contains("radii must be strictly decreasing"));
        assert!(RadiusGrid::from_radii(vec![1.0, -0.5]).is_err());
        assert!(RadiusGrid::from_radii(vec![]).is_err());
    }

    #[test]
    fn running_min_example() {
        assert_eq!(running_min_from_small(&[1.0, 0.8, 0.9]), vec![0.8, 0.8, 0.9]);
    }

    #[test]
    fn always_true_is_all_ones() {
        let grid = RadiusGrid::linspace(0.0, 2.0, 10).unwrap();
        let cfg = EngineConfig::new(200, 0.01, grid, box3(), 3);
        let (curve, report) = run_sample_reuse(&cfg, &|_: &UncertaintyPoint| true).unwrap();
        for p in &curve.points {
            assert_eq!(p.estimate, 1.0);
            assert_eq!(p.ci_high, 1.0);
            assert!(p.ci_low <= p.estimate);
        }
        // Zero radius evaluated exactly once, with no sampling uncertainty.
        let last = curve.points.last().unwrap();
        assert_eq!((last.trials, last.fresh_samples), (1, 1));
        assert_eq!((last.ci_low, last.ci_high), (1.0, 1.0));
        assert!(report.theoretical_factor >= 1.0);
        assert_eq!(report.conventional_budget, 2000);
        let conventional = run_conventional(&cfg, &|_: &UncertaintyPoint| true).unwrap();
        assert_eq!(conventional.total_fresh(), 2000);
        assert_eq!(empirical_reuse_factor(&conventional), 1.0);
        let lb = lower_bound_curve(&curve);
        assert!(!lb.restricted);
        // The zero-radius row must not drag the bound below the sampled rows.
        let smallest_sampled = curve.points[curve.points.len() - 2].ci_low;
        assert!(lb.bounds.iter().all(|&b| b >= smallest_sampled.min(curve.points[0].ci_low) - 1e-12));
        assert!(lb.bounds[0] > 0.9);
    }

    #[test]
    fn exact_top_up_and_completion() {
        let grid = RadiusGrid::linspace(0.5, 1.0, 8).unwrap();
        let cfg = EngineConfig::new(300, 0.01, grid, box3(), 11);
        let (curve, tally) = run_sample_reuse_with_tallies(&cfg, &|_: &UncertaintyPoint| true).unwrap();
        assert_eq!(curve.points[0].fresh_samples, 300);
        for (i, p) in curve.points.iter().enumerate() {
            assert!(tally.trials[i] >= 300);
            assert!(tally.successes[i] <= tally.trials[i]);
            // Trials beyond the top-up came from earlier phases.
            assert!(p.fresh_samples <= 300);
        }
        assert_eq!(curve.total_fresh(), curve.points.iter().map(|p| p.fresh_samples).sum::<u64>());
    }

    #[test]
    fn literal_mode_tops_up_zero_radius() {
        let grid = RadiusGrid::linspace(0.0, 1.0, 3).unwrap();
        let mut cfg = EngineConfig::new(50, 0.05, grid, box3(), 2);
        cfg.mode = EstimatorMode::Literal;
        let (curve, _) = run_sample_reuse(&cfg, &|_: &UncertaintyPoint| true).unwrap();
        assert_eq!(curve.points[2].trials, 50);
        cfg.mode = EstimatorMode::Ratio;
        let (curve, _) = run_sample_reuse(&cfg, &|_: &UncertaintyPoint| true).unwrap();
        assert!(curve.points[2].fresh_samples <= 1);
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let set = box3();
        let grid = RadiusGrid::linspace(0.2, 1.0, 12).unwrap();
        let req = |q: &UncertaintyPoint| q.coordinates()[0] + q.coordinates()[1] < 0.3;
        let mut cfg = EngineConfig::new(400, 0.01, grid, set, 99);
        let (one, t1) = run_sample_reuse_with_tallies(&cfg, &req).unwrap();
        let (again, t1b) = run_sample_reuse_with_tallies(&cfg, &req).unwrap();
        assert_eq!(t1, t1b);
        assert_eq!(one, again);
        cfg.workers = 4;
        let (four, t4) = run_sample_reuse_with_tallies(&cfg, &req).unwrap();
        assert_eq!(t1, t4);
        assert_eq!(one, four);
    }

    #[test]
    fn single_radius_equals_conventional() {
        let grid = RadiusGrid::from_radii(vec![1.0]).unwrap();
        let cfg = EngineConfig::new(500, 0.01, grid, box3(), 7);
        let req = |q: &UncertaintyPoint| q.coordinates()[2] > 0.1;
        let (reuse, report) = run_sample_reuse(&cfg, &req).unwrap();
        let conventional = run_conventional(&cfg, &req).unwrap();
        assert_eq!(reuse, conventional);
        assert_eq!(report.empirical_factor, 1.0);
    }

    #[test]
    fn synthetic_truth_within_intervals() {
        let set = box3();
        let r_star = 0.73;
        let grid = RadiusGrid::linspace(0.4, 1.2, 9).unwrap();
        let cfg = EngineConfig::new(4000, 0.01, grid, set.clone(), 21);
        let req = move |q: &UncertaintyPoint| set.gauge(q).unwrap() <= r_star;
        let (curve, _) = run_sample_reuse(&cfg, &req).unwrap();
        for p in &curve.points {
            let truth = (r_star / p.radius).powi(3).min(1.0);
            assert!(p.ci_low <= truth && truth <= p.ci_high, "r={} est={} truth={truth}", p.radius, p.estimate);
        }
    }

    #[test]
    fn config_validation() {
        let grid = RadiusGrid::from_radii(vec![1.0]).unwrap();
        let mut cfg = EngineConfig::new(0, 0.01, grid, box3(), 0);
        assert!(run_conventional(&cfg, &|_: &UncertaintyPoint| true).is_err());
        cfg.samples_per_radius = 10;
        cfg.delta = 1.0;
        assert!(run_conventional(&cfg, &|_: &UncertaintyPoint| true).is_err());
        cfg.delta = 0.1;
        cfg.workers = 0;
        assert!(run_conventional(&cfg, &|_: &UncertaintyPoint| true).is_err());
    }
}
