//! Unit-step simulation by exact zero-order-hold discretization, and the
//! peak / rise / settling metrics computed from the samples.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::realization::StateSpace;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RiseDefinition {
    #[default]
    #[serde(rename = "10-90")]
    TenToNinety,
    #[serde(rename = "0-90")]
    ZeroToNinety,
}

impl RiseDefinition {
    pub fn lower_fraction(&self) -> f64 {
        match self {
            RiseDefinition::TenToNinety => 0.1,
            RiseDefinition::ZeroToNinety => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SettlingBand {
    #[default]
    #[serde(rename = "2%")]
    TwoPercent,
    #[serde(rename = "5%")]
    FivePercent,
}

impl SettlingBand {
    pub fn fraction(&self) -> f64 {
        match self {
            SettlingBand::TwoPercent => 0.02,
            SettlingBand::FivePercent => 0.05,
        }
    }
}

/// Output samples at `t = 0, dt, 2dt, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Maximum sample over the final value.
    pub peak: f64,
    pub rise_time: f64,
    pub settling_time: f64,
    pub final_value: f64,
}

/// Unit-step response of `num/den`.
pub fn step_response(num: &[f64], den: &[f64], dt: f64, horizon: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return invalid(format!("need dt > 0 and horizon >= dt, got dt={dt}, horizon={horizon}"));
    }
    let ss = StateSpace::from_transfer(num, den)?;
    let n = ss.order();
    let steps = (horizon / dt + 1e-9).floor() as usize;
    if n == 0 {
        return Ok(Trajectory { dt, values: vec![ss.d; steps + 1] });
    }

    // exp([[A, B], [0, 0]] dt) = [[Φ, Γ], [0, 1]]
    let mut augmented = DMatrix::<f64>::zeros(n + 1, n + 1);
    augmented.view_mut((0, 0), (n, n)).copy_from(&(&ss.a * dt));
    augmented.view_mut((0, n), (n, 1)).copy_from(&(&ss.b * dt));
    let transition = augmented.exp();
    let phi = transition.view((0, 0), (n, n)).into_owned();
    let gamma: DVector<f64> = transition.view((0, n), (n, 1)).column(0).into_owned();

    let mut x = DVector::<f64>::zeros(n);
    let mut values = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        values.push(ss.c.dot(&x) + ss.d);
        x = &phi * x + &gamma;
    }
    Ok(Trajectory { dt, values })
}

/// First time the trajectory reaches `threshold`, linearly interpolated.
fn first_crossing(traj: &Trajectory, threshold: f64) -> Result<f64> {
    let k = traj
        .values
        .iter()
        .position(|&y| y >= threshold)
        .ok_or(Error::HorizonTooShort { horizon: traj.horizon() })?;
    if k == 0 {
        return Ok(traj.time(0));
    }
    let (y0, y1) = (traj.values[k - 1], traj.values[k]);
    Ok(traj.time(k - 1) + (threshold - y0) / (y1 - y0) * traj.dt)
}

pub fn step_metrics(
    traj: &Trajectory,
    final_value: f64,
    rise: RiseDefinition,
    band: SettlingBand,
) -> Result<StepMetrics> {
    if !(final_value > 0.0) {
        return invalid(format!("step metrics need a positive final value, got {final_value}"));
    }
    if traj.values.is_empty() {
        return invalid("empty trajectory");
    }
    let peak = traj.values.iter().copied().fold(f64::NEG_INFINITY, f64::max) / final_value;
    let start = first_crossing(traj, rise.lower_fraction() * final_value)?;
    let end = first_crossing(traj, 0.9 * final_value)?;

    let tolerance = band.fraction() * final_value;
    let settling_time = match traj.values.iter().rposition(|&y| (y - final_value).abs() > tolerance) {
        None => traj.time(0),
        Some(k) if k + 1 == traj.values.len() => {
            return Err(Error::HorizonTooShort { horizon: traj.horizon() });
        }
        Some(k) => {
            let (y0, y1) = (traj.values[k], traj.values[k + 1]);
            let target = if y0 > final_value {
                final_value + tolerance
            } else {
                final_value - tolerance
            };
            traj.time(k) + (target - y0) / (y1 - y0) * traj.dt
        }
    };

    Ok(StepMetrics {
        peak,
        rise_time: end - start,
        settling_time,
        final_value,
    })
}
