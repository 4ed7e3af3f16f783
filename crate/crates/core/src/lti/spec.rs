//! Robustness specifications: conjunctions of atomic closed-loop
//! requirements, checked at a single uncertainty value.

use serde::{Deserialize, Serialize};

use super::hinf::hinf_norm;
use super::poly::{eval_real, in_region, is_hurwitz, poles, DRegion};
use super::step::{step_metrics, step_response, RiseDefinition, SettlingBand};
use super::{ClosedLoop, UncertainSystem};
use crate::engine::Requirement;
use crate::error::{invalid, Error, Result};
use crate::uncertainty::{UncertaintyPoint, UncertaintySet, C64};

/// One closed-loop requirement. All bounds are strict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Atom {
    /// Every closed-loop pole in the open left half-plane.
    Stability,
    /// Every closed-loop pole inside the region.
    DStability { region: DRegion },
    /// Stable and `‖T‖∞ < gamma`.
    HinfBound { gamma: f64 },
    /// Unit-step rise time, settling time and peak below the given bounds.
    StepBounds {
        rise_max: f64,
        settle_max: f64,
        peak_max: f64,
    },
}

impl Atom {
    // Cheap checks first; step simulation last.
    fn rank(&self) -> u8 {
        match self {
            Atom::Stability => 0,
            Atom::DStability { .. } => 1,
            Atom::HinfBound { .. } => 2,
            Atom::StepBounds { .. } => 3,
        }
    }
}

/// Step-response simulation and metric conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepSettings {
    pub dt: f64,
    pub horizon: f64,
    pub rise: RiseDefinition,
    pub band: SettlingBand,
}

impl Default for StepSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 8.0,
            rise: RiseDefinition::TenToNinety,
            band: SettlingBand::TwoPercent,
        }
    }
}

/// Conjunction of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct RobustnessSpec {
    atoms: Vec<Atom>,
    step: StepSettings,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    atoms: Vec<Atom>,
    #[serde(default)]
    step: StepSettings,
}

impl TryFrom<RawSpec> for RobustnessSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        Self::new(raw.atoms, raw.step)
    }
}

impl RobustnessSpec {
    pub fn new(atoms: Vec<Atom>, step: StepSettings) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("robustness specification has no atoms");
        }
        let has_step = atoms.iter().any(|a| matches!(a, Atom::StepBounds { .. }));
        if has_step && !atoms.contains(&Atom::Stability) {
            return invalid("step bounds require the stability atom");
        }
        for atom in &atoms {
            match *atom {
                Atom::HinfBound { gamma } if !(gamma > 0.0) => {
                    return invalid(format!("H-infinity bound must be > 0, got {gamma}"));
                }
                Atom::StepBounds {
                    rise_max,
                    settle_max,
                    peak_max,
                } if !(rise_max > 0.0 && settle_max > 0.0 && peak_max > 0.0) => {
                    return invalid("step bounds must be > 0");
                }
                _ => {}
            }
        }
        if !(step.dt > 0.0) || !(step.horizon > step.dt) {
            return invalid(format!(
                "need dt > 0 and horizon > dt, got dt={}, horizon={}",
                step.dt, step.horizon
            ));
        }
        Ok(Self { atoms, step })
    }

    pub fn stability() -> Self {
        Self::new(vec![Atom::Stability], StepSettings::default()).expect("valid")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn step(&self) -> &StepSettings {
        &self.step
    }

    /// Like [`evaluate`] but surfaces numerical failures.
    pub fn check(&self, system: &UncertainSystem, point: &UncertaintyPoint) -> Result<bool> {
        let ClosedLoop { numerator, charpoly } = system.closed_loop(point)?;
        let roots = poles(&charpoly)?;
        let mut stable: Option<bool> = None;
        let mut is_stable = |roots: &[C64]| *stable.get_or_insert_with(|| is_hurwitz(roots));

        for rank in 0..4 {
            for atom in self.atoms.iter().filter(|a| a.rank() == rank) {
                let ok = match atom {
                    Atom::Stability => is_stable(&roots),
                    Atom::DStability { region } => in_region(&roots, region),
                    Atom::HinfBound { gamma } => is_stable(&roots) && hinf_norm(&numerator, &charpoly)? < *gamma,
                    Atom::StepBounds {
                        rise_max,
                        settle_max,
                        peak_max,
                    } => {
                        let dc = eval_real(&numerator, 0.0) / eval_real(&charpoly, 0.0);
                        let traj = step_response(&numerator, &charpoly, self.step.dt, self.step.horizon)?;
                        let m = step_metrics(&traj, dc, self.step.rise, self.step.band)?;
                        m.rise_time < *rise_max && m.settling_time < *settle_max && m.peak < *peak_max
                    }
                };
                if !ok {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `true` iff the closed loop at `point` meets every atom. Numerical
/// failures count as not satisfied.
pub fn evaluate(spec: &RobustnessSpec, system: &UncertainSystem, point: &UncertaintyPoint) -> bool {
    match spec.check(system, point) {
        Ok(ok) => ok,
        Err(e) => {
            log::debug!("specification evaluation failed, counting as violated: {e}");
            false
        }
    }
}

/// A system and specification, validated against an uncertainty set.
#[derive(Debug, Clone)]
pub struct LtiRequirement {
    system: UncertainSystem,
    spec: RobustnessSpec,
}

impl LtiRequirement {
    pub fn new(system: UncertainSystem, spec: RobustnessSpec, set: &UncertaintySet) -> Result<Self> {
        let available = set.center().coordinates().len();
        if system.coordinate_span() > available {
            return Err(Error::Config(format!(
                "binding reaches coordinate {} but the uncertainty set has {available}",
                system.coordinate_span() - 1
            )));
        }
        Ok(Self { system, spec })
    }

    pub fn system(&self) -> &UncertainSystem {
        &self.system
    }

    pub fn spec(&self) -> &RobustnessSpec {
        &self.spec
    }
}

impl Requirement for LtiRequirement {
    fn is_satisfied(&self, point: &UncertaintyPoint) -> bool {
        evaluate(&self.spec, &self.system, point)
    }
}
