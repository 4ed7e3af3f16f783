//! Uncertain SISO loops and the robustness requirements evaluated on them.
//!
//! Plant and controller are rational functions whose gain and polynomial
//! factor coefficients are affine in named uncertainty components. Each
//! component is bound to one real coordinate of an [`UncertaintyPoint`]
//! (see [`UncertaintyPoint::coordinates`]). The loop is unity negative
//! feedback, so the closed-loop characteristic polynomial is
//! `den_C·den_P + num_C·num_P` and `T = num_C·num_P / charpoly`.

mod hinf;
mod poly;
mod realization;
mod spec;
mod step;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::uncertainty::UncertaintyPoint;

pub use hinf::{hinf_norm, sweep_peak};
pub use poly::{in_region, is_hurwitz, poles, DRegion, RegionPrimitive, MARGINAL_TOLERANCE};
pub use realization::StateSpace;
pub use spec::{evaluate, Atom, LtiRequirement, RobustnessSpec, StepSettings};
pub use step::{step_metrics, step_response, RiseDefinition, SettlingBand, StepMetrics, Trajectory};

/// Polynomial helpers shared with callers that build systems by hand.
pub mod polynomial {
    pub use super::poly::{add, eval_complex, eval_real, multiply, trim};
}

/// `constant + Σ coefficient·component`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub constant: f64,
    pub terms: BTreeMap<String, f64>,
}

impl AffineExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    pub fn with_term(mut self, component: impl Into<String>, coefficient: f64) -> Self {
        self.terms.insert(component.into(), coefficient);
        self
    }

    fn compile(&self, binding: &BTreeMap<String, usize>) -> Result<CompiledExpr> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (name, &coefficient) in &self.terms {
            let &index = binding
                .get(name)
                .ok_or_else(|| Error::Config(format!("uncertainty component `{name}` is not bound")))?;
            terms.push((index, coefficient));
        }
        Ok(CompiledExpr {
            constant: self.constant,
            terms,
        })
    }
}

// Plain numbers are accepted for constant coefficients.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AffineRepr {
    Constant(f64),
    Full {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        terms: BTreeMap<String, f64>,
    },
}

impl Serialize for AffineExpr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.terms.is_empty() {
            AffineRepr::Constant(self.constant).serialize(serializer)
        } else {
            AffineRepr::Full {
                constant: self.constant,
                terms: self.terms.clone(),
            }
            .serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for AffineExpr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match AffineRepr::deserialize(deserializer)? {
            AffineRepr::Constant(constant) => AffineExpr::constant(constant),
            AffineRepr::Full { constant, terms } => AffineExpr { constant, terms },
        })
    }
}

#[derive(Debug, Clone)]
struct CompiledExpr {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

impl CompiledExpr {
    fn eval(&self, coords: &[f64]) -> Result<f64> {
        let mut value = self.constant;
        for &(index, coefficient) in &self.terms {
            let x = coords.get(index).ok_or_else(|| {
                Error::Config(format!(
                    "component bound to coordinate {index}, point has {}",
                    coords.len()
                ))
            })?;
            value += coefficient * x;
        }
        Ok(value)
    }
}

/// A polynomial factor, coefficients in descending degree.
pub type Factor = Vec<AffineExpr>;

/// `gain · ∏ numerator / ∏ denominator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainRational {
    pub gain: AffineExpr,
    #[serde(default)]
    pub numerator: Vec<Factor>,
    #[serde(default)]
    pub denominator: Vec<Factor>,
}

impl UncertainRational {
    pub fn constant(gain: f64) -> Self {
        Self {
            gain: AffineExpr::constant(gain),
            numerator: Vec::new(),
            denominator: Vec::new(),
        }
    }

    fn compile(&self, binding: &BTreeMap<String, usize>) -> Result<CompiledRational> {
        let factors = |list: &[Factor]| -> Result<Vec<Vec<CompiledExpr>>> {
            list.iter()
                .map(|f| {
                    if f.is_empty() {
                        return invalid("polynomial factor has no coefficients");
                    }
                    f.iter().map(|c| c.compile(binding)).collect()
                })
                .collect()
        };
        Ok(CompiledRational {
            gain: self.gain.compile(binding)?,
            numerator: factors(&self.numerator)?,
            denominator: factors(&self.denominator)?,
        })
    }
}

#[derive(Debug, Clone)]
struct CompiledRational {
    gain: CompiledExpr,
    numerator: Vec<Vec<CompiledExpr>>,
    denominator: Vec<Vec<CompiledExpr>>,
}

impl CompiledRational {
    fn expand(factors: &[Vec<CompiledExpr>], coords: &[f64], seed: f64) -> Result<Vec<f64>> {
        let mut acc = vec![seed];
        for factor in factors {
            let coefs = factor.iter().map(|c| c.eval(coords)).collect::<Result<Vec<_>>>()?;
            acc = poly::multiply(&acc, &coefs);
        }
        Ok(acc)
    }

    fn at(&self, coords: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let gain = self.gain.eval(coords)?;
        Ok((
            Self::expand(&self.numerator, coords, gain)?,
            Self::expand(&self.denominator, coords, 1.0)?,
        ))
    }
}

/// Closed-loop transfer data at one uncertainty value.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    /// Numerator of `T`, descending degree.
    pub numerator: Vec<f64>,
    /// Characteristic polynomial (denominator of `T`), descending degree.
    pub charpoly: Vec<f64>,
}

/// Unity negative-feedback loop around an uncertain plant.
#[derive(Debug, Clone)]
pub struct UncertainSystem {
    controller: UncertainRational,
    plant: UncertainRational,
    binding: BTreeMap<String, usize>,
    compiled: [CompiledRational; 2],
}

impl UncertainSystem {
    pub fn new(
        controller: UncertainRational,
        plant: UncertainRational,
        binding: BTreeMap<String, usize>,
    ) -> Result<Self> {
        let compiled = [controller.compile(&binding)?, plant.compile(&binding)?];
        let system = Self {
            controller,
            plant,
            binding,
            compiled,
        };
        let nominal = vec![0.0; system.coordinate_span()];
        for (which, part) in system.compiled.iter().enumerate() {
            let (num, den) = part.at(&nominal)?;
            let (num, den) = (poly::trim(&num), poly::trim(&den));
            let name = ["controller", "plant"][which];
            if den.is_empty() {
                return Err(Error::Config(format!("{name} denominator is identically zero")));
            }
            if num.len() > den.len() {
                return Err(Error::Config(format!("{name} is improper at the nominal point")));
            }
        }
        system
            .closed_loop_at(&nominal)
            .map_err(|e| Error::Config(format!("nominal closed loop is ill-posed: {e}")))?;
        Ok(system)
    }

    /// `C(s) = (s+2)/(s+10)`, `P(s) = 800(1+0.1δ₁) / (s(s+4+0.2δ₂)(s+6+0.3δ₃))`
    /// with `δ₁, δ₂, δ₃` bound to coordinates 0, 1, 2.
    pub fn gsv_example() -> Self {
        let binding = BTreeMap::from([
            ("delta1".to_string(), 0usize),
            ("delta2".to_string(), 1),
            ("delta3".to_string(), 2),
        ]);
        Self::gsv_example_with_binding(binding).expect("builtin system is well-posed")
    }

    pub fn gsv_example_with_binding(binding: BTreeMap<String, usize>) -> Result<Self> {
        let c = AffineExpr::constant;
        let controller = UncertainRational {
            gain: c(1.0),
            numerator: vec![vec![c(1.0), c(2.0)]],
            denominator: vec![vec![c(1.0), c(10.0)]],
        };
        let plant = UncertainRational {
            gain: c(800.0).with_term("delta1", 80.0),
            numerator: Vec::new(),
            denominator: vec![
                vec![c(1.0), c(0.0)],
                vec![c(1.0), c(4.0).with_term("delta2", 0.2)],
                vec![c(1.0), c(6.0).with_term("delta3", 0.3)],
            ],
        };
        Self::new(controller, plant, binding)
    }

    pub fn controller(&self) -> &UncertainRational {
        &self.controller
    }

    pub fn plant(&self) -> &UncertainRational {
        &self.plant
    }

    pub fn binding(&self) -> &BTreeMap<String, usize> {
        &self.binding
    }

    /// Number of coordinates the binding reaches into (largest index + 1).
    pub fn coordinate_span(&self) -> usize {
        self.binding.values().map(|&i| i + 1).max().unwrap_or(0)
    }

    pub fn closed_loop(&self, point: &UncertaintyPoint) -> Result<ClosedLoop> {
        self.closed_loop_at(&point.coordinates())
    }

    pub fn closed_loop_at(&self, coords: &[f64]) -> Result<ClosedLoop> {
        let (num_c, den_c) = self.compiled[0].at(coords)?;
        let (num_p, den_p) = self.compiled[1].at(coords)?;
        let numerator = poly::multiply(&num_c, &num_p);
        let charpoly = poly::add(&poly::multiply(&den_c, &den_p), &numerator);
        let scale = charpoly.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        match charpoly.first() {
            Some(&lead) if lead.abs() > 1e-12 * scale => {}
            _ => {
                return Err(Error::DegenerateSystem(
                    "leading characteristic coefficient vanishes".into(),
                ))
            }
        }
        Ok(ClosedLoop { numerator, charpoly })
    }

    pub fn closed_loop_charpoly(&self, point: &UncertaintyPoint) -> Result<Vec<f64>> {
        Ok(self.closed_loop(point)?.charpoly)
    }

    /// Closed loop at `Δ = 0`.
    pub fn nominal(&self) -> ClosedLoop {
        self.closed_loop_at(&vec![0.0; self.coordinate_span()])
            .expect("nominal loop validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertainty::C64;

    fn at(system: &UncertainSystem, coords: [f64; 3]) -> Vec<f64> {
        system.closed_loop_charpoly(&UncertaintyPoint::Vector(coords.to_vec())).unwrap()
    }

    #[test]
    fn builtin_nominal_charpoly() {
        let sys = UncertainSystem::gsv_example();
        // Oracle: s(s+4)(s+6)(s+10) + 800(s+2) multiplied out by hand.
        let want = poly::add(
            &poly::multiply(
                &poly::multiply(&[1.0, 0.0], &[1.0, 4.0]),
                &poly::multiply(&[1.0, 6.0], &[1.0, 10.0]),
            ),
            &[800.0, 1600.0],
        );
        assert_eq!(want, vec![1.0, 20.0, 124.0, 1040.0, 1600.0]);
        assert_eq!(at(&sys, [0.0; 3]), want);
        assert_eq!(sys.nominal().numerator, vec![800.0, 1600.0]);
    }

    #[test]
    fn builtin_doubled_gain() {
        let sys = UncertainSystem::gsv_example();
        assert_eq!(at(&sys, [10.0, 0.0, 0.0]), vec![1.0, 20.0, 124.0, 1840.0, 3200.0]);
    }

    #[test]
    fn first_order_unity_loop() {
        let plant = UncertainRational {
            gain: AffineExpr::constant(1.0),
            numerator: vec![],
            denominator: vec![vec![AffineExpr::constant(1.0), AffineExpr::constant(1.0)]],
        };
        let sys = UncertainSystem::new(UncertainRational::constant(1.0), plant, BTreeMap::new()).unwrap();
        assert_eq!(sys.nominal().charpoly, vec![1.0, 2.0]);
    }

    #[test]
    fn nominal_poles_match_reference() {
        let sys = UncertainSystem::gsv_example();
        let roots = poles(&sys.nominal().charpoly).unwrap();
        for want in [
            C64::new(-15.9178, 0.0),
            C64::new(-1.8309, 0.0),
            C64::new(-1.1256, 7.3234),
            C64::new(-1.1256, -7.3234),
        ] {
            assert!(roots.iter().any(|z| (z - want).norm() < 1e-3), "missing {want}");
        }
        assert!(is_hurwitz(&roots));
    }

    #[test]
    fn unbound_component_is_config_error() {
        let plant = UncertainRational {
            gain: AffineExpr::constant(1.0).with_term("k", 1.0),
            numerator: vec![],
            denominator: vec![vec![AffineExpr::constant(1.0), AffineExpr::constant(1.0)]],
        };
        let err = UncertainSystem::new(UncertainRational::constant(1.0), plant, BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn improper_plant_is_rejected() {
        let plant = UncertainRational {
            gain: AffineExpr::constant(1.0),
            numerator: vec![vec![AffineExpr::constant(1.0), AffineExpr::constant(1.0)]],
            denominator: vec![],
        };
        assert!(UncertainSystem::new(UncertainRational::constant(1.0), plant, BTreeMap::new()).is_err());
    }

    #[test]
    fn vanishing_leading_coefficient_is_degenerate() {
        // P = 1/((1+k)s + 1): leading coefficient vanishes at k = -1.
        let plant = UncertainRational {
            gain: AffineExpr::constant(1.0),
            numerator: vec![],
            denominator: vec![vec![AffineExpr::constant(1.0).with_term("k", 1.0), AffineExpr::constant(1.0)]],
        };
        let sys = UncertainSystem::new(
            UncertainRational::constant(1.0),
            plant,
            BTreeMap::from([("k".to_string(), 0)]),
        )
        .unwrap();
        assert!(matches!(
            sys.closed_loop_at(&[-1.0]),
            Err(Error::DegenerateSystem(_))
        ));
    }

    #[test]
    fn short_point_is_config_error() {
        let sys = UncertainSystem::gsv_example();
        assert!(matches!(
            sys.closed_loop_at(&[0.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn affine_expr_json_forms() {
        let e: AffineExpr = serde_json::from_str("3.5").unwrap();
        assert_eq!(e, AffineExpr::constant(3.5));
        let e: AffineExpr = serde_json::from_str(r#"{"constant": 4, "terms": {"delta2": 0.2}}"#).unwrap();
        assert_eq!(e, AffineExpr::constant(4.0).with_term("delta2", 0.2));
        assert_eq!(serde_json::to_string(&AffineExpr::constant(2.0)).unwrap(), "2.0");
        let back: AffineExpr = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
    }
}
