//! Built-in scenarios with closed-form minimum time functions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::model::{BallForm, BoxForm, Constants, Gain, InclusionModel};
use crate::target::{Ball, BallComplement, TargetSet, TargetShape};

/// Closed-form time function; `None` where it is not available.
pub type Oracle = fn(&[f64]) -> Option<f64>;

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: &'static str,
    pub model: InclusionModel,
    pub target: TargetSet,
    /// Default grid box.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub oracle: Option<Oracle>,
    pub notes: &'static str,
}

pub const SCENARIO_NAMES: [&str; 3] = ["example1", "eikonal", "ball-origin"];

pub fn scenario(name: &str) -> Result<ScenarioSpec> {
    match name {
        "example1" => Ok(example1_scenario()),
        "eikonal" => Ok(eikonal_scenario(1.0)),
        "ball-origin" => Ok(ball_origin_scenario()),
        _ => Err(Error::Config(format!("unknown scenario {name:?}; expected one of {SCENARIO_NAMES:?}"))),
    }
}

/// `h(x2) = max(x2 − 1, 0)`.
pub fn example1_h(x2: f64) -> f64 {
    (x2 - 1.0).max(0.0)
}

/// First coordinate of the boundary curve `γ`, parameterized by height.
pub fn example1_gamma1(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - (2.0 * t - t * t).sqrt()
    }
}

/// `F(x) = {(u1, h(x2)u2) : u ∈ [0,1]²}`.
pub fn example1_model() -> InclusionModel {
    let form = BoxForm::new(
        vec![0.0, 0.0],
        vec![1.0, 1.0],
        vec![Gain::Constant(1.0), Gain::Hinge { axis: 1, knot: 1.0, slope: 1.0 }],
    )
    .expect("valid box form");
    let constants = Constants::provided(1.0, 1.0, 1.0, 0.0, None).expect("valid constants");
    InclusionModel::new("example1", Arc::new(form), constants).expect("valid model")
}

/// The region right of `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example1Target;

impl TargetShape for Example1Target {
    fn dim(&self) -> usize {
        2
    }

    fn indicator(&self, x: &[f64]) -> f64 {
        example1_gamma1(x[1]) - x[0]
    }

    fn normal(&self, x: &[f64]) -> Option<Vec<f64>> {
        let t = x[1];
        if t > 0.0 && t < 1.0 {
            Some(vec![example1_gamma1(t) - 1.0, t - 1.0])
        } else {
            Some(vec![-1.0, 0.0])
        }
    }
}

pub fn example1_target() -> TargetSet {
    TargetSet::new(Arc::new(Example1Target), Some(1.0)).expect("valid target")
}

/// Minimum time for [`example1_model`] and [`example1_target`]; zero on
/// the target.
#[allow(non_snake_case)]
pub fn example1_T(x1: f64, x2: f64) -> Option<f64> {
    let g = example1_gamma1(x2);
    if x1 >= g {
        return Some(0.0);
    }
    Some(if x2 <= 0.0 {
        1.0 - x1
    } else if x2 <= 1.0 {
        1.0 - (2.0 * x2 - x2 * x2).sqrt() - x1
    } else {
        -x1
    })
}

fn example1_oracle(x: &[f64]) -> Option<f64> {
    example1_T(x[0], x[1])
}

pub fn example1_scenario() -> ScenarioSpec {
    ScenarioSpec {
        name: "example1",
        model: example1_model(),
        target: example1_target(),
        lower: vec![-1.0, -1.0],
        upper: vec![1.2, 1.8],
        oracle: Some(example1_oracle),
        notes: "box dynamics with a hinge gain; T is continuous but not Lipschitz along {x2 = 0, x1 < 1}",
    }
}

fn unit_ball_model(name: &str) -> InclusionModel {
    let constants = Constants::provided(0.0, 0.0, 1.0, 0.0, Some(1.0)).expect("valid constants");
    InclusionModel::new(name, Arc::new(BallForm::unit(2)), constants).expect("valid model")
}

fn eikonal_oracle(x: &[f64]) -> Option<f64> {
    Some((1.0 - norm(x)).max(0.0))
}

/// Unit-speed isotropic dynamics with target `{|x| ≥ radius}`.
pub fn eikonal_scenario(radius: f64) -> ScenarioSpec {
    let target = TargetSet::new(Arc::new(BallComplement { center: vec![0.0, 0.0], radius }), Some(1.0))
        .expect("valid target");
    ScenarioSpec {
        name: "eikonal",
        model: unit_ball_model("eikonal"),
        target,
        lower: vec![-radius, -radius],
        upper: vec![radius, radius],
        // Only the unit radius has a fixed-signature oracle.
        oracle: (radius == 1.0).then_some(eikonal_oracle as Oracle),
        notes: "T(x) = radius - |x| inside the disk",
    }
}

fn ball_origin_oracle(x: &[f64]) -> Option<f64> {
    Some(norm(x))
}

/// Unit-ball dynamics from the origin; `A(T) = B̄(0,T)`.
pub fn ball_origin_scenario() -> ScenarioSpec {
    let target = TargetSet::new(Arc::new(Ball { center: vec![0.0, 0.0], radius: 0.0 }), None).expect("valid target");
    ScenarioSpec {
        name: "ball-origin",
        model: unit_ball_model("ball-origin"),
        target,
        lower: vec![-1.0, -1.0],
        upper: vec![1.0, 1.0],
        oracle: Some(ball_origin_oracle),
        notes: "attainable sets are the disks B(0,T)",
    }
}
