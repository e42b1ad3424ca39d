//! Event-driven scenario execution.
//!
//! The executor advances world state on a fixed grid, evaluates closed-form
//! activity models directly (no numeric integration for activity-driven
//! actors), localizes condition-triggered events by bisection to the
//! configured tolerance, applies activity switches at the localized instants,
//! and integrates policy-driven actors with semi-implicit Euler.
//!
//! Coordinate frame: origin at the crossing center, `x` along ego travel,
//! `y` along pedestrian travel. The ego lane occupies `y ∈ [-3.5, 0]`.

pub mod engine;
pub mod policy;
pub mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::condition::{ActivityBoundary, EvalContext, EvalError};
use crate::dynamics::{DynamicsError, ModelRegistry};
use crate::model::{state_schema, ActorType};

pub use engine::{locate_event, run_test_scenario, simulate};
pub use policy::{builtin_policy, ConstantSpeed, DemoAeb, EgoPolicy, PolicyCommand, PolicyInput};
pub use trace::{ActorState, EventFire, Trace, WorldState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("actor `{actor}` has neither activities nor a policy")]
    NoGoverningBehavior { actor: String },
    #[error("actor `{actor}` is activity-driven but also has a policy")]
    ConflictingBehavior { actor: String },
    #[error("no collision shape for actor `{actor}`")]
    MissingShape { actor: String },
    #[error("activity `{activity}` governs variable `{variable}` outside the simulator schema")]
    UnknownStateVariable { activity: String, variable: String },
    #[error("condition evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no sign change: condition must be false at the bracket start and true at its end")]
    NoSignChange,
    #[error("time {t} outside the trace span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("the scenario start event never fired within the horizon")]
    StartNeverFired,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("trace I/O failed: {0}")]
    Io(String),
}

/// Axis-aligned collision rectangle, centered on the actor's `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectShape {
    pub length: f64,
    pub width: f64,
}

impl RectShape {
    pub fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }

    /// Default shape by actor type: vehicles 4.5 m × 1.8 m, pedestrians
    /// 0.5 m × 0.5 m.
    pub fn default_for(actor_type: ActorType) -> Self {
        match actor_type {
            ActorType::Vehicle => Self::new(4.5, 1.8),
            ActorType::Pedestrian => Self::new(0.5, 0.5),
            ActorType::Cyclist => Self::new(1.8, 0.6),
            ActorType::RoadsideUnit => Self::new(0.5, 0.5),
            ActorType::Other => Self::new(1.0, 1.0),
        }
    }
}

/// Strict rectangle overlap in the scenario frame.
pub fn rectangles_overlap(ax: f64, ay: f64, a: &RectShape, bx: f64, by: f64, b: &RectShape) -> bool {
    (ax - bx).abs() < (a.length + b.length) / 2.0 && (ay - by).abs() < (a.width + b.width) / 2.0
}

/// Pairwise collision test over a world state; shapes must cover every actor.
pub fn check_collision(
    world: &WorldState,
    shapes: &BTreeMap<String, RectShape>,
) -> Result<BTreeMap<(String, String), bool>, SimError> {
    let uids: Vec<&String> = world.actors.keys().collect();
    let mut out = BTreeMap::new();
    for (i, a) in uids.iter().enumerate() {
        for b in uids.iter().skip(i + 1) {
            let shape_a = shapes
                .get(*a)
                .ok_or_else(|| SimError::MissingShape { actor: (*a).clone() })?;
            let shape_b = shapes
                .get(*b)
                .ok_or_else(|| SimError::MissingShape { actor: (*b).clone() })?;
            let sa = &world.actors[*a];
            let sb = &world.actors[*b];
            out.insert(
                ((*a).clone(), (*b).clone()),
                rectangles_overlap(sa.x, sa.y, shape_a, sb.x, sb.y, shape_b),
            );
        }
    }
    Ok(out)
}

/// Simulation configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Fixed step, seconds.
    pub dt: f64,
    /// Horizon, seconds; reaching it without the end event is the `timeout`
    /// outcome.
    pub t_max: f64,
    /// Event localization bracket width, seconds.
    pub event_tolerance: f64,
    /// Per-actor collision shape overrides; anything absent falls back to
    /// the actor type default.
    pub shapes: BTreeMap<String, RectShape>,
    /// Model implementations used to evaluate activities.
    pub models: ModelRegistry,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 200.0,
            event_tolerance: 1e-6,
            shapes: BTreeMap::new(),
            models: ModelRegistry::builtin(),
        }
    }
}

impl SimConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn check(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.event_tolerance > 0.0) || self.event_tolerance >= self.dt {
            return Err(SimError::InvalidConfig(format!(
                "event tolerance must satisfy 0 < tolerance < dt, got {} with dt {}",
                self.event_tolerance, self.dt
            )));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        Ok(())
    }
}

/// Evaluation environment over one world state: binds `t`, the per-actor
/// schema variables (`x_<uid>`, ...), the collision oracle, and the
/// linked-boundary oracle.
pub(crate) struct WorldEnv<'a> {
    pub world: &'a WorldState,
    pub shapes: Option<&'a BTreeMap<String, RectShape>>,
    /// Fire time of an activity boundary, if it has been reached.
    pub boundary_time: Option<&'a dyn Fn(&str, ActivityBoundary) -> Option<f64>>,
}

impl EvalContext for WorldEnv<'_> {
    fn value(&self, name: &str) -> Option<f64> {
        if name == "t" {
            return Some(self.world.t);
        }
        let (base, actor) = state_schema::split(name)?;
        let state = self.world.actors.get(actor)?;
        Some(match base {
            "x" => state.x,
            "y" => state.y,
            "v" => state.v,
            "a" => state.a,
            _ => return None,
        })
    }

    fn collision(&self, first: &str, second: &str) -> Result<bool, EvalError> {
        let Some(shapes) = self.shapes else {
            return Err(EvalError::UnsupportedPredicate("collision"));
        };
        let lookup = |uid: &str| -> Result<(&ActorState, &RectShape), EvalError> {
            let state = self
                .world
                .actors
                .get(uid)
                .ok_or_else(|| EvalError::UnboundVariable(uid.to_owned()))?;
            let shape = shapes
                .get(uid)
                .ok_or(EvalError::UnsupportedPredicate("collision"))?;
            Ok((state, shape))
        };
        let (sa, shape_a) = lookup(first)?;
        let (sb, shape_b) = lookup(second)?;
        Ok(rectangles_overlap(sa.x, sa.y, shape_a, sb.x, sb.y, shape_b))
    }

    fn linked(&self, activity: &str, boundary: ActivityBoundary) -> Result<bool, EvalError> {
        let Some(boundary_time) = self.boundary_time else {
            return Err(EvalError::UnsupportedPredicate("linked"));
        };
        Ok(boundary_time(activity, boundary).is_some_and(|tf| tf <= self.world.t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_overlap_tests() {
        let ego = RectShape::new(4.5, 1.8);
        let ped = RectShape::new(0.5, 0.5);
        // Disjoint in x.
        assert!(!rectangles_overlap(0.0, 0.0, &ego, 10.0, 0.0, &ped));
        // Half-lengths 2.25 + 0.25 = 2.5 > 2.4: overlap.
        assert!(rectangles_overlap(0.0, 0.0, &ego, 2.4, 0.0, &ped));
        // Touching exactly is not a collision.
        assert!(!rectangles_overlap(0.0, 0.0, &ego, 2.5, 0.0, &ped));
        // Identical positions collide.
        assert!(rectangles_overlap(0.0, 0.0, &ego, 0.0, 0.0, &ped));
    }

    #[test]
    fn check_collision_requires_shapes() {
        let mut world = WorldState::empty(0.0);
        world.actors.insert("ego".into(), ActorState { x: 0.0, y: 0.0, v: 0.0, a: 0.0 });
        world.actors.insert("ped".into(), ActorState { x: 2.4, y: 0.0, v: 0.0, a: 0.0 });

        let mut shapes = BTreeMap::new();
        shapes.insert("ego".to_owned(), RectShape::default_for(ActorType::Vehicle));
        assert!(matches!(
            check_collision(&world, &shapes),
            Err(SimError::MissingShape { .. })
        ));

        shapes.insert("ped".to_owned(), RectShape::default_for(ActorType::Pedestrian));
        let pairs = check_collision(&world, &shapes).unwrap();
        assert_eq!(pairs[&("ego".to_owned(), "ped".to_owned())], true);
    }

    #[test]
    fn config_check_rejects_bad_values() {
        assert!(SimConfig::default().check().is_ok());
        assert!(SimConfig::default().with_dt(0.0).check().is_err());
        let mut cfg = SimConfig::default();
        cfg.event_tolerance = cfg.dt;
        assert!(cfg.check().is_err());
    }
}
