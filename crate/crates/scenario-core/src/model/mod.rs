//! Domain types for scenarios and scenario categories.
//!
//! Category types (`*Category`) carry the qualitative description; their
//! quantitative counterparts reference them. All types are immutable after
//! construction and shared via `Arc`, so one category (or event, or activity)
//! can be reused across scenarios by reference. A [`Scenario`] doubles as its
//! own time interval: the embedded start and end events bound everything it
//! describes.

pub mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::ConditionExpr;
use crate::dynamics::ModelKind;

pub use validate::{
    build_scenario, build_scenario_category, derived_tags, ValidationContext, ValidationReport,
    Violation, ViolationCode,
};

/// Construction-time errors for individual elements. Whole-scenario
/// validation reports through [`ValidationReport`] instead.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("uid must be non-empty")]
    EmptyUid,
    #[error("{0}")]
    Invalid(String),
}

/// Caller-supplied opaque unique identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Uid(String);

impl Uid {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyUid);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Uid {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Header shared by every element: uid, human-readable name, and tag names.
/// Tag names may be any unambiguous tag-path suffix; they are resolved
/// against the registered trees during validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementHeader {
    pub uid: Uid,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl ElementHeader {
    pub fn new(uid: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            uid: Uid(uid.into()),
            name: name.into(),
            tags: Vec::new(),
        }
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }
}

/// Actor classification used when matching categories against scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorType {
    Vehicle,
    Pedestrian,
    Cyclist,
    RoadsideUnit,
    Other,
}

impl fmt::Display for ActorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ActorType::Vehicle => "vehicle",
            ActorType::Pedestrian => "pedestrian",
            ActorType::Cyclist => "cyclist",
            ActorType::RoadsideUnit => "roadside_unit",
            ActorType::Other => "other",
        };
        f.write_str(s)
    }
}

/// Qualitative description of a static physical element (road layout,
/// crossing, signage, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalElementCategory {
    pub header: ElementHeader,
    pub description: String,
}

/// Qualitative description of an actor. The `Ego vehicle` tag marks the ego
/// actor category and forces `actor_type` to [`ActorType::Vehicle`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCategory {
    pub header: ElementHeader,
    pub description: String,
    pub actor_type: ActorType,
}

/// Qualitative description of an activity: which state variables evolve and
/// by which model. Parameter values belong to the quantitative [`Activity`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityCategory {
    pub header: ElementHeader,
    pub description: String,
    pub state_variables: Vec<String>,
    pub model: ModelKind,
}

/// Scalar with an optional unit annotation. Units are carried and checked
/// for per-variable consistency; no unit algebra is performed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl Quantity {
    pub fn bare(value: f64) -> Self {
        Self { value, unit: None }
    }

    pub fn with_unit(value: f64, unit: impl Into<String>) -> Self {
        Self { value, unit: Some(unit.into()) }
    }
}

/// Named map of state-variable values, e.g. `{x: -20 m, v: 8 m/s}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub BTreeMap<String, Quantity>);

impl StateVector {
    pub fn new(entries: impl IntoIterator<Item = (impl Into<String>, Quantity)>) -> Self {
        Self(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).map(|q| q.value)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

/// Quantitative property of a physical element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Scalar(Quantity),
    Text(String),
}

/// Part of the static environment, quantitatively described by properties.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalElement {
    pub header: ElementHeader,
    pub category: Arc<PhysicalElementCategory>,
    pub properties: BTreeMap<String, PropertyValue>,
}

/// A physical element that experiences change. Behavior comes either from
/// activities (via acts) or from a goal expressed as `desired_state` and
/// pursued by an ego policy at simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub header: ElementHeader,
    pub category: Arc<ActorCategory>,
    pub initial_state: StateVector,
    pub desired_state: Option<StateVector>,
}

/// A time instant defined by its condition first becoming true: either a
/// threshold expression over the simulation state or a `linked(...)`
/// reference to an activity boundary (a mode transition).
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub header: ElementHeader,
    pub condition: ConditionExpr,
}

/// Quantitative activity: a category reference, the model parameter values,
/// and the two events bounding the time evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub header: ElementHeader,
    pub category: Arc<ActivityCategory>,
    pub parameters: BTreeMap<String, f64>,
    pub start_event: Arc<Event>,
    pub end_event: Arc<Event>,
}

impl Activity {
    /// Model parameters in the form the dynamics layer evaluates.
    pub fn model_params(&self) -> crate::dynamics::ModelParams {
        crate::dynamics::ModelParams {
            kind: self.category.model.clone(),
            values: self.parameters.clone(),
        }
    }
}

/// Assignment of one activity to one actor. One actor may perform several
/// activities and one activity may be shared by several actors.
#[derive(Debug, Clone, PartialEq)]
pub struct Act {
    pub actor: Arc<Actor>,
    pub activity: Arc<Activity>,
}

/// Quantitative description of everything relevant between its start and end
/// events: static environment, actors, their activities, and all events.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub header: ElementHeader,
    pub start_event: Arc<Event>,
    pub end_event: Arc<Event>,
    pub physical_elements: Vec<Arc<PhysicalElement>>,
    pub actors: Vec<Arc<Actor>>,
    pub activities: Vec<Arc<Activity>>,
    /// Events other than the scenario's own start and end.
    pub events: Vec<Arc<Event>>,
    pub acts: Vec<Act>,
}

impl Scenario {
    pub fn actor(&self, uid: &str) -> Option<&Arc<Actor>> {
        self.actors.iter().find(|a| a.header.uid.as_str() == uid)
    }

    pub fn activity(&self, uid: &str) -> Option<&Arc<Activity>> {
        self.activities.iter().find(|a| a.header.uid.as_str() == uid)
    }

    /// All events: start, end, then the member list in document order.
    pub fn all_events(&self) -> impl Iterator<Item = &Arc<Event>> {
        [&self.start_event, &self.end_event]
            .into_iter()
            .chain(self.events.iter())
    }

    /// Activities assigned to an actor, in act order.
    pub fn activities_of(&self, actor_uid: &str) -> Vec<&Arc<Activity>> {
        self.acts
            .iter()
            .filter(|act| act.actor.header.uid.as_str() == actor_uid)
            .map(|act| &act.activity)
            .collect()
    }
}

/// Pairing of an actor category with an activity category inside a
/// [`ScenarioCategory`].
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryAct {
    pub actor_category: Arc<ActorCategory>,
    pub activity_category: Arc<ActivityCategory>,
}

/// Qualitative description of a class of scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCategory {
    pub header: ElementHeader,
    pub description: String,
    pub physical_element_categories: Vec<Arc<PhysicalElementCategory>>,
    pub actor_categories: Vec<Arc<ActorCategory>>,
    pub activity_categories: Vec<Arc<ActivityCategory>>,
    pub acts: Vec<CategoryAct>,
}

/// Simulation state schema: the per-actor variables the executor maintains
/// and the names conditions may reference.
pub mod state_schema {
    /// Per-actor state variable bases, in trace-column order: longitudinal
    /// position, lateral/crossing position, speed, acceleration.
    pub const BASES: [&str; 4] = ["x", "y", "v", "a"];

    /// Splits a condition variable like `x_ego` into its base (`x`) and actor
    /// suffix (`ego`). Returns `None` for names outside the schema; the bare
    /// name `t` is the simulation clock and is handled separately.
    pub fn split(name: &str) -> Option<(&str, &str)> {
        let (base, actor) = name.split_once('_')?;
        if BASES.contains(&base) && !actor.is_empty() {
            Some((base, actor))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uid_must_be_non_empty() {
        assert!(Uid::new("ego").is_ok());
        assert_eq!(Uid::new(""), Err(ModelError::EmptyUid));
    }

    #[test]
    fn state_schema_split() {
        assert_eq!(state_schema::split("x_ego"), Some(("x", "ego")));
        assert_eq!(state_schema::split("v_my_car"), Some(("v", "my_car")));
        assert_eq!(state_schema::split("t"), None);
        assert_eq!(state_schema::split("q_zzz"), None);
        assert_eq!(state_schema::split("x_"), None);
    }

    #[test]
    fn domain_types_are_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Scenario>();
        assert_send_sync::<ScenarioCategory>();
        assert_send_sync::<Arc<Event>>();
        assert_send_sync::<Arc<Activity>>();
    }
}
