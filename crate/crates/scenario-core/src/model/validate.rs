//! Whole-graph validation for scenarios and scenario categories.
//!
//! Validation never panics and never stops early: it walks the full object
//! graph and reports every violated invariant with the uid of the offending
//! element. An empty report is the definition of a valid object.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::dynamics::{DynamicsError, ModelRegistry};
use crate::tags::{Tag, TagError, TagRegistry};

use super::{
    state_schema, Activity, ActivityCategory, Actor, ActorCategory, ActorType, ElementHeader,
    Event, PhysicalElement, PhysicalElementCategory, Scenario, ScenarioCategory, Uid,
};

/// Read-only registries needed to resolve tags and model schemas.
#[derive(Clone, Copy)]
pub struct ValidationContext<'a> {
    pub tags: &'a TagRegistry,
    pub models: &'a ModelRegistry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationCode {
    MissingEgo,
    DanglingReference,
    ParameterSchemaMismatch,
    InvalidModelParams,
    UnknownModel,
    UnknownVariable,
    UnresolvedTag,
    DuplicateUid,
    EmptyField,
    NonFinite,
    UnitMismatch,
    InvalidEventPair,
    ActorWithoutBehavior,
    EgoCategoryNotVehicle,
    InvalidStateVariables,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::MissingEgo => "missing-ego",
            ViolationCode::DanglingReference => "dangling-reference",
            ViolationCode::ParameterSchemaMismatch => "parameter-schema-mismatch",
            ViolationCode::InvalidModelParams => "invalid-model-params",
            ViolationCode::UnknownModel => "unknown-model",
            ViolationCode::UnknownVariable => "unknown-variable",
            ViolationCode::UnresolvedTag => "unresolved-tag",
            ViolationCode::DuplicateUid => "duplicate-uid",
            ViolationCode::EmptyField => "empty-field",
            ViolationCode::NonFinite => "non-finite",
            ViolationCode::UnitMismatch => "unit-mismatch",
            ViolationCode::InvalidEventPair => "invalid-event-pair",
            ViolationCode::ActorWithoutBehavior => "actor-without-behavior",
            ViolationCode::EgoCategoryNotVehicle => "ego-category-not-vehicle",
            ViolationCode::InvalidStateVariables => "invalid-state-variables",
        };
        f.write_str(s)
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub uid: Option<Uid>,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.uid {
            Some(uid) => write!(f, "{} [{}]: {}", self.code, uid, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

/// Every violated invariant found in one validation pass. Empty iff the
/// object satisfies all invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn contains(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, uid: Option<&Uid>, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation {
            uid: uid.cloned(),
            code,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: all invariants satisfied");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Validating constructor: returns the scenario unchanged iff it satisfies
/// every invariant, otherwise the full list of violations.
pub fn build_scenario(
    candidate: Scenario,
    ctx: &ValidationContext<'_>,
) -> Result<Scenario, ValidationReport> {
    let report = candidate.validate(ctx);
    if report.is_empty() {
        Ok(candidate)
    } else {
        Err(report)
    }
}

/// Validating constructor for categories; see [`build_scenario`].
pub fn build_scenario_category(
    candidate: ScenarioCategory,
    ctx: &ValidationContext<'_>,
) -> Result<ScenarioCategory, ValidationReport> {
    let report = candidate.validate(ctx);
    if report.is_empty() {
        Ok(candidate)
    } else {
        Err(report)
    }
}

/// Union of the scenario's own tags and the tags of its physical elements,
/// actors, and activities (including their categories), closed over tree
/// ancestors.
pub fn derived_tags(scenario: &Scenario, tags: &TagRegistry) -> Result<BTreeSet<Tag>, TagError> {
    let mut resolved = Vec::new();
    let mut add = |header: &ElementHeader| -> Result<(), TagError> {
        for raw in &header.tags {
            resolved.push(tags.resolve(raw)?);
        }
        Ok(())
    };

    add(&scenario.header)?;
    for element in &scenario.physical_elements {
        add(&element.header)?;
        add(&element.category.header)?;
    }
    for actor in &scenario.actors {
        add(&actor.header)?;
        add(&actor.category.header)?;
    }
    for activity in &scenario.activities {
        add(&activity.header)?;
        add(&activity.category.header)?;
    }
    Ok(tags.closure(resolved.iter()))
}

impl Scenario {
    /// Checks every scenario invariant; an empty report means valid.
    pub fn validate(&self, ctx: &ValidationContext<'_>) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut uids = UidTable::default();

        uids.insert(&self.header.uid, Element::Scenario(self));
        for event in self.all_events() {
            uids.insert(&event.header.uid, Element::Event(event));
        }
        for element in &self.physical_elements {
            uids.insert(&element.header.uid, Element::Physical(element));
            uids.insert(&element.category.header.uid, Element::PhysicalCategory(&element.category));
        }
        for actor in &self.actors {
            uids.insert(&actor.header.uid, Element::Actor(actor));
            uids.insert(&actor.category.header.uid, Element::ActorCategory(&actor.category));
        }
        for activity in &self.activities {
            uids.insert(&activity.header.uid, Element::Activity(activity));
            uids.insert(
                &activity.category.header.uid,
                Element::ActivityCategory(&activity.category),
            );
            uids.insert(&activity.start_event.header.uid, Element::Event(&activity.start_event));
            uids.insert(&activity.end_event.header.uid, Element::Event(&activity.end_event));
        }
        uids.report_into(&mut report);

        for (uid, header) in self.headers() {
            check_header(uid, header, ctx, &mut report);
        }
        for actor in &self.actors {
            check_actor_category(&actor.category, ctx, &mut report);
        }
        for activity in &self.activities {
            check_activity_category(&activity.category, ctx, &mut report);
        }
        for element in &self.physical_elements {
            check_description(
                &element.category.header.uid,
                &element.category.description,
                &mut report,
            );
        }

        self.check_ego(ctx, &mut report);
        self.check_acts(&mut report);
        self.check_activities(ctx, &mut report);
        self.check_actors(&mut report);
        self.check_units(&mut report);
        self.check_conditions(&mut report);

        report
    }

    fn headers(&self) -> Vec<(&Uid, &ElementHeader)> {
        let mut out: Vec<(&Uid, &ElementHeader)> = vec![(&self.header.uid, &self.header)];
        for event in self.all_events() {
            out.push((&event.header.uid, &event.header));
        }
        for element in &self.physical_elements {
            out.push((&element.header.uid, &element.header));
            out.push((&element.category.header.uid, &element.category.header));
        }
        for actor in &self.actors {
            out.push((&actor.header.uid, &actor.header));
            out.push((&actor.category.header.uid, &actor.category.header));
        }
        for activity in &self.activities {
            out.push((&activity.header.uid, &activity.header));
            out.push((&activity.category.header.uid, &activity.category.header));
        }
        out
    }

    fn check_ego(&self, ctx: &ValidationContext<'_>, report: &mut ValidationReport) {
        let has_ego = self.actors.iter().any(|actor| {
            actor
                .header
                .tags
                .iter()
                .chain(actor.category.header.tags.iter())
                .any(|raw| is_ego_tag(raw, ctx.tags))
        });
        if !has_ego {
            report.push(
                Some(&self.header.uid),
                ViolationCode::MissingEgo,
                "no actor carries the \"Ego vehicle\" tag",
            );
        }
    }

    fn check_acts(&self, report: &mut ValidationReport) {
        for act in &self.acts {
            let actor_uid = &act.actor.header.uid;
            if !self.actors.iter().any(|a| Arc::ptr_eq(a, &act.actor) || **a == *act.actor) {
                report.push(
                    Some(actor_uid),
                    ViolationCode::DanglingReference,
                    format!("act references actor `{actor_uid}` outside the scenario's actor list"),
                );
            }
            let activity_uid = &act.activity.header.uid;
            if !self
                .activities
                .iter()
                .any(|a| Arc::ptr_eq(a, &act.activity) || **a == *act.activity)
            {
                report.push(
                    Some(activity_uid),
                    ViolationCode::DanglingReference,
                    format!(
                        "act references activity `{activity_uid}` outside the scenario's activity list"
                    ),
                );
            }
        }
    }

    fn check_activities(&self, ctx: &ValidationContext<'_>, report: &mut ValidationReport) {
        let event_member = |event: &Arc<Event>| {
            self.all_events()
                .any(|e| Arc::ptr_eq(e, event) || **e == **event)
        };
        for activity in &self.activities {
            let uid = &activity.header.uid;
            match ctx.models.check_params(&activity.model_params()) {
                Ok(()) => {}
                Err(DynamicsError::SchemaMismatch(msg)) => {
                    report.push(Some(uid), ViolationCode::ParameterSchemaMismatch, msg);
                }
                Err(DynamicsError::UnknownKind(kind)) => {
                    report.push(
                        Some(uid),
                        ViolationCode::UnknownModel,
                        format!("model kind `{kind}` is not registered"),
                    );
                }
                Err(other) => {
                    report.push(Some(uid), ViolationCode::InvalidModelParams, other.to_string());
                }
            }
            if activity.start_event.header.uid == activity.end_event.header.uid {
                report.push(
                    Some(uid),
                    ViolationCode::InvalidEventPair,
                    "start and end event must differ",
                );
            }
            for (role, event) in [("start", &activity.start_event), ("end", &activity.end_event)] {
                if !event_member(event) {
                    report.push(
                        Some(uid),
                        ViolationCode::DanglingReference,
                        format!(
                            "{role} event `{}` is not among the scenario's events",
                            event.header.uid
                        ),
                    );
                }
            }
        }
    }

    fn check_actors(&self, report: &mut ValidationReport) {
        for actor in &self.actors {
            let uid = &actor.header.uid;
            if actor.initial_state.is_empty() {
                report.push(Some(uid), ViolationCode::EmptyField, "initial state vector is empty");
            }
            for (name, q) in &actor.initial_state.0 {
                if !q.value.is_finite() {
                    report.push(
                        Some(uid),
                        ViolationCode::NonFinite,
                        format!("initial state variable `{name}` is not finite"),
                    );
                }
            }
            let has_acts = self
                .acts
                .iter()
                .any(|act| act.actor.header.uid == actor.header.uid);
            if !has_acts && actor.desired_state.is_none() {
                report.push(
                    Some(uid),
                    ViolationCode::ActorWithoutBehavior,
                    "actor has neither activities (via acts) nor a desired state",
                );
            }
            if let Some(desired) = &actor.desired_state {
                for (name, q) in &desired.0 {
                    if !q.value.is_finite() {
                        report.push(
                            Some(uid),
                            ViolationCode::NonFinite,
                            format!("desired state variable `{name}` is not finite"),
                        );
                    }
                    let known = actor.initial_state.0.contains_key(name)
                        || state_schema::BASES.contains(&name.as_str());
                    if !known {
                        report.push(
                            Some(uid),
                            ViolationCode::UnknownVariable,
                            format!(
                                "desired state variable `{name}` is neither in the initial state nor in the simulator schema"
                            ),
                        );
                    }
                }
            }
        }
    }

    /// A variable name must carry one consistent unit annotation wherever it
    /// appears in the scenario's state vectors.
    fn check_units(&self, report: &mut ValidationReport) {
        let mut seen: BTreeMap<&str, (&Uid, &str)> = BTreeMap::new();
        for actor in &self.actors {
            let vectors = [Some(&actor.initial_state), actor.desired_state.as_ref()];
            for vector in vectors.into_iter().flatten() {
                for (name, q) in &vector.0 {
                    let Some(unit) = q.unit.as_deref() else { continue };
                    match seen.get(name.as_str()) {
                        None => {
                            seen.insert(name, (&actor.header.uid, unit));
                        }
                        Some((first_uid, first_unit)) if *first_unit != unit => {
                            report.push(
                                Some(&actor.header.uid),
                                ViolationCode::UnitMismatch,
                                format!(
                                    "state variable `{name}` annotated `{unit}` here but `{first_unit}` on `{first_uid}`"
                                ),
                            );
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }

    fn check_conditions(&self, report: &mut ValidationReport) {
        let actor_uids: BTreeSet<&str> =
            self.actors.iter().map(|a| a.header.uid.as_str()).collect();
        let activity_uids: BTreeSet<&str> =
            self.activities.iter().map(|a| a.header.uid.as_str()).collect();

        for event in self.all_events() {
            let uid = &event.header.uid;
            for var in event.condition.free_variables() {
                if var == "t" {
                    continue;
                }
                let bound = state_schema::split(&var)
                    .is_some_and(|(_, actor)| actor_uids.contains(actor));
                if !bound {
                    report.push(
                        Some(uid),
                        ViolationCode::UnknownVariable,
                        format!("condition references unknown variable `{var}`"),
                    );
                }
            }
            for actor in event.condition.collision_actors() {
                if !actor_uids.contains(actor.as_str()) {
                    report.push(
                        Some(uid),
                        ViolationCode::DanglingReference,
                        format!("collision predicate references unknown actor `{actor}`"),
                    );
                }
            }
            for activity in event.condition.linked_activities() {
                if !activity_uids.contains(activity.as_str()) {
                    report.push(
                        Some(uid),
                        ViolationCode::DanglingReference,
                        format!("linked condition references unknown activity `{activity}`"),
                    );
                }
            }
        }
    }
}

impl ScenarioCategory {
    /// Checks every category invariant; an empty report means valid.
    pub fn validate(&self, ctx: &ValidationContext<'_>) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut uids = UidTable::default();

        uids.insert(&self.header.uid, Element::ScenarioCategory(self));
        for cat in &self.physical_element_categories {
            uids.insert(&cat.header.uid, Element::PhysicalCategory(cat));
        }
        for cat in &self.actor_categories {
            uids.insert(&cat.header.uid, Element::ActorCategory(cat));
        }
        for cat in &self.activity_categories {
            uids.insert(&cat.header.uid, Element::ActivityCategory(cat));
        }
        uids.report_into(&mut report);

        check_header(&self.header.uid, &self.header, ctx, &mut report);
        check_description(&self.header.uid, &self.description, &mut report);
        for cat in &self.physical_element_categories {
            check_header(&cat.header.uid, &cat.header, ctx, &mut report);
            check_description(&cat.header.uid, &cat.description, &mut report);
        }
        for cat in &self.actor_categories {
            check_header(&cat.header.uid, &cat.header, ctx, &mut report);
            check_actor_category(cat, ctx, &mut report);
        }
        for cat in &self.activity_categories {
            check_header(&cat.header.uid, &cat.header, ctx, &mut report);
            check_activity_category(cat, ctx, &mut report);
        }

        for act in &self.acts {
            let actor_uid = &act.actor_category.header.uid;
            if !self
                .actor_categories
                .iter()
                .any(|c| Arc::ptr_eq(c, &act.actor_category) || **c == *act.actor_category)
            {
                report.push(
                    Some(actor_uid),
                    ViolationCode::DanglingReference,
                    format!("act references actor category `{actor_uid}` outside the category's list"),
                );
            }
            let activity_uid = &act.activity_category.header.uid;
            if !self
                .activity_categories
                .iter()
                .any(|c| Arc::ptr_eq(c, &act.activity_category) || **c == *act.activity_category)
            {
                report.push(
                    Some(activity_uid),
                    ViolationCode::DanglingReference,
                    format!(
                        "act references activity category `{activity_uid}` outside the category's list"
                    ),
                );
            }
        }

        report
    }
}

fn is_ego_tag(raw: &str, tags: &TagRegistry) -> bool {
    match tags.resolve(raw) {
        Ok(tag) => tag.leaf() == "Ego vehicle",
        Err(_) => raw == "Ego vehicle",
    }
}

fn check_header(
    uid: &Uid,
    header: &ElementHeader,
    ctx: &ValidationContext<'_>,
    report: &mut ValidationReport,
) {
    if header.uid.as_str().is_empty() {
        report.push(None, ViolationCode::EmptyField, "uid is empty");
    }
    for raw in &header.tags {
        if let Err(err) = ctx.tags.resolve(raw) {
            report.push(Some(uid), ViolationCode::UnresolvedTag, err.to_string());
        }
    }
}

fn check_description(uid: &Uid, description: &str, report: &mut ValidationReport) {
    if description.is_empty() {
        report.push(Some(uid), ViolationCode::EmptyField, "description is empty");
    }
}

fn check_actor_category(
    cat: &Arc<ActorCategory>,
    ctx: &ValidationContext<'_>,
    report: &mut ValidationReport,
) {
    check_description(&cat.header.uid, &cat.description, report);
    let tagged_ego = cat.header.tags.iter().any(|raw| is_ego_tag(raw, ctx.tags));
    if tagged_ego && cat.actor_type != ActorType::Vehicle {
        report.push(
            Some(&cat.header.uid),
            ViolationCode::EgoCategoryNotVehicle,
            format!(
                "actor category tagged \"Ego vehicle\" must have actor type vehicle, got {}",
                cat.actor_type
            ),
        );
    }
}

fn check_activity_category(
    cat: &Arc<ActivityCategory>,
    ctx: &ValidationContext<'_>,
    report: &mut ValidationReport,
) {
    check_description(&cat.header.uid, &cat.description, report);
    let uid = &cat.header.uid;
    if cat.state_variables.is_empty() {
        report.push(
            Some(uid),
            ViolationCode::InvalidStateVariables,
            "state variable list is empty",
        );
    }
    let mut seen = BTreeSet::new();
    for name in &cat.state_variables {
        if !seen.insert(name) {
            report.push(
                Some(uid),
                ViolationCode::InvalidStateVariables,
                format!("state variable `{name}` listed twice"),
            );
        }
    }
    if !ctx.models.contains(&cat.model) {
        report.push(
            Some(uid),
            ViolationCode::UnknownModel,
            format!("model kind `{}` is not registered", cat.model),
        );
    }
}

/// References one element of the validated graph, for duplicate-uid checks.
enum Element<'a> {
    Scenario(&'a Scenario),
    ScenarioCategory(&'a ScenarioCategory),
    Event(&'a Arc<Event>),
    Physical(&'a Arc<PhysicalElement>),
    PhysicalCategory(&'a Arc<PhysicalElementCategory>),
    Actor(&'a Arc<Actor>),
    ActorCategory(&'a Arc<ActorCategory>),
    Activity(&'a Arc<Activity>),
    ActivityCategory(&'a Arc<ActivityCategory>),
}

impl Element<'_> {
    /// Same object (pointer identity) or structurally equal content.
    fn same(&self, other: &Element<'_>) -> bool {
        use Element::*;
        match (self, other) {
            (Scenario(a), Scenario(b)) => std::ptr::eq(*a, *b) || a == b,
            (ScenarioCategory(a), ScenarioCategory(b)) => std::ptr::eq(*a, *b) || a == b,
            (Event(a), Event(b)) => Arc::ptr_eq(a, b) || a == b,
            (Physical(a), Physical(b)) => Arc::ptr_eq(a, b) || a == b,
            (PhysicalCategory(a), PhysicalCategory(b)) => Arc::ptr_eq(a, b) || a == b,
            (Actor(a), Actor(b)) => Arc::ptr_eq(a, b) || a == b,
            (ActorCategory(a), ActorCategory(b)) => Arc::ptr_eq(a, b) || a == b,
            (Activity(a), Activity(b)) => Arc::ptr_eq(a, b) || a == b,
            (ActivityCategory(a), ActivityCategory(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

#[derive(Default)]
struct UidTable<'a> {
    entries: BTreeMap<&'a str, Vec<Element<'a>>>,
}

impl<'a> UidTable<'a> {
    fn insert(&mut self, uid: &'a Uid, element: Element<'a>) {
        self.entries.entry(uid.as_str()).or_default().push(element);
    }

    fn report_into(&self, report: &mut ValidationReport) {
        for (uid, elements) in &self.entries {
            let first = &elements[0];
            if elements.iter().skip(1).any(|e| !first.same(e)) {
                report.push(
                    Some(&Uid::from(*uid)),
                    ViolationCode::DuplicateUid,
                    format!("uid `{uid}` is used by distinct elements"),
                );
            }
        }
    }
}
