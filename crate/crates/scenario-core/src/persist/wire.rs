//! Wire representation of the `.scn.json` format.
//!
//! Every object slot in a file body holds either a full definition or a
//! reference `{"$ref": "<uid>"}`. Within one file each object is defined
//! exactly once, at its first occurrence in the serialization walk; later
//! occurrences and anything already known to the enclosing library
//! serialize as references.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::condition::ConditionExpr;
use crate::dynamics::ModelKind;
use crate::model::{
    Act, Activity, ActivityCategory, Actor, ActorCategory, ActorType, CategoryAct, ElementHeader,
    Event, PhysicalElement, PhysicalElementCategory, PropertyValue, Scenario, ScenarioCategory,
    StateVector, Uid,
};
use crate::tags::TagTree;

use super::{Library, PersistError};

/// Definition-or-reference slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node<T> {
    Ref {
        #[serde(rename = "$ref")]
        uid: String,
    },
    Def(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEvent {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub condition: ConditionExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePhysicalElementCategory {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireActorCategory {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub description: String,
    pub actor_type: ActorType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireActivityCategory {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub description: String,
    pub state_variables: Vec<String>,
    pub model: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePhysicalElement {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub category: Node<WirePhysicalElementCategory>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, PropertyValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireActor {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub category: Node<WireActorCategory>,
    pub initial_state: StateVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired_state: Option<StateVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireActivity {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub category: Node<WireActivityCategory>,
    pub parameters: BTreeMap<String, f64>,
    pub start_event: Node<WireEvent>,
    pub end_event: Node<WireEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAct {
    pub actor: Node<WireActor>,
    pub activity: Node<WireActivity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireScenario {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub start_event: Node<WireEvent>,
    pub end_event: Node<WireEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Node<WireEvent>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub physical_elements: Vec<Node<WirePhysicalElement>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actors: Vec<Node<WireActor>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activities: Vec<Node<WireActivity>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub acts: Vec<WireAct>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCategoryAct {
    pub actor_category: Node<WireActorCategory>,
    pub activity_category: Node<WireActivityCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireScenarioCategory {
    pub uid: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub description: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub physical_element_categories: Vec<Node<WirePhysicalElementCategory>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actor_categories: Vec<Node<WireActorCategory>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activity_categories: Vec<Node<WireActivityCategory>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub acts: Vec<WireCategoryAct>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTagTrees {
    pub uid: String,
    pub name: String,
    pub trees: Vec<TagTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireIndex {
    /// uid → path relative to the library root.
    pub entries: BTreeMap<String, String>,
}

// ---------------------------------------------------------------------------
// Domain → wire
// ---------------------------------------------------------------------------

/// Tracks which uids have been written (in this file) or are known
/// externally; both serialize as `$ref`.
pub struct WireWriter {
    written: BTreeSet<String>,
    external: BTreeSet<String>,
}

impl WireWriter {
    pub fn new(external: BTreeSet<String>) -> Self {
        Self { written: BTreeSet::new(), external }
    }

    fn node<W>(&mut self, uid: &Uid, build: impl FnOnce(&mut Self) -> W) -> Node<W> {
        let uid = uid.as_str();
        if self.written.contains(uid) || self.external.contains(uid) {
            return Node::Ref { uid: uid.to_owned() };
        }
        self.written.insert(uid.to_owned());
        Node::Def(build(self))
    }

    fn event(&mut self, event: &Arc<Event>) -> Node<WireEvent> {
        self.node(&event.header.uid, |_| WireEvent {
            uid: event.header.uid.as_str().to_owned(),
            name: event.header.name.clone(),
            tags: event.header.tags.clone(),
            condition: event.condition.clone(),
        })
    }

    fn physical_element_category(
        &mut self,
        cat: &Arc<PhysicalElementCategory>,
    ) -> Node<WirePhysicalElementCategory> {
        self.node(&cat.header.uid, |_| WirePhysicalElementCategory {
            uid: cat.header.uid.as_str().to_owned(),
            name: cat.header.name.clone(),
            tags: cat.header.tags.clone(),
            description: cat.description.clone(),
        })
    }

    fn actor_category(&mut self, cat: &Arc<ActorCategory>) -> Node<WireActorCategory> {
        self.node(&cat.header.uid, |_| WireActorCategory {
            uid: cat.header.uid.as_str().to_owned(),
            name: cat.header.name.clone(),
            tags: cat.header.tags.clone(),
            description: cat.description.clone(),
            actor_type: cat.actor_type,
        })
    }

    fn activity_category(&mut self, cat: &Arc<ActivityCategory>) -> Node<WireActivityCategory> {
        self.node(&cat.header.uid, |_| WireActivityCategory {
            uid: cat.header.uid.as_str().to_owned(),
            name: cat.header.name.clone(),
            tags: cat.header.tags.clone(),
            description: cat.description.clone(),
            state_variables: cat.state_variables.clone(),
            model: cat.model.clone(),
        })
    }

    fn physical_element(&mut self, elem: &Arc<PhysicalElement>) -> Node<WirePhysicalElement> {
        self.node(&elem.header.uid, |w| WirePhysicalElement {
            uid: elem.header.uid.as_str().to_owned(),
            name: elem.header.name.clone(),
            tags: elem.header.tags.clone(),
            category: w.physical_element_category(&elem.category),
            properties: elem.properties.clone(),
        })
    }

    fn actor(&mut self, actor: &Arc<Actor>) -> Node<WireActor> {
        self.node(&actor.header.uid, |w| WireActor {
            uid: actor.header.uid.as_str().to_owned(),
            name: actor.header.name.clone(),
            tags: actor.header.tags.clone(),
            category: w.actor_category(&actor.category),
            initial_state: actor.initial_state.clone(),
            desired_state: actor.desired_state.clone(),
        })
    }

    fn activity(&mut self, activity: &Arc<Activity>) -> Node<WireActivity> {
        self.node(&activity.header.uid, |w| WireActivity {
            uid: activity.header.uid.as_str().to_owned(),
            name: activity.header.name.clone(),
            tags: activity.header.tags.clone(),
            category: w.activity_category(&activity.category),
            parameters: activity.parameters.clone(),
            start_event: w.event(&activity.start_event),
            end_event: w.event(&activity.end_event),
        })
    }

    pub fn scenario(&mut self, scenario: &Scenario) -> WireScenario {
        self.written.insert(scenario.header.uid.as_str().to_owned());
        WireScenario {
            uid: scenario.header.uid.as_str().to_owned(),
            name: scenario.header.name.clone(),
            tags: scenario.header.tags.clone(),
            start_event: self.event(&scenario.start_event),
            end_event: self.event(&scenario.end_event),
            events: scenario.events.iter().map(|e| self.event(e)).collect(),
            physical_elements: scenario
                .physical_elements
                .iter()
                .map(|e| self.physical_element(e))
                .collect(),
            actors: scenario.actors.iter().map(|a| self.actor(a)).collect(),
            activities: scenario.activities.iter().map(|a| self.activity(a)).collect(),
            acts: scenario
                .acts
                .iter()
                .map(|act| WireAct {
                    actor: Node::Ref { uid: act.actor.header.uid.as_str().to_owned() },
                    activity: Node::Ref { uid: act.activity.header.uid.as_str().to_owned() },
                })
                .collect(),
        }
    }

    pub fn scenario_category(&mut self, category: &ScenarioCategory) -> WireScenarioCategory {
        self.written.insert(category.header.uid.as_str().to_owned());
        WireScenarioCategory {
            uid: category.header.uid.as_str().to_owned(),
            name: category.header.name.clone(),
            tags: category.header.tags.clone(),
            description: category.description.clone(),
            physical_element_categories: category
                .physical_element_categories
                .iter()
                .map(|c| self.physical_element_category(c))
                .collect(),
            actor_categories: category
                .actor_categories
                .iter()
                .map(|c| self.actor_category(c))
                .collect(),
            activity_categories: category
                .activity_categories
                .iter()
                .map(|c| self.activity_category(c))
                .collect(),
            acts: category
                .acts
                .iter()
                .map(|act| WireCategoryAct {
                    actor_category: Node::Ref {
                        uid: act.actor_category.header.uid.as_str().to_owned(),
                    },
                    activity_category: Node::Ref {
                        uid: act.activity_category.header.uid.as_str().to_owned(),
                    },
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Wire → domain
// ---------------------------------------------------------------------------

/// Objects defined by one file, built up while resolving it.
#[derive(Default)]
pub struct LocalDefs {
    pub events: BTreeMap<String, Arc<Event>>,
    pub physical_element_categories: BTreeMap<String, Arc<PhysicalElementCategory>>,
    pub actor_categories: BTreeMap<String, Arc<ActorCategory>>,
    pub activity_categories: BTreeMap<String, Arc<ActivityCategory>>,
    pub physical_elements: BTreeMap<String, Arc<PhysicalElement>>,
    pub actors: BTreeMap<String, Arc<Actor>>,
    pub activities: BTreeMap<String, Arc<Activity>>,
}

/// Resolves wire nodes against the defining file first, then the library.
pub struct FileResolver<'a> {
    pub library: &'a Library,
    pub local: LocalDefs,
}

fn header(uid: &str, name: &str, tags: &[String]) -> ElementHeader {
    ElementHeader {
        uid: Uid::from(uid),
        name: name.to_owned(),
        tags: tags.to_vec(),
    }
}

/// Registers a definition, tolerating re-definitions that are structurally
/// identical (the same object inlined twice resolves to one instance).
fn register<T: PartialEq>(
    map: &mut BTreeMap<String, Arc<T>>,
    uid: &str,
    value: T,
) -> Result<Arc<T>, PersistError> {
    if let Some(existing) = map.get(uid) {
        if **existing == value {
            return Ok(Arc::clone(existing));
        }
        return Err(PersistError::DuplicateUid { uid: uid.to_owned() });
    }
    let arc = Arc::new(value);
    map.insert(uid.to_owned(), Arc::clone(&arc));
    Ok(arc)
}

impl FileResolver<'_> {
    pub fn event(&mut self, node: &Node<WireEvent>) -> Result<Arc<Event>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .events
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_event(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let event = Event {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    condition: wire.condition.clone(),
                };
                register(&mut self.local.events, &wire.uid, event)
            }
        }
    }

    pub fn physical_element_category(
        &mut self,
        node: &Node<WirePhysicalElementCategory>,
    ) -> Result<Arc<PhysicalElementCategory>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .physical_element_categories
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_physical_element_category(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let cat = PhysicalElementCategory {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    description: wire.description.clone(),
                };
                register(&mut self.local.physical_element_categories, &wire.uid, cat)
            }
        }
    }

    pub fn actor_category(
        &mut self,
        node: &Node<WireActorCategory>,
    ) -> Result<Arc<ActorCategory>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .actor_categories
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_actor_category(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let cat = ActorCategory {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    description: wire.description.clone(),
                    actor_type: wire.actor_type,
                };
                register(&mut self.local.actor_categories, &wire.uid, cat)
            }
        }
    }

    pub fn activity_category(
        &mut self,
        node: &Node<WireActivityCategory>,
    ) -> Result<Arc<ActivityCategory>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .activity_categories
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_activity_category(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let cat = ActivityCategory {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    description: wire.description.clone(),
                    state_variables: wire.state_variables.clone(),
                    model: wire.model.clone(),
                };
                register(&mut self.local.activity_categories, &wire.uid, cat)
            }
        }
    }

    pub fn physical_element(
        &mut self,
        node: &Node<WirePhysicalElement>,
    ) -> Result<Arc<PhysicalElement>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .physical_elements
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_physical_element(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let category = self.physical_element_category(&wire.category)?;
                let elem = PhysicalElement {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    category,
                    properties: wire.properties.clone(),
                };
                register(&mut self.local.physical_elements, &wire.uid, elem)
            }
        }
    }

    pub fn actor(&mut self, node: &Node<WireActor>) -> Result<Arc<Actor>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .actors
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_actor(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let category = self.actor_category(&wire.category)?;
                let actor = Actor {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    category,
                    initial_state: wire.initial_state.clone(),
                    desired_state: wire.desired_state.clone(),
                };
                register(&mut self.local.actors, &wire.uid, actor)
            }
        }
    }

    pub fn activity(&mut self, node: &Node<WireActivity>) -> Result<Arc<Activity>, PersistError> {
        match node {
            Node::Ref { uid } => self
                .local
                .activities
                .get(uid)
                .cloned()
                .or_else(|| self.library.cached_activity(uid))
                .ok_or_else(|| PersistError::UnresolvedReference { uid: uid.clone() }),
            Node::Def(wire) => {
                let category = self.activity_category(&wire.category)?;
                let start_event = self.event(&wire.start_event)?;
                let end_event = self.event(&wire.end_event)?;
                let activity = Activity {
                    header: header(&wire.uid, &wire.name, &wire.tags),
                    category,
                    parameters: wire.parameters.clone(),
                    start_event,
                    end_event,
                };
                register(&mut self.local.activities, &wire.uid, activity)
            }
        }
    }

    pub fn scenario(&mut self, wire: &WireScenario) -> Result<Scenario, PersistError> {
        let start_event = self.event(&wire.start_event)?;
        let end_event = self.event(&wire.end_event)?;
        let events = wire
            .events
            .iter()
            .map(|n| self.event(n))
            .collect::<Result<Vec<_>, _>>()?;
        let physical_elements = wire
            .physical_elements
            .iter()
            .map(|n| self.physical_element(n))
            .collect::<Result<Vec<_>, _>>()?;
        let actors = wire
            .actors
            .iter()
            .map(|n| self.actor(n))
            .collect::<Result<Vec<_>, _>>()?;
        let activities = wire
            .activities
            .iter()
            .map(|n| self.activity(n))
            .collect::<Result<Vec<_>, _>>()?;
        let acts = wire
            .acts
            .iter()
            .map(|act| {
                Ok(Act {
                    actor: self.actor(&act.actor)?,
                    activity: self.activity(&act.activity)?,
                })
            })
            .collect::<Result<Vec<_>, PersistError>>()?;
        Ok(Scenario {
            header: header(&wire.uid, &wire.name, &wire.tags),
            start_event,
            end_event,
            physical_elements,
            actors,
            activities,
            events,
            acts,
        })
    }

    pub fn scenario_category(
        &mut self,
        wire: &WireScenarioCategory,
    ) -> Result<ScenarioCategory, PersistError> {
        let physical_element_categories = wire
            .physical_element_categories
            .iter()
            .map(|n| self.physical_element_category(n))
            .collect::<Result<Vec<_>, _>>()?;
        let actor_categories = wire
            .actor_categories
            .iter()
            .map(|n| self.actor_category(n))
            .collect::<Result<Vec<_>, _>>()?;
        let activity_categories = wire
            .activity_categories
            .iter()
            .map(|n| self.activity_category(n))
            .collect::<Result<Vec<_>, _>>()?;
        let acts = wire
            .acts
            .iter()
            .map(|act| {
                Ok(CategoryAct {
                    actor_category: self.actor_category(&act.actor_category)?,
                    activity_category: self.activity_category(&act.activity_category)?,
                })
            })
            .collect::<Result<Vec<_>, PersistError>>()?;
        Ok(ScenarioCategory {
            header: header(&wire.uid, &wire.name, &wire.tags),
            description: wire.description.clone(),
            physical_element_categories,
            actor_categories,
            activity_categories,
            acts,
        })
    }
}

// ---------------------------------------------------------------------------
// Reference / definition enumeration (for index building and preloading)
// ---------------------------------------------------------------------------

pub fn collect_uids(payload: &super::Payload) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut defs = BTreeSet::new();
    let mut refs = BTreeSet::new();
    match payload {
        super::Payload::Scenario(s) => {
            defs.insert(s.uid.clone());
            scan_event(&s.start_event, &mut defs, &mut refs);
            scan_event(&s.end_event, &mut defs, &mut refs);
            for e in &s.events {
                scan_event(e, &mut defs, &mut refs);
            }
            for e in &s.physical_elements {
                match e {
                    Node::Ref { uid } => {
                        refs.insert(uid.clone());
                    }
                    Node::Def(d) => {
                        defs.insert(d.uid.clone());
                        scan_node(&d.category, |c| c.uid.clone(), &mut defs, &mut refs);
                    }
                }
            }
            for a in &s.actors {
                match a {
                    Node::Ref { uid } => {
                        refs.insert(uid.clone());
                    }
                    Node::Def(d) => {
                        defs.insert(d.uid.clone());
                        scan_node(&d.category, |c| c.uid.clone(), &mut defs, &mut refs);
                    }
                }
            }
            for a in &s.activities {
                match a {
                    Node::Ref { uid } => {
                        refs.insert(uid.clone());
                    }
                    Node::Def(d) => {
                        defs.insert(d.uid.clone());
                        scan_node(&d.category, |c| c.uid.clone(), &mut defs, &mut refs);
                        scan_event(&d.start_event, &mut defs, &mut refs);
                        scan_event(&d.end_event, &mut defs, &mut refs);
                    }
                }
            }
            for act in &s.acts {
                scan_node(&act.actor, |a| a.uid.clone(), &mut defs, &mut refs);
                scan_node(&act.activity, |a| a.uid.clone(), &mut defs, &mut refs);
            }
        }
        super::Payload::ScenarioCategory(c) => {
            defs.insert(c.uid.clone());
            for n in &c.physical_element_categories {
                scan_node(n, |d| d.uid.clone(), &mut defs, &mut refs);
            }
            for n in &c.actor_categories {
                scan_node(n, |d| d.uid.clone(), &mut defs, &mut refs);
            }
            for n in &c.activity_categories {
                scan_node(n, |d| d.uid.clone(), &mut defs, &mut refs);
            }
            for act in &c.acts {
                scan_node(&act.actor_category, |d| d.uid.clone(), &mut defs, &mut refs);
                scan_node(&act.activity_category, |d| d.uid.clone(), &mut defs, &mut refs);
            }
        }
        super::Payload::TagTrees(t) => {
            defs.insert(t.uid.clone());
        }
        super::Payload::LibraryIndex(_) => {}
    }
    // A uid both defined and referenced in the same file is not external.
    let refs = refs.difference(&defs).cloned().collect();
    (defs, refs)
}

fn scan_node<T>(
    node: &Node<T>,
    uid_of: impl Fn(&T) -> String,
    defs: &mut BTreeSet<String>,
    refs: &mut BTreeSet<String>,
) {
    match node {
        Node::Ref { uid } => {
            refs.insert(uid.clone());
        }
        Node::Def(d) => {
            defs.insert(uid_of(d));
        }
    }
}

fn scan_event(node: &Node<WireEvent>, defs: &mut BTreeSet<String>, refs: &mut BTreeSet<String>) {
    scan_node(node, |e| e.uid.clone(), defs, refs);
}
