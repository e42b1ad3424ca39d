//! Category ↔ scenario matching.
//!
//! `comprises` decides whether a scenario category abstracts a scenario by
//! structural matching: an injective assignment of each category requirement
//! (actor, physical element, and activity categories) onto distinct scenario
//! elements with compatible type, model, state variables, and implied tags,
//! such that every category act is realized by a scenario act.
//!
//! `includes` is the category-to-category analogue: every requirement of the
//! general category must be subsumed by a distinct requirement of the
//! specific one. It is a sufficient condition: whenever it answers true,
//! every scenario comprised by the specific category is also comprised by
//! the general one. It may answer false for pairs whose overlap is semantic
//! rather than structural.
//!
//! Requirements and providers are matched per element class; the act
//! constraint couples actor and activity assignments, so those two classes
//! are searched together by backtracking over all saturating assignments,
//! capped by [`MATCH_BUDGET`].

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{derived_tags, Activity, Actor, ElementHeader, PhysicalElement, Scenario, ScenarioCategory};
use crate::tags::{Tag, TagError, TagRegistry};

/// Maximum number of backtracking assignment attempts per match query.
pub const MATCH_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatchError {
    #[error("matching budget of {limit} assignment attempts exceeded")]
    BudgetExceeded { limit: usize },
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Registry holding the two default vehicle-activity trees and the
/// standalone `Ego vehicle` tag.
pub fn register_default_trees() -> TagRegistry {
    TagRegistry::default_trees()
}

/// True iff `general` is `specific` itself or an ancestor of it; both must be
/// registered.
pub fn tag_implies(registry: &TagRegistry, specific: &Tag, general: &Tag) -> Result<bool, TagError> {
    registry.implies(specific, general)
}

/// The comprises relation `C ∋ S`.
pub fn comprises(
    category: &ScenarioCategory,
    scenario: &Scenario,
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    let mut budget = Budget::new(MATCH_BUDGET);

    // Physical elements are not act-coupled: a saturating matching suffices.
    let phys_candidates: Vec<Vec<usize>> = category
        .physical_element_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            let mut out = Vec::new();
            for (i, elem) in scenario.physical_elements.iter().enumerate() {
                if element_provides(elem, &required, tags)? {
                    out.push(i);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, MatchError>>()?;
    if !saturates(&phys_candidates, scenario.physical_elements.len()) {
        return Ok(false);
    }

    // Actors and activities are coupled through the act constraint.
    let actor_candidates: Vec<Vec<usize>> = category
        .actor_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            let mut out = Vec::new();
            for (i, actor) in scenario.actors.iter().enumerate() {
                if actor_provides(actor, req.actor_type, &required, tags)? {
                    out.push(i);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, MatchError>>()?;

    let activity_candidates: Vec<Vec<usize>> = category
        .activity_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            let mut out = Vec::new();
            for (i, activity) in scenario.activities.iter().enumerate() {
                if activity_provides(activity, req, &required, tags)? {
                    out.push(i);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, MatchError>>()?;

    let index_of_actor = |uid: &str| scenario.actors.iter().position(|a| a.header.uid.as_str() == uid);
    let index_of_activity =
        |uid: &str| scenario.activities.iter().position(|a| a.header.uid.as_str() == uid);
    let scenario_acts: BTreeSet<(usize, usize)> = scenario
        .acts
        .iter()
        .filter_map(|act| {
            Some((
                index_of_actor(act.actor.header.uid.as_str())?,
                index_of_activity(act.activity.header.uid.as_str())?,
            ))
        })
        .collect();
    let category_acts: Vec<(usize, usize)> = category
        .acts
        .iter()
        .filter_map(|act| {
            let ai = category
                .actor_categories
                .iter()
                .position(|c| c.header.uid == act.actor_category.header.uid)?;
            let vi = category
                .activity_categories
                .iter()
                .position(|c| c.header.uid == act.activity_category.header.uid)?;
            Some((ai, vi))
        })
        .collect();

    coupled_search(
        &actor_candidates,
        scenario.actors.len(),
        &activity_candidates,
        scenario.activities.len(),
        &category_acts,
        &scenario_acts,
        &mut budget,
    )
}

/// The includes relation `C2 ⊇ C1`: `general ⊇ specific`.
pub fn includes(
    general: &ScenarioCategory,
    specific: &ScenarioCategory,
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    let mut budget = Budget::new(MATCH_BUDGET);

    let phys_candidates: Vec<Vec<usize>> = general
        .physical_element_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            general_candidates(
                specific.physical_element_categories.iter().map(|c| &c.header),
                &required,
                tags,
            )
        })
        .collect::<Result<_, MatchError>>()?;
    if !saturates(&phys_candidates, specific.physical_element_categories.len()) {
        return Ok(false);
    }

    let actor_candidates: Vec<Vec<usize>> = general
        .actor_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            let mut out = Vec::new();
            for (i, cat) in specific.actor_categories.iter().enumerate() {
                if cat.actor_type == req.actor_type
                    && header_provides(&cat.header, None, &required, tags)?
                {
                    out.push(i);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, MatchError>>()?;

    let activity_candidates: Vec<Vec<usize>> = general
        .activity_categories
        .iter()
        .map(|req| {
            let required = resolve_tags(&req.header, None, tags)?;
            let mut out = Vec::new();
            for (i, cat) in specific.activity_categories.iter().enumerate() {
                if cat.model == req.model
                    && same_variables(&cat.state_variables, &req.state_variables)
                    && header_provides(&cat.header, None, &required, tags)?
                {
                    out.push(i);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, MatchError>>()?;

    let specific_acts: BTreeSet<(usize, usize)> = specific
        .acts
        .iter()
        .filter_map(|act| {
            let ai = specific
                .actor_categories
                .iter()
                .position(|c| c.header.uid == act.actor_category.header.uid)?;
            let vi = specific
                .activity_categories
                .iter()
                .position(|c| c.header.uid == act.activity_category.header.uid)?;
            Some((ai, vi))
        })
        .collect();
    let general_acts: Vec<(usize, usize)> = general
        .acts
        .iter()
        .filter_map(|act| {
            let ai = general
                .actor_categories
                .iter()
                .position(|c| c.header.uid == act.actor_category.header.uid)?;
            let vi = general
                .activity_categories
                .iter()
                .position(|c| c.header.uid == act.activity_category.header.uid)?;
            Some((ai, vi))
        })
        .collect();

    coupled_search(
        &actor_candidates,
        specific.actor_categories.len(),
        &activity_candidates,
        specific.activity_categories.len(),
        &general_acts,
        &specific_acts,
        &mut budget,
    )
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SelectError {
    #[error("query syntax error: {0}")]
    Query(String),
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Scenarios whose derived tags (with ancestor closure) satisfy the boolean
/// tag query. Input order is preserved.
pub fn select(
    library: &[Arc<Scenario>],
    query: &str,
    tags: &TagRegistry,
) -> Result<Vec<Arc<Scenario>>, SelectError> {
    let query = TagQuery::parse(query)?;
    let mut out = Vec::new();
    for scenario in library {
        let derived = derived_tags(scenario, tags)?;
        if query.matches(&derived, tags)? {
            out.push(Arc::clone(scenario));
        }
    }
    Ok(out)
}

/// Boolean query over tag names: `AND`, `OR`, `NOT`, parentheses, and
/// multi-word tag atoms such as `Ego vehicle`.
#[derive(Debug, Clone, PartialEq)]
pub enum TagQuery {
    Atom(String),
    And(Box<TagQuery>, Box<TagQuery>),
    Or(Box<TagQuery>, Box<TagQuery>),
    Not(Box<TagQuery>),
}

impl TagQuery {
    pub fn parse(text: &str) -> Result<Self, SelectError> {
        let tokens = query_tokens(text);
        let mut parser = QueryParser { tokens, pos: 0 };
        let query = parser.parse_or()?;
        if parser.pos != parser.tokens.len() {
            return Err(SelectError::Query(format!(
                "unexpected `{}`",
                parser.tokens[parser.pos]
            )));
        }
        Ok(query)
    }

    /// Evaluates against an ancestor-closed tag set.
    pub fn matches(&self, closed: &BTreeSet<Tag>, tags: &TagRegistry) -> Result<bool, TagError> {
        match self {
            TagQuery::Atom(name) => {
                let tag = tags.resolve(name)?;
                Ok(closed.contains(&tag))
            }
            TagQuery::And(l, r) => Ok(l.matches(closed, tags)? && r.matches(closed, tags)?),
            TagQuery::Or(l, r) => Ok(l.matches(closed, tags)? || r.matches(closed, tags)?),
            TagQuery::Not(inner) => Ok(!inner.matches(closed, tags)?),
        }
    }
}

fn query_tokens(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

struct QueryParser {
    tokens: Vec<String>,
    pos: usize,
}

impl QueryParser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn parse_or(&mut self) -> Result<TagQuery, SelectError> {
        let mut expr = self.parse_and()?;
        while self.peek() == Some("OR") {
            self.pos += 1;
            let rhs = self.parse_and()?;
            expr = TagQuery::Or(Box::new(expr), Box::new(rhs));
        }
        Ok(expr)
    }

    fn parse_and(&mut self) -> Result<TagQuery, SelectError> {
        let mut expr = self.parse_not()?;
        while self.peek() == Some("AND") {
            self.pos += 1;
            let rhs = self.parse_not()?;
            expr = TagQuery::And(Box::new(expr), Box::new(rhs));
        }
        Ok(expr)
    }

    fn parse_not(&mut self) -> Result<TagQuery, SelectError> {
        if self.peek() == Some("NOT") {
            self.pos += 1;
            let inner = self.parse_not()?;
            return Ok(TagQuery::Not(Box::new(inner)));
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<TagQuery, SelectError> {
        match self.peek() {
            Some("(") => {
                self.pos += 1;
                let inner = self.parse_or()?;
                if self.peek() != Some(")") {
                    return Err(SelectError::Query("expected `)`".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(")") | Some("AND") | Some("OR") | None => {
                Err(SelectError::Query("expected a tag name".into()))
            }
            Some(_) => {
                // Consecutive words up to the next operator form one tag name.
                let mut words = Vec::new();
                while let Some(word) = self.peek() {
                    if matches!(word, "AND" | "OR" | "NOT" | "(" | ")") {
                        break;
                    }
                    words.push(word.to_owned());
                    self.pos += 1;
                }
                Ok(TagQuery::Atom(words.join(" ")))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Matching internals
// ---------------------------------------------------------------------------

struct Budget {
    attempts: usize,
    limit: usize,
}

impl Budget {
    fn new(limit: usize) -> Self {
        Self { attempts: 0, limit }
    }

    fn spend(&mut self) -> Result<(), MatchError> {
        self.attempts += 1;
        if self.attempts > self.limit {
            Err(MatchError::BudgetExceeded { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

fn resolve_tags(
    header: &ElementHeader,
    category_header: Option<&ElementHeader>,
    tags: &TagRegistry,
) -> Result<Vec<Tag>, MatchError> {
    let mut out = Vec::new();
    for raw in header
        .tags
        .iter()
        .chain(category_header.into_iter().flat_map(|h| h.tags.iter()))
    {
        out.push(tags.resolve(raw)?);
    }
    Ok(out)
}

/// Every required tag is implied by some provided tag.
fn tags_satisfy(provided: &[Tag], required: &[Tag]) -> bool {
    required.iter().all(|req| provided.iter().any(|p| p.implies(req)))
}

fn header_provides(
    header: &ElementHeader,
    category_header: Option<&ElementHeader>,
    required: &[Tag],
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    let provided = resolve_tags(header, category_header, tags)?;
    Ok(tags_satisfy(&provided, required))
}

fn element_provides(
    element: &Arc<PhysicalElement>,
    required: &[Tag],
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    header_provides(&element.header, Some(&element.category.header), required, tags)
}

fn actor_provides(
    actor: &Arc<Actor>,
    required_type: crate::model::ActorType,
    required: &[Tag],
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    if actor.category.actor_type != required_type {
        return Ok(false);
    }
    header_provides(&actor.header, Some(&actor.category.header), required, tags)
}

fn activity_provides(
    activity: &Arc<Activity>,
    req: &crate::model::ActivityCategory,
    required: &[Tag],
    tags: &TagRegistry,
) -> Result<bool, MatchError> {
    if activity.category.model != req.model {
        return Ok(false);
    }
    if !same_variables(&activity.category.state_variables, &req.state_variables) {
        return Ok(false);
    }
    header_provides(&activity.header, Some(&activity.category.header), required, tags)
}

fn same_variables(a: &[String], b: &[String]) -> bool {
    let a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    a == b
}

fn general_candidates<'a>(
    providers: impl Iterator<Item = &'a ElementHeader>,
    required: &[Tag],
    tags: &TagRegistry,
) -> Result<Vec<usize>, MatchError> {
    let mut out = Vec::new();
    for (i, header) in providers.enumerate() {
        if header_provides(header, None, required, tags)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Kuhn's augmenting-path maximum matching; true iff every left slot can be
/// matched to a distinct right element.
fn saturates(candidates: &[Vec<usize>], n_right: usize) -> bool {
    fn try_assign(
        slot: usize,
        candidates: &[Vec<usize>],
        visited: &mut [bool],
        matched_to: &mut [Option<usize>],
    ) -> bool {
        for &cand in &candidates[slot] {
            if visited[cand] {
                continue;
            }
            visited[cand] = true;
            if matched_to[cand].is_none()
                || try_assign(matched_to[cand].unwrap(), candidates, visited, matched_to)
            {
                matched_to[cand] = Some(slot);
                return true;
            }
        }
        false
    }

    let mut matched_to = vec![None; n_right];
    for slot in 0..candidates.len() {
        let mut visited = vec![false; n_right];
        if !try_assign(slot, candidates, &mut visited, &mut matched_to) {
            return false;
        }
    }
    true
}

struct CoupledSearch<'a> {
    n_actor_slots: usize,
    total: usize,
    actor_candidates: &'a [Vec<usize>],
    activity_candidates: &'a [Vec<usize>],
    category_acts: &'a [(usize, usize)],
    scenario_acts: &'a BTreeSet<(usize, usize)>,
    actor_assign: Vec<usize>,
    activity_assign: Vec<usize>,
    actor_used: Vec<bool>,
    activity_used: Vec<bool>,
}

impl CoupledSearch<'_> {
    /// An act constraint holds, or is not yet decidable, under the current
    /// partial assignment.
    fn acts_hold(&self) -> bool {
        self.category_acts.iter().all(|&(ai, vi)| {
            let actor = self.actor_assign[ai];
            let activity = self.activity_assign[vi];
            actor == usize::MAX
                || activity == usize::MAX
                || self.scenario_acts.contains(&(actor, activity))
        })
    }

    fn search(&mut self, slot: usize, budget: &mut Budget) -> Result<bool, MatchError> {
        if slot == self.total {
            return Ok(true);
        }
        let is_actor_slot = slot < self.n_actor_slots;
        let candidates = if is_actor_slot {
            self.actor_candidates[slot].clone()
        } else {
            self.activity_candidates[slot - self.n_actor_slots].clone()
        };
        for cand in candidates {
            let used = if is_actor_slot {
                self.actor_used[cand]
            } else {
                self.activity_used[cand]
            };
            if used {
                continue;
            }
            budget.spend()?;
            if is_actor_slot {
                self.actor_used[cand] = true;
                self.actor_assign[slot] = cand;
            } else {
                self.activity_used[cand] = true;
                self.activity_assign[slot - self.n_actor_slots] = cand;
            }
            if self.acts_hold() && self.search(slot + 1, budget)? {
                return Ok(true);
            }
            if is_actor_slot {
                self.actor_used[cand] = false;
                self.actor_assign[slot] = usize::MAX;
            } else {
                self.activity_used[cand] = false;
                self.activity_assign[slot - self.n_actor_slots] = usize::MAX;
            }
        }
        Ok(false)
    }
}

/// Searches for injective actor and activity assignments that realize every
/// category act, backtracking over all saturating assignments.
fn coupled_search(
    actor_candidates: &[Vec<usize>],
    n_actors: usize,
    activity_candidates: &[Vec<usize>],
    n_activities: usize,
    category_acts: &[(usize, usize)],
    scenario_acts: &BTreeSet<(usize, usize)>,
    budget: &mut Budget,
) -> Result<bool, MatchError> {
    // Cheap refutation before the exponential part.
    if !saturates(actor_candidates, n_actors) || !saturates(activity_candidates, n_activities) {
        return Ok(false);
    }

    let mut search = CoupledSearch {
        n_actor_slots: actor_candidates.len(),
        total: actor_candidates.len() + activity_candidates.len(),
        actor_candidates,
        activity_candidates,
        category_acts,
        scenario_acts,
        actor_assign: vec![usize::MAX; actor_candidates.len()],
        activity_assign: vec![usize::MAX; activity_candidates.len()],
        actor_used: vec![false; n_actors],
        activity_used: vec![false; n_activities],
    };
    search.search(0, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::ConditionExpr;
    use crate::dynamics::ModelKind;
    use crate::model::{
        Act, Activity, ActivityCategory, Actor, ActorCategory, ActorType, CategoryAct,
        ElementHeader, Event, Quantity, Scenario, ScenarioCategory, StateVector,
    };

    fn ego_category() -> Arc<ActorCategory> {
        Arc::new(ActorCategory {
            header: ElementHeader::new("ego cat", "Ego").with_tags(["Ego vehicle"]),
            description: "the ego vehicle".into(),
            actor_type: ActorType::Vehicle,
        })
    }

    fn ped_category() -> Arc<ActorCategory> {
        Arc::new(ActorCategory {
            header: ElementHeader::new("ped cat", "Pedestrian"),
            description: "a pedestrian".into(),
            actor_type: ActorType::Pedestrian,
        })
    }

    fn braking_category() -> Arc<ActivityCategory> {
        Arc::new(ActivityCategory {
            header: ElementHeader::new("braking cat", "Braking").with_tags(["Decelerating"]),
            description: "speed decreases to a stop".into(),
            state_variables: vec!["v".into()],
            model: ModelKind::sinusoidal(),
        })
    }

    fn event(uid: &str, cond: &str) -> Arc<Event> {
        Arc::new(Event {
            header: ElementHeader::new(uid, uid),
            condition: ConditionExpr::parse(cond).unwrap(),
        })
    }

    fn scenario_with_braking_ego() -> Scenario {
        let ego_cat = ego_category();
        let start = event("start", "t >= 0");
        let end = event("end", "t >= 4");
        let ego = Arc::new(Actor {
            header: ElementHeader::new("ego", "Ego"),
            category: Arc::clone(&ego_cat),
            initial_state: StateVector::new([("x", Quantity::bare(-20.0)), ("v", Quantity::bare(8.0))]),
            desired_state: None,
        });
        let braking = Arc::new(Activity {
            header: ElementHeader::new("ego braking", "Ego braking"),
            category: braking_category(),
            parameters: [("A", -8.0), ("T", 4.0), ("t0", 0.0), ("z0", 8.0)]
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect(),
            start_event: Arc::clone(&start),
            end_event: Arc::clone(&end),
        });
        Scenario {
            header: ElementHeader::new("scenario", "Braking scenario"),
            start_event: start,
            end_event: end,
            physical_elements: vec![],
            actors: vec![Arc::clone(&ego)],
            activities: vec![Arc::clone(&braking)],
            events: vec![],
            acts: vec![Act { actor: ego, activity: braking }],
        }
    }

    fn braking_scenario_category() -> ScenarioCategory {
        let ego_cat = ego_category();
        let braking_cat = braking_category();
        ScenarioCategory {
            header: ElementHeader::new("braking category", "Braking"),
            description: "an ego vehicle braking".into(),
            physical_element_categories: vec![],
            actor_categories: vec![Arc::clone(&ego_cat)],
            activity_categories: vec![Arc::clone(&braking_cat)],
            acts: vec![CategoryAct { actor_category: ego_cat, activity_category: braking_cat }],
        }
    }

    #[test]
    fn category_comprises_matching_scenario() {
        let tags = TagRegistry::default_trees();
        let scenario = scenario_with_braking_ego();
        let category = braking_scenario_category();
        assert!(comprises(&category, &scenario, &tags).unwrap());
    }

    #[test]
    fn parameter_values_do_not_affect_comprises() {
        let tags = TagRegistry::default_trees();
        let mut scenario = scenario_with_braking_ego();
        let softer = Arc::new(Activity {
            parameters: [("A", -7.5), ("T", 4.0), ("t0", 0.0), ("z0", 7.5)]
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect(),
            ..(*scenario.activities[0]).clone()
        });
        scenario.activities = vec![Arc::clone(&softer)];
        scenario.acts = vec![Act { actor: Arc::clone(&scenario.actors[0]), activity: softer }];
        assert!(comprises(&braking_scenario_category(), &scenario, &tags).unwrap());
    }

    #[test]
    fn unmatched_activity_category_fails_comprises() {
        let tags = TagRegistry::default_trees();
        let mut scenario = scenario_with_braking_ego();
        // Drop the braking act and give the ego a goal instead.
        scenario.activities.clear();
        scenario.acts.clear();
        let ego = Arc::new(Actor {
            desired_state: Some(StateVector::new([("x", Quantity::bare(20.0))])),
            ..(*scenario.actors[0]).clone()
        });
        scenario.actors = vec![ego];
        assert!(!comprises(&braking_scenario_category(), &scenario, &tags).unwrap());
    }

    #[test]
    fn act_structure_must_be_realized() {
        let tags = TagRegistry::default_trees();
        let mut scenario = scenario_with_braking_ego();
        // Rewire the act so the braking activity belongs to a pedestrian.
        let ped = Arc::new(Actor {
            header: ElementHeader::new("ped", "Pedestrian"),
            category: ped_category(),
            initial_state: StateVector::new([("y", Quantity::bare(-6.0))]),
            desired_state: None,
        });
        scenario.actors.push(Arc::clone(&ped));
        let braking = Arc::clone(&scenario.activities[0]);
        scenario.acts = vec![Act { actor: ped, activity: braking }];

        // Tag/type matching alone would succeed; the act pairing refutes it.
        assert!(!comprises(&braking_scenario_category(), &scenario, &tags).unwrap());
    }

    #[test]
    fn includes_is_reflexive_and_detects_strictness() {
        let tags = TagRegistry::default_trees();
        let full = braking_scenario_category();
        assert!(includes(&full, &full, &tags).unwrap());

        // A reduced category without the braking requirement.
        let reduced = ScenarioCategory {
            header: ElementHeader::new("reduced", "Reduced"),
            description: "ego present, no activity requirements".into(),
            physical_element_categories: vec![],
            actor_categories: vec![ego_category()],
            activity_categories: vec![],
            acts: vec![],
        };
        assert!(includes(&reduced, &full, &tags).unwrap());
        assert!(!includes(&full, &reduced, &tags).unwrap());
    }

    #[test]
    fn includes_uses_tag_implication_direction() {
        let tags = TagRegistry::default_trees();
        // The general category only requires "Driving forward"; the specific
        // one requires the narrower "Decelerating".
        let general_cat = Arc::new(ActivityCategory {
            header: ElementHeader::new("forward cat", "Forward").with_tags(["Driving forward"]),
            description: "any forward activity".into(),
            state_variables: vec!["v".into()],
            model: ModelKind::sinusoidal(),
        });
        let general = ScenarioCategory {
            header: ElementHeader::new("general", "General"),
            description: "forward motion".into(),
            physical_element_categories: vec![],
            actor_categories: vec![ego_category()],
            activity_categories: vec![general_cat],
            acts: vec![],
        };
        let specific = braking_scenario_category();
        assert!(includes(&general, &specific, &tags).unwrap());
        assert!(!includes(&specific, &general, &tags).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let tags = TagRegistry::default_trees();
        let vehicle_cat = Arc::new(ActorCategory {
            header: ElementHeader::new("vehicle cat", "Vehicle"),
            description: "a vehicle".into(),
            actor_type: ActorType::Vehicle,
        });
        let stationary_cat = Arc::new(ActivityCategory {
            header: ElementHeader::new("stationary cat", "Stationary"),
            description: "standing still".into(),
            state_variables: vec!["v".into()],
            model: ModelKind::constant(),
        });
        let start = event("start", "t >= 0");
        let end = event("end", "t >= 1");
        let hold = Arc::new(Activity {
            header: ElementHeader::new("hold", "Hold"),
            category: Arc::clone(&stationary_cat),
            parameters: [("z0".to_owned(), 0.0)].into_iter().collect(),
            start_event: Arc::clone(&start),
            end_event: Arc::clone(&end),
        });
        let actors: Vec<Arc<Actor>> = (0..8)
            .map(|i| {
                Arc::new(Actor {
                    header: ElementHeader::new(format!("actor {i}"), "Vehicle"),
                    category: Arc::clone(&vehicle_cat),
                    initial_state: StateVector::new([("v", Quantity::bare(0.0))]),
                    desired_state: None,
                })
            })
            .collect();
        // No scenario acts at all, so any category act is unsatisfiable.
        let scenario = Scenario {
            header: ElementHeader::new("crowd", "Crowd"),
            start_event: start,
            end_event: end,
            physical_elements: vec![],
            actors,
            activities: vec![hold],
            events: vec![],
            acts: vec![],
        };

        // 8 interchangeable actor requirements and one activity requirement
        // whose act can never be realized: the search must visit every
        // injective assignment before answering, which blows the budget.
        let actor_reqs: Vec<Arc<ActorCategory>> = (0..8)
            .map(|i| {
                Arc::new(ActorCategory {
                    header: ElementHeader::new(format!("req {i}"), "Vehicle"),
                    description: "a vehicle".into(),
                    actor_type: ActorType::Vehicle,
                })
            })
            .collect();
        let hold_req = Arc::new(ActivityCategory {
            header: ElementHeader::new("hold req", "Hold req"),
            description: "hold".into(),
            state_variables: vec!["v".into()],
            model: ModelKind::constant(),
        });
        let category = ScenarioCategory {
            header: ElementHeader::new("big", "Big"),
            description: "many interchangeable vehicles".into(),
            physical_element_categories: vec![],
            actor_categories: actor_reqs.clone(),
            activity_categories: vec![Arc::clone(&hold_req)],
            acts: vec![CategoryAct {
                actor_category: Arc::clone(&actor_reqs[0]),
                activity_category: hold_req,
            }],
        };

        assert_eq!(
            comprises(&category, &scenario, &tags),
            Err(MatchError::BudgetExceeded { limit: MATCH_BUDGET })
        );
    }

    #[test]
    fn select_filters_by_closed_tags() {
        let tags = TagRegistry::default_trees();
        let braking = Arc::new(scenario_with_braking_ego());

        let mut plain = scenario_with_braking_ego();
        plain.header = ElementHeader::new("plain", "No braking");
        plain.activities.clear();
        plain.acts.clear();
        let actor = Arc::new(Actor {
            desired_state: Some(StateVector::new([("x", Quantity::bare(0.0))])),
            ..(*plain.actors[0]).clone()
        });
        plain.actors = vec![actor];
        let plain = Arc::new(plain);

        let library = vec![Arc::clone(&braking), Arc::clone(&plain)];

        let hits = select(&library, "Ego vehicle AND Decelerating", &tags).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].header.uid.as_str(), "scenario");

        // Ancestor closure: the braking activity is tagged only
        // "Decelerating" but matches the coarser "Driving forward".
        let hits = select(&library, "Driving forward", &tags).unwrap();
        assert_eq!(hits.len(), 1);

        let hits = select(&library, "Ego vehicle", &tags).unwrap();
        assert_eq!(hits.len(), 2);

        let hits = select(&library, "Ego vehicle AND NOT Decelerating", &tags).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].header.uid.as_str(), "plain");

        assert!(select(&[], "Ego vehicle", &tags).unwrap().is_empty());
        assert!(matches!(
            select(&library, "No such tag", &tags),
            Err(SelectError::Tag(TagError::UnknownTag(_)))
        ));
    }

    #[test]
    fn comprises_is_monotone_under_requirement_removal() {
        let tags = TagRegistry::default_trees();
        let scenario = scenario_with_braking_ego();
        let full = braking_scenario_category();
        assert!(comprises(&full, &scenario, &tags).unwrap());

        // Remove the activity requirement (and its act).
        let mut without_activity = full.clone();
        without_activity.activity_categories.clear();
        without_activity.acts.clear();
        assert!(comprises(&without_activity, &scenario, &tags).unwrap());

        // Remove the actor requirement (and its act).
        let mut without_actor = full.clone();
        without_actor.actor_categories.clear();
        without_actor.acts.clear();
        assert!(comprises(&without_actor, &scenario, &tags).unwrap());
    }

    #[test]
    fn categories_need_not_be_mutually_exclusive() {
        let tags = TagRegistry::default_trees();
        let scenario = scenario_with_braking_ego();
        let by_act = braking_scenario_category();
        let by_actor_only = ScenarioCategory {
            header: ElementHeader::new("any ego", "Any ego"),
            description: "any scenario with an ego vehicle".into(),
            physical_element_categories: vec![],
            actor_categories: vec![ego_category()],
            activity_categories: vec![],
            acts: vec![],
        };
        assert!(comprises(&by_act, &scenario, &tags).unwrap());
        assert!(comprises(&by_actor_only, &scenario, &tags).unwrap());
    }

    #[test]
    fn query_parser_handles_precedence_and_parens() {
        let q = TagQuery::parse("Ego vehicle AND Decelerating OR Cruising").unwrap();
        assert!(matches!(q, TagQuery::Or(..)));
        let q = TagQuery::parse("Ego vehicle AND (Decelerating OR Cruising)").unwrap();
        assert!(matches!(q, TagQuery::And(..)));
        assert!(TagQuery::parse("AND Ego").is_err());
        assert!(TagQuery::parse("(Ego vehicle").is_err());
    }
}
