//! The scenario executor.
//!
//! Stepping scheme, per fixed grid step `[t_k, t_k+dt]`:
//!
//! 1. Policy-driven actors integrate once per grid step (semi-implicit
//!    Euler: `v += a·dt`, then `x += v·dt`), so within a step their position
//!    is linear and their speed is the end-of-step value.
//! 2. Activity-driven actors evaluate their governing closed forms directly
//!    at any queried instant; a speed-governing activity also advances the
//!    actor's `x` by the model's exact displacement integral. Variables with
//!    no governing activity hold their value (and `x` keeps integrating the
//!    held speed).
//! 3. Unfired events whose condition flips from false to true across the
//!    remaining step interval are localized by bisection to the configured
//!    tolerance; all events localized within one tolerance bracket fire
//!    simultaneously, in document order, and are recorded at that exact
//!    instant.
//! 4. Activity switches triggered by fired events apply immediately:
//!    a starting activity re-anchors its model at the fire instant with the
//!    variable's current value (state continuity at mode transitions), an
//!    ending activity releases its variables. `linked(...)` events fire in
//!    the same instant via cascading.
//!
//! The run ends when the scenario end event fires (the trace's last sample
//! is the localized end instant) or the horizon is exhausted, which is the
//! `timeout` outcome rather than an error.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::condition::{CmpOp, ConditionExpr, NumExpr};
use crate::dynamics::DomainPolicy;
use crate::model::{Activity, Scenario};

use super::policy::{EgoPolicy, PolicyInput};
use super::trace::{ActorState, EventFire, Trace, WorldState};
use super::{RectShape, SimConfig, SimError, WorldEnv};

/// Runs an activity-driven (or mixed) scenario. Every actor must either
/// perform activities via acts or have a policy in `policies` (keyed by
/// actor uid); an actor with both is rejected.
pub fn simulate(
    scenario: &Scenario,
    config: &SimConfig,
    policies: BTreeMap<String, Box<dyn EgoPolicy>>,
) -> Result<Trace, SimError> {
    Engine::new(scenario, config, policies)?.run()
}

/// Runs a test scenario: the single goal-driven actor (desired state, no
/// acts) is driven by `policy`; all other actors must be activity-driven.
pub fn run_test_scenario(
    scenario: &Scenario,
    policy: Box<dyn EgoPolicy>,
    config: &SimConfig,
) -> Result<Trace, SimError> {
    let goal_actors: Vec<&str> = scenario
        .actors
        .iter()
        .filter(|actor| {
            actor.desired_state.is_some()
                && scenario.activities_of(actor.header.uid.as_str()).is_empty()
        })
        .map(|actor| actor.header.uid.as_str())
        .collect();
    match goal_actors.as_slice() {
        [] => Err(SimError::InvalidConfig(
            "test scenario has no goal-driven actor (desired state, no acts)".into(),
        )),
        [uid] => {
            let mut policies: BTreeMap<String, Box<dyn EgoPolicy>> = BTreeMap::new();
            policies.insert((*uid).to_owned(), policy);
            simulate(scenario, config, policies)
        }
        many => Err(SimError::InvalidConfig(format!(
            "test scenario has {} goal-driven actors; supply policies via `simulate`",
            many.len()
        ))),
    }
}

/// Bisects the first instant in `bracket` at which `condition` holds, given
/// a state oracle. The condition must be false at the bracket start and true
/// at its end; the returned time is the upper end of the final bracket, so
/// the condition holds there and does not hold `tolerance` earlier.
pub fn locate_event(
    condition: &ConditionExpr,
    state_fn: impl Fn(f64) -> WorldState,
    bracket: (f64, f64),
    tolerance: f64,
    shapes: &BTreeMap<String, RectShape>,
) -> Result<f64, SimError> {
    let eval = |t: f64| -> Result<bool, SimError> {
        let world = state_fn(t);
        let env = WorldEnv { world: &world, shapes: Some(shapes), boundary_time: None };
        Ok(condition.evaluate(&env)?)
    };
    let (mut lo, mut hi) = bracket;
    if eval(lo)? || !eval(hi)? {
        return Err(SimError::NoSignChange);
    }
    while hi - lo > tolerance {
        let mid = lo + (hi - lo) / 2.0;
        if eval(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------------------
// Engine internals
// ---------------------------------------------------------------------------

struct RuntimeEvent {
    uid: String,
    condition: ConditionExpr,
    fired_at: Option<f64>,
}

/// One act at runtime: an activity governing some variables of one actor.
struct Assignment {
    actor_uid: String,
    activity: Arc<Activity>,
    start_event: usize,
    end_event: usize,
    /// Anchored model parameters per governed variable, set at activation.
    anchored: Option<BTreeMap<String, crate::dynamics::ModelParams>>,
    activated_at: Option<f64>,
    activation_seq: Option<u64>,
    ended: bool,
}

/// Per-grid-step integration record for a policy-driven actor: its state is
/// linear in position between these endpoints.
struct PolicySegment {
    start: ActorState,
    end: ActorState,
    t_start: f64,
    t_end: f64,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    config: &'a SimConfig,
    policies: BTreeMap<String, Box<dyn EgoPolicy>>,
    shapes: BTreeMap<String, RectShape>,
    events: Vec<RuntimeEvent>,
    assignments: Vec<Assignment>,
    /// Activity uid → (start event index, end event index); for `linked`.
    boundaries: BTreeMap<String, (usize, usize)>,
    world: WorldState,
    samples: Vec<WorldState>,
    fires: Vec<EventFire>,
    activation_counter: u64,
    end_event_uid: String,
    start_event_uid: String,
}

impl<'a> Engine<'a> {
    fn new(
        scenario: &'a Scenario,
        config: &'a SimConfig,
        policies: BTreeMap<String, Box<dyn EgoPolicy>>,
    ) -> Result<Self, SimError> {
        config.check()?;

        // Collision shapes: explicit config overrides, else actor-type default.
        let mut shapes = BTreeMap::new();
        for actor in &scenario.actors {
            let uid = actor.header.uid.as_str();
            let shape = config
                .shapes
                .get(uid)
                .copied()
                .unwrap_or_else(|| RectShape::default_for(actor.category.actor_type));
            shapes.insert(uid.to_owned(), shape);
        }

        // Event table in document order: start, end, then members.
        let mut events: Vec<RuntimeEvent> = Vec::new();
        for event in scenario.all_events() {
            if events.iter().any(|e| e.uid == event.header.uid.as_str()) {
                continue;
            }
            events.push(RuntimeEvent {
                uid: event.header.uid.as_str().to_owned(),
                condition: event.condition.clone(),
                fired_at: None,
            });
        }
        let event_index = |uid: &str| -> Result<usize, SimError> {
            events
                .iter()
                .position(|e| e.uid == uid)
                .ok_or_else(|| SimError::InvalidConfig(format!("event `{uid}` not in scenario")))
        };

        let mut boundaries = BTreeMap::new();
        for activity in &scenario.activities {
            boundaries.insert(
                activity.header.uid.as_str().to_owned(),
                (
                    event_index(activity.start_event.header.uid.as_str())?,
                    event_index(activity.end_event.header.uid.as_str())?,
                ),
            );
        }

        let mut assignments = Vec::new();
        for act in &scenario.acts {
            let activity = Arc::clone(&act.activity);
            for variable in &activity.category.state_variables {
                if !crate::model::state_schema::BASES.contains(&variable.as_str()) {
                    return Err(SimError::UnknownStateVariable {
                        activity: activity.header.uid.as_str().to_owned(),
                        variable: variable.clone(),
                    });
                }
            }
            let (start_event, end_event) = boundaries[activity.header.uid.as_str()];
            assignments.push(Assignment {
                actor_uid: act.actor.header.uid.as_str().to_owned(),
                activity,
                start_event,
                end_event,
                anchored: None,
                activated_at: None,
                activation_seq: None,
                ended: false,
            });
        }

        // Behavior coverage: acts or policy, not both, not neither.
        for actor in &scenario.actors {
            let uid = actor.header.uid.as_str();
            let has_acts = assignments.iter().any(|a| a.actor_uid == uid);
            let has_policy = policies.contains_key(uid);
            if has_acts && has_policy {
                return Err(SimError::ConflictingBehavior { actor: uid.to_owned() });
            }
            if !has_acts && !has_policy {
                return Err(SimError::NoGoverningBehavior { actor: uid.to_owned() });
            }
        }

        // Initial world state at t = 0 from the initial state vectors.
        let mut world = WorldState::empty(0.0);
        for actor in &scenario.actors {
            let get = |name: &str| actor.initial_state.get(name).unwrap_or(0.0);
            world.actors.insert(
                actor.header.uid.as_str().to_owned(),
                ActorState { x: get("x"), y: get("y"), v: get("v"), a: get("a") },
            );
        }
        for event in &events {
            world.fired.insert(event.uid.clone(), false);
        }

        Ok(Self {
            scenario,
            config,
            policies,
            shapes,
            events,
            assignments,
            boundaries,
            world,
            samples: Vec::new(),
            fires: Vec::new(),
            activation_counter: 0,
            end_event_uid: scenario.end_event.header.uid.as_str().to_owned(),
            start_event_uid: scenario.start_event.header.uid.as_str().to_owned(),
        })
    }

    fn run(mut self) -> Result<Trace, SimError> {
        let dt = self.config.dt;

        self.push_sample();
        // Events already true at t = 0 fire at t = 0 (the scenario start in
        // the bundled fixtures).
        self.fire_instant(0.0)?;
        if self.event_fired(&self.end_event_uid) {
            return self.finalize(true);
        }

        let mut step: u64 = 1;
        loop {
            let t_start = self.world.t;
            if t_start >= self.config.t_max {
                return self.finalize(false);
            }
            let t_next = (step as f64 * dt).min(self.config.t_max);

            let segments = self.integrate_policies(t_start, t_next)?;

            // Localize and fire events inside (t_start, t_next].
            let mut t_cur = t_start;
            loop {
                let batch = self.next_event_batch(t_cur, t_next, &segments)?;
                let Some((t_fire, event_indices)) = batch else { break };
                self.world = self.state_between(t_fire, &segments)?;
                for idx in event_indices {
                    self.fire_event(idx, t_fire);
                }
                self.apply_switches(t_fire);
                self.cascade(t_fire)?;
                self.push_sample();
                if self.event_fired(&self.end_event_uid) {
                    return self.finalize(true);
                }
                t_cur = t_fire;
                if t_cur >= t_next {
                    break;
                }
            }

            if self.world.t < t_next {
                self.world = self.state_between(t_next, &segments)?;
                self.push_sample();
            }
            step += 1;
        }
    }

    fn event_fired(&self, uid: &str) -> bool {
        self.events.iter().any(|e| e.uid == uid && e.fired_at.is_some())
    }

    fn fire_event(&mut self, index: usize, t: f64) {
        let event = &mut self.events[index];
        if event.fired_at.is_none() {
            event.fired_at = Some(t);
            self.fires.push(EventFire { uid: event.uid.clone(), t });
            self.world.fired.insert(event.uid.clone(), true);
        }
    }

    /// Applies activity switches for all currently fired events: ends
    /// before starts, so an event shared between one activity's end and the
    /// next one's start hands the variable over continuously.
    fn apply_switches(&mut self, t: f64) {
        for i in 0..self.assignments.len() {
            if self.assignments[i].anchored.is_some() && !self.assignments[i].ended {
                let end_fired = self.events[self.assignments[i].end_event].fired_at.is_some();
                if end_fired {
                    self.assignments[i].ended = true;
                }
            }
        }
        for i in 0..self.assignments.len() {
            let a = &self.assignments[i];
            if a.anchored.is_some() || a.ended {
                continue;
            }
            let start = self.events[a.start_event].fired_at;
            let end = self.events[a.end_event].fired_at;
            if end.is_some() {
                // End reached before the activity ever started: it never runs.
                self.assignments[i].ended = true;
                continue;
            }
            if start.is_some() {
                let anchored = self.anchor(i, t);
                let a = &mut self.assignments[i];
                a.anchored = Some(anchored);
                a.activated_at = Some(t);
                a.activation_seq = Some(self.activation_counter);
                self.activation_counter += 1;
            }
        }
    }

    /// Anchors an activity's model at the activation instant: `t0` becomes
    /// the fire time and `z0` the governed variable's current value, keeping
    /// the state continuous across the mode transition. Parameters outside
    /// the model's schema are left untouched.
    fn anchor(&self, index: usize, t: f64) -> BTreeMap<String, crate::dynamics::ModelParams> {
        let a = &self.assignments[index];
        let mut per_var = BTreeMap::new();
        let actor = &self.world.actors[&a.actor_uid];
        for variable in &a.activity.category.state_variables {
            let mut params = a.activity.model_params();
            if params.values.contains_key("t0") {
                params.values.insert("t0".into(), t);
            }
            if params.values.contains_key("z0") {
                let current = match variable.as_str() {
                    "x" => actor.x,
                    "y" => actor.y,
                    "v" => actor.v,
                    "a" => actor.a,
                    _ => 0.0,
                };
                params.values.insert("z0".into(), current);
            }
            per_var.insert(variable.clone(), params);
        }
        per_var
    }

    /// The assignment actively governing `variable` of `actor`, if any; the
    /// most recently activated one wins.
    fn governing(&self, actor: &str, variable: &str) -> Option<&Assignment> {
        self.assignments
            .iter()
            .filter(|a| {
                a.actor_uid == actor
                    && !a.ended
                    && a.anchored.is_some()
                    && a.activity.category.state_variables.iter().any(|v| v == variable)
            })
            .max_by_key(|a| a.activation_seq)
    }

    /// Integrates every policy-driven actor over one grid step.
    fn integrate_policies(
        &mut self,
        t_start: f64,
        t_end: f64,
    ) -> Result<BTreeMap<String, PolicySegment>, SimError> {
        let mut segments = BTreeMap::new();
        let dt = t_end - t_start;
        let world = self.world.clone();
        for (uid, policy) in self.policies.iter_mut() {
            let actor = self
                .scenario
                .actor(uid)
                .ok_or_else(|| SimError::InvalidConfig(format!("policy for unknown actor `{uid}`")))?;
            let input = PolicyInput {
                world: &world,
                actor_uid: uid,
                desired: actor.desired_state.as_ref(),
                dt,
            };
            let command = policy.command(&input);
            let start = world.actors[uid];
            let v = start.v + command.acceleration * dt;
            let end = ActorState {
                x: start.x + v * dt,
                y: start.y + command.lateral_rate * dt,
                v,
                a: command.acceleration,
            };
            segments.insert(uid.clone(), PolicySegment { start, end, t_start, t_end });
        }
        Ok(segments)
    }

    /// World state at `t` within the current grid step, given the current
    /// world (valid at `self.world.t ≤ t`) and the policy segments.
    fn state_between(
        &self,
        t: f64,
        segments: &BTreeMap<String, PolicySegment>,
    ) -> Result<WorldState, SimError> {
        let t_cur = self.world.t;
        let mut next = self.world.clone();
        next.t = t;
        for (uid, state) in next.actors.iter_mut() {
            if let Some(segment) = segments.get(uid) {
                let span = segment.t_end - segment.t_start;
                let alpha = if span > 0.0 { (t - segment.t_start) / span } else { 1.0 };
                state.x = segment.start.x + alpha * (segment.end.x - segment.start.x);
                state.y = segment.start.y + alpha * (segment.end.y - segment.start.y);
                state.v = segment.end.v;
                state.a = segment.end.a;
                continue;
            }

            let current = self.world.actors[uid];
            let models = &self.config.models;

            // Speed: closed form while governed, otherwise hold.
            let v_assignment = self.governing(uid, "v");
            if let Some(a) = v_assignment {
                let params = &a.anchored.as_ref().unwrap()["v"];
                state.v = models.state_with(params, t, DomainPolicy::Clamp)?;
                state.a = models.derivative_with(params, t, DomainPolicy::Clamp)?;
            }

            // Longitudinal position: explicit activity, else the exact
            // integral of the (governed or held) speed.
            if let Some(a) = self.governing(uid, "x") {
                let params = &a.anchored.as_ref().unwrap()["x"];
                state.x = models.state_with(params, t, DomainPolicy::Clamp)?;
            } else if let Some(a) = v_assignment {
                let params = &a.anchored.as_ref().unwrap()["v"];
                state.x = current.x + clamped_displacement(models, params, t_cur, t)?;
            } else {
                state.x = current.x + current.v * (t - t_cur);
            }

            // Lateral position: explicit activity, else hold.
            if let Some(a) = self.governing(uid, "y") {
                let params = &a.anchored.as_ref().unwrap()["y"];
                state.y = models.state_with(params, t, DomainPolicy::Clamp)?;
            }

            // Acceleration as a directly governed variable (rare).
            if let Some(a) = self.governing(uid, "a") {
                let params = &a.anchored.as_ref().unwrap()["a"];
                state.a = models.state_with(params, t, DomainPolicy::Clamp)?;
            }
        }
        Ok(next)
    }

    /// Earliest-firing unfired events in `(t_cur, t_next]`: localizes every
    /// candidate by bisection and groups those within one tolerance bracket
    /// of the earliest, in document order.
    fn next_event_batch(
        &self,
        t_cur: f64,
        t_next: f64,
        segments: &BTreeMap<String, PolicySegment>,
    ) -> Result<Option<(f64, Vec<usize>)>, SimError> {
        if t_next <= t_cur {
            return Ok(None);
        }
        let tolerance = self.config.event_tolerance;
        let mut candidates: Vec<(usize, f64)> = Vec::new();
        for (idx, event) in self.events.iter().enumerate() {
            if event.fired_at.is_some() {
                continue;
            }
            let true_at_next = self.eval_condition(&event.condition, t_next, segments)?;
            if !true_at_next {
                continue;
            }
            // Bisection: unfired events are false at t_cur by construction
            // (anything true there fired in the preceding cascade).
            let mut lo = t_cur;
            let mut hi = t_next;
            while hi - lo > tolerance {
                let mid = lo + (hi - lo) / 2.0;
                if self.eval_condition(&event.condition, mid, segments)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            candidates.push((idx, hi));
        }
        let Some(&(_, t_first)) = candidates
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("fire times are finite"))
        else {
            return Ok(None);
        };
        let batch: Vec<usize> = candidates
            .iter()
            .filter(|(_, t)| *t - t_first <= tolerance)
            .map(|(idx, _)| *idx)
            .collect();
        Ok(Some((t_first, batch)))
    }

    fn eval_condition(
        &self,
        condition: &ConditionExpr,
        t: f64,
        segments: &BTreeMap<String, PolicySegment>,
    ) -> Result<bool, SimError> {
        let world = self.state_between(t, segments)?;
        let boundary_time = |activity: &str, boundary: crate::condition::ActivityBoundary| {
            let (start_idx, end_idx) = self.boundaries.get(activity)?.to_owned();
            match boundary {
                crate::condition::ActivityBoundary::Start => self.events[start_idx].fired_at,
                crate::condition::ActivityBoundary::End => self.events[end_idx].fired_at,
            }
        };
        let env = WorldEnv {
            world: &world,
            shapes: Some(&self.shapes),
            boundary_time: Some(&boundary_time),
        };
        Ok(condition.evaluate(&env)?)
    }

    /// Fires events that are true at the current instant, applying switches
    /// until a fixpoint: `linked(...)` events resolve in the same instant as
    /// the boundary that satisfies them.
    fn fire_instant(&mut self, t: f64) -> Result<(), SimError> {
        loop {
            let mut newly_fired = Vec::new();
            let empty = BTreeMap::new();
            for (idx, event) in self.events.iter().enumerate() {
                if event.fired_at.is_some() {
                    continue;
                }
                if self.eval_condition(&event.condition, t, &empty)? {
                    newly_fired.push(idx);
                }
            }
            if newly_fired.is_empty() {
                return Ok(());
            }
            for idx in newly_fired {
                self.fire_event(idx, t);
            }
            self.apply_switches(t);
            self.push_sample();
        }
    }

    /// Same as [`Self::fire_instant`] but for an instant inside a grid step,
    /// where the fired batch may enable further events at the same time.
    fn cascade(&mut self, t: f64) -> Result<(), SimError> {
        let empty = BTreeMap::new();
        loop {
            let mut newly_fired = Vec::new();
            for (idx, event) in self.events.iter().enumerate() {
                if event.fired_at.is_some() {
                    continue;
                }
                if self.eval_condition(&event.condition, t, &empty)? {
                    newly_fired.push(idx);
                }
            }
            if newly_fired.is_empty() {
                return Ok(());
            }
            for idx in newly_fired {
                self.fire_event(idx, t);
            }
            self.apply_switches(t);
        }
    }

    fn push_sample(&mut self) {
        if let Some(last) = self.samples.last_mut() {
            if last.t == self.world.t {
                *last = self.world.clone();
                return;
            }
        }
        self.samples.push(self.world.clone());
    }

    fn finalize(mut self, ended: bool) -> Result<Trace, SimError> {
        let start_fire = self
            .events
            .iter()
            .find(|e| e.uid == self.start_event_uid)
            .and_then(|e| e.fired_at);
        let Some(start_fire) = start_fire else {
            return Err(SimError::StartNeverFired);
        };
        self.samples.retain(|s| s.t >= start_fire);

        let outcome = if ended {
            let empty = BTreeMap::new();
            let mut labels = Vec::new();
            let end_condition = self.scenario.end_event.condition.clone();
            for disjunct in end_condition.disjuncts() {
                if self.eval_condition(disjunct, self.world.t, &empty)? {
                    labels.push(classify_disjunct(disjunct, self.scenario));
                }
            }
            labels
        } else {
            vec!["timeout".to_owned()]
        };

        Ok(Trace {
            actor_order: self
                .scenario
                .actors
                .iter()
                .map(|a| a.header.uid.as_str().to_owned())
                .collect(),
            samples: self.samples,
            events: self.fires,
            outcome,
        })
    }
}

/// Exact displacement of a possibly domain-bounded model over `[t_a, t_b]`:
/// beyond the model's upper domain bound the state holds its final value.
fn clamped_displacement(
    models: &crate::dynamics::ModelRegistry,
    params: &crate::dynamics::ModelParams,
    t_a: f64,
    t_b: f64,
) -> Result<f64, SimError> {
    let def = models.get(&params.kind)?;
    let (lo, hi) = def.domain(params);
    let clamp = |t: f64| {
        let t = lo.map_or(t, |lo| t.max(lo));
        hi.map_or(t, |hi| t.min(hi))
    };
    let (ca, cb) = (clamp(t_a), clamp(t_b));
    let mut total = def.displacement(params, ca, cb)?;
    // Tail beyond the domain: hold the boundary value.
    if let Some(hi) = hi {
        if t_b > hi {
            let boundary = def.state(params, hi, DomainPolicy::Clamp)?;
            total += boundary * (t_b - hi.max(t_a));
        }
    }
    if let Some(lo) = lo {
        if t_a < lo {
            let boundary = def.state(params, lo, DomainPolicy::Clamp)?;
            total += boundary * (lo.min(t_b) - t_a);
        }
    }
    Ok(total)
}

/// Human-readable label for one end-event disjunct, used in the outcome:
/// collision predicates, pure time limits, reaching the goal position, and
/// lateral-deviation bounds get stable names; anything else is reported as
/// its canonical condition text.
fn classify_disjunct(disjunct: &ConditionExpr, scenario: &Scenario) -> String {
    fn collides(e: &ConditionExpr) -> bool {
        match e {
            ConditionExpr::Collision { .. } => true,
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => collides(l) || collides(r),
            ConditionExpr::Not(inner) => collides(inner),
            _ => false,
        }
    }
    if collides(disjunct) {
        return "collision".to_owned();
    }

    let vars = disjunct.free_variables();
    if !vars.is_empty() && vars.iter().all(|v| v == "t") {
        return "timeout".to_owned();
    }

    if let ConditionExpr::Compare { op, lhs, rhs } = disjunct {
        if let NumExpr::Var(name) = lhs {
            if let Some((base, actor_uid)) = crate::model::state_schema::split(name) {
                if base == "x" && matches!(op, CmpOp::Ge | CmpOp::Gt | CmpOp::Le | CmpOp::Lt) {
                    if let Some(actor) = scenario.actor(actor_uid) {
                        if let Some(desired_x) =
                            actor.desired_state.as_ref().and_then(|d| d.get("x"))
                        {
                            let threshold = crate::condition::evaluate_const(rhs);
                            if let Some(threshold) = threshold {
                                if (threshold - desired_x).abs() <= 1e-9 {
                                    return "destination".to_owned();
                                }
                            }
                        }
                    }
                }
                if base == "y" {
                    return "deviation".to_owned();
                }
            }
        }
    }

    disjunct.canonical()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::ConditionExpr;
    use crate::sim::{ActorState, RectShape};

    fn constant_speed_world(t: f64) -> WorldState {
        // Ego driving at 8 m/s from x = -40.
        let mut w = WorldState::empty(t);
        w.actors.insert(
            "ego".into(),
            ActorState { x: -40.0 + 8.0 * t, y: 0.0, v: 8.0, a: 0.0 },
        );
        w
    }

    #[test]
    fn locate_event_finds_the_trigger_distance() {
        let condition = ConditionExpr::parse("x_ego / v_ego >= -2.5").unwrap();
        let t = locate_event(&condition, constant_speed_world, (0.0, 5.0), 1e-6, &BTreeMap::new())
            .unwrap();
        assert!((t - 2.5).abs() <= 1e-6);
        // The ego is 20 m before the crossing center at the trigger.
        let x = constant_speed_world(t).actors["ego"].x;
        assert!((x + 20.0).abs() <= 1e-3);
    }

    #[test]
    fn locate_event_on_pure_time_threshold() {
        let condition = ConditionExpr::parse("t >= 5").unwrap();
        let t = locate_event(&condition, constant_speed_world, (0.0, 10.0), 1e-6, &BTreeMap::new())
            .unwrap();
        assert!((t - 5.0).abs() <= 1e-6);
    }

    #[test]
    fn locate_event_requires_a_sign_change() {
        let condition = ConditionExpr::parse("t >= 0").unwrap();
        assert!(matches!(
            locate_event(&condition, constant_speed_world, (1.0, 2.0), 1e-6, &BTreeMap::new()),
            Err(SimError::NoSignChange)
        ));
    }

    #[test]
    fn locate_event_matches_dense_scan_on_compound_condition() {
        // Pedestrian walking up from -6 while the ego approaches.
        let state = |t: f64| {
            let mut w = constant_speed_world(t);
            w.actors.insert(
                "ped".into(),
                ActorState { x: 0.0, y: -6.0 + 1.0 * t, v: 1.0, a: 0.0 },
            );
            w
        };
        let condition = ConditionExpr::parse("abs(x_ego / v_ego) <= 1 && y_ped < 0").unwrap();
        let located =
            locate_event(&condition, state, (0.0, 5.0), 1e-6, &BTreeMap::new()).unwrap();

        // Dense scan oracle at dt = 1e-5.
        let mut scan = None;
        let mut t = 0.0;
        while t <= 5.0 {
            let w = state(t);
            let env = WorldEnv { world: &w, shapes: None, boundary_time: None };
            if condition.evaluate(&env).unwrap() {
                scan = Some(t);
                break;
            }
            t += 1e-5;
        }
        let scan = scan.expect("condition must become true in the window");
        assert!((located - scan).abs() <= 2e-5, "located {located} vs scan {scan}");
    }

    #[test]
    fn collision_conditions_work_inside_locate_event() {
        let mut shapes = BTreeMap::new();
        shapes.insert("ego".to_owned(), RectShape::new(4.5, 1.8));
        shapes.insert("ped".to_owned(), RectShape::new(0.5, 0.5));
        let state = |t: f64| {
            let mut w = constant_speed_world(t);
            w.actors.insert("ped".into(), ActorState { x: 0.0, y: 0.0, v: 0.0, a: 0.0 });
            w
        };
        let condition = ConditionExpr::parse("collision(ego, ped)").unwrap();
        // Overlap starts when ego front reaches -2.5 (x = -2.5 + ... half
        // lengths 2.25 + 0.25), i.e. x_ego = -2.5 at t = 37.5 / 8.
        let t = locate_event(&condition, state, (0.0, 6.0), 1e-6, &shapes).unwrap();
        assert!((t - 37.5 / 8.0).abs() <= 1e-5);
    }
}
