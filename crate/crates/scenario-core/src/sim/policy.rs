//! Goal-driven actor behavior.
//!
//! Actors whose scenario gives a desired state instead of activities are
//! driven by an [`EgoPolicy`]: a deterministic map from the current world
//! state to a commanded acceleration (and optionally a lateral rate). Two
//! built-in policies cover the common test setups without writing code.

use std::collections::BTreeMap;

use crate::model::StateVector;

use super::WorldState;

/// Per-step policy input. `dt` is the integration step, available so a
/// policy can land exactly on a target speed; policies must be
/// deterministic functions of this input.
pub struct PolicyInput<'a> {
    pub world: &'a WorldState,
    pub actor_uid: &'a str,
    pub desired: Option<&'a StateVector>,
    pub dt: f64,
}

/// Commanded acceleration (m/s²) and lateral rate (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolicyCommand {
    pub acceleration: f64,
    pub lateral_rate: f64,
}

/// Deterministic goal-pursuit behavior for one actor. Policies own any
/// internal state per run.
pub trait EgoPolicy: Send {
    fn name(&self) -> &str;

    fn command(&mut self, input: &PolicyInput<'_>) -> PolicyCommand;
}

/// Holds the initial speed: zero commanded acceleration.
#[derive(Debug, Clone, Default)]
pub struct ConstantSpeed;

impl EgoPolicy for ConstantSpeed {
    fn name(&self) -> &str {
        "constant-speed"
    }

    fn command(&mut self, _input: &PolicyInput<'_>) -> PolicyCommand {
        PolicyCommand::default()
    }
}

/// Demonstration emergency-braking policy: brakes hard while another actor
/// is ahead within `trigger_gap` and laterally within `clear_margin`, then
/// accelerates back toward the desired speed once the hazard clears.
#[derive(Debug, Clone)]
pub struct DemoAeb {
    /// Braking deceleration magnitude, m/s².
    pub brake_decel: f64,
    /// Longitudinal gap that triggers braking, m.
    pub trigger_gap: f64,
    /// Acceleration used to regain the desired speed, m/s².
    pub accel: f64,
    /// Lateral distance below which another actor counts as a hazard, m.
    pub clear_margin: f64,
}

impl Default for DemoAeb {
    fn default() -> Self {
        Self { brake_decel: 6.0, trigger_gap: 10.0, accel: 2.0, clear_margin: 3.0 }
    }
}

impl DemoAeb {
    fn hazard_ahead(&self, input: &PolicyInput<'_>) -> bool {
        let me = &input.world.actors[input.actor_uid];
        input.world.actors.iter().any(|(uid, other)| {
            if uid == input.actor_uid {
                return false;
            }
            let gap = other.x - me.x;
            gap >= 0.0 && gap < self.trigger_gap && (other.y - me.y).abs() < self.clear_margin
        })
    }
}

impl EgoPolicy for DemoAeb {
    fn name(&self) -> &str {
        "demo-aeb"
    }

    fn command(&mut self, input: &PolicyInput<'_>) -> PolicyCommand {
        let me = &input.world.actors[input.actor_uid];
        let acceleration = if self.hazard_ahead(input) {
            // Brake to a stop without reversing.
            if me.v > 0.0 {
                (-me.v / input.dt).max(-self.brake_decel)
            } else {
                0.0
            }
        } else {
            // Regain the desired speed, landing on it exactly.
            let target = input.desired.and_then(|d| d.get("v")).unwrap_or(me.v);
            let gap = target - me.v;
            (gap / input.dt).clamp(-self.accel, self.accel)
        };
        PolicyCommand { acceleration, lateral_rate: 0.0 }
    }
}

/// Resolves a built-in policy by name, with `key=value` parameter overrides.
pub fn builtin_policy(name: &str, args: &BTreeMap<String, f64>) -> Option<Box<dyn EgoPolicy>> {
    match name {
        "constant-speed" => Some(Box::new(ConstantSpeed)),
        "demo-aeb" => {
            let mut policy = DemoAeb::default();
            if let Some(v) = args.get("brake_decel") {
                policy.brake_decel = *v;
            }
            if let Some(v) = args.get("trigger_gap") {
                policy.trigger_gap = *v;
            }
            if let Some(v) = args.get("accel") {
                policy.accel = *v;
            }
            if let Some(v) = args.get("clear_margin") {
                policy.clear_margin = *v;
            }
            Some(Box::new(policy))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ActorState;

    fn world(ego_x: f64, ego_v: f64, ped_y: f64) -> WorldState {
        let mut w = WorldState::empty(0.0);
        w.actors.insert("ego".into(), ActorState { x: ego_x, y: 0.0, v: ego_v, a: 0.0 });
        w.actors.insert("ped".into(), ActorState { x: 0.0, y: ped_y, v: 1.0, a: 0.0 });
        w
    }

    #[test]
    fn demo_aeb_brakes_on_hazard_and_resumes_after() {
        let mut policy = DemoAeb::default();
        let desired = StateVector::new([("v", crate::model::Quantity::bare(8.0))]);

        // Pedestrian near the lane, 8 m ahead: brake.
        let w = world(-8.0, 8.0, -1.0);
        let cmd = policy.command(&PolicyInput {
            world: &w,
            actor_uid: "ego",
            desired: Some(&desired),
            dt: 0.01,
        });
        assert_eq!(cmd.acceleration, -6.0);

        // Pedestrian clear of the margin: accelerate toward desired speed.
        let w = world(-8.0, 4.0, 5.0);
        let cmd = policy.command(&PolicyInput {
            world: &w,
            actor_uid: "ego",
            desired: Some(&desired),
            dt: 0.01,
        });
        assert_eq!(cmd.acceleration, 2.0);

        // At desired speed: hold.
        let w = world(-8.0, 8.0, 5.0);
        let cmd = policy.command(&PolicyInput {
            world: &w,
            actor_uid: "ego",
            desired: Some(&desired),
            dt: 0.01,
        });
        assert_eq!(cmd.acceleration, 0.0);
    }

    #[test]
    fn demo_aeb_brakes_gently_near_standstill() {
        let mut policy = DemoAeb::default();
        let w = world(-5.0, 0.03, -1.0);
        let cmd = policy.command(&PolicyInput { world: &w, actor_uid: "ego", desired: None, dt: 0.01 });
        // -v/dt ≈ -3 is gentler than the full braking decel and lands the
        // next Euler step on zero speed up to rounding.
        assert!((cmd.acceleration + 3.0).abs() < 1e-12);
        assert!((0.03 + cmd.acceleration * 0.01).abs() < 1e-15);
    }

    #[test]
    fn builtin_policy_lookup() {
        assert!(builtin_policy("constant-speed", &BTreeMap::new()).is_some());
        let args = [("trigger_gap".to_owned(), 15.0)].into_iter().collect();
        let policy = builtin_policy("demo-aeb", &args).unwrap();
        assert_eq!(policy.name(), "demo-aeb");
        assert!(builtin_policy("chauffeur", &BTreeMap::new()).is_none());
    }
}
