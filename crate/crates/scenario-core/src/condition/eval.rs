//! Condition evaluation.
//!
//! Evaluation is eager on both operands of every boolean operator, so a
//! guarded division (or an unbound variable) surfaces deterministically no
//! matter where it sits in the tree, rather than being masked by
//! short-circuiting.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{ActivityBoundary, ArithOp, CmpOp, ConditionExpr, NumExpr, EQ_TOLERANCE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division guard tripped: |{divisor}| below threshold {threshold}")]
    DivisionGuard { divisor: f64, threshold: f64 },
    #[error("`{0}(...)` is not supported by this evaluation context")]
    UnsupportedPredicate(&'static str),
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// Value source for evaluation: variable bindings plus the collision and
/// linked-activity oracles. The default oracles reject, which suits plain
/// variable environments; the simulator overrides them.
pub trait EvalContext {
    fn value(&self, name: &str) -> Option<f64>;

    fn collision(&self, _first: &str, _second: &str) -> Result<bool, EvalError> {
        Err(EvalError::UnsupportedPredicate("collision"))
    }

    fn linked(&self, _activity: &str, _boundary: ActivityBoundary) -> Result<bool, EvalError> {
        Err(EvalError::UnsupportedPredicate("linked"))
    }
}

/// Plain map-backed environment.
#[derive(Debug, Clone, Default)]
pub struct VarMap(pub BTreeMap<String, f64>);

impl VarMap {
    pub fn new(entries: impl IntoIterator<Item = (impl Into<String>, f64)>) -> Self {
        Self(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl EvalContext for VarMap {
    fn value(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Folds a numeric expression with no free variables to its value; `None`
/// if it references variables or fails a guard.
pub fn evaluate_const(expr: &NumExpr) -> Option<f64> {
    eval_num(expr, &VarMap::default()).ok()
}

pub fn evaluate(expr: &ConditionExpr, env: &dyn EvalContext) -> Result<bool, EvalError> {
    match expr {
        ConditionExpr::Compare { op, lhs, rhs } => {
            let l = eval_num(lhs, env)?;
            let r = eval_num(rhs, env)?;
            Ok(match op {
                CmpOp::Lt => l < r,
                CmpOp::Le => l <= r,
                CmpOp::Gt => l > r,
                CmpOp::Ge => l >= r,
                CmpOp::Eq => (l - r).abs() <= EQ_TOLERANCE,
            })
        }
        ConditionExpr::And(l, r) => {
            let lv = evaluate(l, env)?;
            let rv = evaluate(r, env)?;
            Ok(lv && rv)
        }
        ConditionExpr::Or(l, r) => {
            let lv = evaluate(l, env)?;
            let rv = evaluate(r, env)?;
            Ok(lv || rv)
        }
        ConditionExpr::Not(inner) => Ok(!evaluate(inner, env)?),
        ConditionExpr::Collision { first, second } => env.collision(first, second),
        ConditionExpr::Linked { activity, boundary } => env.linked(activity, *boundary),
    }
}

fn eval_num(expr: &NumExpr, env: &dyn EvalContext) -> Result<f64, EvalError> {
    let value = match expr {
        NumExpr::Literal { value, .. } => *value,
        NumExpr::Var(name) => env
            .value(name)
            .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
        NumExpr::Binary { op, lhs, rhs, guard } => {
            let l = eval_num(lhs, env)?;
            let r = eval_num(rhs, env)?;
            match op {
                ArithOp::Add => l + r,
                ArithOp::Sub => l - r,
                ArithOp::Mul => l * r,
                ArithOp::Div => {
                    if r.abs() < *guard {
                        return Err(EvalError::DivisionGuard { divisor: r, threshold: *guard });
                    }
                    l / r
                }
            }
        }
        NumExpr::Abs(inner) => eval_num(inner, env)?.abs(),
    };
    if !value.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn trigger_window_evaluates_true() {
        let e = parse("x_ego / v_ego >= -2.5 && x_ego / v_ego <= 0").unwrap();
        let env = VarMap::new([("x_ego", -20.0), ("v_ego", 8.0)]);
        assert!(evaluate(&e, &env).unwrap());
    }

    #[test]
    fn timeout_false_at_start() {
        let e = parse("t > 100").unwrap();
        assert!(!evaluate(&e, &VarMap::new([("t", 0.0)])).unwrap());
    }

    #[test]
    fn conjunction_fails_outside_window() {
        let e = parse("abs(x_ego / v_ego) <= 1 && y_ped < 0").unwrap();
        let env = VarMap::new([("x_ego", -16.0), ("v_ego", 8.0), ("y_ped", -1.0)]);
        assert!(!evaluate(&e, &env).unwrap());
    }

    #[test]
    fn unbound_variables_error() {
        let e = parse("q_zzz > 0").unwrap();
        let err = evaluate(&e, &VarMap::default()).unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("q_zzz".into()));
    }

    #[test]
    fn division_guard_trips_on_stationary_divisor() {
        let e = parse("x_ego / v_ego >= -2.5").unwrap();
        let env = VarMap::new([("x_ego", -20.0), ("v_ego", 0.0)]);
        assert!(matches!(
            evaluate(&e, &env),
            Err(EvalError::DivisionGuard { .. })
        ));
    }

    #[test]
    fn division_guard_surfaces_despite_true_left_disjunct() {
        let e = parse("t >= 0 || x_ego / v_ego >= -2.5").unwrap();
        let env = VarMap::new([("t", 1.0), ("x_ego", -20.0), ("v_ego", 0.0)]);
        assert!(matches!(
            evaluate(&e, &env),
            Err(EvalError::DivisionGuard { .. })
        ));
    }

    #[test]
    fn equality_carries_absolute_tolerance() {
        let e = parse("x == 1").unwrap();
        assert!(evaluate(&e, &VarMap::new([("x", 1.0 + 5e-10)])).unwrap());
        assert!(!evaluate(&e, &VarMap::new([("x", 1.0 + 5e-9)])).unwrap());
    }

    #[test]
    fn collision_unsupported_in_plain_environments() {
        let e = parse("collision(ego, ped)").unwrap();
        assert_eq!(
            evaluate(&e, &VarMap::default()),
            Err(EvalError::UnsupportedPredicate("collision"))
        );
    }

    #[test]
    fn unit_suffixes_do_not_change_values() {
        let with_unit = parse("x_ego >= 20 m").unwrap();
        let without = parse("x_ego >= 20").unwrap();
        let env = VarMap::new([("x_ego", 25.0)]);
        assert_eq!(evaluate(&with_unit, &env), evaluate(&without, &env));
    }
}
