//! Condition expression DSL for event triggers.
//!
//! Conditions are boolean expressions over scalar state variables, e.g.
//! `x_ego >= 20 || collision(ego, ped) || t > 100`. The grammar is documented
//! in `docs/grammar.ebnf` and is the compatibility contract for scenario
//! files. Expression trees are immutable and well-typed by construction:
//! comparisons take numeric operands, boolean operators take boolean
//! operands, and the root is always boolean.

mod eval;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use eval::{evaluate, evaluate_const, EvalContext, EvalError, VarMap};
pub use parser::parse;

/// Divisors smaller than this in magnitude raise [`EvalError::DivisionGuard`]
/// instead of producing non-finite values.
pub const DIVISION_GUARD_EPSILON: f64 = 1e-9;

/// Absolute tolerance applied by the `==` comparison.
pub const EQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        position: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("type error at byte {position}: {message}")]
    Type { position: usize, message: String },
    #[error("invalid number at byte {position}")]
    InvalidNumber { position: usize },
    #[error("invalid unit suffix `{text}` at byte {position}")]
    InvalidUnit { position: usize, text: String },
    #[error("unexpected character `{ch}` at byte {position}")]
    UnexpectedChar { position: usize, ch: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    /// Equality within [`EQ_TOLERANCE`].
    Eq,
}

/// Which boundary of an activity a `linked(...)` condition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivityBoundary {
    Start,
    End,
}

impl fmt::Display for ActivityBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivityBoundary::Start => "start",
            ActivityBoundary::End => "end",
        })
    }
}

/// Numeric sub-expression.
#[derive(Debug, Clone, PartialEq)]
pub enum NumExpr {
    /// Literal with an optional unit suffix. The unit is checked for valid
    /// syntax at parse time and ignored during evaluation.
    Literal { value: f64, unit: Option<String> },
    Var(String),
    Binary {
        op: ArithOp,
        lhs: Box<NumExpr>,
        rhs: Box<NumExpr>,
        /// Divisor-guard threshold applied when `op` is [`ArithOp::Div`];
        /// ignored otherwise. Parsed trees carry [`DIVISION_GUARD_EPSILON`].
        guard: f64,
    },
    Abs(Box<NumExpr>),
}

impl NumExpr {
    pub fn literal(value: f64) -> Self {
        NumExpr::Literal { value, unit: None }
    }

    pub fn var(name: impl Into<String>) -> Self {
        NumExpr::Var(name.into())
    }

    pub fn binary(op: ArithOp, lhs: NumExpr, rhs: NumExpr) -> Self {
        NumExpr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            guard: DIVISION_GUARD_EPSILON,
        }
    }
}

/// Boolean condition tree; the type of every event condition.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionExpr {
    Compare { op: CmpOp, lhs: NumExpr, rhs: NumExpr },
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
    /// True while the named actors' collision shapes overlap.
    Collision { first: String, second: String },
    /// True from the instant the referenced activity boundary is reached.
    /// This is the serializable form of a mode-transition event.
    Linked { activity: String, boundary: ActivityBoundary },
}

impl ConditionExpr {
    pub fn compare(op: CmpOp, lhs: NumExpr, rhs: NumExpr) -> Self {
        ConditionExpr::Compare { op, lhs, rhs }
    }

    pub fn and(lhs: ConditionExpr, rhs: ConditionExpr) -> Self {
        ConditionExpr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: ConditionExpr, rhs: ConditionExpr) -> Self {
        ConditionExpr::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn not(inner: ConditionExpr) -> Self {
        ConditionExpr::Not(Box::new(inner))
    }

    /// Parses the concrete syntax into an expression tree.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parser::parse(text)
    }

    /// Canonical text form; `parse(canonical(e))` is structurally equal to `e`.
    pub fn canonical(&self) -> String {
        printer::print(self)
    }

    /// Free state-variable references, excluding actor uids inside
    /// `collision(...)` and activity uids inside `linked(...)`.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ConditionExpr::Compare { lhs, rhs, .. } => {
                collect_num_vars(lhs, out);
                collect_num_vars(rhs, out);
            }
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            ConditionExpr::Not(inner) => inner.collect_vars(out),
            ConditionExpr::Collision { .. } | ConditionExpr::Linked { .. } => {}
        }
    }

    /// Actor uids referenced by `collision(...)` predicates.
    pub fn collision_actors(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let ConditionExpr::Collision { first, second } = e {
                out.insert(first.clone());
                out.insert(second.clone());
            }
        });
        out
    }

    /// Activity uids referenced by `linked(...)` predicates.
    pub fn linked_activities(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let ConditionExpr::Linked { activity, .. } = e {
                out.insert(activity.clone());
            }
        });
        out
    }

    /// Top-level disjuncts, left to right: the operands of the outermost
    /// `||` chain, or the whole expression if the root is not an `||`.
    pub fn disjuncts(&self) -> Vec<&ConditionExpr> {
        let mut out = Vec::new();
        fn rec<'a>(e: &'a ConditionExpr, out: &mut Vec<&'a ConditionExpr>) {
            match e {
                ConditionExpr::Or(l, r) => {
                    rec(l, out);
                    rec(r, out);
                }
                other => out.push(other),
            }
        }
        rec(self, &mut out);
        out
    }

    fn walk(&self, f: &mut impl FnMut(&ConditionExpr)) {
        f(self);
        match self {
            ConditionExpr::And(l, r) | ConditionExpr::Or(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ConditionExpr::Not(inner) => inner.walk(f),
            _ => {}
        }
    }

    /// Evaluates the condition against an environment.
    pub fn evaluate(&self, env: &dyn EvalContext) -> Result<bool, EvalError> {
        eval::evaluate(self, env)
    }
}

fn collect_num_vars(e: &NumExpr, out: &mut BTreeSet<String>) {
    match e {
        NumExpr::Literal { .. } => {}
        NumExpr::Var(name) => {
            out.insert(name.clone());
        }
        NumExpr::Binary { lhs, rhs, .. } => {
            collect_num_vars(lhs, out);
            collect_num_vars(rhs, out);
        }
        NumExpr::Abs(inner) => collect_num_vars(inner, out),
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for ConditionExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

// Conditions serialize as their canonical text, which keeps scenario files
// human-editable and diffs small.
impl Serialize for ConditionExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for ConditionExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        ConditionExpr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_variables_exclude_predicate_arguments() {
        let e = ConditionExpr::parse(
            "x_ego >= 20 || collision(ego, ped) || y_ego <= -2 || y_ego >= 1 || t > 100",
        )
        .unwrap();
        let vars: Vec<_> = e.free_variables().into_iter().collect();
        assert_eq!(vars, ["t", "x_ego", "y_ego"]);
        let actors: Vec<_> = e.collision_actors().into_iter().collect();
        assert_eq!(actors, ["ego", "ped"]);
    }

    #[test]
    fn free_variables_simple() {
        let e = ConditionExpr::parse("t >= 0").unwrap();
        assert_eq!(e.free_variables().into_iter().collect::<Vec<_>>(), ["t"]);

        let e = ConditionExpr::parse("abs(x_ego / v_ego) <= 1 && y_ped < 0").unwrap();
        assert_eq!(
            e.free_variables().into_iter().collect::<Vec<_>>(),
            ["v_ego", "x_ego", "y_ped"]
        );
    }

    #[test]
    fn disjuncts_flatten_the_or_chain() {
        let e = ConditionExpr::parse(
            "x_ego >= 20 || collision(ego, ped) || y_ego <= -2 || y_ego >= 1 || t > 100",
        )
        .unwrap();
        assert_eq!(e.disjuncts().len(), 5);

        let single = ConditionExpr::parse("t >= 0").unwrap();
        assert_eq!(single.disjuncts().len(), 1);
    }

    #[test]
    fn serde_round_trips_through_canonical_text() {
        let e = ConditionExpr::parse("abs(x_ego / v_ego) <= 1 && y_ped < 0").unwrap();
        let json = serde_json::to_string(&e).unwrap();
        let back: ConditionExpr = serde_json::from_str(&json).unwrap();
        assert_eq!(e, back);
    }
}
