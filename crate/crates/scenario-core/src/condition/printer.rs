//! Canonical text rendering for condition trees.
//!
//! The output re-parses to a structurally identical tree: parentheses are
//! inserted exactly where operator precedence or left-associativity would
//! otherwise reshape the tree.

use super::{ArithOp, CmpOp, ConditionExpr, NumExpr};

pub fn print(expr: &ConditionExpr) -> String {
    let mut out = String::new();
    print_bool(expr, &mut out);
    out
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_BOOL_ATOM: u8 = 4;

fn bool_prec(e: &ConditionExpr) -> u8 {
    match e {
        ConditionExpr::Or(..) => PREC_OR,
        ConditionExpr::And(..) => PREC_AND,
        ConditionExpr::Not(..) => PREC_NOT,
        ConditionExpr::Compare { .. }
        | ConditionExpr::Collision { .. }
        | ConditionExpr::Linked { .. } => PREC_BOOL_ATOM,
    }
}

fn print_bool(e: &ConditionExpr, out: &mut String) {
    match e {
        ConditionExpr::Or(l, r) => {
            print_bool_child(l, PREC_OR, false, out);
            out.push_str(" || ");
            print_bool_child(r, PREC_OR, true, out);
        }
        ConditionExpr::And(l, r) => {
            print_bool_child(l, PREC_AND, false, out);
            out.push_str(" && ");
            print_bool_child(r, PREC_AND, true, out);
        }
        ConditionExpr::Not(inner) => {
            out.push('!');
            // `!` takes a boolean atom; comparisons and nested booleans need
            // an explicit group, collision/linked/! atoms do not.
            if matches!(
                **inner,
                ConditionExpr::Collision { .. } | ConditionExpr::Linked { .. } | ConditionExpr::Not(..)
            ) {
                print_bool(inner, out);
            } else {
                out.push('(');
                print_bool(inner, out);
                out.push(')');
            }
        }
        ConditionExpr::Compare { op, lhs, rhs } => {
            print_num_child(lhs, 0, false, out);
            out.push_str(match op {
                CmpOp::Lt => " < ",
                CmpOp::Le => " <= ",
                CmpOp::Gt => " > ",
                CmpOp::Ge => " >= ",
                CmpOp::Eq => " == ",
            });
            print_num_child(rhs, 0, false, out);
        }
        ConditionExpr::Collision { first, second } => {
            out.push_str("collision(");
            out.push_str(first);
            out.push_str(", ");
            out.push_str(second);
            out.push(')');
        }
        ConditionExpr::Linked { activity, boundary } => {
            out.push_str("linked(");
            out.push_str(activity);
            out.push_str(", ");
            out.push_str(&boundary.to_string());
            out.push(')');
        }
    }
}

fn print_bool_child(e: &ConditionExpr, parent: u8, is_right: bool, out: &mut String) {
    let prec = bool_prec(e);
    if prec < parent || (prec == parent && is_right) {
        out.push('(');
        print_bool(e, out);
        out.push(')');
    } else {
        print_bool(e, out);
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_NUM_ATOM: u8 = 3;

fn num_prec(e: &NumExpr) -> u8 {
    match e {
        NumExpr::Binary { op: ArithOp::Add | ArithOp::Sub, .. } => PREC_SUM,
        NumExpr::Binary { op: ArithOp::Mul | ArithOp::Div, .. } => PREC_PRODUCT,
        NumExpr::Literal { .. } | NumExpr::Var(..) | NumExpr::Abs(..) => PREC_NUM_ATOM,
    }
}

fn print_num(e: &NumExpr, out: &mut String) {
    match e {
        NumExpr::Literal { value, unit } => {
            out.push_str(&value.to_string());
            if let Some(unit) = unit {
                out.push(' ');
                out.push_str(unit);
            }
        }
        NumExpr::Var(name) => out.push_str(name),
        NumExpr::Binary { op, lhs, rhs, .. } => {
            let prec = num_prec(e);
            print_num_child(lhs, prec, false, out);
            out.push_str(match op {
                ArithOp::Add => " + ",
                ArithOp::Sub => " - ",
                ArithOp::Mul => " * ",
                ArithOp::Div => " / ",
            });
            print_num_child(rhs, prec, true, out);
        }
        NumExpr::Abs(inner) => {
            out.push_str("abs(");
            print_num(inner, out);
            out.push(')');
        }
    }
}

fn print_num_child(e: &NumExpr, parent: u8, is_right: bool, out: &mut String) {
    let prec = num_prec(e);
    if prec < parent || (prec == parent && is_right) {
        out.push('(');
        print_num(e, out);
        out.push(')');
    } else {
        print_num(e, out);
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn round_trip(text: &str) -> String {
        let e = parse(text).unwrap();
        let printed = print(&e);
        assert_eq!(parse(&printed).unwrap(), e, "reparse of `{printed}` changed the tree");
        printed
    }

    #[test]
    fn paper_conditions_round_trip() {
        round_trip("x_ego >= 20 || collision(ego, ped) || y_ego <= -2 || y_ego >= 1 || t > 100");
        round_trip("abs(x_ego / v_ego) <= 1 && y_ped < 0");
        round_trip("t >= 0");
    }

    #[test]
    fn redundant_parentheses_are_normalized() {
        assert_eq!(round_trip("(((t>100)))"), "t > 100");
    }

    #[test]
    fn and_binds_tighter_than_or_in_output() {
        assert_eq!(round_trip("a < 1 || b < 2 && c < 3"), "a < 1 || b < 2 && c < 3");
        assert_eq!(round_trip("(a < 1 || b < 2) && c < 3"), "(a < 1 || b < 2) && c < 3");
    }

    #[test]
    fn right_nested_operators_keep_their_shape() {
        use super::super::{CmpOp, ConditionExpr, NumExpr};
        let cmp = |v: &str| {
            ConditionExpr::compare(CmpOp::Lt, NumExpr::var(v), NumExpr::literal(1.0))
        };
        let right_nested = ConditionExpr::or(cmp("a"), ConditionExpr::or(cmp("b"), cmp("c")));
        let printed = print(&right_nested);
        assert_eq!(printed, "a < 1 || (b < 1 || c < 1)");
        assert_eq!(parse(&printed).unwrap(), right_nested);
    }

    #[test]
    fn subtraction_is_not_reassociated() {
        let e = parse("x - (y - z) > 0").unwrap();
        assert_eq!(print(&e), "x - (y - z) > 0");
        assert_eq!(round_trip("x - y - z > 0"), "x - y - z > 0");
    }

    #[test]
    fn units_and_negative_literals_survive() {
        assert_eq!(round_trip("x_ego >= 20 m"), "x_ego >= 20 m");
        assert_eq!(round_trip("y_ego <= -2"), "y_ego <= -2");
        assert_eq!(round_trip("x - -2 > 0"), "x - -2 > 0");
    }

    #[test]
    fn not_is_grouped_for_reparse() {
        assert_eq!(round_trip("!(t > 100)"), "!(t > 100)");
        assert_eq!(round_trip("!collision(a, b)"), "!collision(a, b)");
        assert_eq!(round_trip("!(a < 1 && b < 2)"), "!(a < 1 && b < 2)");
    }
}
