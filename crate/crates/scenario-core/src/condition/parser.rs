//! Recursive-descent parser for the condition DSL.
//!
//! The boolean/numeric split of the AST makes well-typedness structural; the
//! only ambiguity is `(`, which may open either a boolean group or a numeric
//! sub-expression. The parser first tries the boolean reading and backtracks
//! to the numeric one on failure.

use super::lexer::{tokenize, Token, TokenKind};
use super::{ActivityBoundary, ArithOp, CmpOp, ConditionExpr, NumExpr, ParseError};

/// Single-token SI unit symbols accepted as literal suffixes.
const UNIT_SYMBOLS: &[&str] = &[
    "m", "s", "kg", "g", "A", "K", "mol", "cd", "N", "Pa", "J", "W", "Hz", "rad", "sr",
    "deg", "km", "cm", "mm", "um", "ms", "us", "ns", "min", "h",
];

pub fn parse(text: &str) -> Result<ConditionExpr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_or()?;
    parser.expect_end()?;
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn syntax_error(&self, expected: Vec<&'static str>) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            position: tok.pos,
            expected,
            found: tok.kind.describe(),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.syntax_error(vec!["`&&`", "`||`", "end of input"]))
        }
    }

    fn parse_or(&mut self) -> Result<ConditionExpr, ParseError> {
        let mut expr = self.parse_and()?;
        while self.peek().kind == TokenKind::OrOr {
            self.advance();
            let rhs = self.parse_and()?;
            expr = ConditionExpr::or(expr, rhs);
        }
        Ok(expr)
    }

    fn parse_and(&mut self) -> Result<ConditionExpr, ParseError> {
        let mut expr = self.parse_not()?;
        while self.peek().kind == TokenKind::AndAnd {
            self.advance();
            let rhs = self.parse_not()?;
            expr = ConditionExpr::and(expr, rhs);
        }
        Ok(expr)
    }

    fn parse_not(&mut self) -> Result<ConditionExpr, ParseError> {
        if self.peek().kind == TokenKind::Bang {
            self.advance();
            let inner = self.parse_not()?;
            return Ok(ConditionExpr::not(inner));
        }
        self.parse_bool_atom()
    }

    fn parse_bool_atom(&mut self) -> Result<ConditionExpr, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) if name == "collision" && self.next_is_lparen() => {
                let expr = self.parse_collision()?;
                self.reject_numeric_continuation()?;
                Ok(expr)
            }
            TokenKind::Ident(name) if name == "linked" && self.next_is_lparen() => {
                let expr = self.parse_linked()?;
                self.reject_numeric_continuation()?;
                Ok(expr)
            }
            TokenKind::LParen => {
                // Try the boolean reading first, backtrack to a numeric
                // parenthesized comparison operand on failure.
                let saved = self.pos;
                self.advance();
                match self.parse_or() {
                    Ok(inner) if self.peek().kind == TokenKind::RParen => {
                        self.advance();
                        self.reject_numeric_continuation()?;
                        Ok(inner)
                    }
                    _ => {
                        self.pos = saved;
                        self.parse_comparison()
                    }
                }
            }
            _ => self.parse_comparison(),
        }
    }

    fn next_is_lparen(&self) -> bool {
        self.tokens
            .get(self.pos + 1)
            .is_some_and(|t| t.kind == TokenKind::LParen)
    }

    /// A boolean atom followed by an arithmetic or comparison operator is a
    /// type error, e.g. `collision(a, b) + 1`.
    fn reject_numeric_continuation(&self) -> Result<(), ParseError> {
        let tok = self.peek();
        let offending = matches!(
            tok.kind,
            TokenKind::Plus
                | TokenKind::Minus
                | TokenKind::Star
                | TokenKind::Slash
                | TokenKind::Lt
                | TokenKind::Le
                | TokenKind::Gt
                | TokenKind::Ge
                | TokenKind::EqEq
        );
        if offending {
            return Err(ParseError::Type {
                position: tok.pos,
                message: format!("boolean expression used as operand of {}", tok.kind.describe()),
            });
        }
        Ok(())
    }

    fn parse_collision(&mut self) -> Result<ConditionExpr, ParseError> {
        self.advance(); // collision
        self.expect(TokenKind::LParen, "`(`")?;
        let first = self.expect_ident("actor uid")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let second = self.expect_ident("actor uid")?;
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(ConditionExpr::Collision { first, second })
    }

    fn parse_linked(&mut self) -> Result<ConditionExpr, ParseError> {
        self.advance(); // linked
        self.expect(TokenKind::LParen, "`(`")?;
        let activity = self.expect_ident("activity uid")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let which = self.expect_ident("`start` or `end`")?;
        let boundary = match which.as_str() {
            "start" => ActivityBoundary::Start,
            "end" => ActivityBoundary::End,
            _ => return Err(self.syntax_error(vec!["`start`", "`end`"])),
        };
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(ConditionExpr::Linked { activity, boundary })
    }

    fn parse_comparison(&mut self) -> Result<ConditionExpr, ParseError> {
        let lhs = self.parse_sum()?;
        let op = match self.peek().kind {
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Le => CmpOp::Le,
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::Ge => CmpOp::Ge,
            TokenKind::EqEq => CmpOp::Eq,
            _ => return Err(self.syntax_error(vec!["`<`", "`<=`", "`>`", "`>=`", "`==`"])),
        };
        self.advance();
        let rhs = self.parse_sum()?;
        Ok(ConditionExpr::Compare { op, lhs, rhs })
    }

    fn parse_sum(&mut self) -> Result<NumExpr, ParseError> {
        let mut expr = self.parse_product()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => ArithOp::Add,
                TokenKind::Minus => ArithOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_product()?;
            expr = NumExpr::binary(op, expr, rhs);
        }
        Ok(expr)
    }

    fn parse_product(&mut self) -> Result<NumExpr, ParseError> {
        let mut expr = self.parse_unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => ArithOp::Mul,
                TokenKind::Slash => ArithOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_unary()?;
            expr = NumExpr::binary(op, expr, rhs);
        }
        Ok(expr)
    }

    fn parse_unary(&mut self) -> Result<NumExpr, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            self.advance();
            let operand = self.parse_unary()?;
            // Fold into the literal where possible; otherwise desugar to 0 - x.
            return Ok(match operand {
                NumExpr::Literal { value, unit } => NumExpr::Literal { value: -value, unit },
                other => NumExpr::binary(ArithOp::Sub, NumExpr::literal(0.0), other),
            });
        }
        self.parse_num_atom()
    }

    fn parse_num_atom(&mut self) -> Result<NumExpr, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Number(value) => {
                self.advance();
                let unit = self.parse_unit_suffix()?;
                Ok(NumExpr::Literal { value, unit })
            }
            TokenKind::Ident(name) if name == "abs" && self.next_is_lparen() => {
                self.advance();
                self.advance();
                let inner = self.parse_sum()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(NumExpr::Abs(Box::new(inner)))
            }
            TokenKind::Ident(name) => {
                self.advance();
                Ok(NumExpr::Var(name))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_sum()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.syntax_error(vec!["number", "identifier", "`abs(`", "`(`", "`-`"])),
        }
    }

    /// An identifier directly after a number can only be a unit suffix; it is
    /// validated against the SI symbol list and carried on the literal.
    fn parse_unit_suffix(&mut self) -> Result<Option<String>, ParseError> {
        if let TokenKind::Ident(name) = &self.peek().kind {
            let name = name.clone();
            if !UNIT_SYMBOLS.contains(&name.as_str()) {
                return Err(ParseError::InvalidUnit {
                    position: self.peek().pos,
                    text: name,
                });
            }
            self.advance();
            return Ok(Some(name));
        }
        Ok(None)
    }

    fn expect(&mut self, kind: TokenKind, describe: &'static str) -> Result<(), ParseError> {
        if self.peek().kind == kind {
            self.advance();
            Ok(())
        } else {
            Err(self.syntax_error(vec![describe]))
        }
    }

    fn expect_ident(&mut self, describe: &'static str) -> Result<String, ParseError> {
        if let TokenKind::Ident(name) = &self.peek().kind {
            let name = name.clone();
            self.advance();
            Ok(name)
        } else {
            Err(self.syntax_error(vec![describe]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_test_scenario_end_condition_as_five_way_or() {
        let e = parse("x_ego >= 20 || collision(ego, ped) || y_ego <= -2 || y_ego >= 1 || t > 100")
            .unwrap();
        let parts = e.disjuncts();
        assert_eq!(parts.len(), 5);
        assert!(matches!(parts[0], ConditionExpr::Compare { op: CmpOp::Ge, .. }));
        assert!(matches!(parts[1], ConditionExpr::Collision { .. }));
        assert!(matches!(parts[4], ConditionExpr::Compare { op: CmpOp::Gt, .. }));
    }

    #[test]
    fn parses_conjunction_of_comparisons() {
        let e = parse("abs(x_ego / v_ego) <= 1 && y_ped < 0").unwrap();
        match e {
            ConditionExpr::And(l, r) => {
                assert!(matches!(*l, ConditionExpr::Compare { op: CmpOp::Le, .. }));
                assert!(matches!(*r, ConditionExpr::Compare { op: CmpOp::Lt, .. }));
            }
            other => panic!("expected And, got {other:?}"),
        }
    }

    #[test]
    fn parses_single_comparison() {
        let e = parse("t >= 0").unwrap();
        assert_eq!(
            e,
            ConditionExpr::compare(CmpOp::Ge, NumExpr::var("t"), NumExpr::literal(0.0))
        );
    }

    #[test]
    fn reports_syntax_error_at_end_of_input() {
        let err = parse("x_ego >").unwrap_err();
        match err {
            ParseError::Syntax { position, found, .. } => {
                assert_eq!(position, 7);
                assert_eq!(found, "end of input");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unwraps_redundant_parentheses() {
        let direct = parse("t > 100").unwrap();
        let nested = parse("(((t>100)))").unwrap();
        assert_eq!(direct, nested);
    }

    #[test]
    fn numeric_parentheses_backtrack() {
        let e = parse("(x_ego + 1) * 2 >= 4").unwrap();
        assert!(matches!(e, ConditionExpr::Compare { op: CmpOp::Ge, .. }));
    }

    #[test]
    fn boolean_operand_of_arithmetic_is_a_type_error() {
        assert!(matches!(parse("collision(a, b) + 1 > 2"), Err(ParseError::Type { .. })));
        assert!(matches!(parse("(a < 1) + 2 > 3"), Err(ParseError::Type { .. })));
        assert!(matches!(parse("(a < 1) == 1"), Err(ParseError::Type { .. })));
    }

    #[test]
    fn unit_suffixes_are_validated() {
        let e = parse("x_ego >= 20 m").unwrap();
        match e {
            ConditionExpr::Compare { rhs: NumExpr::Literal { value, unit }, .. } => {
                assert_eq!(value, 20.0);
                assert_eq!(unit.as_deref(), Some("m"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("x_ego >= 20 furlongs"),
            Err(ParseError::InvalidUnit { .. })
        ));
    }

    #[test]
    fn negative_literals_fold() {
        let e = parse("y_ego <= -2").unwrap();
        assert_eq!(
            e,
            ConditionExpr::compare(CmpOp::Le, NumExpr::var("y_ego"), NumExpr::literal(-2.0))
        );
    }

    #[test]
    fn unary_minus_on_expressions_desugars_to_subtraction() {
        let e = parse("-x < 1").unwrap();
        let expected = ConditionExpr::compare(
            CmpOp::Lt,
            NumExpr::binary(ArithOp::Sub, NumExpr::literal(0.0), NumExpr::var("x")),
            NumExpr::literal(1.0),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_linked_conditions() {
        let e = parse("linked(ego_braking, end)").unwrap();
        assert_eq!(
            e,
            ConditionExpr::Linked {
                activity: "ego_braking".into(),
                boundary: ActivityBoundary::End,
            }
        );
        assert!(parse("linked(a, middle)").is_err());
    }

    #[test]
    fn trailing_tokens_are_rejected() {
        assert!(matches!(parse("t > 1 2"), Err(ParseError::Syntax { .. })));
        // An identifier directly after a number reads as a unit suffix.
        assert!(matches!(parse("t > 1 t < 2"), Err(ParseError::InvalidUnit { .. })));
    }
}
