//! Tokenizer for the condition DSL.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Number(f64),
    OrOr,
    AndAnd,
    Bang,
    Le,
    Lt,
    Ge,
    Gt,
    EqEq,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Number(v) => format!("number `{v}`"),
            TokenKind::OrOr => "`||`".into(),
            TokenKind::AndAnd => "`&&`".into(),
            TokenKind::Bang => "`!`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub pos: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let pos = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'(' => {
                tokens.push(Token { kind: TokenKind::LParen, pos });
                i += 1;
            }
            b')' => {
                tokens.push(Token { kind: TokenKind::RParen, pos });
                i += 1;
            }
            b',' => {
                tokens.push(Token { kind: TokenKind::Comma, pos });
                i += 1;
            }
            b'+' => {
                tokens.push(Token { kind: TokenKind::Plus, pos });
                i += 1;
            }
            b'-' => {
                tokens.push(Token { kind: TokenKind::Minus, pos });
                i += 1;
            }
            b'*' => {
                tokens.push(Token { kind: TokenKind::Star, pos });
                i += 1;
            }
            b'/' => {
                tokens.push(Token { kind: TokenKind::Slash, pos });
                i += 1;
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    tokens.push(Token { kind: TokenKind::OrOr, pos });
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { position: pos, ch: '|' });
                }
            }
            b'&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    tokens.push(Token { kind: TokenKind::AndAnd, pos });
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { position: pos, ch: '&' });
                }
            }
            b'!' => {
                tokens.push(Token { kind: TokenKind::Bang, pos });
                i += 1;
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { kind: TokenKind::Le, pos });
                    i += 2;
                } else {
                    tokens.push(Token { kind: TokenKind::Lt, pos });
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { kind: TokenKind::Ge, pos });
                    i += 2;
                } else {
                    tokens.push(Token { kind: TokenKind::Gt, pos });
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    tokens.push(Token { kind: TokenKind::EqEq, pos });
                    i += 2;
                } else {
                    return Err(ParseError::UnexpectedChar { position: pos, ch: '=' });
                }
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let value: f64 = text[start..i]
                    .parse()
                    .map_err(|_| ParseError::InvalidNumber { position: start })?;
                if !value.is_finite() {
                    return Err(ParseError::InvalidNumber { position: start });
                }
                tokens.push(Token { kind: TokenKind::Number(value), pos: start });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_owned()),
                    pos: start,
                });
            }
            other => {
                return Err(ParseError::UnexpectedChar {
                    position: pos,
                    ch: char::from(other),
                });
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, pos: bytes.len() });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_operators_and_numbers() {
        let toks = tokenize("x_ego >= -2.5e1 && t < 100").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Ident("x_ego".into()),
                TokenKind::Ge,
                TokenKind::Minus,
                TokenKind::Number(25.0),
                TokenKind::AndAnd,
                TokenKind::Ident("t".into()),
                TokenKind::Lt,
                TokenKind::Number(100.0),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(matches!(
            tokenize("x # y"),
            Err(ParseError::UnexpectedChar { ch: '#', .. })
        ));
        assert!(matches!(
            tokenize("x | y"),
            Err(ParseError::UnexpectedChar { ch: '|', .. })
        ));
        assert!(matches!(
            tokenize("x = 1"),
            Err(ParseError::UnexpectedChar { ch: '=', .. })
        ));
    }

    #[test]
    fn rejects_overflowing_numbers() {
        assert!(matches!(
            tokenize("x < 1e999"),
            Err(ParseError::InvalidNumber { .. })
        ));
    }
}
