//! Recursive-descent parser for the coefficient expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          exponent must be a constant
//! atom  := NUMBER | 't' | 'pi' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC  := sin | cos | exp | sqrt
//! ```
//!
//! Whitespace is insignificant. Numbers are decimal literals with an optional
//! fraction and an optional scientific exponent.

use super::CoeffExpr;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexed {
    token: Token,
    offset: usize,
}

fn lex(input: &str) -> Result<Vec<Lexed>> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => out.push(Lexed { token: Token::Plus, offset }),
            b'-' => out.push(Lexed { token: Token::Minus, offset }),
            b'*' => out.push(Lexed { token: Token::Star, offset }),
            b'/' => out.push(Lexed { token: Token::Slash, offset }),
            b'^' => out.push(Lexed { token: Token::Caret, offset }),
            b'(' => out.push(Lexed { token: Token::LParen, offset }),
            b')' => out.push(Lexed { token: Token::RParen, offset }),
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    if j >= bytes.len() || !bytes[j].is_ascii_digit() {
                        return Err(Error::Syntax {
                            offset: j.min(bytes.len()),
                            message: "expected digits after decimal point".into(),
                        });
                    }
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                // scientific exponent only when `e`/`E` is followed by digits
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &input[i..j];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: i,
                    message: format!("invalid number `{text}`"),
                })?;
                out.push(Lexed {
                    token: Token::Number(value),
                    offset,
                });
                i = j;
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                out.push(Lexed {
                    token: Token::Ident(input[i..j].to_string()),
                    offset,
                });
                i = j;
                continue;
            }
            _ => {
                return Err(Error::Syntax {
                    offset,
                    message: format!("unexpected character `{}`", &input[i..i + 1]),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Lexed>,
    pos: usize,
    input_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|l| &l.token)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|l| l.offset)
            .unwrap_or(self.input_len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|l| l.token.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<CoeffExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<CoeffExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<CoeffExpr> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<CoeffExpr> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exp_offset = self.offset();
            let exponent = self.unary()?;
            let value = fold_constant(&exponent).ok_or_else(|| Error::Syntax {
                offset: exp_offset,
                message: "power exponent must be a rational constant".into(),
            })?;
            Ok(CoeffExpr::pow(base, value))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<CoeffExpr> {
        let offset = self.offset();
        match self.bump() {
            Some(Token::Number(x)) => Ok(CoeffExpr::literal(x)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "closing `)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(CoeffExpr::time()),
                "pi" => Ok(CoeffExpr::pi()),
                "sin" | "cos" | "exp" | "sqrt" => {
                    self.expect(Token::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "closing `)`")?;
                    Ok(match name.as_str() {
                        "sin" => CoeffExpr::sin(arg),
                        "cos" => CoeffExpr::cos(arg),
                        "exp" => CoeffExpr::exp(arg),
                        _ => CoeffExpr::sqrt(arg),
                    })
                }
                _ => Err(Error::UnknownIdentifier { name, offset }),
            },
            Some(_) => Err(Error::Syntax {
                offset,
                message: "expected a number, `t`, `pi`, a function call or `(`".into(),
            }),
            None => Err(Error::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Evaluate a time-free subtree to a constant; `None` when it mentions `t` or
/// does not evaluate to a finite number.
fn fold_constant(e: &CoeffExpr) -> Option<f64> {
    if contains_time(e) {
        return None;
    }
    e.eval(0.0).ok()
}

fn contains_time(e: &CoeffExpr) -> bool {
    match e {
        CoeffExpr::Time => true,
        CoeffExpr::Literal(_) | CoeffExpr::Pi => false,
        CoeffExpr::Unary(_, inner) => contains_time(inner),
        CoeffExpr::Binary(_, a, b) => contains_time(a) || contains_time(b),
        CoeffExpr::Pow(base, _) => contains_time(base),
    }
}

/// Parse an expression string into a [`CoeffExpr`].
pub fn parse(input: &str) -> Result<CoeffExpr> {
    let tokens = lex(input)?;
    if tokens.is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        input_len: input.len(),
    };
    let e = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Syntax {
            offset: parser.offset(),
            message: "trailing input after expression".into(),
        });
    }
    Ok(e)
}
