//! Recursive-descent parser for the STL concrete syntax.
//!
//! ```text
//! formula  := implies
//! implies  := or ("->" implies)?
//! or       := and ("|" and)*
//! and      := until ("&" until)*
//! until    := unary ("U" window? "(" formula ")")*
//! unary    := "!" unary | ("F" | "G") window? "(" formula ")"
//!           | "true" | ident cmp number | "(" formula ")"
//! window   := "[" number "," number "]"
//! cmp      := "<" | "<=" | ">" | ">="
//! ```

use super::ast::{Comparator, Interval, Predicate, StlFormula};
use super::StlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Cmp(Comparator),
    Eof,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        next
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, StlError> {
        let mut out = Vec::new();
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let pos = Pos {
                line: self.line,
                column: self.column,
            };
            let Some((start, c)) = self.bump() else {
                out.push((Tok::Eof, pos));
                return Ok(out);
            };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '<' | '>' => {
                    let eq = self.peek() == Some('=');
                    if eq {
                        self.bump();
                    }
                    Tok::Cmp(match (c, eq) {
                        ('<', false) => Comparator::Lt,
                        ('<', true) => Comparator::Le,
                        ('>', false) => Comparator::Gt,
                        _ => Comparator::Ge,
                    })
                }
                '-' if self.peek() == Some('>') => {
                    self.bump();
                    Tok::Arrow
                }
                c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => self.number(start, pos)?,
                c if c.is_alphabetic() || c == '_' => {
                    let mut end = start + c.len_utf8();
                    while let Some(n) = self.peek() {
                        if n.is_alphanumeric() || n == '_' {
                            end += n.len_utf8();
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(self.src[start..end].to_owned())
                }
                _ => {
                    let mut op = c.to_string();
                    while let Some(n) = self.peek() {
                        if is_symbol_char(n) {
                            op.push(n);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    return Err(StlError::UnknownOperator {
                        op,
                        line: pos.line,
                        column: pos.column,
                    });
                }
            };
            out.push((tok, pos));
        }
    }

    fn number(&mut self, start: usize, pos: Pos) -> Result<Tok, StlError> {
        let mut end = start + 1;
        let mut prev = self.src[start..end].chars().next().unwrap_or(' ');
        while let Some(n) = self.peek() {
            let exp_sign = (n == '-' || n == '+') && (prev == 'e' || prev == 'E');
            if n.is_ascii_digit() || n == '.' || n == 'e' || n == 'E' || exp_sign {
                end += 1;
                prev = n;
                self.bump();
            } else {
                break;
            }
        }
        let text = &self.src[start..end];
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Tok::Number)
            .ok_or_else(|| StlError::SyntaxError {
                line: pos.line,
                column: pos.column,
                message: format!("invalid number `{text}`"),
            })
    }
}

fn is_symbol_char(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace() && !"()[],_".contains(c)
}

/// Parses the concrete syntax into a formula. Implication is desugared.
pub fn parse_stl(text: &str) -> Result<StlFormula, StlError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser { tokens, idx: 0 };
    let formula = parser.implies()?;
    match parser.peek() {
        Tok::Eof => Ok(formula),
        other => Err(parser.error(format!("unexpected {}", describe(other)))),
    }
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    idx: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Eof => "end of input".into(),
        Tok::Cmp(c) => format!("`{}`", c.symbol()),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Arrow => "`->`".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.idx + offset).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].1
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.idx].0.clone();
        if self.idx < self.tokens.len() - 1 {
            self.idx += 1;
        }
        tok
    }

    fn error(&self, message: String) -> StlError {
        let pos = self.pos();
        StlError::SyntaxError {
            line: pos.line,
            column: pos.column,
            message,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), StlError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", describe(&want), describe(self.peek()))))
        }
    }

    fn implies(&mut self) -> Result<StlFormula, StlError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.implies()?;
            return Ok(StlFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<StlFormula, StlError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.advance();
            let rhs = self.and()?;
            lhs = StlFormula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<StlFormula, StlError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            let rhs = self.until()?;
            lhs = StlFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<StlFormula, StlError> {
        let mut lhs = self.unary()?;
        while matches!(self.peek(), Tok::Ident(s) if s == "U") && matches!(self.peek_at(1), Tok::LParen | Tok::LBracket)
        {
            self.advance();
            let window = self.window()?;
            let rhs = self.parenthesized()?;
            lhs = StlFormula::until(window, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parenthesized(&mut self) -> Result<StlFormula, StlError> {
        self.expect(Tok::LParen)?;
        let inner = self.implies()?;
        self.expect(Tok::RParen)?;
        Ok(inner)
    }

    fn window(&mut self) -> Result<Option<Interval>, StlError> {
        if *self.peek() != Tok::LBracket {
            return Ok(None);
        }
        self.advance();
        let a = self.number()?;
        self.expect(Tok::Comma)?;
        let b = self.number()?;
        self.expect(Tok::RBracket)?;
        Interval::new(a, b).map(Some)
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.peek() {
            Tok::Number(n) => {
                let n = *n;
                self.advance();
                Ok(n)
            }
            other => Err(self.error(format!("expected number, found {}", describe(other)))),
        }
    }

    fn unary(&mut self) -> Result<StlFormula, StlError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.advance();
                Ok(StlFormula::not(self.unary()?))
            }
            Tok::LParen => self.parenthesized(),
            Tok::Ident(name) => {
                let pos = self.pos();
                let next = self.peek_at(1).clone();
                match (name.as_str(), &next) {
                    ("true", _) => {
                        self.advance();
                        Ok(StlFormula::True)
                    }
                    ("F" | "G", Tok::LParen | Tok::LBracket) => {
                        self.advance();
                        let window = self.window()?;
                        let body = self.parenthesized()?;
                        Ok(if name == "F" {
                            StlFormula::eventually(window, body)
                        } else {
                            StlFormula::always(window, body)
                        })
                    }
                    (_, Tok::LParen | Tok::LBracket) => Err(StlError::UnknownOperator {
                        op: name,
                        line: pos.line,
                        column: pos.column,
                    }),
                    (_, Tok::Cmp(cmp)) => {
                        let cmp = *cmp;
                        self.advance();
                        self.advance();
                        let threshold = self.number()?;
                        Ok(StlFormula::Pred(Predicate::new(name, cmp, threshold)?))
                    }
                    _ => {
                        self.advance();
                        Err(self.error(format!("expected comparison after `{name}`, found {}", describe(&next))))
                    }
                }
            }
            other => Err(self.error(format!("unexpected {}", describe(&other)))),
        }
    }
}
