//! Reader for the parenthesized notation shared by IR files, rule files and
//! the text-organization resources.
//!
//! Round and square brackets are both list delimiters and are kept apart so
//! that callers can tell `[...]` structures from `(...)` pairs. Atoms are
//! kept as raw text; callers decide whether an atom is a number or a symbol.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {}, column {}: {message}", pos.line, pos.col)]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    Round,
    Square,
}

impl Bracket {
    fn close(self) -> char {
        match self {
            Bracket::Round => ')',
            Bracket::Square => ']',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    List(Bracket, Vec<SExpr>),
    Atom(String),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub node: Node,
    pub pos: Pos,
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match &self.node {
            Node::List(_, items) => Some(items),
            _ => None,
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_atom().is_some_and(|a| a.eq_ignore_ascii_case(kw))
    }

    pub fn describe(&self) -> &'static str {
        match &self.node {
            Node::List(Bracket::Round, _) => "list",
            Node::List(Bracket::Square, _) => "structure",
            Node::Atom(_) => "atom",
            Node::Str(_) => "string",
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    col: usize,
    comment: char,
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '"')
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == self.comment {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<SExpr>, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        match c {
            '(' | '[' => {
                self.bump();
                let bracket = if c == '(' {
                    Bracket::Round
                } else {
                    Bracket::Square
                };
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => {
                            return Err(SyntaxError::new(
                                pos,
                                format!("unclosed '{c}', expected '{}'", bracket.close()),
                            ))
                        }
                        Some(close @ (')' | ']')) => {
                            let here = self.pos();
                            self.bump();
                            if close != bracket.close() {
                                return Err(SyntaxError::new(
                                    here,
                                    format!("expected '{}', found '{close}'", bracket.close()),
                                ));
                            }
                            break;
                        }
                        Some(_) => {
                            let item = self.read()?.expect("input not exhausted");
                            items.push(item);
                        }
                    }
                }
                Ok(Some(SExpr {
                    node: Node::List(bracket, items),
                    pos,
                }))
            }
            ')' | ']' => Err(SyntaxError::new(pos, format!("unexpected '{c}'"))),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SyntaxError::new(pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => {
                            let esc_pos = self.pos();
                            match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some(other) => {
                                    return Err(SyntaxError::new(
                                        esc_pos,
                                        format!("unknown escape '\\{other}'"),
                                    ))
                                }
                                None => return Err(SyntaxError::new(pos, "unterminated string")),
                            }
                        }
                        Some(other) => s.push(other),
                    }
                }
                Ok(Some(SExpr {
                    node: Node::Str(s),
                    pos,
                }))
            }
            _ => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if is_delim(c) || c == self.comment {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(SExpr {
                    node: Node::Atom(s),
                    pos,
                }))
            }
        }
    }
}

/// Reads every top-level expression in `text`. `comment` starts a comment
/// that runs to the end of the line.
pub fn read_all(text: &str, comment: char) -> Result<Vec<SExpr>, SyntaxError> {
    let mut reader = Reader {
        chars: text.char_indices().peekable(),
        line: 1,
        col: 1,
        comment,
    };
    let mut out = Vec::new();
    while let Some(expr) = reader.read()? {
        out.push(expr);
    }
    Ok(out)
}

/// Writes `s` as a double-quoted string literal.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
