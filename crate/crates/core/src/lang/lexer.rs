//! Tokenizer for `.norm` model files.
//!
//! Multi-word keywords (`Identified by`, `Holds when`, ...) are fused into a
//! single token so the parser can treat them like any other keyword.
//! Identifiers may contain `-` between alphanumeric characters, which means
//! binary subtraction must be surrounded by whitespace (`a - b`).

use std::fmt;

use super::diagnostic::{Diagnostic, Position, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Fact,
    Var,
    Bool,
    Act,
    Physical,
    Duty,
    Event,
    Open,
    Closed,
    Identified,
    By,
    Int,
    String,
    Actor,
    Recipient,
    Holder,
    Claimant,
    Syncs,
    With,
    Extends,
    Holds,
    When,
    Conditioned,
    Violated,
    Terminated,
    Creates,
    Terminates,
    Not,
    True,
    False,
    // fused forms
    IdentifiedBy,
    SyncsWith,
    HoldsWhen,
    ConditionedBy,
    ViolatedWhen,
    TerminatedBy,
}

impl Keyword {
    /// Every single-word reserved word of the language.
    pub const RESERVED: [Keyword; 30] = [
        Keyword::Fact,
        Keyword::Var,
        Keyword::Bool,
        Keyword::Act,
        Keyword::Physical,
        Keyword::Duty,
        Keyword::Event,
        Keyword::Open,
        Keyword::Closed,
        Keyword::Identified,
        Keyword::By,
        Keyword::Int,
        Keyword::String,
        Keyword::Actor,
        Keyword::Recipient,
        Keyword::Holder,
        Keyword::Claimant,
        Keyword::Syncs,
        Keyword::With,
        Keyword::Extends,
        Keyword::Holds,
        Keyword::When,
        Keyword::Conditioned,
        Keyword::Violated,
        Keyword::Terminated,
        Keyword::Creates,
        Keyword::Terminates,
        Keyword::Not,
        Keyword::True,
        Keyword::False,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Fact => "Fact",
            Keyword::Var => "Var",
            Keyword::Bool => "Bool",
            Keyword::Act => "Act",
            Keyword::Physical => "Physical",
            Keyword::Duty => "Duty",
            Keyword::Event => "Event",
            Keyword::Open => "Open",
            Keyword::Closed => "Closed",
            Keyword::Identified => "Identified",
            Keyword::By => "by",
            Keyword::Int => "Int",
            Keyword::String => "String",
            Keyword::Actor => "Actor",
            Keyword::Recipient => "Recipient",
            Keyword::Holder => "Holder",
            Keyword::Claimant => "Claimant",
            Keyword::Syncs => "Syncs",
            Keyword::With => "with",
            Keyword::Extends => "Extends",
            Keyword::Holds => "Holds",
            Keyword::When => "when",
            Keyword::Conditioned => "Conditioned",
            Keyword::Violated => "Violated",
            Keyword::Terminated => "Terminated",
            Keyword::Creates => "Creates",
            Keyword::Terminates => "Terminates",
            Keyword::Not => "Not",
            Keyword::True => "True",
            Keyword::False => "False",
            Keyword::IdentifiedBy => "Identified by",
            Keyword::SyncsWith => "Syncs with",
            Keyword::HoldsWhen => "Holds when",
            Keyword::ConditionedBy => "Conditioned by",
            Keyword::ViolatedWhen => "Violated when",
            Keyword::TerminatedBy => "Terminated by",
        }
    }

    fn from_word(word: &str) -> Option<Keyword> {
        Keyword::RESERVED.iter().copied().find(|k| k.as_str() == word)
    }

    fn fuse(self, next: Keyword) -> Option<Keyword> {
        match (self, next) {
            (Keyword::Identified, Keyword::By) => Some(Keyword::IdentifiedBy),
            (Keyword::Syncs, Keyword::With) => Some(Keyword::SyncsWith),
            (Keyword::Holds, Keyword::When) => Some(Keyword::HoldsWhen),
            (Keyword::Conditioned, Keyword::By) => Some(Keyword::ConditionedBy),
            (Keyword::Violated, Keyword::When) => Some(Keyword::ViolatedWhen),
            (Keyword::Terminated, Keyword::By) => Some(Keyword::TerminatedBy),
            _ => None,
        }
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Returns true if `word` is a reserved word and so cannot name a declaration.
pub fn is_reserved(word: &str) -> bool {
    Keyword::from_word(word).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// Unsigned magnitude; sign and range are handled by the parser.
    Int(u64),
    Str(String),
    Dot,
    Comma,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
}

impl TokenKind {
    pub fn is_punct(&self) -> bool {
        !matches!(
            self,
            TokenKind::Keyword(_) | TokenKind::Ident(_) | TokenKind::Int(_) | TokenKind::Str(_)
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{k}`"),
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Int(n) => write!(f, "integer `{n}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Assign => f.write_str("`=`"),
            TokenKind::EqEq => f.write_str("`==`"),
            TokenKind::NotEq => f.write_str("`!=`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::AndAnd => f.write_str("`&&`"),
            TokenKind::OrOr => f.write_str("`||`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&mut self) -> Position {
        let offset = self.chars.peek().map(|(i, _)| *i).unwrap_or(self.src.len());
        Position {
            line: self.line,
            column: self.column,
            offset,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Stops at the first lexical error.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor::new(source);
    let mut tokens: Vec<Token> = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_second() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let start = cur.pos();
        let kind = if is_ident_start(c) {
            let mut word = String::new();
            while let Some(c) = cur.peek() {
                // a hyphen continues a name only when a name character follows
                if is_ident_continue(c) || (c == '-' && cur.peek_second().is_some_and(is_ident_continue)) {
                    word.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            match Keyword::from_word(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() {
            let mut value: u64 = 0;
            let mut overflow = false;
            while let Some(d) = cur.peek().and_then(|c| c.to_digit(10)) {
                cur.bump();
                match value.checked_mul(10).and_then(|v| v.checked_add(d as u64)) {
                    Some(v) => value = v,
                    None => overflow = true,
                }
            }
            if overflow {
                return Err(Diagnostic::error(
                    "integer literal out of range",
                    Span::new(start, cur.pos()),
                ));
            }
            TokenKind::Int(value)
        } else if c == '"' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    None | Some('\n') => {
                        return Err(Diagnostic::error(
                            "unterminated string literal",
                            Span::new(start, cur.pos()),
                        ))
                    }
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('"') => text.push('"'),
                        Some('\\') => text.push('\\'),
                        Some('n') => text.push('\n'),
                        Some('t') => text.push('\t'),
                        _ => {
                            return Err(Diagnostic::error(
                                "invalid escape sequence in string literal",
                                Span::new(start, cur.pos()),
                            ))
                        }
                    },
                    Some(ch) => text.push(ch),
                }
            }
            TokenKind::Str(text)
        } else {
            cur.bump();
            let next = cur.peek();
            let two = |kind: TokenKind, cur: &mut Cursor| {
                cur.bump();
                kind
            };
            match (c, next) {
                ('.', _) => TokenKind::Dot,
                (',', _) => TokenKind::Comma,
                ('(', _) => TokenKind::LParen,
                (')', _) => TokenKind::RParen,
                ('+', _) => TokenKind::Plus,
                ('-', _) => TokenKind::Minus,
                ('*', _) => TokenKind::Star,
                ('=', Some('=')) => two(TokenKind::EqEq, &mut cur),
                ('=', _) => TokenKind::Assign,
                ('!', Some('=')) => two(TokenKind::NotEq, &mut cur),
                ('<', Some('=')) => two(TokenKind::Le, &mut cur),
                ('<', _) => TokenKind::Lt,
                ('>', Some('=')) => two(TokenKind::Ge, &mut cur),
                ('>', _) => TokenKind::Gt,
                ('&', Some('&')) => two(TokenKind::AndAnd, &mut cur),
                ('|', Some('|')) => two(TokenKind::OrOr, &mut cur),
                _ => {
                    return Err(Diagnostic::error(
                        format!("illegal character {c:?}"),
                        Span::new(start, cur.pos()),
                    ))
                }
            }
        };
        let span = Span::new(start, cur.pos());

        if let TokenKind::Keyword(k) = kind {
            if let Some(prev) = tokens.last_mut() {
                if let TokenKind::Keyword(p) = prev.kind {
                    if let Some(fused) = p.fuse(k) {
                        prev.kind = TokenKind::Keyword(fused);
                        prev.span = prev.span.merge(span);
                        continue;
                    }
                }
            }
        }
        tokens.push(Token { kind, span });
    }
    Ok(tokens)
}
