//! Recursive descent parser for `.norm` models.
//!
//! Every top-level form ends in `.`; after a syntax error the parser skips to
//! the next `.` and continues, so one run reports every broken form.

use super::ast::*;
use super::diagnostic::{Diagnostic, Position, Span};
use super::lexer::{tokenize, Keyword, Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

/// Parses a model source. Returns all syntax diagnostics on failure.
pub fn parse(source: &str) -> Result<Specification, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let end = end_position(source);
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof: Span::new(end, end),
        diagnostics: Vec::new(),
    };
    let spec = parser.parse_spec();
    if parser.diagnostics.is_empty() {
        Ok(spec)
    } else {
        Err(parser.diagnostics)
    }
}

/// Parses a single expression; used by tests and tooling.
pub fn parse_expr(source: &str) -> Result<Expr, Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let end = end_position(source);
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof: Span::new(end, end),
        diagnostics: Vec::new(),
    };
    let expr = parser.expr().map_err(|d| vec![d])?;
    if let Some(tok) = parser.peek() {
        return Err(vec![Diagnostic::error(
            format!("unexpected {} after expression", tok.kind),
            tok.span,
        )]);
    }
    Ok(expr)
}

fn end_position(source: &str) -> Position {
    let mut line = 1;
    let mut column = 1;
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    Position {
        line,
        column,
        offset: source.len(),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Span,
    diagnostics: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn peek_second(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos + 1).map(|t| &t.kind)
    }

    fn current_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.eof)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.eof
        } else {
            self.tokens[self.pos - 1].span
        }
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek_kind() == Some(kind)
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.at(&TokenKind::Keyword(kw))
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        match self.peek() {
            Some(tok) => Diagnostic::error(
                format!("expected {expected}, found {}", tok.kind),
                tok.span,
            ),
            None => Diagnostic::error(format!("expected {expected}, found end of input"), self.eof),
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> PResult<Span> {
        if self.at(kind) {
            Ok(self.advance().map(|t| t.span).unwrap_or(self.eof))
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn name(&mut self) -> PResult<(String, Span)> {
        match self.peek_kind() {
            Some(TokenKind::Ident(_)) => {
                let tok = self.advance().expect("peeked");
                match tok.kind {
                    TokenKind::Ident(name) => Ok((name, tok.span)),
                    _ => unreachable!(),
                }
            }
            Some(TokenKind::Keyword(k)) => Err(Diagnostic::error(
                format!("expected a name, found reserved word `{k}`"),
                self.current_span(),
            )),
            _ => Err(self.unexpected("a name")),
        }
    }

    fn recover(&mut self) {
        while let Some(tok) = self.advance() {
            if tok.kind == TokenKind::Dot {
                break;
            }
        }
    }

    fn parse_spec(&mut self) -> Specification {
        let mut spec = Specification::default();
        while self.peek().is_some() {
            let result = match self.peek_kind() {
                Some(TokenKind::Plus | TokenKind::Minus | TokenKind::Assign) => {
                    self.statement().map(|s| spec.statements.push(s))
                }
                Some(TokenKind::Keyword(Keyword::Event)) => Err(Diagnostic::error(
                    "standalone Event declarations are not supported; declare an Act",
                    self.current_span(),
                )),
                Some(TokenKind::Keyword(
                    Keyword::Open
                    | Keyword::Closed
                    | Keyword::Fact
                    | Keyword::Var
                    | Keyword::Bool
                    | Keyword::Act
                    | Keyword::Physical
                    | Keyword::Duty,
                )) => self.declaration().map(|d| spec.declarations.push(d)),
                _ => Err(self.unexpected("a declaration or statement")),
            };
            if let Err(d) = result {
                self.diagnostics.push(d);
                self.recover();
            }
        }
        spec
    }

    fn declaration(&mut self) -> PResult<Declaration> {
        let start = self.current_span();
        let openness = if self.eat(&TokenKind::Keyword(Keyword::Open)) {
            Some(Openness::Open)
        } else if self.eat(&TokenKind::Keyword(Keyword::Closed)) {
            Some(Openness::Closed)
        } else {
            None
        };

        let kind = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Fact)) => DeclKind::Fact,
            Some(TokenKind::Keyword(Keyword::Var)) => DeclKind::Var,
            Some(TokenKind::Keyword(Keyword::Bool)) => DeclKind::Bool,
            Some(TokenKind::Keyword(Keyword::Act)) => DeclKind::Act,
            Some(TokenKind::Keyword(Keyword::Duty)) => DeclKind::Duty,
            Some(TokenKind::Keyword(Keyword::Physical)) => {
                self.advance();
                if !self.at_kw(Keyword::Act) {
                    return Err(self.unexpected("`Act` after `Physical`"));
                }
                DeclKind::PhysicalAct
            }
            _ => return Err(self.unexpected("a declaration kind")),
        };
        self.advance();

        let (name, name_span) = self.name()?;
        let mut decl = Declaration::new(kind, name);
        decl.openness = openness;
        decl.name_span = name_span;

        if self.eat(&TokenKind::Keyword(Keyword::IdentifiedBy)) {
            decl.domain = if self.eat(&TokenKind::Keyword(Keyword::Int)) {
                Domain::Int
            } else if self.eat(&TokenKind::Keyword(Keyword::String)) {
                Domain::String
            } else {
                return Err(self.unexpected("`Int` or `String`"));
            };
        }

        while !self.at(&TokenKind::Dot) {
            self.clause(&mut decl)?;
        }
        self.expect(&TokenKind::Dot, "`.`")?;
        decl.span = start.merge(self.prev_span());

        if decl.kind == DeclKind::Duty
            && decl.extends.is_none()
            && (decl.holder_param.is_none() || decl.claimant_param.is_none())
        {
            self.diagnostics.push(Diagnostic::error(
                format!("Duty `{}` requires Holder and Claimant", decl.name),
                decl.name_span,
            ));
        }
        Ok(decl)
    }

    fn clause(&mut self, decl: &mut Declaration) -> PResult<()> {
        let span = self.current_span();
        let kw = match self.peek_kind() {
            Some(TokenKind::Keyword(k)) => *k,
            _ => return Err(self.unexpected("a clause or `.`")),
        };

        fn set_once<T>(slot: &mut Option<T>, value: T, what: &str, span: Span) -> PResult<()> {
            if slot.is_some() {
                return Err(Diagnostic::error(format!("duplicate `{what}` clause"), span));
            }
            *slot = Some(value);
            Ok(())
        }

        match kw {
            Keyword::Actor
            | Keyword::Recipient
            | Keyword::Holder
            | Keyword::Claimant
            | Keyword::SyncsWith
            | Keyword::Extends => {
                self.advance();
                let (name, _) = self.name()?;
                let slot = match kw {
                    Keyword::Actor => &mut decl.actor_param,
                    Keyword::Recipient => &mut decl.recipient_param,
                    Keyword::Holder => &mut decl.holder_param,
                    Keyword::Claimant => &mut decl.claimant_param,
                    Keyword::SyncsWith => &mut decl.syncs_with,
                    _ => &mut decl.extends,
                };
                set_once(slot, name, kw.as_str(), span)
            }
            Keyword::HoldsWhen | Keyword::ConditionedBy | Keyword::ViolatedWhen => {
                self.advance();
                let e = self.expr()?;
                let slot = match kw {
                    Keyword::HoldsWhen => &mut decl.holds_when,
                    Keyword::ConditionedBy => &mut decl.conditioned_by,
                    _ => &mut decl.violated_when,
                };
                set_once(slot, e, kw.as_str(), span)
            }
            Keyword::Creates | Keyword::Terminates => {
                self.advance();
                let list = self.template_list()?;
                if kw == Keyword::Creates {
                    decl.creates.extend(list);
                } else {
                    decl.terminates.extend(list);
                }
                Ok(())
            }
            Keyword::TerminatedBy => {
                self.advance();
                loop {
                    let (name, _) = self.name()?;
                    decl.terminated_by.push(name);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                Ok(())
            }
            _ => Err(self.unexpected("a clause or `.`")),
        }
    }

    fn template_list(&mut self) -> PResult<Vec<InstanceTemplate>> {
        let mut out = vec![self.template()?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.template()?);
        }
        Ok(out)
    }

    fn template(&mut self) -> PResult<InstanceTemplate> {
        let (type_name, start) = self.name()?;
        let mut args = Vec::new();
        if self.eat(&TokenKind::LParen) {
            if !self.at(&TokenKind::RParen) {
                loop {
                    let arg = if self.eat(&TokenKind::Keyword(Keyword::Actor)) {
                        TemplateArg::Actor
                    } else if self.eat(&TokenKind::Keyword(Keyword::Recipient)) {
                        TemplateArg::Recipient
                    } else {
                        TemplateArg::Lit(self.literal()?)
                    };
                    args.push(arg);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
            }
            self.expect(&TokenKind::RParen, "`)`")?;
        }
        Ok(InstanceTemplate {
            type_name,
            args,
            span: start.merge(self.prev_span()),
        })
    }

    fn literal(&mut self) -> PResult<Literal> {
        let span = self.current_span();
        match self.peek_kind().cloned() {
            Some(TokenKind::Int(n)) => {
                self.advance();
                i64::try_from(n)
                    .map(Literal::Int)
                    .map_err(|_| Diagnostic::error("integer literal out of range", span))
            }
            Some(TokenKind::Minus) if matches!(self.peek_second(), Some(TokenKind::Int(_))) => {
                self.advance();
                let Some(TokenKind::Int(n)) = self.advance().map(|t| t.kind) else {
                    unreachable!()
                };
                negate(n)
                    .map(Literal::Int)
                    .ok_or_else(|| Diagnostic::error("integer literal out of range", span))
            }
            Some(TokenKind::Str(s)) => {
                self.advance();
                Ok(Literal::Str(s))
            }
            Some(TokenKind::Keyword(Keyword::True)) => {
                self.advance();
                Ok(Literal::Bool(true))
            }
            Some(TokenKind::Keyword(Keyword::False)) => {
                self.advance();
                Ok(Literal::Bool(false))
            }
            _ => Err(self.unexpected("a literal")),
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.current_span();
        let op = self.advance().expect("caller peeked").kind;
        let (type_name, _) = self.name()?;
        let kind = match op {
            TokenKind::Assign => {
                self.expect(&TokenKind::LParen, "`(`")?;
                let value = self.literal()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                StatementKind::Assign { type_name, value }
            }
            _ => {
                let mut args = Vec::new();
                if self.eat(&TokenKind::LParen) {
                    if !self.at(&TokenKind::RParen) {
                        loop {
                            args.push(self.literal()?);
                            if !self.eat(&TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(&TokenKind::RParen, "`)`")?;
                }
                if op == TokenKind::Plus {
                    StatementKind::Create { type_name, args }
                } else {
                    StatementKind::Terminate { type_name, args }
                }
            }
        };
        self.expect(&TokenKind::Dot, "`.`")?;
        Ok(Statement {
            kind,
            span: start.merge(self.prev_span()),
        })
    }

    // Expressions, loosest binding first:
    //   ||  &&  Not  comparisons  + -  *  atoms

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn finish_binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = lhs.span.merge(rhs.span);
        Expr {
            kind: ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        }
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&TokenKind::OrOr) {
            let rhs = self.and_expr()?;
            lhs = Self::finish_binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat(&TokenKind::AndAnd) {
            let rhs = self.not_expr()?;
            lhs = Self::finish_binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_kw(Keyword::Not) {
            let start = self.current_span();
            self.advance();
            let inner = self.not_expr()?;
            let span = start.merge(inner.span);
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(inner)),
                span,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek_kind() {
            Some(TokenKind::Lt) => BinOp::Lt,
            Some(TokenKind::Le) => BinOp::Le,
            Some(TokenKind::EqEq) => BinOp::Eq,
            Some(TokenKind::NotEq) => BinOp::Ne,
            Some(TokenKind::Ge) => BinOp::Ge,
            Some(TokenKind::Gt) => BinOp::Gt,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        Ok(Self::finish_binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = Self::finish_binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.atom()?;
        while self.eat(&TokenKind::Star) {
            let rhs = self.atom()?;
            lhs = Self::finish_binary(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.current_span();
        let kind = match self.peek_kind() {
            Some(
                TokenKind::Int(_)
                | TokenKind::Str(_)
                | TokenKind::Minus
                | TokenKind::Keyword(Keyword::True | Keyword::False),
            ) => ExprKind::Lit(self.literal()?),
            Some(TokenKind::Keyword(Keyword::Actor)) => {
                self.advance();
                ExprKind::Actor
            }
            Some(TokenKind::Keyword(Keyword::Recipient)) => {
                self.advance();
                ExprKind::Recipient
            }
            Some(TokenKind::Keyword(Keyword::Holds)) => {
                self.advance();
                self.expect(&TokenKind::LParen, "`(` after `Holds`")?;
                let t = self.template()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                ExprKind::Holds(t)
            }
            Some(TokenKind::LParen) => {
                self.advance();
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: start.merge(self.prev_span()),
                });
            }
            Some(TokenKind::Ident(_)) => {
                let (name, _) = self.name()?;
                let mut args = Vec::new();
                if self.eat(&TokenKind::LParen) {
                    if !self.at(&TokenKind::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(&TokenKind::RParen, "`)`")?;
                }
                ExprKind::FactRef { name, args }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr {
            kind,
            span: start.merge(self.prev_span()),
        })
    }
}

fn negate(magnitude: u64) -> Option<i64> {
    if magnitude == 1u64 << 63 {
        Some(i64::MIN)
    } else {
        i64::try_from(magnitude).ok().map(|n| -n)
    }
}
