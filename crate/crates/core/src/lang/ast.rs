//! Syntax tree for norm models.
//!
//! Spans are carried on declarations, statements, templates and expression
//! nodes so that validation can point at the offending text. Use
//! [`Specification::without_spans`] when comparing trees structurally.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::diagnostic::Span;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Specification {
    pub declarations: Vec<Declaration>,
    pub statements: Vec<Statement>,
}

impl Specification {
    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name == name)
    }

    /// Copy of the tree with every span reset to the default value.
    pub fn without_spans(&self) -> Specification {
        let mut spec = self.clone();
        for decl in &mut spec.declarations {
            decl.span = Span::default();
            decl.name_span = Span::default();
            for e in [
                &mut decl.holds_when,
                &mut decl.conditioned_by,
                &mut decl.violated_when,
            ]
            .into_iter()
            .flatten()
            {
                e.clear_spans();
            }
            for t in decl.creates.iter_mut().chain(decl.terminates.iter_mut()) {
                t.span = Span::default();
            }
        }
        for stmt in &mut spec.statements {
            stmt.span = Span::default();
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeclKind {
    Fact,
    Var,
    Bool,
    Act,
    PhysicalAct,
    Duty,
}

impl DeclKind {
    pub fn is_act(self) -> bool {
        matches!(self, DeclKind::Act | DeclKind::PhysicalAct)
    }

    /// Fact, Var and Bool: the kinds whose instances live in the knowledge base.
    pub fn is_fact_type(self) -> bool {
        matches!(self, DeclKind::Fact | DeclKind::Var | DeclKind::Bool)
    }

    /// Var and Bool admit at most one holding instance at a time.
    pub fn is_single_instance(self) -> bool {
        matches!(self, DeclKind::Var | DeclKind::Bool)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            DeclKind::Fact => "Fact",
            DeclKind::Var => "Var",
            DeclKind::Bool => "Bool",
            DeclKind::Act => "Act",
            DeclKind::PhysicalAct => "Physical Act",
            DeclKind::Duty => "Duty",
        }
    }
}

impl fmt::Display for DeclKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Openness {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    Int,
    String,
    #[default]
    NoArg,
}

impl Domain {
    pub fn arity(self) -> usize {
        match self {
            Domain::NoArg => 0,
            Domain::Int | Domain::String => 1,
        }
    }
}

/// A literal value as written in source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Literal {
    pub fn fits(&self, domain: Domain) -> bool {
        matches!(
            (self, domain),
            (Literal::Int(_), Domain::Int) | (Literal::Str(_), Domain::String)
        )
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal::Str(s.to_string())
    }
}

impl From<String> for Literal {
    fn from(s: String) -> Self {
        Literal::Str(s)
    }
}

impl From<i64> for Literal {
    fn from(n: i64) -> Self {
        Literal::Int(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub kind: DeclKind,
    pub name: String,
    /// Openness as written; `None` means the kind's default.
    pub openness: Option<Openness>,
    pub domain: Domain,
    pub actor_param: Option<String>,
    pub recipient_param: Option<String>,
    pub holder_param: Option<String>,
    pub claimant_param: Option<String>,
    pub syncs_with: Option<String>,
    pub extends: Option<String>,
    pub holds_when: Option<Expr>,
    pub conditioned_by: Option<Expr>,
    pub violated_when: Option<Expr>,
    pub creates: Vec<InstanceTemplate>,
    pub terminates: Vec<InstanceTemplate>,
    pub terminated_by: Vec<String>,
    pub span: Span,
    pub name_span: Span,
}

impl Declaration {
    pub fn new(kind: DeclKind, name: impl Into<String>) -> Self {
        Declaration {
            kind,
            name: name.into(),
            openness: None,
            domain: Domain::NoArg,
            actor_param: None,
            recipient_param: None,
            holder_param: None,
            claimant_param: None,
            syncs_with: None,
            extends: None,
            holds_when: None,
            conditioned_by: None,
            violated_when: None,
            creates: Vec::new(),
            terminates: Vec::new(),
            terminated_by: Vec::new(),
            span: Span::default(),
            name_span: Span::default(),
        }
    }

    /// Closed for Fact, Open for Var and Bool unless written otherwise.
    pub fn effective_openness(&self) -> Openness {
        self.openness.unwrap_or(match self.kind {
            DeclKind::Var | DeclKind::Bool => Openness::Open,
            _ => Openness::Closed,
        })
    }

    /// A fact whose truth is computed from its `Holds when` clause.
    pub fn is_derived(&self) -> bool {
        self.kind == DeclKind::Fact && self.holds_when.is_some()
    }

    /// Pre-condition clauses of an act, in the order they are reported.
    pub fn preconditions(&self) -> impl Iterator<Item = (ClauseKind, &Expr)> {
        let holds = self.holds_when.as_ref().map(|e| (ClauseKind::HoldsWhen, e));
        let cond = self
            .conditioned_by
            .as_ref()
            .map(|e| (ClauseKind::ConditionedBy, e));
        holds.into_iter().chain(cond)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClauseKind {
    HoldsWhen,
    ConditionedBy,
    ViolatedWhen,
}

impl fmt::Display for ClauseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClauseKind::HoldsWhen => "Holds when",
            ClauseKind::ConditionedBy => "Conditioned by",
            ClauseKind::ViolatedWhen => "Violated when",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateArg {
    Lit(Literal),
    Actor,
    Recipient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTemplate {
    pub type_name: String,
    pub args: Vec<TemplateArg>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementKind {
    /// `+name(args).`
    Create { type_name: String, args: Vec<Literal> },
    /// `-name(args).`
    Terminate { type_name: String, args: Vec<Literal> },
    /// `=name(value).`
    Assign { type_name: String, value: Literal },
}

impl StatementKind {
    pub fn type_name(&self) -> &str {
        match self {
            StatementKind::Create { type_name, .. }
            | StatementKind::Terminate { type_name, .. }
            | StatementKind::Assign { type_name, .. } => type_name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Ge => ">=",
            BinOp::Gt => ">",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Binding strength; higher binds tighter. `Not` sits at 3.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne | BinOp::Ge | BinOp::Gt => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    /// `name` or `name(args)`. Without arguments this is the value of a
    /// single-instance type (Var) or the truth of an argument-less fact.
    FactRef { name: String, args: Vec<Expr> },
    Holds(InstanceTemplate),
    Actor,
    Recipient,
    Not(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        })
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinOp::And, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Self {
        Expr::new(ExprKind::Not(Box::new(inner)))
    }

    pub fn lit(l: impl Into<Literal>) -> Self {
        Expr::new(ExprKind::Lit(l.into()))
    }

    pub fn boolean(b: bool) -> Self {
        Expr::new(ExprKind::Lit(Literal::Bool(b)))
    }

    pub fn name(name: impl Into<String>) -> Self {
        Expr::new(ExprKind::FactRef {
            name: name.into(),
            args: Vec::new(),
        })
    }

    pub fn clear_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::FactRef { args, .. } => args.iter_mut().for_each(Expr::clear_spans),
            ExprKind::Holds(t) => t.span = Span::default(),
            ExprKind::Not(e) => e.clear_spans(),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.clear_spans();
                rhs.clear_spans();
            }
            ExprKind::Lit(_) | ExprKind::Actor | ExprKind::Recipient => {}
        }
    }

    /// Visits this node and every descendant, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::FactRef { args, .. } => args.iter().for_each(|a| a.walk(f)),
            ExprKind::Not(e) => e.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Lit(_) | ExprKind::Holds(_) | ExprKind::Actor | ExprKind::Recipient => {}
        }
    }

    pub fn mentions_recipient(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| match &e.kind {
            ExprKind::Recipient => found = true,
            ExprKind::Holds(t) if t.args.contains(&TemplateArg::Recipient) => found = true,
            _ => {}
        });
        found
    }

    pub fn mentions_placeholder(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| match &e.kind {
            ExprKind::Actor | ExprKind::Recipient => found = true,
            ExprKind::Holds(t)
                if t.args
                    .iter()
                    .any(|a| matches!(a, TemplateArg::Actor | TemplateArg::Recipient)) =>
            {
                found = true
            }
            _ => {}
        });
        found
    }
}
