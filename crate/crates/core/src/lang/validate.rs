//! Static checks over a parsed model: name resolution, clause placement,
//! template arity and expression typing.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diagnostic::{Diagnostic, Severity, Span};
use super::flatten::flatten_extensions;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        !self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Warning)
    }
}

/// Validates `spec`. Extensions, if any, are flattened first and checked in
/// their merged form.
pub fn validate(spec: &Specification) -> ValidationReport {
    if spec.declarations.iter().any(|d| d.extends.is_some()) {
        return match flatten_extensions(spec) {
            Ok(flat) => validate(&flat),
            Err(diagnostics) => ValidationReport { diagnostics },
        };
    }
    let mut v = Validator::new(spec);
    v.run();
    ValidationReport {
        diagnostics: v.diagnostics,
    }
}

/// Sorts of the two-sorted expression language, plus strings for identifier
/// values and `Party` for Actor/Recipient placeholders (bound to either).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Truth,
    Int,
    Str,
    Party,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Truth => "truth value",
            Ty::Int => "integer",
            Ty::Str => "string",
            Ty::Party => "party",
        }
    }

    fn fits(self, domain: Domain) -> bool {
        matches!(
            (self, domain),
            (Ty::Int, Domain::Int) | (Ty::Str, Domain::String) | (Ty::Party, Domain::Int | Domain::String)
        )
    }
}

#[derive(Clone, Copy)]
struct Scope<'a> {
    decl: &'a Declaration,
    actor: bool,
    recipient: bool,
}

struct Validator<'a> {
    spec: &'a Specification,
    index: HashMap<&'a str, &'a Declaration>,
    diagnostics: Vec<Diagnostic>,
}

fn pick(span: Span, fallback: Span) -> Span {
    if span.is_known() {
        span
    } else {
        fallback
    }
}

impl<'a> Validator<'a> {
    fn new(spec: &'a Specification) -> Self {
        let mut index = HashMap::new();
        let mut diagnostics = Vec::new();
        for d in &spec.declarations {
            if index.insert(d.name.as_str(), d).is_some() {
                diagnostics.push(Diagnostic::error(
                    format!("`{}` is declared more than once", d.name),
                    d.name_span,
                ));
            }
        }
        Validator {
            spec,
            index,
            diagnostics,
        }
    }

    fn error(&mut self, message: String, span: Span) {
        self.diagnostics.push(Diagnostic::error(message, span));
    }

    fn run(&mut self) {
        for decl in &self.spec.declarations {
            self.check_declaration(decl);
        }
        self.check_derivation_cycles();
        for stmt in &self.spec.statements {
            self.check_statement(stmt);
        }
    }

    /// Whether executing this act binds a recipient, either through its own
    /// declaration or through its synchronised institutional act.
    fn binds_recipient(&self, act: &Declaration) -> bool {
        act.recipient_param.is_some()
            || act
                .syncs_with
                .as_deref()
                .and_then(|n| self.index.get(n))
                .is_some_and(|inst| inst.recipient_param.is_some())
    }

    fn check_declaration(&mut self, d: &'a Declaration) {
        let name = &d.name;
        let span = d.span;
        let kind = d.kind;

        match (kind, d.domain) {
            (DeclKind::Var, Domain::NoArg) => self.error(
                format!("Var `{name}` must be Identified by Int or String"),
                span,
            ),
            (DeclKind::Bool, Domain::Int | Domain::String) => self.error(
                format!("Bool `{name}` cannot be Identified by a domain"),
                span,
            ),
            (DeclKind::Act | DeclKind::PhysicalAct | DeclKind::Duty, Domain::Int | Domain::String) => {
                self.error(format!("{kind} `{name}` cannot be Identified by a domain"), span)
            }
            _ => {}
        }
        if d.openness.is_some() && !kind.is_fact_type() {
            self.error(
                format!("openness applies only to fact types, not {kind} `{name}`"),
                span,
            );
        }

        let mut misplaced = |present: bool, clause: &str, allowed: &str| {
            if present {
                self.diagnostics.push(Diagnostic::error(
                    format!("`{clause}` is not allowed on {kind} `{name}`; it belongs on {allowed}"),
                    span,
                ));
            }
        };
        misplaced(!kind.is_act() && d.actor_param.is_some(), "Actor", "acts");
        misplaced(!kind.is_act() && d.recipient_param.is_some(), "Recipient", "acts");
        misplaced(kind != DeclKind::Duty && d.holder_param.is_some(), "Holder", "duties");
        misplaced(kind != DeclKind::Duty && d.claimant_param.is_some(), "Claimant", "duties");
        misplaced(
            kind != DeclKind::PhysicalAct && d.syncs_with.is_some(),
            "Syncs with",
            "physical acts",
        );
        misplaced(
            matches!(kind, DeclKind::Var | DeclKind::Bool | DeclKind::Duty) && d.holds_when.is_some(),
            "Holds when",
            "facts and acts",
        );
        misplaced(!kind.is_act() && d.conditioned_by.is_some(), "Conditioned by", "acts");
        misplaced(kind != DeclKind::Duty && d.violated_when.is_some(), "Violated when", "duties");
        misplaced(!kind.is_act() && !d.creates.is_empty(), "Creates", "acts");
        misplaced(!kind.is_act() && !d.terminates.is_empty(), "Terminates", "acts");
        misplaced(kind != DeclKind::Duty && !d.terminated_by.is_empty(), "Terminated by", "duties");

        if kind == DeclKind::Duty && (d.holder_param.is_none() || d.claimant_param.is_none()) {
            self.error(format!("Duty `{name}` requires Holder and Claimant"), d.name_span);
        }

        if kind == DeclKind::PhysicalAct {
            match d.syncs_with.as_deref() {
                None => self.error(
                    format!("Physical Act `{name}` must synchronise with an act (`Syncs with`)"),
                    span,
                ),
                Some(target) => match self.index.get(target).map(|t| t.kind) {
                    Some(DeclKind::Act) => {}
                    Some(other) => self.error(
                        format!("`{name}` syncs with {other} `{target}`; expected an institutional Act"),
                        span,
                    ),
                    None => self.error(format!("unresolved name `{target}` in `Syncs with`"), span),
                },
            }
        }

        for target in &d.terminated_by {
            match self.index.get(target.as_str()).map(|t| t.kind) {
                Some(k) if k.is_act() => {}
                Some(other) => self.error(
                    format!("`{name}` is terminated by {other} `{target}`; expected an act"),
                    span,
                ),
                None => self.error(format!("unresolved name `{target}` in `Terminated by`"), span),
            }
        }
        if kind == DeclKind::Duty && d.terminated_by.is_empty() {
            self.diagnostics.push(Diagnostic::warning(
                format!("Duty `{name}` has no `Terminated by` clause and cannot be discharged"),
                d.name_span,
            ));
        }

        if d.is_derived() && d.domain != Domain::NoArg {
            self.error(
                format!("derived fact `{name}` cannot be Identified by a domain"),
                span,
            );
        }

        let scope = Scope {
            decl: d,
            actor: kind.is_act() || kind == DeclKind::Duty,
            recipient: match kind {
                DeclKind::Act | DeclKind::PhysicalAct => self.binds_recipient(d),
                DeclKind::Duty => true,
                _ => false,
            },
        };
        for expr in [&d.holds_when, &d.conditioned_by, &d.violated_when]
            .into_iter()
            .flatten()
        {
            if let Some(ty) = self.check_expr(expr, scope) {
                if ty != Ty::Truth {
                    self.error(
                        format!("condition of `{name}` must be a truth value, found {}", ty.name()),
                        pick(expr.span, span),
                    );
                }
            }
        }

        if kind.is_act() {
            for t in d.creates.iter().chain(&d.terminates) {
                self.check_effect_template(t, scope);
            }
        }
    }

    fn check_effect_template(&mut self, t: &InstanceTemplate, scope: Scope<'a>) {
        let span = pick(t.span, scope.decl.span);
        let Some(target) = self.index.get(t.type_name.as_str()).copied() else {
            self.error(format!("unresolved name `{}`", t.type_name), span);
            return;
        };
        match target.kind {
            DeclKind::Duty => {
                match t.args.len() {
                    0 if !scope.recipient => self.error(
                        format!(
                            "duty `{}` created without arguments binds its claimant to Recipient, \
                             but `{}` declares no Recipient",
                            t.type_name, scope.decl.name
                        ),
                        span,
                    ),
                    0 | 2 => {}
                    n => self.error(
                        format!(
                            "duty `{}` takes 0 or 2 arguments (holder, claimant), found {n}",
                            t.type_name
                        ),
                        span,
                    ),
                }
                for a in &t.args {
                    self.check_template_arg(a, None, scope, span);
                }
            }
            k if k.is_fact_type() => {
                if target.is_derived() {
                    self.error(
                        format!("derived fact `{}` is not storable", t.type_name),
                        span,
                    );
                    return;
                }
                self.check_template_arity(t, target, scope, span);
            }
            other => self.error(
                format!("{other} `{}` cannot be created or terminated", t.type_name),
                span,
            ),
        }
    }

    fn check_template_arity(
        &mut self,
        t: &InstanceTemplate,
        target: &Declaration,
        scope: Scope<'a>,
        span: Span,
    ) {
        let arity = target.domain.arity();
        if t.args.len() != arity {
            self.error(
                format!(
                    "`{}` takes {arity} argument(s), found {}",
                    t.type_name,
                    t.args.len()
                ),
                span,
            );
            return;
        }
        for a in &t.args {
            self.check_template_arg(a, Some(target.domain), scope, span);
        }
    }

    fn check_template_arg(
        &mut self,
        arg: &TemplateArg,
        domain: Option<Domain>,
        scope: Scope<'a>,
        span: Span,
    ) {
        match arg {
            TemplateArg::Actor if !scope.actor => self.error(
                format!("Actor is not bound in `{}`", scope.decl.name),
                span,
            ),
            TemplateArg::Recipient if !scope.recipient => self.error(
                format!("Recipient is used but `{}` declares no Recipient", scope.decl.name),
                span,
            ),
            TemplateArg::Lit(Literal::Bool(_)) => {
                self.error("truth values cannot identify instances".to_string(), span)
            }
            TemplateArg::Lit(l) => {
                if let Some(domain) = domain {
                    if !l.fits(domain) {
                        self.error(format!("literal {l} does not fit domain {domain:?}"), span);
                    }
                }
            }
            _ => {}
        }
    }

    fn check_expr(&mut self, e: &Expr, scope: Scope<'a>) -> Option<Ty> {
        let span = pick(e.span, scope.decl.span);
        match &e.kind {
            ExprKind::Lit(Literal::Bool(_)) => Some(Ty::Truth),
            ExprKind::Lit(Literal::Int(_)) => Some(Ty::Int),
            ExprKind::Lit(Literal::Str(_)) => Some(Ty::Str),
            ExprKind::Actor => {
                if scope.actor {
                    Some(Ty::Party)
                } else {
                    self.error(format!("Actor is not bound in `{}`", scope.decl.name), span);
                    None
                }
            }
            ExprKind::Recipient => {
                if scope.recipient {
                    Some(Ty::Party)
                } else {
                    self.error(
                        format!("Recipient is used but `{}` declares no Recipient", scope.decl.name),
                        span,
                    );
                    None
                }
            }
            ExprKind::FactRef { name, args } => {
                let target = self.resolve_fact(name, span)?;
                if args.is_empty() {
                    return match (target.kind, target.domain) {
                        (DeclKind::Var, Domain::Int) => Some(Ty::Int),
                        (DeclKind::Var, Domain::String) => Some(Ty::Str),
                        (_, Domain::NoArg) => Some(Ty::Truth),
                        _ => {
                            self.error(format!("`{name}` needs 1 argument"), span);
                            None
                        }
                    };
                }
                if args.len() != target.domain.arity() {
                    self.error(
                        format!(
                            "`{name}` takes {} argument(s), found {}",
                            target.domain.arity(),
                            args.len()
                        ),
                        span,
                    );
                    return None;
                }
                let mut ok = true;
                for a in args {
                    match self.check_expr(a, scope) {
                        Some(ty) if ty.fits(target.domain) => {}
                        Some(ty) => {
                            ok = false;
                            self.error(
                                format!(
                                    "argument of `{name}` must match domain {:?}, found {}",
                                    target.domain,
                                    ty.name()
                                ),
                                pick(a.span, span),
                            );
                        }
                        None => ok = false,
                    }
                }
                ok.then_some(Ty::Truth)
            }
            ExprKind::Holds(t) => {
                let target = self.resolve_fact(&t.type_name, span)?;
                self.check_template_arity(t, target, scope, span);
                Some(Ty::Truth)
            }
            ExprKind::Not(inner) => {
                let ty = self.check_expr(inner, scope)?;
                self.expect_ty(ty, Ty::Truth, "Not", span)?;
                Some(Ty::Truth)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.check_expr(lhs, scope);
                let r = self.check_expr(rhs, scope);
                let (l, r) = (l?, r?);
                let sym = op.symbol();
                match op {
                    BinOp::And | BinOp::Or => {
                        self.expect_ty(l, Ty::Truth, sym, span)?;
                        self.expect_ty(r, Ty::Truth, sym, span)?;
                        Some(Ty::Truth)
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        self.expect_ty(l, Ty::Int, sym, span)?;
                        self.expect_ty(r, Ty::Int, sym, span)?;
                        Some(Ty::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Ge | BinOp::Gt => {
                        self.expect_ty(l, Ty::Int, sym, span)?;
                        self.expect_ty(r, Ty::Int, sym, span)?;
                        Some(Ty::Truth)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        let comparable = match (l, r) {
                            (Ty::Truth, _) | (_, Ty::Truth) => false,
                            (Ty::Party, _) | (_, Ty::Party) => true,
                            (a, b) => a == b,
                        };
                        if comparable {
                            Some(Ty::Truth)
                        } else {
                            self.error(
                                format!("cannot compare {} with {} using `{sym}`", l.name(), r.name()),
                                span,
                            );
                            None
                        }
                    }
                }
            }
        }
    }

    fn expect_ty(&mut self, found: Ty, expected: Ty, op: &str, span: Span) -> Option<()> {
        if found == expected {
            Some(())
        } else {
            self.error(
                format!("`{op}` expects {} operands, found {}", expected.name(), found.name()),
                span,
            );
            None
        }
    }

    fn resolve_fact(&mut self, name: &str, span: Span) -> Option<&'a Declaration> {
        match self.index.get(name).copied() {
            None => {
                self.error(format!("unresolved name `{name}`"), span);
                None
            }
            Some(d) if d.kind.is_fact_type() => Some(d),
            Some(d) => {
                self.error(
                    format!("{} `{name}` cannot be used in an expression; only facts can", d.kind),
                    span,
                );
                None
            }
        }
    }

    fn check_derivation_cycles(&mut self) {
        let derived: Vec<&Declaration> =
            self.spec.declarations.iter().filter(|d| d.is_derived()).collect();
        let deps: HashMap<&str, Vec<String>> = derived
            .iter()
            .map(|d| {
                let mut refs = Vec::new();
                d.holds_when.as_ref().expect("derived").walk(&mut |e| match &e.kind {
                    ExprKind::FactRef { name, .. } => refs.push(name.clone()),
                    ExprKind::Holds(t) => refs.push(t.type_name.clone()),
                    _ => {}
                });
                refs.retain(|r| self.index.get(r.as_str()).is_some_and(|t| t.is_derived()));
                (d.name.as_str(), refs)
            })
            .collect();

        fn reaches(deps: &HashMap<&str, Vec<String>>, from: &str, goal: &str, seen: &mut HashSet<String>) -> bool {
            for next in deps.get(from).into_iter().flatten() {
                if next == goal {
                    return true;
                }
                if seen.insert(next.clone()) && reaches(deps, next, goal, seen) {
                    return true;
                }
            }
            false
        }

        for d in derived {
            if reaches(&deps, &d.name, &d.name, &mut HashSet::new()) {
                self.error(
                    format!("derived fact `{}` depends on itself", d.name),
                    d.name_span,
                );
            }
        }
    }

    fn check_statement(&mut self, stmt: &Statement) {
        let span = stmt.span;
        let name = stmt.kind.type_name();
        let Some(target) = self.index.get(name).copied() else {
            self.error(format!("unresolved name `{name}`"), span);
            return;
        };
        if !target.kind.is_fact_type() {
            self.error(
                format!("statements apply to fact types, not {} `{name}`", target.kind),
                span,
            );
            return;
        }
        if target.is_derived() {
            self.error(format!("derived fact `{name}` is not storable"), span);
            return;
        }
        match &stmt.kind {
            StatementKind::Create { args, .. } | StatementKind::Terminate { args, .. } => {
                let arity = target.domain.arity();
                if args.len() != arity {
                    self.error(
                        format!("`{name}` takes {arity} argument(s), found {}", args.len()),
                        span,
                    );
                } else if let Some(bad) = args.iter().find(|a| !a.fits(target.domain)) {
                    self.error(
                        format!("literal {bad} does not fit domain {:?} of `{name}`", target.domain),
                        span,
                    );
                }
            }
            StatementKind::Assign { value, .. } => match target.kind {
                DeclKind::Var if value.fits(target.domain) => {}
                DeclKind::Bool if matches!(value, Literal::Bool(_)) => {}
                DeclKind::Var | DeclKind::Bool => self.error(
                    format!("value {value} does not fit `{name}`"),
                    span,
                ),
                _ => self.error(
                    format!("assignment targets only Var and Bool types, not Fact `{name}`"),
                    span,
                ),
            },
        }
    }
}
