//! Canonical source rendering. Output reparses to the same tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(true) => f.write_str("True"),
            Literal::Bool(false) => f.write_str("False"),
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Str(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => f.write_char(c)?,
                    }
                }
                f.write_char('"')
            }
        }
    }
}

impl Display for TemplateArg {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TemplateArg::Lit(l) => l.fmt(f),
            TemplateArg::Actor => f.write_str("Actor"),
            TemplateArg::Recipient => f.write_str("Recipient"),
        }
    }
}

fn write_args<T: Display>(f: &mut Formatter<'_>, args: &[T]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        a.fmt(f)?;
    }
    f.write_char(')')
}

impl Display for InstanceTemplate {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&self.type_name)?;
        write_args(f, &self.args)
    }
}

const NOT_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 10;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Not(_) => NOT_PRECEDENCE,
        _ => ATOM_PRECEDENCE,
    }
}

fn write_expr(f: &mut Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    let parens = precedence(e) < min;
    if parens {
        f.write_char('(')?;
    }
    match &e.kind {
        ExprKind::Lit(l) => l.fmt(f)?,
        ExprKind::FactRef { name, args } => {
            f.write_str(name)?;
            write_args(f, args)?;
        }
        ExprKind::Holds(t) => write!(f, "Holds({t})")?,
        ExprKind::Actor => f.write_str("Actor")?,
        ExprKind::Recipient => f.write_str("Recipient")?,
        ExprKind::Not(inner) => {
            f.write_str("Not ")?;
            write_expr(f, inner, NOT_PRECEDENCE)?;
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // comparisons do not chain, so both sides need a tighter operand
            let lhs_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(f, lhs, lhs_min)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, rhs, p + 1)?;
        }
    }
    if parens {
        f.write_char(')')?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StatementKind::Create { type_name, args } => {
                write!(f, "+{type_name}")?;
                write_args(f, args)?;
            }
            StatementKind::Terminate { type_name, args } => {
                write!(f, "-{type_name}")?;
                write_args(f, args)?;
            }
            StatementKind::Assign { type_name, value } => write!(f, "={type_name}({value})")?,
        }
        f.write_char('.')
    }
}

fn write_list<T: Display>(f: &mut Formatter<'_>, keyword: &str, items: &[T]) -> fmt::Result {
    if items.is_empty() {
        return Ok(());
    }
    write!(f, "\n  {keyword} ")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        item.fmt(f)?;
    }
    Ok(())
}

impl Display for Declaration {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.openness {
            Some(Openness::Open) => f.write_str("Open ")?,
            Some(Openness::Closed) => f.write_str("Closed ")?,
            None => {}
        }
        write!(f, "{} {}", self.kind.keyword(), self.name)?;
        match self.domain {
            Domain::Int => f.write_str(" Identified by Int")?,
            Domain::String => f.write_str(" Identified by String")?,
            Domain::NoArg => {}
        }
        let params = [
            ("Extends", &self.extends),
            ("Actor", &self.actor_param),
            ("Recipient", &self.recipient_param),
            ("Holder", &self.holder_param),
            ("Claimant", &self.claimant_param),
            ("Syncs with", &self.syncs_with),
        ];
        for (kw, value) in params {
            if let Some(v) = value {
                write!(f, " {kw} {v}")?;
            }
        }
        let exprs = [
            ("Holds when", &self.holds_when),
            ("Conditioned by", &self.conditioned_by),
            ("Violated when", &self.violated_when),
        ];
        for (kw, value) in exprs {
            if let Some(e) = value {
                write!(f, "\n  {kw} {e}")?;
            }
        }
        write_list(f, "Creates", &self.creates)?;
        write_list(f, "Terminates", &self.terminates)?;
        write_list(f, "Terminated by", &self.terminated_by)?;
        f.write_char('.')
    }
}

impl Display for Specification {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        if !self.declarations.is_empty() && !self.statements.is_empty() {
            writeln!(f)?;
        }
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}
