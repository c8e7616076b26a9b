//! Three-valued evaluation of expressions against a fact assignment.

use std::collections::BTreeMap;
use std::ops::Bound;

use super::logic::TruthValue;
use super::model::Model;
use super::types::{Binding, EvalError, Instance};
use crate::lang::{BinOp, DeclKind, Domain, Expr, ExprKind, InstanceTemplate, Literal, Openness, TemplateArg};

/// Result of evaluating a sub-expression. `None` payloads are unknown values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Truth(TruthValue),
    Int(Option<i64>),
    Str(Option<String>),
    Party(Literal),
}

impl Value {
    fn truth(self) -> Result<TruthValue, EvalError> {
        match self {
            Value::Truth(t) => Ok(t),
            other => Err(EvalError::IllTyped(format!("expected a truth value, found {other:?}"))),
        }
    }

    fn int(self) -> Result<Option<i64>, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            Value::Party(Literal::Int(n)) => Ok(Some(n)),
            other => Err(EvalError::IllTyped(format!("expected an integer, found {other:?}"))),
        }
    }

    /// Identifier value, if known.
    fn literal(self) -> Result<Option<Literal>, EvalError> {
        match self {
            Value::Int(n) => Ok(n.map(Literal::Int)),
            Value::Str(s) => Ok(s.map(Literal::Str)),
            Value::Party(l) => Ok(Some(l)),
            Value::Truth(_) => Err(EvalError::IllTyped("truth value used as identifier".into())),
        }
    }
}

/// Read-only view used for evaluation.
pub(crate) struct Evaluator<'a> {
    pub model: &'a Model,
    pub facts: &'a BTreeMap<Instance, TruthValue>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a Model, facts: &'a BTreeMap<Instance, TruthValue>) -> Self {
        Evaluator { model, facts }
    }

    /// Instances of one type that have an explicit assignment.
    pub fn assigned(&self, type_name: &str) -> impl Iterator<Item = (&'a Instance, TruthValue)> + 'a {
        let start = Instance::new(type_name, None);
        let name = type_name.to_string();
        self.facts
            .range((Bound::Included(start), Bound::Unbounded))
            .take_while(move |(k, _)| k.type_name == name)
            .map(|(k, v)| (k, *v))
    }

    /// The argument of the instance a single-instance type currently holds.
    pub fn held(&self, type_name: &str) -> Option<&'a Instance> {
        self.assigned(type_name)
            .find(|(_, v)| *v == TruthValue::True)
            .map(|(k, _)| k)
    }

    pub fn truth(&self, inst: &Instance) -> TruthValue {
        let Some(decl) = self.model.decl(&inst.type_name) else {
            return TruthValue::Unknown;
        };
        if decl.is_derived() {
            let expr = decl.holds_when.as_ref().expect("derived fact has a condition");
            return self
                .eval_truth(expr, &Binding::default())
                .unwrap_or(TruthValue::Unknown);
        }
        if let Some(v) = self.facts.get(inst) {
            return *v;
        }
        if decl.kind.is_single_instance() && self.held(&inst.type_name).is_some() {
            return TruthValue::False;
        }
        match decl.effective_openness() {
            Openness::Open => TruthValue::Unknown,
            Openness::Closed => TruthValue::False,
        }
    }

    pub fn eval_truth(&self, e: &Expr, b: &Binding) -> Result<TruthValue, EvalError> {
        self.eval(e, b)?.truth()
    }

    pub fn resolve_arg(arg: &TemplateArg, b: &Binding) -> Result<Literal, EvalError> {
        match arg {
            TemplateArg::Lit(l) => Ok(l.clone()),
            TemplateArg::Actor => b.actor.clone().ok_or(EvalError::UnboundPlaceholder("Actor")),
            TemplateArg::Recipient => b
                .recipient
                .clone()
                .ok_or(EvalError::UnboundPlaceholder("Recipient")),
        }
    }

    pub fn resolve_template(t: &InstanceTemplate, b: &Binding) -> Result<Instance, EvalError> {
        let arg = match t.args.as_slice() {
            [] => None,
            [a] => Some(Self::resolve_arg(a, b)?),
            _ => return Err(EvalError::IllTyped(format!("`{}` takes at most 1 argument", t.type_name))),
        };
        Ok(Instance::new(&t.type_name, arg))
    }

    pub fn eval(&self, e: &Expr, b: &Binding) -> Result<Value, EvalError> {
        Ok(match &e.kind {
            ExprKind::Lit(Literal::Bool(v)) => Value::Truth((*v).into()),
            ExprKind::Lit(Literal::Int(n)) => Value::Int(Some(*n)),
            ExprKind::Lit(Literal::Str(s)) => Value::Str(Some(s.clone())),
            ExprKind::Actor => Value::Party(b.actor.clone().ok_or(EvalError::UnboundPlaceholder("Actor"))?),
            ExprKind::Recipient => Value::Party(
                b.recipient
                    .clone()
                    .ok_or(EvalError::UnboundPlaceholder("Recipient"))?,
            ),
            ExprKind::FactRef { name, args } => self.fact_ref(name, args, b)?,
            ExprKind::Holds(t) => Value::Truth(self.truth(&Self::resolve_template(t, b)?)),
            ExprKind::Not(inner) => Value::Truth(!self.eval_truth(inner, b)?),
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, b)?,
        })
    }

    fn fact_ref(&self, name: &str, args: &[Expr], b: &Binding) -> Result<Value, EvalError> {
        let decl = self
            .model
            .decl(name)
            .ok_or_else(|| EvalError::IllTyped(format!("unknown fact `{name}`")))?;
        match (args, decl.kind, decl.domain) {
            ([], DeclKind::Var, Domain::Int) => Ok(Value::Int(match self.held(name) {
                Some(Instance { arg: Some(Literal::Int(n)), .. }) => Some(*n),
                _ => None,
            })),
            ([], DeclKind::Var, Domain::String) => Ok(Value::Str(match self.held(name) {
                Some(Instance { arg: Some(Literal::Str(s)), .. }) => Some(s.clone()),
                _ => None,
            })),
            ([], _, Domain::NoArg) => Ok(Value::Truth(self.truth(&Instance::unit(name)))),
            ([arg], _, _) => match self.eval(arg, b)?.literal()? {
                Some(l) => Ok(Value::Truth(self.truth(&Instance::new(name, Some(l))))),
                None => Ok(Value::Truth(TruthValue::Unknown)),
            },
            _ => Err(EvalError::IllTyped(format!("bad reference to `{name}`"))),
        }
    }

    fn binary(&self, op: BinOp, lhs: &Expr, rhs: &Expr, b: &Binding) -> Result<Value, EvalError> {
        match op {
            BinOp::And => {
                let l = self.eval_truth(lhs, b)?;
                if l == TruthValue::False {
                    return Ok(Value::Truth(l));
                }
                Ok(Value::Truth(l.and(self.eval_truth(rhs, b)?)))
            }
            BinOp::Or => {
                let l = self.eval_truth(lhs, b)?;
                if l == TruthValue::True {
                    return Ok(Value::Truth(l));
                }
                Ok(Value::Truth(l.or(self.eval_truth(rhs, b)?)))
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                let l = self.eval(lhs, b)?.int()?;
                let r = self.eval(rhs, b)?.int()?;
                let v = match (l, r) {
                    (Some(l), Some(r)) => match op {
                        BinOp::Add => l.checked_add(r),
                        BinOp::Sub => l.checked_sub(r),
                        _ => l.checked_mul(r),
                    },
                    _ => None,
                };
                Ok(Value::Int(v))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let l = self.eval(lhs, b)?.int()?;
                let r = self.eval(rhs, b)?.int()?;
                Ok(Value::Truth(match (l, r) {
                    (Some(l), Some(r)) => match op {
                        BinOp::Lt => l < r,
                        BinOp::Le => l <= r,
                        BinOp::Gt => l > r,
                        _ => l >= r,
                    }
                    .into(),
                    _ => TruthValue::Unknown,
                }))
            }
            BinOp::Eq | BinOp::Ne => {
                let l = self.eval(lhs, b)?.literal()?;
                let r = self.eval(rhs, b)?.literal()?;
                Ok(Value::Truth(match (l, r) {
                    (Some(l), Some(r)) => ((l == r) == (op == BinOp::Eq)).into(),
                    _ => TruthValue::Unknown,
                }))
            }
        }
    }
}
