use normcase_core::lang::*;
use proptest::prelude::*;

const NAMES: &[&str] = &["a", "b-c", "income", "x1", "has-partner", "d_2", "q"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(NAMES).prop_map(str::to_string)
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<bool>().prop_map(Literal::Bool),
        any::<i64>().prop_map(Literal::Int),
        "[a-z \"\\\\\n\t]{0,6}".prop_map(Literal::Str),
    ]
}

fn id_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        (-1000i64..1000).prop_map(Literal::Int),
        "[a-z]{1,4}".prop_map(Literal::Str),
    ]
}

fn template_arg() -> impl Strategy<Value = TemplateArg> {
    prop_oneof![
        id_literal().prop_map(TemplateArg::Lit),
        Just(TemplateArg::Actor),
        Just(TemplateArg::Recipient),
    ]
}

fn template() -> impl Strategy<Value = InstanceTemplate> {
    (name(), prop::collection::vec(template_arg(), 0..3)).prop_map(|(type_name, args)| {
        InstanceTemplate {
            type_name,
            args,
            span: Span::default(),
        }
    })
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop::sample::select(vec![
        BinOp::Or,
        BinOp::And,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Ge,
        BinOp::Gt,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
    ])
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::lit),
        name().prop_map(Expr::name),
        template().prop_map(|t| Expr::new(ExprKind::Holds(t))),
        Just(Expr::new(ExprKind::Actor)),
        Just(Expr::new(ExprKind::Recipient)),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (name(), prop::collection::vec(inner, 1..3))
                .prop_map(|(name, args)| Expr::new(ExprKind::FactRef { name, args })),
        ]
    })
}

fn declaration() -> impl Strategy<Value = Declaration> {
    let kind = prop::sample::select(vec![
        DeclKind::Fact,
        DeclKind::Var,
        DeclKind::Bool,
        DeclKind::Act,
        DeclKind::PhysicalAct,
        DeclKind::Duty,
    ]);
    let opt_name = || prop::option::of(name());
    let opt_expr = || prop::option::of(expr());
    (
        kind,
        name(),
        prop::option::of(prop::sample::select(vec![Openness::Open, Openness::Closed])),
        prop::sample::select(vec![Domain::NoArg, Domain::Int, Domain::String]),
        (opt_name(), opt_name(), opt_name(), opt_name()),
        (opt_expr(), opt_expr(), opt_expr()),
        (
            prop::collection::vec(template(), 0..3),
            prop::collection::vec(template(), 0..3),
            prop::collection::vec(name(), 0..3),
        ),
    )
        .prop_map(
            |(kind, name, openness, domain, (p1, p2, p3, ext), (e1, e2, e3), (cr, te, tb))| {
                let mut d = Declaration::new(kind, name);
                if kind.is_fact_type() {
                    d.openness = openness;
                }
                if matches!(kind, DeclKind::Fact | DeclKind::Var) {
                    d.domain = domain;
                }
                d.extends = ext;
                match kind {
                    DeclKind::Act | DeclKind::PhysicalAct => {
                        d.actor_param = p1;
                        d.recipient_param = p2;
                        if kind == DeclKind::PhysicalAct {
                            d.syncs_with = p3;
                        }
                        d.holds_when = e1;
                        d.conditioned_by = e2;
                        d.creates = cr;
                        d.terminates = te;
                    }
                    DeclKind::Duty => {
                        d.holder_param = Some(p1.unwrap_or_else(|| "h".into()));
                        d.claimant_param = Some(p2.unwrap_or_else(|| "c".into()));
                        d.violated_when = e3;
                        d.terminated_by = tb;
                    }
                    DeclKind::Fact => d.holds_when = e1,
                    DeclKind::Var | DeclKind::Bool => {}
                }
                d
            },
        )
}

fn statement() -> impl Strategy<Value = Statement> {
    let args = || prop::collection::vec(id_literal(), 0..2);
    prop_oneof![
        (name(), args()).prop_map(|(type_name, args)| StatementKind::Create { type_name, args }),
        (name(), args()).prop_map(|(type_name, args)| StatementKind::Terminate { type_name, args }),
        (name(), literal()).prop_map(|(type_name, value)| StatementKind::Assign { type_name, value }),
    ]
    .prop_map(|kind| Statement {
        kind,
        span: Span::default(),
    })
}

fn specification() -> impl Strategy<Value = Specification> {
    (
        prop::collection::vec(declaration(), 0..6),
        prop::collection::vec(statement(), 0..4),
    )
        .prop_map(|(declarations, statements)| Specification {
            declarations,
            statements,
        })
}

proptest! {
    #[test]
    fn printed_specs_reparse_to_the_same_tree(spec in specification()) {
        let text = spec.to_string();
        let parsed = parse(&text).map_err(|d| TestCaseError::fail(format!("{}\n{text}", render("gen", &d))))?;
        prop_assert_eq!(parsed.without_spans(), spec);
    }

    #[test]
    fn printed_exprs_reparse(e in expr()) {
        let text = e.to_string();
        let mut parsed = parse_expr(&text).map_err(|d| TestCaseError::fail(format!("{:?}: {text}", d)))?;
        parsed.clear_spans();
        prop_assert_eq!(parsed, e);
    }

    #[test]
    fn flattening_is_idempotent(spec in specification()) {
        if let Ok(once) = flatten_extensions(&spec) {
            prop_assert!(once.declarations.iter().all(|d| d.extends.is_none()));
            prop_assert_eq!(flatten_extensions(&once).unwrap(), once);
        }
    }

    #[test]
    fn diagnostics_lie_within_the_source(spec in specification(), cut in 0usize..400) {
        // truncation produces arbitrary broken input
        let text = spec.to_string();
        let mut end = cut.min(text.len());
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        let src = &text[..end];
        let diagnostics = match parse(src) {
            Err(d) => d,
            Ok(s) => validate(&s).diagnostics,
        };
        let lines = src.lines().count().max(1) + 1;
        for d in diagnostics {
            prop_assert!(d.span.is_known(), "{d:?}");
            prop_assert!((d.span.start.line as usize) <= lines, "{d:?} in {src:?}");
            prop_assert!(d.span.start.offset <= src.len(), "{d:?}");
        }
    }
}

#[test]
fn tokenizes_var_declaration() {
    let kinds: Vec<TokenKind> = tokenize("Var income Identified by Int.")
        .unwrap()
        .into_iter()
        .map(|t| t.kind)
        .collect();
    assert_eq!(
        kinds,
        vec![
            TokenKind::Keyword(Keyword::Var),
            TokenKind::Ident("income".into()),
            TokenKind::Keyword(Keyword::IdentifiedBy),
            TokenKind::Keyword(Keyword::Int),
            TokenKind::Dot,
        ]
    );
    assert!(tokenize("").unwrap().is_empty());
    let err = tokenize("\"unclosed").unwrap_err();
    assert_eq!(err.span.start.column, 1);
}

#[test]
fn parses_var_and_assign() {
    let spec = parse("Var income-threshold Identified by Int. =income-threshold(1500).").unwrap();
    assert_eq!(spec.declarations.len(), 1);
    assert_eq!(spec.declarations[0].domain, Domain::Int);
    assert_eq!(
        spec.statements[0].kind,
        StatementKind::Assign {
            type_name: "income-threshold".into(),
            value: Literal::Int(1500)
        }
    );
    let empty = parse("").unwrap();
    assert!(empty.declarations.is_empty() && empty.statements.is_empty());
}

#[test]
fn duty_needs_holder_and_claimant() {
    let errs = parse("Duty d Holder h.").unwrap_err();
    assert!(errs
        .iter()
        .any(|d| d.message.contains("requires Holder and Claimant")));
}

#[test]
fn validator_rejects_mutants_of_the_fixture() {
    let fixture = normcase_core::fixtures::QUITTANCE;
    assert!(validate(&parse(fixture).unwrap()).is_ok());

    // each mutant breaks one declaration invariant
    let mutants = [
        ("Syncs with apply-for-quittance.", "Syncs with process-duty."),
        ("Terminated by process-application.", "Terminated by quittance-granted."),
        ("Creates quittance-granted.", "Creates decision-made."),
        ("Creates application-processed.", "Creates unknown-duty(Actor)."),
        ("=capital-threshold(12000).", "=application-submitted(1)."),
        ("Fact quittance-denied.", "Fact quittance-denied Violated when True."),
        ("Conditioned by applicant-is-married", "Conditioned by applicant-income"),
    ];
    for (from, to) in mutants {
        assert!(fixture.contains(from), "{from}");
        let src = fixture.replacen(from, to, 1);
        let report = validate(&parse(&src).unwrap());
        assert!(!report.is_ok(), "mutant accepted: {to}");
    }
}

#[test]
fn extension_conjoins_conditions() {
    let spec = parse(
        "Fact a. Fact b. Act x Holds when Holds(a). Act y Extends x Holds when Holds(b).",
    )
    .unwrap();
    let flat = flatten_extensions(&spec).unwrap();
    let x = flat.declaration("x").unwrap();
    assert_eq!(x.holds_when.as_ref().unwrap().to_string(), "Holds(a) && Holds(b)");
}
