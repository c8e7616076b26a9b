//! Merges `Extends` declarations into their base declarations.
//!
//! Extensions are monotone: clause lists are appended after the base's
//! entries and condition clauses are conjoined (`base && extension`). A chain
//! `C Extends B`, `B Extends A` merges both into `A`, applying extensions in
//! file order. Parameter clauses (Actor, Syncs with, ...) may be added by an
//! extension but never changed.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::diagnostic::Diagnostic;

pub fn flatten_extensions(spec: &Specification) -> Result<Specification, Vec<Diagnostic>> {
    let index: HashMap<&str, usize> = spec
        .declarations
        .iter()
        .enumerate()
        .map(|(i, d)| (d.name.as_str(), i))
        .collect();

    let mut diagnostics = Vec::new();
    // root declaration index for each extension, in file order
    let mut merges: Vec<(usize, usize)> = Vec::new();

    for (i, decl) in spec.declarations.iter().enumerate() {
        if decl.extends.is_none() {
            continue;
        }
        let mut seen = HashSet::from([i]);
        let mut current = i;
        let root = loop {
            let Some(base) = spec.declarations[current].extends.as_deref() else {
                break Some(current);
            };
            match index.get(base) {
                None => {
                    diagnostics.push(Diagnostic::error(
                        format!(
                            "`{}` extends unknown declaration `{base}`",
                            spec.declarations[current].name
                        ),
                        spec.declarations[current].span,
                    ));
                    break None;
                }
                Some(&next) if !seen.insert(next) => {
                    diagnostics.push(Diagnostic::error(
                        format!("extension cycle through `{}`", decl.name),
                        decl.span,
                    ));
                    break None;
                }
                Some(&next) => current = next,
            }
        };
        if let Some(root) = root {
            merges.push((i, root));
        }
    }
    if !diagnostics.is_empty() {
        // a cycle is found once per member; report each distinct message once
        diagnostics.dedup_by(|a, b| a.message == b.message);
        return Err(diagnostics);
    }

    let mut out: Vec<Option<Declaration>> =
        spec.declarations.iter().cloned().map(Some).collect();
    for &(ext, root) in &merges {
        let extension = out[ext].take().expect("extension merged twice");
        let base = out[root].as_mut().expect("root is never an extension");
        if let Err(d) = merge_into(base, extension) {
            diagnostics.push(d);
        }
    }
    if !diagnostics.is_empty() {
        return Err(diagnostics);
    }

    Ok(Specification {
        declarations: out.into_iter().flatten().collect(),
        statements: spec.statements.clone(),
    })
}

fn merge_into(base: &mut Declaration, ext: Declaration) -> Result<(), Diagnostic> {
    if base.kind != ext.kind {
        return Err(Diagnostic::error(
            format!(
                "{} `{}` cannot extend {} `{}`",
                ext.kind, ext.name, base.kind, base.name
            ),
            ext.span,
        ));
    }
    if ext.domain != Domain::NoArg && ext.domain != base.domain {
        return Err(Diagnostic::error(
            format!("extension `{}` changes the identifier domain of `{}`", ext.name, base.name),
            ext.span,
        ));
    }
    if ext.openness.is_some() && ext.openness != base.openness {
        return Err(Diagnostic::error(
            format!("extension `{}` changes the openness of `{}`", ext.name, base.name),
            ext.span,
        ));
    }

    let params = [
        ("Actor", &mut base.actor_param, ext.actor_param),
        ("Recipient", &mut base.recipient_param, ext.recipient_param),
        ("Holder", &mut base.holder_param, ext.holder_param),
        ("Claimant", &mut base.claimant_param, ext.claimant_param),
        ("Syncs with", &mut base.syncs_with, ext.syncs_with),
    ];
    for (what, slot, value) in params {
        match (slot.as_ref(), value) {
            (_, None) => {}
            (None, Some(v)) => *slot = Some(v),
            (Some(old), Some(v)) if *old == v => {}
            (Some(old), Some(v)) => {
                return Err(Diagnostic::error(
                    format!(
                        "extension `{}` sets `{what} {v}` but `{}` already has `{what} {old}`",
                        ext.name, base.name
                    ),
                    ext.span,
                ))
            }
        }
    }

    for (slot, value) in [
        (&mut base.holds_when, ext.holds_when),
        (&mut base.conditioned_by, ext.conditioned_by),
        (&mut base.violated_when, ext.violated_when),
    ] {
        if let Some(e) = value {
            *slot = Some(match slot.take() {
                Some(existing) => Expr::and(existing, e),
                None => e,
            });
        }
    }

    base.creates.extend(ext.creates);
    base.terminates.extend(ext.terminates);
    base.terminated_by.extend(ext.terminated_by);
    Ok(())
}
