//! Static checks run before search, so malformed documents (typically
//! externally generated ones) fail with a named reason instead of an empty
//! search space.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::{Atom, Domain, Problem, TypedName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("undeclared predicate `{predicate}` in {context}")]
    UndeclaredPredicate { predicate: String, context: String },
    #[error("`{predicate}` takes {expected} arguments, got {found} in {context}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
        context: String,
    },
    #[error("unknown term `{term}` in {context}")]
    UnknownTerm { term: String, context: String },
    #[error("unknown type `{ty}` in {context}")]
    UnknownType { ty: String, context: String },
    #[error("`{term}` of type {found} where {expected} is required in {context}")]
    TypeMismatch {
        term: String,
        expected: String,
        found: String,
        context: String,
    },
    #[error("action `{action}` both adds and deletes {atom}")]
    OverlappingEffects { action: String, atom: String },
    #[error("problem is for domain `{found}`, not `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

fn unique<'a>(names: impl IntoIterator<Item = &'a str>, what: &'static str) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(ValidationError::Duplicate {
                what,
                name: name.to_string(),
            });
        }
    }
    Ok(())
}

fn check_type(domain: &Domain, ty: &str, context: &str) -> Result<(), ValidationError> {
    if ty == "object" || domain.types.iter().any(|t| t.name == ty) {
        Ok(())
    } else {
        Err(ValidationError::UnknownType {
            ty: ty.to_string(),
            context: context.to_string(),
        })
    }
}

/// Check an atom against declarations; `terms` maps usable names to types.
fn check_atom(domain: &Domain, atom: &Atom, terms: &BTreeMap<&str, &str>, context: &str) -> Result<(), ValidationError> {
    let decl = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| ValidationError::UndeclaredPredicate {
            predicate: atom.predicate.clone(),
            context: context.to_string(),
        })?;
    if decl.params.len() != atom.args.len() {
        return Err(ValidationError::Arity {
            predicate: atom.predicate.clone(),
            expected: decl.params.len(),
            found: atom.args.len(),
            context: context.to_string(),
        });
    }
    for (arg, param) in atom.args.iter().zip(&decl.params) {
        let ty = terms.get(arg.as_str()).ok_or_else(|| ValidationError::UnknownTerm {
            term: arg.clone(),
            context: context.to_string(),
        })?;
        if !domain.is_subtype(ty, param.type_name()) {
            return Err(ValidationError::TypeMismatch {
                term: arg.clone(),
                expected: param.type_name().to_string(),
                found: ty.to_string(),
                context: context.to_string(),
            });
        }
    }
    Ok(())
}

fn term_types<'a>(lists: impl IntoIterator<Item = &'a [TypedName]>) -> BTreeMap<&'a str, &'a str> {
    lists
        .into_iter()
        .flatten()
        .map(|t| (t.name.as_str(), t.type_name()))
        .collect()
}

pub fn validate_domain(domain: &Domain) -> Result<(), ValidationError> {
    unique(domain.types.iter().map(|t| t.name.as_str()), "type")?;
    unique(domain.predicates.iter().map(|p| p.name.as_str()), "predicate")?;
    unique(domain.actions.iter().map(|a| a.name.as_str()), "action")?;
    unique(domain.constants.iter().map(|c| c.name.as_str()), "constant")?;
    for t in &domain.types {
        check_type(domain, t.type_name(), &format!("type `{}`", t.name))?;
        if t.ty.is_some() && domain.is_subtype(t.type_name(), &t.name) {
            return Err(ValidationError::UnknownType {
                ty: t.name.clone(),
                context: "cyclic type hierarchy".into(),
            });
        }
    }
    for c in &domain.constants {
        check_type(domain, c.type_name(), &format!("constant `{}`", c.name))?;
    }
    for p in &domain.predicates {
        let context = format!("predicate `{}`", p.name);
        unique(p.params.iter().map(|x| x.name.as_str()), "parameter")?;
        for param in &p.params {
            check_type(domain, param.type_name(), &context)?;
        }
    }
    for action in &domain.actions {
        let context = format!("action `{}`", action.name);
        unique(action.parameters.iter().map(|x| x.name.as_str()), "parameter")?;
        for param in &action.parameters {
            check_type(domain, param.type_name(), &context)?;
        }
        let terms = term_types([action.parameters.as_slice(), domain.constants.as_slice()]);
        for literal in &action.precondition {
            check_atom(domain, &literal.atom, &terms, &context)?;
        }
        for atom in action.add.iter().chain(&action.delete) {
            check_atom(domain, atom, &terms, &context)?;
        }
        if let Some(atom) = action.add.iter().find(|a| action.delete.contains(a)) {
            return Err(ValidationError::OverlappingEffects {
                action: action.name.clone(),
                atom: atom.to_string(),
            });
        }
    }
    Ok(())
}

/// Check a problem against its (already valid) domain.
pub fn validate_problem(domain: &Domain, problem: &Problem) -> Result<(), ValidationError> {
    if problem.domain != domain.name {
        return Err(ValidationError::DomainMismatch {
            expected: domain.name.clone(),
            found: problem.domain.clone(),
        });
    }
    unique(
        problem.objects.iter().chain(&domain.constants).map(|o| o.name.as_str()),
        "object",
    )?;
    for o in &problem.objects {
        check_type(domain, o.type_name(), &format!("object `{}`", o.name))?;
    }
    let terms = term_types([problem.objects.as_slice(), domain.constants.as_slice()]);
    for atom in &problem.init {
        check_atom(domain, atom, &terms, "init")?;
    }
    for literal in &problem.goal {
        check_atom(domain, &literal.atom, &terms, "goal")?;
    }
    Ok(())
}
