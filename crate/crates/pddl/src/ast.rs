use std::fmt;

use serde::{Deserialize, Serialize};

/// A name with an optional type, as in `?x - thing` or `bottle - thing`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedName {
    pub name: String,
    pub ty: Option<String>,
}

impl TypedName {
    pub fn new(name: &str, ty: Option<&str>) -> Self {
        TypedName {
            name: name.to_string(),
            ty: ty.map(str::to_string),
        }
    }

    /// Declared type, `object` when untyped.
    pub fn type_name(&self) -> &str {
        self.ty.as_deref().unwrap_or("object")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<I, S>(predicate: &str, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            predicate: predicate.to_string(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.args.iter().any(|a| a == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<Action>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Parent of a declared type; undeclared or root types have `object`.
    pub fn parent_type(&self, ty: &str) -> Option<&str> {
        if ty == "object" {
            return None;
        }
        Some(
            self.types
                .iter()
                .find(|t| t.name == ty)
                .map_or("object", TypedName::type_name),
        )
    }

    /// Whether `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut current = Some(ty);
        let mut steps = 0;
        while let Some(t) = current {
            if t == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.types.len() + 1 {
                return false;
            }
            current = self.parent_type(t);
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<Atom>,
    pub goal: Vec<Literal>,
}

/// Result of parsing a file that may hold either document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document {
    Domain(Domain),
    Problem(Problem),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

fn typed_list(items: &[TypedName]) -> String {
    items
        .iter()
        .map(|item| match &item.ty {
            Some(ty) => format!("{} - {ty}", item.name),
            None => item.name.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn conjunction<T: fmt::Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(ToString::to_string).collect();
    format!("(and{}{})", if parts.is_empty() { "" } else { " " }, parts.join(" "))
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            writeln!(f, "  (:types {})", typed_list(&self.types))?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "  (:constants {})", typed_list(&self.constants))?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            if p.params.is_empty() {
                writeln!(f, "    ({})", p.name)?;
            } else {
                writeln!(f, "    ({} {})", p.name, typed_list(&p.params))?;
            }
        }
        writeln!(f, "  )")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            writeln!(f, "    :parameters ({})", typed_list(&a.parameters))?;
            writeln!(f, "    :precondition {}", conjunction(&a.precondition))?;
            let effects: Vec<Literal> = a
                .add
                .iter()
                .cloned()
                .map(Literal::pos)
                .chain(a.delete.iter().cloned().map(Literal::neg))
                .collect();
            writeln!(f, "    :effect {})", conjunction(&effects))?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        writeln!(f, "  (:objects {})", typed_list(&self.objects))?;
        writeln!(f, "  (:init")?;
        for atom in &self.init {
            writeln!(f, "    {atom}")?;
        }
        writeln!(f, "  )")?;
        writeln!(f, "  (:goal {})", conjunction(&self.goal))?;
        writeln!(f, ")")
    }
}
