//! Reader for the STRIPS subset: typed parameters, conjunctive positive and
//! negative preconditions, add and delete effects. Anything outside the
//! subset that we recognize is reported as [`ParseError::UnsupportedFeature`]
//! rather than as a syntax error. Names are case-insensitive and lowercased.

use thiserror::Error;

use crate::ast::{Action, Atom, Document, Domain, Literal, PredicateDecl, Problem, TypedName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported PDDL feature `{feature}` at {line}:{column}")]
    UnsupportedFeature {
        feature: String,
        line: usize,
        column: usize,
    },
}

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

const UNSUPPORTED_FORMS: &[&str] = &[
    "when", "forall", "exists", "or", "imply", "=", "<", ">", "<=", ">=", "increase", "decrease",
    "assign", "scale-up", "scale-down",
];

const UNSUPPORTED_SECTIONS: &[&str] = &[":functions", ":durative-action", ":derived", ":constraints", ":metric", ":timed-initial-literals"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexpr {
    Atom { text: String, line: usize, column: usize },
    List { items: Vec<Sexpr>, line: usize, column: usize },
}

impl Sexpr {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexpr::Atom { line, column, .. } | Sexpr::List { line, column, .. } => (*line, *column),
        }
    }

    fn symbol(&self) -> Option<&str> {
        match self {
            Sexpr::Atom { text, .. } => Some(text),
            Sexpr::List { .. } => None,
        }
    }

    fn list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            Sexpr::Atom { .. } => None,
        }
    }

    fn head(&self) -> Option<&str> {
        self.list().and_then(|items| items.first()).and_then(Sexpr::symbol)
    }
}

fn syntax(at: (usize, usize), message: impl Into<String>) -> ParseError {
    ParseError::SyntaxError {
        line: at.0,
        column: at.1,
        message: message.into(),
    }
}

fn unsupported(at: (usize, usize), feature: &str) -> ParseError {
    ParseError::UnsupportedFeature {
        feature: feature.to_string(),
        line: at.0,
        column: at.1,
    }
}

fn read_all(text: &str) -> Result<Vec<Sexpr>, ParseError> {
    let mut stack: Vec<(Vec<Sexpr>, usize, usize)> = vec![(Vec::new(), 1, 1)];
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        match c {
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            '(' => {
                chars.next();
                stack.push((Vec::new(), line, column));
                column += 1;
            }
            ')' => {
                chars.next();
                if stack.len() == 1 {
                    return Err(syntax((line, column), "unbalanced `)`"));
                }
                let (items, l, c) = stack.pop().expect("stack has an open list");
                stack
                    .last_mut()
                    .expect("outer level exists")
                    .0
                    .push(Sexpr::List { items, line: l, column: c });
                column += 1;
            }
            _ => {
                let start = column;
                let mut token = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    token.push(c.to_ascii_lowercase());
                    chars.next();
                    column += 1;
                }
                stack.last_mut().expect("outer level exists").0.push(Sexpr::Atom {
                    text: token,
                    line,
                    column: start,
                });
            }
        }
    }
    if stack.len() > 1 {
        let (_, l, c) = stack.pop().expect("checked non-empty");
        return Err(syntax((l, c), "unclosed `(`"));
    }
    Ok(stack.pop().expect("outer level exists").0)
}

fn is_name(text: &str) -> bool {
    let mut chars = text.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn is_variable(text: &str) -> bool {
    text.strip_prefix('?').is_some_and(is_name)
}

fn expect_name(expr: &Sexpr, what: &str) -> Result<String, ParseError> {
    match expr.symbol() {
        Some(text) if is_name(text) => Ok(text.to_string()),
        _ => Err(syntax(expr.pos(), format!("expected {what}"))),
    }
}

fn typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<TypedName>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        let text = item.symbol().ok_or_else(|| {
            if item.head() == Some("either") {
                unsupported(item.pos(), "either")
            } else {
                syntax(item.pos(), "expected a name")
            }
        })?;
        if text == "-" {
            let ty = items.get(i + 1).ok_or_else(|| syntax(item.pos(), "missing type after `-`"))?;
            if ty.head() == Some("either") {
                return Err(unsupported(ty.pos(), "either"));
            }
            let ty = expect_name(ty, "a type name")?;
            if pending.is_empty() {
                return Err(syntax(item.pos(), "`-` without names"));
            }
            out.extend(pending.drain(..).map(|n| TypedName { name: n, ty: Some(ty.clone()) }));
            i += 2;
            continue;
        }
        let ok = if variables { is_variable(text) } else { is_name(text) };
        if !ok {
            let what = if variables { "a variable" } else { "a name" };
            return Err(syntax(item.pos(), format!("expected {what}, found `{text}`")));
        }
        pending.push(text.to_string());
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| TypedName { name: n, ty: None }));
    Ok(out)
}

fn atom(expr: &Sexpr, allow_variables: bool) -> Result<Atom, ParseError> {
    let items = expr.list().ok_or_else(|| syntax(expr.pos(), "expected an atom"))?;
    let head = items.first().ok_or_else(|| syntax(expr.pos(), "empty atom"))?;
    let predicate = head.symbol().ok_or_else(|| syntax(head.pos(), "expected a predicate name"))?;
    if UNSUPPORTED_FORMS.contains(&predicate) {
        return Err(unsupported(head.pos(), predicate));
    }
    if !is_name(predicate) {
        return Err(syntax(head.pos(), format!("bad predicate name `{predicate}`")));
    }
    let mut args = Vec::new();
    for arg in &items[1..] {
        let text = match arg {
            Sexpr::Atom { text, .. } => text,
            Sexpr::List { .. } => return Err(unsupported(arg.pos(), "function term")),
        };
        let ok = is_name(text) || (allow_variables && is_variable(text));
        if !ok {
            return Err(syntax(arg.pos(), format!("bad argument `{text}`")));
        }
        args.push(text.clone());
    }
    Ok(Atom {
        predicate: predicate.to_string(),
        args,
    })
}

fn literal(expr: &Sexpr, allow_variables: bool) -> Result<Literal, ParseError> {
    if expr.head() == Some("not") {
        let items = expr.list().expect("has a head");
        if items.len() != 2 {
            return Err(syntax(expr.pos(), "`not` takes one atom"));
        }
        if items[1].head() == Some("not") || items[1].head() == Some("and") {
            return Err(unsupported(items[1].pos(), "nested formula under not"));
        }
        return Ok(Literal::neg(atom(&items[1], allow_variables)?));
    }
    Ok(Literal::pos(atom(expr, allow_variables)?))
}

/// A literal, or `(and ...)` of literals.
fn conjunction(expr: &Sexpr, allow_variables: bool) -> Result<Vec<Literal>, ParseError> {
    if expr.head() == Some("and") {
        let items = expr.list().expect("has a head");
        return items[1..].iter().map(|e| literal(e, allow_variables)).collect();
    }
    if expr.list().is_some_and(<[Sexpr]>::is_empty) {
        return Ok(Vec::new());
    }
    Ok(vec![literal(expr, allow_variables)?])
}

fn keyword_sections(items: &[Sexpr]) -> Result<Vec<(&str, &Sexpr)>, ParseError> {
    items
        .iter()
        .map(|section| {
            let head = section
                .head()
                .ok_or_else(|| syntax(section.pos(), "expected a `(:keyword ...)` section"))?;
            if UNSUPPORTED_SECTIONS.contains(&head) {
                return Err(unsupported(section.pos(), head));
            }
            Ok((head, section))
        })
        .collect()
}

fn parse_action(section: &Sexpr) -> Result<Action, ParseError> {
    let items = section.list().expect("section is a list");
    let name = expect_name(items.get(1).ok_or_else(|| syntax(section.pos(), "missing action name"))?, "an action name")?;
    let mut action = Action {
        name,
        parameters: Vec::new(),
        precondition: Vec::new(),
        add: Vec::new(),
        delete: Vec::new(),
    };
    let mut i = 2;
    while i < items.len() {
        let key = items[i]
            .symbol()
            .ok_or_else(|| syntax(items[i].pos(), "expected an action keyword"))?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                let list = value.list().ok_or_else(|| syntax(value.pos(), "expected a parameter list"))?;
                action.parameters = typed_list(list, true)?;
            }
            ":precondition" => action.precondition = conjunction(value, true)?,
            ":effect" => {
                for effect in conjunction(value, true)? {
                    if effect.positive {
                        action.add.push(effect.atom);
                    } else {
                        action.delete.push(effect.atom);
                    }
                }
            }
            other => return Err(syntax(items[i].pos(), format!("unknown action keyword `{other}`"))),
        }
        i += 2;
    }
    Ok(action)
}

/// Parse a single `(:action ...)` form, as used by the skill catalog.
pub fn parse_action_text(text: &str) -> Result<Action, ParseError> {
    let forms = read_all(text)?;
    match forms.as_slice() {
        [form] if form.head() == Some(":action") => parse_action(form),
        [form, ..] => Err(syntax(form.pos(), "expected exactly one `(:action ...)` form")),
        [] => Err(syntax((1, 1), "empty input")),
    }
}

/// Parse a single predicate declaration such as `(in ?x - thing ?c - thing)`.
pub fn parse_predicate_text(text: &str) -> Result<PredicateDecl, ParseError> {
    let forms = read_all(text)?;
    match forms.as_slice() {
        [form] => predicate_decl(form),
        _ => Err(syntax((1, 1), "expected exactly one predicate declaration")),
    }
}

fn predicate_decl(form: &Sexpr) -> Result<PredicateDecl, ParseError> {
    let items = form.list().ok_or_else(|| syntax(form.pos(), "expected a predicate declaration"))?;
    let head = items.first().ok_or_else(|| syntax(form.pos(), "empty predicate declaration"))?;
    Ok(PredicateDecl {
        name: expect_name(head, "a predicate name")?,
        params: typed_list(&items[1..], true)?,
    })
}

fn parse_domain_form(items: &[Sexpr], at: (usize, usize)) -> Result<Domain, ParseError> {
    let header = items[1].list().expect("caller checked header");
    let name = expect_name(header.get(1).ok_or_else(|| syntax(at, "missing domain name"))?, "a domain name")?;
    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    for (head, section) in keyword_sections(&items[2..])? {
        let body = &section.list().expect("section is a list")[1..];
        match head {
            ":requirements" => {
                for item in body {
                    let req = item.symbol().ok_or_else(|| syntax(item.pos(), "expected a requirement flag"))?;
                    if !SUPPORTED_REQUIREMENTS.contains(&req) {
                        return Err(unsupported(item.pos(), req));
                    }
                    domain.requirements.push(req.to_string());
                }
            }
            ":types" => domain.types = typed_list(body, false)?,
            ":constants" => domain.constants = typed_list(body, false)?,
            ":predicates" => {
                for form in body {
                    domain.predicates.push(predicate_decl(form)?);
                }
            }
            ":action" => domain.actions.push(parse_action(section)?),
            other => return Err(syntax(section.pos(), format!("unknown domain section `{other}`"))),
        }
    }
    Ok(domain)
}

fn parse_problem_form(items: &[Sexpr], at: (usize, usize)) -> Result<Problem, ParseError> {
    let header = items[1].list().expect("caller checked header");
    let name = expect_name(header.get(1).ok_or_else(|| syntax(at, "missing problem name"))?, "a problem name")?;
    let mut problem = Problem {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    let mut saw_goal = false;
    for (head, section) in keyword_sections(&items[2..])? {
        let body = &section.list().expect("section is a list")[1..];
        match head {
            ":domain" => {
                let value = body.first().ok_or_else(|| syntax(section.pos(), "missing domain name"))?;
                problem.domain = expect_name(value, "a domain name")?;
            }
            ":objects" => problem.objects = typed_list(body, false)?,
            ":init" => {
                for form in body {
                    if form.head() == Some("not") {
                        return Err(unsupported(form.pos(), "negative initial literal"));
                    }
                    if form.head() == Some("=") {
                        return Err(unsupported(form.pos(), "numeric fluent"));
                    }
                    problem.init.push(atom(form, false)?);
                }
            }
            ":goal" => {
                let value = body.first().ok_or_else(|| syntax(section.pos(), "missing goal"))?;
                problem.goal = conjunction(value, false)?;
                saw_goal = true;
            }
            ":requirements" => {}
            other => return Err(syntax(section.pos(), format!("unknown problem section `{other}`"))),
        }
    }
    if problem.domain.is_empty() {
        return Err(syntax(at, "problem has no `(:domain ...)`"));
    }
    if !saw_goal {
        return Err(syntax(at, "problem has no `(:goal ...)`"));
    }
    Ok(problem)
}

/// Parse a domain or problem file.
pub fn parse_pddl(text: &str) -> Result<Document, ParseError> {
    let forms = read_all(text)?;
    let form = match forms.as_slice() {
        [form] => form,
        [] => return Err(syntax((1, 1), "empty input")),
        [_, extra, ..] => return Err(syntax(extra.pos(), "trailing form after `define`")),
    };
    let at = form.pos();
    let items = form.list().ok_or_else(|| syntax(at, "expected `(define ...)`"))?;
    if form.head() != Some("define") || items.len() < 2 {
        return Err(syntax(at, "expected `(define ...)`"));
    }
    match items[1].head() {
        Some("domain") => Ok(Document::Domain(parse_domain_form(items, at)?)),
        Some("problem") => Ok(Document::Problem(parse_problem_form(items, at)?)),
        _ => Err(syntax(items[1].pos(), "expected `(domain ...)` or `(problem ...)`")),
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    match parse_pddl(text)? {
        Document::Domain(d) => Ok(d),
        Document::Problem(_) => Err(syntax((1, 1), "expected a domain, found a problem")),
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    match parse_pddl(text)? {
        Document::Problem(p) => Ok(p),
        Document::Domain(_) => Err(syntax((1, 1), "expected a problem, found a domain")),
    }
}
