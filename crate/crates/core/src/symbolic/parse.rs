//! Parser for the supported PDDL subset: STRIPS with typing and negative
//! preconditions. See `docs/pddl-subset.md` for the grammar.

use std::collections::HashMap;

use super::sexpr::{self, Pos, SExpr};
use super::ParseError;

/// Predicate whose atoms encode abstract attachments `(attached ?m ?p)`.
pub const ATTACHED: &str = "attached";

const ROOT_TYPE: &str = "object";
const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":negative-preconditions"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    /// `None` only for the implicit root type `object`.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: usize,
}

/// Argument of an atom template: an action parameter or a domain constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Param(usize),
    Const(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomTemplate {
    pub predicate: usize,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    Geometric,
    NonGeometric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub pre_pos: Vec<AtomTemplate>,
    pub pre_neg: Vec<AtomTemplate>,
    pub add: Vec<AtomTemplate>,
    pub del: Vec<AtomTemplate>,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub types: Vec<TypeDecl>,
    /// Domain constants as (name, type index).
    pub constants: Vec<(String, usize)>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// True if type `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, mut ty: usize, ancestor: usize) -> bool {
        loop {
            if ty == ancestor {
                return true;
            }
            match self.types[ty].parent {
                Some(p) => ty = p,
                None => return false,
            }
        }
    }
}

/// Atom as written in a problem file, resolved to indices later.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAtom {
    pub predicate: String,
    pub args: Vec<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain: String,
    /// Problem objects as (name, type index into the domain's types).
    pub objects: Vec<(String, usize)>,
    pub init: Vec<RawAtom>,
    pub goal: Vec<RawAtom>,
}

fn list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ParseError> {
    e.as_list()
        .ok_or_else(|| ParseError::syntax(e.pos(), format!("expected {what}")))
}

fn atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_atom()
        .ok_or_else(|| ParseError::syntax(e.pos(), format!("expected {what}")))
}

fn expect_header<'a>(
    root: &'a SExpr,
    kind: &str,
) -> Result<(&'a str, &'a [SExpr]), ParseError> {
    let items = list(root, "`(define ...)`")?;
    if items.first().and_then(SExpr::as_atom) != Some("define") {
        return Err(ParseError::syntax(root.pos(), "expected `define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::syntax(root.pos(), format!("missing `({kind} name)`")))?;
    let h = list(header, &format!("`({kind} name)`"))?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(ParseError::syntax(header.pos(), format!("expected `({kind} name)`")));
    }
    Ok((atom(&h[1], "name")?, &items[2..]))
}

/// Parses `a b - t c - u d` into (name, type-name, pos) triples; untyped
/// trailing names get `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let tok = atom(&items[i], "name")?;
        if tok == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| ParseError::syntax(items[i].pos(), "missing type after `-`"))?;
            let ty_name = atom(ty, "type name")?;
            if ty_name == "either" {
                return Err(ParseError::syntax(ty.pos(), "`either` types are not supported"));
            }
            if pending.is_empty() {
                return Err(ParseError::syntax(items[i].pos(), "`-` with no names before it"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty_name.to_string(), p));
            }
            i += 2;
        } else {
            pending.push((tok.to_string(), items[i].pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

struct DomainBuilder {
    model: DomainModel,
}

impl DomainBuilder {
    fn resolve_type(&self, name: &str, pos: Pos) -> Result<usize, ParseError> {
        self.model
            .type_index(name)
            .ok_or_else(|| ParseError::undeclared(pos, "type", name))
    }

    fn types(&mut self, items: &[SExpr]) -> Result<(), ParseError> {
        let decls = typed_list(items)?;
        // Declare names first so parents may be listed after children.
        for (name, _, pos) in &decls {
            if name == ROOT_TYPE {
                continue;
            }
            if self.model.type_index(name).is_some() {
                return Err(ParseError::Duplicate {
                    pos: *pos,
                    kind: "type",
                    name: name.clone(),
                });
            }
            self.model.types.push(TypeDecl {
                name: name.clone(),
                parent: Some(0),
            });
        }
        for (name, parent, pos) in &decls {
            if name == ROOT_TYPE {
                continue;
            }
            let idx = self.model.type_index(name).unwrap();
            let p = self.resolve_type(parent, *pos)?;
            if self.model.is_subtype(p, idx) {
                return Err(ParseError::syntax(*pos, format!("cyclic type hierarchy at `{name}`")));
            }
            self.model.types[idx].parent = Some(p);
        }
        Ok(())
    }

    fn constants(&mut self, items: &[SExpr]) -> Result<(), ParseError> {
        for (name, ty, pos) in typed_list(items)? {
            if self.model.constants.iter().any(|(n, _)| *n == name) {
                return Err(ParseError::Duplicate { pos, kind: "constant", name });
            }
            let t = self.resolve_type(&ty, pos)?;
            self.model.constants.push((name, t));
        }
        Ok(())
    }

    fn predicates(&mut self, items: &[SExpr]) -> Result<(), ParseError> {
        for p in items {
            let parts = list(p, "predicate declaration")?;
            let name = atom(
                parts
                    .first()
                    .ok_or_else(|| ParseError::syntax(p.pos(), "empty predicate declaration"))?,
                "predicate name",
            )?;
            if self.model.predicate_index(name).is_some() {
                return Err(ParseError::Duplicate {
                    pos: p.pos(),
                    kind: "predicate",
                    name: name.to_string(),
                });
            }
            let mut params = Vec::new();
            for (var, ty, pos) in typed_list(&parts[1..])? {
                if !var.starts_with('?') {
                    return Err(ParseError::syntax(pos, format!("expected variable, found `{var}`")));
                }
                params.push(self.resolve_type(&ty, pos)?);
            }
            self.model.predicates.push(PredicateDecl {
                name: name.to_string(),
                params,
            });
        }
        Ok(())
    }

    fn atom_template(&self, e: &SExpr, params: &[Param]) -> Result<AtomTemplate, ParseError> {
        let parts = list(e, "atom")?;
        let head = parts
            .first()
            .ok_or_else(|| ParseError::syntax(e.pos(), "empty atom"))?;
        let name = atom(head, "predicate name")?;
        if name == "=" {
            return Err(ParseError::syntax(e.pos(), "equality is not supported"));
        }
        let predicate = self
            .model
            .predicate_index(name)
            .ok_or_else(|| ParseError::undeclared(head.pos(), "predicate", name))?;
        let decl = &self.model.predicates[predicate];
        if decl.params.len() != parts.len() - 1 {
            return Err(ParseError::Arity {
                pos: e.pos(),
                name: name.to_string(),
                expected: decl.params.len(),
                found: parts.len() - 1,
            });
        }
        let mut args = Vec::with_capacity(parts.len() - 1);
        for (arg, &want) in parts[1..].iter().zip(&decl.params) {
            let a = atom(arg, "argument")?;
            let (term, ty) = if a.starts_with('?') {
                let i = params
                    .iter()
                    .position(|p| p.name == a)
                    .ok_or_else(|| ParseError::undeclared(arg.pos(), "variable", a))?;
                (Term::Param(i), params[i].ty)
            } else {
                let i = self
                    .model
                    .constants
                    .iter()
                    .position(|(n, _)| n == a)
                    .ok_or_else(|| ParseError::undeclared(arg.pos(), "constant", a))?;
                (Term::Const(i), self.model.constants[i].1)
            };
            if !self.model.is_subtype(ty, want) {
                return Err(ParseError::TypeMismatch {
                    pos: arg.pos(),
                    arg: a.to_string(),
                    expected: self.model.types[want].name.clone(),
                });
            }
            args.push(term);
        }
        Ok(AtomTemplate { predicate, args })
    }

    /// Literal conjunction: `()`, a single literal, or `(and lit*)`.
    fn literals(
        &self,
        e: &SExpr,
        params: &[Param],
    ) -> Result<(Vec<AtomTemplate>, Vec<AtomTemplate>), ParseError> {
        let mut pos_lits = Vec::new();
        let mut neg_lits = Vec::new();
        let parts = list(e, "formula")?;
        let lits: &[SExpr] = match e.head() {
            None if parts.is_empty() => &[],
            Some("and") => &parts[1..],
            _ => std::slice::from_ref(e),
        };
        for lit in lits {
            match lit.head() {
                Some("not") => {
                    let inner = list(lit, "literal")?;
                    if inner.len() != 2 {
                        return Err(ParseError::syntax(lit.pos(), "`not` takes one atom"));
                    }
                    neg_lits.push(self.atom_template(&inner[1], params)?);
                }
                Some("or" | "imply" | "exists" | "forall" | "when" | "and") => {
                    return Err(ParseError::syntax(
                        lit.pos(),
                        format!("`{}` is outside the STRIPS subset", lit.head().unwrap()),
                    ));
                }
                _ => pos_lits.push(self.atom_template(lit, params)?),
            }
        }
        Ok((pos_lits, neg_lits))
    }

    fn action(&mut self, items: &[SExpr], pos: Pos) -> Result<(), ParseError> {
        let name = atom(
            items
                .get(1)
                .ok_or_else(|| ParseError::syntax(pos, "action without a name"))?,
            "action name",
        )?
        .to_string();
        if self.model.schema(&name).is_some() {
            return Err(ParseError::Duplicate { pos, kind: "action", name });
        }
        let mut params = Vec::new();
        let mut pre = (Vec::new(), Vec::new());
        let mut eff = (Vec::new(), Vec::new());
        let mut i = 2;
        while i < items.len() {
            let key = atom(&items[i], "action keyword")?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| ParseError::syntax(items[i].pos(), format!("missing value for `{key}`")))?;
            match key {
                ":parameters" => {
                    for (var, ty, p) in typed_list(list(val, "parameter list")?)? {
                        if !var.starts_with('?') {
                            return Err(ParseError::syntax(p, format!("expected variable, found `{var}`")));
                        }
                        let ty = self.resolve_type(&ty, p)?;
                        params.push(Param { name: var, ty });
                    }
                }
                ":precondition" => pre = self.literals(val, &params)?,
                ":effect" => eff = self.literals(val, &params)?,
                other => {
                    return Err(ParseError::syntax(
                        items[i].pos(),
                        format!("unknown action keyword `{other}`"),
                    ))
                }
            }
            i += 2;
        }
        let attached = self.model.predicate_index(ATTACHED);
        let touches_attached = eff
            .0
            .iter()
            .chain(&eff.1)
            .any(|a| Some(a.predicate) == attached);
        self.model.actions.push(ActionSchema {
            name,
            params,
            pre_pos: pre.0,
            pre_neg: pre.1,
            add: eff.0,
            del: eff.1,
            kind: if touches_attached {
                ActionKind::Geometric
            } else {
                ActionKind::NonGeometric
            },
        });
        Ok(())
    }
}

/// Parses a domain definition.
pub fn parse_domain(text: &str) -> Result<DomainModel, ParseError> {
    let root = sexpr::read(text)?;
    let (name, sections) = expect_header(&root, "domain")?;
    let mut b = DomainBuilder {
        model: DomainModel {
            name: name.to_string(),
            types: vec![TypeDecl {
                name: ROOT_TYPE.into(),
                parent: None,
            }],
            constants: Vec::new(),
            predicates: Vec::new(),
            actions: Vec::new(),
        },
    };
    for section in sections {
        let items = list(section, "domain section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| ParseError::syntax(section.pos(), "expected section keyword"))?;
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let req = atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&req) {
                        return Err(ParseError::syntax(
                            r.pos(),
                            format!("unsupported requirement `{req}`"),
                        ));
                    }
                }
            }
            ":types" => b.types(&items[1..])?,
            ":constants" => b.constants(&items[1..])?,
            ":predicates" => b.predicates(&items[1..])?,
            ":action" => b.action(items, section.pos())?,
            other => {
                return Err(ParseError::syntax(
                    section.pos(),
                    format!("unsupported domain section `{other}`"),
                ))
            }
        }
    }
    Ok(b.model)
}

fn raw_atoms(e: &SExpr) -> Result<Vec<RawAtom>, ParseError> {
    let parts = list(e, "atom list")?;
    let atoms: &[SExpr] = match e.head() {
        Some("and") => &parts[1..],
        None if parts.is_empty() => &[],
        _ => std::slice::from_ref(e),
    };
    atoms.iter().map(raw_atom).collect()
}

fn raw_atom(e: &SExpr) -> Result<RawAtom, ParseError> {
    let parts = list(e, "ground atom")?;
    if e.head() == Some("not") {
        return Err(ParseError::syntax(e.pos(), "negative literals are not allowed here"));
    }
    let predicate = atom(
        parts
            .first()
            .ok_or_else(|| ParseError::syntax(e.pos(), "empty atom"))?,
        "predicate name",
    )?
    .to_string();
    let args = parts[1..]
        .iter()
        .map(|a| atom(a, "object name").map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(RawAtom {
        predicate,
        args,
        pos: e.pos(),
    })
}

/// Parses one ground atom such as `(cooked f1)`.
pub fn parse_raw_atom(text: &str) -> Result<RawAtom, ParseError> {
    raw_atom(&sexpr::read(text)?)
}

/// Parses a problem definition against `domain` (needed for type names).
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemDef, ParseError> {
    let root = sexpr::read(text)?;
    let (name, sections) = expect_header(&root, "problem")?;
    let mut def = ProblemDef {
        name: name.to_string(),
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    let mut seen: HashMap<String, Pos> = HashMap::new();
    for section in sections {
        let items = list(section, "problem section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| ParseError::syntax(section.pos(), "expected section keyword"))?;
        match key {
            ":domain" => {
                def.domain = atom(
                    items
                        .get(1)
                        .ok_or_else(|| ParseError::syntax(section.pos(), "missing domain name"))?,
                    "domain name",
                )?
                .to_string();
                if def.domain != domain.name {
                    return Err(ParseError::syntax(
                        section.pos(),
                        format!("problem is for domain `{}`, not `{}`", def.domain, domain.name),
                    ));
                }
            }
            ":objects" => {
                for (obj, ty, pos) in typed_list(&items[1..])? {
                    if seen.insert(obj.clone(), pos).is_some()
                        || domain.constants.iter().any(|(c, _)| *c == obj)
                    {
                        return Err(ParseError::Duplicate { pos, kind: "object", name: obj });
                    }
                    let t = domain
                        .type_index(&ty)
                        .ok_or_else(|| ParseError::undeclared(pos, "type", &ty))?;
                    def.objects.push((obj, t));
                }
            }
            ":init" => {
                for a in &items[1..] {
                    def.init.push(raw_atom(a)?);
                }
            }
            ":goal" => {
                let g = items
                    .get(1)
                    .ok_or_else(|| ParseError::syntax(section.pos(), "missing goal formula"))?;
                def.goal = raw_atoms(g)?;
            }
            other => {
                return Err(ParseError::syntax(
                    section.pos(),
                    format!("unsupported problem section `{other}`"),
                ))
            }
        }
    }
    Ok(def)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const KITCHEN: &str = r#"
(define (domain kitchen)
  (:requirements :strips :typing)
  (:types food - movable movable surface robot - object)
  (:constants robot - robot sink stove - surface)
  (:predicates (attached ?m - movable ?p - object) (handempty)
               (washed ?f - food) (cooked ?f - food))
  (:action pick
    :parameters (?f - food ?s - surface)
    :precondition (and (attached ?f ?s) (handempty))
    :effect (and (attached ?f robot) (not (attached ?f ?s)) (not (handempty))))
  (:action place
    :parameters (?f - food ?s - surface)
    :precondition (attached ?f robot)
    :effect (and (attached ?f ?s) (not (attached ?f robot)) (handempty)))
  (:action wash
    :parameters (?f - food)
    :precondition (attached ?f sink)
    :effect (washed ?f))
  (:action cook
    :parameters (?f - food)
    :precondition (and (attached ?f stove) (washed ?f))
    :effect (cooked ?f)))
"#;

    #[test]
    fn kitchen_schemas_are_classified_by_attached_effects() {
        let d = parse_domain(KITCHEN).unwrap();
        assert_eq!(d.actions.len(), 4);
        let kinds: Vec<_> = d.actions.iter().map(|a| (a.name.as_str(), a.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                ("pick", ActionKind::Geometric),
                ("place", ActionKind::Geometric),
                ("wash", ActionKind::NonGeometric),
                ("cook", ActionKind::NonGeometric),
            ]
        );
        let food = d.type_index("food").unwrap();
        let movable = d.type_index("movable").unwrap();
        assert!(d.is_subtype(food, movable));
        assert!(d.is_subtype(food, 0));
        assert!(!d.is_subtype(movable, food));
    }

    #[test]
    fn empty_action_list_is_a_valid_domain() {
        let d = parse_domain("(define (domain empty) (:predicates (p)))").unwrap();
        assert!(d.actions.is_empty());
        assert_eq!(d.predicates.len(), 1);
    }

    #[test]
    fn undeclared_predicate_reports_token_position() {
        let text = "(define (domain d)\n  (:predicates (p))\n  (:action a :parameters ()\n     :precondition (q)\n     :effect (p)))";
        let err = parse_domain(text).unwrap_err();
        match err {
            ParseError::Undeclared { pos, kind, ref name } => {
                assert_eq!(kind, "predicate");
                assert_eq!(name, "q");
                assert_eq!(pos, Pos { line: 4, col: 21 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let text = "(define (domain d) (:predicates (p ?x))
          (:action a :parameters (?x) :precondition (p ?x ?x) :effect (p ?x)))";
        assert!(matches!(parse_domain(text), Err(ParseError::Arity { expected: 1, found: 2, .. })));
    }

    #[test]
    fn adl_constructs_are_rejected() {
        let text = "(define (domain d) (:requirements :adl) (:predicates (p)))";
        assert!(matches!(parse_domain(text), Err(ParseError::Syntax { .. })));
        let text = "(define (domain d) (:predicates (p) (r))
          (:action a :parameters () :precondition (or (p) (r)) :effect (p)))";
        assert!(matches!(parse_domain(text), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn argument_types_are_checked() {
        let text = "(define (domain d) (:types a b) (:predicates (p ?x - a))
          (:action act :parameters (?y - b) :precondition () :effect (p ?y)))";
        assert!(matches!(parse_domain(text), Err(ParseError::TypeMismatch { .. })));
    }

    #[test]
    fn problem_parses_objects_init_goal() {
        let d = parse_domain(KITCHEN).unwrap();
        let p = parse_problem(
            "(define (problem k1) (:domain kitchen)
               (:objects f1 - food dish - surface)
               (:init (attached f1 dish) (handempty))
               (:goal (and (cooked f1))))",
            &d,
        )
        .unwrap();
        assert_eq!(p.objects.len(), 2);
        assert_eq!(p.init.len(), 2);
        assert_eq!(p.goal[0].predicate, "cooked");
    }
}
