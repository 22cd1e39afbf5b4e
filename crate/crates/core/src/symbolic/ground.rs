//! Eager grounding into a closed-world STRIPS task over interned facts.

use std::collections::HashMap;
use std::fmt;

use super::parse::{
    parse_raw_atom, ActionKind, AtomTemplate, DomainModel, ProblemDef, RawAtom, Term, ATTACHED,
};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

/// Ground atom over interned symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: u32,
    pub args: Vec<ObjId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    pub name: String,
    pub ty: usize,
}

/// Closed-world abstract state: a sorted, duplicate-free fact set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AbstractState {
    facts: Vec<FactId>,
}

impl AbstractState {
    pub fn new(mut facts: Vec<FactId>) -> Self {
        facts.sort_unstable();
        facts.dedup();
        AbstractState { facts }
    }

    pub fn contains(&self, f: FactId) -> bool {
        self.facts.binary_search(&f).is_ok()
    }

    pub fn facts(&self) -> &[FactId] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn is_superset_of(&self, atoms: &[FactId]) -> bool {
        atoms.iter().all(|&f| self.contains(f))
    }
}

/// Movable whose attachment a geometric action changes, with the old and
/// new parent taken from its `attached` delete and add effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachmentChange {
    pub movable: ObjId,
    pub from: ObjId,
    pub to: ObjId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: usize,
    pub args: Vec<ObjId>,
    pub pre_pos: Vec<FactId>,
    pub pre_neg: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
    pub kind: ActionKind,
    pub change: Option<AttachmentChange>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundError {
    #[error("schema `{0}` touches `attached` but does not move exactly one movable from one parent to another")]
    IrregularGeometricSchema(String),
    #[error("action is not applicable in the given state")]
    NotApplicable,
}

/// A grounded planning problem: immutable after construction.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub domain: DomainModel,
    pub problem_name: String,
    objects: Vec<Object>,
    object_index: HashMap<String, ObjId>,
    facts: Vec<Atom>,
    fact_index: HashMap<Atom, FactId>,
    actions: Vec<GroundAction>,
    action_index: HashMap<(usize, Vec<ObjId>), ActionId>,
    pub init: AbstractState,
    pub goal: Vec<FactId>,
    attached: Option<u32>,
}

fn cartesian(domains: &[Vec<ObjId>]) -> Vec<Vec<ObjId>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for &o in d {
                let mut v = prefix.clone();
                v.push(o);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

impl GroundTask {
    /// Grounds every predicate and action over the typed objects, then
    /// drops actions that are not relaxed-reachable from the initial state.
    pub fn new(domain: DomainModel, problem: &ProblemDef) -> Result<Self, ParseError> {
        let mut objects: Vec<Object> = domain
            .constants
            .iter()
            .map(|(n, t)| Object { name: n.clone(), ty: *t })
            .collect();
        objects.extend(
            problem
                .objects
                .iter()
                .map(|(n, t)| Object { name: n.clone(), ty: *t }),
        );
        let object_index: HashMap<String, ObjId> = objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.name.clone(), ObjId(i as u32)))
            .collect();
        let of_type = |ty: usize| -> Vec<ObjId> {
            objects
                .iter()
                .enumerate()
                .filter(|(_, o)| domain.is_subtype(o.ty, ty))
                .map(|(i, _)| ObjId(i as u32))
                .collect()
        };

        let mut facts = Vec::new();
        let mut fact_index = HashMap::new();
        for (pi, pred) in domain.predicates.iter().enumerate() {
            let doms: Vec<_> = pred.params.iter().map(|&t| of_type(t)).collect();
            for args in cartesian(&doms) {
                let atom = Atom { predicate: pi as u32, args };
                fact_index.insert(atom.clone(), FactId(facts.len() as u32));
                facts.push(atom);
            }
        }

        let mut task = GroundTask {
            problem_name: problem.name.clone(),
            objects,
            object_index,
            facts,
            fact_index,
            actions: Vec::new(),
            action_index: HashMap::new(),
            init: AbstractState::default(),
            goal: Vec::new(),
            attached: domain.predicate_index(ATTACHED).map(|p| p as u32),
            domain,
        };

        let init = problem
            .init
            .iter()
            .map(|a| task.resolve_raw(a))
            .collect::<Result<Vec<_>, _>>()?;
        task.init = AbstractState::new(init);
        task.goal = problem
            .goal
            .iter()
            .map(|a| task.resolve_raw(a))
            .collect::<Result<Vec<_>, _>>()?;
        task.goal.sort_unstable();
        task.goal.dedup();

        let mut candidates = Vec::new();
        for (si, schema) in task.domain.actions.iter().enumerate() {
            let doms: Vec<_> = schema
                .params
                .iter()
                .map(|p| {
                    task.objects
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| task.domain.is_subtype(o.ty, p.ty))
                        .map(|(i, _)| ObjId(i as u32))
                        .collect::<Vec<_>>()
                })
                .collect();
            for args in cartesian(&doms) {
                let inst = |ts: &[AtomTemplate]| -> Vec<FactId> {
                    let mut v: Vec<FactId> = ts.iter().map(|t| task.instantiate(t, &args)).collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                };
                let pre_pos = inst(&schema.pre_pos);
                let pre_neg = inst(&schema.pre_neg);
                // Contradictory precondition: never applicable.
                if pre_pos.iter().any(|f| pre_neg.contains(f)) {
                    continue;
                }
                let add = inst(&schema.add);
                let del: Vec<FactId> = inst(&schema.del)
                    .into_iter()
                    .filter(|f| !add.contains(f))
                    .collect();
                candidates.push(GroundAction {
                    schema: si,
                    args,
                    pre_pos,
                    pre_neg,
                    add,
                    del,
                    kind: schema.kind,
                    change: None,
                });
            }
        }

        // Relaxed reachability (delete and negative preconditions ignored).
        let mut reached = vec![false; task.facts.len()];
        for &f in task.init.facts() {
            reached[f.0 as usize] = true;
        }
        let mut used = vec![false; candidates.len()];
        loop {
            let mut changed = false;
            for (i, a) in candidates.iter().enumerate() {
                if used[i] || !a.pre_pos.iter().all(|f| reached[f.0 as usize]) {
                    continue;
                }
                used[i] = true;
                changed = true;
                for f in &a.add {
                    reached[f.0 as usize] = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (a, keep) in candidates.into_iter().zip(used) {
            if !keep {
                continue;
            }
            let mut a = a;
            if a.kind == ActionKind::Geometric {
                a.change = Some(task.attachment_change(&a)?);
            }
            let id = ActionId(task.actions.len() as u32);
            task.action_index.insert((a.schema, a.args.clone()), id);
            task.actions.push(a);
        }
        Ok(task)
    }

    fn attachment_change(&self, a: &GroundAction) -> Result<AttachmentChange, ParseError> {
        let irregular = || {
            ParseError::Ground(GroundError::IrregularGeometricSchema(
                self.domain.actions[a.schema].name.clone(),
            ))
        };
        let att = self.attached.ok_or_else(irregular)?;
        let added: Vec<&Atom> = a
            .add
            .iter()
            .map(|f| self.atom(*f))
            .filter(|x| x.predicate == att)
            .collect();
        let deleted: Vec<&Atom> = a
            .del
            .iter()
            .map(|f| self.atom(*f))
            .filter(|x| x.predicate == att)
            .collect();
        match (added.as_slice(), deleted.as_slice()) {
            ([add], [del]) if add.args[0] == del.args[0] => Ok(AttachmentChange {
                movable: add.args[0],
                from: del.args[1],
                to: add.args[1],
            }),
            _ => Err(irregular()),
        }
    }

    fn instantiate(&self, t: &AtomTemplate, args: &[ObjId]) -> FactId {
        let atom = Atom {
            predicate: t.predicate as u32,
            args: t
                .args
                .iter()
                .map(|term| match *term {
                    Term::Param(i) => args[i],
                    Term::Const(c) => ObjId(c as u32),
                })
                .collect(),
        };
        self.fact_index[&atom]
    }

    fn resolve_raw(&self, a: &RawAtom) -> Result<FactId, ParseError> {
        let p = self
            .domain
            .predicate_index(&a.predicate)
            .ok_or_else(|| ParseError::undeclared(a.pos, "predicate", &a.predicate))?;
        let decl = &self.domain.predicates[p];
        if decl.params.len() != a.args.len() {
            return Err(ParseError::Arity {
                pos: a.pos,
                name: a.predicate.clone(),
                expected: decl.params.len(),
                found: a.args.len(),
            });
        }
        let mut args = Vec::with_capacity(a.args.len());
        for (name, &want) in a.args.iter().zip(&decl.params) {
            let o = *self
                .object_index
                .get(name)
                .ok_or_else(|| ParseError::undeclared(a.pos, "object", name))?;
            if !self.domain.is_subtype(self.objects[o.0 as usize].ty, want) {
                return Err(ParseError::TypeMismatch {
                    pos: a.pos,
                    arg: name.clone(),
                    expected: self.domain.types[want].name.clone(),
                });
            }
            args.push(o);
        }
        Ok(self.fact_index[&Atom { predicate: p as u32, args }])
    }

    /// Looks up a ground atom written as `(pred a b)`.
    pub fn parse_fact(&self, text: &str) -> Result<FactId, ParseError> {
        self.resolve_raw(&parse_raw_atom(text)?)
    }

    /// Looks up a ground action written as `(name a b)`.
    pub fn parse_action(&self, text: &str) -> Result<ActionId, ParseError> {
        let raw = parse_raw_atom(text)?;
        let schema = self
            .domain
            .actions
            .iter()
            .position(|s| s.name == raw.predicate)
            .ok_or_else(|| ParseError::undeclared(raw.pos, "action", &raw.predicate))?;
        let args = raw
            .args
            .iter()
            .map(|n| {
                self.object(n)
                    .ok_or_else(|| ParseError::undeclared(raw.pos, "object", n))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.action_index
            .get(&(schema, args))
            .copied()
            .ok_or_else(|| ParseError::undeclared(raw.pos, "ground action", text.trim()))
    }

    pub fn object(&self, name: &str) -> Option<ObjId> {
        self.object_index.get(name).copied()
    }

    pub fn object_name(&self, o: ObjId) -> &str {
        &self.objects[o.0 as usize].name
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn object_is_a(&self, o: ObjId, ty: &str) -> bool {
        self.domain
            .type_index(ty)
            .is_some_and(|t| self.domain.is_subtype(self.objects[o.0 as usize].ty, t))
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn atom(&self, f: FactId) -> &Atom {
        &self.facts[f.0 as usize]
    }

    pub fn fact(&self, atom: &Atom) -> Option<FactId> {
        self.fact_index.get(atom).copied()
    }

    /// `attached(m, p)` fact, if the domain declares `attached` and both
    /// objects fit its parameter types.
    pub fn attached_fact(&self, m: ObjId, p: ObjId) -> Option<FactId> {
        self.fact(&Atom {
            predicate: self.attached?,
            args: vec![m, p],
        })
    }

    pub fn is_attached_fact(&self, f: FactId) -> bool {
        Some(self.atom(f).predicate) == self.attached
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, a: ActionId) -> &GroundAction {
        &self.actions[a.0 as usize]
    }

    pub fn schema_name(&self, a: ActionId) -> &str {
        &self.domain.actions[self.action(a).schema].name
    }

    pub fn fact_name(&self, f: FactId) -> String {
        let atom = self.atom(f);
        let mut s = format!("({}", self.domain.predicates[atom.predicate as usize].name);
        for a in &atom.args {
            s.push(' ');
            s.push_str(self.object_name(*a));
        }
        s.push(')');
        s
    }

    /// Serialized form `(name arg1 arg2)`.
    pub fn action_name(&self, a: ActionId) -> String {
        let act = self.action(a);
        let mut s = format!("({}", self.domain.actions[act.schema].name);
        for o in &act.args {
            s.push(' ');
            s.push_str(self.object_name(*o));
        }
        s.push(')');
        s
    }

    pub fn applicable(&self, s: &AbstractState, a: ActionId) -> bool {
        let act = self.action(a);
        act.pre_pos.iter().all(|&f| s.contains(f)) && !act.pre_neg.iter().any(|&f| s.contains(f))
    }

    /// `(s \ del) ∪ add`.
    pub fn apply(&self, s: &AbstractState, a: ActionId) -> Result<AbstractState, GroundError> {
        if !self.applicable(s, a) {
            return Err(GroundError::NotApplicable);
        }
        Ok(self.apply_unchecked(s, a))
    }

    pub(crate) fn apply_unchecked(&self, s: &AbstractState, a: ActionId) -> AbstractState {
        let act = self.action(a);
        let mut facts: Vec<FactId> = s
            .facts
            .iter()
            .copied()
            .filter(|f| act.del.binary_search(f).is_err())
            .collect();
        facts.extend_from_slice(&act.add);
        AbstractState::new(facts)
    }

    pub fn applicable_actions<'a>(
        &'a self,
        s: &'a AbstractState,
    ) -> impl Iterator<Item = ActionId> + 'a {
        (0..self.actions.len() as u32)
            .map(ActionId)
            .filter(move |&a| self.applicable(s, a))
    }

    pub fn goal_satisfied(&self, s: &AbstractState, goal: &[FactId]) -> bool {
        s.is_superset_of(goal)
    }

    /// The `attached` facts of `s` (its abstract mode).
    pub fn abstract_mode(&self, s: &AbstractState) -> Vec<FactId> {
        s.facts
            .iter()
            .copied()
            .filter(|&f| self.is_attached_fact(f))
            .collect()
    }

    /// Non-attachment facts of `s`.
    pub fn non_geometric_part(&self, s: &AbstractState) -> Vec<FactId> {
        s.facts
            .iter()
            .copied()
            .filter(|&f| !self.is_attached_fact(f))
            .collect()
    }

    pub fn display_state(&self, s: &AbstractState) -> StateDisplay<'_> {
        StateDisplay {
            task: self,
            facts: s.facts.clone(),
        }
    }

    /// One action per line, `(name arg1 arg2)`.
    pub fn format_plan(&self, plan: &[ActionId]) -> String {
        let mut out = String::new();
        for &a in plan {
            out.push_str(&self.action_name(a));
            out.push('\n');
        }
        out
    }

    pub fn parse_plan(&self, text: &str) -> Result<Vec<ActionId>, ParseError> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with(';'))
            .map(|l| self.parse_action(l))
            .collect()
    }
}

pub struct StateDisplay<'a> {
    task: &'a GroundTask,
    facts: Vec<FactId>,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, fact) in self.facts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.task.fact_name(*fact))?;
        }
        write!(f, "}}")
    }
}
