//! Static completeness: run a workflow over symbolic facts and report each
//! precondition (or goal) that nothing before it establishes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Edit, LinkTemplate, LoopBound, Node, ParamType, Ref, StatePredicate, Workflow};
use crate::ontology::EntityId;
use crate::world::World;

/// Upper bound on symbolic loop iterations before giving up on a fixpoint.
const MAX_ITERATIONS: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    /// Step whose precondition is unmet, or `goal`.
    pub step: String,
    pub predicate: StatePredicate,
    /// Branch and iteration choices leading to the step.
    pub path: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompletenessReport {
    pub gaps: Vec<Gap>,
    /// Placeholder steps whose effects were assumed rather than modelled.
    pub placeholders: Vec<String>,
}

impl CompletenessReport {
    pub fn is_complete(&self) -> bool {
        self.gaps.is_empty()
    }
}

type Facts = BTreeSet<LinkTemplate>;

#[derive(Clone)]
struct PathState {
    facts: Facts,
    path: Vec<String>,
}

struct Checker<'a> {
    world: &'a World,
    workflow: &'a Workflow,
    report: CompletenessReport,
    seen: BTreeSet<(String, StatePredicate)>,
}

pub(super) fn check(
    world: &World,
    workflow: &Workflow,
    initial: &[StatePredicate],
) -> CompletenessReport {
    let mut facts = Facts::new();
    for p in initial {
        assume(&mut facts, p);
    }
    let mut checker = Checker {
        world,
        workflow,
        report: CompletenessReport::default(),
        seen: BTreeSet::new(),
    };
    let start = PathState {
        facts,
        path: Vec::new(),
    };
    let ends = checker.walk(&workflow.body, alloc::vec![start]);
    for state in &ends {
        for p in &workflow.goal {
            checker.require("goal", p, state);
        }
    }
    checker.report
}

fn has_wildcard(t: &LinkTemplate) -> bool {
    t.from.is_wildcard() || t.to.is_wildcard()
}

/// Makes a non-wildcard predicate true in `facts`.
fn assume(facts: &mut Facts, p: &StatePredicate) {
    match p {
        StatePredicate::Exists(t) if !has_wildcard(t) => {
            facts.insert(t.clone());
        }
        StatePredicate::NotExists(t) if !has_wildcard(t) => {
            facts.remove(t);
        }
        _ => {}
    }
}

fn negate(p: &StatePredicate) -> StatePredicate {
    match p {
        StatePredicate::Exists(t) => StatePredicate::NotExists(t.clone()),
        StatePredicate::NotExists(t) => StatePredicate::Exists(t.clone()),
    }
}

fn substitute(t: &LinkTemplate, map: &BTreeMap<&str, Ref>) -> Option<LinkTemplate> {
    let side = |r: &Ref| match r {
        Ref::Var(v) => map.get(v.as_str()).cloned(),
        other => Some(other.clone()),
    };
    Some(LinkTemplate {
        from: side(&t.from)?,
        kind: t.kind.clone(),
        to: side(&t.to)?,
    })
}

fn dedupe(states: Vec<PathState>) -> Vec<PathState> {
    let mut seen = BTreeSet::new();
    states
        .into_iter()
        .filter(|s| seen.insert(s.facts.clone()))
        .collect()
}

fn with_segment(state: &PathState, segment: String) -> PathState {
    let mut s = state.clone();
    s.path.push(segment);
    s
}

impl Checker<'_> {
    fn type_of(&self, r: &Ref) -> Option<EntityId> {
        match r {
            Ref::Entity(e) => Some(e.clone()),
            Ref::Var(v) => self
                .workflow
                .params
                .iter()
                .find_map(|p| match (&p.ty, p.name == *v) {
                    (ParamType::Entity(ty), true) => ty.clone(),
                    _ => None,
                })
                .or_else(|| {
                    self.workflow
                        .lets
                        .iter()
                        .find(|l| l.name == *v)
                        .map(|l| l.ty.clone())
                }),
            Ref::Any { .. } => None,
        }
    }

    /// How a fact side relates to a template side: `Some(true)` certainly
    /// matches, `Some(false)` might, `None` cannot.
    fn side_fit(&self, pattern: &Ref, fact: &Ref) -> Option<bool> {
        match pattern {
            Ref::Any { ty: None, .. } => Some(true),
            Ref::Any { ty: Some(ty), .. } => match self.type_of(fact) {
                Some(t) => match self.world.registry.is_descendant(t.as_str(), ty.as_str()) {
                    Ok(true) => Some(true),
                    _ if matches!(fact, Ref::Var(_)) => Some(false),
                    _ => None,
                },
                None => Some(false),
            },
            concrete => (concrete == fact).then_some(true),
        }
    }

    fn holds(&self, p: &StatePredicate, facts: &Facts) -> bool {
        let t = p.template();
        if !has_wildcard(t) {
            let present = facts.contains(t);
            return matches!(p, StatePredicate::Exists(_)) == present;
        }
        let fits = facts.iter().filter(|f| f.kind == t.kind).map(|f| {
            match (self.side_fit(&t.from, &f.from), self.side_fit(&t.to, &f.to)) {
                (Some(a), Some(b)) => Some(a && b),
                _ => None,
            }
        });
        match p {
            StatePredicate::Exists(_) => fits.into_iter().any(|m| m == Some(true)),
            StatePredicate::NotExists(_) => fits.into_iter().all(|m| m.is_none()),
        }
    }

    fn require(&mut self, step: &str, p: &StatePredicate, state: &PathState) {
        if self.holds(p, &state.facts) {
            return;
        }
        if !self.seen.insert((step.to_string(), p.clone())) {
            return;
        }
        let path = if state.path.is_empty() {
            String::from("main")
        } else {
            state.path.join(" > ")
        };
        self.report.gaps.push(Gap {
            step: step.to_string(),
            predicate: p.clone(),
            path,
        });
    }

    fn apply_edits(&self, edits: &[Edit], facts: &mut Facts) {
        let mut removals = Vec::new();
        let mut additions = Vec::new();
        for edit in edits {
            match edit {
                Edit::Unlink(t) => removals.push(t.clone()),
                Edit::Link(t) => additions.push(t.clone()),
                Edit::Apply { transitional, args } => {
                    let Some(tr) = self.world.transitionals.get(transitional) else {
                        continue;
                    };
                    let map: BTreeMap<&str, Ref> = tr
                        .params
                        .iter()
                        .map(String::as_str)
                        .zip(args.iter().cloned())
                        .collect();
                    removals.extend(tr.unlinks.iter().filter_map(|t| substitute(t, &map)));
                    additions.extend(tr.links.iter().filter_map(|t| substitute(t, &map)));
                }
                Edit::Activate { frame, binding } | Edit::Deactivate { frame, binding } => {
                    let Some(f) = self.world.frames.get(frame) else {
                        continue;
                    };
                    let map: BTreeMap<&str, Ref> = binding
                        .iter()
                        .map(|(s, r)| (s.as_str(), r.clone()))
                        .collect();
                    let links = f.templates.iter().filter_map(|t| substitute(t, &map));
                    if matches!(edit, Edit::Activate { .. }) {
                        additions.extend(links);
                    } else {
                        removals.extend(links);
                    }
                }
            }
        }
        for t in &removals {
            facts.remove(t);
        }
        facts.extend(additions);
    }

    fn walk(&mut self, node: &Node, states: Vec<PathState>) -> Vec<PathState> {
        match node {
            Node::Seq(items) => items.iter().fold(states, |acc, n| self.walk(n, acc)),
            Node::Step(step) => {
                if step.placeholder && !self.report.placeholders.contains(&step.name) {
                    self.report.placeholders.push(step.name.clone());
                }
                let mut out = Vec::with_capacity(states.len());
                for mut state in states {
                    for p in &step.preconditions {
                        self.require(&step.name, p, &state);
                    }
                    self.apply_edits(&step.postconditions, &mut state.facts);
                    out.push(state);
                }
                dedupe(out)
            }
            Node::Cond {
                guard,
                then,
                otherwise,
            } => {
                let mut then_states = Vec::new();
                let mut else_states = Vec::new();
                for state in &states {
                    let mut t = with_segment(state, String::from("then"));
                    guard.iter().for_each(|p| assume(&mut t.facts, p));
                    then_states.push(t);
                    let mut e = with_segment(state, String::from("else"));
                    if let [single] = guard.as_slice() {
                        assume(&mut e.facts, &negate(single));
                    }
                    else_states.push(e);
                }
                let mut out = self.walk(then, then_states);
                out.extend(self.walk(otherwise, else_states));
                dedupe(out)
            }
            Node::Loop { body, bound } => {
                let (iterations, may_skip) = match bound {
                    Some(LoopBound::Count(n)) => ((*n).min(MAX_ITERATIONS), *n == 0),
                    _ => (MAX_ITERATIONS, true),
                };
                let mut out = Vec::new();
                if may_skip {
                    out.extend(states.iter().map(|s| with_segment(s, String::from("skip"))));
                }
                let mut current = states;
                for k in 1..=iterations {
                    let entered: Vec<PathState> = current
                        .iter()
                        .map(|s| with_segment(s, format!("iteration {k}")))
                        .collect();
                    let next = self.walk(body, entered);
                    let stable = next.len() == current.len()
                        && next.iter().zip(&current).all(|(a, b)| a.facts == b.facts);
                    current = next;
                    if stable || k == iterations {
                        break;
                    }
                }
                out.extend(current);
                dedupe(out)
            }
        }
    }
}
