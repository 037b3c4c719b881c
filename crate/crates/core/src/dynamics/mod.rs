//! Transitionals, frames, workflows and condition-action rules.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::ontology::{b, EntityId, Layer};
use crate::relations::Triple;
use crate::trace::{Event, SlotBinding, TraceEvent};
use crate::world::World;
use crate::Tick;

mod completeness;

pub use completeness::{CompletenessReport, Gap};

/// An endpoint in a template or predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ref {
    Entity(EntityId),
    /// A parameter, `let` binding or frame slot, bound at instantiation.
    Var(String),
    /// Wildcard, optionally constrained to descendants of a type. Only
    /// valid inside predicates.
    Any {
        name: String,
        ty: Option<EntityId>,
    },
}

impl Ref {
    pub fn entity(name: &str) -> Self {
        Ref::Entity(name.into())
    }

    pub fn var(name: &str) -> Self {
        Ref::Var(name.to_string())
    }

    fn is_wildcard(&self) -> bool {
        matches!(self, Ref::Any { .. })
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Entity(e) => write!(f, "{e}"),
            Ref::Var(v) => f.write_str(v),
            Ref::Any { name, ty: None } => write!(f, "?{name}"),
            Ref::Any { name, ty: Some(ty) } => write!(f, "?{name}:{ty}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinkTemplate {
    pub from: Ref,
    pub kind: String,
    pub to: Ref,
}

impl LinkTemplate {
    pub fn new(from: Ref, kind: &str, to: Ref) -> Self {
        LinkTemplate {
            from,
            kind: kind.to_string(),
            to,
        }
    }

    /// Shorthand for a template between two named entities.
    pub fn concrete(from: &str, kind: &str, to: &str) -> Self {
        Self::new(Ref::entity(from), kind, Ref::entity(to))
    }

    fn refs(&self) -> [&Ref; 2] {
        [&self.from, &self.to]
    }
}

impl fmt::Display for LinkTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.from, self.kind, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StatePredicate {
    Exists(LinkTemplate),
    NotExists(LinkTemplate),
}

impl StatePredicate {
    pub fn template(&self) -> &LinkTemplate {
        match self {
            StatePredicate::Exists(t) | StatePredicate::NotExists(t) => t,
        }
    }
}

impl fmt::Display for StatePredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatePredicate::Exists(t) => write!(f, "exists {t}"),
            StatePredicate::NotExists(t) => write!(f, "not {t}"),
        }
    }
}

/// A value bound to a workflow parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Entity(EntityId),
    Ticks(Tick),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Entity(e) => write!(f, "{e}"),
            Arg::Ticks(t) => write!(f, "{t}"),
        }
    }
}

/// Variable bindings used while instantiating templates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Env(BTreeMap<String, Arg>);

impl Env {
    pub fn new() -> Self {
        Env(BTreeMap::new())
    }

    pub fn bind(&mut self, name: &str, value: Arg) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Arg> {
        self.0.get(name)
    }

    fn entity(&self, name: &str) -> Result<EntityId> {
        match self.0.get(name) {
            Some(Arg::Entity(e)) => Ok(e.clone()),
            Some(Arg::Ticks(_)) => Err(Error::ArgumentType {
                param: name.to_string(),
                expected: "an entity",
            }),
            None => Err(Error::ResolveError {
                what: "variable",
                name: name.to_string(),
            }),
        }
    }

    pub fn ticks(&self, name: &str) -> Result<Tick> {
        match self.0.get(name) {
            Some(Arg::Ticks(t)) => Ok(*t),
            Some(Arg::Entity(_)) => Err(Error::ArgumentType {
                param: name.to_string(),
                expected: "a tick count",
            }),
            None => Err(Error::ResolveError {
                what: "variable",
                name: name.to_string(),
            }),
        }
    }

    /// Resolves a ref; wildcards come back as `None`.
    pub fn resolve(&self, r: &Ref) -> Result<Option<EntityId>> {
        match r {
            Ref::Entity(e) => Ok(Some(e.clone())),
            Ref::Var(v) => self.entity(v).map(Some),
            Ref::Any { .. } => Ok(None),
        }
    }

    fn substitute(&self, r: &Ref) -> Ref {
        match r {
            Ref::Var(v) => match self.0.get(v) {
                Some(Arg::Entity(e)) => Ref::Entity(e.clone()),
                _ => r.clone(),
            },
            _ => r.clone(),
        }
    }

    /// The template with every bound variable replaced by its entity.
    pub fn substitute_template(&self, t: &LinkTemplate) -> LinkTemplate {
        LinkTemplate {
            from: self.substitute(&t.from),
            kind: t.kind.clone(),
            to: self.substitute(&t.to),
        }
    }

    pub fn substitute_predicate(&self, p: &StatePredicate) -> StatePredicate {
        match p {
            StatePredicate::Exists(t) => StatePredicate::Exists(self.substitute_template(t)),
            StatePredicate::NotExists(t) => StatePredicate::NotExists(self.substitute_template(t)),
        }
    }

    fn triple(&self, t: &LinkTemplate) -> Result<Triple> {
        let from = self.resolve(&t.from)?;
        let to = self.resolve(&t.to)?;
        match (from, to) {
            (Some(from), Some(to)) => Ok(Triple {
                from,
                kind: t.kind.clone(),
                to,
            }),
            _ => Err(Error::MalformedTemplate {
                template: t.to_string(),
                reason: "wildcards are only allowed in predicates",
            }),
        }
    }
}

/// A named bundle of unlinks and links applied at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transitional {
    pub name: String,
    /// Universal (a descendant of `X_Transitional`) this transitional instantiates.
    pub universal: EntityId,
    pub params: Vec<String>,
    pub unlinks: Vec<LinkTemplate>,
    pub links: Vec<LinkTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub name: String,
    pub slots: Vec<String>,
    pub templates: Vec<LinkTemplate>,
}

impl Frame {
    /// Slots that some template refers to; a binding must cover these.
    pub fn used_slots(&self) -> BTreeSet<&str> {
        self.templates
            .iter()
            .flat_map(|t| t.refs())
            .filter_map(|r| match r {
                Ref::Var(v) => Some(v.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameActivation {
    pub id: usize,
    pub frame: String,
    /// Bound slots, in the frame's slot order.
    pub binding: Vec<(String, EntityId)>,
    pub links: Vec<Triple>,
    pub start: Tick,
    pub end: Option<Tick>,
}

impl FrameActivation {
    pub fn is_active(&self) -> bool {
        self.end.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Duration {
    Ticks(Tick),
    Var(String),
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Duration::Ticks(t) => write!(f, "{t}"),
            Duration::Var(v) => f.write_str(v),
        }
    }
}

/// One state edit in a step's postconditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    Unlink(LinkTemplate),
    Link(LinkTemplate),
    Apply {
        transitional: String,
        args: Vec<Ref>,
    },
    Activate {
        frame: String,
        binding: Vec<(String, Ref)>,
    },
    Deactivate {
        frame: String,
        binding: Vec<(String, Ref)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowStep {
    pub name: String,
    /// The external factor effectuating the step.
    pub agent: Option<Ref>,
    pub duration: Duration,
    pub preconditions: Vec<StatePredicate>,
    /// Applied when the step ends; placeholders assert rather than check them.
    pub postconditions: Vec<Edit>,
    pub placeholder: bool,
    pub doc: Option<String>,
}

impl WorkflowStep {
    pub fn new(name: &str, duration: Duration) -> Self {
        WorkflowStep {
            name: name.to_string(),
            agent: None,
            duration,
            preconditions: Vec::new(),
            postconditions: Vec::new(),
            placeholder: false,
            doc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopBound {
    Count(u64),
    /// Exit before an iteration once every predicate holds.
    Until(Vec<StatePredicate>),
    /// Exit before an iteration once the scenario horizon is reached.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Seq(Vec<Node>),
    Loop {
        body: Box<Node>,
        bound: Option<LoopBound>,
    },
    Cond {
        guard: Vec<StatePredicate>,
        then: Box<Node>,
        otherwise: Box<Node>,
    },
    Step(WorkflowStep),
}

use alloc::boxed::Box;

impl Node {
    /// Steps in source order.
    pub fn steps(&self) -> Vec<&WorkflowStep> {
        let mut out = Vec::new();
        self.collect_steps(&mut out);
        out
    }

    fn collect_steps<'a>(&'a self, out: &mut Vec<&'a WorkflowStep>) {
        match self {
            Node::Seq(items) => items.iter().for_each(|n| n.collect_steps(out)),
            Node::Loop { body, .. } => body.collect_steps(out),
            Node::Cond {
                then, otherwise, ..
            } => {
                then.collect_steps(out);
                otherwise.collect_steps(out);
            }
            Node::Step(s) => out.push(s),
        }
    }

    pub fn steps_mut(&mut self) -> Vec<&mut WorkflowStep> {
        let mut out = Vec::new();
        self.collect_steps_mut(&mut out);
        out
    }

    fn collect_steps_mut<'a>(&'a mut self, out: &mut Vec<&'a mut WorkflowStep>) {
        match self {
            Node::Seq(items) => items.iter_mut().for_each(|n| n.collect_steps_mut(out)),
            Node::Loop { body, .. } => body.collect_steps_mut(out),
            Node::Cond {
                then, otherwise, ..
            } => {
                then.collect_steps_mut(out);
                otherwise.collect_steps_mut(out);
            }
            Node::Step(s) => out.push(s),
        }
    }

    fn is_straight_line(&self) -> bool {
        match self {
            Node::Seq(items) => items.iter().all(Node::is_straight_line),
            Node::Step(_) => true,
            Node::Loop { .. } | Node::Cond { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamType {
    /// An entity, optionally required to descend from a type.
    Entity(Option<EntityId>),
    Ticks,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

/// `let name: ty where pattern`: binds `name` at run start to the unique
/// Particular of `ty` for which `pattern` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetBinding {
    pub name: String,
    pub ty: EntityId,
    pub pattern: LinkTemplate,
}

/// A Workflow (agent-driven) or Mechanism (`requires_agent == false`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workflow {
    pub name: String,
    pub params: Vec<Param>,
    pub lets: Vec<LetBinding>,
    pub body: Node,
    pub requires_agent: bool,
    /// End-to-end outcome checked after the last step by completeness checking.
    pub goal: Vec<StatePredicate>,
    pub doc: Option<String>,
}

impl Workflow {
    pub fn new(name: &str, body: Node, requires_agent: bool) -> Self {
        Workflow {
            name: name.to_string(),
            params: Vec::new(),
            lets: Vec::new(),
            body,
            requires_agent,
            goal: Vec::new(),
            doc: None,
        }
    }

    pub fn steps(&self) -> Vec<&WorkflowStep> {
        self.body.steps()
    }

    pub fn is_straight_line(&self) -> bool {
        self.body.is_straight_line()
    }

    /// Binds positional arguments to parameters, checking arity and types.
    pub fn bind_args(&self, world: &World, args: &[Arg]) -> Result<Env> {
        if args.len() != self.params.len() {
            return Err(Error::Arity {
                name: self.name.clone(),
                expected: self.params.len(),
                found: args.len(),
            });
        }
        let mut env = Env::new();
        for (param, arg) in self.params.iter().zip(args) {
            match (&param.ty, arg) {
                (ParamType::Ticks, Arg::Ticks(_)) => {}
                (ParamType::Entity(ty), Arg::Entity(e)) => {
                    world.registry.resolve(e.as_str())?;
                    if let Some(ty) = ty {
                        if !world.registry.is_descendant(e.as_str(), ty.as_str())? {
                            return Err(Error::ArgumentType {
                                param: param.name.clone(),
                                expected: "an entity of the declared type",
                            });
                        }
                    }
                }
                (ParamType::Ticks, _) => {
                    return Err(Error::ArgumentType {
                        param: param.name.clone(),
                        expected: "a tick count",
                    })
                }
                (ParamType::Entity(_), _) => {
                    return Err(Error::ArgumentType {
                        param: param.name.clone(),
                        expected: "an entity",
                    })
                }
            }
            env.bind(&param.name, arg.clone());
        }
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleAction {
    ActivateFrame {
        frame: String,
        binding: Vec<(String, EntityId)>,
    },
    DeactivateFrame {
        frame: String,
        binding: Vec<(String, EntityId)>,
    },
    StartWorkflow {
        workflow: String,
        args: Vec<Arg>,
    },
    ApplyTransitional {
        transitional: String,
        args: Vec<EntityId>,
    },
}

impl fmt::Display for RuleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn binding(f: &mut fmt::Formatter<'_>, b: &[(String, EntityId)]) -> fmt::Result {
            for (i, (slot, e)) in b.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{slot}={e}")?;
            }
            Ok(())
        }
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
            for (i, a) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            Ok(())
        }
        match self {
            RuleAction::ActivateFrame { frame, binding: b } => {
                write!(f, "activate {frame}(")?;
                binding(f, b)?;
                f.write_str(")")
            }
            RuleAction::DeactivateFrame { frame, binding: b } => {
                write!(f, "deactivate {frame}(")?;
                binding(f, b)?;
                f.write_str(")")
            }
            RuleAction::StartWorkflow { workflow, args } => {
                write!(f, "start {workflow}(")?;
                list(f, args)?;
                f.write_str(")")
            }
            RuleAction::ApplyTransitional { transitional, args } => {
                write!(f, "apply {transitional}(")?;
                list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

/// Condition-action pair, fired on false-to-true edges of its guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub guard: Vec<StatePredicate>,
    pub action: RuleAction,
}

/// A binding in slot order and the links it instantiates.
type FrameInstance = (Vec<(String, EntityId)>, Vec<Triple>);

/// A concrete world change, produced by expanding edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Op {
    Unlink(Triple),
    Link(Triple),
    Activate {
        frame: String,
        binding: Vec<(String, EntityId)>,
        links: Vec<Triple>,
    },
    Deactivate(usize),
}

impl Op {
    fn is_removal(&self) -> bool {
        matches!(self, Op::Unlink(_) | Op::Deactivate(_))
    }
}

fn no_duplicates(items: &[String], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for item in items {
        if !seen.insert(item.as_str()) {
            return Err(Error::DuplicateName {
                name: format!("{what} {item}"),
            });
        }
    }
    Ok(())
}

impl World {
    fn ensure_unused(&self, name: &str) -> Result<()> {
        if !crate::ontology::is_valid_name(name) {
            return Err(Error::InvalidName {
                name: name.to_string(),
            });
        }
        if self.name_taken(name) || self.transitionals.contains_key(name) {
            return Err(Error::DuplicateName {
                name: name.to_string(),
            });
        }
        Ok(())
    }

    /// Checks a template's refs and kind. Variables must appear in `vars`;
    /// wildcards are rejected unless `allow_wildcards`. A template with two
    /// concrete endpoints is validated as a link.
    pub(crate) fn check_template(
        &self,
        t: &LinkTemplate,
        vars: &dyn Fn(&str) -> bool,
        allow_wildcards: bool,
        unknown_var: &dyn Fn(&str) -> Error,
    ) -> Result<()> {
        self.resolve_kind(&t.kind)?;
        for r in t.refs() {
            match r {
                Ref::Entity(e) => {
                    self.registry.resolve(e.as_str())?;
                }
                Ref::Var(v) if !vars(v) => return Err(unknown_var(v)),
                Ref::Var(_) => {}
                Ref::Any { ty, .. } => {
                    if !allow_wildcards {
                        return Err(Error::MalformedTemplate {
                            template: t.to_string(),
                            reason: "wildcards are only allowed in predicates",
                        });
                    }
                    if let Some(ty) = ty {
                        self.registry.resolve(ty.as_str())?;
                    }
                }
            }
        }
        if let (Ref::Entity(from), Ref::Entity(to)) = (&t.from, &t.to) {
            if !allow_wildcards {
                let triple = Triple::new(from.clone(), t.kind.clone(), to.clone());
                if let Err(Error::InvalidLink(failure)) = self.admit(&triple) {
                    return Err(Error::InvalidTemplate {
                        template: t.to_string(),
                        failure: Box::new(failure),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn define_transitional(
        &mut self,
        name: &str,
        universal: &str,
        params: Vec<String>,
        unlinks: Vec<LinkTemplate>,
        links: Vec<LinkTemplate>,
    ) -> Result<Transitional> {
        self.ensure_unused(name)?;
        no_duplicates(&params, "parameter")?;
        if !self.registry.is_descendant(universal, b::TRANSITIONAL)? {
            return Err(Error::BadParent {
                name: name.to_string(),
                parent: universal.to_string(),
                reason: "a Transitional must instantiate a descendant of X_Transitional",
            });
        }
        let is_param = |v: &str| params.iter().any(|p| p == v);
        let unknown = |v: &str| Error::ResolveError {
            what: "parameter",
            name: v.to_string(),
        };
        for t in unlinks.iter().chain(&links) {
            self.check_template(t, &is_param, false, &unknown)?;
        }
        if let Some(t) = unlinks.iter().find(|t| links.contains(t)) {
            return Err(Error::MalformedTemplate {
                template: t.to_string(),
                reason: "appears among both unlinks and links",
            });
        }
        self.registry
            .instantiate_particular(name, universal, None)?;
        let tr = Transitional {
            name: name.to_string(),
            universal: universal.into(),
            params,
            unlinks,
            links,
        };
        self.transitionals.insert(tr.name.clone(), tr.clone());
        Ok(tr)
    }

    fn transitional_ops(&self, name: &str, args: &[EntityId]) -> Result<Vec<Op>> {
        let tr = self
            .transitionals
            .get(name)
            .ok_or_else(|| Error::ResolveError {
                what: "transitional",
                name: name.to_string(),
            })?;
        if tr.params.len() != args.len() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: tr.params.len(),
                found: args.len(),
            });
        }
        let mut env = Env::new();
        for (p, a) in tr.params.iter().zip(args) {
            self.registry.resolve(a.as_str())?;
            env.bind(p, Arg::Entity(a.clone()));
        }
        let mut ops = Vec::with_capacity(tr.unlinks.len() + tr.links.len());
        for t in &tr.unlinks {
            ops.push(Op::Unlink(env.triple(t)?));
        }
        for t in &tr.links {
            ops.push(Op::Link(env.triple(t)?));
        }
        Ok(ops)
    }

    /// Applies all unlinks, then all links, at `at`. Nothing changes on failure.
    pub fn apply_transitional(
        &mut self,
        name: &str,
        args: &[EntityId],
        at: Tick,
    ) -> Result<Vec<TraceEvent>> {
        let ops = self.transitional_ops(name, args)?;
        self.apply_ops(&ops, at)
            .map_err(|e| Error::PreconditionFailed {
                reason: e.to_string(),
            })
    }

    pub fn define_frame(
        &mut self,
        name: &str,
        slots: Vec<String>,
        templates: Vec<LinkTemplate>,
    ) -> Result<Frame> {
        self.ensure_unused(name)?;
        no_duplicates(&slots, "slot")?;
        let is_slot = |v: &str| slots.iter().any(|s| s == v);
        let unknown = |v: &str| Error::UnknownSlot {
            frame: name.to_string(),
            slot: v.to_string(),
        };
        for t in &templates {
            self.check_template(t, &is_slot, false, &unknown)?;
        }
        let frame = Frame {
            name: name.to_string(),
            slots,
            templates,
        };
        self.frames.insert(frame.name.clone(), frame.clone());
        Ok(frame)
    }

    /// Normalizes a binding to slot order and instantiates the frame's links.
    fn frame_instance(&self, name: &str, binding: &[(String, EntityId)]) -> Result<FrameInstance> {
        let frame = self.frames.get(name).ok_or_else(|| Error::ResolveError {
            what: "frame",
            name: name.to_string(),
        })?;
        let mut env = Env::new();
        for (slot, entity) in binding {
            if !frame.slots.contains(slot) {
                return Err(Error::UnknownSlot {
                    frame: name.to_string(),
                    slot: slot.clone(),
                });
            }
            if env.get(slot).is_some() {
                return Err(Error::DuplicateName {
                    name: format!("slot {slot}"),
                });
            }
            let def = self.registry.resolve(entity.as_str())?;
            if def.layer != Layer::P {
                return Err(Error::ArgumentType {
                    param: slot.clone(),
                    expected: "a Particular",
                });
            }
            env.bind(slot, Arg::Entity(entity.clone()));
        }
        let missing: Vec<&str> = frame
            .used_slots()
            .into_iter()
            .filter(|s| env.get(s).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteBinding {
                frame: name.to_string(),
                missing: missing.join(", "),
            });
        }
        let normalized = frame
            .slots
            .iter()
            .filter_map(|s| match env.get(s) {
                Some(Arg::Entity(e)) => Some((s.clone(), e.clone())),
                _ => None,
            })
            .collect();
        let links = frame
            .templates
            .iter()
            .map(|t| env.triple(t))
            .collect::<Result<_>>()?;
        Ok((normalized, links))
    }

    fn activate_op(&self, name: &str, binding: &[(String, EntityId)]) -> Result<Op> {
        let (binding, links) = self.frame_instance(name, binding)?;
        Ok(Op::Activate {
            frame: name.to_string(),
            binding,
            links,
        })
    }

    /// The active activation of `frame` under `binding`, if any.
    pub fn find_activation(&self, frame: &str, binding: &[(String, EntityId)]) -> Option<usize> {
        let (normalized, _) = self.frame_instance(frame, binding).ok()?;
        self.activations
            .iter()
            .find(|a| a.is_active() && a.frame == frame && a.binding == normalized)
            .map(|a| a.id)
    }

    /// Creates every link of the frame at `at` as one unit.
    pub fn activate_frame(
        &mut self,
        frame: &str,
        binding: &[(String, EntityId)],
        at: Tick,
    ) -> Result<usize> {
        let op = self.activate_op(frame, binding)?;
        self.apply_ops(core::slice::from_ref(&op), at)?;
        Ok(self.activations.len() - 1)
    }

    fn deactivate_op(&self, id: usize, at: Tick) -> Result<Op> {
        let act = self
            .activations
            .get(id)
            .ok_or_else(|| Error::ResolveError {
                what: "frame activation",
                name: format!("#{id}"),
            })?;
        if !act.is_active() {
            return Err(Error::NotActive {
                frame: act.frame.clone(),
                missing: String::new(),
            });
        }
        let missing: Vec<String> = act
            .links
            .iter()
            .filter(|t| self.open_link(t, at).is_err())
            .map(|t| t.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::NotActive {
                frame: act.frame.clone(),
                missing: missing.join("; "),
            });
        }
        Ok(Op::Deactivate(id))
    }

    /// Ends exactly the links created by an activation, as one unit.
    pub fn deactivate_frame(&mut self, activation: usize, at: Tick) -> Result<Vec<TraceEvent>> {
        let op = self.deactivate_op(activation, at)?;
        self.apply_ops(core::slice::from_ref(&op), at)
    }

    /// Checks a batch against the world as it would be mid-batch, so a
    /// removal can make room for a later addition of the same link.
    fn check_ops(&self, ops: &[Op], at: Tick) -> Result<Vec<Option<crate::ValidationFailure>>> {
        let mut removed: BTreeSet<&Triple> = BTreeSet::new();
        let mut gone: BTreeSet<usize> = BTreeSet::new();
        for op in ops.iter().filter(|o| o.is_removal()) {
            match op {
                Op::Unlink(t) => {
                    self.open_link(t, at)?;
                    if !removed.insert(t) {
                        return Err(Error::NoActiveLink {
                            from: t.from.to_string(),
                            kind: t.kind.clone(),
                            to: t.to.to_string(),
                            at,
                        });
                    }
                }
                Op::Deactivate(id) => {
                    self.deactivate_op(*id, at)?;
                    let act = &self.activations[*id];
                    if !gone.insert(*id) || act.links.iter().any(|t| removed.contains(t)) {
                        return Err(Error::NotActive {
                            frame: act.frame.clone(),
                            missing: String::new(),
                        });
                    }
                    removed.extend(act.links.iter());
                }
                _ => unreachable!(),
            }
        }
        let mut added: BTreeSet<&Triple> = BTreeSet::new();
        let mut warnings = Vec::new();
        let mut check_add = |t: &'_ Triple, added: &mut BTreeSet<&'_ Triple>| -> Result<()> {
            warnings.push(self.admit(t)?);
            let blocked = if removed.contains(t) {
                // Closed at `at` by this batch; only older spans could clash.
                false
            } else {
                self.overlaps(t, at)
            };
            if blocked || added.contains(t) {
                return Err(Self::duplicate(t));
            }
            Ok(())
        };
        for op in ops.iter().filter(|o| !o.is_removal()) {
            match op {
                Op::Link(t) => {
                    check_add(t, &mut added)?;
                    added.insert(t);
                }
                Op::Activate {
                    frame,
                    binding,
                    links,
                } => {
                    let already = self.activations.iter().any(|a| {
                        a.is_active()
                            && &a.frame == frame
                            && &a.binding == binding
                            && !gone.contains(&a.id)
                    });
                    if already {
                        return Err(Error::AlreadyActive {
                            frame: frame.clone(),
                        });
                    }
                    for t in links {
                        check_add(t, &mut added)?;
                        added.insert(t);
                    }
                }
                _ => unreachable!(),
            }
        }
        Ok(warnings)
    }

    /// Applies removals then additions, each group in listed order.
    pub(crate) fn apply_ops(&mut self, ops: &[Op], at: Tick) -> Result<Vec<TraceEvent>> {
        let mut warnings = self.check_ops(ops, at)?.into_iter();
        let mut events = Vec::new();
        for op in ops.iter().filter(|o| o.is_removal()) {
            match op {
                Op::Unlink(t) => {
                    let idx = self.open_link(t, at)?;
                    events.push(self.close_link(idx, at));
                }
                Op::Deactivate(id) => {
                    let act = &mut self.activations[*id];
                    act.end = Some(at);
                    let frame = act.frame.clone();
                    let links = act.links.clone();
                    events.push(self.record(
                        at,
                        Event::FrameDeactivate {
                            frame,
                            activation: *id,
                        },
                    ));
                    for t in &links {
                        let idx = self.open_link(t, at)?;
                        events.push(self.close_link(idx, at));
                    }
                }
                _ => unreachable!(),
            }
        }
        for op in ops.iter().filter(|o| !o.is_removal()) {
            match op {
                Op::Link(t) => {
                    let w = warnings.next().flatten();
                    events.push(self.insert_link(t.clone(), at, w));
                }
                Op::Activate {
                    frame,
                    binding,
                    links,
                } => {
                    let id = self.activations.len();
                    self.activations.push(FrameActivation {
                        id,
                        frame: frame.clone(),
                        binding: binding.clone(),
                        links: links.clone(),
                        start: at,
                        end: None,
                    });
                    events.push(
                        self.record(
                            at,
                            Event::FrameActivate {
                                frame: frame.clone(),
                                activation: id,
                                binding: binding
                                    .iter()
                                    .map(|(slot, e)| SlotBinding {
                                        slot: slot.clone(),
                                        entity: e.to_string(),
                                    })
                                    .collect(),
                            },
                        ),
                    );
                    for t in links {
                        let w = warnings.next().flatten();
                        events.push(self.insert_link(t.clone(), at, w));
                    }
                }
                _ => unreachable!(),
            }
        }
        Ok(events)
    }

    /// Keeps only the ops that would change the world, so asserting an
    /// effect that already holds is not an error.
    pub(crate) fn lenient_ops(&self, ops: Vec<Op>, at: Tick) -> Vec<Op> {
        ops.into_iter()
            .filter(|op| match op {
                Op::Unlink(t) => self.open_link(t, at).is_ok(),
                Op::Deactivate(id) => self.deactivate_op(*id, at).is_ok(),
                Op::Link(t) => self.admit(t).is_ok() && !self.overlaps(t, at),
                Op::Activate { frame, binding, .. } => !self
                    .activations
                    .iter()
                    .any(|a| a.is_active() && &a.frame == frame && &a.binding == binding),
            })
            .collect()
    }

    /// Expands step edits into concrete ops under `env`.
    pub(crate) fn edit_ops(&self, edits: &[Edit], env: &Env, at: Tick) -> Result<Vec<Op>> {
        let mut ops = Vec::new();
        for edit in edits {
            match edit {
                Edit::Unlink(t) => ops.push(Op::Unlink(env.triple(t)?)),
                Edit::Link(t) => ops.push(Op::Link(env.triple(t)?)),
                Edit::Apply { transitional, args } => {
                    let args = args
                        .iter()
                        .map(|a| {
                            env.resolve(a)?.ok_or_else(|| Error::MalformedTemplate {
                                template: a.to_string(),
                                reason: "wildcards are only allowed in predicates",
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    ops.extend(self.transitional_ops(transitional, &args)?);
                }
                Edit::Activate { frame, binding } => {
                    let binding = resolve_binding(binding, env)?;
                    ops.push(self.activate_op(frame, &binding)?);
                }
                Edit::Deactivate { frame, binding } => {
                    let binding = resolve_binding(binding, env)?;
                    let id =
                        self.find_activation(frame, &binding)
                            .ok_or_else(|| Error::NotActive {
                                frame: frame.clone(),
                                missing: String::new(),
                            })?;
                    ops.push(self.deactivate_op(id, at)?);
                }
            }
        }
        Ok(ops)
    }

    pub(crate) fn rule_ops(&self, action: &RuleAction, at: Tick) -> Result<Vec<Op>> {
        match action {
            RuleAction::ActivateFrame { frame, binding } => {
                Ok(alloc::vec![self.activate_op(frame, binding)?])
            }
            RuleAction::DeactivateFrame { frame, binding } => {
                let id = self
                    .find_activation(frame, binding)
                    .ok_or_else(|| Error::NotActive {
                        frame: frame.clone(),
                        missing: String::new(),
                    })?;
                Ok(alloc::vec![self.deactivate_op(id, at)?])
            }
            RuleAction::ApplyTransitional { transitional, args } => {
                self.transitional_ops(transitional, args)
            }
            RuleAction::StartWorkflow { .. } => Ok(Vec::new()),
        }
    }

    /// Truth of a predicate over the links active at `at`.
    pub fn holds(&self, pred: &StatePredicate, env: &Env, at: Tick) -> Result<bool> {
        let t = pred.template();
        let found = self.matches_exist(t, env, at)?;
        Ok(match pred {
            StatePredicate::Exists(_) => found,
            StatePredicate::NotExists(_) => !found,
        })
    }

    /// Every predicate holds (an empty conjunction is true).
    pub fn all_hold(&self, preds: &[StatePredicate], env: &Env, at: Tick) -> Result<bool> {
        for p in preds {
            if !self.holds(p, env, at)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First predicate that does not hold.
    pub fn first_failing<'p>(
        &self,
        preds: &'p [StatePredicate],
        env: &Env,
        at: Tick,
    ) -> Result<Option<&'p StatePredicate>> {
        for p in preds {
            if !self.holds(p, env, at)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    fn matches_exist(&self, t: &LinkTemplate, env: &Env, at: Tick) -> Result<bool> {
        let from = env.resolve(&t.from)?;
        let to = env.resolve(&t.to)?;
        let fits = |side: &Ref, entity: &EntityId| -> bool {
            match side {
                Ref::Any { ty: Some(ty), .. } => self
                    .registry
                    .is_descendant(entity.as_str(), ty.as_str())
                    .unwrap_or(false),
                _ => true,
            }
        };
        let pivot = from.as_ref().or(to.as_ref());
        let candidates: Vec<&crate::LinkInstance> = match pivot {
            Some(p) => self
                .touching
                .get(p)
                .into_iter()
                .flatten()
                .map(|&i| &self.links[i])
                .collect(),
            None => self.links.iter().collect(),
        };
        Ok(candidates.into_iter().any(|l| {
            l.kind == t.kind
                && l.is_active_at(at)
                && from.as_ref().is_none_or(|f| *f == l.from)
                && to.as_ref().is_none_or(|x| *x == l.to)
                && fits(&t.from, &l.from)
                && fits(&t.to, &l.to)
        }))
    }

    pub fn define_workflow(&mut self, workflow: Workflow) -> Result<()> {
        self.ensure_unused(&workflow.name)?;
        self.check_workflow(&workflow)?;
        self.workflow_order.push(workflow.name.clone());
        self.workflows.insert(workflow.name.clone(), workflow);
        Ok(())
    }

    fn check_workflow(&self, wf: &Workflow) -> Result<()> {
        let mut names: Vec<String> = wf.params.iter().map(|p| p.name.clone()).collect();
        names.extend(wf.lets.iter().map(|l| l.name.clone()));
        no_duplicates(&names, "variable")?;
        let ticks_param = |v: &str| {
            wf.params
                .iter()
                .any(|p| p.name == v && p.ty == ParamType::Ticks)
        };
        let entity_var = |v: &str| {
            wf.params
                .iter()
                .any(|p| p.name == v && matches!(p.ty, ParamType::Entity(_)))
                || wf.lets.iter().any(|l| l.name == v)
        };
        let unknown = |v: &str| Error::ResolveError {
            what: "variable",
            name: v.to_string(),
        };
        for p in &wf.params {
            if let ParamType::Entity(Some(ty)) = &p.ty {
                self.registry.resolve(ty.as_str())?;
            }
        }
        for (i, l) in wf.lets.iter().enumerate() {
            self.registry.resolve(l.ty.as_str())?;
            // A let may refer to parameters and earlier lets.
            let visible = |v: &str| {
                v == l.name
                    || wf
                        .params
                        .iter()
                        .any(|p| p.name == v && matches!(p.ty, ParamType::Entity(_)))
                    || wf.lets[..i].iter().any(|e| e.name == v)
            };
            self.check_template(&l.pattern, &visible, false, &unknown)?;
            if !l
                .pattern
                .refs()
                .iter()
                .any(|r| **r == Ref::Var(l.name.clone()))
            {
                return Err(Error::MalformedTemplate {
                    template: l.pattern.to_string(),
                    reason: "a let pattern must mention the bound name",
                });
            }
        }
        for p in &wf.goal {
            self.check_template(p.template(), &entity_var, true, &unknown)?;
        }
        self.check_node(wf, &wf.body, &entity_var, &ticks_param, &unknown)
    }

    fn check_node(
        &self,
        wf: &Workflow,
        node: &Node,
        entity_var: &dyn Fn(&str) -> bool,
        ticks_param: &dyn Fn(&str) -> bool,
        unknown: &dyn Fn(&str) -> Error,
    ) -> Result<()> {
        match node {
            Node::Seq(items) => {
                for n in items {
                    self.check_node(wf, n, entity_var, ticks_param, unknown)?;
                }
            }
            Node::Loop { body, bound } => {
                match bound {
                    None => {
                        return Err(Error::UnboundedLoop {
                            workflow: wf.name.clone(),
                        })
                    }
                    Some(LoopBound::Until(guard)) => {
                        for p in guard {
                            self.check_template(p.template(), entity_var, true, unknown)?;
                        }
                    }
                    Some(_) => {}
                }
                self.check_node(wf, body, entity_var, ticks_param, unknown)?;
            }
            Node::Cond {
                guard,
                then,
                otherwise,
            } => {
                for p in guard {
                    self.check_template(p.template(), entity_var, true, unknown)?;
                }
                self.check_node(wf, then, entity_var, ticks_param, unknown)?;
                self.check_node(wf, otherwise, entity_var, ticks_param, unknown)?;
            }
            Node::Step(step) => self.check_step(wf, step, entity_var, ticks_param, unknown)?,
        }
        Ok(())
    }

    fn check_step(
        &self,
        wf: &Workflow,
        step: &WorkflowStep,
        entity_var: &dyn Fn(&str) -> bool,
        ticks_param: &dyn Fn(&str) -> bool,
        unknown: &dyn Fn(&str) -> Error,
    ) -> Result<()> {
        match &step.agent {
            None if wf.requires_agent => {
                return Err(Error::MissingAgent {
                    workflow: wf.name.clone(),
                    step: step.name.clone(),
                })
            }
            Some(Ref::Entity(e)) => {
                self.registry.resolve(e.as_str())?;
            }
            Some(Ref::Var(v)) if !entity_var(v) => return Err(unknown(v)),
            Some(Ref::Any { .. }) => {
                return Err(Error::MalformedTemplate {
                    template: step.name.clone(),
                    reason: "an agent cannot be a wildcard",
                })
            }
            _ => {}
        }
        if let Duration::Var(v) = &step.duration {
            if !ticks_param(v) {
                return Err(Error::ArgumentType {
                    param: v.clone(),
                    expected: "a tick-count parameter",
                });
            }
        }
        for p in &step.preconditions {
            self.check_template(p.template(), entity_var, true, unknown)?;
        }
        let check_ref = |r: &Ref| -> Result<()> {
            match r {
                Ref::Entity(e) => self.registry.resolve(e.as_str()).map(|_| ()),
                Ref::Var(v) if !entity_var(v) => Err(unknown(v)),
                Ref::Var(_) => Ok(()),
                Ref::Any { .. } => Err(Error::MalformedTemplate {
                    template: r.to_string(),
                    reason: "wildcards are only allowed in predicates",
                }),
            }
        };
        for edit in &step.postconditions {
            match edit {
                Edit::Unlink(t) | Edit::Link(t) => {
                    self.check_template(t, entity_var, false, unknown)?
                }
                Edit::Apply { transitional, args } => {
                    let tr = self.transitionals.get(transitional).ok_or_else(|| {
                        Error::ResolveError {
                            what: "transitional",
                            name: transitional.clone(),
                        }
                    })?;
                    if tr.params.len() != args.len() {
                        return Err(Error::Arity {
                            name: transitional.clone(),
                            expected: tr.params.len(),
                            found: args.len(),
                        });
                    }
                    args.iter().try_for_each(check_ref)?;
                }
                Edit::Activate { frame, binding } | Edit::Deactivate { frame, binding } => {
                    let f = self.frames.get(frame).ok_or_else(|| Error::ResolveError {
                        what: "frame",
                        name: frame.clone(),
                    })?;
                    for (slot, r) in binding {
                        if !f.slots.contains(slot) {
                            return Err(Error::UnknownSlot {
                                frame: frame.clone(),
                                slot: slot.clone(),
                            });
                        }
                        check_ref(r)?;
                    }
                    let bound: BTreeSet<&str> = binding.iter().map(|(s, _)| s.as_str()).collect();
                    let missing: Vec<&str> = f
                        .used_slots()
                        .into_iter()
                        .filter(|s| !bound.contains(s))
                        .collect();
                    if !missing.is_empty() {
                        return Err(Error::IncompleteBinding {
                            frame: frame.clone(),
                            missing: missing.join(", "),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn define_rule(
        &mut self,
        name: &str,
        guard: Vec<StatePredicate>,
        action: RuleAction,
    ) -> Result<Rule> {
        self.ensure_unused(name)?;
        let no_vars = |_: &str| false;
        let unknown = |v: &str| Error::ResolveError {
            what: "entity",
            name: v.to_string(),
        };
        for p in &guard {
            self.check_template(p.template(), &no_vars, true, &unknown)?;
        }
        let unknown_action = |target: String| Error::UnknownAction {
            rule: name.to_string(),
            target,
        };
        match &action {
            RuleAction::ActivateFrame { frame, binding }
            | RuleAction::DeactivateFrame { frame, binding } => {
                if !self.frames.contains_key(frame) {
                    return Err(unknown_action(format!("frame `{frame}`")));
                }
                self.frame_instance(frame, binding)?;
            }
            RuleAction::StartWorkflow { workflow, args } => {
                let wf = self
                    .workflows
                    .get(workflow)
                    .ok_or_else(|| unknown_action(format!("workflow `{workflow}`")))?;
                wf.bind_args(self, args)?;
            }
            RuleAction::ApplyTransitional { transitional, args } => {
                if !self.transitionals.contains_key(transitional) {
                    return Err(unknown_action(format!("transitional `{transitional}`")));
                }
                self.transitional_ops(transitional, args)?;
            }
        }
        let rule = Rule {
            name: name.to_string(),
            guard,
            action,
        };
        self.rules.push(rule.clone());
        Ok(rule)
    }

    /// Static completeness of a workflow from the given initial facts.
    pub fn check_completeness(
        &self,
        workflow: &Workflow,
        initial: &[StatePredicate],
    ) -> CompletenessReport {
        completeness::check(self, workflow, initial)
    }
}

fn resolve_binding(binding: &[(String, Ref)], env: &Env) -> Result<Vec<(String, EntityId)>> {
    binding
        .iter()
        .map(|(slot, r)| {
            let e = env.resolve(r)?.ok_or_else(|| Error::MalformedTemplate {
                template: r.to_string(),
                reason: "wildcards are only allowed in predicates",
            })?;
            Ok((slot.clone(), e))
        })
        .collect()
}
