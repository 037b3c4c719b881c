use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{Frame, FrameActivation, Rule, Transitional, Workflow};
use crate::ontology::{EntityId, Registry};
use crate::relations::{
    builtin_kinds, LinkInstance, LinkWarning, RelationDeclaration, RelationKind, Tier2Policy,
    Triple,
};
use crate::trace::{Event, TraceEvent};
use crate::Tick;

/// A model (registry plus definitions) together with its link history and
/// trace.
///
/// Definitions happen while a model is loaded; after that only links,
/// frame activations and the trace change, all through `&mut self`.
#[derive(Debug, Clone)]
pub struct World {
    pub(crate) name: String,
    pub(crate) registry: Registry,
    pub(crate) kinds: Vec<RelationKind>,
    pub(crate) kind_index: BTreeMap<String, usize>,
    pub(crate) declarations: Vec<RelationDeclaration>,
    pub(crate) links: Vec<LinkInstance>,
    pub(crate) open: BTreeMap<Triple, usize>,
    pub(crate) touching: BTreeMap<EntityId, Vec<usize>>,
    pub(crate) trace: Vec<TraceEvent>,
    pub(crate) tier2: Tier2Policy,
    pub(crate) warnings: Vec<LinkWarning>,
    pub(crate) transitionals: BTreeMap<String, Transitional>,
    pub(crate) frames: BTreeMap<String, Frame>,
    pub(crate) activations: Vec<FrameActivation>,
    pub(crate) workflows: BTreeMap<String, Workflow>,
    pub(crate) workflow_order: Vec<String>,
    pub(crate) rules: Vec<Rule>,
}

impl Default for World {
    fn default() -> Self {
        World::new("model")
    }
}

impl World {
    /// An empty model over the shipped B taxonomy and built-in relation kinds.
    pub fn new(name: impl Into<String>) -> Self {
        let kinds = builtin_kinds();
        let kind_index = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| (k.name.clone(), i))
            .collect();
        World {
            name: name.into(),
            registry: Registry::bootstrap(),
            kinds,
            kind_index,
            declarations: Vec::new(),
            links: Vec::new(),
            open: BTreeMap::new(),
            touching: BTreeMap::new(),
            trace: Vec::new(),
            tier2: Tier2Policy::Strict,
            warnings: Vec::new(),
            transitionals: BTreeMap::new(),
            frames: BTreeMap::new(),
            activations: Vec::new(),
            workflows: BTreeMap::new(),
            workflow_order: Vec::new(),
            rules: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Mutable registry access for entity definitions.
    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn kinds(&self) -> &[RelationKind] {
        &self.kinds
    }

    pub fn kind(&self, name: &str) -> Option<&RelationKind> {
        self.kind_index.get(name).map(|&i| &self.kinds[i])
    }

    pub fn declarations(&self) -> &[RelationDeclaration] {
        &self.declarations
    }

    /// Every link ever created, in creation order.
    pub fn links(&self) -> &[LinkInstance] {
        &self.links
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn tier2_policy(&self) -> Tier2Policy {
        self.tier2
    }

    pub fn set_tier2_policy(&mut self, policy: Tier2Policy) {
        self.tier2 = policy;
    }

    /// Links admitted despite a tier-2 failure under [`Tier2Policy::Warn`].
    pub fn warnings(&self) -> &[LinkWarning] {
        &self.warnings
    }

    pub fn transitional(&self, name: &str) -> Option<&Transitional> {
        self.transitionals.get(name)
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.get(name)
    }

    /// Frames by name.
    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.values()
    }

    /// Transitionals by name.
    pub fn transitionals(&self) -> impl Iterator<Item = &Transitional> {
        self.transitionals.values()
    }

    pub fn activations(&self) -> &[FrameActivation] {
        &self.activations
    }

    pub fn workflow(&self, name: &str) -> Option<&Workflow> {
        self.workflows.get(name)
    }

    /// Workflows in definition order.
    pub fn workflows(&self) -> impl Iterator<Item = &Workflow> {
        self.workflow_order.iter().map(|n| &self.workflows[n])
    }

    /// Rules in definition order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Definitions are shared between entities, kinds, transitionals,
    /// frames, workflows and rules so every name resolves to one thing.
    pub(crate) fn name_taken(&self, name: &str) -> bool {
        self.registry.contains(name)
            || self.kind_index.contains_key(name)
            || self.frames.contains_key(name)
            || self.workflows.contains_key(name)
            || self.rules.iter().any(|r| r.name == name)
    }

    pub(crate) fn record(&mut self, at: Tick, event: Event) -> TraceEvent {
        let ev = TraceEvent {
            seq: self.trace.len() as u64,
            at,
            event,
        };
        self.trace.push(ev.clone());
        ev
    }
}
