//! Relation kinds, U-level declarations, P-level links and their validation.
//!
//! Validation runs in two tiers. Tier 1 checks a kind's B-level signature:
//! the B ancestor of each endpoint must descend from the kind's domain or
//! range bound. Tier 2 applies to links between Particulars: some stored
//! declaration between Universals must cover both endpoints. Tier 1 alone
//! would accept `pot1 Participates_In drive1`; tier 2 rejects it unless
//! Pottery was declared to participate in Driving.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::ontology::{b, EntityId, Layer};
use crate::trace::{Event, TraceEvent};
use crate::world::World;
use crate::Tick;

pub const PARTICIPATES_IN: &str = "Participates_In";
pub const CONTINUANT_PART_OF: &str = "Continuant_Part_Of";
pub const HAS_QUALITY: &str = "Has_Quality";
pub const HAS_ROLE: &str = "Has_Role";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationKind {
    pub name: String,
    pub domain: EntityId,
    pub range: EntityId,
    pub builtin: bool,
}

pub(crate) fn builtin_kinds() -> Vec<RelationKind> {
    [
        (PARTICIPATES_IN, b::INDEPENDENT_CONTINUANT, b::OCCURRENT),
        (CONTINUANT_PART_OF, b::CONTINUANT, b::CONTINUANT),
        (HAS_QUALITY, b::INDEPENDENT_CONTINUANT, b::QUALITY),
        (HAS_ROLE, b::INDEPENDENT_CONTINUANT, b::ROLE),
    ]
    .into_iter()
    .map(|(name, domain, range)| RelationKind {
        name: name.to_string(),
        domain: domain.into(),
        range: range.into(),
        builtin: true,
    })
    .collect()
}

/// A U-level permission: particulars of `from` may be linked to
/// particulars of `to` by `kind`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationDeclaration {
    pub from: EntityId,
    pub kind: String,
    pub to: EntityId,
}

/// A directed `(from, kind, to)` edge, independent of time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub from: EntityId,
    pub kind: String,
    pub to: EntityId,
}

impl Triple {
    pub fn new(
        from: impl Into<EntityId>,
        kind: impl Into<String>,
        to: impl Into<EntityId>,
    ) -> Self {
        Triple {
            from: from.into(),
            kind: kind.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.from, self.kind, self.to)
    }
}

/// A P-level link alive over `[start, end)`; `end == None` means still active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkInstance {
    pub from: EntityId,
    pub kind: String,
    pub to: EntityId,
    pub start: Tick,
    pub end: Option<Tick>,
}

impl LinkInstance {
    pub fn is_active_at(&self, at: Tick) -> bool {
        self.start <= at && self.end.is_none_or(|end| end > at)
    }

    pub fn triple(&self) -> Triple {
        Triple::new(self.from.clone(), self.kind.clone(), self.to.clone())
    }

    fn matches(&self, t: &Triple) -> bool {
        self.from == t.from && self.kind == t.kind && self.to == t.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Out,
    In,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Out => "out",
            Direction::In => "in",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateEntry {
    pub direction: Direction,
    pub kind: String,
    pub counterpart: EntityId,
}

/// Links touching one entity at one tick, ordered by kind then counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub entity: EntityId,
    pub at: Tick,
    pub links: Vec<StateEntry>,
}

impl State {
    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, direction: Direction, kind: &str, counterpart: &str) -> bool {
        self.links
            .iter()
            .any(|e| e.direction == direction && e.kind == kind && e.counterpart == counterpart)
    }
}

/// A Thick Independent Continuant: the continuant with its relationships.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tic {
    pub core: EntityId,
    pub view: TicView,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TicView {
    /// Declarations touching the entity or any of its ancestors.
    Declarations(Vec<(Direction, RelationDeclaration)>),
    /// Links active at a tick.
    Links(State),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Domain,
    Range,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Domain => "domain",
            Side::Range => "range",
        })
    }
}

/// Why a declaration or link was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationFailure {
    /// A P-level link endpoint is not a Particular.
    NotParticular { entity: String, layer: Layer },
    /// Tier 1: the endpoint's B ancestor does not descend from the bound.
    Signature {
        kind: String,
        side: Side,
        entity: String,
        b_ancestor: String,
        required: String,
    },
    /// Tier 2: no U-level declaration covers the pair.
    Uncovered {
        kind: String,
        from: String,
        to: String,
    },
}

impl ValidationFailure {
    pub fn tier(&self) -> u8 {
        match self {
            ValidationFailure::NotParticular { .. } | ValidationFailure::Signature { .. } => 1,
            ValidationFailure::Uncovered { .. } => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ValidationFailure::NotParticular { .. } => "E_NOT_PARTICULAR",
            ValidationFailure::Signature { .. } => "E_SIG_MISMATCH",
            ValidationFailure::Uncovered { .. } => "E_TIER2_UNCOVERED",
        }
    }
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationFailure::NotParticular { entity, layer } => {
                write!(
                    f,
                    "`{entity}` is a {layer}-layer entity, links join Particulars"
                )
            }
            ValidationFailure::Signature {
                kind,
                side,
                entity,
                b_ancestor,
                required,
            } => write!(
                f,
                "`{entity}` cannot be the {side} of {kind}: its B ancestor {b_ancestor} \
                 does not descend from {required}"
            ),
            ValidationFailure::Uncovered { kind, from, to } => {
                write!(f, "no declaration covers `{from} {kind} {to}` (tier 2)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(ValidationFailure),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn failure(&self) -> Option<&ValidationFailure> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(f) => Some(f),
        }
    }
}

/// How P-level links without a covering declaration are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Tier2Policy {
    #[default]
    Strict,
    /// Admit the link and record a [`LinkWarning`].
    Warn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkWarning {
    pub at: Tick,
    pub failure: ValidationFailure,
}

impl World {
    pub(crate) fn resolve_kind(&self, name: &str) -> Result<&RelationKind> {
        self.kind(name).ok_or_else(|| Error::UnknownKind {
            name: name.to_string(),
        })
    }

    /// Registers an ad hoc relation kind between two B-layer bounds. The
    /// kind is reified as a Universal under `B_RelationalQuality`.
    pub fn declare_relation_kind(
        &mut self,
        name: &str,
        domain: &str,
        range: &str,
    ) -> Result<RelationKind> {
        if self.name_taken(name) {
            return Err(Error::DuplicateName {
                name: name.to_string(),
            });
        }
        for bound in [domain, range] {
            if self.registry.resolve(bound)?.layer != Layer::B {
                return Err(Error::BadBound {
                    kind: name.to_string(),
                    bound: bound.to_string(),
                });
            }
        }
        self.registry
            .define_universal(name, b::RELATIONAL_QUALITY, None)?;
        let kind = RelationKind {
            name: name.to_string(),
            domain: domain.into(),
            range: range.into(),
            builtin: false,
        };
        self.kind_index.insert(kind.name.clone(), self.kinds.len());
        self.kinds.push(kind.clone());
        Ok(kind)
    }

    /// Tier-1 check of `from kind to` against the kind's B signature.
    fn signature_failure(
        &self,
        kind: &RelationKind,
        from: &str,
        to: &str,
    ) -> Result<Option<ValidationFailure>> {
        for (side, entity, bound) in [
            (Side::Domain, from, &kind.domain),
            (Side::Range, to, &kind.range),
        ] {
            let ancestor = self.registry.b_ancestor(entity)?;
            if !self
                .registry
                .is_descendant(ancestor.name(), bound.as_str())?
            {
                return Ok(Some(ValidationFailure::Signature {
                    kind: kind.name.clone(),
                    side,
                    entity: entity.to_string(),
                    b_ancestor: ancestor.name().to_string(),
                    required: bound.to_string(),
                }));
            }
        }
        Ok(None)
    }

    /// Stores `from kind to` between two Universals if it passes tier 1.
    pub fn declare_u_relation(
        &mut self,
        from: &str,
        kind: &str,
        to: &str,
    ) -> Result<RelationDeclaration> {
        for entity in [from, to] {
            if self.registry.resolve(entity)?.layer != Layer::U {
                return Err(Error::NotUniversal {
                    entity: entity.to_string(),
                });
            }
        }
        let kind_def = self.resolve_kind(kind)?;
        if let Some(failure) = self.signature_failure(kind_def, from, to)? {
            return Err(Error::SignatureMismatch(failure));
        }
        let decl = RelationDeclaration {
            from: from.into(),
            kind: kind.to_string(),
            to: to.into(),
        };
        if !self.declarations.contains(&decl) {
            self.declarations.push(decl.clone());
        }
        Ok(decl)
    }

    /// Two-tier validity of a P-level link. Unknown ids and kinds are
    /// errors, not verdicts.
    pub fn validate_link(&self, from: &str, kind: &str, to: &str) -> Result<Verdict> {
        let kind_def = self.resolve_kind(kind)?;
        for entity in [from, to] {
            let def = self.registry.resolve(entity)?;
            if def.layer != Layer::P {
                return Ok(Verdict::Invalid(ValidationFailure::NotParticular {
                    entity: entity.to_string(),
                    layer: def.layer,
                }));
            }
        }
        if let Some(failure) = self.signature_failure(kind_def, from, to)? {
            return Ok(Verdict::Invalid(failure));
        }
        for decl in self.declarations.iter().filter(|d| d.kind == kind) {
            if self.registry.is_descendant(from, decl.from.as_str())?
                && self.registry.is_descendant(to, decl.to.as_str())?
            {
                return Ok(Verdict::Valid);
            }
        }
        Ok(Verdict::Invalid(ValidationFailure::Uncovered {
            kind: kind.to_string(),
            from: from.to_string(),
            to: to.to_string(),
        }))
    }

    /// Validates under the current tier-2 policy. `Ok(Some(_))` is a
    /// tolerated tier-2 failure.
    pub(crate) fn admit(&self, t: &Triple) -> Result<Option<ValidationFailure>> {
        match self.validate_link(t.from.as_str(), &t.kind, t.to.as_str())? {
            Verdict::Valid => Ok(None),
            Verdict::Invalid(f @ ValidationFailure::Uncovered { .. })
                if self.tier2 == Tier2Policy::Warn =>
            {
                Ok(Some(f))
            }
            Verdict::Invalid(f) => Err(Error::InvalidLink(f)),
        }
    }

    /// Index of the link of `t` that is still open and started at or before `at`.
    pub(crate) fn open_link(&self, t: &Triple, at: Tick) -> Result<usize> {
        match self.open.get(t) {
            Some(&i) if self.links[i].start <= at => Ok(i),
            _ => Err(Error::NoActiveLink {
                from: t.from.to_string(),
                kind: t.kind.clone(),
                to: t.to.to_string(),
                at,
            }),
        }
    }

    /// A link of `t` starting at `at` would overlap an existing span.
    pub(crate) fn overlaps(&self, t: &Triple, at: Tick) -> bool {
        if self.open.contains_key(t) {
            return true;
        }
        self.touching
            .get(&t.from)
            .into_iter()
            .flatten()
            .map(|&i| &self.links[i])
            .any(|l| l.matches(t) && l.end.is_some_and(|end| end > at))
    }

    pub(crate) fn duplicate(t: &Triple) -> Error {
        Error::DuplicateActiveLink {
            from: t.from.to_string(),
            kind: t.kind.clone(),
            to: t.to.to_string(),
        }
    }

    /// Appends a validated link. Callers have already checked `admit` and
    /// `overlaps`.
    pub(crate) fn insert_link(
        &mut self,
        t: Triple,
        at: Tick,
        warning: Option<ValidationFailure>,
    ) -> TraceEvent {
        let idx = self.links.len();
        self.touching.entry(t.from.clone()).or_default().push(idx);
        if t.to != t.from {
            self.touching.entry(t.to.clone()).or_default().push(idx);
        }
        self.open.insert(t.clone(), idx);
        if let Some(failure) = warning {
            self.warnings.push(LinkWarning { at, failure });
        }
        let event = Event::Link {
            from: t.from.to_string(),
            relation: t.kind.clone(),
            to: t.to.to_string(),
        };
        self.links.push(LinkInstance {
            from: t.from,
            kind: t.kind,
            to: t.to,
            start: at,
            end: None,
        });
        self.record(at, event)
    }

    pub(crate) fn close_link(&mut self, idx: usize, at: Tick) -> TraceEvent {
        let link = &mut self.links[idx];
        link.end = Some(at);
        let t = link.triple();
        self.open.remove(&t);
        self.record(
            at,
            Event::Unlink {
                from: t.from.to_string(),
                relation: t.kind,
                to: t.to.to_string(),
            },
        )
    }

    /// Creates an active link starting at `at`.
    pub fn link(&mut self, from: &str, kind: &str, to: &str, at: Tick) -> Result<LinkInstance> {
        let t = Triple::new(from, kind, to);
        let warning = self.admit(&t)?;
        if self.overlaps(&t, at) {
            return Err(Self::duplicate(&t));
        }
        self.insert_link(t, at, warning);
        Ok(self.links.last().cloned().expect("just inserted"))
    }

    /// Ends the active link `from kind to` at `at`.
    pub fn unlink(&mut self, from: &str, kind: &str, to: &str, at: Tick) -> Result<LinkInstance> {
        let t = Triple::new(from, kind, to);
        let idx = self.open_link(&t, at)?;
        self.close_link(idx, at);
        Ok(self.links[idx].clone())
    }

    pub fn is_active(&self, t: &Triple, at: Tick) -> bool {
        self.touching
            .get(&t.from)
            .into_iter()
            .flatten()
            .any(|&i| self.links[i].matches(t) && self.links[i].is_active_at(at))
    }

    /// Links active at `at`, in creation order.
    pub fn active_links(&self, at: Tick) -> impl Iterator<Item = &LinkInstance> {
        self.links.iter().filter(move |l| l.is_active_at(at))
    }

    pub fn state_of(&self, entity: &str, at: Tick) -> Result<State> {
        let def = self.registry.resolve(entity)?;
        let mut links: Vec<StateEntry> = self
            .touching
            .get(&def.id)
            .into_iter()
            .flatten()
            .map(|&i| &self.links[i])
            .filter(|l| l.is_active_at(at))
            .flat_map(|l| {
                let mut entries = Vec::with_capacity(2);
                if l.from == def.id {
                    entries.push(StateEntry {
                        direction: Direction::Out,
                        kind: l.kind.clone(),
                        counterpart: l.to.clone(),
                    });
                }
                if l.to == def.id {
                    entries.push(StateEntry {
                        direction: Direction::In,
                        kind: l.kind.clone(),
                        counterpart: l.from.clone(),
                    });
                }
                entries
            })
            .collect();
        links.sort_by(|a, b| {
            (a.kind.as_str(), a.counterpart.as_str(), a.direction).cmp(&(
                b.kind.as_str(),
                b.counterpart.as_str(),
                b.direction,
            ))
        });
        Ok(State {
            entity: def.id.clone(),
            at,
            links,
        })
    }

    /// The TIC around an Independent Continuant. Particulars with a tick get
    /// their active links; everything else gets the declarations touching it
    /// or any of its ancestors.
    pub fn tic_of(&self, entity: &str, at: Option<Tick>) -> Result<Tic> {
        let def = self.registry.resolve(entity)?;
        let ancestor = self.registry.b_ancestor(entity)?;
        if !self
            .registry
            .is_descendant(ancestor.name(), b::INDEPENDENT_CONTINUANT)?
        {
            return Err(Error::NotIndependentContinuant {
                entity: entity.to_string(),
            });
        }
        let view = match (def.layer, at) {
            (Layer::P, Some(at)) => TicView::Links(self.state_of(entity, at)?),
            _ => {
                let mut decls = Vec::new();
                for decl in &self.declarations {
                    if self.registry.is_descendant(entity, decl.from.as_str())? {
                        decls.push((Direction::Out, decl.clone()));
                    }
                    if self.registry.is_descendant(entity, decl.to.as_str())? {
                        decls.push((Direction::In, decl.clone()));
                    }
                }
                TicView::Declarations(decls)
            }
        };
        Ok(Tic {
            core: def.id.clone(),
            view,
        })
    }
}
