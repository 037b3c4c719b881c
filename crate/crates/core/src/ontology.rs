//! Entity registry: the shipped B taxonomy, user Universals and Particulars.
//!
//! Is_A (for B and U entities) and Instance_Of (for P entities) are both
//! stored as the `parent` of an [`EntityDef`]. They are registry structure,
//! not links, so nothing at run time can break them.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt;

use crate::error::{Error, Result};

/// Names of the shipped B-layer types. `X_` marks the two extensions
/// (Substance and Transitional), which validate exactly like B types.
pub mod b {
    pub const ENTITY: &str = "B_Entity";
    pub const CONTINUANT: &str = "B_Continuant";
    pub const INDEPENDENT_CONTINUANT: &str = "B_IndependentContinuant";
    pub const MATERIAL_ENTITY: &str = "B_MaterialEntity";
    pub const OBJECT: &str = "B_Object";
    pub const OBJECT_AGGREGATE: &str = "B_ObjectAggregate";
    pub const SUBSTANCE: &str = "X_Substance";
    pub const DEPENDENT_CONTINUANT: &str = "B_DependentContinuant";
    pub const QUALITY: &str = "B_Quality";
    pub const RELATIONAL_QUALITY: &str = "B_RelationalQuality";
    pub const ROLE: &str = "B_Role";
    pub const OCCURRENT: &str = "B_Occurrent";
    pub const PROCESS: &str = "B_Process";
    pub const TRANSITIONAL: &str = "X_Transitional";
}

/// `(name, parent)` in definition order; parents always precede children.
const B_TAXONOMY: [(&str, Option<&str>); 14] = [
    (b::ENTITY, None),
    (b::CONTINUANT, Some(b::ENTITY)),
    (b::INDEPENDENT_CONTINUANT, Some(b::CONTINUANT)),
    (b::MATERIAL_ENTITY, Some(b::INDEPENDENT_CONTINUANT)),
    (b::OBJECT, Some(b::MATERIAL_ENTITY)),
    (b::OBJECT_AGGREGATE, Some(b::MATERIAL_ENTITY)),
    (b::SUBSTANCE, Some(b::MATERIAL_ENTITY)),
    (b::DEPENDENT_CONTINUANT, Some(b::CONTINUANT)),
    (b::QUALITY, Some(b::DEPENDENT_CONTINUANT)),
    (b::RELATIONAL_QUALITY, Some(b::QUALITY)),
    (b::ROLE, Some(b::DEPENDENT_CONTINUANT)),
    (b::OCCURRENT, Some(b::ENTITY)),
    (b::PROCESS, Some(b::OCCURRENT)),
    (b::TRANSITIONAL, Some(b::OCCURRENT)),
];

/// Stable identifier of an entity; it is the entity's unique name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct EntityId(String);

impl EntityId {
    pub fn new(name: impl Into<String>) -> Self {
        EntityId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

impl PartialEq<str> for EntityId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for EntityId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Layer {
    B,
    U,
    P,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::B => "B",
            Layer::U => "U",
            Layer::P => "P",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDef {
    pub id: EntityId,
    pub layer: Layer,
    /// Is_A target for B and U entities, Instance_Of target for P entities.
    pub parent: Option<EntityId>,
    pub doc: Option<String>,
}

impl EntityDef {
    pub fn name(&self) -> &str {
        self.id.as_str()
    }
}

/// `true` if `name` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// All entities known to a model, in definition order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    defs: Vec<EntityDef>,
    index: BTreeMap<String, usize>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::bootstrap()
    }
}

impl Registry {
    /// A registry holding exactly the shipped B taxonomy.
    pub fn bootstrap() -> Self {
        let mut reg = Registry {
            defs: Vec::with_capacity(B_TAXONOMY.len()),
            index: BTreeMap::new(),
        };
        for (name, parent) in B_TAXONOMY {
            reg.push(EntityDef {
                id: EntityId::from(name),
                layer: Layer::B,
                parent: parent.map(EntityId::from),
                doc: None,
            });
        }
        reg
    }

    fn push(&mut self, def: EntityDef) -> EntityId {
        let id = def.id.clone();
        self.index.insert(def.id.0.clone(), self.defs.len());
        self.defs.push(def);
        id
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Entities in definition order.
    pub fn iter(&self) -> impl Iterator<Item = &EntityDef> {
        self.defs.iter()
    }

    pub fn get(&self, name: &str) -> Option<&EntityDef> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn resolve(&self, name: &str) -> Result<&EntityDef> {
        self.get(name).ok_or_else(|| Error::UnknownEntity {
            name: name.to_string(),
        })
    }

    fn check_new_name(&self, name: &str) -> Result<()> {
        if !is_valid_name(name) {
            return Err(Error::InvalidName {
                name: name.to_string(),
            });
        }
        if self.contains(name) {
            return Err(Error::DuplicateName {
                name: name.to_string(),
            });
        }
        Ok(())
    }

    fn lookup_parent(&self, name: &str, parent: &str) -> Result<&EntityDef> {
        self.get(parent).ok_or_else(|| Error::UnknownParent {
            name: name.to_string(),
            parent: parent.to_string(),
        })
    }

    /// Defines a Universal under a B or U parent.
    pub fn define_universal(
        &mut self,
        name: &str,
        parent: &str,
        doc: Option<String>,
    ) -> Result<EntityId> {
        self.check_new_name(name)?;
        let parent_def = self.lookup_parent(name, parent)?;
        if parent_def.layer == Layer::P {
            return Err(Error::BadParent {
                name: name.to_string(),
                parent: parent.to_string(),
                reason: "a Universal cannot specialize a Particular",
            });
        }
        let parent = parent_def.id.clone();
        Ok(self.push(EntityDef {
            id: EntityId::from(name),
            layer: Layer::U,
            parent: Some(parent),
            doc,
        }))
    }

    /// Defines a Particular as an instance of a Universal.
    pub fn instantiate_particular(
        &mut self,
        name: &str,
        universal: &str,
        doc: Option<String>,
    ) -> Result<EntityId> {
        self.check_new_name(name)?;
        let parent_def = self.lookup_parent(name, universal)?;
        if parent_def.layer != Layer::U {
            return Err(Error::BadParent {
                name: name.to_string(),
                parent: universal.to_string(),
                reason: "a Particular must instantiate a Universal",
            });
        }
        let parent = parent_def.id.clone();
        Ok(self.push(EntityDef {
            id: EntityId::from(name),
            layer: Layer::P,
            parent: Some(parent),
            doc,
        }))
    }

    /// The entity followed by each of its ancestors up to `B_Entity`.
    pub fn ancestors<'a>(&'a self, name: &str) -> Result<Ancestors<'a>> {
        let start = self.resolve(name)?;
        Ok(Ancestors {
            reg: self,
            next: Some(start),
        })
    }

    /// Reflexive, transitive Is_A / Instance_Of test.
    pub fn is_descendant(&self, a: &str, b: &str) -> Result<bool> {
        self.resolve(b)?;
        Ok(self.ancestors(a)?.any(|def| def.name() == b))
    }

    /// Nearest ancestor-or-self on the B layer.
    pub fn b_ancestor(&self, name: &str) -> Result<&EntityDef> {
        let found = self.ancestors(name)?.find(|def| def.layer == Layer::B);
        // Every chain ends at B_Entity, so a B ancestor always exists.
        Ok(found.expect("parent chain terminates at B_Entity"))
    }

    /// Particulars whose Universal descends from `universal`.
    pub fn particulars_of<'a>(&'a self, universal: &'a str) -> impl Iterator<Item = &'a EntityDef> {
        self.defs.iter().filter(move |def| {
            def.layer == Layer::P && self.is_descendant(def.name(), universal).unwrap_or(false)
        })
    }
}

/// Iterator over an entity and its parent chain.
pub struct Ancestors<'a> {
    reg: &'a Registry,
    next: Option<&'a EntityDef>,
}

impl<'a> Iterator for Ancestors<'a> {
    type Item = &'a EntityDef;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.next?;
        self.next = cur.parent.as_ref().and_then(|p| self.reg.get(p.as_str()));
        Some(cur)
    }
}
