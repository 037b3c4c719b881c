//! Semantic-modeling kernel over a BFO2-style upper taxonomy.
//!
//! The kernel keeps three layers of entities (shipped `B` types, user
//! Universals and Particulars), validates relations between them in two
//! tiers, records time-spanned links, and executes workflows over a shared
//! world on a deterministic logical clock.
//!
//! Everything here is `no_std` with `alloc`; parsing, file formats and the
//! command line live in the companion `xfo` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
mod error;
pub mod microworld;
pub mod ontology;
pub mod relations;
pub mod trace;
mod world;

pub use error::{Error, Result};
pub use ontology::{EntityDef, EntityId, Layer, Registry};
pub use relations::{
    Direction, LinkInstance, LinkWarning, RelationDeclaration, RelationKind, Side, State,
    StateEntry, Tic, TicView, Tier2Policy, Triple, ValidationFailure, Verdict,
};
pub use trace::{Event, TraceEvent};
pub use world::World;

/// Logical time. Link spans are half-open `[start, end)` intervals of ticks.
pub type Tick = u64;
