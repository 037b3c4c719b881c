//! Parsed model and scenario documents. Statement bodies reuse the kernel's
//! own workflow and template types; spans ride alongside and are ignored by
//! equality.

use xfo_core::dynamics::{Arg, LinkTemplate, RuleAction, StatePredicate, Workflow};
use xfo_core::{EntityId, Tick};

use crate::diag::SourceSpan;

#[derive(Debug, Clone)]
pub struct Spanned<T> {
    pub node: T,
    pub span: SourceSpan,
}

impl<T: PartialEq> PartialEq for Spanned<T> {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelStmt {
    Model {
        name: String,
    },
    Universal {
        name: String,
        parent: String,
        doc: Option<String>,
    },
    Particular {
        name: String,
        universal: String,
        doc: Option<String>,
    },
    Relation {
        name: String,
        domain: String,
        range: String,
    },
    Relate {
        from: String,
        kind: String,
        to: String,
    },
    Transitional {
        name: String,
        params: Vec<String>,
        universal: String,
        unlinks: Vec<LinkTemplate>,
        links: Vec<LinkTemplate>,
    },
    Frame {
        name: String,
        slots: Vec<String>,
        templates: Vec<LinkTemplate>,
    },
    Workflow(Workflow),
    Rule {
        name: String,
        guard: Vec<StatePredicate>,
        action: RuleAction,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelDocument {
    pub statements: Vec<Spanned<ModelStmt>>,
}

impl ModelDocument {
    /// Name from the `model` statement, if present.
    pub fn name(&self) -> Option<&str> {
        self.statements.iter().find_map(|s| match &s.node {
            ModelStmt::Model { name } => Some(name.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioStmt {
    Header {
        name: String,
        model: String,
    },
    Horizon(Tick),
    Init {
        from: String,
        kind: String,
        to: String,
    },
    Run {
        workflow: String,
        args: Vec<Arg>,
        at: Tick,
        label: Option<String>,
    },
    Activate {
        frame: String,
        binding: Vec<(String, EntityId)>,
        at: Tick,
        label: Option<String>,
    },
    /// Ends the activation created under `label`.
    Deactivate {
        label: String,
        at: Tick,
    },
    Apply {
        transitional: String,
        args: Vec<EntityId>,
        at: Tick,
    },
    /// Interrupts the run started under `label`.
    Interrupt {
        label: String,
        at: Tick,
    },
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioDocument {
    pub statements: Vec<Spanned<ScenarioStmt>>,
}

impl ScenarioDocument {
    pub fn header(&self) -> Option<(&str, &str)> {
        self.statements.iter().find_map(|s| match &s.node {
            ScenarioStmt::Header { name, model } => Some((name.as_str(), model.as_str())),
            _ => None,
        })
    }
}
