use alloc::boxed::Box;
use alloc::string::String;

use crate::relations::ValidationFailure;
use crate::Tick;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the kernel can report.
///
/// Each variant maps to one stable diagnostic code (see [`Error::code`]).
/// Variants that wrap a [`ValidationFailure`] report the code of the
/// failure they carry, so a signature problem is always `E_SIG_MISMATCH`
/// whichever operation found it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("`{name}` is not a valid name (expected [A-Za-z_][A-Za-z0-9_]*)")]
    InvalidName { name: String },
    #[error("`{name}` is already defined")]
    DuplicateName { name: String },
    #[error("parent `{parent}` of `{name}` is not defined")]
    UnknownParent { name: String, parent: String },
    #[error("`{parent}` cannot be the parent of `{name}`: {reason}")]
    BadParent {
        name: String,
        parent: String,
        reason: &'static str,
    },
    #[error("unknown entity `{name}`")]
    UnknownEntity { name: String },
    #[error("unknown relation kind `{name}`")]
    UnknownKind { name: String },
    #[error("bound `{bound}` of relation kind `{kind}` is not a B-layer type")]
    BadBound { kind: String, bound: String },
    #[error("`{entity}` must be a Universal")]
    NotUniversal { entity: String },
    #[error("{0}")]
    SignatureMismatch(ValidationFailure),
    #[error("{0}")]
    InvalidLink(ValidationFailure),
    #[error("`{from} {kind} {to}` is already active")]
    DuplicateActiveLink {
        from: String,
        kind: String,
        to: String,
    },
    #[error("no active link `{from} {kind} {to}` at tick {at}")]
    NoActiveLink {
        from: String,
        kind: String,
        to: String,
        at: Tick,
    },
    #[error("`{entity}` is not an Independent Continuant")]
    NotIndependentContinuant { entity: String },
    #[error("template `{template}`: {failure}")]
    InvalidTemplate {
        template: String,
        failure: Box<ValidationFailure>,
    },
    #[error("template `{template}`: {reason}")]
    MalformedTemplate {
        template: String,
        reason: &'static str,
    },
    #[error("precondition failed: {reason}")]
    PreconditionFailed { reason: String },
    #[error("frame `{frame}` has no slot `{slot}`")]
    UnknownSlot { frame: String, slot: String },
    #[error("binding for frame `{frame}` is missing slots: {missing}")]
    IncompleteBinding { frame: String, missing: String },
    #[error("frame `{frame}` is already active for this binding")]
    AlreadyActive { frame: String },
    #[error("frame activation of `{frame}` is not active{}", missing_suffix(.missing))]
    NotActive { frame: String, missing: String },
    #[error("workflow `{workflow}` contains a loop without a count or guard")]
    UnboundedLoop { workflow: String },
    #[error("workflow `{workflow}` requires an agent on step `{step}`")]
    MissingAgent { workflow: String, step: String },
    #[error("rule `{rule}` refers to unknown {target}")]
    UnknownAction { rule: String, target: String },
    #[error("cannot resolve {what} `{name}`")]
    ResolveError { what: &'static str, name: String },
    #[error("`{name}` expects {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("argument for `{param}` must be {expected}")]
    ArgumentType {
        param: String,
        expected: &'static str,
    },
    #[error("horizon must be greater than zero")]
    BadHorizon,
    #[error("initial link rejected: {0}")]
    InvalidInitialLink(Box<Error>),
    #[error("tick {tick} is beyond the horizon {horizon}")]
    BeyondHorizon { tick: Tick, horizon: Tick },
    #[error("tick {tick} is earlier than the simulation clock {clock}")]
    TickInPast { tick: Tick, clock: Tick },
    #[error("run {run} has already finished ({status})")]
    NotInterruptible { run: usize, status: &'static str },
    #[error("no run with id {run}")]
    UnknownRun { run: usize },
}

fn missing_suffix(missing: &str) -> String {
    if missing.is_empty() {
        String::new()
    } else {
        alloc::format!("; links already gone: {missing}")
    }
}

impl Error {
    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidName { .. } => "E_INVALID_NAME",
            Error::DuplicateName { .. } => "E_DUP_NAME",
            Error::UnknownParent { .. } => "E_UNKNOWN_PARENT",
            Error::BadParent { .. } => "E_BAD_PARENT",
            Error::UnknownEntity { .. } => "E_UNKNOWN_ENTITY",
            Error::UnknownKind { .. } => "E_UNKNOWN_KIND",
            Error::BadBound { .. } => "E_BAD_BOUND",
            Error::NotUniversal { .. } => "E_NOT_UNIVERSAL",
            Error::SignatureMismatch(f) | Error::InvalidLink(f) => f.code(),
            Error::InvalidTemplate { failure, .. } => failure.code(),
            Error::DuplicateActiveLink { .. } => "E_DUP_ACTIVE_LINK",
            Error::NoActiveLink { .. } => "E_NO_ACTIVE_LINK",
            Error::NotIndependentContinuant { .. } => "E_NOT_INDEPENDENT",
            Error::MalformedTemplate { .. } => "E_BAD_TEMPLATE",
            Error::PreconditionFailed { .. } => "E_PRECONDITION",
            Error::UnknownSlot { .. } => "E_UNKNOWN_SLOT",
            Error::IncompleteBinding { .. } => "E_INCOMPLETE_BINDING",
            Error::AlreadyActive { .. } => "E_ALREADY_ACTIVE",
            Error::NotActive { .. } => "E_NOT_ACTIVE",
            Error::UnboundedLoop { .. } => "E_UNBOUNDED_LOOP",
            Error::MissingAgent { .. } => "E_MISSING_AGENT",
            Error::UnknownAction { .. } => "E_UNKNOWN_ACTION",
            Error::ResolveError { .. } => "E_RESOLVE",
            Error::Arity { .. } => "E_ARITY",
            Error::ArgumentType { .. } => "E_ARG_TYPE",
            Error::BadHorizon => "E_BAD_HORIZON",
            Error::InvalidInitialLink(_) => "E_INVALID_INITIAL_LINK",
            Error::BeyondHorizon { .. } => "E_BEYOND_HORIZON",
            Error::TickInPast { .. } => "E_TICK_IN_PAST",
            Error::NotInterruptible { .. } => "E_NOT_INTERRUPTIBLE",
            Error::UnknownRun { .. } => "E_UNKNOWN_RUN",
        }
    }

    /// The validation failure behind this error, if any.
    pub fn validation_failure(&self) -> Option<&ValidationFailure> {
        match self {
            Error::SignatureMismatch(f) | Error::InvalidLink(f) => Some(f),
            Error::InvalidTemplate { failure, .. } => Some(failure.as_ref()),
            Error::InvalidInitialLink(inner) => inner.validation_failure(),
            _ => None,
        }
    }
}
