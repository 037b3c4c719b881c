//! Timestamped simulation events. A world's trace is its full history.

use alloc::string::String;
use alloc::vec::Vec;

use crate::Tick;

/// One slot of a frame activation, as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotBinding {
    pub slot: String,
    pub entity: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "payload"))]
pub enum Event {
    Link {
        from: String,
        relation: String,
        to: String,
    },
    Unlink {
        from: String,
        relation: String,
        to: String,
    },
    FrameActivate {
        frame: String,
        activation: usize,
        binding: Vec<SlotBinding>,
    },
    FrameDeactivate {
        frame: String,
        activation: usize,
    },
    StepStart {
        run: usize,
        workflow: String,
        step: String,
        agent: Option<String>,
        placeholder: bool,
    },
    StepEnd {
        run: usize,
        workflow: String,
        step: String,
    },
    RuleFired {
        rule: String,
        action: String,
    },
    WorkflowStart {
        run: usize,
        workflow: String,
        args: Vec<String>,
    },
    WorkflowComplete {
        run: usize,
        workflow: String,
    },
    WorkflowBroken {
        run: usize,
        workflow: String,
        step: Option<String>,
        reason: String,
    },
    Interrupt {
        run: usize,
        workflow: String,
        step: Option<String>,
        last_completed: Option<String>,
    },
}

impl Event {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Event::Link { .. } => "Link",
            Event::Unlink { .. } => "Unlink",
            Event::FrameActivate { .. } => "FrameActivate",
            Event::FrameDeactivate { .. } => "FrameDeactivate",
            Event::StepStart { .. } => "StepStart",
            Event::StepEnd { .. } => "StepEnd",
            Event::RuleFired { .. } => "RuleFired",
            Event::WorkflowStart { .. } => "WorkflowStart",
            Event::WorkflowComplete { .. } => "WorkflowComplete",
            Event::WorkflowBroken { .. } => "WorkflowBroken",
            Event::Interrupt { .. } => "Interrupt",
        }
    }

    /// The run this event belongs to, for run-scoped events.
    pub fn run(&self) -> Option<usize> {
        match self {
            Event::StepStart { run, .. }
            | Event::StepEnd { run, .. }
            | Event::WorkflowStart { run, .. }
            | Event::WorkflowComplete { run, .. }
            | Event::WorkflowBroken { run, .. }
            | Event::Interrupt { run, .. } => Some(*run),
            _ => None,
        }
    }

    /// Entities named by the event's payload.
    pub fn entities(&self) -> Vec<&str> {
        match self {
            Event::Link { from, to, .. } | Event::Unlink { from, to, .. } => {
                alloc::vec![from.as_str(), to.as_str()]
            }
            Event::FrameActivate { binding, .. } => {
                binding.iter().map(|b| b.entity.as_str()).collect()
            }
            Event::StepStart { agent: Some(a), .. } => alloc::vec![a.as_str()],
            Event::WorkflowStart { args, .. } => args.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEvent {
    pub seq: u64,
    pub at: Tick,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub event: Event,
}
