//! Turns parsed documents into kernel structures. Statements load top to
//! bottom; each failure becomes a diagnostic at the statement's span and
//! loading continues with the next statement.

use std::collections::BTreeMap;

use xfo_core::dynamics::{Edit, LinkTemplate, Ref};
use xfo_core::microworld::{RunSpec, Scenario, ScenarioAction, TimedAction};
use xfo_core::{EntityId, Tier2Policy, Triple, ValidationFailure, Verdict, World};

use crate::ast::{ModelDocument, ModelStmt, ScenarioDocument, ScenarioStmt};
use crate::diag::{Diagnostic, SourceSpan};

/// Builds a world from a model document. The world is returned even when
/// some statements failed, so callers can report everything at once.
pub fn load_model(doc: &ModelDocument, policy: Tier2Policy) -> (World, Vec<Diagnostic>) {
    let mut world = World::new(doc.name().unwrap_or("model"));
    world.set_tier2_policy(policy);
    let mut diags = Vec::new();
    let mut seen_model = false;
    for stmt in &doc.statements {
        let span = &stmt.span;
        if policy == Tier2Policy::Warn {
            for t in templates_of(&stmt.node) {
                uncovered_warning(&world, t, span, &mut diags);
            }
        }
        let result = match &stmt.node {
            ModelStmt::Model { .. } => {
                if seen_model {
                    diags.push(Diagnostic::warning(
                        "W_MODEL_NAME",
                        "repeated `model` statement; the first name is used",
                        span.clone(),
                    ));
                }
                seen_model = true;
                Ok(())
            }
            ModelStmt::Universal { name, parent, doc } => world
                .registry_mut()
                .define_universal(name, parent, doc.clone())
                .map(drop),
            ModelStmt::Particular {
                name,
                universal,
                doc,
            } => world
                .registry_mut()
                .instantiate_particular(name, universal, doc.clone())
                .map(drop),
            ModelStmt::Relation {
                name,
                domain,
                range,
            } => world.declare_relation_kind(name, domain, range).map(drop),
            ModelStmt::Relate { from, kind, to } => {
                world.declare_u_relation(from, kind, to).map(drop)
            }
            ModelStmt::Transitional {
                name,
                params,
                universal,
                unlinks,
                links,
            } => world
                .define_transitional(
                    name,
                    universal,
                    params.clone(),
                    unlinks.clone(),
                    links.clone(),
                )
                .map(drop),
            ModelStmt::Frame {
                name,
                slots,
                templates,
            } => world
                .define_frame(name, slots.clone(), templates.clone())
                .map(drop),
            ModelStmt::Workflow(wf) => world.define_workflow(wf.clone()),
            ModelStmt::Rule {
                name,
                guard,
                action,
            } => world
                .define_rule(name, guard.clone(), action.clone())
                .map(drop),
        };
        if let Err(e) = result {
            diags.push(Diagnostic::from_kernel(&e, span.clone()));
        }
    }
    (world, diags)
}

/// Concrete link templates a statement would create.
fn templates_of(stmt: &ModelStmt) -> Vec<&LinkTemplate> {
    match stmt {
        ModelStmt::Transitional { links, .. } => links.iter().collect(),
        ModelStmt::Frame { templates, .. } => templates.iter().collect(),
        ModelStmt::Workflow(wf) => wf
            .steps()
            .into_iter()
            .flat_map(|s| &s.postconditions)
            .filter_map(|e| match e {
                Edit::Link(t) => Some(t),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn uncovered_warning(
    world: &World,
    t: &LinkTemplate,
    span: &SourceSpan,
    diags: &mut Vec<Diagnostic>,
) {
    let (Ref::Entity(from), Ref::Entity(to)) = (&t.from, &t.to) else {
        return;
    };
    if let Ok(Verdict::Invalid(f @ ValidationFailure::Uncovered { .. })) =
        world.validate_link(from.as_str(), &t.kind, to.as_str())
    {
        diags.push(Diagnostic::warning(f.code(), f.to_string(), span.clone()));
    }
}

/// Resolves a scenario document against a loaded world. Labels on `run`
/// and `activate` statements are resolved here; the kernel sees indices
/// and bindings. Warnings come back alongside the scenario.
pub fn load_scenario_doc(
    doc: &ScenarioDocument,
    world: &World,
    file: &str,
) -> Result<(Scenario, Vec<Diagnostic>), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let top = SourceSpan::new(file, 1, 1, 1);
    let (name, model, header_span) = match doc.statements.iter().find_map(|s| match &s.node {
        ScenarioStmt::Header { name, model } => Some((name.clone(), model.clone(), s.span.clone())),
        _ => None,
    }) {
        Some(h) => h,
        None => {
            diags.push(Diagnostic::error(
                "E_NO_HEADER",
                "missing `scenario NAME for MODEL` statement",
                top.clone(),
            ));
            (
                "scenario".to_string(),
                world.name().to_string(),
                top.clone(),
            )
        }
    };
    if model != world.name() {
        diags.push(Diagnostic::error(
            "E_MODEL_MISMATCH",
            format!(
                "scenario is for model `{model}` but `{}` is loaded",
                world.name()
            ),
            header_span.clone(),
        ));
    }
    let horizons: Vec<_> = doc
        .statements
        .iter()
        .filter_map(|s| match s.node {
            ScenarioStmt::Horizon(h) => Some((h, &s.span)),
            _ => None,
        })
        .collect();
    let horizon = match horizons.as_slice() {
        [] => {
            diags.push(Diagnostic::error(
                "E_NO_HORIZON",
                "scenario has no `horizon` statement",
                header_span.clone(),
            ));
            0
        }
        [(h, span), rest @ ..] => {
            for (_, again) in rest {
                diags.push(Diagnostic::error(
                    "E_DUP_HORIZON",
                    "horizon is already set",
                    (*again).clone(),
                ));
            }
            if *h == 0 {
                diags.push(Diagnostic::from_kernel(
                    &xfo_core::Error::BadHorizon,
                    (*span).clone(),
                ));
            }
            *h
        }
    };

    let mut scenario = Scenario::new(&name, &model, horizon);
    let mut run_labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut frame_labels: BTreeMap<String, (String, Vec<(String, EntityId)>)> = BTreeMap::new();
    let err = |code: &'static str, msg: String, span: &SourceSpan| {
        Diagnostic::error(code, msg, span.clone())
    };
    let kernel = |e: xfo_core::Error, span: &SourceSpan| Diagnostic::from_kernel(&e, span.clone());
    let resolve = |what: &'static str, name: &str| xfo_core::Error::ResolveError {
        what,
        name: name.to_string(),
    };

    for stmt in &doc.statements {
        let span = &stmt.span;
        let check_tick = |at: u64, diags: &mut Vec<Diagnostic>| {
            if horizon > 0 && at > horizon {
                diags.push(kernel(
                    xfo_core::Error::BeyondHorizon { tick: at, horizon },
                    span,
                ));
            }
        };
        match &stmt.node {
            ScenarioStmt::Header { .. } | ScenarioStmt::Horizon(_) => {}
            ScenarioStmt::Init { from, kind, to } => match world.validate_link(from, kind, to) {
                Err(e) => diags.push(kernel(e, span)),
                Ok(Verdict::Invalid(f))
                    if f.tier() == 2 && world.tier2_policy() == Tier2Policy::Warn =>
                {
                    diags.push(Diagnostic::warning(f.code(), f.to_string(), span.clone()));
                    scenario
                        .init
                        .push(Triple::new(from.as_str(), kind.as_str(), to.as_str()));
                }
                Ok(Verdict::Invalid(f)) => diags.push(kernel(
                    xfo_core::Error::InvalidInitialLink(Box::new(xfo_core::Error::InvalidLink(f))),
                    span,
                )),
                Ok(Verdict::Valid) => {
                    let t = Triple::new(from.as_str(), kind.as_str(), to.as_str());
                    if scenario.init.contains(&t) {
                        diags.push(err(
                            "E_DUP_ACTIVE_LINK",
                            format!("`{from} {kind} {to}` is already initialised"),
                            span,
                        ));
                    } else {
                        scenario.init.push(t);
                    }
                }
            },
            ScenarioStmt::Run {
                workflow,
                args,
                at,
                label,
            } => {
                check_tick(*at, &mut diags);
                let Some(wf) = world.workflow(workflow) else {
                    diags.push(kernel(resolve("workflow", workflow), span));
                    continue;
                };
                if let Err(e) = wf.bind_args(world, args) {
                    diags.push(kernel(e, span));
                    continue;
                }
                if let Some(l) = label {
                    if run_labels.contains_key(l) || frame_labels.contains_key(l) {
                        diags.push(err(
                            "E_DUP_LABEL",
                            format!("label `{l}` is already used"),
                            span,
                        ));
                        continue;
                    }
                    run_labels.insert(l.clone(), scenario.runs.len());
                }
                scenario.runs.push(RunSpec {
                    workflow: workflow.clone(),
                    args: args.clone(),
                    start: *at,
                    label: label.clone(),
                });
            }
            ScenarioStmt::Activate {
                frame,
                binding,
                at,
                label,
            } => {
                check_tick(*at, &mut diags);
                if world.frame(frame).is_none() {
                    diags.push(kernel(resolve("frame", frame), span));
                    continue;
                }
                if let Some(l) = label {
                    if run_labels.contains_key(l) || frame_labels.contains_key(l) {
                        diags.push(err(
                            "E_DUP_LABEL",
                            format!("label `{l}` is already used"),
                            span,
                        ));
                        continue;
                    }
                    frame_labels.insert(l.clone(), (frame.clone(), binding.clone()));
                }
                scenario.actions.push(TimedAction {
                    at: *at,
                    action: ScenarioAction::Activate {
                        frame: frame.clone(),
                        binding: binding.clone(),
                    },
                });
            }
            ScenarioStmt::Deactivate { label, at } => {
                check_tick(*at, &mut diags);
                match frame_labels.get(label) {
                    Some((frame, binding)) => scenario.actions.push(TimedAction {
                        at: *at,
                        action: ScenarioAction::Deactivate {
                            frame: frame.clone(),
                            binding: binding.clone(),
                        },
                    }),
                    None => diags.push(err(
                        "E_UNKNOWN_LABEL",
                        format!("no `activate ... as {label}` before this statement"),
                        span,
                    )),
                }
            }
            ScenarioStmt::Apply {
                transitional,
                args,
                at,
            } => {
                check_tick(*at, &mut diags);
                if world.transitional(transitional).is_none() {
                    diags.push(kernel(resolve("transitional", transitional), span));
                    continue;
                }
                scenario.actions.push(TimedAction {
                    at: *at,
                    action: ScenarioAction::Apply {
                        transitional: transitional.clone(),
                        args: args.clone(),
                    },
                });
            }
            ScenarioStmt::Interrupt { label, at } => {
                check_tick(*at, &mut diags);
                match run_labels.get(label) {
                    Some(&run) => scenario.actions.push(TimedAction {
                        at: *at,
                        action: ScenarioAction::Interrupt { run },
                    }),
                    None => diags.push(err(
                        "E_UNKNOWN_LABEL",
                        format!("no `run ... as {label}` before this statement"),
                        span,
                    )),
                }
            }
            ScenarioStmt::Rule(rule) => {
                if world.rule(rule).is_none() {
                    diags.push(kernel(resolve("rule", rule), span));
                } else if scenario.rules.contains(rule) {
                    diags.push(err(
                        "E_DUP_NAME",
                        format!("rule `{rule}` is already enabled"),
                        span,
                    ));
                } else {
                    scenario.rules.push(rule.clone());
                }
            }
        }
    }
    if diags.iter().any(Diagnostic::is_error) {
        return Err(diags);
    }
    // Anything the kernel still rejects is reported at the header.
    if let Err(e) = xfo_core::microworld::load_scenario(world.clone(), scenario.clone()) {
        diags.push(Diagnostic::from_kernel(&e, header_span));
        return Err(diags);
    }
    Ok((scenario, diags))
}
