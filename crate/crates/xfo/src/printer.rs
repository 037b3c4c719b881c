//! Canonical text for parsed documents. Printing then parsing gives back an
//! equal document.

use std::fmt::Write;

use xfo_core::dynamics::{
    Duration, Edit, LoopBound, Node, ParamType, Ref, StatePredicate, Workflow, WorkflowStep,
};

use crate::ast::{ModelDocument, ModelStmt, ScenarioDocument, ScenarioStmt};

const INDENT: &str = "  ";

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn preds(ps: &[StatePredicate]) -> String {
    ps.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" and ")
}

fn binding(b: &[(String, Ref)]) -> String {
    b.iter()
        .map(|(slot, r)| format!("{slot} = {r}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn doc_suffix(doc: &Option<String>) -> String {
    doc.as_ref()
        .map(|d| format!(" doc {}", quote(d)))
        .unwrap_or_default()
}

pub fn print_model(doc: &ModelDocument) -> String {
    let mut out = String::new();
    for stmt in &doc.statements {
        print_model_stmt(&mut out, &stmt.node);
    }
    out
}

fn print_model_stmt(out: &mut String, stmt: &ModelStmt) {
    match stmt {
        ModelStmt::Model { name } => writeln!(out, "model {name}"),
        ModelStmt::Universal { name, parent, doc } => {
            writeln!(out, "universal {name} is_a {parent}{}", doc_suffix(doc))
        }
        ModelStmt::Particular {
            name,
            universal,
            doc,
        } => writeln!(
            out,
            "particular {name} instance_of {universal}{}",
            doc_suffix(doc)
        ),
        ModelStmt::Relation {
            name,
            domain,
            range,
        } => writeln!(out, "relation {name} {domain} -> {range}"),
        ModelStmt::Relate { from, kind, to } => writeln!(out, "relate {from} {kind} {to}"),
        ModelStmt::Transitional {
            name,
            params,
            universal,
            unlinks,
            links,
        } => {
            write!(
                out,
                "transitional {name}({}) : {universal}",
                params.join(", ")
            )
            .unwrap();
            if unlinks.is_empty() && links.is_empty() {
                writeln!(out)
            } else {
                writeln!(out, " {{").unwrap();
                for t in unlinks {
                    writeln!(out, "{INDENT}unlink {t}").unwrap();
                }
                for t in links {
                    writeln!(out, "{INDENT}link {t}").unwrap();
                }
                writeln!(out, "}}")
            }
        }
        ModelStmt::Frame {
            name,
            slots,
            templates,
        } => {
            write!(out, "frame {name}({})", slots.join(", ")).unwrap();
            if templates.is_empty() {
                writeln!(out)
            } else {
                writeln!(out, " {{").unwrap();
                for t in templates {
                    writeln!(out, "{INDENT}link {t}").unwrap();
                }
                writeln!(out, "}}")
            }
        }
        ModelStmt::Workflow(wf) => {
            print_workflow(out, wf);
            Ok(())
        }
        ModelStmt::Rule {
            name,
            guard,
            action,
        } => writeln!(out, "rule {name} when {} then {action}", preds(guard)),
    }
    .unwrap();
}

fn print_workflow(out: &mut String, wf: &Workflow) {
    let kw = if wf.requires_agent {
        "workflow"
    } else {
        "mechanism"
    };
    let params: Vec<String> = wf
        .params
        .iter()
        .map(|p| match &p.ty {
            ParamType::Entity(None) => p.name.clone(),
            ParamType::Entity(Some(ty)) => format!("{}: {ty}", p.name),
            ParamType::Ticks => format!("{}: ticks", p.name),
        })
        .collect();
    writeln!(out, "{kw} {}({}) {{", wf.name, params.join(", ")).unwrap();
    if let Some(doc) = &wf.doc {
        writeln!(out, "{INDENT}doc {}", quote(doc)).unwrap();
    }
    for l in &wf.lets {
        writeln!(out, "{INDENT}let {}: {} where {}", l.name, l.ty, l.pattern).unwrap();
    }
    if !wf.goal.is_empty() {
        writeln!(out, "{INDENT}goal {}", preds(&wf.goal)).unwrap();
    }
    print_items(out, &wf.body, 1);
    writeln!(out, "}}").unwrap();
}

/// Prints the members of a sequence (or a lone node) at `depth`.
fn print_items(out: &mut String, node: &Node, depth: usize) {
    match node {
        Node::Seq(items) => {
            for item in items {
                print_items(out, item, depth);
            }
        }
        other => print_node(out, other, depth),
    }
}

fn print_node(out: &mut String, node: &Node, depth: usize) {
    let pad = INDENT.repeat(depth);
    match node {
        Node::Seq(_) => print_items(out, node, depth),
        Node::Step(step) => print_step(out, step, depth),
        Node::Loop { body, bound } => {
            let head = match bound {
                Some(LoopBound::Count(n)) => n.to_string(),
                Some(LoopBound::Until(ps)) => format!("until {}", preds(ps)),
                Some(LoopBound::Horizon) | None => "until horizon".to_string(),
            };
            writeln!(out, "{pad}loop {head} {{").unwrap();
            print_items(out, body, depth + 1);
            writeln!(out, "{pad}}}").unwrap();
        }
        Node::Cond {
            guard,
            then,
            otherwise,
        } => {
            writeln!(out, "{pad}if {} {{", preds(guard)).unwrap();
            print_items(out, then, depth + 1);
            let empty = matches!(&**otherwise, Node::Seq(v) if v.is_empty());
            if empty {
                writeln!(out, "{pad}}}").unwrap();
            } else {
                writeln!(out, "{pad}}} else {{").unwrap();
                print_items(out, otherwise, depth + 1);
                writeln!(out, "{pad}}}").unwrap();
            }
        }
    }
}

fn print_step(out: &mut String, step: &WorkflowStep, depth: usize) {
    let pad = INDENT.repeat(depth);
    let inner = INDENT.repeat(depth + 1);
    let duration = match &step.duration {
        Duration::Ticks(n) => n.to_string(),
        Duration::Var(v) => v.clone(),
    };
    let placeholder = if step.placeholder { " placeholder" } else { "" };
    write!(
        out,
        "{pad}step {} duration {duration}{placeholder}",
        step.name
    )
    .unwrap();
    let empty = step.agent.is_none()
        && step.doc.is_none()
        && step.preconditions.is_empty()
        && step.postconditions.is_empty();
    if empty {
        writeln!(out).unwrap();
        return;
    }
    writeln!(out, " {{").unwrap();
    if let Some(agent) = &step.agent {
        writeln!(out, "{inner}agent {agent}").unwrap();
    }
    if let Some(doc) = &step.doc {
        writeln!(out, "{inner}doc {}", quote(doc)).unwrap();
    }
    if !step.preconditions.is_empty() {
        writeln!(out, "{inner}pre {}", preds(&step.preconditions)).unwrap();
    }
    for edit in &step.postconditions {
        let line = match edit {
            Edit::Unlink(t) => format!("unlink {t}"),
            Edit::Link(t) => format!("link {t}"),
            Edit::Apply { transitional, args } => format!("apply {transitional}({})", join(args)),
            Edit::Activate { frame, binding: b } => format!("activate {frame}({})", binding(b)),
            Edit::Deactivate { frame, binding: b } => format!("deactivate {frame}({})", binding(b)),
        };
        writeln!(out, "{inner}{line}").unwrap();
    }
    writeln!(out, "{pad}}}").unwrap();
}

pub fn print_scenario(doc: &ScenarioDocument) -> String {
    let mut out = String::new();
    for stmt in &doc.statements {
        let label = |l: &Option<String>| l.as_ref().map(|l| format!(" as {l}")).unwrap_or_default();
        let line = match &stmt.node {
            ScenarioStmt::Header { name, model } => format!("scenario {name} for {model}"),
            ScenarioStmt::Horizon(h) => format!("horizon {h}"),
            ScenarioStmt::Init { from, kind, to } => format!("init {from} {kind} {to}"),
            ScenarioStmt::Run {
                workflow,
                args,
                at,
                label: l,
            } => format!("run {workflow}({}) at {at}{}", join(args), label(l)),
            ScenarioStmt::Activate {
                frame,
                binding,
                at,
                label: l,
            } => {
                let b: Vec<String> = binding.iter().map(|(s, e)| format!("{s} = {e}")).collect();
                format!("activate {frame}({}) at {at}{}", b.join(", "), label(l))
            }
            ScenarioStmt::Deactivate { label, at } => format!("deactivate {label} at {at}"),
            ScenarioStmt::Apply {
                transitional,
                args,
                at,
            } => format!("apply {transitional}({}) at {at}", join(args)),
            ScenarioStmt::Interrupt { label, at } => format!("interrupt {label} at {at}"),
            ScenarioStmt::Rule(r) => format!("rule {r}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}
