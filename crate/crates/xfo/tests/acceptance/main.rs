//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! fails. Set `XFO_BLESS=1` to regenerate the CLI goldens.

mod golden;
mod oracle;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use xfo::loader::{load_model, load_scenario_doc};
use xfo::parser::{parse_model, parse_scenario};
use xfo::printer::{print_model, print_scenario};
use xfo::render::{render_snapshot, render_timeline, TimelineOptions};
use xfo::trace_file::{Replay, TraceFile};
use xfo_core::dynamics::{Arg, LinkTemplate, Ref, StatePredicate, Workflow};
use xfo_core::microworld::{
    load_scenario, RunSpec, RunStatus, Scenario, ScenarioAction, TimedAction,
};
use xfo_core::relations::{CONTINUANT_PART_OF, HAS_QUALITY, HAS_ROLE, PARTICIPATES_IN};
use xfo_core::{
    Direction, Event, Layer, Registry, Tier2Policy, Triple, ValidationFailure, Verdict, World,
};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn models_dir() -> PathBuf {
    crate_dir().join("models")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(models_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn world(model: &str) -> World {
    let (doc, diags) = parse_model(&read(model), model);
    assert!(diags.is_empty(), "{model}: {diags:?}");
    let (world, diags) = load_model(&doc, Tier2Policy::Strict);
    assert!(diags.is_empty(), "{model}: {diags:?}");
    world
}

fn scenario(world: &World, file: &str) -> Scenario {
    let (doc, diags) = parse_scenario(&read(file), file);
    assert!(diags.is_empty(), "{file}: {diags:?}");
    let (spec, diags) =
        load_scenario_doc(&doc, world, file).unwrap_or_else(|d| panic!("{file}: {d:?}"));
    assert!(diags.is_empty(), "{file}: {diags:?}");
    spec
}

fn simulate(world: World, spec: Scenario) -> xfo_core::microworld::Simulation {
    let mut sim = load_scenario(world, spec).expect("scenario loads");
    sim.run_to_horizon();
    sim
}

fn simulate_files(model: &str, file: &str) -> xfo_core::microworld::Simulation {
    let w = world(model);
    let spec = scenario(&w, file);
    simulate(w, spec)
}

const SCENARIOS: [(&str, &str); 5] = [
    ("traffic.xfo", "desk.xws"),
    ("school.xfo", "school.xws"),
    ("celadon.xfo", "celadon.xws"),
    ("celadon.xfo", "celadon_interrupt.xws"),
    ("celadon.xfo", "celadon_broken.xws"),
];

// ---------------------------------------------------------------- 1

/// The shipped upper taxonomy, written out independently of the kernel.
const EXPECTED_B: [(&str, Option<&str>); 14] = [
    ("B_Entity", None),
    ("B_Continuant", Some("B_Entity")),
    ("B_IndependentContinuant", Some("B_Continuant")),
    ("B_MaterialEntity", Some("B_IndependentContinuant")),
    ("B_Object", Some("B_MaterialEntity")),
    ("B_ObjectAggregate", Some("B_MaterialEntity")),
    ("X_Substance", Some("B_MaterialEntity")),
    ("B_DependentContinuant", Some("B_Continuant")),
    ("B_Quality", Some("B_DependentContinuant")),
    ("B_RelationalQuality", Some("B_Quality")),
    ("B_Role", Some("B_DependentContinuant")),
    ("B_Occurrent", Some("B_Entity")),
    ("B_Process", Some("B_Occurrent")),
    ("X_Transitional", Some("B_Occurrent")),
];

fn expected_parent(name: &str) -> Option<&'static str> {
    EXPECTED_B
        .iter()
        .find(|(n, _)| *n == name)
        .and_then(|(_, p)| *p)
}

/// Reflexive descent in the expected taxonomy.
fn b_descends(a: &str, b: &str) -> bool {
    let mut cur = Some(a);
    while let Some(c) = cur {
        if c == b {
            return true;
        }
        cur = expected_parent(c);
    }
    false
}

fn taxonomy() -> Outcome {
    let reg = Registry::bootstrap();
    let shipped: Vec<(&str, Option<&str>)> = reg
        .iter()
        .filter(|d| d.layer == Layer::B)
        .map(|d| (d.name(), d.parent.as_ref().map(|p| p.as_str())))
        .collect();
    ensure!(reg.len() == 14, "bootstrap has {} entities", reg.len());
    let mut got = shipped.clone();
    let mut want = EXPECTED_B.to_vec();
    got.sort();
    want.sort();
    ensure!(got == want, "B taxonomy differs: {shipped:?}");

    let ops = proptest::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1..40);
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&ops, |ops| {
            let mut reg = Registry::bootstrap();
            for (i, (particular, pick)) in ops.iter().enumerate() {
                let names: Vec<(String, Layer)> = reg
                    .iter()
                    .map(|d| (d.name().to_string(), d.layer))
                    .collect();
                let (parent, parent_layer) = &names[pick.index(names.len())];
                let name = format!("E{i}");
                if *particular {
                    let r = reg.instantiate_particular(&name, parent, None);
                    prop_assert_eq!(r.is_ok(), *parent_layer == Layer::U);
                } else {
                    let r = reg.define_universal(&name, parent, None);
                    prop_assert_eq!(r.is_ok(), *parent_layer != Layer::P);
                }
            }
            let total = reg.len();
            for def in reg.iter() {
                if let Some(p) = &def.parent {
                    let parent = reg.get(p.as_str()).expect("parent defined");
                    match def.layer {
                        Layer::B => prop_assert_eq!(parent.layer, Layer::B),
                        Layer::U => prop_assert!(parent.layer != Layer::P),
                        Layer::P => prop_assert_eq!(parent.layer, Layer::U),
                    }
                } else {
                    prop_assert_eq!(def.name(), "B_Entity");
                }
                let chain: Vec<_> = reg.ancestors(def.name()).unwrap().take(total + 1).collect();
                prop_assert!(chain.len() <= total);
                prop_assert_eq!(chain.last().unwrap().name(), "B_Entity");
                let layers: Vec<Layer> = chain.iter().map(|d| d.layer).collect();
                prop_assert!(layers.windows(2).all(|w| w[0] >= w[1]));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- 2

fn validation() -> Outcome {
    let bounds = [
        (PARTICIPATES_IN, "B_IndependentContinuant", "B_Occurrent"),
        (CONTINUANT_PART_OF, "B_Continuant", "B_Continuant"),
        (HAS_QUALITY, "B_IndependentContinuant", "B_Quality"),
        (HAS_ROLE, "B_IndependentContinuant", "B_Role"),
    ];
    let mut w = World::new("signatures");
    for (b, _) in EXPECTED_B {
        w.registry_mut()
            .define_universal(&format!("U_{b}"), b, None)
            .unwrap();
        w.registry_mut()
            .instantiate_particular(&format!("p_{b}"), &format!("U_{b}"), None)
            .unwrap();
    }
    for (kind, domain, range) in bounds {
        for (from, _) in EXPECTED_B {
            for (to, _) in EXPECTED_B {
                let accept = b_descends(from, domain) && b_descends(to, range);
                let r = w.declare_u_relation(&format!("U_{from}"), kind, &format!("U_{to}"));
                ensure!(
                    r.is_ok() == accept,
                    "{from} {kind} {to}: expected accept={accept}, got {r:?}"
                );
                if let Err(e) = r {
                    ensure!(
                        e.code() == "E_SIG_MISMATCH",
                        "{from} {kind} {to}: code {}",
                        e.code()
                    );
                }
            }
        }
    }
    // Every accepted pair is now declared, so P-level validity is exactly tier 1.
    for (kind, domain, range) in bounds {
        for (from, _) in EXPECTED_B {
            for (to, _) in EXPECTED_B {
                let accept = b_descends(from, domain) && b_descends(to, range);
                let v = w
                    .validate_link(&format!("p_{from}"), kind, &format!("p_{to}"))
                    .unwrap();
                ensure!(v.is_valid() == accept, "p_{from} {kind} p_{to}: {v:?}");
                if !accept {
                    ensure!(
                        matches!(v.failure(), Some(f) if f.tier() == 1),
                        "p_{from} {kind} p_{to}: expected tier-1 failure, got {v:?}"
                    );
                }
            }
        }
    }
    // Part-of walks the ancestor chain for every continuant subtype.
    let continuants: Vec<&str> = EXPECTED_B
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| b_descends(n, "B_Continuant"))
        .collect();
    ensure!(
        continuants.len() == 10,
        "continuant subtypes: {continuants:?}"
    );
    for a in &continuants {
        for b in &continuants {
            ensure!(
                w.validate_link(&format!("p_{a}"), CONTINUANT_PART_OF, &format!("p_{b}"))
                    .unwrap()
                    .is_valid(),
                "{a} part of {b} rejected"
            );
        }
        for occ in ["B_Occurrent", "B_Process", "X_Transitional"] {
            let v = w
                .validate_link(&format!("p_{a}"), CONTINUANT_PART_OF, &format!("p_{occ}"))
                .unwrap();
            ensure!(!v.is_valid(), "{a} part of {occ} accepted");
        }
    }

    let mut c = world("celadon.xfo");
    ensure!(
        c.validate_link("pot1", PARTICIPATES_IN, "biscuit1")
            .unwrap()
            == Verdict::Valid,
        "pot1 Participates_In biscuit1 is not valid"
    );
    ensure!(
        c.validate_link("pot1", PARTICIPATES_IN, "glost1").unwrap() == Verdict::Valid,
        "pot1 Participates_In glost1 is not valid"
    );
    c.declare_u_relation("Pottery", PARTICIPATES_IN, "BiscuitFiring")
        .map_err(|e| format!("Pottery Participates_In BiscuitFiring: {e}"))?;
    c.declare_u_relation("Pottery", PARTICIPATES_IN, "Firing")
        .map_err(|e| format!("Pottery Participates_In Firing: {e}"))?;
    match c.validate_link("pot1", PARTICIPATES_IN, "drive1").unwrap() {
        Verdict::Invalid(ValidationFailure::Uncovered { .. }) => {}
        v => {
            return Err(format!(
                "pot1 Participates_In drive1: expected tier-2 rejection, got {v:?}"
            ))
        }
    }
    let err = c.link("pot1", PARTICIPATES_IN, "drive1", 0).unwrap_err();
    ensure!(
        err.code() == "E_TIER2_UNCOVERED",
        "linking pot1 to drive1: {}",
        err.code()
    );
    Ok(())
}

// ---------------------------------------------------------------- 3

fn project(ev: &Event, at: u64) -> String {
    match ev {
        Event::Link { from, relation, to } => format!("{at} Link {from} {relation} {to}"),
        Event::Unlink { from, relation, to } => format!("{at} Unlink {from} {relation} {to}"),
        Event::WorkflowStart { run, .. } => format!("{at} WorkflowStart run={run}"),
        Event::StepStart { run, step, .. } => format!("{at} StepStart run={run} {step}"),
        Event::StepEnd { run, step, .. } => format!("{at} StepEnd run={run} {step}"),
        Event::WorkflowComplete { run, .. } => format!("{at} WorkflowComplete run={run}"),
        other => format!("{at} {other:?}"),
    }
}

fn traffic() -> Outcome {
    oracle::self_check();
    let lights = oracle::desk_lights();
    let expected = oracle::expected_trace(&lights, oracle::DESK_HORIZON);

    let sim = simulate_files("traffic.xfo", "desk.xws");
    ensure!(
        sim.horizon() == oracle::DESK_HORIZON,
        "horizon {}",
        sim.horizon()
    );
    for (i, ev) in sim.trace().iter().enumerate() {
        ensure!(ev.seq == i as u64, "event {i} has seq {}", ev.seq);
    }
    let actual: Vec<String> = sim
        .trace()
        .iter()
        .map(|e| project(&e.event, e.at))
        .collect();
    if let Some(i) =
        (0..expected.len().max(actual.len())).find(|&i| expected.get(i) != actual.get(i))
    {
        return Err(format!(
            "trace differs at event {i}: expected {:?}, got {:?}",
            expected.get(i),
            actual.get(i)
        ));
    }

    for t in 0..=oracle::DESK_HORIZON {
        for l in &lights {
            let mut lit = 0;
            for (i, lamp) in l.lamps.iter().enumerate() {
                let state = sim.world().state_of(lamp, t).unwrap();
                let qualities: Vec<&str> = state
                    .links
                    .iter()
                    .filter(|e| e.kind == HAS_QUALITY && e.direction == Direction::Out)
                    .map(|e| e.counterpart.as_str())
                    .collect();
                ensure!(
                    qualities.len() == 1,
                    "{lamp} at {t} has qualities {qualities:?}"
                );
                ensure!(
                    qualities[0] == oracle::lamp_color(l, i, t),
                    "{lamp} at {t}: {} but the oracle says {}",
                    qualities[0],
                    oracle::lamp_color(l, i, t)
                );
                if qualities[0] != "dark" {
                    lit += 1;
                }
            }
            ensure!(lit <= 1, "{} has {lit} lamps lit at {t}", l.name);
            ensure!(t < l.start || lit == 1, "{} has no lamp lit at {t}", l.name);
        }
    }

    let first = TraceFile::from_simulation(&sim).to_json();
    let second = TraceFile::from_simulation(&simulate_files("traffic.xfo", "desk.xws")).to_json();
    ensure!(
        first.as_bytes() == second.as_bytes(),
        "two runs produced different trace files"
    );

    // Stepping the clock partway gives the same prefix.
    let w = world("traffic.xfo");
    let spec = scenario(&w, "desk.xws");
    let mut partial = load_scenario(w, spec).unwrap();
    partial.run_until(2).unwrap();
    ensure!(partial.clock() == 2, "clock {}", partial.clock());
    let n = partial.trace().len();
    ensure!(
        partial.trace() == &sim.trace()[..n],
        "partial run is not a prefix"
    );
    for t in 0..2 {
        let s = partial.world().state_of("lampA_green", t).unwrap();
        ensure!(
            s.contains(Direction::Out, HAS_QUALITY, "green"),
            "lampA_green at {t}: {s:?}"
        );
    }
    let s = partial.world().state_of("lampB_green", 1).unwrap();
    ensure!(
        s.contains(Direction::Out, HAS_QUALITY, "green"),
        "lampB_green at 1: {s:?}"
    );
    let s = partial.world().state_of("lampB_green", 0).unwrap();
    ensure!(
        s.contains(Direction::Out, HAS_QUALITY, "dark"),
        "lampB_green at 0: {s:?}"
    );
    Ok(())
}

// ---------------------------------------------------------------- 4

fn vacancy_guard(w: &World, t: u64) -> bool {
    let state = w.state_of("teacherRole", t).unwrap();
    !state.links.iter().any(|e| {
        e.kind == HAS_ROLE
            && e.direction == Direction::In
            && w.registry()
                .is_descendant(e.counterpart.as_str(), "Person")
                .unwrap()
    })
}

fn frames() -> Outcome {
    let w = world("school.xfo");
    let frame = w.frame("Employment").ok_or("no Employment frame")?.clone();
    let slots = [
        "role",
        "organization",
        "person",
        "compensation",
        "duration",
        "rights",
        "responsibilities",
    ];
    ensure!(frame.slots == slots, "slots {:?}", frame.slots);

    let spec = scenario(&w, "school.xws");
    let sim = simulate(w, spec.clone());
    let world = sim.world();
    for act in world.activations() {
        ensure!(
            act.links.len() == frame.templates.len(),
            "activation {} links {:?}",
            act.id,
            act.links
        );
        for t in &act.links {
            let spans: Vec<_> = world
                .links()
                .iter()
                .filter(|l| l.triple() == *t && l.start == act.start)
                .collect();
            ensure!(
                spans.len() == 1,
                "activation {}: {t:?} not created at {}",
                act.id,
                act.start
            );
            ensure!(
                spans[0].end == act.end,
                "activation {}: {t:?} ends at {:?}",
                act.id,
                spans[0].end
            );
        }
    }
    let person_a: Vec<_> = world
        .links()
        .iter()
        .filter(|l| l.from == "personA" || l.to == "personA")
        .collect();
    ensure!(!person_a.is_empty(), "personA has no links");
    for l in &person_a {
        ensure!(
            l.start == 0 && l.end == Some(3),
            "personA link {l:?} is not [0,3)"
        );
    }
    let fired: Vec<u64> = sim
        .trace()
        .iter()
        .filter(|e| matches!(e.event, Event::RuleFired { .. }))
        .map(|e| e.at)
        .collect();
    ensure!(fired == [3], "rule fired at {fired:?}");
    let run = sim
        .runs()
        .iter()
        .find(|r| r.workflow == "hireReplacement")
        .ok_or("no replacement run")?;
    ensure!(run.start == 3, "replacement started at {}", run.start);
    ensure!(
        run.status == RunStatus::Completed,
        "replacement run {}",
        run.status
    );

    // Hire, resign, hire: personB also leaves, so the guard rises twice.
    let hired = world
        .activations()
        .iter()
        .find(|a| a.binding.iter().any(|(_, e)| e == "personB"))
        .ok_or("personB was never hired")?;
    let mut longer = spec;
    longer.horizon = 20;
    longer.actions.push(TimedAction {
        at: 9,
        action: ScenarioAction::Deactivate {
            frame: "Employment".into(),
            binding: hired.binding.clone(),
        },
    });
    let sim = simulate(self::world("school.xfo"), longer);
    ensure!(sim.faults().is_empty(), "faults: {:?}", sim.faults());
    let fired: Vec<u64> = sim
        .trace()
        .iter()
        .filter(|e| matches!(e.event, Event::RuleFired { .. }))
        .map(|e| e.at)
        .collect();
    let mut rising = Vec::new();
    let mut before = false;
    for t in 0..=sim.horizon() {
        let now = vacancy_guard(sim.world(), t);
        if now && !before {
            rising.push(t);
        }
        before = now;
    }
    ensure!(rising == [3, 9], "guard rose at {rising:?}");
    ensure!(
        fired == rising,
        "rule fired at {fired:?}, guard rose at {rising:?}"
    );
    let starts: Vec<u64> = sim
        .runs()
        .iter()
        .filter(|r| r.workflow == "hireReplacement")
        .map(|r| r.start)
        .collect();
    ensure!(starts == [3, 9], "replacement runs started at {starts:?}");
    Ok(())
}

// ---------------------------------------------------------------- 5

fn raw_clay() -> Vec<StatePredicate> {
    vec![StatePredicate::Exists(LinkTemplate::new(
        Ref::var("clay"),
        HAS_QUALITY,
        Ref::entity("raw"),
    ))]
}

fn without_postconditions(wf: &Workflow, step: &str, name: &str) -> Workflow {
    let mut wf = wf.clone();
    wf.name = name.to_string();
    for s in wf.body.steps_mut() {
        if s.name == step {
            s.postconditions.clear();
        }
    }
    wf
}

/// Runs `workflow` under the celadon scenario's initial state and arguments.
fn run_celadon_variant(workflow: Workflow) -> Result<RunStatus, String> {
    let mut w = world("celadon.xfo");
    let mut spec = scenario(&w, "celadon.xws");
    spec.runs[0].workflow = workflow.name.clone();
    w.define_workflow(workflow).map_err(|e| e.to_string())?;
    Ok(simulate(w, spec).runs()[0].status)
}

fn workflows() -> Outcome {
    let w = world("celadon.xfo");
    let wf = w.workflow("celadonWare").ok_or("no celadonWare")?.clone();
    let report = w.check_completeness(&wf, &raw_clay());
    ensure!(
        report.is_complete(),
        "celadonWare has gaps: {:?}",
        report.gaps
    );
    ensure!(
        report.placeholders == ["dry"],
        "placeholders {:?}",
        report.placeholders
    );

    let first_gap = [
        ("prepare_clay", "shape"),
        ("shape", "biscuit_firing"),
        ("dry", "biscuit_firing"),
        ("biscuit_firing", "glazing"),
        ("glazing", "glost_firing"),
        ("load_kiln", "glost_firing"),
        ("glost_firing", "goal"),
    ];
    let steps: Vec<&str> = wf.steps().iter().map(|s| s.name.as_str()).collect();
    let listed: Vec<&str> = first_gap.iter().map(|(s, _)| *s).collect();
    ensure!(steps == listed, "steps {steps:?}");
    for (removed, gap_at) in first_gap {
        let variant = without_postconditions(&wf, removed, "variant");
        let report = w.check_completeness(&variant, &raw_clay());
        let first = report.gaps.first().map(|g| g.step.as_str());
        ensure!(
            first == Some(gap_at),
            "without {removed}: first gap at {first:?}, expected {gap_at}"
        );
    }

    // Soundness: every combination of removed postconditions that still
    // checks complete must run without breaking.
    let mut complete_variants = 0;
    for mask in 0u32..(1 << steps.len()) {
        let mut variant = wf.clone();
        variant.name = format!("variant{mask}");
        for (i, s) in variant.body.steps_mut().into_iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.postconditions.clear();
            }
        }
        if w.check_completeness(&variant, &raw_clay()).is_complete() {
            complete_variants += 1;
            let status = run_celadon_variant(variant)?;
            ensure!(
                status != RunStatus::Broken,
                "mask {mask:#b} checks complete but broke"
            );
        }
    }
    ensure!(complete_variants >= 1, "no complete variants");

    let status = run_celadon_variant(without_postconditions(&wf, "prepare_clay", "gappy"))?;
    ensure!(
        status == RunStatus::Broken,
        "a variant with a gap ran {status}"
    );

    // The school workflow, from a chief who already holds the role.
    let mut s = world("school.xfo");
    let hire = s
        .workflow("hireReplacement")
        .ok_or("no hireReplacement")?
        .clone();
    ensure!(
        hire.is_straight_line(),
        "hireReplacement is not straight-line"
    );
    let initial = [StatePredicate::Exists(LinkTemplate::new(
        Ref::var("chief"),
        HAS_ROLE,
        Ref::entity("superintendentRole"),
    ))];
    let report = s.check_completeness(&hire, &initial);
    ensure!(
        report.is_complete(),
        "hireReplacement has gaps: {:?}",
        report.gaps
    );
    s.set_tier2_policy(Tier2Policy::Strict);
    let mut spec = Scenario::new("sound", "school", 10);
    spec.init
        .push(Triple::new("personS", HAS_ROLE, "superintendentRole"));
    spec.runs.push(RunSpec {
        workflow: "hireReplacement".into(),
        args: vec![Arg::Entity("personS".into()), Arg::Entity("personB".into())],
        start: 0,
        label: None,
    });
    let sim = simulate(s, spec);
    ensure!(
        sim.runs()[0].status == RunStatus::Completed,
        "hireReplacement ran {}: {:?}",
        sim.runs()[0].status,
        sim.runs()[0].broken_reason
    );
    Ok(())
}

// ---------------------------------------------------------------- 6

fn interrupt_and_broken() -> Outcome {
    let sim = simulate_files("celadon.xfo", "celadon_interrupt.xws");
    let run = &sim.runs()[0];
    ensure!(run.status == RunStatus::Interrupted, "run {}", run.status);
    ensure!(
        run.last_completed.as_deref() == Some("dry"),
        "last completed {:?}",
        run.last_completed
    );
    // Effects of prepare_clay, shape and dry applied to the raw-clay start.
    let expected: BTreeSet<Triple> = [
        Triple::new("clay1", CONTINUANT_PART_OF, "pot1"),
        Triple::new("pot1", HAS_QUALITY, "bone_dry"),
    ]
    .into_iter()
    .collect();
    for at in [12, sim.horizon()] {
        let active: BTreeSet<Triple> = sim.world().active_links(at).map(|l| l.triple()).collect();
        ensure!(active == expected, "state at {at}: {active:?}");
    }
    let clay = sim.world().state_of("clay1", sim.horizon()).unwrap();
    ensure!(
        !clay.links.iter().any(|e| e.kind == HAS_QUALITY),
        "clay1 kept a quality: {clay:?}"
    );
    ensure!(
        sim.trace().iter().any(
            |e| matches!(&e.event, Event::Interrupt { step: Some(s), .. } if s == "biscuit_firing")
                && e.at == 12
        ),
        "no Interrupt event during biscuit_firing at 12"
    );

    let sim = simulate_files("celadon.xfo", "celadon_broken.xws");
    let run = &sim.runs()[0];
    ensure!(run.status == RunStatus::Broken, "run {}", run.status);
    let broken = sim
        .trace()
        .iter()
        .find_map(|e| match &e.event {
            Event::WorkflowBroken { step, reason, .. } => Some((step.clone(), reason.clone())),
            _ => None,
        })
        .ok_or("no WorkflowBroken event")?;
    ensure!(
        broken.0.as_deref() == Some("glost_firing"),
        "broken at {:?}",
        broken.0
    );
    ensure!(
        broken.1.contains("exists pot1 Has_Quality glazed"),
        "reason does not name the predicate: {}",
        broken.1
    );
    ensure!(
        sim.detect_broken(0).unwrap().is_some(),
        "detect_broken reports nothing"
    );
    Ok(())
}

// ---------------------------------------------------------------- 7

fn round_trips() -> Outcome {
    for name in ["traffic.xfo", "school.xfo", "celadon.xfo"] {
        let (doc, diags) = parse_model(&read(name), name);
        ensure!(diags.is_empty(), "{name}: {diags:?}");
        let printed = print_model(&doc);
        let (again, diags) = parse_model(&printed, name);
        ensure!(diags.is_empty(), "{name} reprinted: {diags:?}");
        ensure!(again == doc, "{name}: reparse differs");
        ensure!(
            print_model(&again) == printed,
            "{name}: printing is not stable"
        );
    }
    let mut files = 3;
    for (_, name) in SCENARIOS {
        let (doc, diags) = parse_scenario(&read(name), name);
        ensure!(diags.is_empty(), "{name}: {diags:?}");
        let printed = print_scenario(&doc);
        let (again, diags) = parse_scenario(&printed, name);
        ensure!(diags.is_empty(), "{name} reprinted: {diags:?}");
        ensure!(again == doc, "{name}: reparse differs");
        files += 1;
    }
    ensure!(files == 8, "{files} shipped files");

    for (model, name) in SCENARIOS {
        let sim = simulate_files(model, name);
        let file = TraceFile::from_json(&TraceFile::from_simulation(&sim).to_json())
            .map_err(|e| e.to_string())?;
        let replay = Replay::new(&file).map_err(|e| e.to_string())?;
        let reg = sim.world().registry();
        for def in reg.iter().filter(|d| d.layer == Layer::P) {
            for t in 0..=sim.horizon() {
                let kernel = sim.world().state_of(def.name(), t).unwrap().links;
                let replayed = replay.state_at(def.name(), t);
                ensure!(
                    kernel == replayed,
                    "{name}: {} at {t}: {kernel:?} vs {replayed:?}",
                    def.name()
                );
            }
        }
    }

    let render = || -> Result<Vec<String>, String> {
        let mut out = Vec::new();
        for (model, name) in SCENARIOS {
            let file = TraceFile::from_simulation(&simulate_files(model, name));
            out.push(
                render_timeline(&file, &TimelineOptions::default()).map_err(|e| e.to_string())?,
            );
            out.push(render_snapshot(&file, 1).map_err(|e| e.to_string())?);
        }
        Ok(out)
    };
    ensure!(render()? == render()?, "SVG output is not stable");
    Ok(())
}

// ---------------------------------------------------------------- 8

fn cli_goldens() -> Outcome {
    std::env::set_current_dir(crate_dir()).map_err(|e| e.to_string())?;
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
    let tmp_str = tmp.display().to_string();
    let out = |f: &str| format!("{tmp_str}/{f}");
    let mut failures = Vec::new();
    let mut case = |golden: &str, args: &[&str], code: i32| {
        let (got, text) = golden::transcript(args);
        let text = text.replace(&tmp_str, "$TMP");
        if got != code {
            failures.push(format!("{golden}: exit {got}, expected {code}\n{text}"));
        }
        if let Err(e) = golden::check(golden, &text) {
            failures.push(e);
        }
    };

    for m in ["traffic", "school", "celadon"] {
        let path = format!("models/{m}.xfo");
        case(&format!("check_{m}.txt"), &["check", &path], 0);
    }
    let runs = [
        ("traffic", "desk", 0),
        ("school", "school", 0),
        ("celadon", "celadon", 0),
        ("celadon", "celadon_interrupt", 0),
        ("celadon", "celadon_broken", 0),
    ];
    for (m, s, code) in runs {
        let trace = out(&format!("{s}.trace.json"));
        case(
            &format!("run_{s}.txt"),
            &[
                "run",
                &format!("models/{m}.xfo"),
                &format!("models/{s}.xws"),
                "--trace",
                &trace,
            ],
            code,
        );
    }
    for (_, s, _) in runs {
        let trace = out(&format!("{s}.trace.json"));
        let timeline = out(&format!("{s}.svg"));
        let snapshot = out(&format!("{s}_at1.svg"));
        case(
            &format!("timeline_{s}.txt"),
            &["timeline", &trace, "-o", &timeline],
            0,
        );
        case(
            &format!("snapshot_{s}.txt"),
            &["timeline", &trace, "-o", &snapshot, "--at", "1"],
            0,
        );
    }
    for (m, name, code) in [
        ("traffic", "lightA", 0),
        ("traffic", "B_Entity", 0),
        ("school", "DistrictRole", 0),
        ("celadon", "Pottery", 0),
        ("celadon", "Nope", 1),
    ] {
        case(
            &format!("explain_{m}_{name}.txt"),
            &["explain", &format!("models/{m}.xfo"), name],
            code,
        );
    }

    for (_, s, _) in runs {
        for f in [
            format!("{s}.trace.json"),
            format!("{s}.svg"),
            format!("{s}_at1.svg"),
        ] {
            let body = std::fs::read_to_string(tmp.join(&f)).map_err(|e| format!("{f}: {e}"))?;
            if let Err(e) = golden::check(&f, &body) {
                failures.push(e);
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures.join("\n"))
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("taxonomy", taxonomy),
        ("validation", validation),
        ("traffic oracle", traffic),
        ("frames", frames),
        ("workflows", workflows),
        ("interrupt and broken", interrupt_and_broken),
        ("round trips", round_trips),
        ("cli goldens", cli_goldens),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(()) => println!("criterion {} ({name}): PASS", i + 1),
            Err(e) => {
                failed += 1;
                println!(
                    "criterion {} ({name}): FAIL\n    {}",
                    i + 1,
                    e.replace('\n', "\n    ")
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
