//! Scenarios and their deterministic execution over a shared world.
//!
//! Pending work sits in a queue ordered by `(tick, class, seq)`: step
//! effects and scheduled actions first, then rule evaluation, then
//! interrupts. Within a class, earlier-scheduled work goes first.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::fmt;

use crate::dynamics::{
    Arg, Duration, Env, LoopBound, Node, RuleAction, StatePredicate, Workflow, WorkflowStep,
};
use crate::error::{Error, Result};
use crate::ontology::EntityId;
use crate::relations::Triple;
use crate::trace::{Event, TraceEvent};
use crate::world::World;
use crate::Tick;

/// Instructions a single tick may execute for one run before the run is
/// declared stuck (a loop whose body takes no time and never exits).
const SPIN_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub workflow: String,
    pub args: Vec<Arg>,
    pub start: Tick,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioAction {
    Activate {
        frame: String,
        binding: Vec<(String, EntityId)>,
    },
    Deactivate {
        frame: String,
        binding: Vec<(String, EntityId)>,
    },
    Apply {
        transitional: String,
        args: Vec<EntityId>,
    },
    /// Interrupts the run at this index of [`Scenario::runs`].
    Interrupt { run: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub at: Tick,
    pub action: ScenarioAction,
}

/// A model, an initial state, workflow runs and timed actions, bounded by a
/// horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub model: String,
    pub horizon: Tick,
    /// Links created at tick 0, before anything else.
    pub init: Vec<Triple>,
    /// Runs start in this order; at equal ticks they precede `actions`.
    pub runs: Vec<RunSpec>,
    pub actions: Vec<TimedAction>,
    /// Rules enabled for this scenario, by name.
    pub rules: Vec<String>,
}

impl Scenario {
    pub fn new(name: &str, model: &str, horizon: Tick) -> Self {
        Scenario {
            name: name.to_string(),
            model: model.to_string(),
            horizon,
            init: Vec::new(),
            runs: Vec::new(),
            actions: Vec::new(),
            rules: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Pending,
    Running,
    Completed,
    Interrupted,
    Broken,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            RunStatus::Completed | RunStatus::Interrupted | RunStatus::Broken
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Pending => "pending",
            RunStatus::Running => "running",
            RunStatus::Completed => "completed",
            RunStatus::Interrupted => "interrupted",
            RunStatus::Broken => "broken",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
enum Instr {
    Step(usize),
    BranchUnless {
        guard: Vec<StatePredicate>,
        target: usize,
    },
    Jump(usize),
    LoopEnter(usize),
    LoopTest {
        slot: usize,
        bound: LoopBound,
        exit: usize,
    },
    End,
}

#[derive(Debug, Clone)]
struct Program {
    instrs: Vec<Instr>,
    steps: Vec<WorkflowStep>,
    loops: usize,
}

impl Program {
    fn compile(wf: &Workflow) -> Program {
        let mut p = Program {
            instrs: Vec::new(),
            steps: Vec::new(),
            loops: 0,
        };
        p.emit(&wf.body);
        p.instrs.push(Instr::End);
        p
    }

    fn emit(&mut self, node: &Node) {
        match node {
            Node::Seq(items) => items.iter().for_each(|n| self.emit(n)),
            Node::Step(step) => {
                self.instrs.push(Instr::Step(self.steps.len()));
                self.steps.push(step.clone());
            }
            Node::Cond {
                guard,
                then,
                otherwise,
            } => {
                let branch = self.instrs.len();
                self.instrs.push(Instr::BranchUnless {
                    guard: guard.clone(),
                    target: 0,
                });
                self.emit(then);
                let jump = self.instrs.len();
                self.instrs.push(Instr::Jump(0));
                let else_start = self.instrs.len();
                self.emit(otherwise);
                let end = self.instrs.len();
                if let Instr::BranchUnless { target, .. } = &mut self.instrs[branch] {
                    *target = else_start;
                }
                self.instrs[jump] = Instr::Jump(end);
            }
            Node::Loop { body, bound } => {
                let slot = self.loops;
                self.loops += 1;
                self.instrs.push(Instr::LoopEnter(slot));
                let test = self.instrs.len();
                self.instrs.push(Instr::LoopTest {
                    slot,
                    // Rejected at definition time; a zero count is the safe reading.
                    bound: bound.clone().unwrap_or(LoopBound::Count(0)),
                    exit: 0,
                });
                self.emit(body);
                self.instrs.push(Instr::Jump(test));
                let exit_at = self.instrs.len();
                if let Instr::LoopTest { exit, .. } = &mut self.instrs[test] {
                    *exit = exit_at;
                }
            }
        }
    }
}

/// One execution of a workflow.
#[derive(Debug, Clone)]
pub struct WorkflowRun {
    pub id: usize,
    pub workflow: String,
    pub args: Vec<Arg>,
    pub label: Option<String>,
    pub start: Tick,
    pub status: RunStatus,
    /// Step in progress, if any.
    pub current_step: Option<String>,
    pub last_completed: Option<String>,
    /// Why the run broke, naming the failing predicate or edit.
    pub broken_reason: Option<String>,
    env: Env,
    pc: usize,
    counters: Vec<u64>,
    token: u64,
}

impl WorkflowRun {
    /// Display name: the label if any, else `workflow#id`.
    pub fn name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("{}#{}", self.workflow, self.id),
        }
    }
}

/// A problem outside any run, such as a rule action that could not apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub at: Tick,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    StartRun(usize),
    StepEnd { run: usize, token: u64 },
    Action(usize),
    Rules,
    Interrupt(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pending {
    tick: Tick,
    class: u8,
    seq: u64,
    item: Item,
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.tick, self.class, self.seq).cmp(&(other.tick, other.class, other.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A loaded scenario advancing on a logical clock.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: World,
    scenario: Scenario,
    queue: BinaryHeap<Reverse<Pending>>,
    next_seq: u64,
    runs: Vec<WorkflowRun>,
    programs: Vec<Program>,
    /// Enabled rules (indices into the world's rules) with their last guard value.
    rules: Vec<(usize, bool)>,
    clock: Tick,
    faults: Vec<Fault>,
}

/// Validates a scenario against a world and prepares it to run. Initial
/// links are created at tick 0.
pub fn load_scenario(world: World, scenario: Scenario) -> Result<Simulation> {
    if scenario.horizon == 0 {
        return Err(Error::BadHorizon);
    }
    let horizon = scenario.horizon;
    let beyond = |tick: Tick| Error::BeyondHorizon { tick, horizon };
    let mut rules = Vec::new();
    for name in &scenario.rules {
        let idx = world
            .rules
            .iter()
            .position(|r| &r.name == name)
            .ok_or_else(|| Error::ResolveError {
                what: "rule",
                name: name.clone(),
            })?;
        if !rules.iter().any(|&(i, _)| i == idx) {
            rules.push((idx, false));
        }
    }
    rules.sort_unstable();
    for spec in &scenario.runs {
        let wf = world
            .workflows
            .get(&spec.workflow)
            .ok_or_else(|| Error::ResolveError {
                what: "workflow",
                name: spec.workflow.clone(),
            })?;
        wf.bind_args(&world, &spec.args)?;
        if spec.start > horizon {
            return Err(beyond(spec.start));
        }
    }
    for action in &scenario.actions {
        if action.at > horizon {
            return Err(beyond(action.at));
        }
        match &action.action {
            ScenarioAction::Activate { frame, .. } | ScenarioAction::Deactivate { frame, .. } => {
                if world.frame(frame).is_none() {
                    return Err(Error::ResolveError {
                        what: "frame",
                        name: frame.clone(),
                    });
                }
            }
            ScenarioAction::Apply { transitional, .. } => {
                if world.transitional(transitional).is_none() {
                    return Err(Error::ResolveError {
                        what: "transitional",
                        name: transitional.clone(),
                    });
                }
            }
            ScenarioAction::Interrupt { run } => {
                if *run >= scenario.runs.len() {
                    return Err(Error::UnknownRun { run: *run });
                }
            }
        }
    }

    let mut world = world;
    for t in &scenario.init {
        world
            .link(t.from.as_str(), &t.kind, t.to.as_str(), 0)
            .map_err(|e| Error::InvalidInitialLink(alloc::boxed::Box::new(e)))?;
    }

    let mut sim = Simulation {
        world,
        scenario,
        queue: BinaryHeap::new(),
        next_seq: 0,
        runs: Vec::new(),
        programs: Vec::new(),
        rules,
        clock: 0,
        faults: Vec::new(),
    };
    for i in 0..sim.scenario.runs.len() {
        let spec = sim.scenario.runs[i].clone();
        let id = sim.add_run(&spec.workflow, spec.args, spec.start, spec.label);
        sim.push(spec.start, Item::StartRun(id));
    }
    for i in 0..sim.scenario.actions.len() {
        let action = &sim.scenario.actions[i];
        let item = match action.action {
            ScenarioAction::Interrupt { run } => Item::Interrupt(run),
            _ => Item::Action(i),
        };
        let at = action.at;
        sim.push(at, item);
    }
    if !sim.rules.is_empty() {
        sim.push(0, Item::Rules);
    }
    Ok(sim)
}

impl Simulation {
    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn into_world(self) -> World {
        self.world
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn horizon(&self) -> Tick {
        self.scenario.horizon
    }

    /// Every tick up to and including this one has been processed.
    pub fn clock(&self) -> Tick {
        self.clock
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.world.trace()
    }

    /// Scenario runs first, then runs started by rules.
    pub fn runs(&self) -> &[WorkflowRun] {
        &self.runs
    }

    pub fn run(&self, id: usize) -> Option<&WorkflowRun> {
        self.runs.get(id)
    }

    pub fn run_by_label(&self, label: &str) -> Option<&WorkflowRun> {
        self.runs.iter().find(|r| r.label.as_deref() == Some(label))
    }

    pub fn faults(&self) -> &[Fault] {
        &self.faults
    }

    /// Why a run is broken, if it is.
    pub fn detect_broken(&self, run: usize) -> Result<Option<&str>> {
        let r = self.runs.get(run).ok_or(Error::UnknownRun { run })?;
        Ok(match r.status {
            RunStatus::Broken => r.broken_reason.as_deref(),
            _ => None,
        })
    }

    fn push(&mut self, tick: Tick, item: Item) {
        let class = match item {
            Item::StartRun(_) | Item::StepEnd { .. } | Item::Action(_) => 0,
            Item::Rules => 1,
            Item::Interrupt(_) => 2,
        };
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Pending {
            tick,
            class,
            seq,
            item,
        }));
    }

    fn add_run(
        &mut self,
        workflow: &str,
        args: Vec<Arg>,
        start: Tick,
        label: Option<String>,
    ) -> usize {
        let wf = &self.world.workflows[workflow];
        let program = Program::compile(wf);
        let id = self.runs.len();
        self.runs.push(WorkflowRun {
            id,
            workflow: workflow.to_string(),
            args,
            label,
            start,
            status: RunStatus::Pending,
            current_step: None,
            last_completed: None,
            broken_reason: None,
            env: Env::new(),
            pc: 0,
            counters: alloc::vec![0; program.loops],
            token: 0,
        });
        self.programs.push(program);
        id
    }

    /// Processes everything scheduled at or before `tick`.
    pub fn run_until(&mut self, tick: Tick) -> Result<&[TraceEvent]> {
        if tick > self.scenario.horizon {
            return Err(Error::BeyondHorizon {
                tick,
                horizon: self.scenario.horizon,
            });
        }
        while let Some(Reverse(next)) = self.queue.peek() {
            if next.tick > tick {
                break;
            }
            let Reverse(p) = self.queue.pop().expect("peeked");
            self.clock = self.clock.max(p.tick);
            self.handle(p.tick, p.item);
        }
        self.clock = self.clock.max(tick);
        Ok(self.world.trace())
    }

    pub fn run_to_horizon(&mut self) -> &[TraceEvent] {
        let horizon = self.scenario.horizon;
        self.run_until(horizon).expect("horizon is in range")
    }

    /// Runs up to `at`, then cancels the run's pending work.
    pub fn interrupt(&mut self, run: usize, at: Tick) -> Result<TraceEvent> {
        if at > self.scenario.horizon {
            return Err(Error::BeyondHorizon {
                tick: at,
                horizon: self.scenario.horizon,
            });
        }
        if at < self.clock {
            return Err(Error::TickInPast {
                tick: at,
                clock: self.clock,
            });
        }
        if run >= self.runs.len() {
            return Err(Error::UnknownRun { run });
        }
        self.run_until(at)?;
        self.do_interrupt(run, at)
    }

    fn do_interrupt(&mut self, run: usize, at: Tick) -> Result<TraceEvent> {
        let r = &mut self.runs[run];
        if r.status.is_terminal() {
            return Err(Error::NotInterruptible {
                run: r.id,
                status: r.status.as_str(),
            });
        }
        r.status = RunStatus::Interrupted;
        r.token += 1;
        let event = Event::Interrupt {
            run: r.id,
            workflow: r.workflow.clone(),
            step: r.current_step.take(),
            last_completed: r.last_completed.clone(),
        };
        Ok(self.world.record(at, event))
    }

    fn fault(&mut self, at: Tick, message: String) {
        self.faults.push(Fault { at, message });
    }

    fn handle(&mut self, now: Tick, item: Item) {
        match item {
            Item::StartRun(id) => self.start_run(id, now),
            Item::StepEnd { run, token } => {
                if self.runs[run].status == RunStatus::Running && self.runs[run].token == token {
                    self.end_step(run, now);
                }
            }
            Item::Action(i) => self.scenario_action(i, now),
            Item::Rules => {
                self.evaluate_rules(now);
                if now < self.scenario.horizon {
                    self.push(now + 1, Item::Rules);
                }
            }
            Item::Interrupt(run) => {
                if let Err(e) = self.do_interrupt(run, now) {
                    self.fault(now, e.to_string());
                }
            }
        }
    }

    fn scenario_action(&mut self, i: usize, now: Tick) {
        let action = self.scenario.actions[i].action.clone();
        let result = match &action {
            ScenarioAction::Activate { frame, binding } => {
                self.world.activate_frame(frame, binding, now).map(|_| ())
            }
            ScenarioAction::Deactivate { frame, binding } => {
                match self.world.find_activation(frame, binding) {
                    Some(id) => self.world.deactivate_frame(id, now).map(|_| ()),
                    None => Err(Error::NotActive {
                        frame: frame.clone(),
                        missing: String::new(),
                    }),
                }
            }
            ScenarioAction::Apply { transitional, args } => self
                .world
                .apply_transitional(transitional, args, now)
                .map(|_| ()),
            ScenarioAction::Interrupt { .. } => Ok(()),
        };
        if let Err(e) = result {
            self.fault(now, e.to_string());
        }
    }

    fn evaluate_rules(&mut self, now: Tick) {
        for i in 0..self.rules.len() {
            let (idx, prev) = self.rules[i];
            let rule = self.world.rules[idx].clone();
            let value = match self.world.all_hold(&rule.guard, &Env::new(), now) {
                Ok(v) => v,
                Err(e) => {
                    self.fault(now, format!("rule `{}`: {e}", rule.name));
                    false
                }
            };
            self.rules[i].1 = value;
            if !value || prev {
                continue;
            }
            self.world.record(
                now,
                Event::RuleFired {
                    rule: rule.name.clone(),
                    action: rule.action.to_string(),
                },
            );
            let result = match &rule.action {
                RuleAction::StartWorkflow { workflow, args } => {
                    let id = self.add_run(workflow, args.clone(), now, None);
                    self.start_run(id, now);
                    Ok(())
                }
                action => self
                    .world
                    .rule_ops(action, now)
                    .and_then(|ops| self.world.apply_ops(&ops, now))
                    .map(|_| ()),
            };
            if let Err(e) = result {
                self.fault(now, format!("rule `{}`: {e}", rule.name));
            }
        }
    }

    fn start_run(&mut self, id: usize, now: Tick) {
        if self.runs[id].status != RunStatus::Pending {
            return;
        }
        let wf = self.world.workflows[&self.runs[id].workflow].clone();
        let env = match wf.bind_args(&self.world, &self.runs[id].args) {
            Ok(env) => env,
            Err(e) => return self.break_run(id, now, None, e.to_string()),
        };
        let env = match self.bind_lets(&wf, env, now) {
            Ok(env) => env,
            Err(reason) => return self.break_run(id, now, None, reason),
        };
        let r = &mut self.runs[id];
        r.env = env;
        r.status = RunStatus::Running;
        let event = Event::WorkflowStart {
            run: r.id,
            workflow: r.workflow.clone(),
            args: r.args.iter().map(|a| a.to_string()).collect(),
        };
        self.world.record(now, event);
        self.advance(id, now);
    }

    fn bind_lets(
        &self,
        wf: &Workflow,
        mut env: Env,
        now: Tick,
    ) -> core::result::Result<Env, String> {
        for l in &wf.lets {
            let mut found = Vec::new();
            for p in self.world.registry.particulars_of(l.ty.as_str()) {
                let mut trial = env.clone();
                trial.bind(&l.name, Arg::Entity(p.id.clone()));
                let pred = StatePredicate::Exists(l.pattern.clone());
                if self
                    .world
                    .holds(&pred, &trial, now)
                    .map_err(|e| e.to_string())?
                {
                    found.push(p.id.clone());
                }
            }
            match found.as_slice() {
                [one] => env.bind(&l.name, Arg::Entity(one.clone())),
                _ => {
                    return Err(format!(
                        "let `{}` matched {} particulars of {} where {}",
                        l.name,
                        found.len(),
                        l.ty,
                        env.substitute_template(&l.pattern)
                    ))
                }
            }
        }
        Ok(env)
    }

    fn break_run(&mut self, id: usize, now: Tick, step: Option<String>, reason: String) {
        let r = &mut self.runs[id];
        r.status = RunStatus::Broken;
        r.token += 1;
        r.current_step = None;
        r.broken_reason = Some(reason.clone());
        let event = Event::WorkflowBroken {
            run: r.id,
            workflow: r.workflow.clone(),
            step,
            reason,
        };
        self.world.record(now, event);
    }

    /// Executes control instructions until the run starts a step or ends.
    fn advance(&mut self, id: usize, now: Tick) {
        let horizon = self.scenario.horizon;
        for _ in 0..SPIN_LIMIT {
            let pc = self.runs[id].pc;
            let instr = self.programs[id].instrs[pc].clone();
            match instr {
                Instr::End => {
                    let r = &mut self.runs[id];
                    r.status = RunStatus::Completed;
                    let event = Event::WorkflowComplete {
                        run: r.id,
                        workflow: r.workflow.clone(),
                    };
                    self.world.record(now, event);
                    return;
                }
                Instr::Jump(target) => self.runs[id].pc = target,
                Instr::LoopEnter(slot) => {
                    let r = &mut self.runs[id];
                    r.counters[slot] = 0;
                    r.pc += 1;
                }
                Instr::LoopTest { slot, bound, exit } => {
                    let r = &self.runs[id];
                    let done = match &bound {
                        LoopBound::Count(n) => r.counters[slot] >= *n,
                        LoopBound::Horizon => now >= horizon,
                        LoopBound::Until(guard) => match self.world.all_hold(guard, &r.env, now) {
                            Ok(v) => v,
                            Err(e) => return self.break_run(id, now, None, e.to_string()),
                        },
                    };
                    let r = &mut self.runs[id];
                    if done {
                        r.pc = exit;
                    } else {
                        r.counters[slot] += 1;
                        r.pc += 1;
                    }
                }
                Instr::BranchUnless { guard, target } => {
                    match self.world.all_hold(&guard, &self.runs[id].env, now) {
                        Ok(true) => self.runs[id].pc += 1,
                        Ok(false) => self.runs[id].pc = target,
                        Err(e) => return self.break_run(id, now, None, e.to_string()),
                    }
                }
                Instr::Step(s) => return self.start_step(id, s, now),
            }
        }
        self.break_run(
            id,
            now,
            None,
            String::from("control flow made no progress within one tick"),
        );
    }

    fn start_step(&mut self, id: usize, s: usize, now: Tick) {
        let step = &self.programs[id].steps[s];
        let env = &self.runs[id].env;
        let name = step.name.clone();
        match self.world.first_failing(&step.preconditions, env, now) {
            Ok(None) => {}
            Ok(Some(p)) => {
                let reason = format!(
                    "precondition `{}` does not hold",
                    env.substitute_predicate(p)
                );
                return self.break_run(id, now, Some(name), reason);
            }
            Err(e) => return self.break_run(id, now, Some(name), e.to_string()),
        }
        let dur = match &step.duration {
            Duration::Ticks(t) => Ok(*t),
            Duration::Var(v) => env.ticks(v).map_err(|e| e.to_string()),
        };
        let dur = match dur {
            Ok(d) => d,
            Err(reason) => return self.break_run(id, now, Some(name), reason),
        };
        let agent = match &step.agent {
            Some(a) => match env.resolve(a) {
                Ok(Some(e)) => Some(e.to_string()),
                _ => Some(a.to_string()),
            },
            None => None,
        };
        let placeholder = step.placeholder;
        let r = &mut self.runs[id];
        r.current_step = Some(name.clone());
        r.token += 1;
        let token = r.token;
        let event = Event::StepStart {
            run: r.id,
            workflow: r.workflow.clone(),
            step: name,
            agent,
            placeholder,
        };
        self.world.record(now, event);
        self.push(now.saturating_add(dur), Item::StepEnd { run: id, token });
    }

    fn end_step(&mut self, id: usize, now: Tick) {
        let pc = self.runs[id].pc;
        let Instr::Step(s) = self.programs[id].instrs[pc] else {
            return;
        };
        let step = &self.programs[id].steps[s];
        let name = step.name.clone();
        let placeholder = step.placeholder;
        let ops = self
            .world
            .edit_ops(&step.postconditions, &self.runs[id].env, now);
        let applied = ops.and_then(|ops| {
            let ops = if placeholder {
                self.world.lenient_ops(ops, now)
            } else {
                ops
            };
            self.world.apply_ops(&ops, now)
        });
        if let Err(e) = applied {
            let reason = format!("effects could not apply: {e}");
            return self.break_run(id, now, Some(name), reason);
        }
        let r = &mut self.runs[id];
        r.current_step = None;
        r.last_completed = Some(name.clone());
        r.pc += 1;
        let event = Event::StepEnd {
            run: r.id,
            workflow: r.workflow.clone(),
            step: name,
        };
        self.world.record(now, event);
        self.advance(id, now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Edit, LinkTemplate, Param, ParamType, Ref};
    use alloc::boxed::Box;
    use alloc::vec;

    fn world() -> World {
        let mut w = World::new("t");
        let r = w.registry_mut();
        r.define_universal("Lamp", "B_Object", None).unwrap();
        r.define_universal("Lit", "B_Quality", None).unwrap();
        r.define_universal("Switch", "X_Transitional", None)
            .unwrap();
        r.instantiate_particular("lamp", "Lamp", None).unwrap();
        r.instantiate_particular("on", "Lit", None).unwrap();
        r.instantiate_particular("off", "Lit", None).unwrap();
        w.declare_u_relation("Lamp", "Has_Quality", "Lit").unwrap();
        w
    }

    fn step(name: &str, dur: Tick, unlink: &str, link: &str) -> Node {
        let mut s = WorkflowStep::new(name, Duration::Ticks(dur));
        s.preconditions
            .push(StatePredicate::Exists(LinkTemplate::concrete(
                "lamp",
                "Has_Quality",
                unlink,
            )));
        s.postconditions = vec![
            Edit::Unlink(LinkTemplate::concrete("lamp", "Has_Quality", unlink)),
            Edit::Link(LinkTemplate::concrete("lamp", "Has_Quality", link)),
        ];
        Node::Step(s)
    }

    fn blink(bound: LoopBound) -> Workflow {
        let body = Node::Seq(vec![
            step("turn_on", 2, "off", "on"),
            step("turn_off", 1, "on", "off"),
        ]);
        Workflow::new(
            "blink",
            Node::Loop {
                body: Box::new(body),
                bound: Some(bound),
            },
            false,
        )
    }

    fn scenario(horizon: Tick) -> Scenario {
        let mut sc = Scenario::new("s", "t", horizon);
        sc.init.push(Triple::new("lamp", "Has_Quality", "off"));
        sc.runs.push(RunSpec {
            workflow: "blink".into(),
            args: vec![],
            start: 1,
            label: Some("b".into()),
        });
        sc
    }

    fn quality_at(sim: &Simulation, at: Tick) -> Vec<String> {
        sim.world()
            .state_of("lamp", at)
            .unwrap()
            .links
            .iter()
            .map(|e| e.counterpart.to_string())
            .collect()
    }

    #[test]
    fn counted_loop_runs_to_completion() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Count(2))).unwrap();
        let mut sim = load_scenario(w, scenario(20)).unwrap();
        sim.run_to_horizon();
        let run = &sim.runs()[0];
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(quality_at(&sim, 2), ["off"]);
        assert_eq!(quality_at(&sim, 3), ["on"]);
        assert_eq!(quality_at(&sim, 4), ["off"]);
        assert_eq!(quality_at(&sim, 6), ["on"]);
        assert_eq!(quality_at(&sim, 20), ["off"]);
        let done = sim.trace().last().unwrap();
        assert_eq!(done.at, 7);
        assert_eq!(done.event.kind_name(), "WorkflowComplete");
    }

    #[test]
    fn trace_is_ordered_and_dense() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Horizon)).unwrap();
        let mut sim = load_scenario(w, scenario(10)).unwrap();
        sim.run_to_horizon();
        let trace = sim.trace();
        assert!(trace
            .windows(2)
            .all(|p| p[0].at <= p[1].at && p[0].seq + 1 == p[1].seq));
        assert!(trace.iter().all(|e| e.at <= 10));
        // Until-horizon loops exit once the horizon tick is reached.
        assert_eq!(sim.runs()[0].status, RunStatus::Completed);
    }

    #[test]
    fn run_until_is_incremental() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Horizon)).unwrap();
        let mut a = load_scenario(w.clone(), scenario(10)).unwrap();
        let mut b = load_scenario(w, scenario(10)).unwrap();
        a.run_until(4).unwrap();
        a.run_until(10).unwrap();
        b.run_to_horizon();
        assert_eq!(a.trace(), b.trace());
        assert!(matches!(a.run_until(11), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn interrupt_stops_future_effects() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Horizon)).unwrap();
        let mut sim = load_scenario(w, scenario(10)).unwrap();
        let ev = sim.interrupt(0, 2).unwrap();
        match &ev.event {
            Event::Interrupt {
                step,
                last_completed,
                ..
            } => {
                assert_eq!(step.as_deref(), Some("turn_on"));
                assert_eq!(last_completed, &None);
            }
            other => panic!("unexpected {other:?}"),
        }
        sim.run_to_horizon();
        assert_eq!(sim.runs()[0].status, RunStatus::Interrupted);
        assert_eq!(quality_at(&sim, 10), ["off"]);
        assert!(sim.trace().iter().all(|e| e.at <= 2));
        assert!(matches!(
            sim.interrupt(0, 10),
            Err(Error::NotInterruptible { .. })
        ));
    }

    #[test]
    fn interrupt_in_the_past_is_rejected() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Horizon)).unwrap();
        let mut sim = load_scenario(w, scenario(10)).unwrap();
        sim.run_until(5).unwrap();
        assert!(matches!(sim.interrupt(0, 4), Err(Error::TickInPast { .. })));
    }

    #[test]
    fn unmet_precondition_breaks_the_run() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Count(1))).unwrap();
        let mut sc = scenario(10);
        sc.init = vec![Triple::new("lamp", "Has_Quality", "on")];
        let mut sim = load_scenario(w, sc).unwrap();
        sim.run_to_horizon();
        assert_eq!(sim.runs()[0].status, RunStatus::Broken);
        let reason = sim.detect_broken(0).unwrap().unwrap();
        assert!(reason.contains("lamp Has_Quality off"), "{reason}");
        let last = sim.trace().last().unwrap();
        assert_eq!(last.event.kind_name(), "WorkflowBroken");
        assert_eq!(last.at, 1);
    }

    #[test]
    fn scenario_validation() {
        let mut w = world();
        w.define_workflow(blink(LoopBound::Count(1))).unwrap();
        assert!(matches!(
            load_scenario(w.clone(), scenario(0)),
            Err(Error::BadHorizon)
        ));
        let mut sc = scenario(10);
        sc.runs[0].start = 11;
        assert!(matches!(
            load_scenario(w.clone(), sc),
            Err(Error::BeyondHorizon { .. })
        ));
        let mut sc = scenario(10);
        sc.init.push(Triple::new("on", "Has_Quality", "lamp"));
        assert_eq!(
            load_scenario(w.clone(), sc).unwrap_err().code(),
            "E_INVALID_INITIAL_LINK"
        );
        let mut sc = scenario(10);
        sc.rules.push("nope".into());
        assert!(load_scenario(w, sc).is_err());
    }

    #[test]
    fn rules_fire_on_rising_edges() {
        let mut w = world();
        let mut wf = Workflow::new(
            "relight",
            Node::Seq(vec![step("relight", 1, "off", "on")]),
            false,
        );
        wf.params.push(Param {
            name: "target".into(),
            ty: ParamType::Entity(Some("Lamp".into())),
        });
        w.define_workflow(wf).unwrap();
        w.define_rule(
            "dark",
            vec![StatePredicate::Exists(LinkTemplate::new(
                Ref::Any {
                    name: "x".into(),
                    ty: Some("Lamp".into()),
                },
                "Has_Quality",
                Ref::entity("off"),
            ))],
            RuleAction::StartWorkflow {
                workflow: "relight".into(),
                args: vec![Arg::Entity("lamp".into())],
            },
        )
        .unwrap();
        let mut sc = Scenario::new("s", "t", 6);
        sc.init.push(Triple::new("lamp", "Has_Quality", "off"));
        sc.rules.push("dark".into());
        let mut sim = load_scenario(w, sc).unwrap();
        sim.run_to_horizon();
        let fired = sim
            .trace()
            .iter()
            .filter(|e| e.event.kind_name() == "RuleFired")
            .count();
        assert_eq!(fired, 1, "{:?} {:?}", sim.faults(), sim.trace());
        assert_eq!(sim.runs().len(), 1);
        assert_eq!(sim.runs()[0].status, RunStatus::Completed);
        assert_eq!(quality_at(&sim, 1), ["on"]);
    }

    #[test]
    fn queue_orders_by_tick_class_seq() {
        let p = |tick, class, seq| Pending {
            tick,
            class,
            seq,
            item: Item::Rules,
        };
        let mut heap = BinaryHeap::new();
        for e in [p(2, 0, 5), p(1, 2, 0), p(1, 0, 9), p(1, 1, 1), p(1, 0, 3)] {
            heap.push(Reverse(e));
        }
        let order: Vec<(Tick, u8, u64)> = core::iter::from_fn(|| heap.pop())
            .map(|Reverse(e)| (e.tick, e.class, e.seq))
            .collect();
        assert_eq!(
            order,
            [(1, 0, 3), (1, 0, 9), (1, 1, 1), (1, 2, 0), (2, 0, 5)]
        );
    }
}
