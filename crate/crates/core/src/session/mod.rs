//! Interactive execution of goals against a model.
//!
//! Each executed goal pushes an interaction frame and hangs a call node off
//! the current tip of the derivation. Constraints are posted and
//! propagated; every labeled variable becomes a traced `fd_labeling` call
//! with one success node per consistent value. When the whole goal
//! succeeds the frame gets a success node, `<success>` is sent for goals
//! that label something, and the session waits. `backtrack` resumes the
//! newest choice point of the top frame; once the frame runs out it is
//! popped with `<undo-goal>`.

mod compile;
mod sink;

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::fd::{Domain, FdError, Mark, Store, VarId};
use crate::lang::{parse_goal, Goal, Model, ParseError};
use crate::protocol::{ControlMessage, EngineMessage, WireId};

use compile::{compile, Program, Step};
pub use sink::{ChannelSink, ControlChannel, EventSink, FrameWriter, NullSink, Outbound, Tee};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SessionState {
    #[default]
    Idle,
    Running,
    AtSuccess,
    /// Not a resting state here: an exhausted frame is popped at once,
    /// leaving `AtSuccess` or `Idle`.
    Exhausted,
}

/// What snapshots carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SnapshotMode {
    #[default]
    SizeOnly,
    Intervals,
    FullValues,
}

/// Result of a command that was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Paused at a success of the top frame.
    Success,
    /// The goal has no (further) solution; its frame was popped.
    Failure,
    /// The top frame was popped on request.
    Undone,
    /// The session went back to its pristine state.
    Cleared,
    /// The snapshot mode changed.
    ModeChanged,
}

#[derive(Debug, Clone, Default)]
pub struct SessionOptions {
    /// Emit a retracted `fail(X=v)` leaf for every failed value trial.
    pub trace_failures: bool,
    pub snapshot_mode: SnapshotMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("`{command}` is not accepted in state {state:?}")]
    Rejected {
        command: &'static str,
        state: SessionState,
    },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("arithmetic overflow in a linear constraint")]
    Overflow,
    #[error("unbounded search: {0}")]
    UnboundedSearch(String),
    #[error("{0}")]
    MinimizePlacement(String),
    #[error(transparent)]
    Fd(FdError),
}

impl From<FdError> for SessionError {
    fn from(e: FdError) -> Self {
        match e {
            FdError::Overflow => SessionError::Overflow,
            e => SessionError::Fd(e),
        }
    }
}

#[derive(Debug)]
struct ChoicePoint {
    step: usize,
    var: VarId,
    values: Vec<i64>,
    next: usize,
    /// Mark taken before the value currently being explored.
    trial: Option<Mark>,
    /// Path length with the call node on top.
    path_len: usize,
}

#[derive(Debug)]
struct Scope {
    cost: VarId,
    end: usize,
    mark: Mark,
    cps_len: usize,
    path_len: usize,
    best: Option<(i64, Vec<Domain>)>,
    done: bool,
}

#[derive(Debug)]
struct Frame {
    goal: String,
    program: Arc<Program>,
    mark: Mark,
    call: WireId,
    /// Path length before the call node.
    path_len: usize,
    cps: Vec<ChoicePoint>,
    scope: Option<Scope>,
    /// Snapshots taken while this frame was on top.
    snapshots: Vec<(u64, SnapshotMode)>,
    /// The current success is a restored optimum.
    restored: bool,
}

enum Flow {
    Forward(usize),
    Backtrack,
    Fail,
    Abort,
}

enum RunEnd {
    Success,
    Failure,
    Aborted,
}

/// One interactive session over a model.
pub struct Session<S: EventSink> {
    store: Store,
    base: Mark,
    /// Registered variables with their external names.
    named: Vec<(VarId, String)>,
    buttons: Vec<Goal>,
    sink: S,
    options: SessionOptions,
    state: SessionState,
    frames: Vec<Frame>,
    /// Derivation path: `(id, is_call)`.
    path: Vec<(WireId, bool)>,
    next_id: WireId,
    time: u64,
    control: Option<Box<dyn ControlChannel>>,
    pending: VecDeque<ControlMessage>,
}

impl<S: EventSink> std::fmt::Debug for Session<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("state", &self.state)
            .field("frames", &self.frames.len())
            .field("nodes", &(self.next_id - 1))
            .finish()
    }
}

impl<S: EventSink> Session<S> {
    /// Declares the model's variables and announces them, the buttons and
    /// an initial snapshot to `sink`.
    pub fn new(model: &Model, sink: S, options: SessionOptions) -> Result<Self, SessionError> {
        let mut store = Store::new();
        let mut named = Vec::new();
        for (name, lo, hi) in model.variables() {
            let v = store.new_var(Some(name), lo, hi)?;
            named.push((v, model.external_name(name).to_string()));
        }
        let base = store.mark();
        let mut s = Session {
            store,
            base,
            named,
            buttons: model.buttons.iter().map(|b| b.goal.clone()).collect(),
            sink,
            options,
            state: SessionState::Idle,
            frames: Vec::new(),
            path: Vec::new(),
            next_id: 1,
            time: 0,
            control: None,
            pending: VecDeque::new(),
        };
        s.sink.emit(EngineMessage::Variables(
            s.named.iter().map(|(_, n)| n.clone()).collect(),
        ));
        for (i, b) in model.buttons.iter().enumerate() {
            s.sink.emit(EngineMessage::Button {
                id: i as WireId + 1,
                goal: b.text(),
            });
        }
        s.take_snapshot();
        Ok(s)
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    /// Button goals; button `i` has wire id `i + 1`.
    pub fn buttons(&self) -> &[Goal] {
        &self.buttons
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn snapshot_mode(&self) -> SnapshotMode {
        self.options.snapshot_mode
    }

    pub fn set_snapshot_mode(&mut self, mode: SnapshotMode) {
        self.options.snapshot_mode = mode;
    }

    /// Registered variables with their external names.
    pub fn variables(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.named.iter().map(|(v, n)| (*v, n.as_str()))
    }

    /// Domains of the registered variables, in registration order.
    pub fn domains(&self) -> Vec<Domain> {
        self.named
            .iter()
            .map(|(v, _)| self.store.domain(*v).clone())
            .collect()
    }

    /// Current domain of the variable called `name` in goals.
    pub fn domain_of(&self, name: &str) -> Option<&Domain> {
        self.store.lookup(name).map(|v| self.store.domain(v))
    }

    /// Attaches the channel polled during searches.
    pub fn set_control(&mut self, control: Box<dyn ControlChannel>) {
        self.control = Some(control);
    }

    /// Commands that arrived during a search and still wait to be run.
    pub fn take_pending(&mut self) -> Vec<ControlMessage> {
        self.pending.drain(..).collect()
    }

    /// Parses and executes `text`.
    pub fn execute_text(&mut self, text: &str) -> Result<Outcome, SessionError> {
        self.require("execute", &[SessionState::Idle, SessionState::AtSuccess])?;
        let goal = parse_goal(text)?;
        self.execute(&goal)
    }

    pub fn execute(&mut self, goal: &Goal) -> Result<Outcome, SessionError> {
        self.require("execute", &[SessionState::Idle, SessionState::AtSuccess])?;
        let program = compile(goal, &self.store)?;
        let text = goal.to_string();
        let mark = self.store.mark();
        let path_len = self.path.len();
        let call = self.emit_node(text.clone());
        let mut frame = Frame {
            goal: text,
            program: Arc::new(program),
            mark,
            call,
            path_len,
            cps: Vec::new(),
            scope: None,
            snapshots: Vec::new(),
            restored: false,
        };
        self.state = SessionState::Running;
        let end = self.run(&mut frame, Flow::Forward(0));
        self.finish(frame, end)
    }

    /// Resumes the newest choice point of the top frame.
    pub fn backtrack(&mut self) -> Result<Outcome, SessionError> {
        self.require(
            "backtrack",
            &[SessionState::AtSuccess, SessionState::Exhausted],
        )?;
        let mut frame = self.frames.pop().expect("a paused session has a frame");
        self.invalidate(&mut frame);
        self.undo_path_to(self.path.len() - 1);
        self.state = SessionState::Running;
        let end = self.run(&mut frame, Flow::Backtrack);
        self.finish(frame, end)
    }

    /// Pops the top frame, restoring the state before its goal ran.
    pub fn backtrack_interaction(&mut self) -> Result<Outcome, SessionError> {
        if self.frames.is_empty() || self.state == SessionState::Running {
            return Err(SessionError::Rejected {
                command: "backtrackInteraction",
                state: self.state,
            });
        }
        let frame = self.frames.pop().expect("checked");
        self.pop_frame(frame)?;
        Ok(Outcome::Undone)
    }

    /// Drops every frame and returns to the declared domains.
    pub fn clear(&mut self) -> Outcome {
        self.frames.clear();
        self.path.clear();
        self.store.undo_to(self.base).expect("base mark stays live");
        self.base = self.store.mark();
        self.state = SessionState::Idle;
        self.sink.emit(EngineMessage::Clear);
        self.take_snapshot();
        Outcome::Cleared
    }

    /// Runs one command. Refused commands are reported to the sink as an
    /// `<error>` frame as well as returned.
    pub fn handle(&mut self, cmd: ControlMessage) -> Result<Outcome, SessionError> {
        let r = match cmd {
            ControlMessage::ShowSize => self.mode(SnapshotMode::SizeOnly),
            ControlMessage::ShowInterval => self.mode(SnapshotMode::Intervals),
            ControlMessage::ShowValues => self.mode(SnapshotMode::FullValues),
            ControlMessage::Execute(text) => self.execute_text(&text),
            ControlMessage::Backtrack => self.backtrack(),
            ControlMessage::BacktrackInteraction => self.backtrack_interaction(),
            ControlMessage::Clear => Ok(self.clear()),
        };
        if let Err(e) = &r {
            self.sink.emit(EngineMessage::Error {
                message: e.to_string(),
            });
        }
        r
    }

    /// Serves commands from the control channel until it closes, then
    /// clears. The sink is flushed whenever the session waits.
    pub fn serve_commands(&mut self) {
        loop {
            self.sink.flush();
            let cmd = match self.pending.pop_front() {
                Some(c) => c,
                None => match self.control.as_mut().and_then(|c| c.wait()) {
                    Some(c) => c,
                    None => break,
                },
            };
            let _ = self.handle(cmd);
        }
        self.clear();
        self.sink.flush();
    }

    fn mode(&mut self, mode: SnapshotMode) -> Result<Outcome, SessionError> {
        self.options.snapshot_mode = mode;
        Ok(Outcome::ModeChanged)
    }

    fn require(&self, command: &'static str, allowed: &[SessionState]) -> Result<(), SessionError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(SessionError::Rejected {
                command,
                state: self.state,
            })
        }
    }

    fn tip(&self) -> WireId {
        self.path.last().map_or(0, |(id, _)| *id)
    }

    fn emit_node(&mut self, goal: String) -> WireId {
        let id = self.next_id;
        self.next_id += 1;
        let parent = self.tip();
        self.path.push((id, true));
        self.sink.emit(EngineMessage::Node { id, parent, goal });
        id
    }

    fn emit_child(&mut self, label: String) -> WireId {
        let id = self.next_id;
        self.next_id += 1;
        let parent = self.tip();
        self.path.push((id, false));
        self.sink.emit(EngineMessage::Child { id, parent, label });
        id
    }

    fn undo_path_to(&mut self, len: usize) {
        while self.path.len() > len {
            let (id, is_call) = self.path.pop().expect("length checked");
            self.sink.emit(if is_call {
                EngineMessage::UndoNode { id }
            } else {
                EngineMessage::UndoChild { id }
            });
        }
    }

    /// `S=9,E=4..7,...` over the registered variables.
    fn bindings(&self) -> String {
        let mut out = String::new();
        for (i, (v, name)) in self.named.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let d = self.store.domain(*v);
            match (d.min(), d.max()) {
                (Some(lo), Some(hi)) if lo == hi => write!(out, "{name}={lo}"),
                (Some(lo), Some(hi)) => write!(out, "{name}={lo}..{hi}"),
                _ => write!(out, "{name}={{}}"),
            }
            .expect("writing to a String");
        }
        out
    }

    fn external_name(&self, var: VarId) -> &str {
        self.named
            .iter()
            .find(|(v, _)| *v == var)
            .map_or("_", |(_, n)| n.as_str())
    }

    fn take_snapshot(&mut self) -> (u64, SnapshotMode) {
        let time = self.time;
        self.time += 1;
        let mode = self.options.snapshot_mode;
        let doms = self
            .named
            .iter()
            .map(|(v, n)| (n.clone(), self.store.domain(*v)));
        let msg = match mode {
            SnapshotMode::SizeOnly => EngineMessage::DomainSizes {
                time,
                sizes: doms.map(|(n, d)| (n, d.size())).collect(),
            },
            SnapshotMode::Intervals => EngineMessage::DomainIntervals {
                time,
                intervals: doms
                    .map(|(n, d)| (n, d.min().unwrap_or(0), d.max().unwrap_or(-1)))
                    .collect(),
            },
            SnapshotMode::FullValues => EngineMessage::DomainValues {
                time,
                values: doms.map(|(n, d)| (n, d.values().collect())).collect(),
            },
        };
        self.sink.emit(msg);
        (time, mode)
    }

    /// A snapshot owned by the top frame, if any.
    fn record_snapshot(&mut self) {
        let rec = self.take_snapshot();
        if let Some(f) = self.frames.last_mut() {
            f.snapshots.push(rec);
        }
    }

    fn invalidate(&mut self, frame: &mut Frame) {
        for (time, mode) in frame.snapshots.drain(..) {
            self.sink.emit(match mode {
                SnapshotMode::SizeOnly => EngineMessage::UndoDomainSizes { time },
                SnapshotMode::Intervals => EngineMessage::UndoDomainIntervals { time },
                SnapshotMode::FullValues => EngineMessage::UndoDomainValues { time },
            });
        }
    }

    fn pop_frame(&mut self, mut frame: Frame) -> Result<(), SessionError> {
        self.invalidate(&mut frame);
        self.undo_path_to(frame.path_len);
        self.store.undo_to(frame.mark)?;
        self.sink.emit(EngineMessage::UndoGoal {
            id: frame.call,
            goal: frame.goal,
        });
        self.state = if self.frames.is_empty() {
            SessionState::Idle
        } else {
            SessionState::AtSuccess
        };
        self.record_snapshot();
        Ok(())
    }

    fn finish(
        &mut self,
        frame: Frame,
        end: Result<RunEnd, SessionError>,
    ) -> Result<Outcome, SessionError> {
        match end {
            Ok(RunEnd::Success) => {
                let label = self.bindings();
                self.emit_child(label);
                if frame.program.search && !frame.restored {
                    self.sink.emit(EngineMessage::Success);
                }
                self.frames.push(frame);
                self.state = SessionState::AtSuccess;
                self.record_snapshot();
                Ok(Outcome::Success)
            }
            Ok(RunEnd::Failure) => {
                self.pop_frame(frame)?;
                Ok(Outcome::Failure)
            }
            Ok(RunEnd::Aborted) => Ok(self.clear()),
            Err(e) => {
                self.pop_frame(frame)?;
                Err(e)
            }
        }
    }

    /// Drains the control channel; true when a clear arrived.
    fn poll_abort(&mut self) -> bool {
        let Some(ctl) = self.control.as_mut() else {
            return false;
        };
        while let Some(cmd) = ctl.poll() {
            match cmd {
                ControlMessage::Clear => return true,
                ControlMessage::ShowSize => self.options.snapshot_mode = SnapshotMode::SizeOnly,
                ControlMessage::ShowInterval => {
                    self.options.snapshot_mode = SnapshotMode::Intervals
                }
                ControlMessage::ShowValues => self.options.snapshot_mode = SnapshotMode::FullValues,
                other => self.pending.push_back(other),
            }
        }
        false
    }

    fn run(&mut self, f: &mut Frame, mut flow: Flow) -> Result<RunEnd, SessionError> {
        let program = Arc::clone(&f.program);
        loop {
            flow = match flow {
                Flow::Forward(pc) if pc == program.steps.len() => return Ok(RunEnd::Success),
                Flow::Forward(pc) => match &program.steps[pc] {
                    Step::Post(c) => {
                        if c.post(&mut self.store)? && self.store.propagate().is_consistent() {
                            Flow::Forward(pc + 1)
                        } else {
                            Flow::Backtrack
                        }
                    }
                    Step::Label(var) => {
                        let name = self.store.name(*var).unwrap_or("_").to_string();
                        self.emit_node(format!("fd_labeling({name})"));
                        f.cps.push(ChoicePoint {
                            step: pc,
                            var: *var,
                            values: self.store.domain(*var).values().collect(),
                            next: 0,
                            trial: None,
                            path_len: self.path.len(),
                        });
                        self.try_values(f)?
                    }
                    Step::MinStart { cost, end } => {
                        f.scope = Some(Scope {
                            cost: *cost,
                            end: *end,
                            mark: self.store.mark(),
                            cps_len: f.cps.len(),
                            path_len: self.path.len(),
                            best: None,
                            done: false,
                        });
                        Flow::Forward(pc + 1)
                    }
                    Step::MinEnd => {
                        let scope = f.scope.as_mut().expect("MinEnd closes a scope");
                        let Some(c) = self.store.domain(scope.cost).value() else {
                            return Err(SessionError::UnboundedSearch(format!(
                                "cost {} is not fixed at a solution",
                                self.external_name(scope.cost)
                            )));
                        };
                        scope.best = Some((c, self.store.snapshot()));
                        self.sink.emit(EngineMessage::Success);
                        let rec = self.take_snapshot();
                        f.snapshots.push(rec);
                        self.invalidate(f);
                        Flow::Backtrack
                    }
                },
                Flow::Backtrack => self.backtrack_step(f)?,
                Flow::Fail => return Ok(RunEnd::Failure),
                Flow::Abort => return Ok(RunEnd::Aborted),
            };
        }
    }

    fn backtrack_step(&mut self, f: &mut Frame) -> Result<Flow, SessionError> {
        if let Some(scope) = &mut f.scope {
            if scope.done {
                f.scope = None;
                f.restored = false;
            } else if f.cps.len() == scope.cps_len {
                // The inner search is exhausted: reinstate the best solution.
                let (mark, path_len, end) = (scope.mark, scope.path_len, scope.end);
                let best = scope.best.take();
                self.undo_path_to(path_len);
                self.store.undo_to(mark)?;
                let Some((_, doms)) = best else {
                    f.scope = None;
                    return Ok(Flow::Backtrack);
                };
                let vars: Vec<VarId> = self.store.vars().collect();
                let mut ok = true;
                for (v, d) in vars.into_iter().zip(doms) {
                    ok = ok && self.store.restrict(v, d).is_ok();
                }
                if !(ok && self.store.propagate().is_consistent()) {
                    f.scope = None;
                    return Ok(Flow::Backtrack);
                }
                if let Some(scope) = &mut f.scope {
                    scope.done = true;
                }
                f.restored = true;
                return Ok(Flow::Forward(end + 1));
            }
        }
        let Some(cp) = f.cps.last_mut() else {
            return Ok(Flow::Fail);
        };
        let trial = cp
            .trial
            .take()
            .expect("a resumed choice point has a live trial");
        let path_len = cp.path_len;
        self.undo_path_to(path_len);
        self.store.undo_to(trial)?;
        self.try_values(f)
    }

    /// Tries the remaining values of the newest choice point.
    fn try_values(&mut self, f: &mut Frame) -> Result<Flow, SessionError> {
        let idx = f.cps.len() - 1;
        let bound = f
            .scope
            .as_ref()
            .filter(|s| !s.done)
            .and_then(|s| s.best.as_ref().map(|(c, _)| (s.cost, *c - 1)));
        loop {
            if self.poll_abort() {
                return Ok(Flow::Abort);
            }
            let cp = &mut f.cps[idx];
            let Some(&v) = cp.values.get(cp.next) else {
                break;
            };
            cp.next += 1;
            let (var, step) = (cp.var, cp.step);
            let m = self.store.mark();
            let ok = self.store.assign(var, v).is_ok()
                && bound.is_none_or(|(cost, max)| self.store.narrow(cost, i64::MIN, max).is_ok())
                && self.store.propagate().is_consistent();
            if ok {
                f.cps[idx].trial = Some(m);
                let label = self.bindings();
                self.emit_child(label);
                return Ok(Flow::Forward(step + 1));
            }
            if self.options.trace_failures {
                let label = format!("fail({}={v})", self.external_name(var));
                self.emit_child(label);
                self.undo_path_to(self.path.len() - 1);
            }
            self.store.undo_to(m)?;
        }
        let path_len = f.cps[idx].path_len;
        self.undo_path_to(path_len - 1);
        f.cps.pop();
        Ok(Flow::Backtrack)
    }
}
