//! Behavior-tree AST and tick interpreter.
//!
//! Composites are memoryless: every tick re-evaluates children from the
//! leftmost, so higher-priority sub-trees preempt lower ones the moment their
//! conditions flip. Time is the integer tick counter carried by the
//! [`StateManager`]; the two timer decorators ([`Node::PulseTimer`] and
//! [`Node::RunTimer`]) measure elapsed ticks against it rather than wall
//! clock, which keeps runs reproducible.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::comms::Message;
use crate::geom::Vec2;

/// Outcome of ticking a node. Exactly one per node per tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Success,
    Failure,
    Running,
}

/// Book-keeping for the timer decorators and `Wait` leaves.
///
/// `start_tick` is meaningful only while `started` is true.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimerState {
    pub started: bool,
    pub start_tick: u64,
}

impl TimerState {
    fn arm(&mut self, now: u64) {
        if !self.started {
            self.started = true;
            self.start_tick = now;
        }
    }

    fn clear(&mut self) {
        self.started = false;
        self.start_tick = 0;
    }
}

/// Behavior-tree node. Child order is significant: left-to-right priority.
#[derive(Debug, Clone)]
pub enum Node {
    /// Ticks children left to right; fails at the first failing child,
    /// succeeds only if all succeed.
    Sequence(Vec<Node>),
    /// Ticks children left to right; succeeds at the first succeeding child,
    /// fails only if all fail.
    Selector(Vec<Node>),
    /// Ticks every child every tick; Running while any child runs, then
    /// Success iff all succeeded.
    Parallel(Vec<Node>),
    /// Swaps Success and Failure; Running passes through.
    Inverter(Box<Node>),
    /// Pulse timer: fails while fewer than `limit_ticks` ticks have elapsed
    /// since it was armed, then runs its child exactly once, returns Success
    /// and re-arms.
    PulseTimer {
        child: Box<Node>,
        limit_ticks: u64,
        state: TimerState,
    },
    /// Run timer: ticks its child and returns Success while the elapsed tick
    /// count is at most `limit_ticks`, then returns Failure once and re-arms.
    RunTimer {
        child: Box<Node>,
        limit_ticks: u64,
        state: TimerState,
    },
    /// Succeeds iff the named flag equals `!negated` (absent flags read as
    /// false).
    Condition { tag: String, negated: bool },
    /// Runs the registered handler and returns its status verbatim.
    Action { tag: String },
    /// Running until `duration_ticks` have elapsed since its first tick, then
    /// Success once, then the timer resets.
    Wait {
        duration_ticks: u64,
        state: TimerState,
    },
}

impl Node {
    pub fn condition(tag: &str) -> Node {
        Node::Condition {
            tag: tag.to_string(),
            negated: false,
        }
    }

    pub fn condition_negated(tag: &str) -> Node {
        Node::Condition {
            tag: tag.to_string(),
            negated: true,
        }
    }

    pub fn action(tag: &str) -> Node {
        Node::Action {
            tag: tag.to_string(),
        }
    }

    pub fn wait(duration_ticks: u64) -> Node {
        Node::Wait {
            duration_ticks,
            state: TimerState::default(),
        }
    }

    pub fn pulse_timer(child: Node, limit_ticks: u64) -> Node {
        Node::PulseTimer {
            child: Box::new(child),
            limit_ticks,
            state: TimerState::default(),
        }
    }

    pub fn run_timer(child: Node, limit_ticks: u64) -> Node {
        Node::RunTimer {
            child: Box::new(child),
            limit_ticks,
            state: TimerState::default(),
        }
    }

    /// Direct children, in priority order.
    pub fn children(&self) -> &[Node] {
        match self {
            Node::Sequence(c) | Node::Selector(c) | Node::Parallel(c) => c,
            Node::Inverter(c) => std::slice::from_ref(c),
            Node::PulseTimer { child, .. } | Node::RunTimer { child, .. } => {
                std::slice::from_ref(child)
            }
            _ => &[],
        }
    }

    /// Clears all timer state recursively; the structure is unchanged.
    pub fn reset(&mut self) {
        match self {
            Node::Sequence(c) | Node::Selector(c) | Node::Parallel(c) => {
                c.iter_mut().for_each(Node::reset)
            }
            Node::Inverter(c) => c.reset(),
            Node::PulseTimer { child, state, .. } | Node::RunTimer { child, state, .. } => {
                state.clear();
                child.reset();
            }
            Node::Wait { state, .. } => state.clear(),
            Node::Condition { .. } | Node::Action { .. } => {}
        }
    }
}

/// Structural equality: timer state is runtime scratch and is ignored.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Node::Sequence(a), Node::Sequence(b))
            | (Node::Selector(a), Node::Selector(b))
            | (Node::Parallel(a), Node::Parallel(b)) => a == b,
            (Node::Inverter(a), Node::Inverter(b)) => a == b,
            (
                Node::PulseTimer {
                    child: a,
                    limit_ticks: la,
                    ..
                },
                Node::PulseTimer {
                    child: b,
                    limit_ticks: lb,
                    ..
                },
            )
            | (
                Node::RunTimer {
                    child: a,
                    limit_ticks: la,
                    ..
                },
                Node::RunTimer {
                    child: b,
                    limit_ticks: lb,
                    ..
                },
            ) => la == lb && a == b,
            (
                Node::Condition {
                    tag: ta,
                    negated: na,
                },
                Node::Condition {
                    tag: tb,
                    negated: nb,
                },
            ) => ta == tb && na == nb,
            (Node::Action { tag: a }, Node::Action { tag: b }) => a == b,
            (
                Node::Wait {
                    duration_ticks: a, ..
                },
                Node::Wait {
                    duration_ticks: b, ..
                },
            ) => a == b,
            _ => false,
        }
    }
}

impl Eq for Node {}

/// Per-agent blackboard: named boolean flags, named vectors, message
/// buffers, and the tick clock the timers run against.
#[derive(Debug, Clone, Default)]
pub struct StateManager {
    pub flags: HashMap<String, bool>,
    pub vectors: HashMap<String, Vec2>,
    /// Queries received from other agents, FIFO.
    pub query_inbox: VecDeque<Message>,
    /// Responses received from other agents, FIFO.
    pub response_inbox: VecDeque<Message>,
    /// Messages queued for broadcast; drained by the comms medium.
    pub outbox: Vec<Message>,
    pub tick_now: u64,
    pub cooldown_flag: bool,
    pub cooldown_set_tick: u64,
}

impl StateManager {
    pub fn new() -> Self {
        Self::default()
    }

    /// Absent flags read as false, never as an error.
    pub fn flag(&self, tag: &str) -> bool {
        self.flags.get(tag).copied().unwrap_or(false)
    }

    pub fn set_flag(&mut self, tag: &str, value: bool) {
        self.flags.insert(tag.to_string(), value);
    }

    pub fn vector(&self, tag: &str) -> Option<Vec2> {
        self.vectors.get(tag).copied()
    }

    pub fn set_vector(&mut self, tag: &str, v: Vec2) {
        self.vectors.insert(tag.to_string(), v);
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TickError {
    #[error("no action handler registered for tag `{0}`")]
    UnregisteredAction(String),
}

/// Executes action leaves. `run` returns `None` for an unknown tag, which
/// the interpreter reports as [`TickError::UnregisteredAction`] rather than
/// a silent Failure.
pub trait ActionSink {
    fn run(&mut self, tag: &str, sm: &mut StateManager) -> Option<NodeStatus>;
}

type Handler = Box<dyn FnMut(&mut StateManager) -> NodeStatus>;

/// Map-backed [`ActionSink`] binding action tags to handlers.
#[derive(Default)]
pub struct ActionRegistry {
    handlers: HashMap<String, Handler>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        tag: &str,
        handler: impl FnMut(&mut StateManager) -> NodeStatus + 'static,
    ) {
        self.handlers.insert(tag.to_string(), Box::new(handler));
    }
}

impl ActionSink for ActionRegistry {
    fn run(&mut self, tag: &str, sm: &mut StateManager) -> Option<NodeStatus> {
        self.handlers.get_mut(tag).map(|h| h(sm))
    }
}

/// Ticks `node` once against the blackboard and action sink.
pub fn tick(
    node: &mut Node,
    sm: &mut StateManager,
    actions: &mut dyn ActionSink,
) -> Result<NodeStatus, TickError> {
    use NodeStatus::*;
    match node {
        Node::Sequence(children) => {
            for child in children.iter_mut() {
                match tick(child, sm, actions)? {
                    Success => continue,
                    other => return Ok(other),
                }
            }
            Ok(Success)
        }
        Node::Selector(children) => {
            for child in children.iter_mut() {
                match tick(child, sm, actions)? {
                    Failure => continue,
                    other => return Ok(other),
                }
            }
            Ok(Failure)
        }
        Node::Parallel(children) => {
            let mut any_running = false;
            let mut all_success = true;
            for child in children.iter_mut() {
                match tick(child, sm, actions)? {
                    Running => any_running = true,
                    Failure => all_success = false,
                    Success => {}
                }
            }
            Ok(if any_running {
                Running
            } else if all_success {
                Success
            } else {
                Failure
            })
        }
        Node::Inverter(child) => Ok(match tick(child, sm, actions)? {
            Success => Failure,
            Failure => Success,
            Running => Running,
        }),
        Node::PulseTimer {
            child,
            limit_ticks,
            state,
        } => {
            state.arm(sm.tick_now);
            if sm.tick_now - state.start_tick >= *limit_ticks {
                // Fire once, re-arm, report Success regardless of the
                // child's own status.
                tick(child, sm, actions)?;
                state.clear();
                Ok(Success)
            } else {
                Ok(Failure)
            }
        }
        Node::RunTimer {
            child,
            limit_ticks,
            state,
        } => {
            state.arm(sm.tick_now);
            if sm.tick_now - state.start_tick <= *limit_ticks {
                tick(child, sm, actions)?;
                Ok(Success)
            } else {
                state.clear();
                Ok(Failure)
            }
        }
        Node::Condition { tag, negated } => Ok(if sm.flag(tag) != *negated {
            Success
        } else {
            Failure
        }),
        Node::Action { tag } => actions
            .run(tag, sm)
            .ok_or_else(|| TickError::UnregisteredAction(tag.clone())),
        Node::Wait {
            duration_ticks,
            state,
        } => {
            state.arm(sm.tick_now);
            if sm.tick_now - state.start_tick >= *duration_ticks {
                state.clear();
                Ok(Success)
            } else {
                Ok(Running)
            }
        }
    }
}
