//! Knowledge transfer between agents through behavior trees.
//!
//! Each agent runs a behavior tree whose knowledge sub-trees — sequences of
//! condition leaves guarding an action sub-tree — can be queried by other
//! agents, shipped over a range-limited broadcast medium in the stringBT
//! text grammar, and merged into the receiver's control tree while it keeps
//! running. The crate bundles:
//!
//! - [`bt`]: the tree types and tick interpreter, including the pulse and
//!   run timer decorators the transfer protocol is built on;
//! - [`stringbt`]: the wire grammar (parse / serialize) plus knowledge
//!   search and merge over control trees;
//! - [`knowledge`]: the teach / learn query-response protocol and agent
//!   state;
//! - [`comms`]: the broadcast medium with delivery at tick boundaries and
//!   query-loss accounting;
//! - [`sim`]: a deterministic multi-robot search-and-rescue world that
//!   exercises all of the above;
//! - [`metrics`]: group knowledge metrics (complexity, disparity,
//!   heterogeneity, knowledge score);
//! - [`config`] and [`experiment`]: flat-file configuration and the
//!   experiment runner with CSV reports.

pub mod bt;
pub mod comms;
pub mod config;
pub mod experiment;
pub mod geom;
pub mod knowledge;
pub mod metrics;
pub mod sim;
pub mod stringbt;

pub use bt::{tick, ActionRegistry, ActionSink, Node, NodeStatus, StateManager, TickError};
pub use comms::{AgentId, CommStats, Medium, Message, MessageKind};
pub use knowledge::{
    build_control, ConditionSequence, KnowledgeBase, KtAgent, LearnOutcome, WAIT_FLAG,
};
pub use stringbt::{find_knowledge, merge_knowledge, parse, serialize, ParseError};
