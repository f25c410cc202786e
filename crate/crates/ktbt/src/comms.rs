//! Range-limited broadcast medium with tick-boundary delivery.
//!
//! Messages sent at tick `t` are queued with a snapshot of the sender's
//! position and delivered once, after all agents have ticked, to every other
//! agent within `d_coms` of that snapshot; they become readable at `t + 1`.
//! The one-tick latency makes agent tick order irrelevant to who hears what.

use crate::bt::StateManager;
use crate::geom::Vec2;
use crate::knowledge::{ConditionSequence, KnowledgeBase, KtAgent};
use crate::stringbt;

/// Identity of an agent; also its index in the world's robot list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageKind {
    /// A broadcast question: the condition sequence the sender cannot handle.
    Query(ConditionSequence),
    /// An answer: a knowledge sub-tree in canonical stringBT form.
    Response(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub sender: AgentId,
    pub sent_tick: u64,
}

impl Message {
    pub fn query(sender: AgentId, sent_tick: u64, seq: ConditionSequence) -> Message {
        Message {
            kind: MessageKind::Query(seq),
            sender,
            sent_tick,
        }
    }

    /// Builds a response by serializing `tree`, so the payload parses by
    /// construction.
    pub fn response(sender: AgentId, sent_tick: u64, tree: &crate::bt::Node) -> Message {
        Message {
            kind: MessageKind::Response(stringbt::serialize(tree)),
            sender,
            sent_tick,
        }
    }

    pub fn is_query(&self) -> bool {
        matches!(self.kind, MessageKind::Query(_))
    }
}

/// Monotone counters kept by the medium.
///
/// `queries_lost` counts queries that reached no agent holding a knowledge
/// base entry matching the queried sequence ("effective communication"
/// losses); `queries_unheard` is the plain zero-recipient count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommStats {
    pub queries_sent: u64,
    pub responses_sent: u64,
    pub queries_lost: u64,
    pub queries_unheard: u64,
}

struct Outgoing {
    msg: Message,
    sender_pos: Vec2,
}

/// The broadcast medium. `pending` is drained exactly once per tick by
/// [`Medium::deliver`].
pub struct Medium {
    d_coms: f64,
    pending: Vec<Outgoing>,
    pub stats: CommStats,
}

/// One agent's view handed to [`Medium::deliver`]: inboxes to fill plus the
/// knowledge base consulted for loss accounting.
pub struct Endpoint<'a> {
    pub id: AgentId,
    pub position: Vec2,
    pub sm: &'a mut StateManager,
    pub kb: &'a KnowledgeBase,
}

impl<'a> Endpoint<'a> {
    pub fn of_agent(agent: &'a mut KtAgent, position: Vec2) -> Endpoint<'a> {
        Endpoint {
            id: agent.id,
            position,
            sm: &mut agent.sm,
            kb: &agent.kb,
        }
    }
}

/// Per-message delivery outcome for one tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDelivery {
    pub sender: AgentId,
    pub is_query: bool,
    pub recipients: usize,
    /// Recipients whose knowledge base could answer (queries only).
    pub capable_recipients: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryReport {
    pub messages: Vec<MessageDelivery>,
}

impl Medium {
    pub fn new(d_coms: f64) -> Medium {
        Medium {
            d_coms,
            pending: Vec::new(),
            stats: CommStats::default(),
        }
    }

    pub fn d_coms(&self) -> f64 {
        self.d_coms
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Queues `msg` with the sender's position snapshot; later movement does
    /// not affect who hears it.
    pub fn broadcast(&mut self, sender_pos: Vec2, msg: Message) {
        match &msg.kind {
            MessageKind::Query(_) => self.stats.queries_sent += 1,
            MessageKind::Response(payload) => {
                debug_assert!(
                    stringbt::parse(payload).is_ok(),
                    "response payloads must parse"
                );
                self.stats.responses_sent += 1;
            }
        }
        self.pending.push(Outgoing { msg, sender_pos });
    }

    /// Delivers every pending message to the inboxes of all endpoints within
    /// range of the send-time snapshot, excluding the sender itself.
    pub fn deliver(&mut self, endpoints: &mut [Endpoint]) -> DeliveryReport {
        let mut report = DeliveryReport::default();
        for out in self.pending.drain(..) {
            let mut recipients = 0;
            let mut capable = 0;
            for ep in endpoints.iter_mut() {
                if ep.id == out.msg.sender {
                    continue;
                }
                if ep.position.distance(out.sender_pos) > self.d_coms {
                    continue;
                }
                recipients += 1;
                match &out.msg.kind {
                    MessageKind::Query(seq) => {
                        if ep.kb.knows(seq) {
                            capable += 1;
                        }
                        ep.sm.query_inbox.push_back(out.msg.clone());
                    }
                    MessageKind::Response(_) => {
                        ep.sm.response_inbox.push_back(out.msg.clone());
                    }
                }
            }
            if out.msg.is_query() {
                if recipients == 0 {
                    self.stats.queries_unheard += 1;
                }
                if capable == 0 {
                    self.stats.queries_lost += 1;
                }
            }
            report.messages.push(MessageDelivery {
                sender: out.msg.sender,
                is_query: out.msg.is_query(),
                recipients,
                capable_recipients: capable,
            });
        }
        report
    }
}
