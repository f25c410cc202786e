//! The knowledge-transfer agent: a control tree shaped
//! `Selector[critical.., common.., prior.., new.., fallback]`, a knowledge
//! base of (condition sequence, action sub-tree) pairs, and the teach/learn
//! query-response protocol.
//!
//! Teaching and learning share one cooldown flag: a robot that just answered
//! a query, or whose own query timed out, stays quiet for `t1_limit` ticks.
//! That keeps groups from burning every tick on query storms and stops a
//! learner from re-querying the same target it is still standing next to.

use thiserror::Error;

use crate::bt::{ActionSink, Node, NodeStatus, StateManager, TickError};
use crate::comms::{AgentId, Message, MessageKind};
use crate::stringbt;

/// Flag a waiting learner raises so its control tree stands still
/// (`Sequence[<c>(_waitF), <a>(StopWalk)]`) until the query resolves.
pub const WAIT_FLAG: &str = "_waitF";

/// One condition in a sequence: a flag tag plus negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionTerm {
    pub tag: String,
    pub negated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("condition sequence must be nonempty")]
    Empty,
    #[error("duplicate condition `{0}` in sequence")]
    Duplicate(String),
}

/// Ordered, duplicate-free list of conditions identifying one piece of
/// knowledge. Order is significant: `[a, b]` never matches `[b, a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionSequence {
    terms: Vec<ConditionTerm>,
}

impl ConditionSequence {
    pub fn new(
        terms: impl IntoIterator<Item = (String, bool)>,
    ) -> Result<ConditionSequence, SequenceError> {
        let terms: Vec<ConditionTerm> = terms
            .into_iter()
            .map(|(tag, negated)| ConditionTerm { tag, negated })
            .collect();
        if terms.is_empty() {
            return Err(SequenceError::Empty);
        }
        for (i, term) in terms.iter().enumerate() {
            if terms[..i].contains(term) {
                return Err(SequenceError::Duplicate(term.tag.clone()));
            }
        }
        Ok(ConditionSequence { terms })
    }

    /// Single positive condition, the common case for target queries.
    pub fn single(tag: &str) -> ConditionSequence {
        ConditionSequence {
            terms: vec![ConditionTerm {
                tag: tag.to_string(),
                negated: false,
            }],
        }
    }

    pub fn terms(&self) -> &[ConditionTerm] {
        &self.terms
    }

    /// Wire rendering: the conditions as concatenated `<c>` tokens in
    /// canonical form, e.g. `<c>(a)<c>(!b)`.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        for term in &self.terms {
            if term.negated {
                out.push_str(&format!("<c>(!{})", term.tag));
            } else {
                out.push_str(&format!("<c>({})", term.tag));
            }
        }
        out
    }
}

/// Parses the canonical `<c>(tag)<c>(!tag)...` rendering back into a
/// sequence. Whitespace between tokens is insignificant.
pub fn parse_condition_sequence(
    text: &str,
) -> Result<ConditionSequence, stringbt::ParseError> {
    use stringbt::{ParseError, ParseErrorKind};
    // Reuse the document parser by wrapping the tokens in a sequence whose
    // trailing action is a placeholder, then strip it back off.
    let doc = format!("<Root><sq>{text}<a>(__end)<e>");
    let prefix = "<Root><sq>".len();
    let parsed = stringbt::parse(&doc).map_err(|e| ParseError {
        kind: e.kind,
        offset: e.offset.saturating_sub(prefix),
    })?;
    let Node::Sequence(items) = parsed else {
        unreachable!("wrapper is a sequence");
    };
    let mut terms = Vec::new();
    for item in &items[..items.len() - 1] {
        match item {
            Node::Condition { tag, negated } => terms.push((tag.clone(), *negated)),
            _ => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar,
                    offset: 0,
                })
            }
        }
    }
    ConditionSequence::new(terms).map_err(|_| ParseError {
        kind: ParseErrorKind::EmptyDocument,
        offset: 0,
    })
}

/// One transferable unit: the condition sequence and its action sub-tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeEntry {
    pub seq: ConditionSequence,
    pub action: Node,
}

/// Paired ordered lists of known condition sequences and action sub-trees.
/// Entry positions are stable: lookups by index stay valid as entries are
/// appended, and sequences are pairwise distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: Vec<KnowledgeEntry>,
}

impl KnowledgeBase {
    pub fn new() -> KnowledgeBase {
        KnowledgeBase::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    pub fn knows(&self, seq: &ConditionSequence) -> bool {
        self.entries.iter().any(|e| &e.seq == seq)
    }

    pub fn lookup(&self, seq: &ConditionSequence) -> Option<&Node> {
        self.entries
            .iter()
            .find(|e| &e.seq == seq)
            .map(|e| &e.action)
    }

    /// Appends an entry; a sequence already present is left untouched.
    /// Returns whether the entry was added.
    pub fn add(&mut self, seq: ConditionSequence, action: Node) -> bool {
        if self.knows(&seq) {
            return false;
        }
        self.entries.push(KnowledgeEntry { seq, action });
        true
    }
}

/// Builds the control selector with children in priority order: critical
/// sub-trees, common knowledge, prior knowledge, then the fallback. Newly
/// learned knowledge is merged immediately before the fallback child.
pub fn build_control(
    critical: Vec<Node>,
    common: Vec<Node>,
    prior: Vec<Node>,
    fallback: Node,
) -> Node {
    let mut children = critical;
    children.extend(common);
    children.extend(prior);
    children.push(fallback);
    Node::Selector(children)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PendingQuery {
    seq: ConditionSequence,
    issued_tick: u64,
}

/// Result of one [`KtAgent::learn_complete`] step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnOutcome {
    /// A response arrived and was merged into the control tree.
    Learned,
    /// The wait exceeded `t2_limit`; the query is abandoned and the cooldown
    /// raised so the same target is not immediately re-queried.
    TimedOut,
    /// A query is outstanding and still within its window.
    StillWaiting,
    /// No query outstanding.
    Idle,
}

/// An agent that can be taught and can teach: control tree, knowledge base,
/// blackboard, and the timers governing the protocol.
#[derive(Debug, Clone)]
pub struct KtAgent {
    pub id: AgentId,
    pub control: Node,
    pub kb: KnowledgeBase,
    pub sm: StateManager,
    pub t1_limit: u64,
    pub t2_limit: u64,
    pending_query: Option<PendingQuery>,
    pub protocol_errors: u64,
}

impl KtAgent {
    pub fn new(id: AgentId, control: Node, kb: KnowledgeBase, t1_limit: u64, t2_limit: u64) -> KtAgent {
        debug_assert_eq!(
            stringbt::parse(&stringbt::serialize(&control)).as_ref(),
            Ok(&control),
            "control tree must round-trip"
        );
        KtAgent {
            id,
            control,
            kb,
            sm: StateManager::new(),
            t1_limit,
            t2_limit,
            pending_query: None,
            protocol_errors: 0,
        }
    }

    pub fn pending_query(&self) -> Option<&ConditionSequence> {
        self.pending_query.as_ref().map(|p| &p.seq)
    }

    /// Advances the agent's clock and clears an expired cooldown.
    pub fn begin_tick(&mut self, now: u64) {
        self.sm.tick_now = now;
        if self.sm.cooldown_flag && now - self.sm.cooldown_set_tick >= self.t1_limit {
            self.sm.cooldown_flag = false;
        }
    }

    /// Ticks the control tree against an action sink.
    pub fn tick_control(&mut self, actions: &mut dyn ActionSink) -> Result<NodeStatus, TickError> {
        crate::bt::tick(&mut self.control, &mut self.sm, actions)
    }

    /// The responder half of the protocol. Pops the oldest query and, if the
    /// sequence is known, answers with the matching sub-tree serialized in
    /// canonical form and raises the cooldown. Unknown queries are discarded
    /// without a response. While the cooldown is set nothing is popped, so
    /// queued queries survive until the agent may speak again.
    pub fn teach(&mut self) -> Option<Message> {
        if self.sm.cooldown_flag {
            return None;
        }
        let msg = self.sm.query_inbox.pop_front()?;
        let MessageKind::Query(s_q) = msg.kind else {
            // A response in the query inbox is a protocol violation.
            self.protocol_errors += 1;
            return None;
        };
        let action = self.kb.lookup(&s_q)?;
        let response = Message::response(self.id, self.sm.tick_now, action);
        self.sm.cooldown_flag = true;
        self.sm.cooldown_set_tick = self.sm.tick_now;
        Some(response)
    }

    /// The querier half, step one: if `s_q` is unknown, no query is pending
    /// and the cooldown is clear, records the pending query, raises
    /// `_waitF`, and returns the broadcast to send.
    pub fn learn_begin(&mut self, s_q: ConditionSequence) -> Option<Message> {
        if self.pending_query.is_some() || self.sm.cooldown_flag || self.kb.knows(&s_q) {
            return None;
        }
        self.pending_query = Some(PendingQuery {
            seq: s_q.clone(),
            issued_tick: self.sm.tick_now,
        });
        self.sm.set_flag(WAIT_FLAG, true);
        Some(Message::query(self.id, self.sm.tick_now, s_q))
    }

    /// The querier half, step two, run every tick. Consumes responses in
    /// arrival order; the first parseable one is merged into the control
    /// tree and recorded in the knowledge base, and any later duplicates are
    /// dropped. An unparseable payload is discarded and the wait continues.
    /// Past `t2_limit` ticks the query is abandoned with a cooldown.
    pub fn learn_complete(&mut self) -> LearnOutcome {
        let Some(pending) = self.pending_query.clone() else {
            // Responses with no outstanding query answer nothing.
            self.sm.response_inbox.clear();
            return LearnOutcome::Idle;
        };
        while let Some(msg) = self.sm.response_inbox.pop_front() {
            let MessageKind::Response(payload) = msg.kind else {
                self.protocol_errors += 1;
                continue;
            };
            match stringbt::parse(&payload) {
                Ok(subtree) => {
                    self.control = stringbt::merge_knowledge(&self.control, &pending.seq, subtree.clone())
                        .expect("control tree keeps its fallback child");
                    self.kb.add(pending.seq.clone(), subtree);
                    debug_assert!(
                        stringbt::find_knowledge(&self.control, &pending.seq).is_some(),
                        "learned knowledge must be reachable in the control tree"
                    );
                    self.pending_query = None;
                    self.sm.response_inbox.clear();
                    self.sm.set_flag(WAIT_FLAG, false);
                    return LearnOutcome::Learned;
                }
                Err(_) => {
                    self.protocol_errors += 1;
                    continue;
                }
            }
        }
        if self.sm.tick_now - pending.issued_tick > self.t2_limit {
            self.pending_query = None;
            self.sm.cooldown_flag = true;
            self.sm.cooldown_set_tick = self.sm.tick_now;
            self.sm.set_flag(WAIT_FLAG, false);
            LearnOutcome::TimedOut
        } else {
            LearnOutcome::StillWaiting
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::Node;

    fn red_seq() -> ConditionSequence {
        ConditionSequence::single("_targetRDetectedF")
    }

    fn agent_with(id: usize, prior: &[(&str, &str)]) -> KtAgent {
        let mut kb = KnowledgeBase::new();
        let mut prior_children = Vec::new();
        for &(flag, action) in prior {
            let seq = ConditionSequence::single(flag);
            kb.add(seq, Node::action(action));
            prior_children.push(Node::Sequence(vec![
                Node::condition(flag),
                Node::action(action),
            ]));
        }
        let control = build_control(
            vec![Node::Sequence(vec![
                Node::condition(WAIT_FLAG),
                Node::action("StopWalk"),
            ])],
            vec![],
            prior_children,
            Node::action("RandomWalk"),
        );
        KtAgent::new(AgentId(id), control, kb, 50, 100)
    }

    #[test]
    fn condition_sequence_rejects_empty_and_duplicates() {
        assert_eq!(
            ConditionSequence::new(std::iter::empty()),
            Err(SequenceError::Empty)
        );
        assert_eq!(
            ConditionSequence::new([("a".to_string(), false), ("a".to_string(), false)]),
            Err(SequenceError::Duplicate("a".into()))
        );
        // Same tag with different negation is two distinct conditions.
        assert!(ConditionSequence::new([("a".to_string(), false), ("a".to_string(), true)]).is_ok());
    }

    #[test]
    fn condition_sequence_canonical_round_trip() {
        let seq =
            ConditionSequence::new([("a".to_string(), false), ("b".to_string(), true)]).unwrap();
        assert_eq!(seq.to_canonical(), "<c>(a)<c>(!b)");
        assert_eq!(parse_condition_sequence("<c>(a)<c>(!b)").unwrap(), seq);
        assert_eq!(parse_condition_sequence(" <c> (a) <c>(!b) ").unwrap(), seq);
        assert!(parse_condition_sequence("").is_err());
        assert!(parse_condition_sequence("<a>(x)").is_err());
    }

    #[test]
    fn build_control_orders_children_and_accepts_merges() {
        let control = build_control(
            vec![Node::action("c1"), Node::action("c2")],
            vec![Node::action("common")],
            vec![Node::action("prior")],
            Node::action("fallback"),
        );
        let Node::Selector(children) = &control else {
            panic!()
        };
        assert_eq!(children.len(), 5);
        assert_eq!(children[4], Node::action("fallback"));

        // Empty prior collapses to [critical.., common.., fallback].
        let control = build_control(vec![Node::action("c1")], vec![], vec![], Node::action("f"));
        assert_eq!(control.children().len(), 2);

        // Build then merge three knowledge items: the count grows by three
        // and the fallback stays last.
        let mut control = build_control(
            vec![Node::action("c1")],
            vec![Node::action("common")],
            vec![Node::action("prior")],
            Node::action("fallback"),
        );
        for tag in ["k1", "k2", "k3"] {
            control = stringbt::merge_knowledge(
                &control,
                &ConditionSequence::single(tag),
                Node::action(tag),
            )
            .unwrap();
        }
        assert_eq!(control.children().len(), 1 + 1 + 1 + 3 + 1);
        assert_eq!(control.children().last().unwrap(), &Node::action("fallback"));
    }

    #[test]
    fn teach_answers_known_query_with_canonical_payload() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        teacher.begin_tick(10);
        teacher
            .sm
            .query_inbox
            .push_back(Message::query(AgentId(1), 9, red_seq()));
        let response = teacher.teach().expect("known query must be answered");
        match &response.kind {
            MessageKind::Response(payload) => {
                assert_eq!(payload, "<Root><a>(RetrieveRed)");
            }
            _ => panic!("expected a response"),
        }
        assert!(teacher.sm.cooldown_flag, "answering raises the cooldown");
        assert_eq!(teacher.sm.cooldown_set_tick, 10);
    }

    #[test]
    fn teach_with_empty_inbox_is_silent() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        assert_eq!(teacher.teach(), None);
    }

    #[test]
    fn teach_discards_unknown_queries_silently() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        teacher
            .sm
            .query_inbox
            .push_back(Message::query(AgentId(1), 0, ConditionSequence::single("_unknownF")));
        assert_eq!(teacher.teach(), None);
        assert!(teacher.sm.query_inbox.is_empty(), "query is consumed");
        assert!(!teacher.sm.cooldown_flag, "no response, no cooldown");
    }

    #[test]
    fn teach_under_cooldown_retains_the_query() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        teacher.begin_tick(0);
        teacher.sm.cooldown_flag = true;
        teacher.sm.cooldown_set_tick = 0;
        teacher
            .sm
            .query_inbox
            .push_back(Message::query(AgentId(1), 0, red_seq()));
        assert_eq!(teacher.teach(), None);
        assert_eq!(teacher.sm.query_inbox.len(), 1, "retained until cooldown clears");
        // After t1_limit ticks the cooldown expires and the query is served.
        teacher.begin_tick(50);
        assert!(teacher.teach().is_some());
    }

    #[test]
    fn teach_counts_malformed_inbox_entries() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        teacher
            .sm
            .query_inbox
            .push_back(Message::response(AgentId(1), 0, &Node::action("X")));
        assert_eq!(teacher.teach(), None);
        assert_eq!(teacher.protocol_errors, 1);
    }

    #[test]
    fn learn_begin_emits_query_once() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(5);
        let msg = learner.learn_begin(red_seq()).expect("unknown sequence");
        assert!(msg.is_query());
        assert_eq!(msg.sent_tick, 5);
        assert!(learner.sm.flag(WAIT_FLAG), "learner waits for the response");
        // A second unknown while pending is suppressed.
        assert_eq!(
            learner.learn_begin(ConditionSequence::single("_targetGDetectedF")),
            None
        );
        // Known sequences never produce queries.
        let mut knower = agent_with(2, &[("_targetRDetectedF", "RetrieveRed")]);
        knower.begin_tick(5);
        assert_eq!(knower.learn_begin(red_seq()), None);
    }

    #[test]
    fn learn_begin_respects_cooldown() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(0);
        learner.sm.cooldown_flag = true;
        learner.sm.cooldown_set_tick = 0;
        assert_eq!(learner.learn_begin(red_seq()), None);
    }

    #[test]
    fn learn_complete_merges_and_clears_wait() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(0);
        let kb_before = learner.kb.len();
        let children_before = learner.control.children().len();
        learner.learn_begin(red_seq()).unwrap();
        learner.begin_tick(2);
        learner
            .sm
            .response_inbox
            .push_back(Message::response(AgentId(0), 1, &Node::action("RetrieveRed")));
        assert_eq!(learner.learn_complete(), LearnOutcome::Learned);
        assert!(learner.kb.knows(&red_seq()));
        assert_eq!(
            stringbt::find_knowledge(&learner.control, &red_seq()).unwrap(),
            Node::action("RetrieveRed")
        );
        assert!(!learner.sm.flag(WAIT_FLAG));
        assert_eq!(learner.pending_query(), None);
        // Knowledge and control only ever grow.
        assert_eq!(learner.kb.len(), kb_before + 1);
        assert_eq!(learner.control.children().len(), children_before + 1);
    }

    #[test]
    fn learn_complete_times_out_and_sets_cooldown() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(0);
        learner.learn_begin(red_seq()).unwrap();
        learner.begin_tick(100);
        assert_eq!(learner.learn_complete(), LearnOutcome::StillWaiting);
        learner.begin_tick(101);
        assert_eq!(learner.learn_complete(), LearnOutcome::TimedOut);
        assert!(learner.kb.is_empty());
        assert!(learner.sm.cooldown_flag, "timeout raises the anti-requery cooldown");
        assert!(!learner.sm.flag(WAIT_FLAG));
    }

    #[test]
    fn learn_complete_without_pending_is_idle() {
        let mut learner = agent_with(1, &[]);
        learner
            .sm
            .response_inbox
            .push_back(Message::response(AgentId(0), 0, &Node::action("X")));
        assert_eq!(learner.learn_complete(), LearnOutcome::Idle);
        assert!(learner.sm.response_inbox.is_empty(), "stale responses dropped");
    }

    #[test]
    fn first_parseable_response_wins() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(0);
        learner.learn_begin(red_seq()).unwrap();
        learner.begin_tick(1);
        learner
            .sm
            .response_inbox
            .push_back(Message::response(AgentId(0), 0, &Node::action("First")));
        learner
            .sm
            .response_inbox
            .push_back(Message::response(AgentId(2), 0, &Node::action("Second")));
        assert_eq!(learner.learn_complete(), LearnOutcome::Learned);
        assert_eq!(learner.kb.len(), 1);
        assert_eq!(learner.kb.lookup(&red_seq()), Some(&Node::action("First")));
        assert!(learner.sm.response_inbox.is_empty());
    }

    #[test]
    fn unparseable_payload_is_discarded_and_wait_continues() {
        let mut learner = agent_with(1, &[]);
        learner.begin_tick(0);
        learner.learn_begin(red_seq()).unwrap();
        learner.begin_tick(1);
        learner.sm.response_inbox.push_back(Message {
            kind: MessageKind::Response("<Root><sq>".to_string()),
            sender: AgentId(0),
            sent_tick: 0,
        });
        assert_eq!(learner.learn_complete(), LearnOutcome::StillWaiting);
        assert_eq!(learner.protocol_errors, 1);
        assert!(learner.kb.is_empty());
        // A good response afterwards still lands.
        learner.begin_tick(2);
        learner
            .sm
            .response_inbox
            .push_back(Message::response(AgentId(2), 1, &Node::action("RetrieveRed")));
        assert_eq!(learner.learn_complete(), LearnOutcome::Learned);
    }

    #[test]
    fn transferred_knowledge_is_transitively_teachable() {
        let mut teacher = agent_with(0, &[("_targetRDetectedF", "RetrieveRed")]);
        let mut learner = agent_with(1, &[]);
        teacher.begin_tick(0);
        learner.begin_tick(0);

        let query = learner.learn_begin(red_seq()).unwrap();
        teacher.sm.query_inbox.push_back(query);
        teacher.begin_tick(1);
        let response_b = teacher.teach().unwrap();
        let MessageKind::Response(payload_b) = &response_b.kind else {
            panic!()
        };
        let payload_b = payload_b.clone();
        learner.sm.response_inbox.push_back(response_b);
        learner.begin_tick(2);
        assert_eq!(learner.learn_complete(), LearnOutcome::Learned);

        // The learner now answers the same query byte-identically.
        learner.begin_tick(200); // past any cooldown
        learner
            .sm
            .query_inbox
            .push_back(Message::query(AgentId(2), 199, red_seq()));
        let response_a = learner.teach().unwrap();
        let MessageKind::Response(payload_a) = &response_a.kind else {
            panic!()
        };
        assert_eq!(payload_a, &payload_b);
    }
}
