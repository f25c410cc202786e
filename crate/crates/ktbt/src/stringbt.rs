//! The stringBT wire grammar: a tagged-string encoding of behavior trees.
//!
//! Composites open with `<sq>` / `<sl>` / `<pl>` and close with a matching
//! `<e>`; leaves are `<c>(flag)` (optional `!` negation), `<a>(tag)` and
//! `<w>(ticks)`; `<Root>` opens a document and wraps exactly one node.
//! Decorators encode as `<inv>`, `<tt1>(ticks)` and `<tt2>(ticks)`, each
//! closed by `<e>` — a minimal extension so that transferred sub-trees may
//! carry timers. Whitespace between tokens is insignificant; the canonical
//! form produced by [`serialize`] has none, making wire messages
//! byte-comparable.
//!
//! The parser is iterative and reports every error with a byte offset, so it
//! can be pointed at untrusted input (see the fuzz targets).

use thiserror::Error;

use crate::bt::Node;
use crate::knowledge::ConditionSequence;

/// Nesting ceiling for parsed documents. Real control trees are a few levels
/// deep; the cap keeps adversarial `<sq>` towers from exhausting the stack
/// in later recursive passes.
pub const MAX_NESTING_DEPTH: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected <Root> at document start")]
    MissingRoot,
    #[error("empty document: <Root> must wrap one node")]
    EmptyDocument,
    #[error("trailing tokens after root closes")]
    TrailingTokens,
    #[error("unknown tag `<{0}>`")]
    UnknownTag(String),
    #[error("unmatched <e>: no open composite")]
    UnmatchedClose,
    #[error("unclosed composite at end of input")]
    UnclosedComposite,
    #[error("empty composite: `<{0}>` needs at least one child")]
    EmptyComposite(&'static str),
    #[error("decorator `<{0}>` needs exactly one child, found {1}")]
    DecoratorArity(&'static str, usize),
    #[error("malformed identifier")]
    MalformedIdentifier,
    #[error("malformed integer")]
    MalformedInteger,
    #[error("expected `{0}`")]
    Expected(char),
    #[error("unexpected character")]
    UnexpectedChar,
    #[error("nesting deeper than {MAX_NESTING_DEPTH}")]
    TooDeep,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, offset: usize) -> Self {
        ParseError { kind, offset }
    }
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.bytes.len()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.pos < self.bytes.len() && self.bytes[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::new(
                ParseErrorKind::Expected(c as char),
                self.pos,
            ))
        }
    }

    /// Like `expect`, but the character is a token of its own, so leading
    /// whitespace is insignificant.
    fn expect_token(&mut self, c: u8) -> Result<(), ParseError> {
        self.skip_ws();
        self.expect(c)
    }

    /// Reads `<tag>` and returns the tag text.
    fn tag(&mut self) -> Result<(&'a str, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        self.expect(b'<')?;
        let name_start = self.pos;
        while self.pos < self.bytes.len()
            && self.bytes[self.pos].is_ascii_alphanumeric()
            && self.pos - name_start <= 8
        {
            self.pos += 1;
        }
        if self.pos == name_start {
            return Err(ParseError::new(ParseErrorKind::UnexpectedChar, self.pos));
        }
        let name = std::str::from_utf8(&self.bytes[name_start..self.pos]).unwrap();
        self.expect(b'>')?;
        Ok((name, start))
    }

    fn identifier(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        if self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphabetic() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        } else {
            return Err(ParseError::new(
                ParseErrorKind::MalformedIdentifier,
                self.pos,
            ));
        }
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string())
    }

    /// Reads `(identifier)` with an optional leading `!`.
    fn cond_arg(&mut self) -> Result<(String, bool), ParseError> {
        self.expect_token(b'(')?;
        self.skip_ws();
        let negated = if self.pos < self.bytes.len() && self.bytes[self.pos] == b'!' {
            self.pos += 1;
            true
        } else {
            false
        };
        let tag = self.identifier()?;
        self.expect_token(b')')?;
        Ok((tag, negated))
    }

    fn ident_arg(&mut self) -> Result<String, ParseError> {
        self.expect_token(b'(')?;
        self.skip_ws();
        let tag = self.identifier()?;
        self.expect_token(b')')?;
        Ok(tag)
    }

    /// Reads `(nonneg-integer)`.
    fn uint_arg(&mut self) -> Result<u64, ParseError> {
        self.expect_token(b'(')?;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ParseError::new(ParseErrorKind::MalformedInteger, start));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value = text
            .parse::<u64>()
            .map_err(|_| ParseError::new(ParseErrorKind::MalformedInteger, start))?;
        self.expect_token(b')')?;
        Ok(value)
    }
}

enum FrameKind {
    Sequence,
    Selector,
    Parallel,
    Inverter,
    PulseTimer(u64),
    RunTimer(u64),
}

impl FrameKind {
    fn tag(&self) -> &'static str {
        match self {
            FrameKind::Sequence => "sq",
            FrameKind::Selector => "sl",
            FrameKind::Parallel => "pl",
            FrameKind::Inverter => "inv",
            FrameKind::PulseTimer(_) => "tt1",
            FrameKind::RunTimer(_) => "tt2",
        }
    }
}

struct Frame {
    kind: FrameKind,
    children: Vec<Node>,
    open_offset: usize,
}

/// Parses a stringBT document into a tree. Never panics: any input yields
/// either a tree or a located [`ParseError`].
pub fn parse(text: &str) -> Result<Node, ParseError> {
    let mut s = Scanner {
        bytes: text.as_bytes(),
        pos: 0,
    };
    s.skip_ws();
    let root_offset = s.pos;
    match s.tag() {
        Ok(("Root", _)) => {}
        Ok(_) => return Err(ParseError::new(ParseErrorKind::MissingRoot, root_offset)),
        Err(e) => {
            return Err(ParseError::new(ParseErrorKind::MissingRoot, e.offset.min(root_offset)))
        }
    }

    let mut stack: Vec<Frame> = Vec::new();
    let mut root: Option<Node> = None;

    fn attach(
        node: Node,
        offset: usize,
        stack: &mut [Frame],
        root: &mut Option<Node>,
    ) -> Result<(), ParseError> {
        if let Some(top) = stack.last_mut() {
            top.children.push(node);
            Ok(())
        } else if root.is_none() {
            *root = Some(node);
            Ok(())
        } else {
            Err(ParseError::new(ParseErrorKind::TrailingTokens, offset))
        }
    }

    while !s.at_end() {
        let (name, offset) = s.tag()?;
        let open = |kind: FrameKind| Frame {
            kind,
            children: Vec::new(),
            open_offset: offset,
        };
        match name {
            "sq" | "sl" | "pl" | "inv" | "tt1" | "tt2" => {
                if stack.len() >= MAX_NESTING_DEPTH {
                    return Err(ParseError::new(ParseErrorKind::TooDeep, offset));
                }
                // Opening anything after the root node closed is trailing.
                if stack.is_empty() && root.is_some() {
                    return Err(ParseError::new(ParseErrorKind::TrailingTokens, offset));
                }
                let frame = match name {
                    "sq" => open(FrameKind::Sequence),
                    "sl" => open(FrameKind::Selector),
                    "pl" => open(FrameKind::Parallel),
                    "inv" => open(FrameKind::Inverter),
                    "tt1" => open(FrameKind::PulseTimer(s.uint_arg()?)),
                    _ => open(FrameKind::RunTimer(s.uint_arg()?)),
                };
                stack.push(frame);
            }
            "c" => {
                let (tag, negated) = s.cond_arg()?;
                attach(Node::Condition { tag, negated }, offset, &mut stack, &mut root)?;
            }
            "a" => {
                let tag = s.ident_arg()?;
                attach(Node::Action { tag }, offset, &mut stack, &mut root)?;
            }
            "w" => {
                let ticks = s.uint_arg()?;
                attach(Node::wait(ticks), offset, &mut stack, &mut root)?;
            }
            "e" => {
                let frame = stack
                    .pop()
                    .ok_or_else(|| ParseError::new(ParseErrorKind::UnmatchedClose, offset))?;
                let n = frame.children.len();
                let node = match frame.kind {
                    FrameKind::Sequence | FrameKind::Selector | FrameKind::Parallel if n == 0 => {
                        return Err(ParseError::new(
                            ParseErrorKind::EmptyComposite(frame.kind.tag()),
                            offset,
                        ))
                    }
                    FrameKind::Sequence => Node::Sequence(frame.children),
                    FrameKind::Selector => Node::Selector(frame.children),
                    FrameKind::Parallel => Node::Parallel(frame.children),
                    kind => {
                        if n != 1 {
                            return Err(ParseError::new(
                                ParseErrorKind::DecoratorArity(kind.tag(), n),
                                offset,
                            ));
                        }
                        let child = frame.children.into_iter().next().unwrap();
                        match kind {
                            FrameKind::Inverter => Node::Inverter(Box::new(child)),
                            FrameKind::PulseTimer(limit) => Node::pulse_timer(child, limit),
                            FrameKind::RunTimer(limit) => Node::run_timer(child, limit),
                            _ => unreachable!(),
                        }
                    }
                };
                attach(node, frame.open_offset, &mut stack, &mut root)?;
            }
            "Root" => return Err(ParseError::new(ParseErrorKind::TrailingTokens, offset)),
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::UnknownTag(other.to_string()),
                    offset,
                ))
            }
        }
    }

    if !stack.is_empty() {
        return Err(ParseError::new(
            ParseErrorKind::UnclosedComposite,
            s.bytes.len(),
        ));
    }
    root.ok_or_else(|| ParseError::new(ParseErrorKind::EmptyDocument, s.bytes.len()))
}

/// Renders a tree in canonical form: `<Root>` followed by the node tokens
/// with zero inter-token whitespace. Timer state is not represented, so
/// `parse(serialize(t))` is structurally identical to `t`.
pub fn serialize(tree: &Node) -> String {
    let mut out = String::from("<Root>");
    write_node(tree, &mut out);
    out
}

fn write_node(node: &Node, out: &mut String) {
    match node {
        Node::Sequence(children) => write_composite("<sq>", children, out),
        Node::Selector(children) => write_composite("<sl>", children, out),
        Node::Parallel(children) => write_composite("<pl>", children, out),
        Node::Inverter(child) => {
            out.push_str("<inv>");
            write_node(child, out);
            out.push_str("<e>");
        }
        Node::PulseTimer {
            child, limit_ticks, ..
        } => {
            out.push_str(&format!("<tt1>({limit_ticks})"));
            write_node(child, out);
            out.push_str("<e>");
        }
        Node::RunTimer {
            child, limit_ticks, ..
        } => {
            out.push_str(&format!("<tt2>({limit_ticks})"));
            write_node(child, out);
            out.push_str("<e>");
        }
        Node::Condition { tag, negated } => {
            if *negated {
                out.push_str(&format!("<c>(!{tag})"));
            } else {
                out.push_str(&format!("<c>({tag})"));
            }
        }
        Node::Action { tag } => out.push_str(&format!("<a>({tag})")),
        Node::Wait { duration_ticks, .. } => out.push_str(&format!("<w>({duration_ticks})")),
    }
}

fn write_composite(open: &str, children: &[Node], out: &mut String) {
    out.push_str(open);
    for child in children {
        write_node(child, out);
    }
    out.push_str("<e>");
}

/// Human-readable indented outline of a tree, one node per line.
pub fn outline(tree: &Node) -> String {
    let mut out = String::new();
    write_outline(tree, 0, &mut out);
    out
}

fn write_outline(node: &Node, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match node {
        Node::Sequence(_) => out.push_str("Sequence"),
        Node::Selector(_) => out.push_str("Selector"),
        Node::Parallel(_) => out.push_str("Parallel"),
        Node::Inverter(_) => out.push_str("Inverter"),
        Node::PulseTimer { limit_ticks, .. } => out.push_str(&format!("TT1({limit_ticks})")),
        Node::RunTimer { limit_ticks, .. } => out.push_str(&format!("TT2({limit_ticks})")),
        Node::Condition { tag, negated } => {
            let bang = if *negated { "!" } else { "" };
            out.push_str(&format!("Condition({bang}{tag})"));
        }
        Node::Action { tag } => out.push_str(&format!("Action({tag})")),
        Node::Wait { duration_ticks, .. } => out.push_str(&format!("Wait({duration_ticks})")),
    }
    out.push('\n');
    for child in node.children() {
        write_outline(child, depth + 1, out);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("control tree is not a selector")]
    NotSelector,
    #[error("control tree has no fallback child")]
    NoFallback,
}

/// If `node` has the knowledge shape `Sequence[conditions.., action-subtree]`,
/// returns the condition list and the action sub-tree.
fn knowledge_shape(node: &Node) -> Option<(Vec<(&str, bool)>, &Node)> {
    let Node::Sequence(items) = node else {
        return None;
    };
    let mut conds = Vec::new();
    let mut i = 0;
    while i < items.len() {
        if let Node::Condition { tag, negated } = &items[i] {
            conds.push((tag.as_str(), *negated));
            i += 1;
        } else {
            break;
        }
    }
    // Exactly one trailing action sub-tree after a nonempty condition prefix.
    if conds.is_empty() || i + 1 != items.len() {
        return None;
    }
    Some((conds, &items[i]))
}

fn seq_matches(conds: &[(&str, bool)], seq: &ConditionSequence) -> bool {
    conds.len() == seq.terms().len()
        && conds
            .iter()
            .zip(seq.terms())
            .all(|(&(tag, neg), term)| tag == term.tag && neg == term.negated)
}

/// Looks up the knowledge child of `control` whose ordered condition list
/// equals `s_q` exactly and returns a deep copy of its action sub-tree.
/// Absence (including a non-selector `control`) is `None`, never an error.
pub fn find_knowledge(control: &Node, s_q: &ConditionSequence) -> Option<Node> {
    let Node::Selector(children) = control else {
        return None;
    };
    for child in children {
        if let Some((conds, action)) = knowledge_shape(child) {
            if seq_matches(&conds, s_q) {
                let mut copy = action.clone();
                copy.reset();
                return Some(copy);
            }
        }
    }
    None
}

/// Returns `control` with `Sequence[s_q conditions.., t_ka]` inserted
/// immediately before the fallback (last) child. Merging a sequence that is
/// already present is a no-op, so replayed responses cannot duplicate
/// knowledge.
pub fn merge_knowledge(
    control: &Node,
    s_q: &ConditionSequence,
    t_ka: Node,
) -> Result<Node, MergeError> {
    let Node::Selector(children) = control else {
        return Err(MergeError::NotSelector);
    };
    if children.is_empty() {
        return Err(MergeError::NoFallback);
    }
    for child in children {
        if let Some((conds, _)) = knowledge_shape(child) {
            if seq_matches(&conds, s_q) {
                return Ok(control.clone());
            }
        }
    }
    let mut new_children = children.clone();
    let mut items: Vec<Node> = s_q
        .terms()
        .iter()
        .map(|term| Node::Condition {
            tag: term.tag.clone(),
            negated: term.negated,
        })
        .collect();
    items.push(t_ka);
    new_children.insert(new_children.len() - 1, Node::Sequence(items));
    Ok(Node::Selector(new_children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::ConditionSequence;

    fn seq(terms: &[(&str, bool)]) -> ConditionSequence {
        ConditionSequence::new(
            terms
                .iter()
                .map(|&(tag, negated)| (tag.to_string(), negated)),
        )
        .unwrap()
    }

    #[test]
    fn minimal_document_parses() {
        let tree = parse("<Root><sq><c>(a)<a>(B)<e>").unwrap();
        assert_eq!(
            tree,
            Node::Sequence(vec![Node::condition("a"), Node::action("B")])
        );
    }

    #[test]
    fn whitespace_between_tokens_is_insignificant() {
        let compact = parse("<Root><sl><c>(a)<a>(B)<e>").unwrap();
        let airy = parse("  <Root>\n  <sl>\n\t<c> (a)\n\t<a> (B) <e>\n").unwrap();
        assert_eq!(compact, airy);
    }

    #[test]
    fn control_tree_document_has_expected_shape() {
        let doc = "<Root>\
            <sl>\
            <sq><c>(_collisionDetectedF)<a>(CollisionAvoidance)<e>\
            <sq><c>(_waitF)<a>(StopWalk)<e>\
            <sq><c>(_treasureOnBoardF)\
            <sl><sq><c>(_inZoneF)<a>(PlaceTreasure)<e>\
            <sq><c>(!_inZoneF)<a>(WalkToCollection)<e><e><e>\
            <a>(RandomWalk)<e>";
        let tree = parse(doc).unwrap();
        let Node::Selector(children) = &tree else {
            panic!("root must be a selector");
        };
        assert_eq!(children.len(), 4);
        assert_eq!(
            children[0],
            Node::Sequence(vec![
                Node::condition("_collisionDetectedF"),
                Node::action("CollisionAvoidance"),
            ])
        );
        assert_eq!(
            children[1],
            Node::Sequence(vec![Node::condition("_waitF"), Node::action("StopWalk")])
        );
        assert_eq!(
            children[2],
            Node::Sequence(vec![
                Node::condition("_treasureOnBoardF"),
                Node::Selector(vec![
                    Node::Sequence(vec![
                        Node::condition("_inZoneF"),
                        Node::action("PlaceTreasure"),
                    ]),
                    Node::Sequence(vec![
                        Node::condition_negated("_inZoneF"),
                        Node::action("WalkToCollection"),
                    ]),
                ]),
            ])
        );
        assert_eq!(children[3], Node::action("RandomWalk"));
        // Canonical re-serialization is a fixed point of parse.
        let canon = serialize(&tree);
        assert_eq!(parse(&canon).unwrap(), tree);
        assert_eq!(serialize(&parse(&canon).unwrap()), canon);
    }

    #[test]
    fn unclosed_composite_is_reported_at_end_of_input() {
        let err = parse("<Root><sl><c>(a)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnclosedComposite);
        assert_eq!(err.offset, 16);
        assert!(err.to_string().contains("unclosed composite at end of input"));
    }

    #[test]
    fn error_offsets_point_at_the_problem() {
        let err = parse("<Root><sq><c>(a)<e><e>").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnmatchedClose);
        assert_eq!(err.offset, 19);

        let err = parse("<Root><zz>(a)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownTag("zz".into()));
        assert_eq!(err.offset, 6);

        let err = parse("<Root><sq><e>").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::EmptyComposite("sq"));

        let err = parse("<Root><c>(a)<c>(b)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::TrailingTokens);
        assert_eq!(err.offset, 12);

        let err = parse("<sq><c>(a)<e>").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingRoot);

        let err = parse("<Root><c>(9a)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MalformedIdentifier);
        assert_eq!(err.offset, 10);

        let err = parse("<Root><w>(x)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MalformedInteger);

        let err = parse("<Root><inv><c>(a)<c>(b)<e>").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DecoratorArity("inv", 2));
    }

    #[test]
    fn condition_negation_round_trips() {
        let tree = parse("<Root><sq><c>(!_inZoneF)<a>(WalkToCollection)<e>").unwrap();
        let Node::Sequence(items) = &tree else {
            panic!()
        };
        assert_eq!(items[0], Node::condition_negated("_inZoneF"));
        assert_eq!(
            serialize(&tree),
            "<Root><sq><c>(!_inZoneF)<a>(WalkToCollection)<e>"
        );
    }

    #[test]
    fn decorator_extension_round_trips() {
        let doc = "<Root><tt2>(7)<sq><c>(x)<w>(3)<e><e>";
        let tree = parse(doc).unwrap();
        assert_eq!(serialize(&tree), doc);
        assert_eq!(
            tree,
            Node::run_timer(
                Node::Sequence(vec![Node::condition("x"), Node::wait(3)]),
                7
            )
        );
    }

    #[test]
    fn deep_nesting_is_rejected_not_crashing() {
        let mut doc = String::from("<Root>");
        for _ in 0..(MAX_NESTING_DEPTH + 10) {
            doc.push_str("<sq>");
        }
        let err = parse(&doc).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::TooDeep);
    }

    #[test]
    fn serialize_matches_minimal_example() {
        let tree = Node::Sequence(vec![Node::condition("a"), Node::action("B")]);
        assert_eq!(serialize(&tree), "<Root><sq><c>(a)<a>(B)<e>");
    }

    fn sample_control() -> Node {
        Node::Selector(vec![
            Node::Sequence(vec![
                Node::condition("_targetRDetectedF"),
                Node::action("RetrieveRed"),
            ]),
            Node::action("RandomWalk"),
        ])
    }

    #[test]
    fn find_knowledge_returns_the_matching_action_subtree() {
        let control = sample_control();
        let found = find_knowledge(&control, &seq(&[("_targetRDetectedF", false)])).unwrap();
        assert_eq!(found, Node::action("RetrieveRed"));
        assert!(find_knowledge(&control, &seq(&[("_unknownF", false)])).is_none());
    }

    #[test]
    fn find_knowledge_matching_is_ordered() {
        let control = Node::Selector(vec![
            Node::Sequence(vec![
                Node::condition("a"),
                Node::condition("b"),
                Node::action("X"),
            ]),
            Node::action("RandomWalk"),
        ]);
        assert!(find_knowledge(&control, &seq(&[("a", false), ("b", false)])).is_some());
        assert!(find_knowledge(&control, &seq(&[("b", false), ("a", false)])).is_none());
    }

    #[test]
    fn merge_inserts_before_fallback_and_is_idempotent() {
        let control = sample_control();
        let s = seq(&[("_targetGDetectedF", false)]);
        let merged = merge_knowledge(&control, &s, Node::action("RetrieveGreen")).unwrap();
        let Node::Selector(children) = &merged else {
            panic!()
        };
        assert_eq!(children.len(), 3);
        // Existing children keep their positions; the new child sits before
        // the fallback.
        assert_eq!(children[2], Node::action("RandomWalk"));
        assert_eq!(
            children[1],
            Node::Sequence(vec![
                Node::condition("_targetGDetectedF"),
                Node::action("RetrieveGreen"),
            ])
        );
        let again = merge_knowledge(&merged, &s, Node::action("RetrieveGreen")).unwrap();
        assert_eq!(again, merged);
        // Merge then find recovers the sub-tree.
        assert_eq!(find_knowledge(&merged, &s).unwrap(), Node::action("RetrieveGreen"));
    }

    #[test]
    fn merge_rejects_malformed_control() {
        let s = seq(&[("a", false)]);
        assert_eq!(
            merge_knowledge(&Node::action("X"), &s, Node::action("Y")),
            Err(MergeError::NotSelector)
        );
        assert_eq!(
            merge_knowledge(&Node::Selector(vec![]), &s, Node::action("Y")),
            Err(MergeError::NoFallback)
        );
    }
}
