//! Shared helpers for the integration and acceptance suites: an independent
//! reference evaluator for timer-free trees, seeded random tree generators,
//! and the control-tree fixture.

use std::collections::HashMap;

use ktbt::bt::{Node, NodeStatus};
use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn t_control_text() -> String {
    std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/t_control.sbt"
    ))
    .expect("fixture present")
}

/// Straight-line recursive evaluator for trees over {Sequence, Selector,
/// Parallel, Inverter, Condition}, written directly from the node
/// semantics. Deliberately independent of the production interpreter: no
/// state manager, no action sink, no timers.
pub fn reference_eval(node: &Node, flags: &HashMap<String, bool>) -> NodeStatus {
    match node {
        Node::Sequence(children) => {
            for child in children {
                let status = reference_eval(child, flags);
                if status != NodeStatus::Success {
                    return status;
                }
            }
            NodeStatus::Success
        }
        Node::Selector(children) => {
            for child in children {
                let status = reference_eval(child, flags);
                if status != NodeStatus::Failure {
                    return status;
                }
            }
            NodeStatus::Failure
        }
        Node::Parallel(children) => {
            let statuses: Vec<NodeStatus> =
                children.iter().map(|c| reference_eval(c, flags)).collect();
            if statuses.contains(&NodeStatus::Running) {
                NodeStatus::Running
            } else if statuses.iter().all(|s| *s == NodeStatus::Success) {
                NodeStatus::Success
            } else {
                NodeStatus::Failure
            }
        }
        Node::Inverter(child) => match reference_eval(child, flags) {
            NodeStatus::Success => NodeStatus::Failure,
            NodeStatus::Failure => NodeStatus::Success,
            NodeStatus::Running => NodeStatus::Running,
        },
        Node::Condition { tag, negated } => {
            let value = flags.get(tag).copied().unwrap_or(false);
            if value != *negated {
                NodeStatus::Success
            } else {
                NodeStatus::Failure
            }
        }
        other => panic!("outside the oracle domain: {other:?}"),
    }
}

/// Random timer-free tree of the oracle domain, conditions drawn from
/// `flags`. Depth counts edges: depth 0 is a lone condition leaf.
pub fn random_timer_free_tree(rng: &mut ChaCha8Rng, depth: usize, flags: &[&str]) -> Node {
    let leaf = |rng: &mut ChaCha8Rng| Node::Condition {
        tag: flags.choose(rng).unwrap().to_string(),
        negated: rng.random_bool(0.3),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.random_range(0..5) {
        0 => leaf(rng),
        1 => Node::Inverter(Box::new(random_timer_free_tree(rng, depth - 1, flags))),
        kind => {
            let n = rng.random_range(1..=4);
            let children = (0..n)
                .map(|_| random_timer_free_tree(rng, depth - 1, flags))
                .collect();
            match kind {
                2 => Node::Sequence(children),
                3 => Node::Selector(children),
                _ => Node::Parallel(children),
            }
        }
    }
}

fn random_identifier(rng: &mut ChaCha8Rng) -> String {
    const FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_0123456789";
    let mut out = String::new();
    out.push(*FIRST.choose(rng).unwrap() as char);
    for _ in 0..rng.random_range(0..8) {
        out.push(*REST.choose(rng).unwrap() as char);
    }
    out
}

/// Random tree over the full node set, for grammar round-trips.
pub fn random_full_tree(rng: &mut ChaCha8Rng, depth: usize) -> Node {
    let leaf = |rng: &mut ChaCha8Rng| match rng.random_range(0..3) {
        0 => Node::Condition {
            tag: random_identifier(rng),
            negated: rng.random_bool(0.25),
        },
        1 => Node::Action {
            tag: random_identifier(rng),
        },
        _ => Node::wait(rng.random_range(0..500)),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.random_range(0..7) {
        0 => leaf(rng),
        1 => Node::Inverter(Box::new(random_full_tree(rng, depth - 1))),
        2 => Node::pulse_timer(random_full_tree(rng, depth - 1), rng.random_range(0..200)),
        3 => Node::run_timer(random_full_tree(rng, depth - 1), rng.random_range(0..200)),
        kind => {
            let n = rng.random_range(1..=4);
            let children = (0..n).map(|_| random_full_tree(rng, depth - 1)).collect();
            match kind {
                4 => Node::Sequence(children),
                5 => Node::Selector(children),
                _ => Node::Parallel(children),
            }
        }
    }
}

/// All 2^n assignments of the given flags.
pub fn all_assignments(flags: &[&str]) -> Vec<HashMap<String, bool>> {
    let n = flags.len();
    (0..1u32 << n)
        .map(|bits| {
            flags
                .iter()
                .enumerate()
                .map(|(i, f)| (f.to_string(), bits >> i & 1 == 1))
                .collect()
        })
        .collect()
}
