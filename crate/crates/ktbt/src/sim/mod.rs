//! Deterministic 2D search-and-rescue world: colored targets scattered in a
//! rectangular arena, corner collection zones, optional obstacles, and
//! point robots that sense, move, pick up, query, teach and learn, one tick
//! at a time.

mod arena;
mod trial;
mod world;

pub use arena::{Arena, ZONE_FRACTION};
pub use trial::{
    run_trial, Composition, MetricsRow, SimConfig, TrialResult, DENSITY_CAP, SAMPLE_INTERVAL,
};
pub use world::{
    collision_resultant, standard_control, Robot, RobotBody, SimError, Target, TargetState, World,
    WorldParams, COLLISION_FLAG, IN_ZONE_FLAG, TREASURE_FLAG, VEC_AVOID_DIR, VEC_COLLISION,
    VEC_TARGET_POS,
};

use crate::knowledge::ConditionSequence;

/// The four target colors; one collection zone per color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetColor {
    Red,
    Green,
    Yellow,
    Blue,
}

impl TargetColor {
    pub const ALL: [TargetColor; 4] = [
        TargetColor::Red,
        TargetColor::Green,
        TargetColor::Yellow,
        TargetColor::Blue,
    ];

    pub fn index(self) -> usize {
        match self {
            TargetColor::Red => 0,
            TargetColor::Green => 1,
            TargetColor::Yellow => 2,
            TargetColor::Blue => 3,
        }
    }

    /// Blackboard flag raised when the nearest in-range target is this color.
    pub fn detected_flag(self) -> &'static str {
        match self {
            TargetColor::Red => "_targetRDetectedF",
            TargetColor::Green => "_targetGDetectedF",
            TargetColor::Yellow => "_targetYDetectedF",
            TargetColor::Blue => "_targetBDetectedF",
        }
    }

    /// Action tag of the retrieval handler for this color.
    pub fn retrieve_tag(self) -> &'static str {
        match self {
            TargetColor::Red => "RetrieveRed",
            TargetColor::Green => "RetrieveGreen",
            TargetColor::Yellow => "RetrieveYellow",
            TargetColor::Blue => "RetrieveBlue",
        }
    }

    /// The condition sequence identifying knowledge of this target type.
    pub fn query_seq(self) -> ConditionSequence {
        ConditionSequence::single(self.detected_flag())
    }
}

/// Whether the query-response protocol runs at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    NoTransfer,
    KtBt,
}

/// Prior-knowledge classes: ignorant, multi-target, or one color each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobotType {
    Ignorant,
    Multi,
    Red,
    Green,
    Yellow,
    Blue,
}

impl RobotType {
    /// Target colors this robot type can handle from the start.
    pub fn prior_colors(self) -> &'static [TargetColor] {
        match self {
            RobotType::Ignorant => &[],
            RobotType::Multi => &TargetColor::ALL,
            RobotType::Red => &[TargetColor::Red],
            RobotType::Green => &[TargetColor::Green],
            RobotType::Yellow => &[TargetColor::Yellow],
            RobotType::Blue => &[TargetColor::Blue],
        }
    }
}
