//! World state and the per-tick update: sense, tick every agent's tree,
//! collect outboxes, deliver, advance the clock.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bt::{ActionSink, Node, NodeStatus, StateManager, TickError};
use crate::comms::{AgentId, Endpoint, Medium};
use crate::geom::Vec2;
use crate::knowledge::{build_control, KnowledgeBase, KtAgent, WAIT_FLAG};

use super::{Arena, RobotType, SimMode, TargetColor};

pub const COLLISION_FLAG: &str = "_collisionDetectedF";
pub const TREASURE_FLAG: &str = "_treasureOnBoardF";
pub const IN_ZONE_FLAG: &str = "_inZoneF";

/// Resultant of the collision vectors, stored by sensing.
pub const VEC_COLLISION: &str = "_collisionV";
/// Unit avoidance direction (`-V_c` normalized, tie-broken when zero).
pub const VEC_AVOID_DIR: &str = "_avoidDir";
/// Position of the nearest detected target.
pub const VEC_TARGET_POS: &str = "_targetPos";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Tick(#[from] TickError),
    #[error("could not place {0} after {1} attempts")]
    Placement(&'static str, u32),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetState {
    OnGround,
    Carried(AgentId),
    Collected,
}

#[derive(Debug, Clone)]
pub struct Target {
    pub color: TargetColor,
    pub position: Vec2,
    pub state: TargetState,
}

/// Kinematic and sensing parameters shared by all robots in a world.
#[derive(Debug, Clone)]
pub struct WorldParams {
    pub speed: f64,
    pub d_t: f64,
    pub d_c: f64,
    pub pickup_radius: f64,
    pub walk_duration: u64,
    pub mode: SimMode,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            speed: 1.0,
            d_t: 30.0,
            d_c: 4.0,
            pickup_radius: 3.0,
            walk_duration: 60,
            mode: SimMode::KtBt,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomWalkState {
    pub direction: Vec2,
    pub remaining: u64,
}

/// The physical half of a robot; the deciding half is its [`KtAgent`].
#[derive(Debug, Clone)]
pub struct RobotBody {
    pub position: Vec2,
    /// Index into the world's target list while carrying.
    pub carried: Option<usize>,
    pub walk: RandomWalkState,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct Robot {
    pub body: RobotBody,
    pub agent: KtAgent,
    pub robot_type: RobotType,
}

/// Control tree and knowledge base for a robot with the given prior colors:
/// collision avoidance and wait sub-trees first, the carry-to-zone sub-tree
/// as common knowledge, one retrieval sub-tree per prior color, and a random
/// walk fallback.
pub fn standard_control(prior_colors: &[TargetColor]) -> (Node, KnowledgeBase) {
    let critical = vec![
        Node::Sequence(vec![
            Node::condition(COLLISION_FLAG),
            Node::action("CollisionAvoidance"),
        ]),
        Node::Sequence(vec![Node::condition(WAIT_FLAG), Node::action("StopWalk")]),
    ];
    let common = vec![Node::Sequence(vec![
        Node::condition(TREASURE_FLAG),
        Node::Selector(vec![
            Node::Sequence(vec![
                Node::condition(IN_ZONE_FLAG),
                Node::action("PlaceTreasure"),
            ]),
            Node::Sequence(vec![
                Node::condition_negated(IN_ZONE_FLAG),
                Node::action("WalkToCollection"),
            ]),
        ]),
    ])];
    let mut kb = KnowledgeBase::new();
    let mut prior = Vec::new();
    for &color in prior_colors {
        let action = Node::action(color.retrieve_tag());
        kb.add(color.query_seq(), action.clone());
        prior.push(Node::Sequence(vec![
            Node::condition(color.detected_flag()),
            action,
        ]));
    }
    let control = build_control(critical, common, prior, Node::action("RandomWalk"));
    (control, kb)
}

impl Robot {
    pub fn new(
        id: AgentId,
        robot_type: RobotType,
        position: Vec2,
        rng: ChaCha8Rng,
        t1_limit: u64,
        t2_limit: u64,
    ) -> Robot {
        let (control, kb) = standard_control(robot_type.prior_colors());
        Robot {
            body: RobotBody {
                position,
                carried: None,
                walk: RandomWalkState {
                    direction: Vec2::new(1.0, 0.0),
                    remaining: 0,
                },
                rng,
            },
            agent: KtAgent::new(id, control, kb, t1_limit, t2_limit),
            robot_type,
        }
    }

    /// Number of target colors this robot's knowledge base covers.
    pub fn colors_known(&self) -> usize {
        TargetColor::ALL
            .iter()
            .filter(|c| self.agent.kb.knows(&c.query_seq()))
            .count()
    }
}

/// Sum of `contact - position` over all contact points, the resultant
/// collision vector. Zero when there are no contacts.
pub fn collision_resultant(position: Vec2, contacts: &[Vec2]) -> Vec2 {
    contacts
        .iter()
        .fold(Vec2::ZERO, |acc, &c| acc + (c - position))
}

/// Action handlers for one robot's tick: the world view they may touch.
struct SimActions<'a> {
    robot_id: AgentId,
    body: &'a mut RobotBody,
    targets: &'a mut Vec<Target>,
    arena: &'a Arena,
    params: &'a WorldParams,
}

impl SimActions<'_> {
    /// Moves to `p` clamped to the arena; obstacle interiors block the step.
    fn relocate(&mut self, p: Vec2) {
        let p = self.arena.clamp(p);
        if !self.arena.in_obstacle(p) {
            self.body.position = p;
        }
    }

    fn step_direction(&mut self, unit: Vec2) {
        self.relocate(self.body.position + unit * self.params.speed);
    }

    /// One step toward `dest`, stopping exactly on it when closer than one
    /// step.
    fn step_toward(&mut self, dest: Vec2) {
        let delta = dest - self.body.position;
        let dist = delta.norm();
        if dist == 0.0 {
            return;
        }
        let step = self.params.speed.min(dist);
        self.relocate(self.body.position + delta * (step / dist));
    }

    fn nearest_target(&self, color: TargetColor, within: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, t) in self.targets.iter().enumerate() {
            if t.color != color || t.state != TargetState::OnGround {
                continue;
            }
            let d = t.position.distance(self.body.position);
            if d <= within && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    fn random_walk(&mut self, sm: &mut StateManager) -> NodeStatus {
        let _ = sm;
        if self.body.walk.remaining == 0 {
            let theta = self.body.rng.random_range(0.0..std::f64::consts::TAU);
            self.body.walk.direction = Vec2::from_angle(theta);
            self.body.walk.remaining = self.params.walk_duration.max(1);
        }
        let dir = self.body.walk.direction;
        self.step_direction(dir);
        self.body.walk.remaining -= 1;
        if self.body.walk.remaining == 0 {
            NodeStatus::Success
        } else {
            NodeStatus::Running
        }
    }

    fn collision_avoidance(&mut self, sm: &mut StateManager) -> NodeStatus {
        let dir = sm
            .vector(VEC_AVOID_DIR)
            .unwrap_or_else(|| Vec2::new(1.0, 0.0));
        // Seeded actuation noise. Point robots contending for one spot would
        // otherwise bounce apart and back along the same line forever; the
        // physics of extended bodies resolves this in the real thing.
        let noise = self.body.rng.random_range(-0.6..0.6f64);
        let (sin, cos) = noise.sin_cos();
        let jittered = Vec2::new(dir.x * cos - dir.y * sin, dir.x * sin + dir.y * cos);
        self.step_direction(jittered);
        NodeStatus::Success
    }

    fn walk_to_collection(&mut self, sm: &mut StateManager) -> NodeStatus {
        let Some(carried) = self.body.carried else {
            return NodeStatus::Failure;
        };
        if sm.flag(IN_ZONE_FLAG) {
            return NodeStatus::Success;
        }
        let dest = self.arena.zone(self.targets[carried].color).center();
        self.step_toward(dest);
        NodeStatus::Running
    }

    fn place_treasure(&mut self, sm: &mut StateManager) -> NodeStatus {
        let Some(carried) = self.body.carried else {
            return NodeStatus::Failure;
        };
        self.targets[carried].state = TargetState::Collected;
        self.targets[carried].position = self.body.position;
        self.body.carried = None;
        sm.set_flag(TREASURE_FLAG, false);
        sm.set_flag(IN_ZONE_FLAG, false);
        NodeStatus::Success
    }

    fn retrieve(&mut self, color: TargetColor, sm: &mut StateManager) -> NodeStatus {
        if self.body.carried.is_some() {
            return NodeStatus::Failure;
        }
        // Re-resolved against live state each tick: the sensed target may
        // have been picked up by another robot this very tick.
        let Some(idx) = self.nearest_target(color, self.params.d_t) else {
            return NodeStatus::Failure;
        };
        let dest = self.targets[idx].position;
        self.step_toward(dest);
        if self.body.position.distance(dest) < self.params.pickup_radius {
            self.targets[idx].state = TargetState::Carried(self.robot_id);
            self.targets[idx].position = self.body.position;
            self.body.carried = Some(idx);
            sm.set_flag(TREASURE_FLAG, true);
            NodeStatus::Success
        } else {
            NodeStatus::Running
        }
    }
}

impl ActionSink for SimActions<'_> {
    fn run(&mut self, tag: &str, sm: &mut StateManager) -> Option<NodeStatus> {
        let status = match tag {
            "RandomWalk" => self.random_walk(sm),
            "CollisionAvoidance" => self.collision_avoidance(sm),
            "StopWalk" => NodeStatus::Success,
            "WalkToCollection" => self.walk_to_collection(sm),
            "PlaceTreasure" => self.place_treasure(sm),
            "RetrieveRed" => self.retrieve(TargetColor::Red, sm),
            "RetrieveGreen" => self.retrieve(TargetColor::Green, sm),
            "RetrieveYellow" => self.retrieve(TargetColor::Yellow, sm),
            "RetrieveBlue" => self.retrieve(TargetColor::Blue, sm),
            _ => return None,
        };
        Some(status)
    }
}

pub struct World {
    pub arena: Arena,
    pub targets: Vec<Target>,
    pub robots: Vec<Robot>,
    pub medium: Medium,
    pub params: WorldParams,
    pub tick: u64,
}

impl World {
    pub fn new(
        arena: Arena,
        targets: Vec<Target>,
        robots: Vec<Robot>,
        medium: Medium,
        params: WorldParams,
    ) -> World {
        World {
            arena,
            targets,
            robots,
            medium,
            params,
            tick: 0,
        }
    }

    pub fn collected(&self) -> usize {
        self.targets
            .iter()
            .filter(|t| t.state == TargetState::Collected)
            .count()
    }

    /// Phase 1: refresh every robot's sensed flags and vectors from the
    /// positions at tick start.
    fn sense_all(&mut self) {
        let positions: Vec<Vec2> = self.robots.iter().map(|r| r.body.position).collect();
        for i in 0..self.robots.len() {
            let pos = positions[i];
            let mut contacts: Vec<Vec2> = Vec::new();
            for (j, &other) in positions.iter().enumerate() {
                if j != i && other.distance(pos) <= self.params.d_c {
                    contacts.push(other);
                }
            }
            for obstacle in &self.arena.obstacles {
                let nearest = obstacle.nearest_point(pos);
                if nearest.distance(pos) <= self.params.d_c {
                    contacts.push(nearest);
                }
            }
            let v_c = collision_resultant(pos, &contacts);
            // Avoidance direction: -V_c normalized; when symmetric contacts
            // cancel, rotate the first contact vector by 90 degrees.
            let avoid = (-v_c).normalized().or_else(|| {
                contacts
                    .first()
                    .and_then(|&c| (c - pos).perp().normalized())
                    .or(Some(Vec2::new(1.0, 0.0)).filter(|_| !contacts.is_empty()))
            });

            // Nearest on-ground target in detection range; ties broken by
            // target index.
            let mut nearest: Option<(usize, f64)> = None;
            for (ti, t) in self.targets.iter().enumerate() {
                if t.state != TargetState::OnGround {
                    continue;
                }
                let d = t.position.distance(pos);
                if d <= self.params.d_t && nearest.map_or(true, |(_, bd)| d < bd) {
                    nearest = Some((ti, d));
                }
            }

            let robot = &mut self.robots[i];
            let sm = &mut robot.agent.sm;
            sm.set_flag(COLLISION_FLAG, !contacts.is_empty());
            sm.set_vector(VEC_COLLISION, v_c);
            if let Some(avoid) = avoid {
                sm.set_vector(VEC_AVOID_DIR, avoid);
            }
            for color in TargetColor::ALL {
                let hit = nearest.map_or(false, |(ti, _)| self.targets[ti].color == color);
                sm.set_flag(color.detected_flag(), hit);
            }
            if let Some((ti, _)) = nearest {
                sm.set_vector(VEC_TARGET_POS, self.targets[ti].position);
            }
            let carried = robot.body.carried;
            sm.set_flag(TREASURE_FLAG, carried.is_some());
            let in_zone = carried.map_or(false, |ti| {
                self.arena
                    .zone(self.targets[ti].color)
                    .contains(robot.body.position)
            });
            sm.set_flag(IN_ZONE_FLAG, in_zone);
        }
    }

    /// Advances the world one tick: sense, tick agents in id order, collect
    /// outboxes, deliver messages, bump the clock.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.sense_all();

        for i in 0..self.robots.len() {
            let robot = &mut self.robots[i];
            robot.agent.begin_tick(self.tick);
            let mut sink = SimActions {
                robot_id: robot.agent.id,
                body: &mut robot.body,
                targets: &mut self.targets,
                arena: &self.arena,
                params: &self.params,
            };
            robot.agent.tick_control(&mut sink)?;
            if self.params.mode == SimMode::KtBt {
                if let Some(msg) = robot.agent.teach() {
                    robot.agent.sm.outbox.push(msg);
                }
                robot.agent.learn_complete();
                for color in TargetColor::ALL {
                    if robot.agent.sm.flag(color.detected_flag()) {
                        if let Some(msg) = robot.agent.learn_begin(color.query_seq()) {
                            robot.agent.sm.outbox.push(msg);
                        }
                    }
                }
            }
        }

        for robot in &mut self.robots {
            let pos = robot.body.position;
            for msg in robot.agent.sm.outbox.drain(..) {
                self.medium.broadcast(pos, msg);
            }
        }

        let mut endpoints: Vec<Endpoint> = self
            .robots
            .iter_mut()
            .map(|r| Endpoint::of_agent(&mut r.agent, r.body.position))
            .collect();
        self.medium.deliver(&mut endpoints);
        drop(endpoints);

        self.tick += 1;
        Ok(())
    }
}
