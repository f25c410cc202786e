//! Seeded trials: placement, the tick loop, and the sampled metrics series.
//!
//! A trial is a pure function of `(config, trial_index)`: every random
//! stream is derived from the config seed and the trial index, so re-running
//! a trial reproduces its output byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comms::{AgentId, CommStats, Medium};
use crate::geom::Vec2;
use crate::metrics::{
    complexity, disparity, heterogeneity, mean_knowledge_score, DistanceMatrix, SpeciesCensus,
    LEVELS,
};

use super::{
    Arena, Robot, RobotType, SimError, SimMode, Target, TargetState, TargetColor, World,
    WorldParams,
};

/// Robots per unit area may not exceed the reference density of 40 robots
/// in a 1000 x 1000 arena.
pub const DENSITY_CAP: f64 = 40.0 / 1_000_000.0;

/// Metrics are sampled every this many ticks (plus the final tick of a
/// trial that stops early).
pub const SAMPLE_INTERVAL: u64 = 100;

const PLACEMENT_ATTEMPTS: u32 = 10_000;

/// Robot counts per prior-knowledge class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Composition {
    pub ignorant: u32,
    pub multi: u32,
    pub red: u32,
    pub green: u32,
    pub yellow: u32,
    pub blue: u32,
}

impl Composition {
    pub fn new(counts: [u32; 6]) -> Composition {
        Composition {
            ignorant: counts[0],
            multi: counts[1],
            red: counts[2],
            green: counts[3],
            yellow: counts[4],
            blue: counts[5],
        }
    }

    pub fn counts(&self) -> [u32; 6] {
        [
            self.ignorant,
            self.multi,
            self.red,
            self.green,
            self.yellow,
            self.blue,
        ]
    }

    pub fn total(&self) -> u32 {
        self.counts().iter().sum()
    }

    /// Robot types in id order: ignorant, multi, then one class per color.
    pub fn expand(&self) -> Vec<RobotType> {
        let classes = [
            (RobotType::Ignorant, self.ignorant),
            (RobotType::Multi, self.multi),
            (RobotType::Red, self.red),
            (RobotType::Green, self.green),
            (RobotType::Yellow, self.yellow),
            (RobotType::Blue, self.blue),
        ];
        let mut types = Vec::with_capacity(self.total() as usize);
        for (robot_type, count) in classes {
            for _ in 0..count {
                types.push(robot_type);
            }
        }
        types
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: SimMode,
    pub composition: Composition,
    /// Targets per color: red, green, yellow, blue.
    pub target_counts: [u32; 4],
    pub d_coms: f64,
    pub obstacles: bool,
    pub iterations: u64,
    pub trials: u32,
    pub seed: u64,
    pub arena: (f64, f64),
    pub speed: f64,
    pub d_t: f64,
    pub d_c: f64,
    pub t1_limit: u64,
    pub t2_limit: u64,
    pub pickup_radius: f64,
    pub walk_duration: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: SimMode::KtBt,
            composition: Composition::new([0, 0, 10, 10, 10, 10]),
            target_counts: [25; 4],
            d_coms: 200.0,
            obstacles: false,
            iterations: 50_000,
            trials: 20,
            seed: 1,
            arena: (1000.0, 1000.0),
            speed: 1.0,
            d_t: 30.0,
            d_c: 4.0,
            t1_limit: 50,
            t2_limit: 100,
            pickup_radius: 3.0,
            walk_duration: 60,
        }
    }
}

impl SimConfig {
    pub fn n_targets(&self) -> u32 {
        self.target_counts.iter().sum()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let (w, h) = self.arena;
        if !(w > 0.0 && h > 0.0) {
            return Err(SimError::InvalidConfig("arena dimensions must be positive".into()));
        }
        if self.speed <= 0.0 {
            return Err(SimError::InvalidConfig("speed must be positive".into()));
        }
        let cap = (w * h * DENSITY_CAP).floor() as u32;
        if self.composition.total() > cap {
            return Err(SimError::InvalidConfig(format!(
                "{} robots exceed the density cap of {} for a {w} x {h} arena",
                self.composition.total(),
                cap
            )));
        }
        if self.d_coms < 0.0 || self.d_t < 0.0 || self.d_c < 0.0 {
            return Err(SimError::InvalidConfig("ranges must be nonnegative".into()));
        }
        Ok(())
    }

    fn world_params(&self) -> WorldParams {
        WorldParams {
            speed: self.speed,
            d_t: self.d_t,
            d_c: self.d_c,
            pickup_radius: self.pickup_radius,
            walk_duration: self.walk_duration,
            mode: self.mode,
        }
    }
}

/// One sampled line of the trial time series; also the CSV row schema.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub tick: u64,
    pub collected_pct: f64,
    pub knows: [u64; LEVELS],
    pub complexity: f64,
    pub disparity: f64,
    pub heterogeneity: f64,
    pub knowledge_score: f64,
    pub queries_sent: u64,
    pub queries_lost: u64,
    pub responses_sent: u64,
}

impl MetricsRow {
    pub const CSV_HEADER: &'static str = "tick,collected_pct,knows0,knows1,knows2,knows3,knows4,\
         complexity,disparity,heterogeneity,knowledge_score,queries_sent,queries_lost,responses_sent";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.4},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.tick,
            self.collected_pct,
            self.knows[0],
            self.knows[1],
            self.knows[2],
            self.knows[3],
            self.knows[4],
            self.complexity,
            self.disparity,
            self.heterogeneity,
            self.knowledge_score,
            self.queries_sent,
            self.queries_lost,
            self.responses_sent,
        )
    }
}

/// Everything a trial reports: the sampled series, terminal summary, and
/// communication counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub rows: Vec<MetricsRow>,
    /// First tick at which at least 99% of targets were collected.
    pub iterations_to_99: Option<u64>,
    pub ticks_run: u64,
    pub final_census: [u64; LEVELS],
    pub final_knowledge_score: f64,
    pub final_collected_pct: f64,
    pub stats: CommStats,
    pub n_targets: u32,
}

impl TrialResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MetricsRow::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Independent random stream per (seed, trial, purpose).
fn stream_rng(seed: u64, trial_index: u32, stream: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..12].copy_from_slice(&trial_index.to_le_bytes());
    bytes[12..20].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

const PLACEMENT_STREAM: u64 = u64::MAX;

fn place_uniform(
    rng: &mut ChaCha8Rng,
    arena: &Arena,
    what: &'static str,
) -> Result<Vec2, SimError> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = Vec2::new(
            rng.random_range(0.0..arena.width),
            rng.random_range(0.0..arena.height),
        );
        if !arena.in_any_zone(p) && !arena.in_obstacle(p) {
            return Ok(p);
        }
    }
    Err(SimError::Placement(what, PLACEMENT_ATTEMPTS))
}

/// Builds the world for `(config, trial_index)`: targets and robots placed
/// uniformly at random outside zones and obstacles, per-robot RNG streams.
pub fn build_world(config: &SimConfig, trial_index: u32) -> Result<World, SimError> {
    config.validate()?;
    let arena = Arena::new(config.arena.0, config.arena.1, config.obstacles);
    let mut place_rng = stream_rng(config.seed, trial_index, PLACEMENT_STREAM);

    let mut targets = Vec::new();
    for (ci, &count) in config.target_counts.iter().enumerate() {
        for _ in 0..count {
            targets.push(Target {
                color: TargetColor::ALL[ci],
                position: place_uniform(&mut place_rng, &arena, "target")?,
                state: TargetState::OnGround,
            });
        }
    }

    let mut robots = Vec::new();
    for (id, robot_type) in config.composition.expand().into_iter().enumerate() {
        let position = place_uniform(&mut place_rng, &arena, "robot")?;
        robots.push(Robot::new(
            AgentId(id),
            robot_type,
            position,
            stream_rng(config.seed, trial_index, id as u64),
            config.t1_limit,
            config.t2_limit,
        ));
    }

    Ok(World::new(
        arena,
        targets,
        robots,
        Medium::new(config.d_coms),
        config.world_params(),
    ))
}

fn sample_row(world: &World, n_targets: u32) -> MetricsRow {
    let dm = DistanceMatrix::by_level_gap();
    let levels: Vec<usize> = world.robots.iter().map(|r| r.colors_known()).collect();
    let census = SpeciesCensus::from_levels(levels.iter().copied());
    let populated = !world.robots.is_empty();
    let collected_pct = if n_targets == 0 {
        100.0
    } else {
        100.0 * world.collected() as f64 / n_targets as f64
    };
    MetricsRow {
        tick: world.tick,
        collected_pct,
        knows: *census.counts(),
        complexity: if populated { complexity(&census).unwrap() } else { 0.0 },
        disparity: if populated { disparity(&census, &dm).unwrap() } else { 0.0 },
        heterogeneity: if populated { heterogeneity(&census, &dm).unwrap() } else { 0.0 },
        knowledge_score: if populated {
            mean_knowledge_score(&levels).unwrap()
        } else {
            0.0
        },
        queries_sent: world.medium.stats.queries_sent,
        queries_lost: world.medium.stats.queries_lost,
        responses_sent: world.medium.stats.responses_sent,
    }
}

/// Runs one seeded trial to `iterations` ticks or until every target is
/// collected, sampling the metrics series along the way.
pub fn run_trial(config: &SimConfig, trial_index: u32) -> Result<TrialResult, SimError> {
    let mut world = build_world(config, trial_index)?;
    let n_targets = config.n_targets();
    let needed_for_99 = ((0.99 * n_targets as f64).ceil() as usize).max(1);

    let mut rows = vec![sample_row(&world, n_targets)];
    let mut iterations_to_99 = None;

    for _ in 0..config.iterations {
        world.step()?;
        let collected = world.collected();
        if iterations_to_99.is_none() && n_targets > 0 && collected >= needed_for_99 {
            iterations_to_99 = Some(world.tick);
        }
        let sampled = world.tick % SAMPLE_INTERVAL == 0;
        if sampled {
            rows.push(sample_row(&world, n_targets));
        }
        if n_targets > 0 && collected == n_targets as usize {
            if !sampled {
                rows.push(sample_row(&world, n_targets));
            }
            break;
        }
    }

    let final_row = rows.last().expect("at least the initial sample");
    Ok(TrialResult {
        iterations_to_99,
        ticks_run: world.tick,
        final_census: final_row.knows,
        final_knowledge_score: final_row.knowledge_score,
        final_collected_pct: final_row.collected_pct,
        stats: world.medium.stats,
        n_targets,
        rows,
    })
}
