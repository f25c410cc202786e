// temp probe: contention resolution time distribution
use ktbt::comms::AgentId;
use ktbt::geom::Vec2;
use ktbt::sim::*;
use ktbt::comms::Medium;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut times = Vec::new();
    for seed in 0..30u64 {
        let robots = vec![
            Robot::new(AgentId(0), RobotType::Multi, Vec2::new(180.0, 200.0), ChaCha8Rng::seed_from_u64(seed*2), 50, 100),
            Robot::new(AgentId(1), RobotType::Multi, Vec2::new(220.0, 200.0), ChaCha8Rng::seed_from_u64(seed*2+1), 50, 100),
        ];
        let targets = vec![Target { color: TargetColor::Red, position: Vec2::new(200.0, 200.0), state: TargetState::OnGround }];
        let mut world = World::new(Arena::new(400.0, 400.0, false), targets, robots, Medium::new(1000.0), WorldParams::default());
        let mut resolved = None;
        for t in 0..20000 {
            world.step().unwrap();
            if world.robots.iter().any(|r| r.body.carried.is_some()) { resolved = Some(t); break; }
        }
        times.push(resolved);
    }
    let solved: Vec<u64> = times.iter().flatten().copied().collect();
    println!("resolved {}/30, times: {:?}", solved.len(), solved);
}
