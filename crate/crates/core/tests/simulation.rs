use geochart_core::csi::{cir_distance, preprocess, required_width};
use geochart_core::geom::{Point2, Segment};
use geochart_core::rng::{stream, Purpose};
use geochart_core::sim::*;
use geochart_core::SPEED_OF_LIGHT;
use rand::Rng;

fn at(points: &[Point2]) -> Vec<TrajectoryPoint> {
    points
        .iter()
        .enumerate()
        .map(|(i, &position)| TrajectoryPoint { position, timestamp: i as f64 })
        .collect()
}

fn walk(env: &EnvironmentSpec, n: usize, seed: u64) -> Vec<TrajectoryPoint> {
    let spec = TrajectorySpec::RandomWaypoint { n, speed: 1.5, dt: 0.2, margin: 0.5 };
    generate_trajectory(env, &spec, &mut stream(seed, Purpose::Trajectory, 0)).unwrap()
}

#[test]
fn grid_over_ten_metre_square_has_121_points() {
    let env = EnvironmentSpec::open_area(10.0, 10.0);
    let spec = TrajectorySpec::Grid { spacing: 1.0, dt: 0.1, margin: 0.0 };
    let traj = generate_trajectory(&env, &spec, &mut stream(0, Purpose::Trajectory, 0)).unwrap();
    assert_eq!(traj.len(), 121);
    let radio = RadioConfig::default().noiseless();
    let ds = generate_dataset(&env, &radio, &traj, 1).unwrap();
    assert_eq!(ds.len(), 121);
    assert!(ds.snapshots.iter().all(|s| s.cirs.len() == 6 * radio.cir_length));
}

#[test]
fn hall_dataset_is_bit_identical_across_runs() {
    let env = EnvironmentSpec::industrial_hall();
    let radio = RadioConfig::default();
    let traj = walk(&env, 80, 3);
    let a = generate_dataset(&env, &radio, &traj, 9).unwrap();
    let b = generate_dataset(&env, &radio, &walk(&env, 80, 3), 9).unwrap();
    assert_eq!(a, b);
    let c = generate_dataset(&env, &radio, &traj, 10).unwrap();
    assert_ne!(a.snapshots, c.snapshots);
}

#[test]
fn hall_has_both_los_and_blocked_links() {
    let env = EnvironmentSpec::industrial_hall();
    let traj = walk(&env, 400, 1);
    let (mut blocked, mut total) = (0usize, 0usize);
    for p in &traj {
        for s in &env.base_stations {
            blocked += usize::from(env.occluded(p.position, s.position, [None, None]));
            total += 1;
        }
    }
    let frac = blocked as f64 / total as f64;
    assert!(frac > 0.1 && frac < 0.6, "blocked fraction {frac}");
}

#[test]
fn noiseless_flight_times_match_geometry() {
    let env = EnvironmentSpec::open_area(20.0, 20.0);
    let radio = RadioConfig::default().noiseless();
    let traj = walk(&env, 50, 2);
    let ds = generate_dataset(&env, &radio, &traj, 4).unwrap();
    for s in &ds.snapshots {
        for (k, bs) in env.base_stations.iter().enumerate() {
            let d = s.measured_toa[k].unwrap() * SPEED_OF_LIGHT;
            assert!((d - s.position.distance(bs.position)).abs() < 1e-9);
        }
    }
}

#[test]
fn tdoa_reference_is_the_earliest_station() {
    let env = EnvironmentSpec::industrial_hall();
    let radio = RadioConfig { mode: MeasurementMode::Tdoa, ..RadioConfig::default() };
    let ds = generate_dataset(&env, &radio, &walk(&env, 60, 5), 6).unwrap();
    for s in &ds.snapshots {
        let toa: Vec<f64> = s.measured_toa.iter().flatten().copied().collect();
        assert_eq!(toa.iter().filter(|&&t| t == 0.0).count(), 1);
        assert!(toa.iter().all(|&t| t >= 0.0));
    }
}

#[test]
fn walls_keep_the_direct_path_unless_blocked() {
    let mut env = EnvironmentSpec::open_area(20.0, 20.0);
    let radio = RadioConfig::default().noiseless();
    let pos = Point2::new(9.0, 11.0);
    let mut rng = stream(0, Purpose::Study, 0);
    let direct: Vec<f64> = multipath(&env, &radio, pos, &mut rng)
        .unwrap()
        .iter()
        .map(|m| m.first_delay().unwrap())
        .collect();
    env.walls.push(Wall::reflective(Point2::new(0.5, 12.0), Point2::new(0.5, 16.0)));
    env.walls.push(Wall::reflective(Point2::new(0.0, 0.0), Point2::new(20.0, 0.0)));
    for (m, d) in multipath(&env, &radio, pos, &mut rng).unwrap().iter().zip(&direct) {
        assert_eq!(m.first_delay(), Some(*d));
    }
    let s0 = env.base_stations[0].position;
    env.blockers.push(Segment::new(
        Point2::new(0.5 * (pos.x + s0.x) - 0.5, 0.5 * (pos.y + s0.y) + 0.5),
        Point2::new(0.5 * (pos.x + s0.x) + 0.5, 0.5 * (pos.y + s0.y) - 0.5),
    ));
    let blocked = multipath(&env, &radio, pos, &mut rng).unwrap();
    assert!(blocked[0].first_delay().map_or(true, |d| d > direct[0]));
}

#[test]
fn single_path_snapshots_are_insensitive_to_fading() {
    let env = EnvironmentSpec::open_area(20.0, 20.0);
    let radio = RadioConfig { max_reflection_order: 0, ..RadioConfig::default().noiseless() };
    let mut rng = stream(7, Purpose::Study, 0);
    let mut points = Vec::new();
    for _ in 0..100 {
        let p = Point2::new(rng.random_range(1.0..19.0), rng.random_range(1.0..19.0));
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        points.extend([p, p, Point2::new(p.x + a.cos(), p.y + a.sin())]);
    }
    let ds = generate_dataset(&env, &radio, &at(&points), 8).unwrap();
    let w = required_width(&ds.snapshots, radio.sample_rate);
    let t: Vec<_> = ds.snapshots.iter().map(|s| preprocess(s, &radio, w).unwrap()).collect();
    let mut one_metre = 0.0;
    for c in t.chunks(3) {
        assert_eq!(cir_distance(&c[0], &c[1]).unwrap(), 0.0);
        one_metre += cir_distance(&c[0], &c[2]).unwrap();
    }
    assert!(one_metre > 0.0);
}
