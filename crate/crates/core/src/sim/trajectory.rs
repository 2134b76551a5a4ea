use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::math;
use crate::sim::EnvironmentSpec;
use crate::{Error, Result};

/// Minimum distance kept between trajectory points and any wall or blocker.
pub const MIN_CLEARANCE: f64 = 0.05;

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub position: Point2,
    pub timestamp: f64,
}

/// How positions are laid out. `margin` shrinks the usable area on every side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectorySpec {
    /// Serpentine raster scan with the given spacing.
    Grid {
        spacing: f64,
        dt: f64,
        #[serde(default)]
        margin: f64,
    },
    /// Straight-line walks at constant speed between random reachable waypoints.
    RandomWaypoint {
        n: usize,
        speed: f64,
        dt: f64,
        #[serde(default)]
        margin: f64,
    },
    /// Independent uniform positions; only useful for metric studies.
    Uniform {
        n: usize,
        dt: f64,
        #[serde(default)]
        margin: f64,
    },
}

pub fn generate_trajectory<R: Rng + ?Sized>(env: &EnvironmentSpec, spec: &TrajectorySpec, rng: &mut R) -> Result<Vec<TrajectoryPoint>> {
    let positions = match *spec {
        TrajectorySpec::Grid { spacing, dt, margin } => {
            check_time(dt)?;
            grid(env, spacing, margin)?
        }
        TrajectorySpec::RandomWaypoint { n, speed, dt, margin } => {
            check_time(dt)?;
            if !(speed > 0.0 && speed.is_finite()) {
                return Err(Error::Trajectory(format!("speed must be positive, got {speed}")));
            }
            random_waypoint(env, n, speed * dt, margin, rng)?
        }
        TrajectorySpec::Uniform { n, dt, margin } => {
            check_time(dt)?;
            check_count(n)?;
            (0..n).map(|_| sample_clear(env, margin, rng)).collect::<Result<_>>()?
        }
    };
    let dt = match *spec {
        TrajectorySpec::Grid { dt, .. } | TrajectorySpec::RandomWaypoint { dt, .. } | TrajectorySpec::Uniform { dt, .. } => dt,
    };
    Ok(positions
        .into_iter()
        .enumerate()
        .map(|(i, position)| TrajectoryPoint { position, timestamp: i as f64 * dt })
        .collect())
}

fn check_time(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Trajectory(format!("dt must be positive, got {dt}")))
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Trajectory("need at least one point".into()))
    } else {
        Ok(())
    }
}

fn usable(env: &EnvironmentSpec, margin: f64) -> Result<(Point2, Point2)> {
    let lo = Point2::new(env.bounds.min.x + margin, env.bounds.min.y + margin);
    let hi = Point2::new(env.bounds.max.x - margin, env.bounds.max.y - margin);
    if !(margin >= 0.0) || lo.x > hi.x || lo.y > hi.y {
        return Err(Error::Trajectory(format!("margin {margin} leaves no usable area")));
    }
    Ok((lo, hi))
}

fn grid(env: &EnvironmentSpec, spacing: f64, margin: f64) -> Result<Vec<Point2>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Trajectory(format!("grid spacing must be positive, got {spacing}")));
    }
    let (lo, hi) = usable(env, margin)?;
    let count = |span: f64| math::floor(span / spacing + 1e-9) as usize + 1;
    let (nx, ny) = (count(hi.x - lo.x), count(hi.y - lo.y));
    let mut out = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        for col in 0..nx {
            let col = if row % 2 == 0 { col } else { nx - 1 - col };
            let p = Point2::new(lo.x + col as f64 * spacing, lo.y + row as f64 * spacing);
            if env.clearance(p) >= MIN_CLEARANCE {
                out.push(p);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Trajectory("grid has no point clear of obstacles".into()));
    }
    Ok(out)
}

fn sample_clear<R: Rng + ?Sized>(env: &EnvironmentSpec, margin: f64, rng: &mut R) -> Result<Point2> {
    let (lo, hi) = usable(env, margin)?;
    for _ in 0..MAX_ATTEMPTS {
        let p = Point2::new(lo.x + rng.random::<f64>() * (hi.x - lo.x), lo.y + rng.random::<f64>() * (hi.y - lo.y));
        if env.clearance(p) >= MIN_CLEARANCE {
            return Ok(p);
        }
    }
    Err(Error::Trajectory("could not sample a position clear of obstacles".into()))
}

fn reachable(env: &EnvironmentSpec, a: Point2, b: Point2) -> bool {
    env.obstacles().all(|(_, s)| s.distance_to_segment(a, b) >= MIN_CLEARANCE)
}

fn random_waypoint<R: Rng + ?Sized>(env: &EnvironmentSpec, n: usize, step: f64, margin: f64, rng: &mut R) -> Result<Vec<Point2>> {
    check_count(n)?;
    let mut cur = sample_clear(env, margin, rng)?;
    let mut out = Vec::with_capacity(n);
    out.push(cur);
    let mut target = cur;
    while out.len() < n {
        if cur == target {
            let mut found = false;
            for _ in 0..MAX_ATTEMPTS {
                let t = sample_clear(env, margin, rng)?;
                if t != cur && reachable(env, cur, t) {
                    target = t;
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::Trajectory(format!("no reachable waypoint from ({:.3}, {:.3})", cur.x, cur.y)));
            }
        }
        let d = cur.distance(target);
        cur = if d <= step { target } else { cur + (target - cur) * (step / d) };
        out.push(cur);
    }
    Ok(out)
}
