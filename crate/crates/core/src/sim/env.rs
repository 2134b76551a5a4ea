use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geom::{Point2, Rect, Segment};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub segment: Segment,
    pub reflective: bool,
}

impl Wall {
    pub fn reflective(a: Point2, b: Point2) -> Self {
        Self { segment: Segment::new(a, b), reflective: true }
    }

    pub fn absorbing(a: Point2, b: Point2) -> Self {
        Self { segment: Segment::new(a, b), reflective: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub position: Point2,
}

/// Static description of the radio environment.
///
/// Walls and blockers both stop any ray that crosses them. Only reflective
/// walls spawn image sources; blockers never reflect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub bounds: Rect,
    #[serde(default)]
    pub walls: Vec<Wall>,
    pub base_stations: Vec<BaseStation>,
    #[serde(default)]
    pub blockers: Vec<Segment>,
}

impl EnvironmentSpec {
    /// Six stations on a hexagon of radius `0.475 · min(width, height)`
    /// centred in the rectangle.
    pub fn hexagon_stations(bounds: Rect) -> Vec<BaseStation> {
        let cx = 0.5 * (bounds.min.x + bounds.max.x);
        let cy = 0.5 * (bounds.min.y + bounds.max.y);
        let r = 0.475 * bounds.width().min(bounds.height());
        (0..6)
            .map(|k| {
                let a = core::f64::consts::FRAC_PI_6 + k as f64 * core::f64::consts::FRAC_PI_3;
                BaseStation {
                    id: k,
                    position: Point2::new(cx + r * crate::math::cos(a), cy + r * crate::math::sin(a)),
                }
            })
            .collect()
    }

    /// Empty area with six hexagonally placed stations: every station sees
    /// exactly its LoS path.
    pub fn open_area(width: f64, height: f64) -> Self {
        let bounds = Rect::new(Point2::new(0.0, 0.0), Point2::new(width, height));
        Self {
            bounds,
            walls: Vec::new(),
            base_stations: Self::hexagon_stations(bounds),
            blockers: Vec::new(),
        }
    }

    /// 20 m × 20 m hall with reflective outer walls, two reflective partitions
    /// and two shelves that block line of sight.
    pub fn industrial_hall() -> Self {
        let p = Point2::new;
        let bounds = Rect::new(p(0.0, 0.0), p(20.0, 20.0));
        let walls = alloc::vec![
            Wall::reflective(p(0.0, 0.0), p(20.0, 0.0)),
            Wall::reflective(p(20.0, 0.0), p(20.0, 20.0)),
            Wall::reflective(p(20.0, 20.0), p(0.0, 20.0)),
            Wall::reflective(p(0.0, 20.0), p(0.0, 0.0)),
            Wall::reflective(p(6.0, 14.0), p(10.0, 14.0)),
            Wall::reflective(p(14.0, 5.0), p(14.0, 9.0)),
        ];
        let blockers = alloc::vec![
            Segment::new(p(5.0, 5.0), p(7.5, 5.0)),
            Segment::new(p(12.0, 12.0), p(12.0, 15.0)),
        ];
        Self {
            bounds,
            walls,
            base_stations: Self::hexagon_stations(bounds),
            blockers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) || !b.min.is_finite() || !b.max.is_finite() {
            return Err(Error::InvalidEnvironment(format!("degenerate bounds {b:?}")));
        }
        if self.base_stations.len() < 2 {
            return Err(Error::InvalidEnvironment(format!(
                "need at least 2 base stations, have {}",
                self.base_stations.len()
            )));
        }
        for (i, s) in self.base_stations.iter().enumerate() {
            if !b.contains(s.position) {
                return Err(Error::InvalidEnvironment(format!("base station {} outside bounds", s.id)));
            }
            if self.base_stations[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::InvalidEnvironment(format!("duplicate base station id {}", s.id)));
            }
        }
        let segments = self.walls.iter().map(|w| (&w.segment, "wall")).chain(self.blockers.iter().map(|s| (s, "blocker")));
        for (i, (s, what)) in segments.enumerate() {
            if !(s.length() > 0.0) {
                return Err(Error::InvalidEnvironment(format!("{what} {i} has zero length")));
            }
            if !b.contains(s.a) || !b.contains(s.b) {
                return Err(Error::InvalidEnvironment(format!("{what} {i} outside bounds")));
            }
        }
        Ok(())
    }

    pub fn station_index(&self, id: u32) -> Result<usize> {
        self.base_stations.iter().position(|s| s.id == id).ok_or(Error::UnknownStation(id))
    }

    /// All ray-stopping segments with the wall index they belong to, if any.
    pub(crate) fn obstacles(&self) -> impl Iterator<Item = (Option<usize>, &Segment)> {
        self.walls
            .iter()
            .enumerate()
            .map(|(i, w)| (Some(i), &w.segment))
            .chain(self.blockers.iter().map(|s| (None, s)))
    }

    /// Whether the segment `p`–`q` crosses a wall or blocker. Walls listed in
    /// `skip` are ignored (the leg starts or ends on them).
    pub fn occluded(&self, p: Point2, q: Point2, skip: [Option<usize>; 2]) -> bool {
        self.obstacles()
            .any(|(wall, s)| (wall.is_none() || !skip.contains(&wall)) && s.blocks(p, q))
    }

    /// Distance from `p` to the nearest wall or blocker.
    pub fn clearance(&self, p: Point2) -> f64 {
        self.obstacles().map(|(_, s)| s.distance_to_point(p)).fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        EnvironmentSpec::industrial_hall().validate().unwrap();
        EnvironmentSpec::open_area(20.0, 20.0).validate().unwrap();
    }

    #[test]
    fn rejects_single_station() {
        let mut env = EnvironmentSpec::open_area(10.0, 10.0);
        env.base_stations.truncate(1);
        assert!(matches!(env.validate(), Err(Error::InvalidEnvironment(_))));
    }

    #[test]
    fn rejects_zero_length_wall_and_outside_station() {
        let mut env = EnvironmentSpec::open_area(10.0, 10.0);
        env.walls.push(Wall::reflective(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)));
        assert!(env.validate().is_err());
        let mut env = EnvironmentSpec::open_area(10.0, 10.0);
        env.base_stations[0].position = Point2::new(11.0, 5.0);
        assert!(env.validate().is_err());
    }

    #[test]
    fn blockers_occlude() {
        let env = EnvironmentSpec::industrial_hall();
        assert!(env.occluded(Point2::new(6.0, 4.0), Point2::new(6.0, 6.0), [None, None]));
        assert!(!env.occluded(Point2::new(2.0, 4.0), Point2::new(2.0, 6.0), [None, None]));
    }
}
