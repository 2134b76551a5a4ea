use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Point2;
use crate::sim::{EnvironmentSpec, RadioConfig};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// A virtual transmitter obtained by mirroring a station across a sequence
/// of reflective walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub position: Point2,
    pub order: usize,
    /// Wall indices in mirroring order (station side first).
    pub walls: Vec<usize>,
}

/// Geometry of one valid propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    /// Unfolded path length, meters.
    pub length: f64,
    pub order: usize,
    pub walls: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpc {
    /// Seconds.
    pub delay: f64,
    pub gain: Complex64,
}

/// The multipath components seen from one station, sorted by delay.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpcList {
    pub paths: Vec<Mpc>,
}

impl MpcList {
    pub fn new(mut paths: Vec<Mpc>) -> Self {
        paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        Self { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn first_delay(&self) -> Option<f64> {
        self.paths.first().map(|m| m.delay)
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        self.paths.iter().map(|m| m.delay)
    }
}

/// Image sources of station `bs_id` up to `max_order` reflections.
///
/// Consecutive reflections on the same wall are skipped since they map the
/// source back onto its parent. Validity of each image for a given receiver
/// is decided later by [`Tracer::paths`].
pub fn image_sources(env: &EnvironmentSpec, bs_id: u32, max_order: usize) -> Result<Vec<ImageSource>> {
    let station = env.base_stations[env.station_index(bs_id)?].position;
    let mut out = vec![ImageSource { position: station, order: 0, walls: Vec::new() }];
    let mut frontier = 0..1;
    for order in 1..=max_order {
        let start = out.len();
        for parent in frontier.clone() {
            for (w, wall) in env.walls.iter().enumerate() {
                if !wall.reflective || out[parent].walls.last() == Some(&w) {
                    continue;
                }
                let mut walls = out[parent].walls.clone();
                walls.push(w);
                let position = wall.segment.mirror(out[parent].position);
                out.push(ImageSource { position, order, walls });
            }
        }
        frontier = start..out.len();
    }
    Ok(out)
}

/// Precomputed image sources for every station of an environment.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    env: &'a EnvironmentSpec,
    images: Vec<Vec<ImageSource>>,
}

impl<'a> Tracer<'a> {
    pub fn new(env: &'a EnvironmentSpec, max_order: usize) -> Result<Self> {
        let images = env
            .base_stations
            .iter()
            .map(|s| image_sources(env, s.id, max_order))
            .collect::<Result<_>>()?;
        Ok(Self { env, images })
    }

    /// Valid paths from station `station` (index, not id) to `pos`, sorted by
    /// length with ties broken by wall sequence.
    pub fn paths(&self, station: usize, pos: Point2) -> Vec<PathGeometry> {
        let env = self.env;
        let bs = env.base_stations[station].position;
        let mut out = Vec::new();
        let mut points: Vec<(Point2, Option<usize>)> = Vec::new();
        'images: for image in &self.images[station] {
            // Walk back from the receiver, intersecting the ray toward each
            // image with the wall that generated it.
            points.clear();
            points.push((pos, None));
            let mut target = pos;
            let chain = self.chain(station, &image.walls);
            for (level, &w) in image.walls.iter().enumerate().rev() {
                let src = chain[level + 1];
                let Some((t, u)) = env.walls[w].segment.line_parameters(target, src) else {
                    continue 'images;
                };
                if !(t > 1e-9 && t < 1.0 - 1e-9 && (0.0..=1.0).contains(&u)) {
                    continue 'images;
                }
                target = target + (src - target) * t;
                points.push((target, Some(w)));
            }
            points.push((bs, None));
            for leg in points.windows(2) {
                let (p, wp) = leg[0];
                let (q, wq) = leg[1];
                if env.occluded(p, q, [wp, wq]) {
                    continue 'images;
                }
            }
            out.push(PathGeometry { length: image.position.distance(pos), order: image.order, walls: image.walls.clone() });
        }
        out.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.walls.cmp(&b.walls)));
        out
    }

    fn chain(&self, station: usize, walls: &[usize]) -> Vec<Point2> {
        let mut chain = Vec::with_capacity(walls.len() + 1);
        chain.push(self.env.base_stations[station].position);
        for &w in walls {
            let last = *chain.last().unwrap_or(&Point2::new(0.0, 0.0));
            chain.push(self.env.walls[w].segment.mirror(last));
        }
        chain
    }

    pub fn environment(&self) -> &'a EnvironmentSpec {
        self.env
    }
}

/// Turn path geometries into MPCs: delay `length / c`, amplitude
/// `loss^order / max(length, c / fs)` and a uniform random phase drawn per
/// path in list order. Paths with identical delays are merged.
pub fn mpcs_from_paths<R: Rng + ?Sized>(paths: &[PathGeometry], radio: &RadioConfig, rng: &mut R) -> MpcList {
    let floor = radio.sample_distance();
    let mut out: Vec<Mpc> = Vec::with_capacity(paths.len());
    for p in paths {
        let amp = pow_int(radio.reflection_loss, p.order) / p.length.max(floor);
        let phase = rng.random::<f64>() * core::f64::consts::TAU;
        let gain = Complex64::from_polar(amp, phase);
        let delay = p.length / SPEED_OF_LIGHT;
        match out.last_mut() {
            Some(last) if last.delay == delay => last.gain += gain,
            _ => out.push(Mpc { delay, gain }),
        }
    }
    MpcList { paths: out }
}

fn pow_int(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

/// Multipath components from every station (in environment order) to `pos`.
pub fn multipath<R: Rng + ?Sized>(env: &EnvironmentSpec, radio: &RadioConfig, pos: Point2, rng: &mut R) -> Result<Vec<MpcList>> {
    if !env.bounds.contains(pos) || !pos.is_finite() {
        return Err(Error::OutOfBounds { x: pos.x, y: pos.y });
    }
    let tracer = Tracer::new(env, radio.max_reflection_order)?;
    Ok((0..env.base_stations.len())
        .map(|k| mpcs_from_paths(&tracer.paths(k, pos), radio, rng))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Rect, Segment};
    use crate::sim::{BaseStation, Wall};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn room(walls: Vec<Wall>, bs: Point2) -> EnvironmentSpec {
        EnvironmentSpec {
            bounds: Rect::new(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0)),
            walls,
            base_stations: vec![BaseStation { id: 7, position: bs }, BaseStation { id: 9, position: Point2::new(5.0, 5.0) }],
            blockers: Vec::new(),
        }
    }

    fn floor_wall() -> Wall {
        Wall::reflective(Point2::new(-10.0, 0.0), Point2::new(10.0, 0.0))
    }

    #[test]
    fn order_zero_is_the_station() {
        let env = room(vec![floor_wall()], Point2::new(1.0, 2.0));
        let s = image_sources(&env, 7, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].position, Point2::new(1.0, 2.0));
    }

    #[test]
    fn single_wall_mirror() {
        let env = room(vec![floor_wall()], Point2::new(1.0, 2.0));
        let s = image_sources(&env, 7, 1).unwrap();
        assert!(s.iter().any(|i| i.order == 1 && i.position == Point2::new(1.0, -2.0)));
    }

    #[test]
    fn unknown_station() {
        let env = room(vec![], Point2::new(1.0, 2.0));
        assert!(matches!(image_sources(&env, 3, 1), Err(Error::UnknownStation(3))));
    }

    #[test]
    fn perpendicular_walls_match_enumeration() {
        let walls = vec![floor_wall(), Wall::reflective(Point2::new(-5.0, -10.0), Point2::new(-5.0, 10.0))];
        let bs = Point2::new(1.0, 2.0);
        let env = room(walls.clone(), bs);
        let got = image_sources(&env, 7, 2).unwrap();
        // Every wall sequence of length <= 2 without immediate repeats.
        let mut want: Vec<(Vec<usize>, Point2)> = vec![(vec![], bs)];
        for a in 0..2 {
            want.push((vec![a], walls[a].segment.mirror(bs)));
            for b in 0..2 {
                if a != b {
                    want.push((vec![a, b], walls[b].segment.mirror(walls[a].segment.mirror(bs))));
                }
            }
        }
        assert_eq!(got.len(), want.len());
        for (seq, p) in want {
            let hit = got.iter().find(|i| i.walls == seq).expect("sequence missing");
            assert!(hit.position.distance(p) < 1e-12);
            assert_eq!(hit.order, seq.len());
        }
    }

    #[test]
    fn open_area_single_los() {
        let mut env = room(vec![], Point2::new(0.0, 0.0));
        env.base_stations.truncate(1);
        env.base_stations.push(BaseStation { id: 1, position: Point2::new(9.0, 9.0) });
        let radio = RadioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = multipath(&env, &radio, Point2::new(3.0, 0.0), &mut rng).unwrap();
        assert_eq!(m[0].len(), 1);
        assert!((m[0].paths[0].delay - 3.0 / SPEED_OF_LIGHT).abs() < 1e-20);
        assert!((m[0].paths[0].gain.norm() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_position_clamps_distance() {
        let env = room(vec![], Point2::new(0.0, 0.0));
        let radio = RadioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = multipath(&env, &radio, Point2::new(0.0, 0.0), &mut rng).unwrap();
        assert_eq!(m[0].paths[0].delay, 0.0);
        assert!((m[0].paths[0].gain.norm() - 1.0 / radio.sample_distance()).abs() < 1e-12);
    }

    #[test]
    fn single_mirror_wall_two_paths() {
        let env = room(vec![floor_wall()], Point2::new(1.0, 2.0));
        let radio = RadioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = Point2::new(4.0, 2.0);
        let m = multipath(&env, &radio, pos, &mut rng).unwrap();
        assert_eq!(m[0].len(), 2);
        // Direct 3 m; reflected via (2.5, 0): 2 * sqrt(1.5^2 + 2^2) = 5 m.
        assert!((m[0].paths[0].delay * SPEED_OF_LIGHT - 3.0).abs() < 1e-9);
        assert!((m[0].paths[1].delay * SPEED_OF_LIGHT - 5.0).abs() < 1e-9);
        assert!((m[0].paths[1].gain.norm() - 0.7 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_outside_wall_extent_is_invalid() {
        let short = Wall::reflective(Point2::new(8.0, 0.0), Point2::new(9.0, 0.0));
        let env = room(vec![short], Point2::new(1.0, 2.0));
        let radio = RadioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = multipath(&env, &radio, Point2::new(4.0, 2.0), &mut rng).unwrap();
        assert_eq!(m[0].len(), 1);
    }

    #[test]
    fn blocker_removes_los_only() {
        let mut env = room(vec![floor_wall()], Point2::new(1.0, 2.0));
        env.blockers.push(Segment::new(Point2::new(2.5, 1.5), Point2::new(2.5, 3.0)));
        let tracer = Tracer::new(&env, 1).unwrap();
        let paths = tracer.paths(0, Point2::new(4.0, 2.0));
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].order, 1);
    }

    #[test]
    fn out_of_bounds_position() {
        let env = room(vec![], Point2::new(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = multipath(&env, &RadioConfig::default(), Point2::new(11.0, 0.0), &mut rng);
        assert!(matches!(r, Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn second_order_corner_path() {
        // Corner reflector: two reflections give the point mirrored twice.
        let walls = vec![floor_wall(), Wall::reflective(Point2::new(-5.0, -10.0), Point2::new(-5.0, 10.0))];
        let env = room(walls, Point2::new(-3.0, 1.0));
        let tracer = Tracer::new(&env, 2).unwrap();
        let pos = Point2::new(-2.0, 3.0);
        let paths = tracer.paths(0, pos);
        let corner = Point2::new(-7.0, -1.0);
        assert!(paths.iter().any(|p| p.order == 2 && (p.length - corner.distance(pos)).abs() < 1e-9));
    }

    proptest::proptest! {
        #[test]
        fn walls_never_remove_unblocked_los(x in -9.0f64..9.0, y in 0.5f64..9.0, wx in -9.0f64..9.0) {
            let env = room(vec![floor_wall(), Wall::reflective(Point2::new(wx, -10.0), Point2::new(wx, -1.0))], Point2::new(1.0, 2.0));
            let tracer = Tracer::new(&env, 2).unwrap();
            let paths = tracer.paths(0, Point2::new(x, y));
            proptest::prop_assert!(paths.iter().any(|p| p.order == 0));
            proptest::prop_assert!((paths[0].length - Point2::new(x, y).distance(Point2::new(1.0, 2.0))).abs() < 1e-12);
        }
    }
}
