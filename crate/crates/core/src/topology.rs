//! Physical network: helper placement on a hexagonal grid, Poisson user
//! placement and the broadcast/collision reachability predicates.
//!
//! Helpers and users are addressed by 0-based indices internally; anything
//! rendered for people (codeword text, CSV, traces) uses `h1`, `u1`, ...
//!
//! Distances compare with `<=` on both radii: a user exactly at `r_trans`
//! can decode, a user exactly at `r_inter` is interfered with. Ties have
//! probability zero under Poisson placement.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, SimRng, Stream};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("transmission radius must be positive, got {0}")]
    BadTransmissionRadius(f64),
    #[error("interference radius {r_inter} is smaller than transmission radius {r_trans}")]
    InterferenceBelowTransmission { r_trans: f64, r_inter: f64 },
    #[error("non-finite coordinate in topology")]
    NonFinite,
    #[error("helper h{} is not active in the pattern", .0 + 1)]
    InactiveHelper(usize),
    #[error("pattern has {got} entries, topology has {expected} helpers")]
    PatternLength { expected: usize, got: usize },
    #[error("reading topology: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing topology: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2D> for [f64; 2] {
    fn from(p: Point2D) -> Self {
        [p.x, p.y]
    }
}

/// Helper and user positions plus the two radii of the collision model.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "RawTopology")]
pub struct Topology {
    helpers: Vec<Point2D>,
    users: Vec<Point2D>,
    r_trans: f64,
    r_inter: f64,
}

#[derive(Deserialize)]
struct RawTopology {
    helpers: Vec<Point2D>,
    users: Vec<Point2D>,
    r_trans: f64,
    r_inter: f64,
}

impl TryFrom<RawTopology> for Topology {
    type Error = TopologyError;

    fn try_from(raw: RawTopology) -> Result<Self, Self::Error> {
        Topology::new(raw.helpers, raw.users, raw.r_trans, raw.r_inter)
    }
}

impl Topology {
    pub fn new(
        helpers: Vec<Point2D>,
        users: Vec<Point2D>,
        r_trans: f64,
        r_inter: f64,
    ) -> Result<Self, TopologyError> {
        if !(r_trans > 0.0 && r_trans.is_finite()) {
            return Err(TopologyError::BadTransmissionRadius(r_trans));
        }
        if !(r_inter >= r_trans && r_inter.is_finite()) {
            return Err(TopologyError::InterferenceBelowTransmission { r_trans, r_inter });
        }
        if !helpers.iter().chain(&users).all(Point2D::is_finite) {
            return Err(TopologyError::NonFinite);
        }
        Ok(Self {
            helpers,
            users,
            r_trans,
            r_inter,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn helpers(&self) -> &[Point2D] {
        &self.helpers
    }

    pub fn users(&self) -> &[Point2D] {
        &self.users
    }

    pub fn helper_count(&self) -> usize {
        self.helpers.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn r_trans(&self) -> f64 {
        self.r_trans
    }

    pub fn r_inter(&self) -> f64 {
        self.r_inter
    }

    pub fn distance(&self, helper: usize, user: usize) -> f64 {
        self.helpers[helper].distance(&self.users[user])
    }

    /// `user` can decode `helper` when nothing else interferes.
    pub fn in_transmission_range(&self, helper: usize, user: usize) -> bool {
        self.distance(helper, user) <= self.r_trans
    }

    /// `helper`, if active, would interfere at `user`.
    pub fn in_interference_range(&self, helper: usize, user: usize) -> bool {
        self.distance(helper, user) <= self.r_inter
    }
}

impl Serialize for Topology {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Topology", 4)?;
        st.serialize_field("helpers", &self.helpers)?;
        st.serialize_field("users", &self.users)?;
        st.serialize_field("r_trans", &self.r_trans)?;
        st.serialize_field("r_inter", &self.r_inter)?;
        st.end()
    }
}

/// Which helpers transmit concurrently. Rendered as a bit string, `h1` first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationPattern {
    bits: Vec<bool>,
}

impl ActivationPattern {
    pub fn idle(helpers: usize) -> Self {
        Self {
            bits: vec![false; helpers],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_active(helpers: usize, active: &[usize]) -> Self {
        let mut bits = vec![false; helpers];
        for &i in active {
            bits[i] = true;
        }
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_active(&self, helper: usize) -> bool {
        self.bits[helper]
    }

    pub fn is_idle(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn active_helpers(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
    }
}

impl fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Centers of a hexagonal tiling with `rings` rings around a central hexagon.
///
/// `hex_radius` is the circumradius; neighboring centers are `sqrt(3) *
/// hex_radius` apart. Order: center, then ring by ring.
pub fn generate_hex_grid(rings: usize, hex_radius: f64) -> Vec<Point2D> {
    assert!(hex_radius > 0.0, "hex radius must be positive");
    // Axial directions for a flat-topped layout.
    const DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let to_point = |q: i64, r: i64| {
        let (q, r) = (q as f64, r as f64);
        Point2D::new(
            hex_radius * 1.5 * q,
            hex_radius * 3f64.sqrt() * (r + q / 2.0),
        )
    };
    let mut out = vec![to_point(0, 0)];
    for ring in 1..=rings as i64 {
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for &(dq, dr) in &DIRS {
            for _ in 0..ring {
                out.push(to_point(q, r));
                q += dq;
                r += dr;
            }
        }
    }
    out
}

/// Number of helpers on a grid with `rings` rings.
pub fn hex_grid_size(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}

/// Homogeneous Poisson sampler over the union of the helpers' transmission
/// disks. The union area is estimated once by jittered-grid Monte-Carlo.
#[derive(Clone, Debug)]
pub struct PppSampler {
    helpers: Vec<Point2D>,
    r_trans: f64,
    bbox: (Point2D, Point2D),
    union_area: f64,
}

/// Grid side of the area estimate; one jittered sample per cell.
const AREA_GRID: usize = 1000;

impl PppSampler {
    pub fn new(helpers: &[Point2D], r_trans: f64) -> Self {
        let bbox = bounding_box(helpers, r_trans);
        let union_area = if helpers.is_empty() {
            0.0
        } else {
            estimate_union_area(helpers, r_trans, bbox)
        };
        Self {
            helpers: helpers.to_vec(),
            r_trans,
            bbox,
            union_area,
        }
    }

    pub fn union_area(&self) -> f64 {
        self.union_area
    }

    /// Users with expected count `users_per_helper * H` inside the union.
    pub fn sample(&self, users_per_helper: f64, seed: u64) -> Vec<Point2D> {
        assert!(users_per_helper > 0.0, "user density must be positive");
        if self.helpers.is_empty() {
            return Vec::new();
        }
        let (lo, hi) = self.bbox;
        let box_area = (hi.x - lo.x) * (hi.y - lo.y);
        let intensity = users_per_helper * self.helpers.len() as f64 / self.union_area;
        let mut rng = SimRng::new(seed);
        let mean = intensity * box_area;
        let count = Poisson::new(mean)
            .map(|p| p.sample(&mut rng) as usize)
            .unwrap_or(0);
        let mut users = Vec::with_capacity(count);
        for _ in 0..count {
            let p = Point2D::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            if covered(&self.helpers, self.r_trans, &p) {
                users.push(p);
            }
        }
        users
    }
}

/// Convenience wrapper over [`PppSampler`].
pub fn place_users_ppp(
    helpers: &[Point2D],
    users_per_helper: f64,
    r_trans: f64,
    seed: u64,
) -> Vec<Point2D> {
    PppSampler::new(helpers, r_trans).sample(users_per_helper, seed)
}

fn covered(helpers: &[Point2D], r_trans: f64, p: &Point2D) -> bool {
    helpers.iter().any(|h| h.distance(p) <= r_trans)
}

fn bounding_box(helpers: &[Point2D], r: f64) -> (Point2D, Point2D) {
    let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for h in helpers {
        lo.x = lo.x.min(h.x - r);
        lo.y = lo.y.min(h.y - r);
        hi.x = hi.x.max(h.x + r);
        hi.y = hi.y.max(h.y + r);
    }
    (lo, hi)
}

fn estimate_union_area(helpers: &[Point2D], r: f64, (lo, hi): (Point2D, Point2D)) -> f64 {
    let mut rng = SimRng::new(derive_seed(0, Stream::AreaEstimate));
    let (w, h) = ((hi.x - lo.x) / AREA_GRID as f64, (hi.y - lo.y) / AREA_GRID as f64);
    let mut hits = 0usize;
    for i in 0..AREA_GRID {
        for j in 0..AREA_GRID {
            let p = Point2D::new(
                lo.x + (i as f64 + rng.unit()) * w,
                lo.y + (j as f64 + rng.unit()) * h,
            );
            if covered(helpers, r, &p) {
                hits += 1;
            }
        }
    }
    hits as f64 * w * h
}

/// Users `helper` can serve under `pattern`: inside its transmission disk and
/// outside the interference disk of every other active helper.
pub fn reachable_users(
    topology: &Topology,
    pattern: &ActivationPattern,
    helper: usize,
) -> Result<Vec<usize>, TopologyError> {
    if pattern.len() != topology.helper_count() {
        return Err(TopologyError::PatternLength {
            expected: topology.helper_count(),
            got: pattern.len(),
        });
    }
    if !pattern.is_active(helper) {
        return Err(TopologyError::InactiveHelper(helper));
    }
    Ok((0..topology.user_count())
        .filter(|&k| {
            topology.in_transmission_range(helper, k)
                && pattern
                    .active_helpers()
                    .all(|other| other == helper || !topology.in_interference_range(other, k))
        })
        .collect())
}

/// Number of helpers, active or not, within `r_inter` of `user`.
pub fn user_degree(topology: &Topology, user: usize) -> usize {
    (0..topology.helper_count())
        .filter(|&i| topology.in_interference_range(i, user))
        .count()
}

/// The association predicate of the greedy scheduler: `user` is within
/// `r_trans` of `helper` and outside `r_inter` of every helper in `active`
/// other than `helper` itself.
pub fn connect(topology: &Topology, active: &[usize], helper: usize, user: usize) -> bool {
    topology.in_transmission_range(helper, user)
        && active
            .iter()
            .all(|&other| other == helper || !topology.in_interference_range(other, user))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_helper_line() -> Topology {
        Topology::new(
            vec![Point2D::new(0.0, 0.0), Point2D::new(2.0, 0.0)],
            vec![
                Point2D::new(-0.5, 0.0),
                Point2D::new(1.0, 0.0),
                Point2D::new(2.5, 0.0),
                Point2D::new(5.0, 5.0),
            ],
            1.0,
            1.2,
        )
        .unwrap()
    }

    #[test]
    fn hex_counts() {
        for rings in 0..=5 {
            assert_eq!(generate_hex_grid(rings, 1.0).len(), hex_grid_size(rings));
        }
        assert_eq!(generate_hex_grid(2, 1.0).len(), 19);
    }

    #[test]
    fn hex_first_ring_distance() {
        let grid = generate_hex_grid(1, 1.0);
        assert_eq!(grid[0], Point2D::new(0.0, 0.0));
        for p in &grid[1..] {
            assert!((p.distance(&grid[0]) - 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn hex_centers_distinct_and_spaced() {
        let grid = generate_hex_grid(3, 0.7);
        for (a, p) in grid.iter().enumerate() {
            for q in &grid[a + 1..] {
                assert!(p.distance(q) >= 3f64.sqrt() * 0.7 - 1e-9);
            }
        }
    }

    #[test]
    fn radii_validated() {
        assert!(Topology::new(vec![], vec![], 0.0, 1.0).is_err());
        assert!(Topology::new(vec![], vec![], 1.0, 0.9).is_err());
        assert!(Topology::new(vec![Point2D::new(f64::NAN, 0.0)], vec![], 1.0, 1.0).is_err());
    }

    #[test]
    fn reachability_collision() {
        let t = two_helper_line();
        let both = ActivationPattern::from_bits(vec![true, true]);
        // u2 at the midpoint is within r_trans of both: lost to collision.
        assert_eq!(reachable_users(&t, &both, 0).unwrap(), vec![0]);
        assert_eq!(reachable_users(&t, &both, 1).unwrap(), vec![2]);
        let only_first = ActivationPattern::from_bits(vec![true, false]);
        assert_eq!(reachable_users(&t, &only_first, 0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn reachability_rejects_inactive() {
        let t = two_helper_line();
        let p = ActivationPattern::from_bits(vec![true, false]);
        assert!(matches!(
            reachable_users(&t, &p, 1),
            Err(TopologyError::InactiveHelper(1))
        ));
    }

    #[test]
    fn boundary_is_inclusive() {
        let t = Topology::new(
            vec![Point2D::new(0.0, 0.0)],
            vec![Point2D::new(1.0, 0.0)],
            1.0,
            1.2,
        )
        .unwrap();
        let p = ActivationPattern::from_bits(vec![true]);
        assert_eq!(reachable_users(&t, &p, 0).unwrap(), vec![0]);
    }

    #[test]
    fn degrees() {
        let t = two_helper_line();
        assert_eq!(user_degree(&t, 0), 1);
        assert_eq!(user_degree(&t, 1), 2);
        assert_eq!(user_degree(&t, 3), 0);
    }

    #[test]
    fn connect_cases() {
        let t = two_helper_line();
        assert!(connect(&t, &[], 0, 1));
        assert!(connect(&t, &[0], 0, 1));
        assert!(!connect(&t, &[0, 1], 0, 1));
        assert!(!connect(&t, &[], 0, 3));
    }

    #[test]
    fn pattern_display() {
        let p = ActivationPattern::from_active(3, &[1]);
        assert_eq!(p.to_string(), "010");
        assert!(ActivationPattern::idle(2).is_idle());
    }

    #[test]
    fn single_disk_area() {
        let s = PppSampler::new(&[Point2D::new(0.0, 0.0)], 1.0);
        let exact = std::f64::consts::PI;
        assert!((s.union_area() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn ppp_users_inside_union_and_deterministic() {
        let helpers = generate_hex_grid(1, 1.0);
        let a = place_users_ppp(&helpers, 5.0, 1.0, 11);
        let b = place_users_ppp(&helpers, 5.0, 1.0, 11);
        assert_eq!(a, b);
        assert!(a.iter().all(|u| covered(&helpers, 1.0, u)));
    }

    #[test]
    fn ppp_vanishing_density() {
        let helpers = [Point2D::new(0.0, 0.0)];
        let sampler = PppSampler::new(&helpers, 1.0);
        let empty = (0..100).filter(|&s| sampler.sample(1e-9, s).is_empty()).count();
        assert_eq!(empty, 100);
    }

    #[test]
    fn topology_json_roundtrip() {
        let t = two_helper_line();
        let back: Topology = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(t, back);
        let bad = r#"{"helpers":[[0,0]],"users":[],"r_trans":1.0,"r_inter":0.5}"#;
        assert!(serde_json::from_str::<Topology>(bad).is_err());
    }
}
