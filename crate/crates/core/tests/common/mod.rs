//! Fixtures, random tiny instances and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use ccwlan::cache::{validate_params, CacheParams, ProfileAssignment};
use ccwlan::policy::RateVector;
use ccwlan::rng::SimRng;
use ccwlan::topology::{Point2D, Topology};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Two-helper example network: three users under `h2` (u3, u4, u5), two
/// under `h1`. Profiles (1-based) are `[3, 2, 1, 2, 1]`, `L = 3`, `t = 1`.
pub fn two_helper() -> (Topology, CacheParams, ProfileAssignment) {
    let t = Topology::load(fixture("two_helper_topology.json")).unwrap();
    let params = validate_params(3, 1, 3).unwrap();
    let a = ProfileAssignment::from_vec(vec![2, 1, 0, 1, 0]);
    (t, params, a)
}

/// The starvation example: `u1` only near `h1`, `u2` only near `h2`, `u3`
/// in range of both; a single profile slot per helper is shared by all.
pub fn starvation() -> (Topology, CacheParams, ProfileAssignment) {
    let t = Topology::load(fixture("starvation_topology.json")).unwrap();
    let params = validate_params(2, 1, 2).unwrap();
    let a = ProfileAssignment::from_vec(vec![0, 0, 0]);
    (t, params, a)
}

/// A small random network: `H <= 3` helpers on a line at spacings that
/// make interference likely, `K <= 8` users each inside some helper's
/// transmission disk, `L` in `{2, 3}` with `t = 1`.
pub struct TinyInstance {
    pub topology: Topology,
    pub params: CacheParams,
    pub assignment: ProfileAssignment,
}

pub fn tiny_instance(rng: &mut SimRng, max_helpers: usize, max_users: usize) -> TinyInstance {
    let h = 1 + rng.below(max_helpers);
    let k = 1 + rng.below(max_users);
    let profiles = 2 + rng.below(2);
    let mut helpers = vec![Point2D::new(0.0, 0.0)];
    for i in 1..h {
        let gap = 1.0 + 1.6 * rng.unit();
        helpers.push(Point2D::new(helpers[i - 1].x + gap, 0.0));
    }
    let users = (0..k)
        .map(|_| {
            let c = helpers[rng.below(h)];
            let r = 0.999 * rng.unit().sqrt();
            let phi = std::f64::consts::TAU * rng.unit();
            Point2D::new(c.x + r * phi.cos(), c.y + r * phi.sin())
        })
        .collect();
    let topology = Topology::new(helpers, users, 1.0, 1.2).unwrap();
    let params = validate_params(profiles, 1, profiles as u64).unwrap();
    let assignment = ProfileAssignment::from_vec((0..k).map(|_| rng.below(profiles)).collect());
    TinyInstance {
        topology,
        params,
        assignment,
    }
}

/// Sum of logs, `-inf` outside the domain.
pub fn log_utility(r: &[f64]) -> f64 {
    if r.iter().any(|&x| x <= 0.0) {
        return f64::NEG_INFINITY;
    }
    r.iter().map(|x| x.ln()).sum()
}

/// Best proportional-fairness objective over every weight vector on the
/// simplex grid with spacing `1/res`. Exhaustive: `C(res + n - 1, n - 1)`
/// points.
pub fn grid_oracle(vectors: &[Vec<f64>], res: usize) -> f64 {
    let n = vectors.len();
    let k = vectors[0].len();
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; n];
    let mut r = vec![0.0; k];
    fn rec(
        i: usize,
        left: usize,
        res: usize,
        vectors: &[Vec<f64>],
        counts: &mut Vec<usize>,
        r: &mut Vec<f64>,
        best: &mut f64,
    ) {
        let n = vectors.len();
        if i == n - 1 {
            counts[i] = left;
            for (rk, x) in r.iter_mut().enumerate() {
                *x = 0.0;
                for (v, &c) in vectors.iter().zip(counts.iter()) {
                    *x += c as f64 * v[rk];
                }
                *x /= res as f64;
            }
            let f = log_utility(r);
            if f > *best {
                *best = f;
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, res, vectors, counts, r, best);
        }
    }
    rec(0, res, res, vectors, &mut counts, &mut r, &mut best);
    best
}

pub fn floats(vectors: &[RateVector]) -> Vec<Vec<f64>> {
    vectors.iter().map(RateVector::to_f64).collect()
}

/// Users in `helper`'s transmission disk and outside every other active
/// helper's interference disk, straight from coordinates.
pub fn reachable_by_geometry(t: &Topology, active: &[bool], helper: usize) -> Vec<usize> {
    let (rt, ri) = (t.r_trans(), t.r_inter());
    (0..t.user_count())
        .filter(|&k| {
            let u = t.users()[k];
            t.helpers()[helper].distance(&u) <= rt
                && (0..t.helper_count())
                    .all(|j| j == helper || !active[j] || t.helpers()[j].distance(&u) > ri)
        })
        .collect()
}

/// Nonempty subsets of `users` with pairwise-distinct profiles, optionally
/// only those of maximum possible size.
pub fn brute_force_sets(users: &[usize], a: &ProfileAssignment, maximal_only: bool) -> u64 {
    let n = users.len();
    let mut distinct_profiles: Vec<usize> = users.iter().map(|&u| a.profile(u).unwrap()).collect();
    distinct_profiles.sort_unstable();
    distinct_profiles.dedup();
    let mut count = 0;
    for mask in 1u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| users[i]).collect();
        let mut ps: Vec<usize> = chosen.iter().map(|&u| a.profile(u).unwrap()).collect();
        ps.sort_unstable();
        let len = ps.len();
        ps.dedup();
        if ps.len() != len {
            continue;
        }
        if maximal_only && len != distinct_profiles.len() {
            continue;
        }
        count += 1;
    }
    count
}
