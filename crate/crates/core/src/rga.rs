//! Random Greedy Association: an online scheduler that repeatedly activates
//! non-interfering helpers and fills one slot per cache profile with users,
//! lowest-degree users first in a randomly shuffled order.
//!
//! The state machine follows the pseudo-code literally:
//!
//! 1. shuffle the inactive helpers and the degree vector;
//! 2. for every degree value `d` in the degree vector, top up the newly
//!    activated helpers with connectable degree-`d` users, then try to
//!    activate every inactive helper that no served user would hear;
//! 3. newly activated helpers get their service time from the number of
//!    filled slots;
//! 4. time advances to the first completion; finishing helpers credit one
//!    chunk to every user they serve and go back to the inactive list.
//!
//! Helpers that do not finish keep their users and remaining time. Only
//! newly activated helpers receive users, so active helpers are never topped
//! up. Time is kept as an exact rational.
//!
//! Connectivity queries are answered from precomputed range tables and
//! per-user interferer counts, which keeps an iteration linear in the number
//! of candidates.

use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{CacheParams, ProfileAssignment};
use crate::rng::SimRng;
use crate::topology::{user_degree, Topology};

pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;
pub const DEFAULT_V_LIMIT: u64 = 50;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RgaError {
    #[error("users {} can never be served", fmt_users(.unservable))]
    Stalled { unservable: Vec<usize> },
    #[error("v_limit must be at least 1")]
    ZeroLimit,
    #[error("{users} users but {profiles} profile entries")]
    AssignmentLength { users: usize, profiles: usize },
}

fn fmt_users(users: &[usize]) -> String {
    users
        .iter()
        .map(|u| format!("u{}", u + 1))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgaConfig {
    pub v_limit: u64,
    pub seed: u64,
    /// Shuffle the degree vector every iteration. Turning this off keeps the
    /// ascending order and can starve users.
    pub shuffle_degrees: bool,
    pub max_iterations: u64,
    pub trace: bool,
}

impl Default for RgaConfig {
    fn default() -> Self {
        Self {
            v_limit: DEFAULT_V_LIMIT,
            seed: 0,
            shuffle_degrees: true,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A helper starts serving; emitted once its service time is fixed at
    /// the end of the assignment phase.
    Activate,
    /// Users were placed into a helper's slots.
    Assign,
    /// A helper completed its service and turns off.
    Finish,
    /// The users of a finished helper received one chunk each.
    Credit,
}

/// One trace record. `time` is an exact rational rendered as text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: String,
    pub event: EventKind,
    /// 1-based helper id.
    pub helper: usize,
    /// 1-based user ids.
    pub users: Vec<usize>,
    pub t_rem: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgaResult {
    /// `chunks[k] / elapsed`.
    pub rates: Vec<f64>,
    pub elapsed: Rational64,
    pub chunks: Vec<u64>,
    /// `false` when the iteration cap was hit first.
    pub terminated: bool,
    pub iterations: u64,
    pub trace: Vec<TraceEvent>,
}

impl RgaResult {
    /// Exact per-user rates.
    pub fn exact_rates(&self) -> Vec<Rational64> {
        if self.elapsed.is_zero() {
            return vec![Rational64::zero(); self.chunks.len()];
        }
        self.chunks
            .iter()
            .map(|&v| Rational64::from_integer(v as i64) / self.elapsed)
            .collect()
    }

    /// Trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.trace {
            let _ = writeln!(out, "{}", serde_json::to_string(e).expect("event serializes"));
        }
        out
    }
}

/// Scheduler state.
#[derive(Clone, Debug)]
pub struct RgaState<'a> {
    params: &'a CacheParams,
    profiles: &'a [usize],
    in_trans: Vec<Vec<bool>>,
    in_inter: Vec<Vec<bool>>,
    /// Users grouped by degree, ascending user index.
    by_degree: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    h_on: Vec<usize>,
    h_off: Vec<usize>,
    h_new: Vec<usize>,
    active: Vec<bool>,
    /// Slot vectors, one entry per profile.
    slots: Vec<Vec<Option<usize>>>,
    /// Helper currently serving each user.
    serving: Vec<Option<usize>>,
    /// Active helpers within `r_inter` of each user.
    interferers: Vec<usize>,
    /// Served users within `r_inter` of each helper.
    served_near: Vec<usize>,
    t_rem: Vec<Rational64>,
    chunks: Vec<u64>,
    elapsed: Rational64,
    rng: SimRng,
    shuffle_degrees: bool,
    trace: Option<Vec<TraceEvent>>,
}

impl<'a> RgaState<'a> {
    pub fn new(
        topology: &Topology,
        params: &'a CacheParams,
        assignment: &'a ProfileAssignment,
        config: &RgaConfig,
    ) -> Result<Self, RgaError> {
        let (h, k) = (topology.helper_count(), topology.user_count());
        if assignment.len() != k {
            return Err(RgaError::AssignmentLength {
                users: k,
                profiles: assignment.len(),
            });
        }
        let in_trans: Vec<Vec<bool>> = (0..h)
            .map(|i| (0..k).map(|u| topology.in_transmission_range(i, u)).collect())
            .collect();
        let in_inter: Vec<Vec<bool>> = (0..h)
            .map(|i| (0..k).map(|u| topology.in_interference_range(i, u)).collect())
            .collect();
        let mut degrees: Vec<usize> = (0..k).map(|u| user_degree(topology, u)).collect();
        let mut by_degree = vec![Vec::new(); h + 1];
        for (u, &d) in degrees.iter().enumerate() {
            by_degree[d].push(u);
        }
        degrees.sort_unstable();
        Ok(Self {
            params,
            profiles: assignment.as_slice(),
            in_trans,
            in_inter,
            by_degree,
            degrees,
            h_on: Vec::new(),
            h_off: (0..h).collect(),
            h_new: Vec::new(),
            active: vec![false; h],
            slots: vec![vec![None; params.profiles()]; h],
            serving: vec![None; k],
            interferers: vec![0; k],
            served_near: vec![0; h],
            t_rem: vec![Rational64::zero(); h],
            chunks: vec![0; k],
            elapsed: Rational64::zero(),
            rng: SimRng::new(config.seed),
            shuffle_degrees: config.shuffle_degrees,
            trace: config.trace.then(Vec::new),
        })
    }

    pub fn chunks(&self) -> &[u64] {
        &self.chunks
    }

    pub fn elapsed(&self) -> Rational64 {
        self.elapsed
    }

    pub fn active_helpers(&self) -> &[usize] {
        &self.h_on
    }

    pub fn inactive_helpers(&self) -> &[usize] {
        &self.h_off
    }

    /// Users currently served by `helper`, by profile slot.
    pub fn slots(&self, helper: usize) -> &[Option<usize>] {
        &self.slots[helper]
    }

    /// The degree vector in its current order.
    pub fn degree_vector(&self) -> &[usize] {
        &self.degrees
    }

    /// Overrides the degree vector order (with shuffling off this order is
    /// kept for the whole run).
    pub fn set_degree_vector(&mut self, degrees: Vec<usize>) {
        let mut sorted = degrees.clone();
        sorted.sort_unstable();
        let mut current = self.degrees.clone();
        current.sort_unstable();
        assert_eq!(sorted, current, "degree vector must be a permutation");
        self.degrees = degrees;
    }

    /// Within `r_trans` of `helper` and outside `r_inter` of every other
    /// active helper.
    pub fn connect(&self, helper: usize, user: usize) -> bool {
        let own = usize::from(self.active[helper] && self.in_inter[helper][user]);
        self.in_trans[helper][user] && self.interferers[user] == own
    }

    fn event(&mut self, event: EventKind, helper: usize, users: Vec<usize>) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent {
                time: self.elapsed.to_string(),
                event,
                helper: helper + 1,
                users: users.into_iter().map(|u| u + 1).collect(),
                t_rem: self.t_rem[helper].to_string(),
            });
        }
    }

    fn occupied(&self, helper: usize) -> Vec<usize> {
        self.slots[helper].iter().flatten().copied().collect()
    }

    /// Gathers connectable degree-`degree` users of `helper`, shuffles them
    /// and fills empty profile slots in that order.
    fn fill_slots(&mut self, helper: usize, degree: usize) {
        let mut candidates: Vec<usize> = self
            .by_degree
            .get(degree)
            .map(|users| {
                users
                    .iter()
                    .copied()
                    .filter(|&u| self.connect(helper, u))
                    .collect()
            })
            .unwrap_or_default();
        self.rng.shuffle(&mut candidates);
        let mut assigned = Vec::new();
        for u in candidates {
            let l = self.profiles[u];
            if self.slots[helper][l].is_none() && self.serving[u].is_none() {
                self.slots[helper][l] = Some(u);
                self.serving[u] = Some(helper);
                for (i, near) in self.served_near.iter_mut().enumerate() {
                    *near += usize::from(self.in_inter[i][u]);
                }
                assigned.push(u);
            }
        }
        if !assigned.is_empty() {
            self.event(EventKind::Assign, helper, assigned);
        }
    }

    /// Tops up every newly activated helper with degree-`degree` users.
    pub fn assign_users(&mut self, degree: usize) {
        for n in 0..self.h_new.len() {
            let helper = self.h_new[n];
            self.fill_slots(helper, degree);
        }
        self.debug_check();
    }

    /// Tries to activate every inactive helper, in the current order, with
    /// degree-`degree` users.
    pub fn assign_helpers(&mut self, degree: usize) {
        let order = self.h_off.clone();
        for helper in order {
            if self.served_near[helper] == 0 {
                self.fill_slots(helper, degree);
            }
            if self.slots[helper].iter().any(Option::is_some) {
                self.h_off.retain(|&i| i != helper);
                self.h_on.push(helper);
                self.h_new.push(helper);
                self.active[helper] = true;
                for (u, count) in self.interferers.iter_mut().enumerate() {
                    *count += usize::from(self.in_inter[helper][u]);
                }
            }
        }
        self.debug_check();
    }

    /// One outer iteration. Returns `false` when nothing is active after the
    /// assignment phase.
    pub fn step(&mut self) -> bool {
        self.rng.shuffle(&mut self.h_off);
        if self.shuffle_degrees {
            self.rng.shuffle(&mut self.degrees);
        }
        for n in 0..self.degrees.len() {
            let d = self.degrees[n];
            self.assign_users(d);
            self.assign_helpers(d);
        }
        for helper in std::mem::take(&mut self.h_new) {
            let users = self.occupied(helper);
            self.t_rem[helper] = self.params.service_time(users.len());
            self.event(EventKind::Activate, helper, users);
        }
        let Some(t_min) = self.h_on.iter().map(|&i| self.t_rem[i]).min() else {
            return false;
        };
        self.elapsed += t_min;
        for helper in self.h_on.clone() {
            self.t_rem[helper] -= t_min;
            if self.t_rem[helper].is_zero() {
                self.finish(helper);
            }
        }
        self.debug_check();
        true
    }

    fn finish(&mut self, helper: usize) {
        let users = self.occupied(helper);
        self.event(EventKind::Finish, helper, users.clone());
        self.h_on.retain(|&i| i != helper);
        self.h_off.push(helper);
        self.active[helper] = false;
        for (u, count) in self.interferers.iter_mut().enumerate() {
            *count -= usize::from(self.in_inter[helper][u]);
        }
        for &u in &users {
            self.chunks[u] += 1;
            self.serving[u] = None;
            for (i, near) in self.served_near.iter_mut().enumerate() {
                *near -= usize::from(self.in_inter[i][u]);
            }
        }
        self.slots[helper].iter_mut().for_each(|s| *s = None);
        self.event(EventKind::Credit, helper, users);
    }

    /// No served user hears an active helper other than its own.
    fn debug_check(&self) {
        if cfg!(debug_assertions) {
            for (u, serving) in self.serving.iter().enumerate() {
                if let Some(own) = *serving {
                    for &i in &self.h_on {
                        assert!(
                            i == own || !self.in_inter[i][u],
                            "u{} served by h{} is interfered by h{}",
                            u + 1,
                            own + 1,
                            i + 1
                        );
                    }
                }
            }
        }
    }

    fn into_result(self, terminated: bool, iterations: u64) -> RgaResult {
        let rates = if self.elapsed.is_zero() {
            vec![0.0; self.chunks.len()]
        } else {
            self.chunks
                .iter()
                .map(|&v| {
                    (Rational64::from_integer(v as i64) / self.elapsed)
                        .to_f64()
                        .expect("rational converts")
                })
                .collect()
        };
        RgaResult {
            rates,
            elapsed: self.elapsed,
            chunks: self.chunks,
            terminated,
            iterations,
            trace: self.trace.unwrap_or_default(),
        }
    }
}

/// Runs the scheduler until every user has `v_limit` chunks or the
/// iteration cap is hit.
pub fn run(
    topology: &Topology,
    params: &CacheParams,
    assignment: &ProfileAssignment,
    config: &RgaConfig,
) -> Result<RgaResult, RgaError> {
    let state = RgaState::new(topology, params, assignment, config)?;
    run_state(state, config)
}

/// Runs from a prepared state (for example one with a fixed degree order).
pub fn run_state(mut state: RgaState<'_>, config: &RgaConfig) -> Result<RgaResult, RgaError> {
    if config.v_limit == 0 {
        return Err(RgaError::ZeroLimit);
    }
    // Users out of every helper's transmission range would stall the loop.
    let unservable: Vec<usize> = (0..state.chunks.len())
        .filter(|&u| !state.in_trans.iter().any(|row| row[u]))
        .collect();
    if !unservable.is_empty() {
        return Err(RgaError::Stalled { unservable });
    }
    let mut iterations = 0;
    while state.chunks.iter().min().is_some_and(|&v| v < config.v_limit) {
        if iterations == config.max_iterations {
            return Ok(state.into_result(false, iterations));
        }
        iterations += 1;
        if !state.step() {
            let unservable = (0..state.chunks.len())
                .filter(|&u| state.chunks[u] < config.v_limit)
                .collect();
            return Err(RgaError::Stalled { unservable });
        }
    }
    Ok(state.into_result(true, iterations))
}
