//! Shared-cache placement: cache profiles, user-to-profile assignment and
//! the subpacket caching predicate.
//!
//! Every chunk is split into `C(L, t)` subpackets indexed by `t`-subsets of
//! profiles; profile `l` stores every subpacket whose subset contains `l`.
//! Subpackets are symbolic identifiers only.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::codeword_count;
use crate::combin::binomial;
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum CacheError {
    #[error("L, M and N must be positive (got L={profiles}, M={memory}, N={library})")]
    NonPositive {
        profiles: usize,
        memory: u64,
        library: u64,
    },
    #[error("cache size M={memory} must be smaller than the library N={library}")]
    MemoryNotBelowLibrary { memory: u64, library: u64 },
    #[error("t = L*M/N = {0} is not an integer")]
    NonIntegralT(f64),
    #[error("user u{} has no profile assigned", .0 + 1)]
    Unassigned(usize),
}

/// Unit in which service time and rates are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    /// One codeword transmission takes one unit.
    #[default]
    Codeword,
    /// A full chunk takes one unit, so a codeword (one subpacket) takes
    /// `1 / C(L, t)`.
    Chunk,
}

/// Cache profile parameters.
///
/// The coded scheme requires `t = L*M/N` integral. The uncoded baseline
/// (`L = 1`, only local caching gain) serves one user per transmission and
/// spends `1 - M/N` chunk-times per chunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheParams {
    profiles: usize,
    memory: u64,
    library: u64,
    t: usize,
    codeword_time: Rational64,
    uncoded: bool,
}

impl CacheParams {
    pub fn new(profiles: usize, memory: u64, library: u64) -> Result<Self, CacheError> {
        check_positive(profiles, memory, library)?;
        let prod = profiles as u64 * memory;
        if !prod.is_multiple_of(library) {
            return Err(CacheError::NonIntegralT(prod as f64 / library as f64));
        }
        let t = (prod / library) as usize;
        Ok(Self {
            profiles,
            memory,
            library,
            t,
            codeword_time: Rational64::from_integer(1),
            uncoded: false,
        })
    }

    /// Uncoded baseline with a single profile.
    pub fn uncoded(memory: u64, library: u64) -> Result<Self, CacheError> {
        check_positive(1, memory, library)?;
        Ok(Self {
            profiles: 1,
            memory,
            library,
            t: 0,
            codeword_time: Rational64::new((library - memory) as i64, library as i64),
            uncoded: true,
        })
    }

    /// Selects the time unit. The uncoded baseline is always measured in
    /// chunk-times and ignores this.
    pub fn with_time_unit(mut self, unit: TimeUnit) -> Self {
        if !self.uncoded {
            self.codeword_time = match unit {
                TimeUnit::Codeword => Rational64::from_integer(1),
                TimeUnit::Chunk => Rational64::new(1, binomial(self.profiles, self.t) as i64),
            };
        }
        self
    }

    /// `L`
    pub fn profiles(&self) -> usize {
        self.profiles
    }

    /// `M`
    pub fn memory(&self) -> u64 {
        self.memory
    }

    /// `N`
    pub fn library(&self) -> u64 {
        self.library
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_uncoded(&self) -> bool {
        self.uncoded
    }

    pub fn codeword_time(&self) -> Rational64 {
        self.codeword_time
    }

    /// Subpackets per chunk, `C(L, t)`.
    pub fn subpackets_per_chunk(&self) -> u64 {
        binomial(self.profiles, self.t)
    }

    /// Time a helper needs to deliver one chunk to each of `served` users
    /// with distinct profiles.
    pub fn service_time(&self, served: usize) -> Rational64 {
        Rational64::from_integer(codeword_count(self.profiles, self.t, served) as i64)
            * self.codeword_time
    }

    /// Per-user rate of a helper serving `served` distinct-profile users.
    pub fn helper_rate(&self, served: usize) -> Rational64 {
        self.service_time(served).recip()
    }
}

fn check_positive(profiles: usize, memory: u64, library: u64) -> Result<(), CacheError> {
    if profiles == 0 || memory == 0 || library == 0 {
        return Err(CacheError::NonPositive {
            profiles,
            memory,
            library,
        });
    }
    if memory >= library {
        return Err(CacheError::MemoryNotBelowLibrary { memory, library });
    }
    Ok(())
}

/// Validates `(L, M, N)` for the coded scheme.
pub fn validate_params(profiles: usize, memory: u64, library: u64) -> Result<CacheParams, CacheError> {
    CacheParams::new(profiles, memory, library)
}

/// User to profile map, profiles `0..L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileAssignment {
    profiles: Vec<usize>,
}

impl ProfileAssignment {
    pub fn from_vec(profiles: Vec<usize>) -> Self {
        Self { profiles }
    }

    pub fn profile(&self, user: usize) -> Option<usize> {
        self.profiles.get(user).copied()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.profiles
    }
}

/// Each of `users` independently uniform over `0..profiles`.
pub fn assign_profiles(users: usize, profiles: usize, seed: u64) -> ProfileAssignment {
    assert!(profiles >= 1, "need at least one profile");
    let mut rng = SimRng::new(seed);
    ProfileAssignment {
        profiles: (0..users).map(|_| rng.below(profiles)).collect(),
    }
}

/// Subpacket `W_{chunk, subset}`; `subset` is sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubpacketId {
    pub chunk: usize,
    pub subset: Vec<usize>,
}

/// Whether profile `profile` stores subpacket `s`.
pub fn caches(profile: usize, s: &SubpacketId) -> bool {
    s.subset.contains(&profile)
}

/// Requested chunk per user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMap {
    chunks: Vec<usize>,
}

impl DemandMap {
    /// User `k` requests chunk `k`: no two users share a request. Chunk ids
    /// are labels and are not bounded by `N`.
    pub fn distinct(users: usize) -> Self {
        Self {
            chunks: (0..users).collect(),
        }
    }

    pub fn chunk(&self, user: usize) -> Option<usize> {
        self.chunks.get(user).copied()
    }
}

/// Users of a set grouped by profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfilePartition {
    /// `classes[l]` holds the users with profile `l`, ascending.
    pub classes: Vec<Vec<usize>>,
    /// Number of empty classes.
    pub empty: usize,
    /// Input users without a profile.
    pub unassigned: Vec<usize>,
}

impl ProfilePartition {
    pub fn nonempty_classes(&self) -> usize {
        self.classes.len() - self.empty
    }
}

pub fn profile_partition(
    users: &[usize],
    assignment: &ProfileAssignment,
    profiles: usize,
) -> ProfilePartition {
    let mut classes = vec![Vec::new(); profiles];
    let mut unassigned = Vec::new();
    for &u in users {
        match assignment.profile(u) {
            Some(l) if l < profiles => classes[l].push(u),
            _ => unassigned.push(u),
        }
    }
    for c in &mut classes {
        c.sort_unstable();
    }
    let empty = classes.iter().filter(|c| c.is_empty()).count();
    ProfilePartition {
        classes,
        empty,
        unassigned,
    }
}
