//! Activation patterns, policies and their rate vectors.
//!
//! A policy is an activation pattern plus one feasible set per active helper.
//! Its rate vector gives every served user the per-user rate of its helper's
//! feasible set and zero to everyone else. Rates are exact rationals;
//! dominance is decided on rationals only.
//!
//! Full enumeration grows as a product over helpers of `prod(|class|+1) - 1`
//! and is guarded by a policy budget. The restricted mode keeps only the
//! feasible sets of maximum size (one user from every nonempty class).

use std::fmt;

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{profile_partition, CacheParams, ProfileAssignment, ProfilePartition};
use crate::codebook::{enumerate_feasible_sets, FeasibleSet};
use crate::topology::{reachable_users, ActivationPattern, Topology};

/// Default cap on enumerated policies.
pub const DEFAULT_POLICY_BUDGET: u64 = 1_000_000;

/// Largest helper count whose `2^H` patterns we are willing to list.
pub const MAX_ENUMERATED_HELPERS: usize = 24;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("{count} policies exceed the budget of {budget}")]
    BudgetExceeded { count: BigUint, budget: u64 },
    #[error("{0} helpers are too many to enumerate activation patterns")]
    TooManyHelpers(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnumerationMode {
    Full,
    #[default]
    Restricted,
}

/// Per-user rates of one policy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RateVector(pub Vec<Rational64>);

impl RateVector {
    pub fn zeros(users: usize) -> Self {
        Self(vec![Rational64::zero(); users])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| r.to_f64().expect("rational converts"))
            .collect()
    }

    /// `self` is componentwise `<=` `other` with at least one strict entry.
    pub fn dominated_by(&self, other: &RateVector) -> bool {
        let mut strict = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            if a > b {
                return false;
            }
            strict |= a < b;
        }
        strict
    }
}

impl fmt::Display for RateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (n, r) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("]")
    }
}

/// Activation pattern plus one feasible set per serving helper. Active
/// helpers that reach nobody carry no set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    pub pattern: ActivationPattern,
    pub choice: Vec<FeasibleSet>,
}

impl Policy {
    /// `h2:{u3,u4};h5:{u9}`, or `-` for no served users.
    pub fn choice_label(&self) -> String {
        if self.choice.is_empty() {
            return "-".to_string();
        }
        self.choice
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyRate {
    pub policy: Policy,
    pub rates: RateVector,
}

/// Profile classes of the users an active helper can serve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperClasses {
    pub helper: usize,
    pub partition: ProfilePartition,
}

impl HelperClasses {
    pub fn reachable(&self) -> usize {
        self.partition.classes.iter().map(Vec::len).sum()
    }
}

/// All `2^H` patterns, in lexicographic order of their bit strings.
pub fn enumerate_patterns(helpers: usize) -> Result<Vec<ActivationPattern>, PolicyError> {
    if helpers > MAX_ENUMERATED_HELPERS {
        return Err(PolicyError::TooManyHelpers(helpers));
    }
    Ok((0..1u64 << helpers)
        .map(|j| {
            ActivationPattern::from_bits(
                (0..helpers)
                    .map(|i| (j >> (helpers - 1 - i)) & 1 == 1)
                    .collect(),
            )
        })
        .collect())
}

/// Profile classes for every active helper of `pattern`.
pub fn pattern_classes(
    topology: &Topology,
    pattern: &ActivationPattern,
    params: &CacheParams,
    assignment: &ProfileAssignment,
) -> Vec<HelperClasses> {
    pattern
        .active_helpers()
        .map(|helper| {
            let users = reachable_users(topology, pattern, helper).expect("helper is active");
            HelperClasses {
                helper,
                partition: profile_partition(&users, assignment, params.profiles()),
            }
        })
        .collect()
}

/// Number of policies of a pattern: product over active helpers of
/// `prod_l (|U_i^l| + 1) - 1`. Zero as soon as an active helper reaches
/// nobody; one for the idle pattern.
pub fn policy_count(classes: &[HelperClasses]) -> BigUint {
    classes.iter().fold(BigUint::one(), |acc, h| {
        let ways = h
            .partition
            .classes
            .iter()
            .fold(BigUint::one(), |p, c| p * BigUint::from(c.len() + 1));
        acc * (ways - BigUint::one())
    })
}

/// Number of restricted policies: product over active helpers and profiles
/// of `max(|U_i^l|, 1)`.
pub fn policy_count_restricted(classes: &[HelperClasses]) -> BigUint {
    classes
        .iter()
        .flat_map(|h| h.partition.classes.iter())
        .fold(BigUint::one(), |acc, c| acc * BigUint::from(c.len().max(1)))
}

/// Rate vector of `policy` over `users` users.
pub fn rate_vector(policy: &Policy, params: &CacheParams, users: usize) -> RateVector {
    let mut rates = RateVector::zeros(users);
    for set in &policy.choice {
        let r = params.helper_rate(set.len());
        for &u in &set.users {
            rates.0[u] = r;
        }
    }
    rates
}

/// Maximum-size feasible sets of one helper: one user from every nonempty
/// class, in odometer order over the classes.
fn maximal_feasible_sets(h: &HelperClasses) -> Vec<FeasibleSet> {
    let nonempty: Vec<&Vec<usize>> = h.partition.classes.iter().filter(|c| !c.is_empty()).collect();
    if nonempty.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; nonempty.len()];
    loop {
        let mut users: Vec<usize> = nonempty.iter().zip(&idx).map(|(c, &i)| c[i]).collect();
        users.sort_unstable();
        out.push(FeasibleSet {
            helper: h.helper,
            users,
        });
        let mut pos = nonempty.len();
        loop {
            if pos == 0 {
                out.sort();
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < nonempty[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Feasible-set choices per active helper for `mode`. In restricted mode a
/// helper reaching nobody contributes an empty option list, which is later
/// treated as "serves nobody".
fn helper_options(classes: &[HelperClasses], mode: EnumerationMode) -> Vec<Vec<FeasibleSet>> {
    classes
        .iter()
        .map(|h| match mode {
            EnumerationMode::Full => enumerate_feasible_sets(h.helper, &h.partition),
            EnumerationMode::Restricted => maximal_feasible_sets(h),
        })
        .collect()
}

fn pattern_policies(
    pattern: &ActivationPattern,
    classes: &[HelperClasses],
    mode: EnumerationMode,
) -> Vec<Policy> {
    let mut options = helper_options(classes, mode);
    match mode {
        EnumerationMode::Full => {
            if options.iter().any(Vec::is_empty) {
                return Vec::new();
            }
        }
        EnumerationMode::Restricted => options.retain(|o| !o.is_empty()),
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; options.len()];
    loop {
        out.push(Policy {
            pattern: pattern.clone(),
            choice: options.iter().zip(&idx).map(|(o, &i)| o[i].clone()).collect(),
        });
        let mut pos = options.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Every policy of every pattern with its rate vector, patterns in
/// [`enumerate_patterns`] order. Fails before enumerating anything if the
/// total count exceeds `budget`.
pub fn enumerate_rate_vectors(
    topology: &Topology,
    params: &CacheParams,
    assignment: &ProfileAssignment,
    mode: EnumerationMode,
    budget: u64,
) -> Result<Vec<PolicyRate>, PolicyError> {
    let patterns = enumerate_patterns(topology.helper_count())?;
    let classes: Vec<Vec<HelperClasses>> = patterns
        .iter()
        .map(|p| pattern_classes(topology, p, params, assignment))
        .collect();
    let total: BigUint = classes
        .iter()
        .map(|c| match mode {
            EnumerationMode::Full => policy_count(c),
            EnumerationMode::Restricted => policy_count_restricted(c),
        })
        .sum();
    if total > BigUint::from(budget) {
        return Err(PolicyError::BudgetExceeded {
            count: total,
            budget,
        });
    }
    let users = topology.user_count();
    Ok(patterns
        .iter()
        .zip(&classes)
        .flat_map(|(p, c)| pattern_policies(p, c, mode))
        .map(|policy| {
            let rates = rate_vector(&policy, params, users);
            PolicyRate { policy, rates }
        })
        .collect())
}

/// Distinct vectors with the index of the first policy producing each.
pub fn unique_vectors(policies: &[PolicyRate]) -> (Vec<RateVector>, Vec<usize>) {
    let mut seen = std::collections::HashMap::new();
    let mut vectors = Vec::new();
    let mut origin = Vec::new();
    for (n, pr) in policies.iter().enumerate() {
        if !seen.contains_key(&pr.rates) {
            seen.insert(pr.rates.clone(), vectors.len());
            vectors.push(pr.rates.clone());
            origin.push(n);
        }
    }
    (vectors, origin)
}

/// Positions of the maximal vectors of `vectors`: duplicates keep their
/// first occurrence, dominated vectors are dropped. `O(P^2 K)`.
pub fn maximal_indices(vectors: &[RateVector]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, v) in vectors.iter().enumerate() {
        for (j, w) in vectors.iter().enumerate() {
            if i != j && (v.dominated_by(w) || (j < i && v == w)) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

pub fn filter_maximal(vectors: &[RateVector]) -> Vec<RateVector> {
    maximal_indices(vectors)
        .into_iter()
        .map(|i| vectors[i].clone())
        .collect()
}
