//! Feasible-set enumeration and codeword construction for one active helper.
//!
//! A feasible set holds at most one user per profile. To build its codewords
//! the set is padded with one phantom user per missing profile, every
//! `(t+1)`-subset of the padded set yields a preliminary XOR codeword, and
//! phantom terms are then stripped. Subsets made only of phantoms are dropped.

use std::fmt;

use thiserror::Error;

use crate::cache::{CacheParams, DemandMap, ProfileAssignment, ProfilePartition, SubpacketId};
use crate::combin::{binomial, k_subsets};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodebookError {
    #[error("feasible set is empty")]
    EmptySet,
    #[error("users u{} and u{} share profile {}", .first + 1, .second + 1, .profile + 1)]
    DuplicateProfile {
        first: usize,
        second: usize,
        profile: usize,
    },
    #[error("user u{} has no profile", .0 + 1)]
    UnknownProfile(usize),
    #[error("user u{} has no demand", .0 + 1)]
    UnknownDemand(usize),
}

/// Users served together by one helper, pairwise distinct profiles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeasibleSet {
    pub helper: usize,
    /// Ascending user indices.
    pub users: Vec<usize>,
}

impl FeasibleSet {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

impl fmt::Display for FeasibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}:{{", self.helper + 1)?;
        for (n, u) in self.users.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "u{}", u + 1)?;
        }
        f.write_str("}")
    }
}

/// Every nonempty choice of at most one user per profile class, sorted by
/// user list. There are `prod(|class| + 1) - 1` of them.
pub fn enumerate_feasible_sets(helper: usize, partition: &ProfilePartition) -> Vec<FeasibleSet> {
    let mut sets: Vec<Vec<usize>> = vec![Vec::new()];
    for class in &partition.classes {
        let mut next = Vec::with_capacity(sets.len() * (class.len() + 1));
        for base in &sets {
            next.push(base.clone());
            for &u in class {
                let mut s = base.clone();
                s.push(u);
                next.push(s);
            }
        }
        sets = next;
    }
    let mut out: Vec<FeasibleSet> = sets
        .into_iter()
        .filter(|s| !s.is_empty())
        .map(|mut users| {
            users.sort_unstable();
            FeasibleSet { helper, users }
        })
        .collect();
    out.sort();
    out
}

/// Member of a padded feasible set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Member {
    User(usize),
    /// Stand-in for a missing profile; has no demand.
    Phantom(usize),
}

/// One XOR term, `W_{d_user, subset}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub user: usize,
    pub subpacket: SubpacketId,
}

/// An XOR of subpackets delivered to `recipients`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    /// Ascending user indices.
    pub recipients: Vec<usize>,
    /// One term per recipient, in recipient order.
    pub terms: Vec<Term>,
}

impl fmt::Display for Codeword {
    /// Canonical text, e.g. `W[d3,{2}] ^ W[d4,{1}]` (1-based indices).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, term) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" ^ ")?;
            }
            write!(f, "W[d{},{{", term.user + 1)?;
            for (m, l) in term.subpacket.subset.iter().enumerate() {
                if m > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", l + 1)?;
            }
            f.write_str("}]")?;
        }
        Ok(())
    }
}

/// A preliminary codeword before phantom removal: `(member, subset)` terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreliminaryCodeword {
    pub terms: Vec<(Member, Vec<usize>)>,
}

impl PreliminaryCodeword {
    fn strip(self, demands: &DemandMap) -> Result<Option<Codeword>, CodebookError> {
        let mut terms = Vec::new();
        for (member, subset) in self.terms {
            if let Member::User(u) = member {
                let chunk = demands.chunk(u).ok_or(CodebookError::UnknownDemand(u))?;
                terms.push(Term {
                    user: u,
                    subpacket: SubpacketId { chunk, subset },
                });
            }
        }
        if terms.is_empty() {
            return Ok(None);
        }
        terms.sort_by_key(|t| t.user);
        Ok(Some(Codeword {
            recipients: terms.iter().map(|t| t.user).collect(),
            terms,
        }))
    }
}

/// Pads `set` with phantoms and forms one preliminary codeword per
/// `(t+1)`-subset of profiles, in lexicographic order of profile sets.
pub fn preliminary_codewords(
    set: &FeasibleSet,
    params: &CacheParams,
    assignment: &ProfileAssignment,
) -> Result<Vec<PreliminaryCodeword>, CodebookError> {
    if set.is_empty() {
        return Err(CodebookError::EmptySet);
    }
    let profiles = params.profiles();
    // Member standing for each profile.
    let mut by_profile: Vec<Option<usize>> = vec![None; profiles];
    for &u in &set.users {
        let l = assignment
            .profile(u)
            .filter(|&l| l < profiles)
            .ok_or(CodebookError::UnknownProfile(u))?;
        if let Some(first) = by_profile[l] {
            return Err(CodebookError::DuplicateProfile {
                first,
                second: u,
                profile: l,
            });
        }
        by_profile[l] = Some(u);
    }
    let members: Vec<Member> = by_profile
        .iter()
        .enumerate()
        .map(|(l, u)| u.map_or(Member::Phantom(l), Member::User))
        .collect();

    let all_profiles: Vec<usize> = (0..profiles).collect();
    Ok(k_subsets(&all_profiles, params.t() + 1)
        .into_iter()
        .map(|group| PreliminaryCodeword {
            terms: group
                .iter()
                .map(|&l| {
                    let rest: Vec<usize> = group.iter().copied().filter(|&x| x != l).collect();
                    (members[l], rest)
                })
                .collect(),
        })
        .collect())
}

/// Final codewords for `set`: `C(L, t+1) - C(L - |set|, t+1)` of them.
pub fn build_codewords(
    set: &FeasibleSet,
    params: &CacheParams,
    demands: &DemandMap,
    assignment: &ProfileAssignment,
) -> Result<Vec<Codeword>, CodebookError> {
    let mut out = Vec::new();
    for pre in preliminary_codewords(set, params, assignment)? {
        if let Some(cw) = pre.strip(demands)? {
            out.push(cw);
        }
    }
    Ok(out)
}

/// Codeword transmissions needed to serve a feasible set of size `served`.
pub fn codeword_count(profiles: usize, t: usize, served: usize) -> u64 {
    debug_assert!(served <= profiles);
    binomial(profiles, t + 1) - binomial(profiles - served, t + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{profile_partition, validate_params};

    /// Profiles of the five users of the two-helper example network,
    /// 0-based: u3 and u5 share profile 1, u4 has profile 2.
    fn example_assignment() -> ProfileAssignment {
        ProfileAssignment::from_vec(vec![2, 1, 0, 1, 0])
    }

    fn set(users: &[usize]) -> FeasibleSet {
        FeasibleSet {
            helper: 1,
            users: users.to_vec(),
        }
    }

    #[test]
    fn feasible_sets_of_example() {
        let a = example_assignment();
        let p = profile_partition(&[2, 3, 4], &a, 3);
        let sets = enumerate_feasible_sets(1, &p);
        let users: Vec<Vec<usize>> = sets.into_iter().map(|s| s.users).collect();
        assert_eq!(
            users,
            vec![vec![2], vec![2, 3], vec![3], vec![3, 4], vec![4]]
        );
    }

    #[test]
    fn feasible_set_counts() {
        let single = ProfilePartition {
            classes: vec![vec![0]],
            empty: 0,
            unassigned: vec![],
        };
        assert_eq!(enumerate_feasible_sets(0, &single).len(), 1);
        let two = ProfilePartition {
            classes: vec![vec![0, 1], vec![2]],
            empty: 0,
            unassigned: vec![],
        };
        assert_eq!(enumerate_feasible_sets(0, &two).len(), 5);
    }

    #[test]
    fn codewords_of_example() {
        let params = validate_params(3, 1, 3).unwrap();
        let a = example_assignment();
        let d = DemandMap::distinct(5);
        let cws = build_codewords(&set(&[2, 3]), &params, &d, &a).unwrap();
        let text: Vec<String> = cws.iter().map(|c| c.to_string()).collect();
        assert_eq!(text, vec!["W[d3,{2}] ^ W[d4,{1}]", "W[d3,{3}]", "W[d4,{3}]"]);

        let single = build_codewords(&set(&[2]), &params, &d, &a).unwrap();
        let text: Vec<String> = single.iter().map(|c| c.to_string()).collect();
        assert_eq!(text, vec!["W[d3,{2}]", "W[d3,{3}]"]);
    }

    #[test]
    fn preliminary_keeps_phantoms() {
        let params = validate_params(3, 1, 3).unwrap();
        let pre = preliminary_codewords(&set(&[2, 3]), &params, &example_assignment()).unwrap();
        assert_eq!(pre.len(), 3);
        assert_eq!(pre[1].terms[1], (Member::Phantom(2), vec![0]));
        assert_eq!(pre[2].terms[1], (Member::Phantom(2), vec![1]));
    }

    #[test]
    fn full_set_has_no_phantoms() {
        let params = validate_params(3, 1, 3).unwrap();
        let a = ProfileAssignment::from_vec(vec![0, 1, 2]);
        let cws = build_codewords(&set(&[0, 1, 2]), &params, &DemandMap::distinct(3), &a).unwrap();
        assert_eq!(cws.len() as u64, binomial(3, 2));
        assert!(cws.iter().all(|c| c.recipients.len() == 2));
    }

    #[test]
    fn rejects_bad_sets() {
        let params = validate_params(3, 1, 3).unwrap();
        let a = example_assignment();
        let d = DemandMap::distinct(5);
        assert_eq!(
            build_codewords(&set(&[2, 4]), &params, &d, &a),
            Err(CodebookError::DuplicateProfile {
                first: 2,
                second: 4,
                profile: 0
            })
        );
        assert_eq!(build_codewords(&set(&[]), &params, &d, &a), Err(CodebookError::EmptySet));
    }

    #[test]
    fn counts() {
        assert_eq!(codeword_count(3, 1, 2), 3);
        assert_eq!(codeword_count(3, 1, 1), 2);
        assert_eq!(codeword_count(5, 1, 5), 10);
        // Uncoded: t = 0 unicasts.
        assert_eq!(codeword_count(1, 0, 1), 1);
    }
}
