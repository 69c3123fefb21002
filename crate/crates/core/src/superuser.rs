//! One policy per activation pattern: users of the same helper and profile
//! are merged into a super-user that takes the helper's rate, split equally
//! among its members.
//!
//! The helper serves one super-user per nonempty class, so its rate is
//! `1 / n(L - l_empty)`; each member of class `l` gets that rate divided by
//! the class size. The resulting region is contained in the full throughput
//! region, so its optimum can only be lower.

use num_rational::Rational64;

use crate::cache::{CacheParams, ProfileAssignment};
use crate::fairness::{FairnessError, FairnessProblem, FairnessSolution};
use crate::policy::{enumerate_patterns, pattern_classes, PolicyError, RateVector};
use crate::topology::{ActivationPattern, Topology};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperUserVector {
    pub pattern: ActivationPattern,
    pub rates: RateVector,
}

pub fn superuser_vector(
    topology: &Topology,
    pattern: &ActivationPattern,
    params: &CacheParams,
    assignment: &ProfileAssignment,
) -> SuperUserVector {
    let mut rates = RateVector::zeros(topology.user_count());
    for h in pattern_classes(topology, pattern, params, assignment) {
        let served = h.partition.nonempty_classes();
        if served == 0 {
            continue;
        }
        let helper_rate = params.helper_rate(served);
        for class in h.partition.classes.iter().filter(|c| !c.is_empty()) {
            let share = helper_rate / Rational64::from_integer(class.len() as i64);
            for &u in class {
                rates.0[u] = share;
            }
        }
    }
    SuperUserVector {
        pattern: pattern.clone(),
        rates,
    }
}

/// One vector per pattern, `2^H` in total, in pattern order.
pub fn superuser_vectors(
    topology: &Topology,
    params: &CacheParams,
    assignment: &ProfileAssignment,
) -> Result<Vec<SuperUserVector>, PolicyError> {
    Ok(enumerate_patterns(topology.helper_count())?
        .iter()
        .map(|p| superuser_vector(topology, p, params, assignment))
        .collect())
}

#[derive(Debug, thiserror::Error)]
pub enum SuperUserError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
}

/// Solver input: the nonzero super-user vectors, deduplicated, with the
/// index of the first pattern producing each.
pub fn solver_vectors(vectors: &[SuperUserVector]) -> (Vec<RateVector>, Vec<usize>) {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut origin = Vec::new();
    for (n, v) in vectors.iter().enumerate() {
        if !v.rates.is_zero() && seen.insert(v.rates.clone()) {
            out.push(v.rates.clone());
            origin.push(n);
        }
    }
    (out, origin)
}

pub fn solve_superuser(
    topology: &Topology,
    params: &CacheParams,
    assignment: &ProfileAssignment,
    alpha: f64,
    tol: Option<f64>,
) -> Result<FairnessSolution, SuperUserError> {
    let vectors = superuser_vectors(topology, params, assignment)?;
    let (unique, _) = solver_vectors(&vectors);
    let mut problem = FairnessProblem::from_rationals(&unique, alpha)?;
    if let Some(tol) = tol {
        problem = problem.with_tol(tol);
    }
    Ok(problem.solve()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::validate_params;
    use crate::topology::Point2D;

    fn line_topology(users: &[f64]) -> Topology {
        Topology::new(
            vec![Point2D::new(0.0, 0.0)],
            users.iter().map(|&x| Point2D::new(x, 0.0)).collect(),
            1.0,
            1.2,
        )
        .unwrap()
    }

    #[test]
    fn single_user_gets_helper_rate() {
        let t = line_topology(&[0.5]);
        let params = validate_params(3, 1, 3).unwrap();
        let a = ProfileAssignment::from_vec(vec![0]);
        let v = superuser_vector(&t, &ActivationPattern::from_bits(vec![true]), &params, &a);
        assert_eq!(v.rates.0, vec![Rational64::new(1, 2)]);
        let idle = superuser_vector(&t, &ActivationPattern::idle(1), &params, &a);
        assert!(idle.rates.is_zero());
    }

    #[test]
    fn class_mass_is_conserved() {
        let t = line_topology(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let params = validate_params(3, 1, 3).unwrap();
        let a = ProfileAssignment::from_vec(vec![0, 0, 0, 1, 1, 2]);
        let v = superuser_vector(&t, &ActivationPattern::from_bits(vec![true]), &params, &a);
        let r = params.helper_rate(3);
        for l in 0..3 {
            let mass: Rational64 = (0..6)
                .filter(|&k| a.profile(k) == Some(l))
                .map(|k| v.rates.0[k])
                .sum();
            assert_eq!(mass, r);
        }
        assert_eq!(superuser_vectors(&t, &params, &a).unwrap().len(), 2);
    }
}
