//! Alpha-fair utility maximization over the convex hull of rate vectors.
//!
//! The decision variable is a weight vector on the simplex (the time share
//! of every policy); the aggregate rate is `r_sum = sum_v a_v * vectors[v]`.
//! The solver is Frank-Wolfe with away steps, started from the uniform
//! weights, with an exact line search done by bisection on the directional
//! derivative. The linear subproblem over the simplex is a vertex argmax, and
//! the Frank-Wolfe gap `max_v grad . (e_v - a)` bounds the distance to the
//! optimum for a concave objective, so it doubles as the stopping
//! certificate.

use thiserror::Error;

use crate::policy::RateVector;

pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Bisection stops once the bracket is this narrow.
const LINE_SEARCH_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FairnessError {
    #[error("users {} have zero rate in every vector", fmt_users(.users))]
    Infeasible { users: Vec<usize> },
    #[error("rate of user u{} is not positive", .user + 1)]
    NonPositiveRate { user: usize },
    #[error("iteration cap reached with gap {gap:e}")]
    BudgetExceeded {
        best: Box<FairnessSolution>,
        gap: f64,
    },
    #[error("no rate vectors")]
    Empty,
    #[error("rate vectors have inconsistent lengths")]
    Ragged,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

fn fmt_users(users: &[usize]) -> String {
    users
        .iter()
        .map(|u| format!("u{}", u + 1))
        .collect::<Vec<_>>()
        .join(",")
}

/// Alpha-fair utility of an aggregate rate vector: `sum log r` for
/// `alpha = 1`, `sum r^(1-alpha) / (1-alpha)` otherwise (`sum r` at zero).
pub fn objective(rates: &[f64], alpha: f64) -> Result<f64, FairnessError> {
    if alpha >= 1.0 {
        if let Some(user) = rates.iter().position(|&r| r <= 0.0) {
            return Err(FairnessError::NonPositiveRate { user });
        }
    }
    Ok(rates.iter().map(|&r| utility(r, alpha)).sum())
}

fn utility(r: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        r.ln()
    } else if alpha == 0.0 {
        r
    } else {
        r.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

/// `d utility / d r`.
fn marginal(r: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        1.0 / r
    } else {
        r.powf(-alpha)
    }
}

/// Users that get zero rate from every vector.
pub fn feasibility_check(vectors: &[Vec<f64>], users: usize) -> Vec<usize> {
    (0..users)
        .filter(|&k| vectors.iter().all(|v| v[k] <= 0.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairnessSolution {
    /// One weight per input vector, on the simplex.
    pub weights: Vec<f64>,
    pub r_sum: Vec<f64>,
    pub objective: f64,
    /// Frank-Wolfe gap at the returned point.
    pub certificate_gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct FairnessProblem {
    vectors: Vec<Vec<f64>>,
    users: usize,
    alpha: f64,
    tol: f64,
    max_iters: usize,
}

impl FairnessProblem {
    /// Default tolerance is `1e-6 * K`.
    pub fn new(vectors: Vec<Vec<f64>>, alpha: f64) -> Result<Self, FairnessError> {
        let users = vectors.first().ok_or(FairnessError::Empty)?.len();
        if vectors.iter().any(|v| v.len() != users) {
            return Err(FairnessError::Ragged);
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(FairnessError::InvalidParameter("alpha must be finite and >= 0"));
        }
        if vectors.iter().flatten().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(FairnessError::InvalidParameter("rates must be finite and >= 0"));
        }
        if alpha > 0.0 {
            let users = feasibility_check(&vectors, users);
            if !users.is_empty() {
                return Err(FairnessError::Infeasible { users });
            }
        }
        Ok(Self {
            vectors,
            users,
            alpha,
            tol: 1e-6 * users.max(1) as f64,
            max_iters: DEFAULT_MAX_ITERS,
        })
    }

    /// Rationals are converted to floats once, here.
    pub fn from_rationals(vectors: &[RateVector], alpha: f64) -> Result<Self, FairnessError> {
        Self::new(vectors.iter().map(RateVector::to_f64).collect(), alpha)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn aggregate(&self, weights: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.users];
        for (a, v) in weights.iter().zip(&self.vectors) {
            if *a != 0.0 {
                for (rk, vk) in r.iter_mut().zip(v) {
                    *rk += a * vk;
                }
            }
        }
        r
    }

    /// Objective as a function of the weights.
    pub fn value(&self, weights: &[f64]) -> Result<f64, FairnessError> {
        objective(&self.aggregate(weights), self.alpha)
    }

    /// `d f / d a_v = sum_k vectors[v][k] * U'(r_sum[k])`.
    pub fn gradient(&self, weights: &[f64]) -> Vec<f64> {
        let r = self.aggregate(weights);
        self.gradient_at(&r)
    }

    fn gradient_at(&self, r_sum: &[f64]) -> Vec<f64> {
        let m: Vec<f64> = r_sum.iter().map(|&r| marginal(r, self.alpha)).collect();
        self.vectors
            .iter()
            .map(|v| v.iter().zip(&m).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn solve(&self) -> Result<FairnessSolution, FairnessError> {
        let n = self.vectors.len();
        self.solve_from(vec![1.0 / n as f64; n])
    }

    /// Runs the solver from a given point of the simplex. The start must give
    /// every user a positive rate when `alpha > 0`.
    pub fn solve_from(&self, mut weights: Vec<f64>) -> Result<FairnessSolution, FairnessError> {
        if weights.len() != self.vectors.len() {
            return Err(FairnessError::InvalidParameter("weight vector has the wrong length"));
        }
        let mut r = self.aggregate(&weights);
        if self.alpha > 0.0 {
            if let Some(user) = r.iter().position(|&x| x <= 0.0) {
                return Err(FairnessError::NonPositiveRate { user });
            }
        }
        let mut gap = f64::INFINITY;
        for it in 0..self.max_iters {
            let grad = self.gradient_at(&r);
            let at: f64 = weights.iter().zip(&grad).map(|(a, g)| a * g).sum();
            let (toward, g_max) = argmax(&grad);
            gap = g_max - at;
            if gap <= self.tol {
                return Ok(self.finish(weights, gap, it));
            }

            // Away vertex: the worst vertex currently carrying weight.
            let (away, g_min) = grad
                .iter()
                .enumerate()
                .filter(|(v, _)| weights[*v] > 0.0)
                .fold((usize::MAX, f64::INFINITY), |best, (v, &g)| {
                    if g < best.1 {
                        (v, g)
                    } else {
                        best
                    }
                });
            let away_gap = at - g_min;

            if gap >= away_gap || weights[away] >= 1.0 {
                let dir: Vec<f64> = self.vectors[toward].iter().zip(&r).map(|(v, x)| v - x).collect();
                let step = self.line_search(&r, &dir, 1.0);
                for a in weights.iter_mut() {
                    *a *= 1.0 - step;
                }
                weights[toward] += step;
                if step == 1.0 {
                    weights.iter_mut().for_each(|a| *a = 0.0);
                    weights[toward] = 1.0;
                }
            } else {
                let max_step = weights[away] / (1.0 - weights[away]);
                let dir: Vec<f64> = r.iter().zip(&self.vectors[away]).map(|(x, v)| x - v).collect();
                let step = self.line_search(&r, &dir, max_step);
                for a in weights.iter_mut() {
                    *a *= 1.0 + step;
                }
                weights[away] -= step;
                if step == max_step {
                    weights[away] = 0.0;
                }
            }
            for a in weights.iter_mut() {
                if *a < 0.0 {
                    *a = 0.0;
                }
            }
            r = self.aggregate(&weights);
        }
        let best = self.finish(weights, gap, self.max_iters);
        Err(FairnessError::BudgetExceeded {
            gap: best.certificate_gap,
            best: Box::new(best),
        })
    }

    fn finish(&self, weights: Vec<f64>, gap: f64, iterations: usize) -> FairnessSolution {
        let r_sum = self.aggregate(&weights);
        let objective = objective(&r_sum, self.alpha).unwrap_or(f64::NEG_INFINITY);
        FairnessSolution {
            weights,
            r_sum,
            objective,
            certificate_gap: gap.max(0.0),
            iterations,
        }
    }

    /// Derivative of `f(r + s * dir)` in `s`; `-inf` once a rate leaves the
    /// domain.
    fn slope(&self, r: &[f64], dir: &[f64], s: f64) -> f64 {
        let mut acc = 0.0;
        for (x, d) in r.iter().zip(dir) {
            let y = x + s * d;
            if self.alpha > 0.0 && y <= 0.0 {
                if *d < 0.0 {
                    return f64::NEG_INFINITY;
                }
                continue;
            }
            acc += d * marginal(y, self.alpha);
        }
        acc
    }

    /// Maximizes the concave `f(r + s * dir)` over `s` in `[0, max_step]`.
    fn line_search(&self, r: &[f64], dir: &[f64], max_step: f64) -> f64 {
        if self.slope(r, dir, max_step) >= 0.0 {
            return max_step;
        }
        let (mut lo, mut hi) = (0.0, max_step);
        while hi - lo > LINE_SEARCH_TOL {
            let mid = 0.5 * (lo + hi);
            if self.slope(r, dir, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// First index of the largest entry.
fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_values() {
        assert_eq!(objective(&[1.0, 1.0, 1.0], 1.0).unwrap(), 0.0);
        assert_eq!(objective(&[0.5, 0.5], 0.0).unwrap(), 1.0);
        let third = objective(&[1.0 / 3.0, 1.0 / 3.0], 1.0).unwrap();
        assert!((third - (-2.197_224_577_336_219_6)).abs() < 1e-12);
        assert!(matches!(
            objective(&[0.5, 0.0], 1.0),
            Err(FairnessError::NonPositiveRate { user: 1 })
        ));
        // alpha = 2: sum -1/r.
        assert!((objective(&[0.5, 0.25], 2.0).unwrap() - (-6.0)).abs() < 1e-12);
    }

    #[test]
    fn single_vector() {
        let p = FairnessProblem::new(vec![vec![1.0 / 3.0, 1.0 / 3.0]], 1.0).unwrap();
        let s = p.solve().unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert_eq!(s.r_sum, vec![1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn symmetric_pair() {
        let p = FairnessProblem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        let s = p.solve().unwrap();
        assert!((s.weights[0] - 0.5).abs() < 1e-9);
        assert!((s.r_sum[1] - 0.5).abs() < 1e-9);
        assert!(s.certificate_gap <= p.tol());
    }

    #[test]
    fn infeasible_is_reported() {
        let e = FairnessProblem::new(vec![vec![0.0, 0.5]], 1.0).unwrap_err();
        assert!(matches!(e, FairnessError::Infeasible { users } if users == vec![0]));
        assert_eq!(feasibility_check(&[vec![0.0, 0.5]], 2), vec![0]);
        assert!(feasibility_check(&[vec![1.0 / 3.0, 0.0], vec![0.0, 1.0 / 3.0]], 2).is_empty());
        // Sum-rate tolerates unserved users.
        assert!(FairnessProblem::new(vec![vec![0.0, 0.5]], 0.0).is_ok());
    }

    #[test]
    fn sum_rate_picks_a_vertex() {
        let p = FairnessProblem::new(
            vec![vec![0.5, 0.0, 0.0], vec![0.2, 0.2, 0.2], vec![0.0, 0.0, 0.4]],
            0.0,
        )
        .unwrap();
        let s = p.solve().unwrap();
        assert!(s.weights.contains(&1.0));
        assert!((s.objective - 0.6).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap() {
        let p = FairnessProblem::new(
            vec![vec![1.0, 0.1, 0.0], vec![0.0, 0.7, 0.2], vec![0.3, 0.0, 0.9]],
            1.0,
        )
            .unwrap()
            .with_tol(0.0)
            .with_max_iters(3);
        match p.solve() {
            Err(FairnessError::BudgetExceeded { best, gap }) => {
                assert_eq!(best.certificate_gap, gap);
                assert!((best.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(FairnessProblem::new(vec![], 1.0), Err(FairnessError::Empty)));
        assert!(matches!(
            FairnessProblem::new(vec![vec![1.0], vec![1.0, 2.0]], 1.0),
            Err(FairnessError::Ragged)
        ));
        assert!(FairnessProblem::new(vec![vec![1.0]], -1.0).is_err());
    }
}
