//! End-to-end runs: build an instance per seed, obtain rates with the chosen
//! solver, and collect the results into an [`ExperimentReport`].
//!
//! Every seed derives independent streams for user placement, profile
//! assignment and the scheduler, so a seed names the same network in every
//! sweep cell and cells can be compared pairwise. Cells and seeds run in
//! parallel; results are gathered in input order, which makes reports
//! independent of scheduling.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::time::Instant;

use num_rational::Rational64;
use rayon::prelude::*;

pub use config::{Mode, RunConfig, TopologySpec};
pub use report::{cdf, CellReport, ExperimentReport, SeedResult, SweepSpec, Timing};

use crate::cache::{assign_profiles, CacheParams, ProfileAssignment};
use crate::fairness::{FairnessProblem, FairnessSolution};
use crate::policy::{enumerate_rate_vectors, maximal_indices, unique_vectors, PolicyRate, RateVector};
use crate::rga::{self, RgaConfig};
use crate::rng::{derive_seed, Stream};
use crate::superuser::{solver_vectors, superuser_vectors};
use crate::topology::{generate_hex_grid, place_users_ppp, Topology};
use crate::{Error, Result};
use report::{CellTiming, RgaSummary, WeightEntry};

/// Network, cache parameters and profiles of one seed.
#[derive(Clone, Debug)]
pub struct Instance {
    pub topology: Topology,
    pub params: CacheParams,
    pub assignment: ProfileAssignment,
}

pub fn build_topology(config: &RunConfig, seed: u64) -> Result<Topology> {
    let spec = &config.topology;
    if let Some(path) = &spec.fixture {
        return Ok(Topology::load(path)?);
    }
    let helpers = generate_hex_grid(spec.rings, spec.hex_radius);
    let users = place_users_ppp(
        &helpers,
        config.users_per_helper,
        spec.r_trans,
        derive_seed(seed, Stream::Placement),
    );
    Ok(Topology::new(helpers, users, spec.r_trans, spec.r_inter)?)
}

pub fn build_params(config: &RunConfig) -> Result<CacheParams> {
    Ok(if config.mode == Mode::Uncoded {
        CacheParams::uncoded(config.memory, config.library)?
    } else {
        CacheParams::new(config.profiles, config.memory, config.library)?
            .with_time_unit(config.time_unit)
    })
}

pub fn build_instance(config: &RunConfig, seed: u64) -> Result<Instance> {
    config.validate()?;
    let topology = build_topology(config, seed)?;
    let params = build_params(config)?;
    let users = topology.user_count();
    let assignment = match &config.profile_map {
        Some(map) => {
            if map.len() != users {
                return Err(Error::Config(format!(
                    "profile_map has {} entries for {users} users",
                    map.len()
                )));
            }
            ProfileAssignment::from_vec(map.iter().map(|l| l - 1).collect())
        }
        None => assign_profiles(
            users,
            params.profiles(),
            derive_seed(seed, Stream::Profiles),
        ),
    };
    Ok(Instance {
        topology,
        params,
        assignment,
    })
}

/// Vectors fed to the fairness solver, labelled for the report.
struct LabelledVectors {
    vectors: Vec<RateVector>,
    labels: Vec<(String, String)>,
}

fn analytical_vectors(config: &RunConfig, inst: &Instance) -> Result<LabelledVectors> {
    let policies: Vec<PolicyRate> = enumerate_rate_vectors(
        &inst.topology,
        &inst.params,
        &inst.assignment,
        config.enumeration,
        config.budget,
    )?;
    let (unique, origin) = unique_vectors(&policies);
    let (unique, origin): (Vec<RateVector>, Vec<usize>) = unique
        .into_iter()
        .zip(origin)
        .filter(|(v, _)| !v.is_zero())
        .unzip();
    let keep = maximal_indices(&unique);
    Ok(LabelledVectors {
        vectors: keep.iter().map(|&i| unique[i].clone()).collect(),
        labels: keep
            .iter()
            .map(|&i| {
                let p = &policies[origin[i]].policy;
                (p.pattern.to_string(), p.choice_label())
            })
            .collect(),
    })
}

fn superuser_labelled(inst: &Instance) -> Result<LabelledVectors> {
    let all = superuser_vectors(&inst.topology, &inst.params, &inst.assignment)?;
    let (vectors, origin) = solver_vectors(&all);
    Ok(LabelledVectors {
        vectors,
        labels: origin
            .iter()
            .map(|&i| (all[i].pattern.to_string(), "superuser".to_string()))
            .collect(),
    })
}

/// Removes users no vector serves when `drop` is set; returns the kept
/// columns.
fn restrict_users(vectors: &[Vec<f64>], users: usize, drop: bool) -> (Vec<Vec<f64>>, Vec<usize>) {
    let served: Vec<usize> = if drop {
        (0..users)
            .filter(|&k| vectors.iter().any(|v| v[k] > 0.0))
            .collect()
    } else {
        (0..users).collect()
    };
    let projected = vectors
        .iter()
        .map(|v| served.iter().map(|&k| v[k]).collect())
        .collect();
    (projected, served)
}

fn rounded(objective: f64) -> u64 {
    objective.abs().round() as u64
}

fn solve_vectors(config: &RunConfig, inst: &Instance, lv: LabelledVectors, seed: u64) -> Result<SeedResult> {
    let users = inst.topology.user_count();
    let floats: Vec<Vec<f64>> = lv.vectors.iter().map(RateVector::to_f64).collect();
    let (projected, kept) = restrict_users(&floats, users, config.drop_unserved);
    let mut problem = FairnessProblem::new(projected, config.alpha)?
        .with_max_iters(config.max_solver_iterations);
    if let Some(tol) = config.tol {
        problem = problem.with_tol(tol);
    }
    let sol: FairnessSolution = problem.solve()?;
    let mut rates = vec![0.0; users];
    for (col, &k) in kept.iter().enumerate() {
        rates[k] = sol.r_sum[col];
    }
    let weights = sol
        .weights
        .iter()
        .zip(&lv.labels)
        .filter(|(a, _)| **a > 0.0)
        .map(|(&a, (pattern, choice))| WeightEntry {
            pattern: pattern.clone(),
            choice: choice.clone(),
            a,
        })
        .collect();
    Ok(SeedResult {
        seed,
        helpers: inst.topology.helper_count(),
        users,
        objective: Some(sol.objective),
        abs_objective_rounded: Some(rounded(sol.objective)),
        gap: Some(sol.certificate_gap),
        vectors: Some(lv.vectors.len()),
        rates,
        unserved: (0..users).filter(|k| !kept.contains(k)).map(|k| k + 1).collect(),
        weights,
        rga: None,
        error: None,
    })
}

fn run_rga(config: &RunConfig, inst: &Instance, seed: u64) -> Result<SeedResult> {
    let rc = RgaConfig {
        v_limit: config.v_limit,
        seed: derive_seed(seed, Stream::Scheduler),
        shuffle_degrees: config.shuffle_degrees,
        max_iterations: config.max_iterations,
        trace: false,
    };
    let res = rga::run(&inst.topology, &inst.params, &inst.assignment, &rc)?;
    let users = inst.topology.user_count();
    // A run cut off by the iteration cap may leave users starved.
    let starved: Vec<usize> = (0..users).filter(|&k| res.chunks[k] == 0).collect();
    if !res.terminated && !config.drop_unserved && !starved.is_empty() {
        return Err(rga::RgaError::Stalled { unservable: starved }.into());
    }
    let kept: Vec<usize> = (0..users)
        .filter(|&k| !config.drop_unserved || res.chunks[k] > 0)
        .collect();
    let rates: Vec<f64> = kept.iter().map(|&k| res.rates[k]).collect();
    let objective = crate::fairness::objective(&rates, config.alpha)?;
    debug_assert!(res
        .exact_rates()
        .iter()
        .zip(&res.chunks)
        .all(|(r, &v)| *r * res.elapsed == Rational64::from_integer(v as i64)));
    Ok(SeedResult {
        seed,
        helpers: inst.topology.helper_count(),
        users,
        objective: Some(objective),
        abs_objective_rounded: Some(rounded(objective)),
        gap: None,
        vectors: None,
        rates: res.rates.clone(),
        unserved: (0..users).filter(|k| !kept.contains(k)).map(|k| k + 1).collect(),
        weights: Vec::new(),
        rga: Some(RgaSummary {
            elapsed: res.elapsed.to_string(),
            iterations: res.iterations,
            terminated: res.terminated,
            min_chunks: res.chunks.iter().copied().min().unwrap_or(0),
        }),
        error: None,
    })
}

/// Runs one seed of `config` end to end.
pub fn run_seed(config: &RunConfig, seed: u64) -> Result<SeedResult> {
    let inst = build_instance(config, seed)?;
    match config.solver() {
        Mode::Analytical => {
            let lv = analytical_vectors(config, &inst)?;
            solve_vectors(config, &inst, lv, seed)
        }
        Mode::Superuser => {
            let lv = superuser_labelled(&inst)?;
            solve_vectors(config, &inst, lv, seed)
        }
        Mode::Rga => run_rga(config, &inst, seed),
        Mode::Uncoded => unreachable!("validated: baseline is never uncoded"),
    }
}

fn run_cell(config: &RunConfig) -> Vec<Result<SeedResult>> {
    config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect()
}

/// Runs every seed of `config`. The first failing seed's error is returned.
pub fn cmd_solve(config: &RunConfig) -> Result<(ExperimentReport, Timing)> {
    config.validate()?;
    let start = Instant::now();
    let results = run_cell(config).into_iter().collect::<Result<Vec<_>>>()?;
    let seconds = start.elapsed().as_secs_f64();
    let report = ExperimentReport {
        config: config.clone(),
        sweep: None,
        cells: vec![CellReport::new("solve".into(), config.mode, None, results)],
    };
    let timing = Timing {
        cells: vec![CellTiming {
            label: "solve".into(),
            seconds,
        }],
        total_seconds: seconds,
    };
    Ok((report, timing))
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Users per helper.
    #[value(name = "U")]
    U,
    /// Number of cache profiles; `1` selects the uncoded baseline.
    #[value(name = "L")]
    L,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::U => "U",
            Axis::L => "L",
        }
    }

    /// Configuration of the cell at `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = base.clone();
        match self {
            Axis::U => c.users_per_helper = value,
            Axis::L => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("L must be a positive integer, got {value}")));
                }
                c.profiles = value as usize;
                if c.profiles == 1 && c.mode != Mode::Uncoded {
                    c.baseline = c.mode;
                    c.mode = Mode::Uncoded;
                } else if c.profiles > 1 && c.mode == Mode::Uncoded {
                    c.mode = c.baseline;
                }
            }
        }
        Ok(c)
    }
}

/// Runs every `(value, seed)` cell. Per-seed failures are recorded in the
/// report and do not stop the sweep.
pub fn cmd_sweep(base: &RunConfig, axis: Axis, values: &[f64]) -> Result<(ExperimentReport, Timing)> {
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate()?;
    }
    let start = Instant::now();
    let cells: Vec<(CellReport, f64)> = configs
        .par_iter()
        .zip(values)
        .map(|(c, &v)| {
            let t0 = Instant::now();
            let results = run_cell(c)
                .into_iter()
                .zip(&c.seeds)
                .map(|(r, &seed)| r.unwrap_or_else(|e| SeedResult::failed(seed, e.to_string())))
                .collect();
            let label = format!("{}={}", axis.name(), v);
            (CellReport::new(label, c.mode, Some(v), results), t0.elapsed().as_secs_f64())
        })
        .collect();
    let timing = Timing {
        cells: cells
            .iter()
            .map(|(c, s)| CellTiming {
                label: c.label.clone(),
                seconds: *s,
            })
            .collect(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let report = ExperimentReport {
        config: base.clone(),
        sweep: Some(SweepSpec {
            axis: axis.name().to_string(),
            values: values.to_vec(),
        }),
        cells: cells.into_iter().map(|(c, _)| c).collect(),
    };
    Ok((report, timing))
}

/// Re-runs the experiment a report describes.
pub fn rerun(report: &ExperimentReport) -> Result<(ExperimentReport, Timing)> {
    match &report.sweep {
        None => cmd_solve(&report.config),
        Some(s) => {
            let axis = match s.axis.as_str() {
                "U" => Axis::U,
                "L" => Axis::L,
                other => return Err(Error::Config(format!("unknown sweep axis {other}"))),
            };
            cmd_sweep(&report.config, axis, &s.values)
        }
    }
}

/// One CSV row per policy: pattern bits, chosen sets, then one exact rate
/// column per user.
pub fn rate_table_csv(policies: &[PolicyRate], users: usize) -> String {
    let mut out = String::from("pattern,choice");
    for k in 0..users {
        let _ = write!(out, ",u{}", k + 1);
    }
    out.push('\n');
    for pr in policies {
        let _ = write!(out, "{},{}", pr.policy.pattern, pr.policy.choice_label());
        for r in &pr.rates.0 {
            let _ = write!(out, ",{r}");
        }
        out.push('\n');
    }
    out
}
