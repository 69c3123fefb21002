//! Experiment reports and their on-disk layout.
//!
//! `<out>/report.json` holds the full configuration and every number a run
//! produced and is byte-for-byte reproducible. Wall-clock timings go to
//! `<out>/timing.json`. Per-user rates go to `rates.csv` and the pooled rate
//! CDF of every cell to `cdf_<cell>.csv`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use crate::Result;

/// Time-sharing weight of one solver vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub pattern: String,
    pub choice: String,
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RgaSummary {
    /// Exact elapsed time.
    pub elapsed: String,
    pub iterations: u64,
    pub terminated: bool,
    pub min_chunks: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub helpers: usize,
    pub users: usize,
    pub objective: Option<f64>,
    /// Nearest integer to `|objective|`.
    pub abs_objective_rounded: Option<u64>,
    pub gap: Option<f64>,
    /// Vectors handed to the solver.
    pub vectors: Option<usize>,
    pub rates: Vec<f64>,
    /// 1-based users excluded from the objective.
    pub unserved: Vec<usize>,
    pub weights: Vec<WeightEntry>,
    pub rga: Option<RgaSummary>,
    pub error: Option<String>,
}

impl SeedResult {
    pub fn failed(seed: u64, error: String) -> Self {
        Self {
            seed,
            helpers: 0,
            users: 0,
            objective: None,
            abs_objective_rounded: None,
            gap: None,
            vectors: None,
            rates: Vec::new(),
            unserved: Vec::new(),
            weights: Vec::new(),
            rga: None,
            error: Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub mode: Mode,
    /// Swept value, if any.
    pub value: Option<f64>,
    pub results: Vec<SeedResult>,
    /// Mean of `|objective|` over successful seeds.
    pub mean_abs_objective: Option<f64>,
    /// Mean of `round(|objective|)` over successful seeds.
    pub mean_rounded: Option<f64>,
    pub failures: usize,
}

impl CellReport {
    pub fn new(label: String, mode: Mode, value: Option<f64>, results: Vec<SeedResult>) -> Self {
        let ok: Vec<&SeedResult> = results.iter().filter(|r| r.objective.is_some()).collect();
        let mean = |f: &dyn Fn(&SeedResult) -> f64| {
            (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
        };
        let mean_abs_objective = mean(&|r| r.objective.unwrap().abs());
        let mean_rounded = mean(&|r| r.abs_objective_rounded.unwrap() as f64);
        Self {
            label,
            mode,
            value,
            failures: results.len() - ok.len(),
            results,
            mean_abs_objective,
            mean_rounded,
        }
    }

    /// Rates of every successful seed, pooled.
    pub fn pooled_rates(&self) -> Vec<f64> {
        self.results
            .iter()
            .filter(|r| r.error.is_none())
            .flat_map(|r| r.rates.iter().copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub sweep: Option<SweepSpec>,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub label: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cells: Vec<CellTiming>,
    pub total_seconds: f64,
}

/// Empirical CDF: one point per distinct rate, with the fraction of rates
/// at or below it.
pub fn cdf(rates: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &r) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 = frac,
            _ => out.push((r, frac)),
        }
    }
    out
}

/// File-name-safe cell label.
fn file_label(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            '=' => None,
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' => Some(c),
            _ => Some('_'),
        })
        .collect()
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn rates_csv(&self) -> String {
        let mut out = String::from("cell,seed,user,rate\n");
        for cell in &self.cells {
            for r in &cell.results {
                for (k, rate) in r.rates.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{}", cell.label, r.seed, k + 1, rate);
                }
            }
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::from("cell\tmode\tmean|f|\tmean round(|f|)\tfailures\n");
        for c in &self.cells {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                out,
                "{}\t{:?}\t{}\t{}\t{}",
                c.label,
                c.mode,
                fmt(c.mean_abs_objective),
                fmt(c.mean_rounded),
                c.failures
            );
        }
        out
    }

    pub fn write(&self, timing: &Timing, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        std::fs::write(dir.join("rates.csv"), self.rates_csv())?;
        for cell in &self.cells {
            let rates = cell.pooled_rates();
            let mut text = String::from("rate,fraction\n");
            if !rates.is_empty() {
                for (r, f) in cdf(&rates) {
                    let _ = writeln!(text, "{r},{f}");
                }
            }
            std::fs::write(dir.join(format!("cdf_{}.csv", file_label(&cell.label))), text)?;
        }
        std::fs::write(
            dir.join("timing.json"),
            serde_json::to_string_pretty(timing)? + "\n",
        )?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_points() {
        assert_eq!(cdf(&[0.5]), vec![(0.5, 1.0)]);
        let third = 1.0 / 3.0;
        assert_eq!(cdf(&[third, 0.5, third]), vec![(third, 2.0 / 3.0), (0.5, 1.0)]);
    }

    #[test]
    fn labels_are_file_safe() {
        assert_eq!(file_label("U=2.5"), "U2.5");
        assert_eq!(file_label("solve"), "solve");
    }
}
