//! Experiment runner for the iteration/time tables and convergence curves.
//!
//! Every trial draws its own instance from a seed derived from
//! `(base_seed, cell index, trial index)`; all selected algorithms solve that
//! same instance from the same starting point. Trials run on a rayon pool and
//! are reduced in trial order, so every emitted file except the timing
//! columns is a pure function of the spec.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{gen_instance, objective_for, DatagenError, InstanceKind, InstanceSpec};
use crate::linalg::Vector;
use crate::model::{default_config, CompositeProblem, ResidualKind, SolveResult, SolverConfig};
use crate::solver::{isapg_solve, sapg_solve, spg_solve, NoError, SolveError};

/// Values of `f(xᵏ) − f_min` are clipped below at this floor.
pub const GAP_FLOOR: f64 = 1e-16;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("curves need exactly two algorithms, got {0}")]
    CurveAlgorithms(usize),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "SAPG", alias = "sapg")]
    Sapg,
    #[serde(rename = "SPG", alias = "spg")]
    Spg,
    #[serde(rename = "ISAPG", alias = "isapg")]
    Isapg,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Sapg => "SAPG",
            Algorithm::Spg => "SPG",
            Algorithm::Isapg => "ISAPG",
        }
    }

    /// Runs this algorithm; ISAPG uses the exact gradient and step `1/L`.
    pub fn solve(self, prob: &CompositeProblem, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
        match self {
            Algorithm::Sapg => sapg_solve(prob, &SolverConfig { extrapolate: true, ..cfg.clone() }),
            Algorithm::Spg => spg_solve(prob, &SolverConfig { extrapolate: false, ..cfg.clone() }),
            Algorithm::Isapg => {
                let constants = prob.loss().constants().ok_or(SolveError::MissingConstants(prob.loss().name()))?;
                isapg_solve(prob, cfg, constants.lipschitz_factor, &NoError)
            }
        }
    }
}

/// Solver settings shared by all cells. Unset fields keep their defaults;
/// the start point is `x0_fill·1ₙ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigPatch {
    pub mu0: Option<f64>,
    pub gamma0: Option<f64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub maxiter: Option<usize>,
    pub eps: Option<f64>,
    pub zeta: Option<f64>,
    pub x0_fill: Option<f64>,
    pub residual: Option<ResidualKind>,
    pub max_backtracks: Option<usize>,
}

impl ConfigPatch {
    pub fn apply(&self, n: usize) -> SolverConfig {
        let mut cfg = default_config(n);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        set!(mu0, gamma0, eta, alpha, sigma, maxiter, eps, zeta, residual, max_backtracks);
        if let Some(fill) = self.x0_fill {
            cfg.x0 = Vector::filled(n, fill);
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub m: usize,
    pub n: usize,
    pub spar: f64,
}

impl Cell {
    /// Directory-safe name such as `150x300_s20`.
    pub fn slug(&self) -> String {
        format!("{}x{}_s{}", self.m, self.n, (self.spar * 100.0).round() as i64)
    }
}

fn default_trials() -> usize {
    50
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Sapg, Algorithm::Spg]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: InstanceKind,
    /// `(m, n)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub spar: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub config: ConfigPatch,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub base_seed: u64,
    /// Cells for which per-iteration curves are written.
    #[serde(default)]
    pub curves: Vec<Cell>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let spec: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Grid cells in table order: sizes outer, sparsity inner.
    pub fn cells(&self) -> Vec<Cell> {
        self.sizes
            .iter()
            .flat_map(|&(m, n)| self.spar.iter().map(move |&spar| Cell { m, n, spar }))
            .collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::InvalidSpec(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.sizes.is_empty() || self.spar.is_empty() {
            return bad("sizes and spar must be non-empty");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        for cell in self.cells().iter().chain(&self.curves) {
            InstanceSpec::new(self.kind, cell.m, cell.n, cell.spar, 0).validate()?;
        }
        Ok(())
    }

    fn cell_index(&self, cell: &Cell) -> u64 {
        let grid = self.cells();
        match grid.iter().position(|c| c == cell) {
            Some(i) => i as u64,
            None => (grid.len() + self.curves.iter().position(|c| c == cell).unwrap_or(0)) as u64,
        }
    }
}

fn mix(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}

/// Seed of one trial: SplitMix64 chained over base seed, cell and trial.
pub fn derive_seed(base_seed: u64, cell: u64, trial: u64) -> u64 {
    mix(mix(mix(base_seed) ^ cell) ^ trial)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRow {
    pub m: usize,
    pub n: usize,
    pub spar: f64,
    pub algorithm: &'static str,
    pub trial: usize,
    pub iter: usize,
    pub time_s: f64,
    pub f_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub m: usize,
    pub n: usize,
    pub spar: f64,
    pub algorithm: &'static str,
    pub completed: usize,
    pub failed: usize,
    pub mean_iter: f64,
    pub mean_time_s: f64,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub m: usize,
    pub n: usize,
    pub spar: f64,
    pub algorithm: &'static str,
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub raw: Vec<RawRow>,
    pub failures: Vec<TrialFailure>,
}

impl TableReport {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn row(&self, m: usize, n: usize, spar: f64, algorithm: Algorithm) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.m == m && r.n == n && r.spar == spar && r.algorithm == algorithm.label())
    }
}

type TrialOutcome = Vec<(Algorithm, Result<(usize, f64, f64), String>)>;

fn run_trial(spec: &ExperimentSpec, cell: &Cell, seed: u64) -> TrialOutcome {
    let inst_spec = InstanceSpec::new(spec.kind, cell.m, cell.n, cell.spar, seed);
    let prob = gen_instance(&inst_spec).and_then(|inst| objective_for(&inst, spec.kind));
    let prob = match prob {
        Ok(p) => p,
        Err(e) => return spec.algorithms.iter().map(|&a| (a, Err(e.to_string()))).collect(),
    };
    let cfg = spec.config.apply(cell.n);
    spec.algorithms
        .iter()
        .map(|&algo| {
            let start = Instant::now();
            let out = algo.solve(&prob, &cfg);
            let elapsed = start.elapsed().as_secs_f64();
            (algo, out.map(|r| (r.iterations, elapsed, r.final_objective())).map_err(|e| e.to_string()))
        })
        .collect()
}

/// Averages iterations and solve time over `trials` instances per cell.
pub fn run_table(spec: &ExperimentSpec) -> Result<TableReport, BenchError> {
    spec.validate()?;
    let mut report = TableReport::default();
    for (ci, cell) in spec.cells().iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, cell, derive_seed(spec.base_seed, ci as u64, t as u64)))
            .collect();
        for &algo in &spec.algorithms {
            let (mut iters, mut times, mut done, mut failed) = (0.0, 0.0, 0usize, 0usize);
            for (trial, outcome) in outcomes.iter().enumerate() {
                let Some((_, res)) = outcome.iter().find(|(a, _)| *a == algo) else { continue };
                match res {
                    Ok((iter, time_s, f_final)) => {
                        iters += *iter as f64;
                        times += time_s;
                        done += 1;
                        report.raw.push(RawRow {
                            m: cell.m,
                            n: cell.n,
                            spar: cell.spar,
                            algorithm: algo.label(),
                            trial,
                            iter: *iter,
                            time_s: *time_s,
                            f_final: *f_final,
                        });
                    }
                    Err(error) => {
                        failed += 1;
                        report.failures.push(TrialFailure {
                            m: cell.m,
                            n: cell.n,
                            spar: cell.spar,
                            algorithm: algo.label(),
                            trial,
                            error: error.clone(),
                        });
                    }
                }
            }
            let denom = done.max(1) as f64;
            report.rows.push(TableRow {
                m: cell.m,
                n: cell.n,
                spar: cell.spar,
                algorithm: algo.label(),
                completed: done,
                failed,
                mean_iter: if done > 0 { iters / denom } else { f64::NAN },
                mean_time_s: if done > 0 { times / denom } else { f64::NAN },
                partial: failed > 0,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSeries {
    pub algorithm: &'static str,
    pub iterations: usize,
    /// `f(xᵏ) − f_min` for loop counters `k = 0..=iterations`.
    pub f_gap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub cell: Cell,
    pub seed: u64,
    pub f_min: f64,
    pub series: Vec<CurveSeries>,
}

/// Convergence curves of the two selected algorithms on trial 0 of `cell`.
pub fn run_curves(spec: &ExperimentSpec, cell: &Cell) -> Result<CurveSet, BenchError> {
    if spec.algorithms.len() != 2 {
        return Err(BenchError::CurveAlgorithms(spec.algorithms.len()));
    }
    let seed = derive_seed(spec.base_seed, spec.cell_index(cell), 0);
    let inst = gen_instance(&InstanceSpec::new(spec.kind, cell.m, cell.n, cell.spar, seed))?;
    let prob = objective_for(&inst, spec.kind)?;
    let cfg = spec.config.apply(cell.n);
    let runs = spec
        .algorithms
        .iter()
        .map(|&a| a.solve(&prob, &cfg).map(|r| (a, r)))
        .collect::<Result<Vec<_>, _>>()?;
    let f_min = runs.iter().map(|(_, r)| r.final_objective()).fold(f64::INFINITY, f64::min);
    let series = runs
        .iter()
        .map(|(a, r)| CurveSeries {
            algorithm: a.label(),
            iterations: r.iterations,
            f_gap: r.trace.records.iter().map(|rec| (rec.objective - f_min).max(GAP_FLOOR)).collect(),
        })
        .collect();
    Ok(CurveSet { cell: *cell, seed, f_min, series })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    base_seed: u64,
    spec: &'a ExperimentSpec,
    cells: usize,
    failed_trials: usize,
    curves: Vec<String>,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `tables/`, `curves/` and `manifest.json` under `out`.
pub fn write_outputs(out: &Path, spec: &ExperimentSpec, table: &TableReport, curves: &[CurveSet]) -> Result<(), BenchError> {
    let tables = out.join("tables");
    fs::create_dir_all(&tables)?;
    write_csv(&tables.join("raw.csv"), &table.raw)?;
    write_csv(&tables.join("summary.csv"), &table.rows)?;
    if !table.failures.is_empty() {
        write_csv(&tables.join("failures.csv"), &table.failures)?;
    }
    let mut curve_files = Vec::new();
    for set in curves {
        let dir = out.join("curves").join(set.cell.slug());
        fs::create_dir_all(&dir)?;
        for s in &set.series {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", s.algorithm)))?;
            w.write_record(["k", "f_gap"])?;
            for (k, gap) in s.f_gap.iter().enumerate() {
                w.write_record([k.to_string(), gap.to_string()])?;
            }
            w.flush()?;
            curve_files.push(format!("curves/{}/{}.csv", set.cell.slug(), s.algorithm));
        }
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        base_seed: spec.base_seed,
        spec,
        cells: spec.cells().len(),
        failed_trials: table.failures.len(),
        curves: curve_files,
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// Runs the table and every requested curve, then writes all outputs.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<TableReport, BenchError> {
    let table = run_table(spec)?;
    let curves = spec.curves.iter().map(|c| run_curves(spec, c)).collect::<Result<Vec<_>, _>>()?;
    write_outputs(out, spec, &table, &curves)?;
    Ok(table)
}
