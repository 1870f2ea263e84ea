//! Declarative Monte Carlo experiments.
//!
//! A spec expands into grid cells. Every cell runs `trials` independent
//! trials whose seeds derive from the master seed, the data-generating part of
//! the cell (R, SR, σ) and the trial number. Cells that differ only by method,
//! R̂ or λ therefore see identical data. Results are folded in (cell, trial)
//! order, so outputs do not depend on the thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{wcp_solve, WcpConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, Aggregate, MetricsRecord};
use crate::rng::derive_seed;
use crate::signal;
use crate::solver::{solve, SolveResult, SolverConfig};
use crate::tensor::SamplingMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PhaseDiagram,
    RankRobustness,
    NoiseCurve,
    MissingSlices,
    SingleRun,
    FreqTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hmrtc,
    Wcp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hmrtc => "hmrtc",
            Method::Wcp => "wcp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hmrtc" => Ok(Method::Hmrtc),
            "wcp" => Ok(Method::Wcp),
            _ => Err(Error::param("method", format!("unknown method `{s}` (expected hmrtc or wcp)"))),
        }
    }
}

/// Solver settings that override the defaults for every cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub r_hat: Option<usize>,
    pub lambda: Option<f64>,
    pub beta0: Option<f64>,
    pub rho: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub wcp_rel_obj_tol: Option<f64>,
    pub wcp_max_iter: Option<usize>,
}

fn default_dims() -> Vec<usize> {
    vec![20, 20, 20]
}
fn default_ranks() -> Vec<usize> {
    vec![5]
}
fn default_srs() -> Vec<f64> {
    vec![0.4]
}
fn default_sigmas() -> Vec<f64> {
    vec![0.0]
}
fn default_trials() -> usize {
    10
}
fn default_methods() -> Vec<Method> {
    vec![Method::Hmrtc]
}
fn default_true() -> bool {
    true
}
fn default_fraction() -> f64 {
    0.5
}
fn default_zero_pad() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_ranks")]
    pub ranks: Vec<usize>,
    #[serde(default = "default_srs")]
    pub sampling_ratios: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// One λ per σ; when absent every cell uses the solver λ.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Explicit R̂ values.
    #[serde(default)]
    pub r_hats: Option<Vec<usize>>,
    /// R̂ as multiples of the true rank of the cell.
    #[serde(default)]
    pub r_hat_multipliers: Option<Vec<usize>>,
    #[serde(default = "default_true")]
    pub damped: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: SolverOverrides,
    /// Mode whose slices are dropped in `missing_slices`; defaults to the last.
    #[serde(default)]
    pub slice_mode: Option<usize>,
    #[serde(default = "default_fraction")]
    pub slice_fraction: f64,
    #[serde(default = "default_zero_pad")]
    pub zero_pad: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::Spec(format!("field `{field}`: {msg}")));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims", "must be a nonempty list of positive sizes");
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1");
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return bad("ranks", "must be a nonempty list of positive ranks");
        }
        if self.sampling_ratios.is_empty() || self.sampling_ratios.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return bad("sampling_ratios", "must be a nonempty list of values in (0, 1]");
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return bad("sigmas", "must be a nonempty list of finite nonnegative values");
        }
        if let Some(l) = &self.lambdas {
            if l.len() != self.sigmas.len() {
                return bad("lambdas", "must have one entry per sigma");
            }
            if l.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("lambdas", "must be positive");
            }
        }
        match (&self.r_hats, &self.r_hat_multipliers) {
            (Some(_), Some(_)) => return bad("r_hats", "cannot be combined with `r_hat_multipliers`"),
            (Some(v), None) if v.is_empty() || v.contains(&0) => {
                return bad("r_hats", "must be a nonempty list of positive ranks")
            }
            (None, Some(v)) if v.is_empty() || v.contains(&0) => {
                return bad("r_hat_multipliers", "must be a nonempty list of positive multipliers")
            }
            _ => {}
        }
        if self.methods.is_empty() {
            return bad("methods", "must list at least one method");
        }
        if let Some(m) = self.slice_mode {
            if m >= self.dims.len() {
                return bad("slice_mode", "must be a valid mode of `dims`");
            }
        }
        if !(self.slice_fraction >= 0.0 && self.slice_fraction < 1.0) {
            return bad("slice_fraction", "must lie in [0, 1)");
        }
        if self.zero_pad == 0 {
            return bad("zero_pad", "must be at least 1");
        }
        if self.scenario == Scenario::SingleRun && (self.cells().len() != 1 || self.trials != 1) {
            return bad("scenario", "single_run needs exactly one grid cell and `trials` = 1");
        }
        for cell in self.cells() {
            self.solver_config(&cell, 0)
                .validate(&self.dims)
                .map_err(|e| Error::Spec(format!("field `solver`: {e}")))?;
            self.wcp_config(&cell, 0).validate().map_err(|e| Error::Spec(format!("field `solver`: {e}")))?;
        }
        Ok(())
    }

    fn data_cells(&self) -> Vec<(usize, f64, f64, f64)> {
        let lambda_default = self.solver.lambda.unwrap_or(SolverConfig::default().lambda);
        let srs: &[f64] = if self.scenario == Scenario::MissingSlices { &[f64::NAN] } else { &self.sampling_ratios };
        let mut out = Vec::new();
        for &r in &self.ranks {
            for &sr in srs {
                for (k, &sigma) in self.sigmas.iter().enumerate() {
                    let lambda = self.lambdas.as_ref().map_or(lambda_default, |l| l[k]);
                    out.push((r, sr, sigma, lambda));
                }
            }
        }
        out
    }

    /// Grid cells in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let default_r_hat = self.solver.r_hat.unwrap_or(SolverConfig::default().r_hat);
        let mut out = Vec::new();
        for (data_cell, (rank, sr, sigma, lambda)) in self.data_cells().into_iter().enumerate() {
            let r_hats: Vec<usize> = match (&self.r_hats, &self.r_hat_multipliers) {
                (Some(v), _) => v.clone(),
                (None, Some(m)) => m.iter().map(|k| k * rank).collect(),
                (None, None) => vec![default_r_hat],
            };
            for &method in &self.methods {
                for &r_hat in &r_hats {
                    out.push(Cell { data_cell, method, rank, r_hat, sr, sigma, lambda });
                }
            }
        }
        out
    }

    fn solver_config(&self, cell: &Cell, seed: u64) -> SolverConfig {
        let d = SolverConfig::default();
        let o = &self.solver;
        SolverConfig {
            r_hat: cell.r_hat,
            lambda: cell.lambda,
            beta0: o.beta0.unwrap_or(d.beta0),
            rho: o.rho.unwrap_or(d.rho),
            tol: o.tol.unwrap_or(d.tol),
            max_iter: o.max_iter.unwrap_or(d.max_iter),
            seed,
            ..d
        }
    }

    fn wcp_config(&self, cell: &Cell, seed: u64) -> WcpConfig {
        let d = WcpConfig::default();
        WcpConfig {
            r_hat: cell.r_hat,
            max_iter: self.solver.wcp_max_iter.unwrap_or(d.max_iter),
            rel_obj_tol: self.solver.wcp_rel_obj_tol.unwrap_or(d.rel_obj_tol),
            seed,
            ..d
        }
    }

    fn trial_seed(&self, cell: &Cell, trial: usize) -> u64 {
        if self.scenario == Scenario::SingleRun {
            self.master_seed
        } else {
            derive_seed(self.master_seed, cell.data_cell as u64, trial as u64)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    #[serde(skip)]
    pub data_cell: usize,
    pub method: Method,
    #[serde(rename = "R")]
    pub rank: usize,
    pub r_hat: usize,
    /// NaN in `missing_slices`, where the mask is slice-structured.
    pub sr: f64,
    pub sigma: f64,
    pub lambda: f64,
}

/// One row of `trials.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    #[serde(rename = "R")]
    pub rank: usize,
    pub r_hat: usize,
    pub sr: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub rlne: f64,
    pub clipped_rlne: f64,
    pub success: Option<bool>,
    pub freq_rmse: Option<f64>,
    pub iters: usize,
    pub wall_time_s: f64,
}

impl TrialRow {
    fn record(&self) -> MetricsRecord {
        MetricsRecord {
            rlne: self.rlne,
            clipped_rlne: self.clipped_rlne,
            success: self.success,
            freq_rmse: self.freq_rmse,
            wall_time: self.wall_time_s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: Cell,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub dims: Vec<usize>,
    pub damped: bool,
    pub trials: usize,
    pub master_seed: u64,
    pub cells: Vec<CellSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for the trial pool; 0 uses the rayon default.
    pub threads: usize,
    /// Run every solver sequentially inside its trial.
    pub deterministic: bool,
}

/// Everything a trial produces before timing is attached.
pub struct TrialOutcome {
    pub result: SolveResult,
    pub mask: SamplingMask,
    pub rlne: f64,
    pub success: Option<bool>,
    pub freq_rmse: Option<f64>,
}

/// Generates the data of one trial and solves it.
pub fn run_trial(spec: &ExperimentSpec, cell: &Cell, seed: u64, parallel: bool) -> Result<TrialOutcome> {
    let model = signal::random_model(&spec.dims, cell.rank, spec.damped, seed)?;
    let (truth, _) = signal::normalize_max(&model.synthesize())?;
    let noisy = if cell.sigma > 0.0 { signal::add_noise(&truth, cell.sigma, seed)? } else { truth.clone() };
    let mask = if spec.scenario == Scenario::MissingSlices {
        let mode = spec.slice_mode.unwrap_or(spec.dims.len() - 1);
        signal::drop_slices(&spec.dims, mode, spec.slice_fraction, seed)?
    } else {
        signal::sample_uniform(&spec.dims, cell.sr, seed)?
    };
    let observed = noisy.apply_mask(&mask)?;
    let result = match cell.method {
        Method::Hmrtc => {
            let cfg = SolverConfig { parallel, ..spec.solver_config(cell, seed) };
            solve(&observed, &mask, &cfg)?
        }
        Method::Wcp => {
            let cfg = WcpConfig { parallel, ..spec.wcp_config(cell, seed) };
            wcp_solve(&observed, &mask, &cfg)?
        }
    };
    let rlne = metrics::rlne(&result.reconstruction, &truth)?;
    let success = (cell.r_hat >= cell.rank)
        .then(|| metrics::factor_success(&model.factors(), &result.factors))
        .transpose()?;
    let freq_rmse = if spec.scenario == Scenario::FreqTable {
        let est = metrics::estimate_frequencies(&result.reconstruction, cell.rank, spec.zero_pad)?;
        if est.short {
            None
        } else {
            Some(metrics::freq_rmse(&model.frequencies(), &est.peaks)?)
        }
    } else {
        None
    };
    Ok(TrialOutcome { result, mask, rlne, success, freq_rmse })
}

pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<ExperimentOutput> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let parallel = !opts.deterministic;
    let job = |&(c, t): &(usize, usize)| -> Result<TrialRow> {
        let cell = &cells[c];
        let seed = spec.trial_seed(cell, t);
        let start = Instant::now();
        let out = run_trial(spec, cell, seed, parallel)?;
        Ok(TrialRow {
            trial: t,
            seed,
            method: cell.method,
            rank: cell.rank,
            r_hat: cell.r_hat,
            sr: if spec.scenario == Scenario::MissingSlices { out.mask.sampling_ratio() } else { cell.sr },
            sigma: cell.sigma,
            lambda: cell.lambda,
            rlne: out.rlne,
            clipped_rlne: metrics::clip_rlne(out.rlne),
            success: out.success,
            freq_rmse: out.freq_rmse,
            iters: out.result.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    let rows: Vec<TrialRow> = pool.install(|| jobs.par_iter().map(job).collect::<Result<Vec<_>>>())?;

    let mut summaries = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let records: Vec<MetricsRecord> =
            rows[c * spec.trials..(c + 1) * spec.trials].iter().map(TrialRow::record).collect();
        summaries.push(CellSummary { cell: cell.clone(), aggregate: metrics::monte_carlo_average(&records)? });
    }
    Ok(ExperimentOutput {
        rows,
        summary: Summary {
            scenario: spec.scenario,
            dims: spec.dims.clone(),
            damped: spec.damped,
            trials: spec.trials,
            master_seed: spec.master_seed,
            cells: summaries,
        },
    })
}

pub fn write_trials_csv<W: std::io::Write>(rows: &[TrialRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io("trials.csv", e))?;
    Ok(())
}

impl ExperimentOutput {
    /// Writes `trials.csv` and `summary.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("trials.csv");
        let f = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_trials_csv(&self.rows, std::io::BufWriter::new(f))?;
        let json_path = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&self.summary)?;
        fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;
        Ok(())
    }
}
