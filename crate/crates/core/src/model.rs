//! Problem assembly, solver configuration and solve records.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vector;
use crate::prox::ProximablePart;
use crate::smoothing::SmoothableLoss;

#[derive(Debug, Error)]
#[error("loss has dimension {loss} but the proximable part has dimension {reg}")]
pub struct DimensionError {
    pub loss: usize,
    pub reg: usize,
}

/// `min_{x ∈ X} c(x) + g(x)` with `c` smoothable and `g` proximable.
#[derive(Debug)]
pub struct CompositeProblem {
    loss: Box<dyn SmoothableLoss>,
    reg: ProximablePart,
}

impl CompositeProblem {
    pub fn new(loss: Box<dyn SmoothableLoss>, reg: ProximablePart) -> Result<Self, DimensionError> {
        if loss.dim() != reg.dim() {
            return Err(DimensionError { loss: loss.dim(), reg: reg.dim() });
        }
        Ok(Self { loss, reg })
    }

    pub fn loss(&self) -> &dyn SmoothableLoss {
        self.loss.as_ref()
    }

    pub fn reg(&self) -> &ProximablePart {
        &self.reg
    }

    pub fn dim(&self) -> usize {
        self.reg.dim()
    }

    /// `f(x) = c(x) + g(x)`
    pub fn objective(&self, x: &Vector) -> f64 {
        self.loss.exact_value(x) + self.reg.value(x)
    }

    /// `f̃(x, μ) = c̃(x, μ) + g(x)`
    pub fn smoothed_objective(&self, x: &Vector, mu: f64) -> f64 {
        self.loss.smooth_value(x, mu) + self.reg.value(x)
    }
}

/// Which gradient the stopping residual uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// `‖x − prox_{ζg}(x − ζ∇c̃(x, μ))‖_∞`
    #[default]
    ProxGradient,
    /// `‖x − P_X(x − ζ∇(c̃(x, μ) + g̃(x, μ)))‖_∞` with the ℓ1 penalty smoothed
    /// by the same Huber-type function as the loss.
    SmoothedPenalty,
}

fn default_max_backtracks() -> usize {
    100
}

/// All scalars of the SAPG/SPG/ISAPG iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mu0: f64,
    pub gamma0: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub eta: f64,
    /// Extrapolation parameter, strictly greater than 3.
    pub alpha: f64,
    /// Exponent of the log factor in the μ schedule, in (1/2, 1].
    pub sigma: f64,
    pub maxiter: usize,
    pub eps: f64,
    pub zeta: f64,
    /// `false` turns SAPG into SPG.
    pub extrapolate: bool,
    pub x0: Vector,
    #[serde(default)]
    pub residual: ResidualKind,
    #[serde(default = "default_max_backtracks")]
    pub max_backtracks: usize,
}

/// Default parameters used by the benchmark experiments, with
/// `x⁰ = 0.1·1ₙ`.
pub fn default_config(n: usize) -> SolverConfig {
    SolverConfig {
        mu0: 0.8,
        gamma0: 1.0,
        eta: 0.5,
        alpha: 4.0,
        sigma: 0.75,
        maxiter: 15000,
        eps: 1e-3,
        zeta: 3e-3,
        extrapolate: true,
        x0: Vector::filled(n, 0.1),
        residual: ResidualKind::ProxGradient,
        max_backtracks: default_max_backtracks(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn fields(&self) -> Vec<&'static str> {
        self.0.iter().map(|i| i.field).collect()
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "invalid solver config: {}", parts.join("; "))
    }
}

/// Checks every config invariant against `prob`, collecting all violations.
pub fn validate(cfg: &SolverConfig, prob: &CompositeProblem) -> Result<(), ConfigErrors> {
    let mut issues = Vec::new();
    let mut push = |field: &'static str, message: String| issues.push(ConfigIssue { field, message });

    if !(cfg.mu0 > 0.0 && cfg.mu0.is_finite()) {
        push("mu0", format!("mu0 must be positive, got {}", cfg.mu0));
    }
    if !(cfg.gamma0 > 0.0 && cfg.gamma0.is_finite()) {
        push("gamma0", format!("gamma0 must be positive, got {}", cfg.gamma0));
    }
    if !(cfg.eta > 0.0 && cfg.eta < 1.0) {
        push("eta", format!("eta must lie in (0, 1), got {}", cfg.eta));
    }
    if !(cfg.alpha > 3.0 && cfg.alpha.is_finite()) {
        push("alpha", format!("alpha must exceed 3, got {}", cfg.alpha));
    }
    if !(cfg.sigma > 0.5 && cfg.sigma <= 1.0) {
        push("sigma", format!("sigma must lie in (1/2, 1], got {}", cfg.sigma));
    }
    if cfg.maxiter == 0 {
        push("maxiter", "maxiter must be positive".to_string());
    }
    if !(cfg.eps >= 0.0) {
        push("eps", format!("eps must be nonnegative, got {}", cfg.eps));
    }
    if !(cfg.zeta > 0.0 && cfg.zeta.is_finite()) {
        push("zeta", format!("zeta must be positive, got {}", cfg.zeta));
    }
    if cfg.max_backtracks == 0 {
        push("max_backtracks", "max_backtracks must be positive".to_string());
    }
    if cfg.x0.len() != prob.dim() {
        push("x0", format!("x0 has length {}, problem dimension is {}", cfg.x0.len(), prob.dim()));
    } else if !prob.reg().bounds().contains(&cfg.x0) {
        push("x0", "x0 lies outside the feasible box".to_string());
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(ConfigErrors(issues))
    }
}

/// One record per loop counter `k`, describing the iterate `x^{k+1}` that the
/// loop produced and the parameters `μ_{k+1}`, `γ_{k+1}` it used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub mu: f64,
    pub gamma: f64,
    /// `f(x^{k+1})`
    pub objective: f64,
    /// `f̃(x^{k+1}, μ_{k+1})`
    pub smoothed_objective: f64,
    pub residual: f64,
    /// `‖x^{k+1} − x^k‖`
    pub step_norm: f64,
    /// Rejected step sizes in this iteration.
    pub backtracks: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualMet,
    Maxiter,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vector,
    /// Final loop counter (0-based).
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// `f(x⁰)`, not part of the trace.
    pub initial_objective: f64,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub fn final_objective(&self) -> f64 {
        self.trace.records.last().map_or(self.initial_objective, |r| r.objective)
    }
}
