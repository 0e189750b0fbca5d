//! SAPG, SPG and ISAPG.
//!
//! One loop serves all three methods. Iteration `k` (0-based) forms the
//! extrapolated point `yᵏ`, lowers the smoothing parameter to `μ_{k+1}`, and
//! takes a proximal gradient step on `f̃(·, μ_{k+1})` from `yᵏ`:
//!
//! * SAPG: `βₖ = (k−1)/(k+α−1)`, step scale found by backtracking;
//! * SPG: `βₖ = 0`, same backtracking;
//! * ISAPG: fixed step `γ = 1/L`, gradient perturbed by `εₖ`.
//!
//! The run stops once the loop counter passes `maxiter`, or as soon as both the
//! residual at `x^{k+1}` and `μ_{k+1}` are at most `eps`. The reported
//! iteration count is the final loop counter.

use std::fmt::Debug;
use std::time::Instant;

use log::warn;
use thiserror::Error;

use crate::linalg::Vector;
use crate::model::{
    validate, CompositeProblem, ConfigErrors, ResidualKind, SolveResult, SolveTrace, SolverConfig, StopReason,
    TraceRecord,
};
use crate::prox::{project_box, prox_unchecked, ProximablePart};
use crate::smoothing::{smoothed_abs, SmoothableLoss};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("backtracking gave up after {attempts} attempts (last gamma {gamma:e}); the loss gradient is not Lipschitz as declared")]
    Backtrack { attempts: usize, gamma: f64 },
    #[error("the fixed-step solver needs the loss smoothing constants, but `{0}` provides none")]
    MissingConstants(&'static str),
    #[error("lipschitz factor must be positive, got {0}")]
    BadLipschitz(f64),
    #[error("error oracle returned a vector of length {got} at iteration {k}, expected {expected}")]
    ErrorLength { k: usize, expected: usize, got: usize },
}

/// `μ_{k+1} = μ₀ / ((k+α−1) ln^σ(k+α−1))`.
pub fn mu_schedule(cfg: &SolverConfig, k: usize) -> f64 {
    let t = k as f64 + cfg.alpha - 1.0;
    cfg.mu0 / (t * t.ln().powf(cfg.sigma))
}

/// `yᵏ = xᵏ + βₖ(xᵏ − x^{k−1})` with `βₖ = (k−1)/(k+α−1)`, or `βₖ = 0` when
/// disabled. At `k = 0` the caller passes `x^{−1} = x⁰`, so `y⁰ = x⁰`.
pub fn extrapolate(x_k: &Vector, x_prev: &Vector, k: usize, alpha: f64, enabled: bool) -> Vector {
    if !enabled {
        return x_k.clone();
    }
    let beta = (k as f64 - 1.0) / (k as f64 + alpha - 1.0);
    x_k.axpy(beta, &x_k.sub(x_prev))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackOutcome {
    pub accepted_gamma: f64,
    pub candidate: Vector,
    /// Prox evaluations performed, at least 1.
    pub attempts: usize,
    /// `c̃(candidate, μ)`, already computed by the acceptance test.
    pub candidate_value: f64,
}

pub const DEFAULT_MAX_BACKTRACKS: usize = 100;

/// Shrinks `γ̂` from `gamma_start` by `eta` until the prox-gradient candidate
/// satisfies the quadratic upper bound
/// `c̃(x̂) ≤ c̃(y) + ⟨∇c̃(y), x̂ − y⟩ + ‖x̂ − y‖² / (2γ̂μ)`.
pub fn backtrack(
    loss: &dyn SmoothableLoss,
    reg: &ProximablePart,
    y: &Vector,
    mu: f64,
    gamma_start: f64,
    eta: f64,
) -> Result<BacktrackOutcome, SolveError> {
    let (value_y, grad_y) = loss.smooth_value_and_gradient(y, mu);
    backtrack_from(loss, reg, y, value_y, &grad_y, mu, gamma_start, eta, DEFAULT_MAX_BACKTRACKS)
}

#[allow(clippy::too_many_arguments)]
fn backtrack_from(
    loss: &dyn SmoothableLoss,
    reg: &ProximablePart,
    y: &Vector,
    value_y: f64,
    grad_y: &Vector,
    mu: f64,
    gamma_start: f64,
    eta: f64,
    max_attempts: usize,
) -> Result<BacktrackOutcome, SolveError> {
    let mut gamma = gamma_start;
    for attempt in 1..=max_attempts {
        let theta = gamma * mu;
        let candidate = prox_unchecked(reg, &y.axpy(-theta, grad_y), theta);
        let d = candidate.sub(y);
        let candidate_value = loss.smooth_value(&candidate, mu);
        let bound = value_y + grad_y.dot(&d) + d.norm_sq() / (2.0 * theta);
        // Allow for rounding in the two loss evaluations.
        let slack = 8.0 * f64::EPSILON * (value_y.abs() + candidate_value.abs());
        if candidate_value <= bound + slack {
            return Ok(BacktrackOutcome { accepted_gamma: gamma, candidate, attempts: attempt, candidate_value });
        }
        gamma *= eta;
    }
    Err(SolveError::Backtrack { attempts: max_attempts, gamma })
}

/// Stopping residual `‖x − prox_{ζg}(x − ζ∇c̃(x, μ))‖_∞`.
pub fn residual(prob: &CompositeProblem, x: &Vector, mu: f64, zeta: f64) -> f64 {
    residual_with(prob, x, mu, zeta, ResidualKind::ProxGradient)
}

pub fn residual_with(prob: &CompositeProblem, x: &Vector, mu: f64, zeta: f64, kind: ResidualKind) -> f64 {
    let grad = prob.loss().smooth_gradient(x, mu);
    let moved = match kind {
        ResidualKind::ProxGradient => prox_unchecked(prob.reg(), &x.axpy(-zeta, &grad), zeta),
        ResidualKind::SmoothedPenalty => {
            let lambda = prob.reg().lambda();
            let full = Vector::from_fn(x.len(), |i| {
                let dg = smoothed_abs(x[i], mu).map_or(0.0, |(_, d)| d);
                grad[i] + lambda * dg
            });
            project_box(prob.reg().bounds(), &x.axpy(-zeta, &full))
        }
    };
    x.sub(&moved).norm_inf()
}

/// Source of the gradient errors `εₖ` injected by ISAPG.
pub trait ErrorOracle: Send + Sync + Debug {
    fn error(&self, k: usize, n: usize) -> Vector;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoError;

impl ErrorOracle for NoError {
    fn error(&self, _k: usize, n: usize) -> Vector {
        Vector::zeros(n)
    }
}

/// `εₖ = δ · max(k, 1)^{−p} · u`.
#[derive(Debug, Clone)]
pub struct DecayingError {
    pub delta: f64,
    pub power: f64,
    pub direction: Vector,
}

impl ErrorOracle for DecayingError {
    fn error(&self, k: usize, _n: usize) -> Vector {
        let kk = k.max(1) as f64;
        self.direction.scale(self.delta * kk.powf(-self.power))
    }
}

/// `εₖ = δ · u` for every `k`.
#[derive(Debug, Clone)]
pub struct ConstantError {
    pub delta: f64,
    pub direction: Vector,
}

impl ErrorOracle for ConstantError {
    fn error(&self, _k: usize, _n: usize) -> Vector {
        self.direction.scale(self.delta)
    }
}

/// Partial sums of `Σ μ_{k+1}(k+α−1)‖εₖ‖ = Σ μ₀ ln^{−σ}(k+α−1)‖εₖ‖` over
/// dyadic blocks `[2^j − 1, 2^{j+1} − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub partial_sum: f64,
    pub block_sums: Vec<f64>,
    /// `false` when the last dyadic block contributes at least as much as the
    /// one before it, which a convergent series cannot sustain.
    pub hypothesis_plausible: bool,
}

pub fn error_summability(errs: &dyn ErrorOracle, cfg: &SolverConfig, n: usize, horizon: usize) -> SummabilityReport {
    let mut block_sums = Vec::new();
    let mut block = 0.0;
    let mut next_edge = 1;
    for k in 0..horizon {
        if k + 1 == next_edge * 2 {
            block_sums.push(block);
            block = 0.0;
            next_edge *= 2;
        }
        block += mu_schedule(cfg, k) * (k as f64 + cfg.alpha - 1.0) * errs.error(k, n).norm2();
    }
    block_sums.push(block);
    let partial_sum = block_sums.iter().sum();
    // the trailing block may be partial; judge on the last two complete ones
    let complete = &block_sums[..block_sums.len().saturating_sub(1)];
    let hypothesis_plausible = match complete {
        [.., prev, last] => last < prev || *last == 0.0,
        _ => true,
    };
    SummabilityReport { partial_sum, block_sums, hypothesis_plausible }
}

/// Which iteration to run.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Sapg,
    Spg,
    /// Fixed step `1/lipschitz`, gradient perturbed by `errors`.
    Isapg { lipschitz: f64, errors: &'a dyn ErrorOracle },
}

/// What an observer sees after each iteration.
#[derive(Debug)]
pub struct StepView<'a> {
    pub k: usize,
    /// `x^{k+1}`
    pub x_next: &'a Vector,
    /// `x^k`
    pub x_current: &'a Vector,
    pub record: &'a TraceRecord,
}

pub fn sapg_solve(prob: &CompositeProblem, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve(prob, cfg, Method::Sapg)
}

pub fn spg_solve(prob: &CompositeProblem, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve(prob, cfg, Method::Spg)
}

pub fn isapg_solve(
    prob: &CompositeProblem,
    cfg: &SolverConfig,
    lipschitz: f64,
    errs: &dyn ErrorOracle,
) -> Result<SolveResult, SolveError> {
    solve(prob, cfg, Method::Isapg { lipschitz, errors: errs })
}

pub fn solve(prob: &CompositeProblem, cfg: &SolverConfig, method: Method<'_>) -> Result<SolveResult, SolveError> {
    solve_observed(prob, cfg, method, &mut |_| {})
}

/// Projects an infeasible start onto the box (with a warning) and validates.
fn prepare(prob: &CompositeProblem, cfg: &SolverConfig) -> Result<Vector, SolveError> {
    let bounds = prob.reg().bounds();
    let mut x0 = cfg.x0.clone();
    if x0.len() == prob.dim() && !bounds.contains(&x0) {
        warn!("initial point lies outside the feasible box; projecting it");
        x0 = project_box(bounds, &x0);
    }
    let checked = SolverConfig { x0: x0.clone(), ..cfg.clone() };
    validate(&checked, prob)?;
    Ok(x0)
}

pub fn solve_observed(
    prob: &CompositeProblem,
    cfg: &SolverConfig,
    method: Method<'_>,
    observer: &mut dyn FnMut(&StepView<'_>),
) -> Result<SolveResult, SolveError> {
    let x0 = prepare(prob, cfg)?;
    let loss = prob.loss();
    let reg = prob.reg();
    let n = prob.dim();

    let (extrapolation, fixed) = match method {
        Method::Sapg => (true, None),
        Method::Spg => (false, None),
        Method::Isapg { lipschitz, errors } => {
            if loss.constants().is_none() {
                return Err(SolveError::MissingConstants(loss.name()));
            }
            if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                return Err(SolveError::BadLipschitz(lipschitz));
            }
            (true, Some((1.0 / lipschitz, errors)))
        }
    };

    let start = Instant::now();
    let initial_objective = prob.objective(&x0);
    let mut trace = SolveTrace { records: Vec::with_capacity(cfg.maxiter.min(4096) + 1) };
    let mut x_prev = x0.clone();
    let mut x = x0;
    let mut gamma = fixed.map_or(cfg.gamma0, |(g, _)| g);

    for k in 0..=cfg.maxiter {
        let y = extrapolate(&x, &x_prev, k, cfg.alpha, extrapolation);
        let mu = mu_schedule(cfg, k);

        let (x_next, backtracks) = match fixed {
            None => {
                let (value_y, grad_y) = loss.smooth_value_and_gradient(&y, mu);
                let out = backtrack_from(loss, reg, &y, value_y, &grad_y, mu, gamma, cfg.eta, cfg.max_backtracks)?;
                gamma = out.accepted_gamma;
                (out.candidate, out.attempts - 1)
            }
            Some((step, errors)) => {
                let mut grad = loss.smooth_gradient(&y, mu);
                let eps_k = errors.error(k, n);
                if eps_k.len() != n {
                    return Err(SolveError::ErrorLength { k, expected: n, got: eps_k.len() });
                }
                grad = grad.axpy(1.0, &eps_k);
                let theta = step * mu;
                (prox_unchecked(reg, &y.axpy(-theta, &grad), theta), 0)
            }
        };

        let (exact, smooth) = loss.exact_and_smooth(&x_next, mu);
        let g_val = reg.value(&x_next);
        let res = residual_with(prob, &x_next, mu, cfg.zeta, cfg.residual);
        let record = TraceRecord {
            k,
            mu,
            gamma,
            objective: exact + g_val,
            smoothed_objective: smooth + g_val,
            residual: res,
            step_norm: x_next.dist2(&x),
            backtracks,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        observer(&StepView { k, x_next: &x_next, x_current: &x, record: &record });
        trace.records.push(record);

        x_prev = std::mem::replace(&mut x, x_next);
        if res <= cfg.eps && mu <= cfg.eps {
            return Ok(SolveResult {
                x_final: x,
                iterations: k,
                stop_reason: StopReason::ResidualMet,
                initial_objective,
                trace,
            });
        }
    }

    Ok(SolveResult { x_final: x, iterations: cfg.maxiter, stop_reason: StopReason::Maxiter, initial_objective, trace })
}
